use std::sync::Arc;

use itertools::Itertools;
use rand::seq::index;
use rand::RngCore;

use super::{Mechanism, MechanismDistribution, PrivacyBudget, SharedMechanism};
use crate::error::{invalid, Result};
use crate::hypothesis_space::{FiniteHypothesisSpace, Payload};
use crate::problems::Dataset;
use crate::rng::{rng_from_seed, split_seed};

/// Pure-DP amplification by subsampling a fraction `gamma`:
/// `(tight, relaxed)` with
/// `tight = ln(1 + gamma (e^eps - 1)) - ln(1 + gamma (e^-eps - 1))` and
/// `relaxed = 2 gamma (e^eps - e^-eps)`.
pub fn amplify_pure(epsilon: f64, gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(invalid("epsilon must be nonnegative"));
    }
    let tight = (gamma * epsilon.exp_m1()).ln_1p() - (gamma * (-epsilon).exp_m1()).ln_1p();
    let relaxed = 2.0 * gamma * (epsilon.exp() - (-epsilon).exp());
    Ok((tight, relaxed))
}

/// Approximate-DP amplification:
/// `eps' = ln(1 + gamma e^eps (e^eps - 1))`, `delta' = gamma e^eps delta`.
pub fn amplify_approx(epsilon: f64, delta: f64, gamma: f64) -> Result<PrivacyBudget> {
    check_gamma(gamma)?;
    let b = PrivacyBudget::new(epsilon, delta)?;
    let e = b.epsilon.exp();
    Ok(PrivacyBudget {
        epsilon: (gamma * e * b.epsilon.exp_m1()).ln_1p(),
        delta: gamma * e * b.delta,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(invalid("gamma must lie in (0, 1]"))
    }
}

/// How many points a subsampling wrapper keeps out of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetSize {
    Fixed(usize),
    /// `max(1, floor(sqrt(n)))`.
    Sqrt,
    /// `ceil(n^(1 - r))`.
    Power(f64),
}

impl SubsetSize {
    pub fn size(&self, n: usize) -> Result<usize> {
        let m = match *self {
            Self::Fixed(m) => m,
            Self::Sqrt => ((n as f64).sqrt().floor() as usize).max(1),
            Self::Power(r) => {
                if !(0.0..=1.0).contains(&r) {
                    return Err(invalid("subsampling exponent must lie in [0, 1]"));
                }
                // guard against n^(1-r) landing a hair above an integer
                ((n as f64).powf(1.0 - r) - 1e-9).ceil().max(1.0) as usize
            }
        };
        if m == 0 || m > n {
            return Err(invalid(format!("subset size {m} must lie in 1..={n}")));
        }
        Ok(m)
    }
}

/// Default cap on `C(n, m)` for the exact mixture law.
pub const DEFAULT_SUBSET_CAP: u64 = 100_000;

/// Runs `base` on a uniformly random subset of `m` points drawn without
/// replacement, keeping the points in their original order.
#[derive(Debug, Clone)]
pub struct Subsampled {
    base: SharedMechanism,
    size: SubsetSize,
    cap: u64,
    mc_samples: usize,
}

impl Subsampled {
    pub fn new(base: SharedMechanism, size: SubsetSize) -> Self {
        Self {
            base,
            size,
            cap: DEFAULT_SUBSET_CAP,
            mc_samples: 4000,
        }
    }

    /// Past `cap` subsets the law is estimated from `mc_samples` draws.
    pub fn with_cap(mut self, cap: u64, mc_samples: usize) -> Self {
        self.cap = cap;
        self.mc_samples = mc_samples.max(1);
        self
    }

    pub fn base(&self) -> &SharedMechanism {
        &self.base
    }

    pub fn subset_size(&self, n: usize) -> Result<usize> {
        self.size.size(n)
    }
}

impl Mechanism for Subsampled {
    fn name(&self) -> String {
        format!("subsampled({})", self.base.name())
    }

    fn budget(&self, n: usize) -> PrivacyBudget {
        let Ok(m) = self.size.size(n) else {
            return PrivacyBudget::none();
        };
        let gamma = m as f64 / n as f64;
        let b = self.base.budget(m);
        if !b.epsilon.is_finite() {
            // a replaced point enters the subsample with probability m/n
            return PrivacyBudget {
                epsilon: 0.0,
                delta: gamma,
            };
        }
        if b.is_pure() {
            let (tight, _) = amplify_pure(b.epsilon, gamma).expect("valid gamma");
            PrivacyBudget::pure(tight)
        } else {
            amplify_approx(b.epsilon, b.delta, gamma).expect("valid budget")
        }
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        self.base.space()
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let n = data.n();
        let m = self.size.size(n)?;
        if m == n {
            return self.base.law(data);
        }
        let count = crate::problems::binomial(n, m);
        if count <= self.cap as f64 {
            let laws = (0..n)
                .combinations(m)
                .map(|idx| self.base.law(&data.subset(&idx)?))
                .collect::<Result<Vec<_>>>()?;
            let w = vec![1.0 / laws.len() as f64; laws.len()];
            return MechanismDistribution::mixture(&laws, &w);
        }
        let mut counts = vec![0u64; self.space().len()];
        for t in 0..self.mc_samples {
            let mut rng = rng_from_seed(split_seed(0x5eed_5eed, t as u64));
            counts[self.sample_with(data, &mut rng)?] += 1;
        }
        MechanismDistribution::from_counts(&counts)
    }

    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        let n = data.n();
        let m = self.size.size(n)?;
        let mut idx = index::sample(rng, n, m).into_vec();
        idx.sort_unstable();
        self.base.sample_with(&data.subset(&idx)?, rng)
    }
}

/// With probability `delta` publishes the label (or `x > 1/2` bit) of the
/// first data point as one of two extra hypotheses; otherwise runs `base`.
///
/// If `base` is `epsilon`-DP the mixture is `(epsilon, delta)`-DP, with the
/// additive slack exactly `delta` on pairs that differ in the first point's
/// bit.
#[derive(Debug, Clone)]
pub struct BitRevealingMixture {
    base: SharedMechanism,
    delta: f64,
    space: Arc<FiniteHypothesisSpace>,
}

impl BitRevealingMixture {
    pub fn new(base: SharedMechanism, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta must lie in [0, 1)"));
        }
        let tags = vec![Payload::Subset(vec![0]), Payload::Subset(vec![1])];
        let space = Arc::new(base.space().extended(tags)?);
        Ok(Self { base, delta, space })
    }

    /// Ids of the two reveal hypotheses (bit 0, bit 1). They are tags, not
    /// members of the base problem's hypothesis class.
    pub fn reveal_ids(&self) -> [usize; 2] {
        let k = self.base.space().len();
        [k, k + 1]
    }

    fn bit(data: &Dataset) -> usize {
        let z = &data.points()[0];
        let b = z.label.unwrap_or(if z.x0() > 0.5 { 1.0 } else { 0.0 });
        (b > 0.5) as usize
    }
}

impl Mechanism for BitRevealingMixture {
    fn name(&self) -> String {
        format!("bit_reveal({})", self.base.name())
    }

    fn budget(&self, n: usize) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.base.budget(n).epsilon,
            delta: self.delta,
        }
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        &self.space
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let base = self.base.law(data)?;
        let mut p: Vec<f64> = base.probabilities().iter().map(|q| (1.0 - self.delta) * q).collect();
        p.extend([0.0, 0.0]);
        p[self.reveal_ids()[Self::bit(data)]] = self.delta;
        MechanismDistribution::from_probabilities(p, base.is_exact())
    }

    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        use rand::Rng;
        if rng.random::<f64>() < self.delta {
            Ok(self.reveal_ids()[Self::bit(data)])
        } else {
            self.base.sample_with(data, rng)
        }
    }
}
