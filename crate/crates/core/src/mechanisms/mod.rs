//! Private learners over finite hypothesis spaces, their exact output laws,
//! and privacy accounting.

mod amplification;
mod boosting;
mod composition;
mod laplace;
mod sampler;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypothesis_space::FiniteHypothesisSpace;
use crate::problems::{erm, objectives, Dataset, SharedProblem};
use crate::rng::rng_from_seed;
use crate::stats::log_sum_exp;

pub use amplification::{
    amplify_approx, amplify_pure, BitRevealingMixture, SubsetSize, Subsampled, DEFAULT_SUBSET_CAP,
};
pub use boosting::{boost_parts, BoostHighConfidence, BoostRun};
pub use composition::TwoStageSubsetSelection;
pub use laplace::{laplace_inverse_cdf, LaplaceErmMean};
pub use sampler::{Chain, MetropolisSampler};

/// An `(epsilon, delta)` privacy guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(invalid("epsilon must be nonnegative"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta must lie in [0, 1)"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Self {
        Self {
            epsilon,
            delta: 0.0,
        }
    }

    /// No privacy at all.
    pub fn none() -> Self {
        Self::pure(f64::INFINITY)
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

/// Privacy level as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonSchedule {
    Constant(f64),
    /// `scale * n^(-exponent)`.
    Power { scale: f64, exponent: f64 },
}

impl EpsilonSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Self::Constant(e) => e,
            Self::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant(e) => e.is_finite() && e > 0.0,
            Self::Power { scale, exponent } => {
                scale.is_finite() && scale > 0.0 && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("epsilon must be positive and finite"))
        }
    }
}

impl From<f64> for EpsilonSchedule {
    fn from(e: f64) -> Self {
        Self::Constant(e)
    }
}

/// An explicit probability mass function over a finite hypothesis space.
///
/// `exact` is false when the law was estimated by simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismDistribution {
    probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
    exact: bool,
}

impl MechanismDistribution {
    /// Normalizes unnormalized log masses; `-inf` entries get zero mass.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(invalid("a law needs at least one hypothesis"));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::Evaluation("non-finite log weight".into()));
        }
        let norm = log_sum_exp(log_weights);
        if !norm.is_finite() {
            return Err(Error::Evaluation("every hypothesis has zero mass".into()));
        }
        let log_probabilities: Vec<f64> = log_weights.iter().map(|w| w - norm).collect();
        let probabilities = log_probabilities.iter().map(|l| l.exp()).collect();
        Ok(Self {
            probabilities,
            log_probabilities,
            exact: true,
        })
    }

    /// From nonnegative masses summing to one (within `1e-9`); the input is
    /// renormalized.
    pub fn from_probabilities(probabilities: Vec<f64>, exact: bool) -> Result<Self> {
        if probabilities.is_empty() || probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("masses must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("masses sum to {total}, not 1")));
        }
        let probabilities: Vec<f64> = probabilities.iter().map(|p| p / total).collect();
        let log_probabilities = probabilities.iter().map(|p| p.ln()).collect();
        Ok(Self {
            probabilities,
            log_probabilities,
            exact,
        })
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut p = vec![0.0; len];
        p[index] = 1.0;
        Self::from_probabilities(p, true).expect("valid point mass")
    }

    /// Counting-measure-free uniform law.
    pub fn uniform(len: usize) -> Self {
        Self::from_log_weights(&vec![0.0; len]).expect("nonempty")
    }

    /// `sum_k w_k law_k` for equal-length laws and weights summing to one.
    pub fn mixture(components: &[MechanismDistribution], weights: &[f64]) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(invalid("a mixture needs at least one component"));
        };
        let len = first.len();
        if components.iter().any(|c| c.len() != len) || components.len() != weights.len() {
            return Err(invalid("mixture components must have equal lengths"));
        }
        let mut p = vec![0.0; len];
        for (c, w) in components.iter().zip(weights) {
            for (acc, q) in p.iter_mut().zip(&c.probabilities) {
                *acc += w * q;
            }
        }
        let exact = components.iter().all(|c| c.exact);
        Self::from_probabilities(p, exact)
    }

    /// Empirical law of sampled indices.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(invalid("no samples"));
        }
        Self::from_probabilities(counts.iter().map(|&c| c as f64 / total as f64).collect(), false)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_probabilities(&self) -> &[f64] {
        &self.log_probabilities
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `E_{h ~ law} f(h)` for per-hypothesis values.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "one value per hypothesis");
        self.probabilities
            .iter()
            .zip(values)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Inverse-CDF draw.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }
}

/// A randomized learner `A : Z^n -> H` over a finite hypothesis space.
pub trait Mechanism: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Claimed guarantee at sample size `n`.
    fn budget(&self, n: usize) -> PrivacyBudget;

    fn space(&self) -> &FiniteHypothesisSpace;

    /// The output law on `data`.
    fn law(&self, data: &Dataset) -> Result<MechanismDistribution>;

    /// Draws a hypothesis id using `rng`.
    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize>;

    fn sample(&self, data: &Dataset, seed: u64) -> Result<usize> {
        self.sample_with(data, &mut rng_from_seed(seed))
    }
}

pub type SharedMechanism = Arc<dyn Mechanism>;

/// Log masses of the exponential mechanism:
/// `log_base(h) + epsilon / (2 sensitivity) * utility(h)`.
pub fn exponential_log_weights(
    utilities: &[f64],
    log_base: &[f64],
    epsilon: f64,
    sensitivity: f64,
) -> Result<Vec<f64>> {
    if utilities.len() != log_base.len() {
        return Err(invalid("one utility per hypothesis"));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) || sensitivity.is_nan() || sensitivity <= 0.0 {
        return Err(invalid("need finite epsilon >= 0 and positive sensitivity"));
    }
    if let Some(i) = utilities.iter().position(|u| !u.is_finite()) {
        return Err(Error::Evaluation(format!("utility of hypothesis {i} is not finite")));
    }
    let scale = epsilon / (2.0 * sensitivity);
    Ok(utilities.iter().zip(log_base).map(|(u, b)| b + scale * u).collect())
}

pub fn exponential_law(
    utilities: &[f64],
    log_base: &[f64],
    epsilon: f64,
    sensitivity: f64,
) -> Result<MechanismDistribution> {
    MechanismDistribution::from_log_weights(&exponential_log_weights(
        utilities,
        log_base,
        epsilon,
        sensitivity,
    )?)
}

/// Gumbel-max draw from unnormalized log weights.
pub fn gumbel_max<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (i, &w) in log_weights.iter().enumerate() {
        if w == f64::NEG_INFINITY {
            continue;
        }
        let u: f64 = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        let key = w - (-u.ln()).ln();
        if key > best_key {
            best_key = key;
            best = i;
        }
    }
    best
}

/// Sensitivity of `-F(Z, h)` under losses in `[0, 1]`.
pub fn objective_sensitivity(n: usize) -> f64 {
    2.0 / n as f64
}

/// The exponential mechanism with utility `-F(Z, h)`:
/// `P(h) ∝ mu(h) exp(-(epsilon n / 4) F(Z, h))`.
#[derive(Debug, Clone)]
pub struct ExponentialMechanism {
    problem: SharedProblem,
    space: Arc<FiniteHypothesisSpace>,
    epsilon: EpsilonSchedule,
}

impl ExponentialMechanism {
    pub fn new(
        problem: SharedProblem,
        space: Arc<FiniteHypothesisSpace>,
        epsilon: impl Into<EpsilonSchedule>,
    ) -> Result<Self> {
        let epsilon = epsilon.into();
        epsilon.validate()?;
        Ok(Self {
            problem,
            space,
            epsilon,
        })
    }

    pub fn problem(&self) -> &SharedProblem {
        &self.problem
    }

    pub fn epsilon_at(&self, n: usize) -> f64 {
        self.epsilon.at(n)
    }

    /// Unnormalized log masses on `data`.
    pub fn log_weights(&self, data: &Dataset) -> Result<Vec<f64>> {
        let f = objectives(self.problem.as_ref(), &self.space, data);
        let utilities: Vec<f64> = f.iter().map(|v| -v).collect();
        exponential_log_weights(
            &utilities,
            self.space.log_weights(),
            self.epsilon.at(data.n()),
            objective_sensitivity(data.n()),
        )
    }
}

impl Mechanism for ExponentialMechanism {
    fn name(&self) -> String {
        "exponential".into()
    }

    fn budget(&self, n: usize) -> PrivacyBudget {
        PrivacyBudget::pure(self.epsilon.at(n))
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        &self.space
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        MechanismDistribution::from_log_weights(&self.log_weights(data)?)
    }

    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(gumbel_max(&self.log_weights(data)?, rng))
    }
}

/// A mechanism whose law does not depend on its input.
#[derive(Debug, Clone)]
pub struct FixedLaw {
    space: Arc<FiniteHypothesisSpace>,
    law: MechanismDistribution,
}

impl FixedLaw {
    pub fn new(space: Arc<FiniteHypothesisSpace>, law: MechanismDistribution) -> Result<Self> {
        if law.len() != space.len() {
            return Err(invalid("law and space differ in size"));
        }
        Ok(Self { space, law })
    }

    /// Always outputs hypothesis `id`.
    pub fn constant(space: Arc<FiniteHypothesisSpace>, id: usize) -> Result<Self> {
        if id >= space.len() {
            return Err(invalid("hypothesis id out of range"));
        }
        let law = MechanismDistribution::point_mass(space.len(), id);
        Self::new(space, law)
    }
}

impl Mechanism for FixedLaw {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn budget(&self, _n: usize) -> PrivacyBudget {
        PrivacyBudget::pure(0.0)
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        &self.space
    }

    fn law(&self, _data: &Dataset) -> Result<MechanismDistribution> {
        Ok(self.law.clone())
    }

    fn sample_with(&self, _data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.law.sample_index(rng))
    }
}

/// Deterministic empirical risk minimization (lowest id on ties).
#[derive(Debug, Clone)]
pub struct ErmMechanism {
    problem: SharedProblem,
    space: Arc<FiniteHypothesisSpace>,
}

impl ErmMechanism {
    pub fn new(problem: SharedProblem, space: Arc<FiniteHypothesisSpace>) -> Self {
        Self { problem, space }
    }
}

impl Mechanism for ErmMechanism {
    fn name(&self) -> String {
        "erm".into()
    }

    fn budget(&self, _n: usize) -> PrivacyBudget {
        PrivacyBudget::none()
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        &self.space
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let id = erm(self.problem.as_ref(), &self.space, data);
        Ok(MechanismDistribution::point_mass(self.space.len(), id))
    }

    fn sample_with(&self, data: &Dataset, _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(erm(self.problem.as_ref(), &self.space, data))
    }
}
