use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::mechanisms::{Mechanism, MechanismDistribution};
use crate::problems::{DataPoint, Dataset, Problem};
use crate::rng::rng_from_seed;

/// Cap on exhaustively enumerated datasets.
pub const EXHAUSTIVE_CAP: u64 = 1_000_000;

/// Default number of pairs for randomized probing.
pub const DEFAULT_RANDOM_PAIRS: usize = 200;

/// Datasets and neighbouring pairs among them (Hamming distance one).
#[derive(Debug, Clone)]
pub struct DatasetFamily {
    pub datasets: Vec<Dataset>,
    pub pairs: Vec<(usize, usize)>,
    /// True when every neighbouring pair over the universe is present.
    pub exhaustive: bool,
}

impl DatasetFamily {
    /// All `|U|^n` datasets over `universe` and every unordered neighbouring
    /// pair among them.
    pub fn exhaustive(universe: &[DataPoint], n: usize) -> Result<Self> {
        let u = universe.len();
        if u == 0 || n == 0 {
            return Err(invalid("need a nonempty universe and n >= 1"));
        }
        let count = (u as f64).powi(n as i32);
        if count > EXHAUSTIVE_CAP as f64 {
            return Err(Error::SizeLimit {
                what: "enumerated datasets".into(),
                requested: count,
                cap: EXHAUSTIVE_CAP as f64,
            });
        }
        let count = count as usize;
        let digits = |mut i: usize| {
            let mut d = vec![0; n];
            for slot in d.iter_mut().rev() {
                *slot = i % u;
                i /= u;
            }
            d
        };
        let datasets = (0..count)
            .map(|i| Dataset::new(digits(i).into_iter().map(|k| universe[k].clone()).collect()))
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::new();
        for i in 0..count {
            let d = digits(i);
            let mut place = 1;
            for pos in (0..n).rev() {
                for v in d[pos] + 1..u {
                    pairs.push((i, i + (v - d[pos]) * place));
                }
                place *= u;
            }
        }
        Ok(Self {
            datasets,
            pairs,
            exhaustive: true,
        })
    }

    /// `pairs` random neighbouring pairs: a uniform dataset over `universe`
    /// and a copy with one uniform position replaced by a different point.
    pub fn random(universe: &[DataPoint], n: usize, pairs: usize, seed: u64) -> Result<Self> {
        if universe.len() < 2 || n == 0 {
            return Err(invalid("random pairs need at least two universe points and n >= 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut datasets = Vec::with_capacity(2 * pairs);
        let mut out = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let z = Dataset::new(
                (0..n)
                    .map(|_| universe[rng.random_range(0..universe.len())].clone())
                    .collect(),
            )?;
            let pos = rng.random_range(0..n);
            let current = &z.points()[pos];
            let others: Vec<&DataPoint> = universe.iter().filter(|p| *p != current).collect();
            let replacement = others[rng.random_range(0..others.len())].clone();
            let z2 = z.replaced(pos, replacement);
            out.push((datasets.len(), datasets.len() + 1));
            datasets.push(z);
            datasets.push(z2);
        }
        Ok(Self {
            datasets,
            pairs: out,
            exhaustive: false,
        })
    }

    /// Pairs built from given datasets by replacing every position with
    /// every point of `universe` that differs from it.
    pub fn all_replacements(bases: Vec<Dataset>, universe: &[DataPoint]) -> Self {
        let mut datasets = Vec::new();
        let mut pairs = Vec::new();
        for z in bases {
            let base = datasets.len();
            datasets.push(z.clone());
            for pos in 0..z.n() {
                for p in universe {
                    if *p != z.points()[pos] {
                        datasets.push(z.replaced(pos, p.clone()));
                        pairs.push((base, datasets.len() - 1));
                    }
                }
            }
        }
        Self {
            datasets,
            pairs,
            exhaustive: false,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Where an audit attained its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pair: (usize, usize),
    /// Hypothesis id, or the probe index for stability audits.
    pub index: usize,
    pub value: f64,
}

/// Result of a privacy audit over neighbouring pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// `max |log p(h) - log p'(h)|` over pairs and hypotheses; infinite when
    /// some hypothesis has mass on one side only.
    pub max_log_ratio: f64,
    /// `max sum_h max(0, p(h) - e^eps p'(h))` over ordered pairs.
    pub realized_delta_at_epsilon: f64,
    pub epsilon: f64,
    pub witness: Option<Witness>,
    pub delta_witness: Option<Witness>,
    pub pairs_probed: usize,
}

fn log_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// `sum_h max(0, p(h) - e^eps q(h))`: the largest violation over events.
pub fn hockey_stick(p: &MechanismDistribution, q: &MechanismDistribution, epsilon: f64) -> f64 {
    let e = epsilon.exp();
    p.probabilities()
        .iter()
        .zip(q.probabilities())
        .map(|(a, b)| (a - e * b).max(0.0))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn exact_laws(mechanism: &dyn Mechanism, family: &DatasetFamily, exec: Execution) -> Result<Vec<MechanismDistribution>> {
    let laws = try_map_indexed(family.datasets.len(), exec, |i| mechanism.law(&family.datasets[i]))?;
    if laws.iter().any(|l| !l.is_exact()) {
        return Err(invalid(format!("{} has no exact law to audit", mechanism.name())));
    }
    Ok(laws)
}

/// Audits the privacy loss at `epsilon` over every pair of `family`.
pub fn audit_dp(
    mechanism: &dyn Mechanism,
    family: &DatasetFamily,
    epsilon: f64,
    exec: Execution,
) -> Result<AuditReport> {
    let laws = exact_laws(mechanism, family, exec)?;
    let per_pair = crate::exec::map_indexed(family.pairs.len(), exec, |k| {
        let (i, j) = family.pairs[k];
        let (p, q) = (&laws[i], &laws[j]);
        let mut best = (0.0f64, 0usize);
        for (h, (a, b)) in p.log_probabilities().iter().zip(q.log_probabilities()).enumerate() {
            let r = log_ratio(*a, *b);
            if r > best.0 {
                best = (r, h);
            }
        }
        let d_fwd = hockey_stick(p, q, epsilon);
        let d_bwd = hockey_stick(q, p, epsilon);
        let d = if d_fwd >= d_bwd { (d_fwd, (i, j)) } else { (d_bwd, (j, i)) };
        (best, d)
    });
    let mut report = AuditReport {
        max_log_ratio: 0.0,
        realized_delta_at_epsilon: 0.0,
        epsilon,
        witness: None,
        delta_witness: None,
        pairs_probed: family.pairs.len(),
    };
    for (k, ((r, h), (d, dir))) in per_pair.into_iter().enumerate() {
        if report.witness.is_none() || r > report.max_log_ratio {
            report.max_log_ratio = r;
            report.witness = Some(Witness {
                pair: family.pairs[k],
                index: h,
                value: r,
            });
        }
        if report.delta_witness.is_none() || d > report.realized_delta_at_epsilon {
            report.realized_delta_at_epsilon = d;
            report.delta_witness = Some(Witness {
                pair: dir,
                index: 0,
                value: d,
            });
        }
    }
    Ok(report)
}

/// Pure-DP audit at the mechanism's claimed epsilon for the family's
/// sample size.
pub fn audit_pure_dp(mechanism: &dyn Mechanism, family: &DatasetFamily, exec: Execution) -> Result<AuditReport> {
    let n = family.datasets.first().map(|z| z.n()).unwrap_or(1);
    let eps = mechanism.budget(n).epsilon;
    audit_dp(mechanism, family, if eps.is_finite() { eps } else { 0.0 }, exec)
}

/// Approximate-DP audit at a given epsilon.
pub fn audit_approx_dp(
    mechanism: &dyn Mechanism,
    family: &DatasetFamily,
    epsilon: f64,
    exec: Execution,
) -> Result<AuditReport> {
    audit_dp(mechanism, family, epsilon, exec)
}

/// Largest change in expected loss at a probe point over neighbouring pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub value: f64,
    pub witness: Option<Witness>,
    pub pairs_probed: usize,
}

/// `max |E_{h~A(Z)} l(h, z) - E_{h~A(Z')} l(h, z)|` over pairs and probes.
pub fn stability_audit(
    mechanism: &dyn Mechanism,
    problem: &dyn Problem,
    family: &DatasetFamily,
    probes: &[DataPoint],
    exec: Execution,
) -> Result<StabilityReport> {
    if probes.is_empty() {
        return Err(invalid("stability audit needs at least one probe point"));
    }
    let laws = exact_laws(mechanism, family, exec)?;
    let space = mechanism.space();
    let losses: Vec<Vec<f64>> = probes
        .iter()
        .map(|z| space.hypotheses().iter().map(|h| problem.loss(&h.payload, z)).collect())
        .collect();
    // expected loss at every probe under every law
    let expected: Vec<Vec<f64>> = laws
        .iter()
        .map(|l| losses.iter().map(|row| l.expectation(row)).collect())
        .collect();
    let mut report = StabilityReport {
        value: 0.0,
        witness: None,
        pairs_probed: family.pairs.len(),
    };
    for &(i, j) in &family.pairs {
        for (k, (a, b)) in expected[i].iter().zip(&expected[j]).enumerate() {
            let d = (a - b).abs();
            if report.witness.is_none() || d > report.value {
                report.value = d;
                report.witness = Some(Witness {
                    pair: (i, j),
                    index: k,
                    value: d,
                });
            }
        }
    }
    Ok(report)
}

/// `e^eps - 1`, the stability implied by `eps`-DP.
pub fn stability_bound(epsilon: f64) -> f64 {
    epsilon.exp_m1()
}

/// `2 eps`, valid when `eps <= 1`.
pub fn stability_bound_small(epsilon: f64) -> Option<f64> {
    (epsilon <= 1.0).then_some(2.0 * epsilon)
}
