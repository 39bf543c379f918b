use serde::{Deserialize, Serialize};

use super::audit::{stability_audit, stability_bound, DatasetFamily, DEFAULT_RANDOM_PAIRS};
use super::EXACT_ENUMERATION_CAP;
use crate::error::{invalid, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::mechanisms::Mechanism;
use crate::problems::{population_risks, DataDistribution, DataPoint, Dataset, Problem};
use crate::rng::trial_rng;
use crate::stats::{pooled_stderr, MeanEstimate};

/// How the expectation over `Z ~ D^n` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConsistencyMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

/// Trials used when an exact request exceeds the enumeration cap.
pub const FALLBACK_TRIALS: usize = 2000;

/// A value with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl From<MeanEstimate> for Estimate {
    fn from(m: MeanEstimate) -> Self {
        Self {
            value: m.mean,
            stderr: m.stderr,
        }
    }
}

/// Decomposition of a mechanism's excess risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub mode: ConsistencyMode,
    /// Set when an exact request fell back to Monte Carlo.
    pub note: Option<String>,
    pub n: usize,
    /// `R* = min_h R(h)` over the space.
    pub optimal_risk: f64,
    /// `E_Z E_{h~A(Z)} R(h) - R*`.
    pub excess_risk: Estimate,
    /// `E_Z E_{h~A(Z)} [R(h) - R̂(h, Z)]`.
    pub generalization_gap: Estimate,
    /// `E_Z [E_{h~A(Z)} R̂(h, Z) - min_h R̂(h, Z)]`.
    pub aerm_gap: Estimate,
    /// Audited uniform stability over neighbouring pairs (exact laws).
    pub stability_gap: f64,
    /// `e^eps - 1` at the mechanism's claimed epsilon.
    pub stability_bound: f64,
    /// Allowed numerical slack for the two inequalities below.
    pub slack: f64,
    /// `excess <= stability + aerm + slack`.
    pub decomposition_holds: bool,
    /// `|generalization| <= stability + slack`.
    pub generalization_holds: bool,
}

struct PerDataset {
    excess: f64,
    generalization: f64,
    aerm: f64,
}

fn evaluate(
    mechanism: &dyn Mechanism,
    problem: &dyn Problem,
    risks: &[f64],
    optimal: f64,
    data: &Dataset,
) -> Result<PerDataset> {
    let law = mechanism.law(data)?;
    let emp = problem.empirical_risks(mechanism.space(), data);
    let min_emp = emp.iter().copied().fold(f64::INFINITY, f64::min);
    let er = law.expectation(risks);
    let ee = law.expectation(&emp);
    Ok(PerDataset {
        excess: er - optimal,
        generalization: er - ee,
        aerm: ee - min_emp,
    })
}

/// Measures excess risk, generalization gap, AERM gap and stability of a
/// finite-space mechanism under a distribution with enumerable support.
pub fn consistency_suite(
    mechanism: &dyn Mechanism,
    problem: &dyn Problem,
    distribution: &DataDistribution,
    n: usize,
    mode: ConsistencyMode,
    exec: Execution,
) -> Result<GapReport> {
    let support = distribution
        .support()
        .ok_or_else(|| invalid("consistency suite needs a distribution with enumerable support"))?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let risks = population_risks(problem, distribution, mechanism.space())?;
    let optimal = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let universe: Vec<DataPoint> = support.iter().map(|(z, _)| z.clone()).collect();
    let atoms = (support.len() as f64).powi(n as i32);

    let (mode, note) = match mode {
        ConsistencyMode::Exact if atoms > EXACT_ENUMERATION_CAP as f64 => (
            ConsistencyMode::MonteCarlo {
                trials: FALLBACK_TRIALS,
                seed: 0,
            },
            Some(format!(
                "{atoms:.3e} datasets exceed the exact cap of {EXACT_ENUMERATION_CAP}; switched to Monte Carlo with {FALLBACK_TRIALS} trials"
            )),
        ),
        m => (m, None),
    };

    let eps = mechanism.budget(n).epsilon;
    let (excess, generalization, aerm, family, slack_of): (Estimate, Estimate, Estimate, DatasetFamily, f64) = match mode {
        ConsistencyMode::Exact => {
            let family = DatasetFamily::exhaustive(&universe, n)?;
            let s = support.len();
            let per = try_map_indexed(family.datasets.len(), exec, |i| {
                let mut weight = 1.0;
                let mut k = i;
                for _ in 0..n {
                    weight *= support[k % s].1;
                    k /= s;
                }
                evaluate(mechanism, problem, &risks, optimal, &family.datasets[i]).map(|r| (weight, r))
            })?;
            let sum = |f: &dyn Fn(&PerDataset) -> f64| -> Estimate {
                Estimate {
                    value: per.iter().map(|(w, r)| w * f(r)).sum(),
                    stderr: 0.0,
                }
            };
            let e = sum(&|r| r.excess);
            let g = sum(&|r| r.generalization);
            let a = sum(&|r| r.aerm);
            (e, g, a, family, 1e-9)
        }
        ConsistencyMode::MonteCarlo { trials, seed } => {
            if trials < 2 {
                return Err(invalid("Monte Carlo mode needs at least 2 trials"));
            }
            let per = try_map_indexed(trials, exec, |i| {
                let mut rng = trial_rng(seed, i as u64);
                let z = distribution.sample_dataset(n, &mut rng)?;
                evaluate(mechanism, problem, &risks, optimal, &z)
            })?;
            let col = |f: &dyn Fn(&PerDataset) -> f64| -> Estimate {
                MeanEstimate::from_samples(&per.iter().map(f).collect::<Vec<_>>()).into()
            };
            let e = col(&|r| r.excess);
            let g = col(&|r| r.generalization);
            let a = col(&|r| r.aerm);
            let mut rng = trial_rng(seed, trials as u64);
            let bases = (0..DEFAULT_RANDOM_PAIRS)
                .map(|_| distribution.sample_dataset(n, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let family = DatasetFamily::all_replacements(bases, &universe);
            (e, g, a, family, 4.0)
        }
    };

    let stability = stability_audit(mechanism, problem, &family, &universe, exec)?.value;
    let (decomposition_slack, generalization_slack) = match mode {
        ConsistencyMode::Exact => (slack_of, slack_of),
        ConsistencyMode::MonteCarlo { .. } => (
            slack_of * pooled_stderr(excess.stderr, aerm.stderr),
            slack_of * generalization.stderr,
        ),
    };
    Ok(GapReport {
        mode,
        note,
        n,
        optimal_risk: optimal,
        decomposition_holds: excess.value <= stability + aerm.value + decomposition_slack,
        generalization_holds: generalization.value.abs() <= stability + generalization_slack,
        excess_risk: excess,
        generalization_gap: generalization,
        aerm_gap: aerm,
        stability_gap: stability,
        stability_bound: stability_bound(eps),
        slack: decomposition_slack,
    })
}
