use std::sync::Arc;

use dperm_core::analysis::{
    aerm_bound, aerm_gap, audit_dp, boost_experiment, consistency_suite, counterexample_experiment,
    phase_transition_experiment, rates_experiment, stability_audit, stability_bound,
    utility_tail_check, AuditReport, BoostConfig, ConsistencyMode, DatasetFamily, PhaseConfig,
    RatesConfig, ResultRow, Witness, COUNTEREXAMPLE_THRESHOLD,
};
use dperm_core::hypothesis_space::{discretize_box, estimate_sublevel_condition, GridSpec};
use dperm_core::mechanisms::{
    BitRevealingMixture, ErmMechanism, ExponentialMechanism, FixedLaw, MetropolisSampler, SharedMechanism, SubsetSize,
    Subsampled,
};
use dperm_core::problems::{
    objectives, BestSubsetRegression, DataDistribution, DataPoint, Dataset, FiniteSupportEstimation,
    LabelKind, LinearLogistic, PthPowerMean, SharedProblem, SparseSpace, ThresholdClassification,
};
use dperm_core::rng::trial_rng;
use dperm_core::stats::{pooled_stderr, MeanEstimate};
use dperm_core::exec::try_map_indexed;
use dperm_core::{Execution, FiniteHypothesisSpace, Mechanism};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{invalid, Result};

/// Rows of one run plus material for the JSON summary.
#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub witnesses: Vec<Value>,
    pub notes: Vec<String>,
}

/// Checked value: `pass` is decided by the caller.
struct Measure {
    value: f64,
    stderr: f64,
    bound: f64,
    pass: bool,
}

impl Measure {
    fn upper(value: f64, bound: f64, tol: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            bound,
            pass: value <= bound + tol,
        }
    }

    /// Reported but not asserted.
    fn info(value: f64, stderr: f64) -> Self {
        Self {
            value,
            stderr,
            bound: f64::NAN,
            pass: true,
        }
    }
}

struct Rows<'a> {
    cfg: &'a RunConfig,
    mechanism: String,
    problem: String,
    out: Outcome,
}

impl<'a> Rows<'a> {
    fn new(cfg: &'a RunConfig, mechanism: impl Into<String>, problem: impl Into<String>) -> Self {
        Self {
            cfg,
            mechanism: mechanism.into(),
            problem: problem.into(),
            out: Outcome::default(),
        }
    }

    fn push(&mut self, n: usize, (epsilon, delta): (f64, f64), metric: impl Into<String>, m: Measure) {
        self.out.rows.push(ResultRow {
            experiment: self.cfg.experiment.clone(),
            mechanism: self.mechanism.clone(),
            problem: self.problem.clone(),
            n,
            epsilon,
            delta,
            seed: self.cfg.seed,
            metric: metric.into(),
            value: m.value,
            stderr: m.stderr,
            bound: m.bound,
            pass: m.pass,
        });
    }
}

/// A problem with its hypothesis space and default data distribution.
struct Setup {
    problem: SharedProblem,
    space: Arc<FiniteHypothesisSpace>,
    distribution: DataDistribution,
}

fn setup(cfg: &RunConfig, default_resolution: usize) -> Result<Setup> {
    let res = cfg.resolution.unwrap_or(default_resolution);
    let unit = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    let s = match cfg.problem.as_str() {
        "threshold" => Setup {
            problem: Arc::new(ThresholdClassification::new()),
            space: Arc::new(discretize_box(&GridSpec::unit_interval(res))?),
            distribution: DataDistribution::LabeledThreshold { theta: 0.3, flip: 0.1 },
        },
        "pth_power_mean" => Setup {
            problem: Arc::new(PthPowerMean::new(10.0)?),
            space: Arc::new(discretize_box(&GridSpec::unit_interval(res))?),
            distribution: unit,
        },
        "finite_support_estimation" => {
            let p = FiniteSupportEstimation::new(8, 2)?;
            let space = Arc::new(p.space()?);
            Setup {
                problem: Arc::new(p),
                space,
                distribution: unit,
            }
        }
        "linear_logistic" => {
            let p = LinearLogistic::new(2, 2.0)?;
            let space = Arc::new(discretize_box(&p.weight_grid(res.min(256))?)?);
            Setup {
                problem: Arc::new(p),
                space,
                distribution: DataDistribution::LinearLogistic { weights: vec![1.0, -1.0] },
            }
        }
        "best_subset_regression" => {
            let p = BestSubsetRegression::new(4, 2, 0.1)?;
            let sparse = SparseSpace::new(&p, res.min(64))?;
            Setup {
                problem: Arc::new(p),
                space: Arc::new(sparse.union),
                distribution: DataDistribution::LinearRegression {
                    weights: vec![1.0, 0.0, -1.0, 0.0],
                    noise: 0.2,
                },
            }
        }
        other => return Err(invalid(format!("unknown problem `{other}`"))),
    };
    Ok(s)
}

/// Audit universe: the configured feature values, with both labels for
/// binary problems.
fn universe(cfg: &RunConfig, problem: &SharedProblem) -> Result<Vec<DataPoint>> {
    let domain = problem.domain();
    if domain.lower.len() != 1 {
        return Err(invalid(format!(
            "experiment `{}` enumerates datasets and needs a one-dimensional problem",
            cfg.experiment
        )));
    }
    let xs = cfg.universe.clone().unwrap_or_else(|| vec![0.2, 0.5, 0.8]);
    Ok(match domain.label {
        LabelKind::Binary => ThresholdClassification::universe(&xs),
        LabelKind::None => xs.iter().map(|&x| DataPoint::unlabeled(vec![x])).collect(),
        LabelKind::Real { lower, upper } => xs
            .iter()
            .flat_map(|&x| [DataPoint::labeled(vec![x], lower), DataPoint::labeled(vec![x], upper)])
            .collect(),
    })
}

fn mechanism(cfg: &RunConfig, s: &Setup, n: usize) -> Result<SharedMechanism> {
    let em = || -> Result<SharedMechanism> {
        Ok(Arc::new(ExponentialMechanism::new(s.problem.clone(), s.space.clone(), cfg.epsilon)?))
    };
    let subset = || SubsetSize::Fixed(((cfg.gamma.unwrap_or(1.0) * n as f64).round() as usize).clamp(1, n));
    let delta = cfg.delta.unwrap_or(0.0);
    Ok(match cfg.mechanism.as_str() {
        "exponential" => em()?,
        "erm" => Arc::new(ErmMechanism::new(s.problem.clone(), s.space.clone())),
        "fixed" => Arc::new(FixedLaw::constant(s.space.clone(), 0)?),
        "subsampled" => Arc::new(Subsampled::new(em()?, subset())),
        "mixture" => Arc::new(BitRevealingMixture::new(em()?, delta)?),
        "subsampled-mixture" => Arc::new(Subsampled::new(Arc::new(BitRevealingMixture::new(em()?, delta)?), subset())),
        other => {
            return Err(invalid(format!(
                "mechanism `{other}` has no exact law and cannot be used by experiment `{}`",
                cfg.experiment
            )))
        }
    })
}

fn witness_json(kind: &str, w: &Witness, family: &DatasetFamily, space: &FiniteHypothesisSpace, hypothesis: bool) -> Value {
    let (i, j) = w.pair;
    let mut v = json!({
        "kind": kind,
        "value": w.value,
        "dataset": family.datasets[i].to_csv(),
        "neighbour": family.datasets[j].to_csv(),
    });
    if hypothesis {
        v["hypothesis"] = json!(format!("{:?}", space.payload(w.index)));
    }
    v
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1).max(1) as f64))
        .collect()
}

/// Runs the experiment named in `cfg`.
pub fn run(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    match cfg.experiment.as_str() {
        "audit" => audit(cfg, exec),
        "stability" => stability(cfg, exec),
        "aerm" => aerm(cfg, exec),
        "utility-tail" => utility_tail(cfg),
        "consistency" => consistency(cfg, exec),
        "counterexample" => counterexample(cfg, exec),
        "phase" => phase(cfg, exec),
        "boost" => boost(cfg, exec),
        "rates" => rates(cfg, exec),
        "sublevel" => sublevel(cfg, exec),
        other => Err(crate::error::CliError::UnknownExperiment(other.into())),
    }
}

fn audit(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let s = setup(cfg, 16)?;
    let n = cfg.n.unwrap_or(3);
    let family = DatasetFamily::exhaustive(&universe(cfg, &s.problem)?, n)?;
    let m = mechanism(cfg, &s, n)?;
    let budget = m.budget(n);
    let eps = if budget.epsilon.is_finite() { budget.epsilon } else { 0.0 };
    let report: AuditReport = audit_dp(m.as_ref(), &family, eps, exec)?;
    let mut rows = Rows::new(cfg, m.name(), s.problem.name());
    let claim = (budget.epsilon, budget.delta);
    let ratio = if budget.delta == 0.0 {
        Measure::upper(report.max_log_ratio, budget.epsilon, 1e-9)
    } else {
        Measure::info(report.max_log_ratio, 0.0)
    };
    rows.push(n, claim, "max_log_ratio", ratio);
    rows.push(n, claim, "realized_delta", Measure::upper(report.realized_delta_at_epsilon, budget.delta, 1e-12));
    if let Some(w) = &report.witness {
        rows.out.witnesses.push(witness_json("max_log_ratio", w, &family, m.space(), true));
    }
    if let Some(w) = &report.delta_witness {
        rows.out.witnesses.push(witness_json("realized_delta", w, &family, m.space(), false));
    }
    rows.out.notes.push(format!("{} neighbouring pairs audited", report.pairs_probed));
    Ok(rows.out)
}

fn stability(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let s = setup(cfg, 16)?;
    let n = cfg.n.unwrap_or(3);
    let points = universe(cfg, &s.problem)?;
    let family = DatasetFamily::exhaustive(&points, n)?;
    let m = mechanism(cfg, &s, n)?;
    let budget = m.budget(n);
    let report = stability_audit(m.as_ref(), s.problem.as_ref(), &family, &points, exec)?;
    let mut rows = Rows::new(cfg, m.name(), s.problem.name());
    let claim = (budget.epsilon, budget.delta);
    let exp_bound = if budget.delta == 0.0 {
        Measure::upper(report.value, stability_bound(budget.epsilon), 1e-9)
    } else {
        Measure::info(report.value, 0.0)
    };
    rows.push(n, claim, "stability", exp_bound);
    if budget.delta == 0.0 && budget.epsilon <= 1.0 {
        rows.push(n, claim, "stability_small_eps", Measure::upper(report.value, 2.0 * budget.epsilon, 1e-9));
    }
    if let Some(w) = &report.witness {
        let mut v = witness_json("stability", w, &family, m.space(), false);
        v["probe"] = json!(format!("{:?}", points[w.index]));
        rows.out.witnesses.push(v);
    }
    Ok(rows.out)
}

fn aerm(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let s = setup(cfg, 64)?;
    let n_grid = cfg.n_grid.clone().unwrap_or_else(|| vec![100, 1000, 10_000]);
    let k = s.space.len() as f64;
    let name = if cfg.mechanism == "mcmc" { "mcmc".to_string() } else { mechanism(cfg, &s, n_grid[0])?.name() };
    let measured = try_map_indexed(n_grid.len(), exec, |i| -> Result<(Measure, f64)> {
        let n = n_grid[i];
        let z = s.distribution.sample_dataset(n, &mut trial_rng(cfg.seed, i as u64))?;
        let bound = aerm_bound(n, cfg.epsilon, k, 0.0, s.problem.zeta(n));
        let measure = if cfg.mechanism == "mcmc" {
            let est = mcmc_gap(cfg, &s, &z, i as u64)?;
            Measure {
                value: est.mean,
                stderr: est.stderr,
                bound: bound.checked,
                pass: est.mean <= bound.checked + 3.0 * est.stderr,
            }
        } else {
            let m = mechanism(cfg, &s, n)?;
            Measure::upper(aerm_gap(m.as_ref(), s.problem.as_ref(), &z)?, bound.checked, 0.0)
        };
        Ok((measure, bound.alternative))
    })?;
    let mut rows = Rows::new(cfg, name, s.problem.name());
    for (&n, (measure, alternative)) in n_grid.iter().zip(measured) {
        rows.push(n, (cfg.epsilon, 0.0), "aerm_gap", measure);
        rows.out.notes.push(format!(
            "n={n}: alternative bound form 9[(rho+2) ln n - ln K]/(n eps) + zeta = {alternative:.6}"
        ));
    }
    Ok(rows.out)
}

/// AERM gap of the Metropolis sampler, with the minimum taken over the grid
/// and the expectation over chain states (batch-means standard error).
fn mcmc_gap(cfg: &RunConfig, s: &Setup, z: &Dataset, stream: u64) -> Result<MeanEstimate> {
    let domain = s.problem.domain();
    let steps = cfg.mcmc_steps.unwrap_or(10_000);
    let sampler = MetropolisSampler::new(s.problem.clone(), domain.lower.clone(), domain.upper.clone(), cfg.epsilon, steps)?;
    let chain = sampler.run_chain(z, dperm_core::rng::split_seed(cfg.seed, stream))?;
    let f_min = objectives(s.problem.as_ref(), &s.space, z)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let values: Vec<f64> = chain
        .samples
        .iter()
        .map(|h| dperm_core::problems::objective(s.problem.as_ref(), &dperm_core::Payload::Vector(h.clone()), z) - f_min)
        .collect();
    let batches = 20.min(values.len()).max(1);
    let size = values.len() / batches;
    let means: Vec<f64> = values.chunks_exact(size.max(1)).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    Ok(MeanEstimate::from_samples(&means))
}

fn utility_tail(cfg: &RunConfig) -> Result<Outcome> {
    let s = setup(cfg, 64)?;
    let n = cfg.n.unwrap_or(100);
    let m = ExponentialMechanism::new(s.problem.clone(), s.space.clone(), cfg.epsilon)?;
    let z = s.distribution.sample_dataset(n, &mut trial_rng(cfg.seed, 0))?;
    let mut rows = Rows::new(cfg, m.name(), s.problem.name());
    for row in utility_tail_check(&m, &z, &log_grid(1e-3, 1.0, 20))? {
        rows.push(n, (cfg.epsilon, 0.0), format!("tail_probability[t={:.4e}]", row.t), Measure::upper(row.lhs, row.rhs, 1e-12));
    }
    Ok(rows.out)
}

fn consistency(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let s = setup(cfg, 8)?;
    let n = cfg.n.unwrap_or(3);
    let distribution = match (cfg.problem.as_str(), &cfg.universe) {
        ("threshold", None) => DataDistribution::discrete(
            vec![DataPoint::labeled(vec![0.25], 1.0), DataPoint::labeled(vec![0.75], 0.0)],
            vec![0.4, 0.6],
        )?,
        _ => DataDistribution::discrete_uniform(universe(cfg, &s.problem)?)?,
    };
    let mode = match cfg.trials {
        Some(trials) => ConsistencyMode::MonteCarlo { trials, seed: cfg.seed },
        None => ConsistencyMode::Exact,
    };
    let m = mechanism(cfg, &s, n)?;
    let r = consistency_suite(m.as_ref(), s.problem.as_ref(), &distribution, n, mode, exec)?;
    let budget = m.budget(n);
    let claim = (budget.epsilon, budget.delta);
    let mut rows = Rows::new(cfg, m.name(), s.problem.name());
    rows.push(n, claim, "excess_risk", Measure {
        value: r.excess_risk.value,
        stderr: r.excess_risk.stderr,
        bound: r.stability_gap + r.aerm_gap.value,
        pass: r.decomposition_holds,
    });
    rows.push(n, claim, "generalization_gap", Measure {
        value: r.generalization_gap.value.abs(),
        stderr: r.generalization_gap.stderr,
        bound: r.stability_gap,
        pass: r.generalization_holds,
    });
    rows.push(n, claim, "aerm_gap", Measure::info(r.aerm_gap.value, r.aerm_gap.stderr));
    let stab = if budget.delta == 0.0 {
        Measure::upper(r.stability_gap, r.stability_bound, 1e-9)
    } else {
        Measure::info(r.stability_gap, 0.0)
    };
    rows.push(n, claim, "stability", stab);
    rows.out.notes.push(format!("optimal risk {:.6}; slack {:.3e}", r.optimal_risk, r.slack));
    rows.out.notes.extend(r.note);
    Ok(rows.out)
}

fn counterexample(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let n = cfg.n.unwrap_or(3);
    let resolutions = cfg.resolutions.clone().unwrap_or_else(|| vec![16, 256, 4096, 65_536]);
    let r = counterexample_experiment(cfg.epsilon, n, &resolutions, COUNTEREXAMPLE_THRESHOLD, exec)?;
    let mut rows = Rows::new(cfg, "exponential", "threshold");
    let claim = (cfg.epsilon, 0.0);
    let mut previous: Option<f64> = None;
    for row in &r.rows {
        rows.push(n, claim, format!("max_aerm_gap[G={}]", row.resolution), Measure::info(row.max_gap, 0.0));
        if let Some(prev) = previous {
            // a drop in the worst gap is a monotonicity violation
            rows.push(n, claim, format!("gap_drop[G={}]", row.resolution), Measure::upper((prev - row.max_gap).max(0.0), 0.0, 1e-12));
        }
        if row.log_ratio >= r.threshold {
            // value below zero means the gap exceeds one half
            let short = 0.5 - row.max_gap;
            rows.push(n, claim, format!("half_minus_gap[G={}]", row.resolution), Measure {
                pass: short < 0.0,
                ..Measure::upper(short, 0.0, 0.0)
            });
        }
        rows.out.witnesses.push(json!({
            "kind": "worst_packed_dataset",
            "resolution": row.resolution,
            "log_ratio": row.log_ratio,
            "dataset_index": row.witness,
            "gap": row.max_gap,
        }));
        previous = Some(row.max_gap);
    }
    rows.out.notes.push(format!(
        "K = {} packed datasets; gap must exceed 1/2 once ln G / (n eps / 4) >= {}",
        r.k, r.threshold
    ));
    Ok(rows.out)
}

fn phase(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let defaults = PhaseConfig::default();
    let pc = PhaseConfig {
        n_grid: cfg.n_grid.clone().unwrap_or(defaults.n_grid),
        trials: cfg.trials.unwrap_or(defaults.trials),
        seed: cfg.seed,
        resolution: cfg.resolution.unwrap_or(defaults.resolution),
        ..defaults
    };
    let r = phase_transition_experiment(&pc, exec)?;
    let mut rows = Rows::new(cfg, "subsampled-erm", "threshold");
    for row in &r.rows {
        rows.push(row.n, (0.0, row.delta), format!("excess_risk[r={}]", row.r), Measure::info(row.excess.value, row.excess.stderr));
    }
    let at = |rate: f64| r.rows.iter().filter(move |row| row.r == rate);
    let half: Vec<_> = at(0.5).collect();
    for w in half.windows(2) {
        let margin = 4.0 * pooled_stderr(w[0].excess.stderr, w[1].excess.stderr);
        // negative when the mean fell by more than four pooled SE
        let v = w[1].excess.value - w[0].excess.value + margin;
        rows.push(w[1].n, (0.0, w[1].delta), "half_rate_step", Measure {
            pass: v < 0.0,
            ..Measure::upper(v, 0.0, 0.0)
        });
    }
    if let (Some(h), Some(o)) = (half.last(), at(1.0).next_back()) {
        if h.n == o.n {
            let v = 4.0 * pooled_stderr(h.excess.stderr, o.excess.stderr) - (o.excess.value - h.excess.value);
            rows.push(o.n, (0.0, o.delta), "r1_minus_half_shortfall", Measure::upper(v, 0.0, 0.0));
        }
    }
    Ok(rows.out)
}

fn boost(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let defaults = BoostConfig::default();
    let bc = BoostConfig {
        deltas: cfg.delta.map(|d| vec![d]).unwrap_or(defaults.deltas),
        n: cfg.n.unwrap_or(defaults.n),
        epsilon: cfg.epsilon,
        trials: cfg.trials.unwrap_or(defaults.trials),
        calibration_trials: cfg.trials.unwrap_or(defaults.calibration_trials),
        resolution: cfg.resolution.unwrap_or(defaults.resolution),
        seed: cfg.seed,
        ..defaults
    };
    let r = boost_experiment(&bc, exec)?;
    let mut rows = Rows::new(cfg, "boosted-exponential", "threshold");
    for row in &r.rows {
        rows.push(bc.n, (bc.epsilon, row.delta), "failure_frequency", Measure {
            value: row.failure.value,
            stderr: row.failure.stderr,
            bound: row.delta + 3.0 * row.failure.stderr,
            pass: row.pass,
        });
        rows.out.notes.push(format!(
            "delta={}: {} parts of {} points, xi={:.4e}, C={:.4}, threshold={:.4e}",
            row.delta, row.parts, row.part_size, row.xi.value, row.c_hat, row.threshold
        ));
    }
    Ok(rows.out)
}

fn rates(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let defaults = RatesConfig::default();
    let rc = RatesConfig {
        n_grid: cfg.n_grid.clone().unwrap_or(defaults.n_grid),
        trials: cfg.trials.unwrap_or(defaults.trials),
        seed: cfg.seed,
        ..defaults
    };
    let r = rates_experiment(&rc, exec)?;
    let mut rows = Rows::new(cfg, "laplace-erm-mean", "pth_power_mean");
    for row in &r.rows {
        rows.push(row.n, (row.epsilon, 0.0), "excess_risk", Measure::info(row.excess.value, row.excess.stderr));
    }
    let n_max = rc.n_grid.iter().copied().max().unwrap_or(0);
    rows.push(n_max, (f64::NAN, 0.0), "loglog_slope", Measure::info(r.slope, 0.0));
    let (lo, hi) = r.slope_range;
    let outside = (r.slope - hi).max(lo - r.slope);
    rows.push(n_max, (f64::NAN, 0.0), "slope_outside_range", Measure {
        pass: r.pass,
        ..Measure::upper(outside, 0.0, 0.0)
    });
    rows.out.notes.push(format!("required slope range [{lo}, {hi}]"));
    Ok(rows.out)
}

fn sublevel(cfg: &RunConfig, exec: Execution) -> Result<Outcome> {
    let s = setup(cfg, 256)?;
    let n = cfg.n.unwrap_or(100);
    let t_grid = log_grid(1e-3, 0.3, 10);
    let fit = estimate_sublevel_condition(
        s.problem.as_ref(),
        &s.distribution,
        &s.space,
        n,
        &t_grid,
        cfg.trials.unwrap_or(20),
        cfg.seed,
        exec,
    )?;
    let mut rows = Rows::new(cfg, "none", s.problem.name());
    // mu(H)/mu(S_t) can never exceed mu(H)/min weight
    let min_weight = s.space.weights().iter().copied().fold(f64::INFINITY, f64::min);
    let cap = s.space.total_measure() / min_weight;
    for row in &fit.table {
        rows.push(n, (0.0, 0.0), format!("mean_ratio[t={:.4e}]", row.t), Measure {
            stderr: row.stderr,
            ..Measure::upper(row.mean_ratio, cap, 1e-9)
        });
    }
    rows.push(n, (0.0, 0.0), "k_hat", Measure::info(fit.k_hat, 0.0));
    rows.push(n, (0.0, 0.0), "rho_hat", Measure::info(fit.rho_hat, 0.0));
    Ok(rows.out)
}
