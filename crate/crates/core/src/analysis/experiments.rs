use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bounds::aerm_gap;
use super::consistency::Estimate;
use crate::error::{invalid, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::hypothesis_space::{discretize_box, FiniteHypothesisSpace, GridSpec};
use crate::mechanisms::{
    boost_parts, BoostHighConfidence, EpsilonSchedule, ErmMechanism, ExponentialMechanism,
    LaplaceErmMean, Mechanism, SharedMechanism, SubsetSize, Subsampled,
};
use crate::problems::{
    packed_datasets, DataDistribution, PthPowerMean, SharedProblem, ThresholdClassification,
};
use crate::rng::{mix64, trial_rng};
use crate::stats::{ols, pooled_stderr, MeanEstimate};

/// Default value of `ln G / (n eps / 4)` from which the worst packed AERM
/// gap is expected to exceed 1/2.
///
/// At `eps = 1, n = 3` the zero-risk intervals have width about 0.0043, so
/// the grid resolves them once `G >= 235`, i.e. the ratio reaches 7.28.
/// After that the nearly flat law leaves a gap close to 2/3.
pub const COUNTEREXAMPLE_THRESHOLD: f64 = 7.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub resolution: usize,
    /// `ln G / (n eps / 4)`.
    pub log_ratio: f64,
    pub max_gap: f64,
    /// Index of the packed dataset attaining `max_gap`.
    pub witness: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub epsilon: f64,
    pub n: usize,
    pub k: usize,
    pub rows: Vec<CounterexampleRow>,
    pub monotone: bool,
    pub threshold: f64,
    /// Every row at or past `threshold` has `max_gap > 1/2`.
    pub exceeds_half: bool,
}

/// Worst exact AERM gap of the exponential mechanism over the packed
/// datasets, for each threshold-grid resolution.
///
/// This is demonstrated for one concrete private learner; it illustrates
/// how the gap grows with `ln |H|` and is not a proof about all learners.
pub fn counterexample_experiment(
    epsilon: f64,
    n: usize,
    resolutions: &[usize],
    threshold: f64,
    exec: Execution,
) -> Result<CounterexampleReport> {
    if resolutions.is_empty() {
        return Err(invalid("need at least one grid resolution"));
    }
    let family = packed_datasets(epsilon, n)?;
    let problem: SharedProblem = Arc::new(ThresholdClassification::new());
    let scale = n as f64 * epsilon / 4.0;
    let mut rows = Vec::with_capacity(resolutions.len());
    for &g in resolutions {
        let space = Arc::new(discretize_box(&GridSpec::unit_interval(g))?);
        let mech = ExponentialMechanism::new(problem.clone(), space, epsilon)?;
        let gaps = try_map_indexed(family.datasets.len(), exec, |i| {
            aerm_gap(&mech, problem.as_ref(), &family.datasets[i])
        })?;
        let (witness, max_gap) = gaps
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        rows.push(CounterexampleRow {
            resolution: g,
            log_ratio: (g as f64).ln() / scale,
            max_gap,
            witness,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].max_gap >= w[0].max_gap - 1e-12);
    let exceeds_half = rows
        .iter()
        .filter(|r| r.log_ratio >= threshold)
        .all(|r| r.max_gap > 0.5);
    Ok(CounterexampleReport {
        epsilon,
        n,
        k: family.k(),
        rows,
        monotone,
        threshold,
        exceeds_half,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub rates: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub resolution: usize,
    pub theta: f64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            rates: vec![0.0, 0.5, 1.0],
            n_grid: vec![100, 1000, 10_000],
            trials: 1000,
            seed: 1,
            resolution: 4096,
            theta: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub r: f64,
    pub n: usize,
    pub subsample: usize,
    /// Claimed `delta = m / n` of the subsampled ERM.
    pub delta: f64,
    pub excess: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub rows: Vec<PhaseRow>,
    /// For `r = 1/2`: each step in `n` lowers the mean by more than four
    /// pooled standard errors. `None` when `r = 1/2` was not run.
    pub decreasing_at_half: Option<bool>,
    /// At the largest `n`, the `r = 1` excess risk exceeds the `r = 1/2`
    /// one by at least four pooled standard errors.
    pub r1_above_half: Option<bool>,
}

fn threshold_risks(space: &FiniteHypothesisSpace, theta: f64, flip: f64) -> Vec<f64> {
    let d = DataDistribution::LabeledThreshold { theta, flip };
    let p = ThresholdClassification::new();
    space
        .hypotheses()
        .iter()
        .map(|h| crate::problems::Problem::closed_form_risk(&p, &h.payload, &d).expect("closed form"))
        .collect()
}

/// ERM on a random subsample of `ceil(n^(1-r))` points from separable
/// threshold data, for each rate `r` and sample size `n`.
pub fn phase_transition_experiment(config: &PhaseConfig, exec: Execution) -> Result<PhaseReport> {
    if config.trials < 2 || config.n_grid.is_empty() || config.rates.is_empty() {
        return Err(invalid("phase experiment needs rates, an n grid and at least 2 trials"));
    }
    let problem: SharedProblem = Arc::new(ThresholdClassification::new());
    let space = Arc::new(discretize_box(&GridSpec::unit_interval(config.resolution))?);
    let risks = threshold_risks(&space, config.theta, 0.0);
    let optimal = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let erm: SharedMechanism = Arc::new(ErmMechanism::new(problem, space));
    let dist = DataDistribution::LabeledThreshold {
        theta: config.theta,
        flip: 0.0,
    };
    let mut rows = Vec::new();
    for (ri, &r) in config.rates.iter().enumerate() {
        let learner = Subsampled::new(erm.clone(), SubsetSize::Power(r));
        for (ni, &n) in config.n_grid.iter().enumerate() {
            let m = learner.subset_size(n)?;
            let stream = mix64(config.seed ^ ((ri as u64) << 32 | ni as u64));
            let excess = try_map_indexed(config.trials, exec, |t| {
                let mut rng = trial_rng(stream, t as u64);
                let z = dist.sample_dataset(n, &mut rng)?;
                let id = learner.sample_with(&z, &mut rng)?;
                Ok::<_, crate::Error>(risks[id] - optimal)
            })?;
            rows.push(PhaseRow {
                r,
                n,
                subsample: m,
                delta: m as f64 / n as f64,
                excess: MeanEstimate::from_samples(&excess).into(),
            });
        }
    }
    let at = |r: f64| -> Vec<&PhaseRow> { rows.iter().filter(|row| row.r == r).collect() };
    let half = at(0.5);
    let decreasing_at_half = (!half.is_empty()).then(|| {
        half.windows(2).all(|w| {
            w[1].excess.value + 4.0 * pooled_stderr(w[0].excess.stderr, w[1].excess.stderr)
                < w[0].excess.value
        })
    });
    let one = at(1.0);
    let r1_above_half = match (half.last(), one.last()) {
        (Some(h), Some(o)) if h.n == o.n => Some(
            o.excess.value - h.excess.value >= 4.0 * pooled_stderr(o.excess.stderr, h.excess.stderr),
        ),
        _ => None,
    };
    Ok(PhaseReport {
        rows,
        decreasing_at_half,
        r1_above_half,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// `epsilon(n) = n^(-exponent)`.
    pub exponent: f64,
    pub power: f64,
    pub slope_range: (f64, f64),
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![100, 1000, 10_000, 100_000],
            trials: 500,
            seed: 1,
            exponent: 0.9,
            power: 10.0,
            slope_range: (-1.1, -0.7),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesRow {
    pub n: usize,
    pub epsilon: f64,
    pub excess: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    pub rows: Vec<RatesRow>,
    /// Least-squares slope of `ln(mean excess)` on `ln n`.
    pub slope: f64,
    pub intercept: f64,
    pub slope_range: (f64, f64),
    pub pass: bool,
}

/// Mean excess population risk of Laplace-perturbed ERM on uniform data
/// with `epsilon(n) = n^(-exponent)`, and its log-log slope in `n`.
pub fn rates_experiment(config: &RatesConfig, exec: Execution) -> Result<RatesReport> {
    if config.trials < 2 || config.n_grid.len() < 2 {
        return Err(invalid("rates experiment needs two sample sizes and at least 2 trials"));
    }
    let problem = PthPowerMean::new(config.power)?;
    let optimal = problem.risk_uniform(0.5);
    let schedule = EpsilonSchedule::Power {
        scale: 1.0,
        exponent: config.exponent,
    };
    let mech = LaplaceErmMean::new(problem.clone(), schedule)?;
    let dist = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    let mut rows = Vec::new();
    for (ni, &n) in config.n_grid.iter().enumerate() {
        let stream = mix64(config.seed ^ ni as u64);
        let excess = try_map_indexed(config.trials, exec, |t| {
            let mut rng = trial_rng(stream, t as u64);
            let z = dist.sample_dataset(n, &mut rng)?;
            let h = mech.sample_with(&z, &mut rng);
            Ok::<_, crate::Error>(problem.risk_uniform(h) - optimal)
        })?;
        rows.push(RatesRow {
            n,
            epsilon: schedule.at(n),
            excess: MeanEstimate::from_samples(&excess).into(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.excess.value.ln()).collect();
    let fit = ols(&xs, &ys);
    let (lo, hi) = config.slope_range;
    Ok(RatesReport {
        rows,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_range: config.slope_range,
        pass: fit.slope.is_finite() && lo <= fit.slope && fit.slope <= hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub deltas: Vec<f64>,
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub calibration_trials: usize,
    pub resolution: usize,
    pub theta: f64,
    pub flip: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.3],
            n: 200,
            epsilon: 1.0,
            trials: 2000,
            calibration_trials: 2000,
            resolution: 64,
            theta: 0.3,
            flip: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRow {
    pub delta: f64,
    pub parts: usize,
    pub part_size: usize,
    /// Mean excess risk of the base learner at the part size.
    pub xi: Estimate,
    /// Constant calibrated on held-out trials.
    pub c_hat: f64,
    /// `e xi + c_hat sqrt(ln(3/delta) / n)`.
    pub threshold: f64,
    /// Frequency of excess risk above `threshold` on fresh trials.
    pub failure: Estimate,
    /// `failure <= delta + 3 SE`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub rows: Vec<BoostRow>,
}

/// Failure frequency of the boosted exponential mechanism on noisy threshold
/// data with `|H| = resolution`.
///
/// The constant in front of `sqrt(ln(3/delta)/n)` is not known, so it is
/// calibrated as the `(1 - delta)`-quantile of
/// `max(0, excess - e xi) / sqrt(ln(3/delta)/n)` over `calibration_trials`
/// runs that share no seeds with the evaluation runs.
pub fn boost_experiment(config: &BoostConfig, exec: Execution) -> Result<BoostReport> {
    if config.trials < 2 || config.calibration_trials < 1 {
        return Err(invalid("boost experiment needs at least 2 trials and 1 calibration trial"));
    }
    let problem: SharedProblem = Arc::new(ThresholdClassification::new());
    let space = Arc::new(discretize_box(&GridSpec::unit_interval(config.resolution))?);
    let risks = threshold_risks(&space, config.theta, config.flip);
    let optimal = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let base: SharedMechanism = Arc::new(ExponentialMechanism::new(problem.clone(), space, config.epsilon)?);
    let dist = DataDistribution::LabeledThreshold {
        theta: config.theta,
        flip: config.flip,
    };
    let mut rows = Vec::new();
    for (di, &delta) in config.deltas.iter().enumerate() {
        let parts = boost_parts(delta)?;
        let boosted = BoostHighConfidence::with_parts(base.clone(), problem.clone(), parts, config.epsilon)?;
        let m = boosted.part_size(config.n)?;
        let streams: Vec<u64> = (0..3).map(|k| mix64(config.seed ^ ((di as u64) << 8 | k))).collect();

        let base_excess = try_map_indexed(config.calibration_trials, exec, |t| {
            let mut rng = trial_rng(streams[0], t as u64);
            let z = dist.sample_dataset(m, &mut rng)?;
            Ok::<_, crate::Error>(risks[base.sample_with(&z, &mut rng)?] - optimal)
        })?;
        let xi = MeanEstimate::from_samples(&base_excess);
        let unit = ((3.0 / delta).ln() / config.n as f64).sqrt();
        let run = |stream: u64, count: usize| {
            try_map_indexed(count, exec, |t| {
                let mut rng = trial_rng(stream, t as u64);
                let z = dist.sample_dataset(config.n, &mut rng)?;
                Ok::<_, crate::Error>(risks[boosted.sample_with(&z, &mut rng)?] - optimal)
            })
        };
        let e = std::f64::consts::E;
        let mut normalized: Vec<f64> = run(streams[1], config.calibration_trials)?
            .iter()
            .map(|x| ((x - e * xi.mean) / unit).max(0.0))
            .collect();
        normalized.sort_by(f64::total_cmp);
        let q = ((1.0 - delta) * normalized.len() as f64).ceil() as usize;
        let c_hat = normalized[q.clamp(1, normalized.len()) - 1];
        let threshold = e * xi.mean + c_hat * unit;
        let failures: Vec<f64> = run(streams[2], config.trials)?
            .iter()
            .map(|x| if *x > threshold + 1e-12 { 1.0 } else { 0.0 })
            .collect();
        let failure = MeanEstimate::from_samples(&failures);
        rows.push(BoostRow {
            delta,
            parts,
            part_size: m,
            xi: xi.into(),
            c_hat,
            threshold,
            failure: failure.into(),
            pass: failure.mean <= delta + 3.0 * failure.stderr,
        });
    }
    Ok(BoostReport { rows })
}
