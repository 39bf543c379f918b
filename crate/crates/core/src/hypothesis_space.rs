//! Finite hypothesis spaces with a base measure.
//!
//! Everything downstream computes mechanism laws exactly, which requires an
//! explicitly enumerable hypothesis set. Continuous spaces are handled by
//! pre-discretizing a box into a grid of cell centers ([`discretize_box`]).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Execution};
use crate::problems::{objectives, DataDistribution, Problem};
use crate::rng::trial_rng;
use crate::stats::ols;

/// Default cap on the number of grid points produced by [`discretize_box`].
pub const DEFAULT_GRID_CAP: u64 = 10_000_000;

/// Absolute tolerance used for sublevel-set membership.
pub const SUBLEVEL_TOLERANCE: f64 = 1e-12;

/// Parameters of a hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// A point in `R^d`.
    Vector(Vec<f64>),
    /// A set of indices (for example grid cells), kept sorted.
    Subset(Vec<usize>),
}

impl Payload {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Payload::Vector(v) => Some(v),
            Payload::Subset(_) => None,
        }
    }

    pub fn as_subset(&self) -> Option<&[usize]> {
        match self {
            Payload::Subset(s) => Some(s),
            Payload::Vector(_) => None,
        }
    }

    /// The single coordinate of a 1-d vector payload.
    pub fn scalar(&self) -> Option<f64> {
        match self.as_vector() {
            Some([x]) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: usize,
    pub payload: Payload,
}

/// An ordered, nonempty set of hypotheses with positive weights.
///
/// Hypothesis ids equal their position in the enumeration, so iteration
/// order and ids are the same thing.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHypothesisSpace {
    hypotheses: Vec<Hypothesis>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    total_measure: f64,
}

impl FiniteHypothesisSpace {
    /// A space under counting measure.
    pub fn new(payloads: Vec<Payload>) -> Result<Self> {
        let weights = vec![1.0; payloads.len()];
        Self::with_weights(payloads, weights)
    }

    pub fn with_weights(payloads: Vec<Payload>, weights: Vec<f64>) -> Result<Self> {
        if payloads.is_empty() {
            return Err(invalid("hypothesis space must be nonempty"));
        }
        if payloads.len() != weights.len() {
            return Err(invalid(format!(
                "{} hypotheses but {} weights",
                payloads.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(invalid(format!("measure weights must be positive and finite, got {w}")));
        }
        let hypotheses = payloads
            .into_iter()
            .enumerate()
            .map(|(id, payload)| Hypothesis { id, payload })
            .collect();
        let total_measure = weights.iter().sum();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            hypotheses,
            weights,
            log_weights,
            total_measure,
        })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn get(&self, id: usize) -> Option<&Hypothesis> {
        self.hypotheses.get(id)
    }

    pub fn payload(&self, id: usize) -> &Payload {
        &self.hypotheses[id].payload
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn is_counting_measure(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// A new space with `extra` hypotheses appended under unit weight.
    pub fn extended(&self, extra: Vec<Payload>) -> Result<Self> {
        let mut payloads: Vec<Payload> =
            self.hypotheses.iter().map(|h| h.payload.clone()).collect();
        let mut weights = self.weights.clone();
        weights.extend(std::iter::repeat_n(1.0, extra.len()));
        payloads.extend(extra);
        Self::with_weights(payloads, weights)
    }
}

/// An axis-aligned box split into equal cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let spec = Self {
            lower,
            upper,
            resolution,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `[0, 1]` split into `resolution` cells.
    pub fn unit_interval(resolution: usize) -> Self {
        Self {
            lower: vec![0.0],
            upper: vec![1.0],
            resolution: vec![resolution],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lower.len();
        if d == 0 || self.upper.len() != d || self.resolution.len() != d {
            return Err(invalid(
                "grid lower/upper/resolution must be nonempty and of equal length",
            ));
        }
        for i in 0..d {
            if !(self.lower[i].is_finite() && self.upper[i].is_finite())
                || self.lower[i] >= self.upper[i]
            {
                return Err(invalid(format!(
                    "grid dimension {i}: need lower < upper, got [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
            if self.resolution[i] == 0 {
                return Err(invalid(format!("grid dimension {i}: resolution must be >= 1")));
            }
        }
        Ok(())
    }

    /// Number of grid points, as a float so overflow is detectable.
    pub fn point_count(&self) -> f64 {
        self.resolution.iter().map(|&r| r as f64).product()
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.upper[i] - self.lower[i]) / self.resolution[i] as f64)
            .product()
    }

    /// Cell-center coordinate `index` along dimension `dim`.
    pub fn center(&self, dim: usize, index: usize) -> f64 {
        let width = (self.upper[dim] - self.lower[dim]) / self.resolution[dim] as f64;
        self.lower[dim] + (index as f64 + 0.5) * width
    }
}

/// Enumerates the cell centers of `grid` (last dimension varies fastest)
/// under counting measure.
pub fn discretize_box(grid: &GridSpec) -> Result<FiniteHypothesisSpace> {
    discretize_box_with_cap(grid, DEFAULT_GRID_CAP)
}

pub fn discretize_box_with_cap(grid: &GridSpec, cap: u64) -> Result<FiniteHypothesisSpace> {
    FiniteHypothesisSpace::new(grid_points(grid, cap)?.into_iter().map(Payload::Vector).collect())
}

/// Cell centers of `grid` in lexicographic order.
pub fn grid_points(grid: &GridSpec, cap: u64) -> Result<Vec<Vec<f64>>> {
    grid.validate()?;
    let count = grid.point_count();
    if count > cap as f64 {
        return Err(Error::SizeLimit {
            what: "grid point count".into(),
            requested: count,
            cap: cap as f64,
        });
    }
    let count = count as usize;
    let d = grid.dim();
    let mut points = Vec::with_capacity(count);
    let mut index = vec![0usize; d];
    for _ in 0..count {
        points.push((0..d).map(|k| grid.center(k, index[k])).collect());
        for k in (0..d).rev() {
            index[k] += 1;
            if index[k] < grid.resolution[k] {
                break;
            }
            index[k] = 0;
        }
    }
    Ok(points)
}

/// Summary of `S_t = { h : F(h) <= t + min F }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelReport {
    pub t: f64,
    pub member_count: usize,
    pub measure: f64,
    /// `total_measure / measure`.
    pub ratio: f64,
}

/// Members of the `t`-sublevel set of `objective`, as a boolean mask.
pub fn sublevel_mask(objective: &[f64], t: f64) -> Vec<bool> {
    let min = objective.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = min + t + SUBLEVEL_TOLERANCE;
    objective.iter().map(|&f| f <= cut).collect()
}

pub fn sublevel_set(
    space: &FiniteHypothesisSpace,
    objective: &[f64],
    t: f64,
) -> Result<SublevelReport> {
    if objective.len() != space.len() {
        return Err(invalid(format!(
            "objective has {} values for {} hypotheses",
            objective.len(),
            space.len()
        )));
    }
    if t.is_nan() || t <= 0.0 {
        return Err(invalid(format!("sublevel threshold must be positive, got {t}")));
    }
    if let Some(bad) = objective.iter().find(|f| !f.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite objective value {bad}")));
    }
    let mask = sublevel_mask(objective, t);
    let (member_count, measure) = mask
        .iter()
        .zip(space.weights())
        .filter(|(m, _)| **m)
        .fold((0, 0.0), |(c, s), (_, w)| (c + 1, s + w));
    Ok(SublevelReport {
        t,
        member_count,
        measure,
        ratio: space.total_measure() / measure,
    })
}

/// One row of the sublevel-condition table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelRow {
    pub t: f64,
    pub mean_ratio: f64,
    pub stderr: f64,
}

/// Fitted `(K, ρ)` in `E[μ(H)/μ(S_t)] ≤ K (1/t)^ρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelFit {
    pub k_hat: f64,
    pub rho_hat: f64,
    pub table: Vec<SublevelRow>,
}

/// Monte Carlo estimate of `E_{Z~D^n}[μ(H)/μ(S_{Z,t})]` for each `t`,
/// followed by a least-squares fit of `log E[ratio]` against `log(1/t)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_sublevel_condition(
    problem: &dyn Problem,
    distribution: &DataDistribution,
    space: &FiniteHypothesisSpace,
    n: usize,
    t_grid: &[f64],
    replications: usize,
    seed: u64,
    exec: Execution,
) -> Result<SublevelFit> {
    if t_grid.is_empty() {
        return Err(invalid("t_grid must not be empty"));
    }
    if t_grid.iter().any(|t| t.is_nan() || *t <= 0.0) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("t_grid must be strictly positive and increasing"));
    }
    if replications == 0 {
        return Err(invalid("replications must be >= 1"));
    }
    if n == 0 {
        return Err(invalid("sample size must be >= 1"));
    }
    let per_rep: Vec<Vec<f64>> = exec::try_map_indexed(replications, exec, |r| {
        let mut rng = trial_rng(seed, r as u64);
        let data = distribution.sample_dataset(n, &mut rng)?;
        let obj = objectives(problem, space, &data);
        t_grid
            .iter()
            .map(|&t| sublevel_set(space, &obj, t).map(|s| s.ratio))
            .collect::<Result<Vec<f64>>>()
    })?;
    let table: Vec<SublevelRow> = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let column: Vec<f64> = per_rep.iter().map(|row| row[k]).collect();
            let est = crate::stats::MeanEstimate::from_samples(&column);
            SublevelRow {
                t,
                mean_ratio: est.mean,
                stderr: est.stderr,
            }
        })
        .collect();
    let xs: Vec<f64> = table.iter().map(|r| (1.0 / r.t).ln()).collect();
    let ys: Vec<f64> = table.iter().map(|r| r.mean_ratio.ln()).collect();
    let fit = ols(&xs, &ys);
    Ok(SublevelFit {
        k_hat: fit.intercept.exp(),
        rho_hat: fit.slope,
        table,
    })
}
