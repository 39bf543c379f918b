//! Learning problems `(Z, H, ℓ)` with losses bounded in `[0, 1]`, datasets,
//! data distributions and risk computations.

mod best_subset;
mod distribution;
mod finite_support;
mod logistic;
mod packing;
mod power_mean;
mod threshold;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypothesis_space::{FiniteHypothesisSpace, Payload};
use crate::rng::rng_from_seed;
use crate::stats::MeanEstimate;

pub use best_subset::{BestSubsetRegression, SparseSpace};
pub use distribution::DataDistribution;
pub(crate) use finite_support::binomial;
pub use finite_support::FiniteSupportEstimation;
pub use logistic::LinearLogistic;
pub use packing::{packed_datasets, PackedFamily, DEFAULT_PACKING_CAP};
pub use power_mean::PthPowerMean;
pub use threshold::ThresholdClassification;

/// A single observation: a feature vector and an optional label.
///
/// Binary labels are stored as `0.0` / `1.0`; regression responses use the
/// same slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub label: Option<f64>,
}

impl DataPoint {
    pub fn unlabeled(x: Vec<f64>) -> Self {
        Self { x, label: None }
    }

    pub fn labeled(x: Vec<f64>, label: f64) -> Self {
        Self {
            x,
            label: Some(label),
        }
    }

    /// First coordinate of the feature vector.
    pub fn x0(&self) -> f64 {
        self.x[0]
    }
}

/// An ordered, nonempty sample `Z = (z_1, ..., z_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<DataPoint>,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("a dataset needs at least one point"));
        }
        Ok(Self { points })
    }

    /// Validates every point against `domain`.
    pub fn new_in(points: Vec<DataPoint>, domain: &Domain) -> Result<Self> {
        if let Some((i, _)) = points.iter().enumerate().find(|(_, p)| !domain.contains(p)) {
            return Err(invalid(format!("data point {i} lies outside the problem domain")));
        }
        Self::new(points)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    /// The sub-dataset at the given positions, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .map(|&i| {
                self.points
                    .get(i)
                    .cloned()
                    .ok_or_else(|| invalid(format!("subset index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// A copy with position `index` replaced by `point`.
    pub fn replaced(&self, index: usize, point: DataPoint) -> Self {
        let mut points = self.points.clone();
        points[index] = point;
        Self { points }
    }

    /// CSV text: one point per row, features first, label column last.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let mut fields: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
            if let Some(y) = p.label {
                fields.push(y.to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// What kind of label a problem expects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LabelKind {
    None,
    Binary,
    Real { lower: f64, upper: f64 },
}

/// Data-domain descriptor: a feature box and a label kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub label: LabelKind,
}

impl Domain {
    pub fn unit_box(dim: usize, label: LabelKind) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &DataPoint) -> bool {
        if p.x.len() != self.dim() {
            return false;
        }
        let in_box = p
            .x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi);
        let label_ok = match (self.label, p.label) {
            (LabelKind::None, None) => true,
            (LabelKind::Binary, Some(y)) => y == 0.0 || y == 1.0,
            (LabelKind::Real { lower, upper }, Some(y)) => lower <= y && y <= upper,
            _ => false,
        };
        in_box && label_ok
    }
}

/// A learning problem in the general learning setting.
///
/// Implementations must keep `loss` inside `[0, 1]` for every hypothesis
/// in their spaces and every point in their domain; the sensitivity of
/// every mechanism in this crate relies on it.
pub trait Problem: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn domain(&self) -> &Domain;

    /// `ℓ(h, z) ∈ [0, 1]`.
    fn loss(&self, h: &Payload, z: &DataPoint) -> f64;

    /// `g_n(h)`, a data-independent regularizer. Defaults to zero.
    fn regularizer(&self, _n: usize, _h: &Payload) -> f64 {
        0.0
    }

    /// An upper bound on `sup_h |g_n(h)|`.
    fn zeta(&self, _n: usize) -> f64 {
        0.0
    }

    /// Lipschitz constant of `ℓ(·, z)` in `h`, when one is known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Empirical risk of every hypothesis of `space` on `data`.
    ///
    /// Problems with structure may override this with a faster routine;
    /// overrides must agree with the default to the last bit.
    fn empirical_risks(&self, space: &FiniteHypothesisSpace, data: &Dataset) -> Vec<f64> {
        let n = data.n() as f64;
        space
            .hypotheses()
            .iter()
            .map(|h| data.points().iter().map(|z| self.loss(&h.payload, z)).sum::<f64>() / n)
            .collect()
    }

    /// Exact population risk under a distribution without enumerable
    /// support, when the problem knows a closed form.
    fn closed_form_risk(&self, _h: &Payload, _distribution: &DataDistribution) -> Option<f64> {
        None
    }
}

/// Reference-counted problem handle used by mechanisms.
pub type SharedProblem = Arc<dyn Problem>;

/// `R̂(h, Z) = (1/n) Σ ℓ(h, z_i)`.
pub fn empirical_risk(problem: &dyn Problem, h: &Payload, data: &Dataset) -> f64 {
    data.points().iter().map(|z| problem.loss(h, z)).sum::<f64>() / data.n() as f64
}

/// `F(Z, h) = R̂(h, Z) + g_n(h)`.
pub fn objective(problem: &dyn Problem, h: &Payload, data: &Dataset) -> f64 {
    empirical_risk(problem, h, data) + problem.regularizer(data.n(), h)
}

/// `F(Z, h)` for every hypothesis of `space`.
pub fn objectives(problem: &dyn Problem, space: &FiniteHypothesisSpace, data: &Dataset) -> Vec<f64> {
    let n = data.n();
    let mut values = problem.empirical_risks(space, data);
    for (v, h) in values.iter_mut().zip(space.hypotheses()) {
        *v += problem.regularizer(n, &h.payload);
    }
    values
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Empirical risk minimizer over a finite space, lowest id on ties.
pub fn erm(problem: &dyn Problem, space: &FiniteHypothesisSpace, data: &Dataset) -> usize {
    argmin(&problem.empirical_risks(space, data))
}

/// How a population risk is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `R(h) = E_{z~D} ℓ(h, z)`, exactly or by Monte Carlo. Exact mode
/// enumerates the support when it is finite and otherwise asks the problem
/// for a closed form.
pub fn population_risk(
    problem: &dyn Problem,
    distribution: &DataDistribution,
    h: &Payload,
    mode: RiskMode,
) -> Result<MeanEstimate> {
    match mode {
        RiskMode::Exact => {
            if let Some(support) = distribution.support() {
                let value = support.iter().map(|(z, p)| p * problem.loss(h, z)).sum();
                return Ok(MeanEstimate::exact(value));
            }
            problem
                .closed_form_risk(h, distribution)
                .map(MeanEstimate::exact)
                .ok_or_else(|| Error::NotEnumerable(distribution.kind_name().into()))
        }
        RiskMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(invalid("Monte Carlo risk needs at least 2 samples"));
            }
            let mut rng = rng_from_seed(seed);
            let losses: Vec<f64> = (0..samples)
                .map(|_| distribution.sample_point(&mut rng).map(|z| problem.loss(h, &z)))
                .collect::<Result<_>>()?;
            Ok(MeanEstimate::from_samples(&losses))
        }
    }
}

/// Exact population risks of every hypothesis in `space`.
pub fn population_risks(
    problem: &dyn Problem,
    distribution: &DataDistribution,
    space: &FiniteHypothesisSpace,
) -> Result<Vec<f64>> {
    space
        .hypotheses()
        .iter()
        .map(|h| population_risk(problem, distribution, &h.payload, RiskMode::Exact).map(|e| e.mean))
        .collect()
}

/// `λ‖h‖² / √n`, the default schedule for regression-type problems.
pub fn ridge_sqrt(lambda: f64, n: usize, h: &[f64]) -> f64 {
    lambda * h.iter().map(|v| v * v).sum::<f64>() / (n as f64).sqrt()
}

/// Looks up a shipped problem by its configuration name.
pub fn problem_by_name(name: &str) -> Result<SharedProblem> {
    Ok(match name {
        "threshold" | "threshold_classification" => Arc::new(ThresholdClassification::new()),
        "linear_logistic" => Arc::new(LinearLogistic::new(2, 2.0)?),
        "pth_power_mean" => Arc::new(PthPowerMean::new(10.0)?),
        "best_subset_regression" => Arc::new(BestSubsetRegression::new(4, 2, 0.1)?),
        "finite_support_estimation" => Arc::new(FiniteSupportEstimation::new(8, 2)?),
        other => return Err(invalid(format!("unknown problem `{other}`"))),
    })
}

/// Names accepted by [`problem_by_name`].
pub const PROBLEM_NAMES: &[&str] = &[
    "threshold",
    "linear_logistic",
    "pth_power_mean",
    "best_subset_regression",
    "finite_support_estimation",
];
