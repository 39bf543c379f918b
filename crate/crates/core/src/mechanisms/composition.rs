use std::sync::Arc;

use rand::RngCore;

use super::{
    exponential_log_weights, gumbel_max, objective_sensitivity, Mechanism,
    MechanismDistribution, PrivacyBudget,
};
use crate::error::{invalid, Result};
use crate::hypothesis_space::FiniteHypothesisSpace;
use crate::problems::{objectives, BestSubsetRegression, Dataset, SparseSpace};

/// Private best subset selection in two exponential-mechanism stages, each
/// at `epsilon / 2`: first a support `S` with utility
/// `-min_{h in H_S} F(Z, h)`, then a point of `H_S` with utility `-F(Z, h)`.
#[derive(Debug, Clone)]
pub struct TwoStageSubsetSelection {
    problem: Arc<BestSubsetRegression>,
    sparse: Arc<SparseSpace>,
    epsilon: f64,
    offsets: Vec<usize>,
}

impl TwoStageSubsetSelection {
    pub fn new(problem: Arc<BestSubsetRegression>, sparse: Arc<SparseSpace>, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid("epsilon must be positive and finite"));
        }
        let mut offsets = Vec::with_capacity(sparse.per_support.len());
        let mut acc = 0;
        for s in &sparse.per_support {
            offsets.push(acc);
            acc += s.len();
        }
        Ok(Self {
            problem,
            sparse,
            epsilon,
            offsets,
        })
    }

    fn stage_log_weights(&self, data: &Dataset) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let f = objectives(self.problem.as_ref(), &self.sparse.union, data);
        let sens = objective_sensitivity(data.n());
        let half = self.epsilon / 2.0;
        let mut support_utility = Vec::with_capacity(self.offsets.len());
        let mut inner = Vec::with_capacity(self.offsets.len());
        for (k, space) in self.sparse.per_support.iter().enumerate() {
            let block = &f[self.offsets[k]..self.offsets[k] + space.len()];
            support_utility.push(-block.iter().copied().fold(f64::INFINITY, f64::min));
            let u: Vec<f64> = block.iter().map(|v| -v).collect();
            inner.push(exponential_log_weights(&u, space.log_weights(), half, sens)?);
        }
        let outer = exponential_log_weights(
            &support_utility,
            &vec![0.0; support_utility.len()],
            half,
            sens,
        )?;
        Ok((outer, inner))
    }

    /// Law of the stage-one support choice.
    pub fn support_law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let (outer, _) = self.stage_log_weights(data)?;
        MechanismDistribution::from_log_weights(&outer)
    }
}

impl Mechanism for TwoStageSubsetSelection {
    fn name(&self) -> String {
        "two_stage".into()
    }

    fn budget(&self, _n: usize) -> PrivacyBudget {
        PrivacyBudget::pure(self.epsilon)
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        &self.sparse.union
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let (outer, inner) = self.stage_log_weights(data)?;
        let support = MechanismDistribution::from_log_weights(&outer)?;
        let mut p = Vec::with_capacity(self.sparse.union.len());
        for (ps, w) in support.probabilities().iter().zip(&inner) {
            let cond = MechanismDistribution::from_log_weights(w)?;
            p.extend(cond.probabilities().iter().map(|q| ps * q));
        }
        MechanismDistribution::from_probabilities(p, true)
    }

    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        let (outer, inner) = self.stage_log_weights(data)?;
        let k = gumbel_max(&outer, rng);
        Ok(self.offsets[k] + gumbel_max(&inner[k], rng))
    }
}
