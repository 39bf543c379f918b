use rand::seq::SliceRandom;
use rand::RngCore;

use super::{
    exponential_log_weights, gumbel_max, Mechanism, MechanismDistribution, PrivacyBudget,
    SharedMechanism,
};
use crate::error::{invalid, Result};
use crate::hypothesis_space::FiniteHypothesisSpace;
use crate::problems::{empirical_risk, Dataset, SharedProblem};
use crate::rng::{rng_from_seed, split_seed};

/// Number of candidate parts for a target failure probability:
/// `ceil(ln(3 / delta))`, at least 1.
pub fn boost_parts(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("target failure probability must lie in (0, 1)"));
    }
    // the tolerance keeps exact logarithms such as ln(e^2) = 2 from rounding up
    Ok(((3.0 / delta).ln() - 1e-9).ceil().max(1.0) as usize)
}

/// One execution of the boosting learner.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostRun {
    pub candidates: Vec<usize>,
    pub validation_risks: Vec<f64>,
    pub selected: usize,
}

/// High-confidence boosting of a private learner.
///
/// The data is shuffled and cut into `a + 1` parts of `floor(n / (a + 1))`
/// points, the remainder going to the last (validation) part. The base
/// learner runs on each of the first `a` parts, and an exponential
/// mechanism with utility `-validation risk` and sensitivity
/// `2 (a + 1) / n` picks one candidate.
#[derive(Debug, Clone)]
pub struct BoostHighConfidence {
    base: SharedMechanism,
    problem: SharedProblem,
    parts: usize,
    epsilon: f64,
    law_samples: usize,
}

impl BoostHighConfidence {
    pub fn new(base: SharedMechanism, problem: SharedProblem, delta: f64, epsilon: f64) -> Result<Self> {
        Self::with_parts(base, problem, boost_parts(delta)?, epsilon)
    }

    pub fn with_parts(base: SharedMechanism, problem: SharedProblem, parts: usize, epsilon: f64) -> Result<Self> {
        if parts == 0 {
            return Err(invalid("need at least one candidate part"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid("epsilon must be positive and finite"));
        }
        Ok(Self {
            base,
            problem,
            parts,
            epsilon,
            law_samples: 4000,
        })
    }

    /// Draws used by [`Mechanism::law`], which is estimated by simulation.
    pub fn with_law_samples(mut self, samples: usize) -> Self {
        self.law_samples = samples.max(1);
        self
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    /// Size of each candidate part at sample size `n`.
    pub fn part_size(&self, n: usize) -> Result<usize> {
        if n < self.parts + 1 {
            return Err(invalid(format!(
                "boosting with {} parts needs n >= {}, got {n}",
                self.parts,
                self.parts + 1
            )));
        }
        Ok(n / (self.parts + 1))
    }

    pub fn run(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<BoostRun> {
        let n = data.n();
        let m = self.part_size(n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let validation = data.subset(&order[self.parts * m..])?;
        let space = self.base.space();
        let mut candidates = Vec::with_capacity(self.parts);
        let mut validation_risks = Vec::with_capacity(self.parts);
        for k in 0..self.parts {
            let part = data.subset(&order[k * m..(k + 1) * m])?;
            let id = self.base.sample_with(&part, rng)?;
            candidates.push(id);
            validation_risks.push(empirical_risk(self.problem.as_ref(), space.payload(id), &validation));
        }
        let utilities: Vec<f64> = validation_risks.iter().map(|r| -r).collect();
        let sensitivity = 2.0 * (self.parts + 1) as f64 / n as f64;
        let w = exponential_log_weights(&utilities, &vec![0.0; self.parts], self.epsilon, sensitivity)?;
        let selected = candidates[gumbel_max(&w, rng)];
        Ok(BoostRun {
            candidates,
            validation_risks,
            selected,
        })
    }
}

impl Mechanism for BoostHighConfidence {
    fn name(&self) -> String {
        format!("boost({})", self.base.name())
    }

    fn budget(&self, n: usize) -> PrivacyBudget {
        let m = (n / (self.parts + 1)).max(1);
        let b = self.base.budget(m);
        PrivacyBudget {
            epsilon: b.epsilon.max(self.epsilon),
            delta: b.delta,
        }
    }

    fn space(&self) -> &FiniteHypothesisSpace {
        self.base.space()
    }

    fn law(&self, data: &Dataset) -> Result<MechanismDistribution> {
        let mut counts = vec![0u64; self.space().len()];
        for t in 0..self.law_samples {
            let mut rng = rng_from_seed(split_seed(0x0b00_57ed, t as u64));
            counts[self.run(data, &mut rng)?.selected] += 1;
        }
        MechanismDistribution::from_counts(&counts)
    }

    fn sample_with(&self, data: &Dataset, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.run(data, rng)?.selected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis_space::{discretize_box, GridSpec};
    use crate::mechanisms::ExponentialMechanism;
    use crate::problems::{DataDistribution, ThresholdClassification};
    use std::sync::Arc;

    fn setup(parts: usize) -> (BoostHighConfidence, Dataset) {
        let problem: SharedProblem = Arc::new(ThresholdClassification::new());
        let space = Arc::new(discretize_box(&GridSpec::unit_interval(16)).unwrap());
        let base: SharedMechanism = Arc::new(ExponentialMechanism::new(problem.clone(), space, 1.0).unwrap());
        let z = DataDistribution::LabeledThreshold { theta: 0.3, flip: 0.1 }
            .sample_dataset(40, &mut rng_from_seed(2))
            .unwrap();
        (BoostHighConfidence::with_parts(base, problem, parts, 1.0).unwrap(), z)
    }

    #[test]
    fn part_count_rule() {
        assert_eq!(boost_parts(3.0 * (-2f64).exp()).unwrap(), 2);
        assert_eq!(boost_parts(0.1).unwrap(), 4);
        assert_eq!(boost_parts(0.3).unwrap(), 3);
        assert!(boost_parts(0.0).is_err());
    }

    #[test]
    fn single_candidate_is_selected_with_certainty() {
        let (b, z) = setup(1);
        for seed in 0..10 {
            let run = b.run(&z, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(run.candidates.len(), 1);
            assert_eq!(run.selected, run.candidates[0]);
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        let (b, _) = setup(4);
        let z = DataDistribution::LabeledThreshold { theta: 0.3, flip: 0.1 }
            .sample_dataset(4, &mut rng_from_seed(2))
            .unwrap();
        assert!(b.sample(&z, 0).is_err());
    }

    #[test]
    fn runs_are_seed_deterministic_and_budget_is_a_max() {
        let (b, z) = setup(3);
        assert_eq!(b.run(&z, &mut rng_from_seed(5)).unwrap(), b.run(&z, &mut rng_from_seed(5)).unwrap());
        assert_eq!(b.budget(40), PrivacyBudget::pure(1.0));
        assert!(!b.law(&z).unwrap().is_exact());
    }
}
