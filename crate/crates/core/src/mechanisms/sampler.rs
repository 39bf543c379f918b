use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::PrivacyBudget;
use crate::error::{invalid, Result};
use crate::hypothesis_space::Payload;
use crate::problems::{objective, Dataset, SharedProblem};
use crate::rng::rng_from_seed;

/// Random-walk Metropolis on a box targeting the continuous exponential
/// mechanism density `∝ exp(-(epsilon n / 4) F(Z, h))`.
///
/// Only approximate: the chain's law approaches the target as the number
/// of steps grows, so the privacy guarantee holds only in that limit.
#[derive(Debug, Clone)]
pub struct MetropolisSampler {
    problem: SharedProblem,
    lower: Vec<f64>,
    upper: Vec<f64>,
    epsilon: f64,
    steps: usize,
    burn_in: usize,
    step_size: f64,
}

/// Post-burn-in states of one chain and its acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

impl MetropolisSampler {
    /// `step_size` is the proposal standard deviation as a fraction of each
    /// side of the box.
    pub fn new(
        problem: SharedProblem,
        lower: Vec<f64>,
        upper: Vec<f64>,
        epsilon: f64,
        steps: usize,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("the chain needs at least one step"));
        }
        if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return Err(invalid("sampler box needs lower < upper in every dimension"));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(invalid("epsilon must be finite and nonnegative"));
        }
        Ok(Self {
            problem,
            lower,
            upper,
            epsilon,
            steps,
            burn_in: steps / 10,
            step_size: 0.25,
        })
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_step_size(mut self, step_size: f64) -> Self {
        self.step_size = step_size;
        self
    }

    pub fn asymptotic_budget(&self) -> PrivacyBudget {
        PrivacyBudget::pure(self.epsilon)
    }

    fn log_target(&self, data: &Dataset, h: &[f64]) -> f64 {
        let f = objective(self.problem.as_ref(), &Payload::Vector(h.to_vec()), data);
        -(self.epsilon * data.n() as f64 / 4.0) * f
    }

    pub fn run_chain(&self, data: &Dataset, seed: u64) -> Result<Chain> {
        if self.step_size.is_nan() || self.step_size <= 0.0 {
            return Err(invalid("proposal step size must be positive"));
        }
        let mut rng = rng_from_seed(seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let width: Vec<f64> = self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect();
        let mut state: Vec<f64> = self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let mut log_p = self.log_target(data, &state);
        let mut accepted = 0usize;
        let mut samples = Vec::with_capacity(self.steps.saturating_sub(self.burn_in));
        for step in 0..self.steps {
            let proposal: Vec<f64> = state
                .iter()
                .zip(&width)
                .map(|(x, w)| x + self.step_size * w * std.sample(&mut rng))
                .collect();
            let inside = proposal
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u);
            if inside {
                let log_q = self.log_target(data, &proposal);
                if !log_q.is_finite() {
                    return Err(crate::error::Error::Evaluation("non-finite objective in chain".into()));
                }
                if rng.random::<f64>().ln() < log_q - log_p {
                    state = proposal;
                    log_p = log_q;
                    accepted += 1;
                }
            }
            if step >= self.burn_in {
                samples.push(state.clone());
            }
        }
        Ok(Chain {
            samples,
            acceptance_rate: accepted as f64 / self.steps as f64,
        })
    }

    /// Final state of a chain.
    pub fn sample(&self, data: &Dataset, seed: u64) -> Result<Vec<f64>> {
        let chain = self.with_burn_in_last().run_chain(data, seed)?;
        Ok(chain.samples.last().cloned().expect("at least one step"))
    }

    fn with_burn_in_last(&self) -> Self {
        let mut s = self.clone();
        s.burn_in = self.steps - 1;
        s
    }
}
