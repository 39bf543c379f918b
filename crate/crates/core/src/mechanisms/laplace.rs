use rand::Rng;

use super::{EpsilonSchedule, PrivacyBudget};
use crate::error::{invalid, Result};
use crate::problems::{Dataset, PthPowerMean};

/// Bracket width for the ERM bisection.
pub const ERM_TOLERANCE: f64 = 1e-10;

/// Quantile function of the centred Laplace law with scale `b` at `u` in `(0, 1)`.
pub fn laplace_inverse_cdf(u: f64, b: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 || b == 0.0 {
        return 0.0;
    }
    -b * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// Output perturbation for the power-mean problem: exact ERM plus
/// `Laplace(2 / (epsilon(n) n))` noise, clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LaplaceErmMean {
    problem: PthPowerMean,
    epsilon: EpsilonSchedule,
}

impl LaplaceErmMean {
    pub fn new(problem: PthPowerMean, epsilon: impl Into<EpsilonSchedule>) -> Result<Self> {
        let epsilon = epsilon.into();
        let ok = match epsilon {
            EpsilonSchedule::Constant(e) => e > 0.0,
            EpsilonSchedule::Power { scale, .. } => scale > 0.0,
        };
        if !ok {
            return Err(invalid("epsilon must be positive"));
        }
        Ok(Self { problem, epsilon })
    }

    pub fn problem(&self) -> &PthPowerMean {
        &self.problem
    }

    pub fn budget(&self, n: usize) -> PrivacyBudget {
        PrivacyBudget::pure(self.epsilon.at(n))
    }

    pub fn noise_scale(&self, n: usize) -> f64 {
        2.0 / (self.epsilon.at(n) * n as f64)
    }

    pub fn erm(&self, data: &Dataset) -> f64 {
        let xs: Vec<f64> = data.points().iter().map(|z| z.x0()).collect();
        self.problem.erm(&xs, ERM_TOLERANCE)
    }

    /// The output when the noise draw sits at quantile `u`.
    pub fn output_at_quantile(&self, data: &Dataset, u: f64) -> f64 {
        (self.erm(data) + laplace_inverse_cdf(u, self.noise_scale(data.n()))).clamp(0.0, 1.0)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, data: &Dataset, rng: &mut R) -> f64 {
        let u: f64 = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        self.output_at_quantile(data, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::DataPoint;
    use crate::rng::rng_from_seed;
    use crate::stats::MeanEstimate;
    use approx::assert_relative_eq;

    fn constant_data(c: f64, n: usize) -> Dataset {
        Dataset::new(vec![DataPoint::unlabeled(vec![c]); n]).unwrap()
    }

    #[test]
    fn median_noise_returns_erm() {
        let m = LaplaceErmMean::new(PthPowerMean::new(10.0).unwrap(), 0.5).unwrap();
        assert!((m.output_at_quantile(&constant_data(0.42, 9), 0.5) - 0.42).abs() < 1e-9);
    }

    #[test]
    fn infinite_epsilon_is_exact_erm() {
        let m = LaplaceErmMean::new(PthPowerMean::new(10.0).unwrap(), f64::INFINITY).unwrap();
        let z = constant_data(0.7, 5);
        for seed in 0..20 {
            assert_eq!(m.sample_with(&z, &mut rng_from_seed(seed)), m.erm(&z));
        }
    }

    #[test]
    fn laplace_quantiles() {
        assert_relative_eq!(laplace_inverse_cdf(0.75, 2.0), 2.0 * 2f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(laplace_inverse_cdf(0.25, 2.0), -2.0 * 2f64.ln(), epsilon = 1e-14);
        // mean absolute deviation of Laplace(b) is b
        let mut rng = rng_from_seed(8);
        let draws: Vec<f64> = (0..40_000)
            .map(|_| laplace_inverse_cdf(rng.random::<f64>().max(1e-300), 0.3).abs())
            .collect();
        let est = MeanEstimate::from_samples(&draws);
        assert!((est.mean - 0.3).abs() < 4.0 * est.stderr);
    }

    #[test]
    fn output_is_clamped() {
        let m = LaplaceErmMean::new(PthPowerMean::new(10.0).unwrap(), 1e-3).unwrap();
        let z = constant_data(0.5, 3);
        for seed in 0..50 {
            let h = m.sample_with(&z, &mut rng_from_seed(seed));
            assert!((0.0..=1.0).contains(&h));
        }
    }
}
