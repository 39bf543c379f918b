use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{packed_datasets, DataPoint, Dataset};
use crate::error::{invalid, Result};

/// A data-generating distribution `D` on `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataDistribution {
    /// Unlabeled points uniform on a box.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// Finite support with explicit probabilities.
    Discrete {
        points: Vec<DataPoint>,
        probabilities: Vec<f64>,
    },
    /// Uniform over every point of a packed threshold family.
    PackedInterval { points: Vec<DataPoint> },
    /// `x ~ U[0,1]`, `y = 1(x > theta)` flipped with probability `flip`.
    LabeledThreshold { theta: f64, flip: f64 },
    /// `x ~ U[0,1]^d`, `y = <w, x>/sqrt(d) + U[-noise, noise]`, clipped to `[-1, 1]`.
    LinearRegression { weights: Vec<f64>, noise: f64 },
    /// `x ~ U[0,1]^d`, `P(y = 1 | x) = sigmoid(<w, x>)`.
    LinearLogistic { weights: Vec<f64> },
}

impl DataDistribution {
    pub fn discrete(points: Vec<DataPoint>, probabilities: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probabilities.len() {
            return Err(invalid("discrete distribution needs one probability per point"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self::Discrete {
            points,
            probabilities,
        })
    }

    pub fn discrete_uniform(points: Vec<DataPoint>) -> Result<Self> {
        let k = points.len().max(1);
        Self::discrete(points, vec![1.0 / k as f64; k])
    }

    /// Uniform over the points of `packed_datasets(epsilon, n)`.
    pub fn packed_interval(epsilon: f64, n: usize) -> Result<Self> {
        let family = packed_datasets(epsilon, n)?;
        let points = family
            .datasets
            .iter()
            .flat_map(|z| z.points().iter().cloned())
            .collect();
        Ok(Self::PackedInterval { points })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::UniformBox { .. } => "uniform-box",
            Self::Discrete { .. } => "discrete",
            Self::PackedInterval { .. } => "packed-interval",
            Self::LabeledThreshold { .. } => "labeled-threshold",
            Self::LinearRegression { .. } => "linear-regression",
            Self::LinearLogistic { .. } => "linear-logistic",
        }
    }

    /// Exact support and probabilities for discrete kinds.
    pub fn support(&self) -> Option<Vec<(DataPoint, f64)>> {
        match self {
            Self::Discrete {
                points,
                probabilities,
            } => Some(points.iter().cloned().zip(probabilities.iter().copied()).collect()),
            Self::PackedInterval { points } => {
                let p = 1.0 / points.len() as f64;
                Some(points.iter().map(|z| (z.clone(), p)).collect())
            }
            _ => None,
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DataPoint> {
        Ok(match self {
            Self::UniformBox { lower, upper } => {
                if lower.len() != upper.len() || lower.iter().zip(upper).any(|(l, u)| l >= u) {
                    return Err(invalid("uniform box needs lower < upper in every dimension"));
                }
                DataPoint::unlabeled(
                    lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                        .collect(),
                )
            }
            Self::Discrete {
                points,
                probabilities,
            } => {
                let idx = WeightedIndex::new(probabilities)
                    .map_err(|e| invalid(format!("discrete distribution: {e}")))?;
                points[idx.sample(rng)].clone()
            }
            Self::PackedInterval { points } => {
                if points.is_empty() {
                    return Err(invalid("packed distribution has no points"));
                }
                points[rng.random_range(0..points.len())].clone()
            }
            Self::LabeledThreshold { theta, flip } => {
                if !(0.0..=0.5).contains(flip) {
                    return Err(invalid("label flip probability must lie in [0, 0.5]"));
                }
                let x: f64 = rng.random();
                let clean = if x > *theta { 1.0 } else { 0.0 };
                let y = if rng.random::<f64>() < *flip { 1.0 - clean } else { clean };
                DataPoint::labeled(vec![x], y)
            }
            Self::LinearRegression { weights, noise } => {
                let d = weights.len();
                if d == 0 {
                    return Err(invalid("regression weights must be nonempty"));
                }
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let mean = dot(weights, &x) / (d as f64).sqrt();
                let e = noise * (2.0 * rng.random::<f64>() - 1.0);
                DataPoint::labeled(x, (mean + e).clamp(-1.0, 1.0))
            }
            Self::LinearLogistic { weights } => {
                if weights.is_empty() {
                    return Err(invalid("logistic weights must be nonempty"));
                }
                let x: Vec<f64> = weights.iter().map(|_| rng.random::<f64>()).collect();
                let p = 1.0 / (1.0 + (-dot(weights, &x)).exp());
                let y = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                DataPoint::labeled(x, y)
            }
        })
    }

    /// An i.i.d. sample of size `n`.
    pub fn sample_dataset<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let points = (0..n).map(|_| self.sample_point(rng)).collect::<Result<Vec<_>>>()?;
        Dataset::new(points)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn sampling_is_seed_deterministic() {
        let d = DataDistribution::LabeledThreshold {
            theta: 0.3,
            flip: 0.1,
        };
        let a = d.sample_dataset(20, &mut rng_from_seed(9)).unwrap();
        let b = d.sample_dataset(20, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn discrete_support_round_trips() {
        let pts = vec![
            DataPoint::labeled(vec![0.2], 1.0),
            DataPoint::labeled(vec![0.8], 0.0),
        ];
        let d = DataDistribution::discrete(pts.clone(), vec![0.25, 0.75]).unwrap();
        let s = d.support().unwrap();
        assert_eq!(s[1], (pts[1].clone(), 0.75));
        assert!(DataDistribution::discrete(pts, vec![0.5, 0.6]).is_err());
        assert!(DataDistribution::UniformBox {
            lower: vec![0.0],
            upper: vec![1.0]
        }
        .support()
        .is_none());
    }

    #[test]
    fn regression_labels_stay_bounded() {
        let d = DataDistribution::LinearRegression {
            weights: vec![1.0, 1.0],
            noise: 0.9,
        };
        let z = d.sample_dataset(500, &mut rng_from_seed(1)).unwrap();
        assert!(z.points().iter().all(|p| p.label.unwrap().abs() <= 1.0));
    }
}
