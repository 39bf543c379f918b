//! Small numerical helpers shared by the mechanisms and the harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `log(sum(exp(x)))`, stable for large magnitudes. Returns `-inf` for an
/// empty slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var =
                samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            count,
        }
    }

    /// An exactly known value.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            count: 1,
        }
    }
}

/// `sqrt(a² + b²)`, the standard error of a difference of independent means.
pub fn pooled_stderr(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Ordinary least squares fit `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

/// Fits a line by least squares. With a single point, or when every `x` is
/// identical, the slope is 0 and the intercept is the mean of `y`.
pub fn ols(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len(), "ols: length mismatch");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * n.max(1.0) {
        return LinearFit {
            intercept: my,
            slope: 0.0,
        };
    }
    let slope = sxy / sxx;
    LinearFit {
        intercept: my - slope * mx,
        slope,
    }
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against category
/// probabilities. Categories whose expected count is below 5 are pooled
/// (in index order) so the asymptotic distribution applies.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probabilities.len());
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut acc_obs, mut acc_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        acc_obs += o as f64;
        acc_exp += p * total;
        if acc_exp >= 5.0 {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => bins.push((acc_obs, acc_exp)),
        }
    }
    let statistic: f64 = bins
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        p_value,
    }
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// the uniform distribution on `[lower, upper]`.
pub fn ks_uniform_statistic(samples: &[f64], lower: f64, upper: f64) -> f64 {
    let mut sorted: Vec<f64> = samples
        .iter()
        .map(|x| ((x - lower) / (upper - lower)).clamp(0.0, 1.0))
        .collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let lo = u - i as f64 / n;
            let hi = (i + 1) as f64 / n - u;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 1%.
pub fn ks_critical_1pct(sample_size: usize) -> f64 {
    1.6276 / (sample_size as f64).sqrt()
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lse_matches_naive_and_survives_overflow() {
        let v = [0.1, -2.0, 3.5];
        let naive = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&v), naive, epsilon = 1e-14);
        assert_relative_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln(), epsilon = 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn ols_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = ols(&xs, &ys);
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 2.0, epsilon = 1e-12);
        let single = ols(&[1.0], &[4.0]);
        assert_eq!(single.slope, 0.0);
        assert_eq!(single.intercept, 4.0);
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m.mean, 2.5);
        // sample sd = sqrt(5/3), se = sd / 2
        assert_relative_eq!(m.stderr, (5.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_square_perfect_fit_and_gross_misfit() {
        let p = [0.25; 4];
        let perfect = chi_square_gof(&[250, 250, 250, 250], &p);
        assert_relative_eq!(perfect.statistic, 0.0);
        assert!(perfect.p_value > 0.999);
        let bad = chi_square_gof(&[1000, 0, 0, 0], &p);
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        let p = [0.9, 0.05, 0.03, 0.02];
        let t = chi_square_gof(&[90, 5, 3, 2], &p);
        // expected counts 90, 5, 3+2 -> three bins, two degrees of freedom
        assert_eq!(t.degrees_of_freedom, 2);
    }

    #[test]
    fn ks_and_tv() {
        let samples: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!(ks_uniform_statistic(&samples, 0.0, 1.0) <= 0.0051);
        assert_relative_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
    }
}
