use super::{DataPoint, Dataset};
use crate::error::{invalid, Error, Result};

/// Default cap on the number of packed datasets.
pub const DEFAULT_PACKING_CAP: u64 = 1_000_000;

/// `K = ceil(e^{epsilon n})` datasets on `[0, 1]`, each perfectly separated
/// by its own threshold, with thresholds `eta = e^{-epsilon n}` apart.
#[derive(Debug, Clone)]
pub struct PackedFamily {
    pub epsilon: f64,
    pub n: usize,
    pub eta: f64,
    pub thresholds: Vec<f64>,
    pub datasets: Vec<Dataset>,
    /// Distance of every point from its threshold.
    pub offset: f64,
}

impl PackedFamily {
    pub fn k(&self) -> usize {
        self.thresholds.len()
    }

    /// The closed intervals `[h_i - eta/3, h_i + eta/3]`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.thresholds
            .iter()
            .map(|h| (h - self.eta / 3.0, h + self.eta / 3.0))
            .collect()
    }
}

pub fn packed_datasets(epsilon: f64, n: usize) -> Result<PackedFamily> {
    packed_datasets_with_cap(epsilon, n, DEFAULT_PACKING_CAP)
}

/// Builds the packed family.
///
/// Thresholds are spaced exactly `eta` apart and centred in `[0, 1]`.
/// Points sit at `h_i ± min(eta/6, margin)`, where `margin` is the gap left
/// at either end, so every point stays inside the unit interval. The
/// `floor(n/2)` points below each threshold are labeled 0 and the rest 1.
pub fn packed_datasets_with_cap(epsilon: f64, n: usize, cap: u64) -> Result<PackedFamily> {
    if !(epsilon.is_finite() && epsilon > 0.0) || n == 0 {
        return Err(invalid("packing needs epsilon > 0 and n >= 1"));
    }
    let exponent = epsilon * n as f64;
    let k = exponent.exp().ceil();
    if !k.is_finite() || k > cap as f64 {
        return Err(Error::SizeLimit {
            what: "packed datasets".into(),
            requested: k,
            cap: cap as f64,
        });
    }
    let k = k as usize;
    let eta = (-exponent).exp();
    let span = (k - 1) as f64 * eta;
    let margin = (1.0 - span) / 2.0;
    let offset = (eta / 6.0).min(margin);
    if offset <= 0.0 {
        return Err(invalid(format!(
            "no room to place points: {k} thresholds spaced {eta} apart fill the interval"
        )));
    }
    let below = n / 2;
    let thresholds: Vec<f64> = (0..k).map(|i| margin + i as f64 * eta).collect();
    let datasets = thresholds
        .iter()
        .map(|&h| {
            let points = (0..n)
                .map(|j| {
                    if j < below {
                        DataPoint::labeled(vec![h - offset], 0.0)
                    } else {
                        DataPoint::labeled(vec![h + offset], 1.0)
                    }
                })
                .collect();
            Dataset::new(points)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PackedFamily {
        epsilon,
        n,
        eta,
        thresholds,
        datasets,
        offset,
    })
}
