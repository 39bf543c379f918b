use super::{DataDistribution, DataPoint, Domain, LabelKind, Problem};
use crate::error::{invalid, Result};
use crate::hypothesis_space::Payload;

/// Location estimation on `[0, 1]` with loss `|x - h|^p`.
#[derive(Debug, Clone)]
pub struct PthPowerMean {
    p: f64,
    domain: Domain,
}

impl PthPowerMean {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(invalid("power must be finite and at least 1"));
        }
        Ok(Self {
            p,
            domain: Domain::unit_box(1, LabelKind::None),
        })
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    /// `d/dh Σ |x_i - h|^p`, nondecreasing in `h`.
    pub fn derivative(&self, xs: &[f64], h: f64) -> f64 {
        let q = self.p - 1.0;
        if q.fract() == 0.0 && q <= 64.0 {
            // integer powers: r^q already carries the sign when q is odd
            let q = q as i32;
            let odd = q % 2 == 1;
            let s: f64 = xs
                .iter()
                .map(|&x| {
                    let r = h - x;
                    if odd {
                        r.powi(q)
                    } else {
                        r.powi(q) * r.signum()
                    }
                })
                .sum();
            return self.p * s;
        }
        xs.iter()
            .map(|&x| {
                let r = h - x;
                self.p * r.abs().powf(q) * r.signum()
            })
            .sum()
    }

    /// Minimizer of `Σ |x_i - h|^p` over `[0, 1]`, by bisection on the
    /// derivative until the bracket is narrower than `tol`.
    pub fn erm(&self, xs: &[f64], tol: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if self.derivative(xs, lo) >= 0.0 {
            return lo;
        }
        if self.derivative(xs, hi) <= 0.0 {
            return hi;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.derivative(xs, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn risk_uniform(&self, h: f64) -> f64 {
        let h = h.clamp(0.0, 1.0);
        (h.powf(self.p + 1.0) + (1.0 - h).powf(self.p + 1.0)) / (self.p + 1.0)
    }
}

impl Problem for PthPowerMean {
    fn name(&self) -> &str {
        "pth_power_mean"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn loss(&self, h: &Payload, z: &DataPoint) -> f64 {
        let h = h.scalar().expect("power-mean hypotheses are scalars");
        (z.x0() - h).abs().powf(self.p).min(1.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.p)
    }

    fn closed_form_risk(&self, h: &Payload, distribution: &DataDistribution) -> Option<f64> {
        match distribution {
            DataDistribution::UniformBox { lower, upper }
                if lower.as_slice() == [0.0] && upper.as_slice() == [1.0] =>
            {
                Some(self.risk_uniform(h.scalar()?))
            }
            _ => None,
        }
    }
}
