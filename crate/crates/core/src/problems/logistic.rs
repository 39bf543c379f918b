use super::distribution::dot;
use super::{DataPoint, Domain, LabelKind, Problem};
use crate::error::{invalid, Result};
use crate::hypothesis_space::{GridSpec, Payload};

/// Logistic regression on `[0,1]^d` features with weights in `[-B, B]^d`.
///
/// The raw loss `ln(1 + exp(-s <w, x>))`, `s = ±1`, never exceeds
/// `ln(1 + exp(B d))` on this domain, so dividing by that constant keeps
/// the loss in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LinearLogistic {
    d: usize,
    bound: f64,
    scale: f64,
    domain: Domain,
}

impl LinearLogistic {
    pub fn new(d: usize, bound: f64) -> Result<Self> {
        if d == 0 || !(bound.is_finite() && bound > 0.0) {
            return Err(invalid("logistic problem needs d >= 1 and a positive weight bound"));
        }
        let m = bound * d as f64;
        // ln(1 + e^m) without overflow
        let scale = m + (-m).exp().ln_1p();
        Ok(Self {
            d,
            bound,
            scale,
            domain: Domain::unit_box(d, LabelKind::Binary),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The rescaling constant `ln(1 + e^{B d})`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Weight box `[-B, B]^d` at the given resolution per axis.
    pub fn weight_grid(&self, resolution: usize) -> Result<GridSpec> {
        GridSpec::new(
            vec![-self.bound; self.d],
            vec![self.bound; self.d],
            vec![resolution; self.d],
        )
    }
}

impl Problem for LinearLogistic {
    fn name(&self) -> &str {
        "linear_logistic"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn loss(&self, h: &Payload, z: &DataPoint) -> f64 {
        let w = h.as_vector().expect("logistic hypotheses are vectors");
        let s = if z.label == Some(1.0) { 1.0 } else { -1.0 };
        let u = -s * dot(w, &z.x);
        let raw = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
        (raw / self.scale).min(1.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some((self.d as f64).sqrt() / self.scale)
    }
}
