use super::{DataDistribution, DataPoint, Dataset, Domain, LabelKind, Problem};
use crate::hypothesis_space::{FiniteHypothesisSpace, Payload};

/// Threshold classifiers on `[0, 1]` with 0-1 loss: `h_tau(x) = 1(x > tau)`.
#[derive(Debug, Clone)]
pub struct ThresholdClassification {
    domain: Domain,
}

impl Default for ThresholdClassification {
    fn default() -> Self {
        Self::new()
    }
}

impl ThresholdClassification {
    pub fn new() -> Self {
        Self {
            domain: Domain::unit_box(1, LabelKind::Binary),
        }
    }

    pub fn predict(tau: f64, x: f64) -> f64 {
        if x > tau {
            1.0
        } else {
            0.0
        }
    }

    /// Every point of `xs` with both labels, in that order.
    pub fn universe(xs: &[f64]) -> Vec<DataPoint> {
        xs.iter()
            .flat_map(|&x| [DataPoint::labeled(vec![x], 0.0), DataPoint::labeled(vec![x], 1.0)])
            .collect()
    }
}

fn tau_of(h: &Payload) -> f64 {
    h.scalar().expect("threshold hypotheses are scalars")
}

impl Problem for ThresholdClassification {
    fn name(&self) -> &str {
        "threshold"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn loss(&self, h: &Payload, z: &DataPoint) -> f64 {
        let y = z.label.expect("threshold data is labeled");
        if Self::predict(tau_of(h), z.x0()) == y {
            0.0
        } else {
            1.0
        }
    }

    // errors(tau) = #{y=1, x <= tau} + #{y=0, x > tau}, by binary search
    fn empirical_risks(&self, space: &FiniteHypothesisSpace, data: &Dataset) -> Vec<f64> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for z in data.points() {
            if z.label == Some(1.0) {
                pos.push(z.x0());
            } else {
                neg.push(z.x0());
            }
        }
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        let n = data.n() as f64;
        space
            .hypotheses()
            .iter()
            .map(|h| {
                let tau = tau_of(&h.payload);
                let fn_ = pos.partition_point(|&x| x <= tau);
                let fp = neg.len() - neg.partition_point(|&x| x <= tau);
                (fn_ + fp) as f64 / n
            })
            .collect()
    }

    fn closed_form_risk(&self, h: &Payload, distribution: &DataDistribution) -> Option<f64> {
        match distribution {
            DataDistribution::LabeledThreshold { theta, flip } => {
                let tau = tau_of(h).clamp(0.0, 1.0);
                let theta = theta.clamp(0.0, 1.0);
                Some(flip + (1.0 - 2.0 * flip) * (tau - theta).abs())
            }
            _ => None,
        }
    }
}
