use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypothesis_space::sublevel_set;
use crate::mechanisms::{objective_sensitivity, ExponentialMechanism, Mechanism};
use crate::problems::{objectives, Dataset, Problem};

/// `E_{h~A(Z)} R̂(h, Z) - min_h R̂(h, Z)`, computed from the exact law.
pub fn aerm_gap(mechanism: &dyn Mechanism, problem: &dyn Problem, data: &Dataset) -> Result<f64> {
    let law = mechanism.law(data)?;
    let risks = problem.empirical_risks(mechanism.space(), data);
    let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((law.expectation(&risks) - min).max(0.0))
}

/// Both printed forms of the AERM bound for the exponential mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AermBound {
    /// `9 [(rho + 2) ln n + ln K] / (n eps) + 2 zeta`; the one checked.
    pub checked: f64,
    /// `9 [(rho + 2) ln n - ln K] / (n eps) + zeta`; reported only.
    pub alternative: f64,
}

pub fn aerm_bound(n: usize, epsilon: f64, k: f64, rho: f64, zeta: f64) -> AermBound {
    let nf = n as f64;
    let base = (rho + 2.0) * nf.ln();
    AermBound {
        checked: 9.0 * (base + k.ln()) / (nf * epsilon) + 2.0 * zeta,
        alternative: 9.0 * (base - k.ln()) / (nf * epsilon) + zeta,
    }
}

/// One row of the utility tail comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// `P_{h~A(Z)}[F(Z, h) > min F + 2t]`.
    pub lhs: f64,
    /// `mu(H)/mu(S_t) exp(-(eps n / 4) t)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Exact check of the exponential mechanism's utility tail at every `t`.
pub fn utility_tail_check(
    mechanism: &ExponentialMechanism,
    data: &Dataset,
    t_grid: &[f64],
) -> Result<Vec<TailRow>> {
    if t_grid.is_empty() {
        return Err(invalid("t grid is empty"));
    }
    let space = mechanism.space();
    let f = objectives(mechanism.problem().as_ref(), space, data);
    let law = mechanism.law(data)?;
    let f_min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let n = data.n();
    let scale = mechanism.epsilon_at(n) / (2.0 * objective_sensitivity(n));
    t_grid
        .iter()
        .map(|&t| {
            let report = sublevel_set(space, &f, t)?;
            let lhs: f64 = law
                .probabilities()
                .iter()
                .zip(&f)
                .filter(|(_, v)| **v > f_min + 2.0 * t)
                .map(|(p, _)| p)
                .sum();
            let rhs = report.ratio * (-scale * t).exp();
            Ok(TailRow {
                t,
                lhs,
                rhs,
                holds: lhs <= rhs + 1e-12,
            })
        })
        .collect()
}
