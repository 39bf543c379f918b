//! Exact auditors for privacy, stability, AERM and utility guarantees, the
//! consistency decomposition, and the experiment drivers.

mod audit;
mod bounds;
mod consistency;
mod experiments;

use serde::{Deserialize, Serialize};

pub use audit::{
    audit_approx_dp, audit_dp, audit_pure_dp, hockey_stick, stability_audit, stability_bound,
    stability_bound_small, AuditReport, DatasetFamily, StabilityReport, Witness,
    DEFAULT_RANDOM_PAIRS, EXHAUSTIVE_CAP,
};
pub use bounds::{aerm_bound, aerm_gap, utility_tail_check, AermBound, TailRow};
pub use consistency::{consistency_suite, ConsistencyMode, Estimate, GapReport, FALLBACK_TRIALS};
pub use experiments::{
    boost_experiment, counterexample_experiment, phase_transition_experiment, rates_experiment,
    BoostConfig, BoostReport, BoostRow, CounterexampleReport, CounterexampleRow, PhaseConfig,
    PhaseReport, PhaseRow, RatesConfig, RatesReport, RatesRow, COUNTEREXAMPLE_THRESHOLD,
};

/// Cap on `|support|^n` for exact expectations over `D^n`.
pub const EXACT_ENUMERATION_CAP: u64 = 1_000_000;

/// One line of an experiment's tabular output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub mechanism: String,
    pub problem: String,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ResultRow {
    /// `bound - value`, the room left under an upper bound.
    pub fn slack(&self) -> f64 {
        self.bound - self.value
    }
}
