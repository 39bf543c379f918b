//! A laboratory for differentially private empirical risk minimization.
//!
//! The crate computes the exact output law of private learners on finite
//! hypothesis spaces, so privacy, stability and utility guarantees can be
//! audited by enumeration rather than estimated by sampling:
//!
//! * [`hypothesis_space`]: finite and grid-discretized hypothesis spaces,
//!   sublevel sets and the sublevel-set growth condition.
//! * [`problems`]: bounded-loss learning problems, datasets, data
//!   distributions and risk computations.
//! * [`mechanisms`]: the exponential mechanism for regularized ERM,
//!   Laplace-perturbed ERM, subsampling amplification, two-stage support
//!   selection, high-confidence boosting and a Metropolis sampler.
//! * [`analysis`]: exact auditors and the experiment drivers.
//!
//! Trial loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iteration otherwise; see [`exec`].

pub mod analysis;
pub mod error;
pub mod exec;
pub mod hypothesis_space;
pub mod mechanisms;
pub mod problems;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hypothesis_space::{FiniteHypothesisSpace, GridSpec, Hypothesis, Payload, SublevelReport};
pub use mechanisms::{Mechanism, MechanismDistribution, PrivacyBudget};
pub use problems::{DataDistribution, DataPoint, Dataset, Problem};
