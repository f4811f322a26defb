//! Average probability of dangerous failure on demand (PFDavg) for
//! M-out-of-N safety instrumented subsystems.
//!
//! Four independent engines compute the same quantity:
//!
//! - [`analytic`]: closed-form approximate equations with imperfect proof
//!   tests and beta-factor common cause failures,
//! - [`faulttree`]: time-dependent fault tree evaluated exactly over a BDD
//!   and averaged over the assessment period,
//! - [`markov`]: multi-phase Markov model solved by uniformization,
//! - [`petri`]: stochastic Petri net with predicates, estimated by Monte Carlo.
//!
//! [`report`] runs them side by side and renders comparison tables.

pub mod analytic;
pub mod error;
pub mod faulttree;
pub mod markov;
pub mod model;
pub mod petri;
pub mod report;

pub use error::{Error, Result};
pub use model::{CaseId, DerivedRates, Method, PfdResult, SafetyParams};
