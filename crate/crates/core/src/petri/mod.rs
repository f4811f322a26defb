//! Stochastic Petri nets with predicates and their Monte Carlo estimation.

mod case;
pub mod expr;
pub mod mc;
pub mod net;
pub mod sim;

pub use case::{build_case_net, pfd_avg_petri};
pub use expr::{Assignment, Expr, Value, VarId};
pub use mc::{history_rng, monte_carlo, McEstimate, DEFAULT_HISTORIES};
pub use net::{DelayLaw, PetriNet, PetriNetBuilder, PlaceId, Transition, TransitionId};
pub use sim::{run_history, simulate_history, HistoryOutcome, Observer, TraceRecorder};
