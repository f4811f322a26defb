use thiserror::Error;

use crate::model::Method;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown case id `{0}` (expected one of i, ii, iii, iv, v, vi)")]
    UnknownCase(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fault tree: {0}")]
    FaultTree(String),

    #[error("probability of basic event {0} is missing")]
    MissingEventProbability(usize),

    #[error(
        "time integration did not converge: relative change {change:.3e} at the finest step (interval {interval})"
    )]
    NonConvergent { interval: usize, change: f64 },

    #[error("initial distribution is not stochastic (sum = {0})")]
    NonStochastic(f64),

    #[error("assessment period {t0} h is not an integer multiple of the test period {t1} h")]
    NonIntegerPhases { t0: f64, t1: f64 },

    #[error("petri net: {0}")]
    InvalidNet(String),

    #[error("history livelocked at t = {time} h after {firings} zero-time firings")]
    Livelock { time: f64, firings: usize },

    #[error("{aborted} of {histories} histories aborted (more than 0.01%)")]
    TooManyAborted { aborted: u64, histories: u64 },

    #[error("{method} engine failed: {source}")]
    Engine {
        method: Method,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an engine failure with the method that produced it.
    pub fn in_method(self, method: Method) -> Self {
        Error::Engine {
            method,
            source: Box::new(self),
        }
    }
}
