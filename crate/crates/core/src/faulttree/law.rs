//! Time-dependent unavailability laws of basic events.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum BasicEventLaw {
    /// Failure revealed online, repaired at rate `mu`; `gamma` is the
    /// probability of being failed at start-up.
    Glm { gamma: f64, lambda: f64, mu: f64 },
    /// Failure revealed only by proof tests at `first_test + k * tau`, then
    /// repaired at rate `mu`.
    PeriodicTest {
        lambda: f64,
        mu: f64,
        tau: f64,
        first_test: f64,
    },
    /// Never revealed, never repaired.
    Exponential { lambda: f64 },
}

impl BasicEventLaw {
    pub fn glm(lambda: f64, mu: f64) -> Self {
        BasicEventLaw::Glm {
            gamma: 0.0,
            lambda,
            mu,
        }
    }

    pub fn periodic_test(lambda: f64, mu: f64, tau: f64) -> Self {
        BasicEventLaw::PeriodicTest {
            lambda,
            mu,
            tau,
            first_test: tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_rate = |v: f64| v.is_finite() && v >= 0.0;
        let valid = match *self {
            BasicEventLaw::Glm { gamma, lambda, mu } => {
                (0.0..=1.0).contains(&gamma) && ok_rate(lambda) && ok_rate(mu)
            }
            BasicEventLaw::PeriodicTest {
                lambda,
                mu,
                tau,
                first_test,
            } => {
                ok_rate(lambda)
                    && ok_rate(mu)
                    && tau.is_finite()
                    && tau > 0.0
                    && first_test.is_finite()
                    && first_test > 0.0
            }
            BasicEventLaw::Exponential { lambda } => ok_rate(lambda),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::FaultTree(format!("invalid law parameters {self:?}")))
        }
    }

    /// Test instants in `(0, horizon)`; empty for laws without tests.
    pub fn test_instants(&self, horizon: f64) -> Vec<f64> {
        match *self {
            BasicEventLaw::PeriodicTest {
                tau, first_test, ..
            } => (0..)
                .map(|k| first_test + k as f64 * tau)
                .take_while(|&t| t < horizon)
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Which one-sided limit to take at a test instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Just before the test is applied.
    Left,
    /// Test applied (the law is right-continuous).
    Right,
}

/// Probability of the basic event being true at time `t`.
pub fn event_unavailability(law: &BasicEventLaw, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    law.validate()?;
    Ok(PreparedLaw::new(*law, t).unavailability(t, Side::Right))
}

/// Probability mass of a periodic-test event: failed-unrevealed and in repair.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TestState {
    failed: f64,
    repair: f64,
}

/// `(e^{-a d} - e^{-b d}) / (b - a)` without cancellation trouble at `a == b`.
fn exp_difference(a: f64, b: f64, d: f64) -> f64 {
    let diff = b - a;
    if (diff * d).abs() < 1e-12 {
        d * (-a * d).exp()
    } else {
        (-a * d).exp() * -(-diff * d).exp_m1() / diff
    }
}

fn advance(state: TestState, lambda: f64, mu: f64, d: f64) -> TestState {
    let working = 1.0 - state.failed - state.repair;
    let repair = state.repair * (-mu * d).exp();
    // unavailable = 1 - working(d), expanded so small probabilities keep precision
    let unavailable = state.failed
        + state.repair * (1.0 - mu * exp_difference(lambda, mu, d))
        + working * -(-lambda * d).exp_m1();
    TestState {
        failed: (unavailable - repair).max(0.0),
        repair,
    }
}

/// A law with its post-test states cached up to a horizon.
#[derive(Debug, Clone)]
pub struct PreparedLaw {
    law: BasicEventLaw,
    tests: Vec<f64>,
    /// `after_test[k]` is the state right after test `k`.
    after_test: Vec<TestState>,
}

impl PreparedLaw {
    pub fn new(law: BasicEventLaw, horizon: f64) -> Self {
        // include a test exactly at the horizon
        let tests = law.test_instants(horizon * (1.0 + 1e-12) + 1e-9);
        let mut after_test = Vec::with_capacity(tests.len());
        if let BasicEventLaw::PeriodicTest { lambda, mu, .. } = law {
            let mut state = TestState {
                failed: 0.0,
                repair: 0.0,
            };
            let mut last = 0.0;
            for &t in &tests {
                state = advance(state, lambda, mu, t - last);
                state = TestState {
                    failed: 0.0,
                    repair: state.repair + state.failed,
                };
                after_test.push(state);
                last = t;
            }
        }
        PreparedLaw {
            law,
            tests,
            after_test,
        }
    }

    pub fn law(&self) -> &BasicEventLaw {
        &self.law
    }

    pub fn unavailability(&self, t: f64, side: Side) -> f64 {
        match self.law {
            BasicEventLaw::Glm { gamma, lambda, mu } => {
                let total = lambda + mu;
                if total == 0.0 {
                    return gamma;
                }
                let decay = (-total * t).exp();
                gamma * decay + lambda / total * -(-total * t).exp_m1()
            }
            BasicEventLaw::Exponential { lambda } => -(-lambda * t).exp_m1(),
            BasicEventLaw::PeriodicTest { lambda, mu, .. } => {
                let applied = match side {
                    Side::Right => self.tests.partition_point(|&x| x <= t),
                    Side::Left => self.tests.partition_point(|&x| x < t),
                };
                let (start, state) = if applied == 0 {
                    (
                        0.0,
                        TestState {
                            failed: 0.0,
                            repair: 0.0,
                        },
                    )
                } else {
                    (self.tests[applied - 1], self.after_test[applied - 1])
                };
                let s = advance(state, lambda, mu, t - start);
                s.failed + s.repair
            }
        }
    }
}
