//! Parallel Monte Carlo over independent histories.
//!
//! Each history draws from its own ChaCha8 stream (`seed_from_u64(master)`
//! with stream = history index), so a history's outcome does not depend on
//! which worker ran it. Histories are grouped into fixed-size chunks whose
//! partial sums are combined in chunk order, which keeps the estimate
//! bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::net::PetriNet;
use super::sim::run_history;
use crate::error::{Error, Result};

/// Standard normal quantile for a two-sided 90 % interval.
pub const Z90: f64 = 1.645;

pub const DEFAULT_HISTORIES: u64 = 1_000_000;

const CHUNK: u64 = 1024;

/// Largest tolerated share of histories aborted by a livelock.
const MAX_ABORTED_FRACTION: f64 = 1e-4;

pub fn history_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub ci90_halfwidth: f64,
    /// Histories that contributed to the estimate.
    pub histories: u64,
    pub seed: u64,
    pub aborted: u64,
}

#[derive(Default, Clone, Copy)]
struct Partial {
    sum: f64,
    sum_sq: f64,
    count: u64,
    aborted: u64,
}

fn run_chunk(net: &PetriNet, horizon: f64, seed: u64, range: std::ops::Range<u64>) -> Result<Partial> {
    let mut part = Partial::default();
    for index in range {
        let mut rng = history_rng(seed, index);
        match run_history(net, horizon, &mut rng, cfg!(debug_assertions), &mut ()) {
            Ok(out) => {
                part.sum += out.stat_fraction;
                part.sum_sq += out.stat_fraction * out.stat_fraction;
                part.count += 1;
            }
            Err(Error::Livelock { .. }) => part.aborted += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(part)
}

/// Estimates the time-average of the net's stat predicate over `[0, horizon]`.
pub fn monte_carlo(net: &PetriNet, horizon: f64, histories: u64, master_seed: u64) -> Result<McEstimate> {
    if histories < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 histories are needed, got {histories}"
        )));
    }
    let chunks = histories.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(histories);
            run_chunk(net, horizon, master_seed, start..end)
        })
        .collect::<Result<_>>()?;

    let mut total = Partial::default();
    for p in &partials {
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        total.count += p.count;
        total.aborted += p.aborted;
    }
    if total.aborted as f64 > MAX_ABORTED_FRACTION * histories as f64 || total.count < 2 {
        return Err(Error::TooManyAborted {
            aborted: total.aborted,
            histories,
        });
    }
    let n = total.count as f64;
    let mean = total.sum / n;
    let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        ci90_halfwidth: Z90 * (var / n).sqrt(),
        histories: total.count,
        seed: master_seed,
        aborted: total.aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::expr::{Assignment, Expr, Value};
    use crate::petri::net::{DelayLaw, Transition};
    use rand::RngCore;

    fn birth_death(lambda: f64, mu: f64) -> PetriNet {
        let mut b = PetriNet::builder();
        let up = b.place("up", 1);
        let down = b.place("down", 0);
        let failed = b.variable("failed", Value::Bool(false));
        b.transition(
            Transition::new("fail", DelayLaw::Exp { rate: lambda })
                .input(up)
                .output(down)
                .assign(Assignment::set(failed, Expr::bool(true))),
        );
        b.transition(
            Transition::new("repair", DelayLaw::Exp { rate: mu })
                .input(down)
                .output(up)
                .assign(Assignment::set(failed, Expr::bool(false))),
        );
        b.conserve(vec![up, down]);
        b.stat(Expr::var(failed));
        b.build().unwrap()
    }

    fn exact_average(lambda: f64, mu: f64, h: f64) -> f64 {
        let s = lambda + mu;
        lambda / s * (1.0 - (1.0 - (-s * h).exp()) / (s * h))
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a = history_rng(42, 0).next_u64();
        let b = history_rng(42, 1).next_u64();
        let c = history_rng(43, 0).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, history_rng(42, 0).next_u64());
    }

    #[test]
    fn degenerate_always_true() {
        let mut b = PetriNet::builder();
        b.place("p", 1);
        b.stat(Expr::bool(true));
        let net = b.build().unwrap();
        let est = monte_carlo(&net, 10.0, 100, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.ci90_halfwidth, 0.0);
    }

    #[test]
    fn independent_of_thread_count() {
        let net = birth_death(0.1, 0.5);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(&net, 20.0, 5000, 42).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(one.ci90_halfwidth.to_bits(), four.ci90_halfwidth.to_bits());
    }

    #[test]
    fn birth_death_matches_closed_form() {
        let (l, m, h) = (0.2, 1.0, 10.0);
        let est = monte_carlo(&birth_death(l, m), h, 20_000, 42).unwrap();
        let exact = exact_average(l, m, h);
        assert!(
            (est.mean - exact).abs() < 3.0 * est.ci90_halfwidth,
            "{} vs {exact} (hw {})",
            est.mean,
            est.ci90_halfwidth
        );
    }

    /// The 90 % interval should cover the exact value in ~90 % of
    /// independent runs; 200 runs, accept anything a 99 % binomial band allows.
    #[test]
    fn interval_coverage_near_nominal() {
        let (l, m, h) = (0.3, 1.0, 5.0);
        let net = birth_death(l, m);
        let exact = exact_average(l, m, h);
        let runs = 200;
        let covered = (0..runs)
            .filter(|&r| {
                let est = monte_carlo(&net, h, 2000, 1000 + r).unwrap();
                (est.mean - exact).abs() <= est.ci90_halfwidth
            })
            .count();
        // Binomial(200, 0.9): mean 180, sd 4.24; 2.576 sd ~ 11
        assert!((169..=191).contains(&covered), "coverage {covered}/{runs}");
    }

    #[test]
    fn livelocked_histories_abort_the_estimate() {
        let mut b = PetriNet::builder();
        let a = b.place("a", 1);
        b.transition(Transition::new("spin", DelayLaw::Dirac { delay: 0.0 }).input(a).output(a));
        b.stat(Expr::bool(false));
        let net = b.build().unwrap();
        assert!(matches!(
            monte_carlo(&net, 1.0, 2, 0),
            Err(Error::TooManyAborted { aborted: 2, .. })
        ));
    }
}
