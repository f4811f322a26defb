//! Event-driven simulation of one history.
//!
//! Same-instant ordering: after every firing all enabled zero-delay
//! transitions fire, lowest id first, until none is enabled. Only then do
//! scheduled (ipa) transitions due at that instant fire, again lowest id
//! first, each followed by its own zero-delay cascade.

use std::fmt::Write as _;

use rand::Rng;

use super::expr::Value;
use super::net::{DelayLaw, PetriNet, TransitionId};
use crate::error::{Error, Result};

/// Zero-time firings allowed at a single instant before a history is
/// declared livelocked.
pub const LIVELOCK_LIMIT: usize = 1_000_000;

/// Hooks into a running history.
pub trait Observer {
    fn fired(&mut self, _time: f64, _transition: TransitionId, _marking: &[u32], _vars: &[Value]) {}

    /// Called once per instant after zero-delay cascades have settled.
    fn settled(&mut self, _time: f64, _marking: &[u32], _vars: &[Value]) {}
}

impl Observer for () {}

/// Line-oriented event log: `time transition label marking-delta`.
pub struct TraceRecorder<'n> {
    net: &'n PetriNet,
    pub lines: String,
}

impl<'n> TraceRecorder<'n> {
    pub fn new(net: &'n PetriNet) -> Self {
        TraceRecorder {
            net,
            lines: String::new(),
        }
    }
}

impl Observer for TraceRecorder<'_> {
    fn fired(&mut self, time: f64, transition: TransitionId, _marking: &[u32], _vars: &[Value]) {
        let t = &self.net.transitions()[transition.0];
        let places = self.net.places();
        let mut delta: Vec<(usize, i64)> = Vec::new();
        for &(p, w) in &t.inputs {
            delta.push((p.0, -(w as i64)));
        }
        for &(p, w) in &t.outputs {
            delta.push((p.0, w as i64));
        }
        delta.sort_unstable();
        let mut merged: Vec<(usize, i64)> = Vec::new();
        for (p, d) in delta {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += d,
                _ => merged.push((p, d)),
            }
        }
        let _ = write!(self.lines, "{time:.6} t{} {}", transition.0, t.label);
        for (p, d) in merged.into_iter().filter(|(_, d)| *d != 0) {
            let _ = write!(self.lines, " {}{d:+}", places[p].label);
        }
        self.lines.push('\n');
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryOutcome {
    /// Fraction of `[0, horizon]` during which the stat predicate held.
    pub stat_fraction: f64,
    pub firings: u64,
}

struct Sim<'n> {
    net: &'n PetriNet,
    marking: Vec<u32>,
    vars: Vec<Value>,
    scratch: Vec<Value>,
    /// Scheduled firing time of enabled timed transitions.
    clock: Vec<Option<f64>>,
    /// Next calendar multiple for ipa transitions.
    ipa_next: Vec<u64>,
    conserved_totals: Vec<u32>,
    check: bool,
    firings: u64,
}

impl<'n> Sim<'n> {
    fn new(net: &'n PetriNet, check: bool) -> Self {
        let marking: Vec<u32> = net.places().iter().map(|p| p.initial).collect();
        let conserved_totals = net
            .conserved()
            .iter()
            .map(|g| g.iter().map(|p| marking[p.0]).sum())
            .collect();
        Sim {
            net,
            vars: net.variables().iter().map(|v| v.initial).collect(),
            scratch: Vec::new(),
            clock: vec![None; net.transitions().len()],
            ipa_next: vec![1; net.transitions().len()],
            marking,
            conserved_totals,
            check,
            firings: 0,
        }
    }

    fn enabled(&self, t: usize) -> bool {
        let tr = &self.net.transitions()[t];
        tr.inputs.iter().all(|&(p, w)| self.marking[p.0] >= w)
            && tr.guard.as_ref().is_none_or(|g| g.eval(&self.vars).as_bool())
    }

    fn fire<O: Observer>(&mut self, t: usize, now: f64, observer: &mut O) -> Result<()> {
        let tr = &self.net.transitions()[t];
        for &(p, w) in &tr.inputs {
            self.marking[p.0] -= w;
        }
        for &(p, w) in &tr.outputs {
            self.marking[p.0] += w;
        }
        if !tr.assignments.is_empty() {
            // all right-hand sides see the values from before the firing
            self.scratch.clear();
            self.scratch
                .extend(tr.assignments.iter().map(|a| a.expr.eval(&self.vars)));
            for (a, v) in tr.assignments.iter().zip(&self.scratch) {
                self.vars[a.var.0] = *v;
            }
        }
        self.clock[t] = None;
        self.firings += 1;
        if self.check {
            for (group, &total) in self.net.conserved().iter().zip(&self.conserved_totals) {
                let now_total: u32 = group.iter().map(|p| self.marking[p.0]).sum();
                if now_total != total {
                    return Err(Error::InvalidNet(format!(
                        "token conservation violated by {} at t = {now}",
                        tr.label
                    )));
                }
            }
        }
        observer.fired(now, TransitionId(t), &self.marking, &self.vars);
        Ok(())
    }

    /// Fires enabled zero-delay transitions until none is left.
    fn settle<O: Observer>(&mut self, now: f64, observer: &mut O) -> Result<usize> {
        let mut count = 0;
        loop {
            let next = (0..self.net.transitions().len())
                .find(|&t| self.net.transitions()[t].delay.is_immediate() && self.enabled(t));
            let Some(t) = next else { break };
            self.fire(t, now, observer)?;
            count += 1;
            if count > LIVELOCK_LIMIT {
                return Err(Error::Livelock {
                    time: now,
                    firings: count,
                });
            }
        }
        Ok(count)
    }

    fn refresh_clocks<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) {
        for t in 0..self.net.transitions().len() {
            let delay = match self.net.transitions()[t].delay {
                DelayLaw::Exp { rate } => Some(rate),
                DelayLaw::Dirac { delay } if delay > 0.0 => Some(delay),
                _ => None,
            };
            let Some(param) = delay else { continue };
            let enabled = self.enabled(t);
            if !enabled {
                self.clock[t] = None;
            } else if self.clock[t].is_none() {
                let wait = match self.net.transitions()[t].delay {
                    DelayLaw::Exp { rate } if rate > 0.0 => {
                        let u: f64 = rng.random();
                        -(1.0 - u).ln() / rate
                    }
                    DelayLaw::Exp { .. } => f64::INFINITY,
                    _ => param,
                };
                self.clock[t] = Some(now + wait);
            }
        }
    }

    fn stat(&self) -> bool {
        self.net.stat().eval(&self.vars).as_bool()
    }

    fn next_timed(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (t, c) in self.clock.iter().enumerate() {
            if let Some(time) = *c {
                if best.is_none_or(|(b, _)| time < b) {
                    best = Some((time, t));
                }
            }
        }
        best
    }

    fn next_ipa(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (t, tr) in self.net.transitions().iter().enumerate() {
            if let DelayLaw::Ipa { period } = tr.delay {
                best = best.min(self.ipa_next[t] as f64 * period);
            }
        }
        best
    }
}

/// Runs one history from t = 0 to `horizon`.
pub fn run_history<R: Rng + ?Sized, O: Observer>(
    net: &PetriNet,
    horizon: f64,
    rng: &mut R,
    check_invariants: bool,
    observer: &mut O,
) -> Result<HistoryOutcome> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    let mut sim = Sim::new(net, check_invariants);
    let mut now = 0.0;
    sim.settle(now, observer)?;
    observer.settled(now, &sim.marking, &sim.vars);
    sim.refresh_clocks(now, rng);
    let mut failed = sim.stat();
    let mut failed_time = 0.0;

    loop {
        let timed = sim.next_timed();
        let timed_at = timed.map_or(f64::INFINITY, |(t, _)| t);
        let ipa_at = sim.next_ipa();
        let next = timed_at.min(ipa_at);
        if next >= horizon {
            if failed {
                failed_time += horizon - now;
            }
            break;
        }
        if failed {
            failed_time += next - now;
        }
        now = next;

        if timed_at <= ipa_at {
            let (_, t) = timed.expect("finite timed event");
            sim.fire(t, now, observer)?;
            sim.settle(now, observer)?;
            sim.refresh_clocks(now, rng);
        } else {
            for t in 0..net.transitions().len() {
                let DelayLaw::Ipa { period } = net.transitions()[t].delay else {
                    continue;
                };
                if sim.ipa_next[t] as f64 * period > now {
                    continue;
                }
                sim.ipa_next[t] += 1;
                if sim.enabled(t) {
                    sim.fire(t, now, observer)?;
                    sim.settle(now, observer)?;
                    sim.refresh_clocks(now, rng);
                }
            }
            sim.refresh_clocks(now, rng);
        }
        observer.settled(now, &sim.marking, &sim.vars);
        failed = sim.stat();
    }

    Ok(HistoryOutcome {
        stat_fraction: failed_time / horizon,
        firings: sim.firings,
    })
}

/// Fraction of `[0, horizon]` during which the stat predicate holds, for
/// the history seeded by `seed`.
pub fn simulate_history(net: &PetriNet, horizon: f64, seed: u64) -> Result<f64> {
    let mut rng = super::mc::history_rng(seed, 0);
    run_history(net, horizon, &mut rng, cfg!(debug_assertions), &mut ()).map(|o| o.stat_fraction)
}
