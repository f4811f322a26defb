//! Multi-phase Markov model of an MooN subsystem.
//!
//! Channels are identical, so a system state is the multiset of channel
//! modes. Within a proof-test period the chain evolves as a CTMC; at each
//! test the linking map moves every DUT channel into repair.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_rates, Method, PfdResult, SafetyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelMode {
    Ok,
    Dd,
    Dut,
    Duu,
    RepDut,
}

impl ChannelMode {
    pub const ALL: [ChannelMode; 5] = [
        ChannelMode::Ok,
        ChannelMode::Dd,
        ChannelMode::Dut,
        ChannelMode::Duu,
        ChannelMode::RepDut,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ChannelMode::Ok => "OK",
            ChannelMode::Dd => "DD",
            ChannelMode::Dut => "DUT",
            ChannelMode::Duu => "DUU",
            ChannelMode::RepDut => "RepDUT",
        }
    }
}

/// A multiset of channel modes, stored as a count per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeCounts([u32; 5]);

impl ModeCounts {
    pub fn count(&self, mode: ChannelMode) -> u32 {
        self.0[mode.index()]
    }

    pub fn channels(&self) -> u32 {
        self.0.iter().sum()
    }

    fn with(mut self, from: ChannelMode, to: ChannelMode, how_many: u32) -> Self {
        self.0[from.index()] -= how_many;
        self.0[to.index()] += how_many;
        self
    }
}

impl fmt::Display for ModeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = ChannelMode::ALL
            .iter()
            .flat_map(|&m| std::iter::repeat_n(m.label(), self.count(m) as usize))
            .map(str::to_string)
            .collect();
        f.write_str(&parts.join("_"))
    }
}

/// All multisets of size `n` over the five modes, all-OK first.
///
/// Order is descending lexicographic on `(OK, DD, DUT, DUU, RepDUT)` counts.
pub fn enumerate_states(n: u32) -> Result<Vec<ModeCounts>> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one channel".into()));
    }
    let mut states = Vec::new();
    for ok in (0..=n).rev() {
        for dd in (0..=n - ok).rev() {
            for dut in (0..=n - ok - dd).rev() {
                for duu in (0..=n - ok - dd - dut).rev() {
                    let rep = n - ok - dd - dut - duu;
                    states.push(ModeCounts([ok, dd, dut, duu, rep]));
                }
            }
        }
    }
    Ok(states)
}

/// Continuous-time Markov chain with a 0/1 reward per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc {
    size: usize,
    /// Off-diagonal rates, `(from, to, rate)`, sorted, one entry per pair.
    transitions: Vec<(usize, usize, f64)>,
    exit: Vec<f64>,
    eff: Vec<bool>,
}

impl Ctmc {
    /// Builds a chain; parallel transitions between the same pair accumulate
    /// and self-loops are dropped.
    pub fn new(size: usize, transitions: Vec<(usize, usize, f64)>, eff: Vec<bool>) -> Result<Self> {
        if eff.len() != size {
            return Err(Error::InvalidArgument(format!(
                "{} reward entries for {size} states",
                eff.len()
            )));
        }
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(transitions.len());
        let mut sorted = transitions;
        sorted.retain(|&(from, to, _)| from != to);
        sorted.sort_by_key(|a| (a.0, a.1));
        for (from, to, rate) in sorted {
            if from >= size || to >= size || !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "bad transition {from} -> {to} at rate {rate}"
                )));
            }
            match merged.last_mut() {
                Some(last) if last.0 == from && last.1 == to => last.2 += rate,
                _ => merged.push((from, to, rate)),
            }
        }
        merged.retain(|t| t.2 > 0.0);
        let mut exit = vec![0.0; size];
        for &(from, _, rate) in &merged {
            exit[from] += rate;
        }
        Ok(Ctmc {
            size,
            transitions: merged,
            exit,
            eff,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn transitions(&self) -> &[(usize, usize, f64)] {
        &self.transitions
    }

    pub fn eff(&self) -> &[bool] {
        &self.eff
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return -self.exit[from];
        }
        self.transitions
            .binary_search_by(|t| (t.0, t.1).cmp(&(from, to)))
            .map(|i| self.transitions[i].2)
            .unwrap_or(0.0)
    }

    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit[state]
    }

    /// Dense generator matrix, row-major.
    pub fn generator(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.size]; self.size];
        for &(from, to, rate) in &self.transitions {
            g[from][to] += rate;
        }
        for (i, row) in g.iter_mut().enumerate() {
            row[i] = -self.exit[i];
        }
        g
    }

    pub fn reward(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.eff).filter(|(_, &e)| e).map(|(v, _)| v).sum()
    }
}

/// Multi-phase model of one MooN case.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    pub states: Vec<ModeCounts>,
    pub chain: Ctmc,
    /// Target state of each state at a phase boundary.
    pub linking: Vec<usize>,
    pub phase_duration: f64,
    pub initial_state: usize,
}

impl MarkovModel {
    pub fn link(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for (i, &v) in p.iter().enumerate() {
            out[self.linking[i]] += v;
        }
        out
    }

    pub fn initial_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.states.len()];
        p[self.initial_state] = 1.0;
        p
    }

    /// State list and generator as sparse triplets, diagonal included.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# states {}", self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            let counts: Vec<String> = ChannelMode::ALL
                .iter()
                .map(|&m| format!("{}={}", m.label(), s.count(m)))
                .collect();
            let _ = writeln!(
                out,
                "{i} {} eff={} link={}",
                counts.join(" "),
                u8::from(self.chain.eff[i]),
                self.linking[i]
            );
        }
        let _ = writeln!(out, "# generator");
        let mut entries: Vec<(usize, usize, f64)> = self.chain.transitions.clone();
        entries.extend(
            (0..self.chain.size)
                .filter(|&i| self.chain.exit[i] > 0.0)
                .map(|i| (i, i, -self.chain.exit[i])),
        );
        entries.sort_by_key(|a| (a.0, a.1));
        for (from, to, rate) in entries {
            let _ = writeln!(out, "{from} {to} {rate:e}");
        }
        out
    }
}

pub fn build_generator(params: &SafetyParams) -> Result<MarkovModel> {
    use ChannelMode::*;

    params.validate()?;
    let r = derive_rates(params);
    let states = enumerate_states(params.n)?;
    let index = |s: ModeCounts| -> usize {
        states
            .binary_search_by(|probe| s.cmp(probe))
            .expect("transition target is a valid multiset")
    };

    let mut transitions = Vec::new();
    for (i, &s) in states.iter().enumerate() {
        let ok = s.count(Ok);
        if ok >= 1 {
            for (mode, split) in [(Dd, r.dd), (Dut, r.dut), (Duu, r.duu)] {
                transitions.push((i, index(s.with(Ok, mode, 1)), ok as f64 * split.independent));
                // common cause takes every channel still operating
                transitions.push((i, index(s.with(Ok, mode, ok)), split.ccf));
            }
        }
        let dd = s.count(Dd);
        if dd >= 1 {
            transitions.push((i, index(s.with(Dd, Ok, 1)), dd as f64 * params.mu_dd));
        }
        let rep = s.count(RepDut);
        if rep >= 1 {
            transitions.push((i, index(s.with(RepDut, Ok, 1)), rep as f64 * params.mu_dut));
        }
    }

    let eff = states.iter().map(|s| s.count(Ok) < params.m).collect();
    let linking = states
        .iter()
        .map(|&s| index(s.with(Dut, RepDut, s.count(Dut))))
        .collect();
    let chain = Ctmc::new(states.len(), transitions, eff)?;
    Result::Ok(MarkovModel {
        states,
        chain,
        linking,
        phase_duration: params.t1,
        initial_state: 0,
    })
}

/// Poisson truncation tolerance per uniformization substep.
const POISSON_TAIL: f64 = 1e-15;
/// Largest expected jump count per substep; keeps `e^{-q}` far from underflow.
const MAX_JUMPS_PER_STEP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Transient {
    pub p_end: Vec<f64>,
    /// Integral of the reward over the duration, in probability-hours.
    pub integral: f64,
}

/// Transient distribution and accumulated reward by uniformization.
///
/// The duration is split into substeps with at most 16 expected jumps each;
/// within a substep the Poisson series is truncated once the remaining mass
/// is below 1e-15.
pub fn transient_solve(chain: &Ctmc, p0: &[f64], duration: f64) -> Result<Transient> {
    if p0.len() != chain.size {
        return Err(Error::InvalidArgument(format!(
            "distribution has {} entries for {} states",
            p0.len(),
            chain.size
        )));
    }
    let sum: f64 = p0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || p0.iter().any(|&v| v < -1e-12 || !v.is_finite()) {
        return Err(Error::NonStochastic(sum));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration must be > 0, got {duration}")));
    }

    let rate = chain.exit.iter().cloned().fold(0.0, f64::max);
    if rate == 0.0 {
        return Ok(Transient {
            p_end: p0.to_vec(),
            integral: duration * chain.reward(p0),
        });
    }

    let substeps = (rate * duration / MAX_JUMPS_PER_STEP).ceil().max(1.0) as usize;
    let h = duration / substeps as f64;
    let q = rate * h;

    // Poisson weights w_k and tails P(X > k) for X ~ Poisson(q).
    let mut weights = vec![(-q).exp()];
    while weights.len() < 4 || weights.len() as f64 <= q || *weights.last().unwrap() > 1e-40 {
        let k = weights.len() as f64;
        let next = weights.last().unwrap() * q / k;
        weights.push(next);
    }
    let mut tails = vec![0.0; weights.len()];
    for k in (0..weights.len() - 1).rev() {
        tails[k] = tails[k + 1] + weights[k + 1];
    }
    let cutoff = tails.iter().position(|&t| t <= POISSON_TAIL).unwrap_or(tails.len() - 1);

    let mut p = p0.to_vec();
    let mut integral = 0.0;
    let mut v = vec![0.0; chain.size];
    let mut next = vec![0.0; chain.size];
    for _ in 0..substeps {
        v.copy_from_slice(&p);
        p.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..=cutoff {
            let w = weights[k];
            for (pi, vi) in p.iter_mut().zip(&v) {
                *pi += w * vi;
            }
            integral += tails[k] / rate * chain.reward(&v);
            if k == cutoff {
                break;
            }
            // v <- v P with P = I + Q / rate
            for (j, nj) in next.iter_mut().enumerate() {
                *nj = v[j] * (1.0 - chain.exit[j] / rate);
            }
            for &(from, to, r) in &chain.transitions {
                next[to] += v[from] * r / rate;
            }
            std::mem::swap(&mut v, &mut next);
        }
    }
    Ok(Transient { p_end: p, integral })
}

pub fn pfd_avg_markov(params: &SafetyParams) -> Result<PfdResult> {
    let model = build_generator(params)?;
    let phases = params.phase_count();
    let mut p = model.initial_distribution();
    let mut integral = 0.0;
    let mut worst_drift: f64 = 0.0;
    for _ in 0..phases {
        let step = transient_solve(&model.chain, &p, model.phase_duration)?;
        integral += step.integral;
        p = model.link(&step.p_end);
        worst_drift = worst_drift.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    let mut result = PfdResult::new(Method::Markov, (integral / params.t0).clamp(0.0, 1.0));
    result.diagnostics.push(format!(
        "states: {}, transitions: {}, phases: {phases}",
        model.states.len(),
        model.chain.transitions.len()
    ));
    result
        .diagnostics
        .push(format!("probability mass drift: {worst_drift:.1e}"));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_case, CaseId};

    fn by_counts(model: &MarkovModel, counts: [u32; 5]) -> usize {
        model
            .states
            .iter()
            .position(|s| s.0 == counts)
            .unwrap()
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(1).unwrap().len(), 5);
        assert_eq!(enumerate_states(2).unwrap().len(), 15);
        assert_eq!(enumerate_states(3).unwrap().len(), 35);
        assert_eq!(enumerate_states(4).unwrap().len(), 70);
        assert!(enumerate_states(0).is_err());
        let s = enumerate_states(3).unwrap();
        assert_eq!(s[0], ModeCounts([3, 0, 0, 0, 0]));
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn single_channel_exit_rate() {
        let p = load_case(CaseId::I);
        let r = derive_rates(&p);
        let model = build_generator(&p).unwrap();
        let exit = model.chain.exit_rate(model.initial_state);
        let expected = r.lambda_dd + r.lambda_dut + r.lambda_duu;
        assert!(((exit - expected) / expected).abs() < 1e-14);
    }

    #[test]
    fn ccf_rate_case_iii() {
        let model = build_generator(&load_case(CaseId::Iii)).unwrap();
        let to = by_counts(&model, [0, 2, 0, 0, 0]);
        let rate = model.chain.rate(model.initial_state, to);
        assert!(((rate - 2.7e-8) / 2.7e-8).abs() < 1e-12);
    }

    #[test]
    fn double_duu_is_absorbing() {
        let model = build_generator(&load_case(CaseId::Iv)).unwrap();
        let s = by_counts(&model, [0, 0, 0, 2, 0]);
        assert_eq!(model.chain.exit_rate(s), 0.0);
        assert_eq!(model.linking[s], s);
    }

    #[test]
    fn generator_invariants() {
        for id in CaseId::ALL {
            let p = load_case(id);
            let model = build_generator(&p).unwrap();
            for (i, row) in model.chain.generator().iter().enumerate() {
                let sum: f64 = row.iter().sum();
                assert!(sum.abs() < 1e-15, "row {i} sums to {sum}");
                for (j, &v) in row.iter().enumerate() {
                    if i != j {
                        assert!(v >= 0.0);
                    }
                }
            }
            for (i, s) in model.states.iter().enumerate() {
                assert_eq!(model.chain.eff()[i], s.count(ChannelMode::Ok) < p.m);
                let target = model.states[model.linking[i]];
                assert_eq!(target.count(ChannelMode::Dut), 0);
                assert_eq!(target.count(ChannelMode::Ok), s.count(ChannelMode::Ok));
                if s.count(ChannelMode::Dut) == 0 {
                    assert_eq!(model.linking[i], i);
                }
            }
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let chain = Ctmc::new(2, vec![], vec![false, true]).unwrap();
        let t = transient_solve(&chain, &[0.25, 0.75], 10.0).unwrap();
        assert_eq!(t.p_end, vec![0.25, 0.75]);
        assert_eq!(t.integral, 7.5);
    }

    #[test]
    fn rejects_non_stochastic_start() {
        let chain = Ctmc::new(2, vec![(0, 1, 1.0)], vec![false, true]).unwrap();
        assert!(matches!(
            transient_solve(&chain, &[0.5, 0.4], 1.0),
            Err(Error::NonStochastic(_))
        ));
        assert!(transient_solve(&chain, &[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn two_state_closed_form() {
        let (lambda, mu, t) = (1e-3, 1e-1, 1e4);
        let chain = Ctmc::new(2, vec![(0, 1, lambda), (1, 0, mu)], vec![false, true]).unwrap();
        let s = lambda + mu;
        for duration in [1.0, 37.5, 1e3, t] {
            let out = transient_solve(&chain, &[1.0, 0.0], duration).unwrap();
            let closed = lambda / s * (1.0 - (-s * duration).exp());
            assert!((out.p_end[1] - closed).abs() < 1e-9);
            let closed_integral = lambda / s * (duration - (1.0 - (-s * duration).exp()) / s);
            assert!((out.integral - closed_integral).abs() < 1e-9 * duration.max(1.0));
        }
    }

    #[test]
    fn conservation_across_phases_and_linking() {
        let p = load_case(CaseId::Iii);
        let model = build_generator(&p).unwrap();
        let mut dist = model.initial_distribution();
        for _ in 0..p.phase_count() {
            let out = transient_solve(&model.chain, &dist, p.t1).unwrap();
            assert!((out.p_end.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let linked = model.link(&out.p_end);
            assert!((linked.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            // the failed indicator is continuous across the boundary
            let (before, after) = (model.chain.reward(&out.p_end), model.chain.reward(&linked));
            assert!((before - after).abs() <= 1e-14 * before.max(1e-300), "{before} vs {after}");
            dist = linked;
        }
    }

    #[test]
    fn single_channel_beta_independent() {
        let p = load_case(CaseId::I);
        let base = pfd_avg_markov(&p).unwrap().value;
        for (a, b, c) in [(0.0, 0.0, 0.0), (0.5, 0.2, 0.9), (1.0, 1.0, 1.0)] {
            let q = SafetyParams {
                beta_dd: a,
                beta_dut: b,
                beta_duu: c,
                ..p
            };
            let v = pfd_avg_markov(&q).unwrap().value;
            assert!(((v - base) / base).abs() < 1e-12, "{v} vs {base}");
        }
    }

    #[test]
    fn zero_rates_give_zero() {
        let p = SafetyParams {
            lambda_d: 0.0,
            ..load_case(CaseId::Vi)
        };
        assert_eq!(pfd_avg_markov(&p).unwrap().value, 0.0);
    }

    #[test]
    fn render_lists_states_and_triplets() {
        let model = build_generator(&load_case(CaseId::Iii)).unwrap();
        let text = model.render();
        assert!(text.starts_with("# states 15\n0 OK=2 DD=0 DUT=0 DUU=0 RepDUT=0 eff=0 link=0\n"));
        assert_eq!(text, build_generator(&load_case(CaseId::Iii)).unwrap().render());
    }
}
