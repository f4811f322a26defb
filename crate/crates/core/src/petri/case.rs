//! Stochastic Petri net of an MooN subsystem.
//!
//! Each channel is a five-place token loop (OK, DD, DUT, DUU, RepDUT).
//! Every failure mode additionally has a two-place common cause sub-net:
//! when it fires it raises a flag that drags every OK channel into that
//! mode through zero-delay transitions, then lowers itself once no channel
//! is left operating.

use super::expr::{Assignment, Expr, Value};
use super::mc::monte_carlo;
use super::net::{DelayLaw, PetriNet, Transition};
use crate::error::Result;
use crate::model::{derive_rates, Method, PfdResult, SafetyParams};

pub fn build_case_net(params: &SafetyParams) -> Result<PetriNet> {
    params.validate()?;
    let r = derive_rates(params);
    let n = params.n as usize;
    let mut b = PetriNet::builder();

    let nb_ok = b.variable("nbOK", Value::Int(params.n as i64));
    let modes = [("DD", r.dd), ("DUT", r.dut), ("DUU", r.duu)];
    let flags: Vec<_> = modes
        .iter()
        .map(|(name, _)| b.variable(format!("CCF_{name}"), Value::Bool(false)))
        .collect();

    let mut channels = Vec::with_capacity(n);
    for c in 1..=n {
        let ok = b.place(format!("C{c}_OK"), 1);
        let dd = b.place(format!("C{c}_DD"), 0);
        let dut = b.place(format!("C{c}_DUT"), 0);
        let duu = b.place(format!("C{c}_DUU"), 0);
        let rep = b.place(format!("C{c}_RepDUT"), 0);
        b.conserve(vec![ok, dd, dut, duu, rep]);
        channels.push([ok, dd, dut, duu, rep]);
    }

    for (c, &[ok, dd, dut, duu, rep]) in channels.iter().enumerate() {
        let c = c + 1;
        for ((name, split), target) in modes.iter().zip([dd, dut, duu]) {
            b.transition(
                Transition::new(format!("C{c}_fail_{name}"), DelayLaw::Exp { rate: split.independent })
                    .input(ok)
                    .output(target)
                    .assign(Assignment::increment(nb_ok, -1)),
            );
        }
        b.transition(
            Transition::new(format!("C{c}_repair_DD"), DelayLaw::Exp { rate: params.mu_dd })
                .input(dd)
                .output(ok)
                .assign(Assignment::increment(nb_ok, 1)),
        );
        b.transition(
            Transition::new(format!("C{c}_test"), DelayLaw::Ipa { period: params.t1 })
                .input(dut)
                .output(rep),
        );
        b.transition(
            Transition::new(format!("C{c}_repair_DUT"), DelayLaw::Exp { rate: params.mu_dut })
                .input(rep)
                .output(ok)
                .assign(Assignment::increment(nb_ok, 1)),
        );
    }

    for ((name, split), &flag) in modes.iter().zip(&flags) {
        let idle = b.place(format!("CCF_{name}_idle"), 1);
        let active = b.place(format!("CCF_{name}_active"), 0);
        b.conserve(vec![idle, active]);
        b.transition(
            Transition::new(format!("CCF_{name}_occurs"), DelayLaw::Exp { rate: split.ccf })
                .input(idle)
                .output(active)
                .guard(Expr::var(nb_ok).gt(Expr::int(0)))
                .assign(Assignment::set(flag, Expr::bool(true))),
        );
        b.transition(
            Transition::new(format!("CCF_{name}_reset"), DelayLaw::Dirac { delay: 0.0 })
                .input(active)
                .output(idle)
                .guard(Expr::var(nb_ok).eq(Expr::int(0)))
                .assign(Assignment::set(flag, Expr::bool(false))),
        );
        let mode_index = match *name {
            "DD" => 1,
            "DUT" => 2,
            _ => 3,
        };
        for (c, places) in channels.iter().enumerate() {
            b.transition(
                Transition::new(format!("C{}_ccf_{name}", c + 1), DelayLaw::Dirac { delay: 0.0 })
                    .input(places[0])
                    .output(places[mode_index])
                    .guard(Expr::var(flag).eq(Expr::bool(true)))
                    .assign(Assignment::increment(nb_ok, -1)),
            );
        }
    }

    b.stat(Expr::var(nb_ok).lt(Expr::int(params.m as i64)));
    b.build()
}

/// Monte Carlo PFDavg with a 90 % confidence half-width.
pub fn pfd_avg_petri(params: &SafetyParams, histories: u64, seed: u64) -> Result<PfdResult> {
    let net = build_case_net(params)?;
    let est = monte_carlo(&net, params.t0, histories, seed)?;
    let mut result = PfdResult::new(Method::Petri, est.mean);
    result.ci90_halfwidth = Some(est.ci90_halfwidth);
    result.diagnostics.push(format!(
        "places: {}, transitions: {}, histories: {}, seed: {}, aborted: {}",
        net.places().len(),
        net.transitions().len(),
        est.histories,
        est.seed,
        est.aborted
    ));
    Ok(result)
}
