//! Closed-form approximate PFDavg for MooN with imperfect proof tests and
//! beta-factor common cause failures.
//!
//! The equations come from first-order expansions and are only trusted when
//! `lambda_DUT * T1 < 0.1` and `lambda_DUU * T0 < 0.1`. Outside that domain
//! the value is still computed and the violation is attached as a diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_validity, derive_rates, Method, PfdResult, SafetyParams};

/// Binomial coefficient `n! / (k! (n-k)!)`.
pub fn binom(n: i64, k: i64) -> Result<u64> {
    if k < 0 || n < 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "binomial coefficient needs 0 <= k <= n, got n={n} k={k}"
        )));
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    // Exact: each partial product is itself a binomial coefficient.
    Ok((1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i))
}

/// Beta weighting of a group of `x` simultaneous independent failures:
/// a lone failure keeps its full rate, a group uses the independent part.
pub fn f_factor(x: i64, b: f64) -> Result<f64> {
    if x < 1 {
        return Err(Error::InvalidArgument(format!(
            "f_factor needs x >= 1, got {x}"
        )));
    }
    Ok(if x == 1 { 1.0 } else { 1.0 - b })
}

/// Contribution of each line of the closed form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTermBreakdown {
    pub dd_independent: f64,
    pub dut_independent: f64,
    pub duu_independent: f64,
    pub dd_dut: f64,
    pub dd_duu: f64,
    pub dut_duu: f64,
    pub dd_dut_duu: f64,
    pub ccf_dd: f64,
    pub ccf_dut: f64,
    pub ccf_duu: f64,
}

impl AnalyticTermBreakdown {
    pub fn terms(&self) -> [(&'static str, f64); 10] {
        [
            ("dd_independent", self.dd_independent),
            ("dut_independent", self.dut_independent),
            ("duu_independent", self.duu_independent),
            ("dd_dut", self.dd_dut),
            ("dd_duu", self.dd_duu),
            ("dut_duu", self.dut_duu),
            ("dd_dut_duu", self.dd_dut_duu),
            ("ccf_dd", self.ccf_dd),
            ("ccf_dut", self.ccf_dut),
            ("ccf_duu", self.ccf_duu),
        ]
    }

    pub fn total(&self) -> f64 {
        self.terms().iter().map(|(_, v)| v).sum()
    }
}

fn c(n: i64, k: i64) -> f64 {
    // Loop bounds below keep every call inside 0 <= k <= n.
    binom(n, k).expect("binomial arguments within range") as f64
}

fn f(x: i64, b: f64) -> f64 {
    f_factor(x, b).expect("f_factor argument >= 1")
}

pub fn analytic_breakdown(params: &SafetyParams) -> Result<AnalyticTermBreakdown> {
    params.validate()?;
    let r = derive_rates(params);
    let n = params.n as i64;
    let m = params.m as i64;
    let (t0, t1) = (params.t0, params.t1);
    let (b_dd, b_dut, b_duu) = (params.beta_dd, params.beta_dut, params.beta_duu);

    // Unavailability of one channel per mode, without repair-time powers.
    let dd = r.lambda_dd / params.mu_dd;
    let dut = r.lambda_dut;
    let duu = r.lambda_duu;
    let mttr_dut = 1.0 / params.mu_dut;
    // 0/0 when a mode has neither failures nor repairs.
    let dd = if r.lambda_dd == 0.0 { 0.0 } else { dd };
    let mttr_dut = if r.lambda_dut == 0.0 { 0.0 } else { mttr_dut };

    let k = n - m + 1;
    let lead = c(n, k);
    let mut out = AnalyticTermBreakdown {
        dd_independent: lead * ((1.0 - b_dd) * dd).powi(k as i32),
        dut_independent: lead
            * ((1.0 - b_dut) * dut).powi(k as i32)
            * t1.powi((n - m) as i32)
            * (t1 / (n - m + 2) as f64 + mttr_dut),
        duu_independent: lead
            * ((1.0 - b_duu) * duu).powi(k as i32)
            * t0.powi((n - m) as i32)
            * (t0 / (n - m + 2) as f64),
        ..Default::default()
    };

    for i in 1..=(n - m) {
        let ii = i as i32;
        let dd_part = c(n - i, k - i) * (f(k - i, b_dd) * dd).powi((k - i) as i32) * c(n, i);
        out.dd_dut += dd_part
            * (f(i, b_dut) * dut).powi(ii)
            * t1.powi(ii - 1)
            * (t1 / (i + 1) as f64 + mttr_dut);
        out.dd_duu +=
            dd_part * (f(i, b_duu) * duu).powi(ii) * t0.powi(ii - 1) * (t0 / (i + 1) as f64);
        out.dut_duu += c(n - i, k - i)
            * ((1.0 - b_dut) * dut).powi((k - i) as i32)
            * t1.powi((n - m - i) as i32)
            * (t1 / (n - m + 2 - i) as f64 + mttr_dut)
            * c(n, i)
            * ((1.0 - b_duu) * duu).powi(ii)
            * t0.powi(ii - 1)
            * (t0 / (i + 1) as f64);
    }

    for i in 1..=(n - m - 1) {
        for j in 1..=(n - m - i) {
            let (ii, jj) = (i as i32, j as i32);
            let rest = k - i - j;
            out.dd_dut_duu += c(n - i - j, rest)
                * (f(rest, b_dd) * dd).powi(rest as i32)
                * c(n - i, j)
                * ((1.0 - b_dut) * dut).powi(jj)
                * t1.powi(jj - 1)
                * (t1 / (j + 1) as f64 + mttr_dut)
                * c(n, i)
                * ((1.0 - b_duu) * duu).powi(ii)
                * t0.powi(ii - 1)
                * (t0 / (i + 1) as f64);
        }
    }

    out.ccf_dd = b_dd * dd;
    out.ccf_dut = b_dut * dut * (t1 / 2.0 + mttr_dut);
    out.ccf_duu = b_duu * duu * (t0 / 2.0);
    Ok(out)
}

pub fn pfd_avg_analytic(params: &SafetyParams) -> Result<PfdResult> {
    let breakdown = analytic_breakdown(params)?;
    let mut result = PfdResult::new(Method::Analytic, breakdown.total().min(1.0));
    result
        .diagnostics
        .extend(check_validity(params).iter().map(ToString::to_string));
    let terms = breakdown
        .terms()
        .iter()
        .map(|(name, v)| format!("{name}={v:.6e}"))
        .collect::<Vec<_>>()
        .join(" ");
    result.diagnostics.push(format!("terms: {terms}"));
    Ok(result)
}
