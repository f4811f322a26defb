//! Input parameters, derived failure rates and the built-in case library.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `lambda * T` products for the closed-form equations to apply.
pub const VALIDITY_LIMIT: f64 = 0.1;

/// Assessment period shared by all built-in cases (8 years).
pub const CASE_T0_HOURS: f64 = 70128.0;

/// Full input set for one M-out-of-N subsystem.
///
/// Rates are per hour, periods in hours. `t0` must be a whole number of
/// proof-test periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawParams")]
pub struct SafetyParams {
    /// Channels required operative.
    pub m: u32,
    /// Channels in total.
    pub n: u32,
    pub lambda_d: f64,
    /// Diagnostic coverage.
    pub dc: f64,
    /// Proof test coverage.
    pub ptc: f64,
    pub beta_dd: f64,
    pub beta_dut: f64,
    pub beta_duu: f64,
    pub mu_dd: f64,
    pub mu_dut: f64,
    /// Proof-test period.
    #[serde(rename = "t1_hours")]
    pub t1: f64,
    /// Assessment period.
    #[serde(rename = "t0_hours")]
    pub t0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    m: u32,
    n: u32,
    lambda_d: f64,
    dc: f64,
    ptc: f64,
    beta_dd: f64,
    beta_dut: f64,
    beta_duu: f64,
    mu_dd: f64,
    mu_dut: f64,
    t1_hours: f64,
    t0_hours: f64,
}

impl TryFrom<RawParams> for SafetyParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        let p = SafetyParams {
            m: r.m,
            n: r.n,
            lambda_d: r.lambda_d,
            dc: r.dc,
            ptc: r.ptc,
            beta_dd: r.beta_dd,
            beta_dut: r.beta_dut,
            beta_duu: r.beta_duu,
            mu_dd: r.mu_dd,
            mu_dut: r.mu_dut,
            t1: r.t1_hours,
            t0: r.t0_hours,
        };
        p.validate()?;
        Ok(p)
    }
}

impl SafetyParams {
    /// Checks every invariant; engines call this before computing anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.m < 1 || self.m > self.n {
            return bad(format!("need 1 <= m <= n, got m={} n={}", self.m, self.n));
        }
        for (name, v) in [
            ("lambda_d", self.lambda_d),
            ("mu_dd", self.mu_dd),
            ("mu_dut", self.mu_dut),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a finite rate >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("dc", self.dc),
            ("ptc", self.ptc),
            ("beta_dd", self.beta_dd),
            ("beta_dut", self.beta_dut),
            ("beta_duu", self.beta_duu),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        for (name, v) in [("t1_hours", self.t1), ("t0_hours", self.t0)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        let ratio = self.t0 / self.t1;
        if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::NonIntegerPhases {
                t0: self.t0,
                t1: self.t1,
            });
        }
        Ok(())
    }

    /// Number of proof-test periods in the assessment period.
    pub fn phase_count(&self) -> usize {
        (self.t0 / self.t1).round() as usize
    }

    /// Architecture label such as `1oo2`.
    pub fn architecture(&self) -> String {
        format!("{}oo{}", self.m, self.n)
    }
}

/// Per-mode rate decomposition of `lambda_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub lambda_dd: f64,
    pub lambda_du: f64,
    pub lambda_dut: f64,
    pub lambda_duu: f64,
    pub dd: ModeSplit,
    pub dut: ModeSplit,
    pub duu: ModeSplit,
}

/// Independent and common-cause parts of one failure mode's rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSplit {
    pub independent: f64,
    pub ccf: f64,
}

impl ModeSplit {
    fn new(total: f64, beta: f64) -> Self {
        ModeSplit {
            independent: (1.0 - beta) * total,
            ccf: beta * total,
        }
    }

    pub fn total(&self) -> f64 {
        self.independent + self.ccf
    }
}

pub fn derive_rates(params: &SafetyParams) -> DerivedRates {
    let lambda_dd = params.dc * params.lambda_d;
    let lambda_du = (1.0 - params.dc) * params.lambda_d;
    let lambda_dut = params.ptc * lambda_du;
    let lambda_duu = (1.0 - params.ptc) * lambda_du;
    DerivedRates {
        lambda_dd,
        lambda_du,
        lambda_dut,
        lambda_duu,
        dd: ModeSplit::new(lambda_dd, params.beta_dd),
        dut: ModeSplit::new(lambda_dut, params.beta_dut),
        duu: ModeSplit::new(lambda_duu, params.beta_duu),
    }
}

/// Which closed-form validity condition was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityCondition {
    /// `lambda_DUT * T1 < 0.1`
    DutOverTestPeriod,
    /// `lambda_DUU * T0 < 0.1`
    DuuOverAssessment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWarning {
    pub condition: ValidityCondition,
    pub product: f64,
}

impl fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.condition {
            ValidityCondition::DutOverTestPeriod => "lambda_DUT*T1",
            ValidityCondition::DuuOverAssessment => "lambda_DUU*T0",
        };
        write!(
            f,
            "{name} = {:.3} >= {VALIDITY_LIMIT}: closed-form equations outside their validity domain",
            self.product
        )
    }
}

/// Validity conditions of the closed-form equations; one warning per violation.
pub fn check_validity(params: &SafetyParams) -> Vec<ValidityWarning> {
    let rates = derive_rates(params);
    [
        (ValidityCondition::DutOverTestPeriod, rates.lambda_dut * params.t1),
        (ValidityCondition::DuuOverAssessment, rates.lambda_duu * params.t0),
    ]
    .into_iter()
    .filter(|(_, product)| *product >= VALIDITY_LIMIT)
    .map(|(condition, product)| ValidityWarning { condition, product })
    .collect()
}

// ---------------------------------------------------------------------------
// Case library
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::I,
        CaseId::Ii,
        CaseId::Iii,
        CaseId::Iv,
        CaseId::V,
        CaseId::Vi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::I => "i",
            CaseId::Ii => "ii",
            CaseId::Iii => "iii",
            CaseId::Iv => "iv",
            CaseId::V => "v",
            CaseId::Vi => "vi",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// Parses a case id and returns its parameter set.
pub fn load_case_by_name(name: &str) -> Result<SafetyParams> {
    Ok(load_case(name.parse()?))
}

/// Built-in data sets: odd cases share the low-rate column, even cases the
/// high-rate column; architectures are 1oo1, 1oo2, 2oo3 in pairs.
pub fn load_case(id: CaseId) -> SafetyParams {
    let (m, n) = match id {
        CaseId::I | CaseId::Ii => (1, 1),
        CaseId::Iii | CaseId::Iv => (1, 2),
        CaseId::V | CaseId::Vi => (2, 3),
    };
    let low_rate = matches!(id, CaseId::I | CaseId::Iii | CaseId::V);
    if low_rate {
        SafetyParams {
            m,
            n,
            lambda_d: 2.70e-6,
            dc: 0.50,
            ptc: 0.90,
            beta_dd: 0.02,
            beta_dut: 0.05,
            beta_duu: 0.05,
            mu_dd: 0.0417,
            mu_dut: 0.0417,
            t1: 4383.0,
            t0: CASE_T0_HOURS,
        }
    } else {
        SafetyParams {
            m,
            n,
            lambda_d: 1.35e-5,
            dc: 0.25,
            ptc: 0.70,
            beta_dd: 0.05,
            beta_dut: 0.10,
            beta_duu: 0.10,
            mu_dd: 0.0833,
            mu_dut: 0.0833,
            t1: 8766.0,
            t0: CASE_T0_HOURS,
        }
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    FaultTree,
    Markov,
    Petri,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Analytic,
        Method::FaultTree,
        Method::Markov,
        Method::Petri,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::FaultTree => "faulttree",
            Method::Markov => "markov",
            Method::Petri => "petri",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// One engine's PFDavg estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfdResult {
    pub value: f64,
    pub method: Method,
    /// 90% confidence half-width; only Monte Carlo results carry one.
    pub ci90_halfwidth: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl PfdResult {
    pub fn new(method: Method, value: f64) -> Self {
        PfdResult {
            value,
            method,
            ci90_halfwidth: None,
            diagnostics: Vec::new(),
        }
    }
}
