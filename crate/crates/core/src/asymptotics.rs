//! Power-log approximation and dimension functions, hypothesis checks, the
//! zero/infinity series verdicts and the dimension formula.
//!
//! All parameters are exact rationals, so every decision below is an exact
//! comparison. For `psi(r) = c r^-tau log(e+r)^-beta` and
//! `f(r) = r^s log(1/r)^gamma` the general term `r^n f(psi(r^d))` is
//! asymptotic to `r^(n - d tau s) (log r)^(gamma - beta s)` when `tau > 0`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{serde_rat, Rat};
use crate::error::{Error, Result};

fn to_float<T: Float + FromPrimitive>(r: &Rat) -> T {
    T::from_f64(r.to_f64().expect("finite")).expect("representable")
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Approximation function `psi: N -> R+`.
#[derive(Debug, Clone, PartialEq)]
pub enum ApproxFunction {
    /// `c * r^-tau * log(e + r)^-beta`
    PowerLog { c: Rat, tau: Rat, beta: Rat },
    /// Explicit decreasing values `(r, psi(r))`; only usable empirically.
    Table(Vec<(u64, f64)>),
}

impl ApproxFunction {
    /// `r^-tau`
    pub fn power(tau: Rat) -> Self {
        ApproxFunction::PowerLog {
            c: Rat::one(),
            tau,
            beta: Rat::zero(),
        }
    }

    pub fn power_log(c: Rat, tau: Rat, beta: Rat) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidParameter(format!("psi constant c = {c} must be positive")));
        }
        if tau.is_negative() {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be non-negative")));
        }
        Ok(ApproxFunction::PowerLog { c, tau, beta })
    }

    pub fn table(mut values: Vec<(u64, f64)>) -> Result<Self> {
        values.sort_by_key(|v| v.0);
        if values.is_empty() || values.iter().any(|v| v.1 <= 0.0 || v.0 == 0) {
            return Err(Error::InvalidParameter("psi table needs positive values at r >= 1".into()));
        }
        if values.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::InvalidParameter("psi table must be decreasing".into()));
        }
        Ok(ApproxFunction::Table(values))
    }

    pub fn tau(&self) -> Option<&Rat> {
        match self {
            ApproxFunction::PowerLog { tau, .. } => Some(tau),
            ApproxFunction::Table(_) => None,
        }
    }

    pub fn eval<T: Float + FromPrimitive>(&self, r: T) -> T {
        match self {
            ApproxFunction::PowerLog { c, tau, beta } => {
                let mut v = to_float::<T>(c) * r.powf(-to_float::<T>(tau));
                if !beta.is_zero() {
                    let e = T::from_f64(std::f64::consts::E).unwrap();
                    v = v * (e + r).ln().powf(-to_float::<T>(beta));
                }
                v
            }
            ApproxFunction::Table(values) => {
                let x = r.to_f64().unwrap_or(f64::INFINITY);
                // step function: value at the largest tabulated r' <= r
                let idx = values.partition_point(|v| (v.0 as f64) <= x);
                let v = if idx == 0 { values[0].1 } else { values[idx - 1].1 };
                T::from_f64(v).unwrap()
            }
        }
    }

    /// `ln psi(x)` from `ln x`, usable far beyond the `f64` range of `x`.
    pub fn ln_eval(&self, ln_x: f64) -> f64 {
        match self {
            ApproxFunction::PowerLog { c, tau, beta } => {
                let mut v = c.to_f64().unwrap().ln() - tau.to_f64().unwrap() * ln_x;
                if !beta.is_zero() {
                    // ln(e + x) = ln x + ln(1 + e/x)
                    let ln_e_plus_x = if ln_x > 700.0 {
                        ln_x
                    } else {
                        (std::f64::consts::E + ln_x.exp()).ln()
                    };
                    v -= beta.to_f64().unwrap() * ln_e_plus_x.ln();
                }
                v
            }
            ApproxFunction::Table(_) => self.eval::<f64>(ln_x.exp()).ln(),
        }
    }

    /// `psi(r)` exactly, when `tau` is an integer and `beta = 0`.
    pub fn eval_exact(&self, r: &BigInt) -> Option<Rat> {
        match self {
            ApproxFunction::PowerLog { c, tau, beta } if beta.is_zero() && tau.is_integer() => {
                let t: u32 = tau.to_integer().try_into().ok()?;
                Some(c / Rat::from_integer(r.pow(t)))
            }
            _ => None,
        }
    }

    /// Rational `(lo, hi)` with `lo <= psi(r) <= hi`.
    pub fn eval_bounds(&self, r: &BigInt) -> (Rat, Rat) {
        if let Some(v) = self.eval_exact(r) {
            return (v.clone(), v);
        }
        let ln_r = BigRational::from_integer(r.clone()).to_f64().unwrap().ln();
        let v = self.ln_eval(ln_r).exp();
        let lo = BigRational::from_float(v * (1.0 - 1e-9)).unwrap_or_else(Rat::zero);
        let hi = BigRational::from_float(v * (1.0 + 1e-9)).unwrap();
        (lo, hi)
    }

    /// `psi(r)` as a rational: exact when possible, else the exact value of the `f64` result.
    pub fn eval_rat(&self, r: &BigInt) -> Rat {
        self.eval_exact(r).unwrap_or_else(|| {
            let ln_r = Rat::from_integer(r.clone()).to_f64().unwrap().ln();
            BigRational::from_float(self.ln_eval(ln_r).exp()).unwrap_or_else(Rat::zero)
        })
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxFunction::PowerLog { c, tau, beta } => {
                write!(f, "{c}*r^-({tau})")?;
                if !beta.is_zero() {
                    write!(f, "*log(e+r)^-({beta})")?;
                }
                Ok(())
            }
            ApproxFunction::Table(v) => write!(f, "table[{} values]", v.len()),
        }
    }
}

/// Dimension function `f(r) = r^s log(1/r)^gamma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimFunction {
    pub s: Rat,
    pub gamma: Rat,
}

impl DimFunction {
    pub fn power(s: Rat) -> Self {
        DimFunction { s, gamma: Rat::zero() }
    }

    pub fn new(s: Rat, gamma: Rat) -> Result<Self> {
        if !s.is_positive() {
            return Err(Error::InvalidParameter(format!("dimension exponent s = {s} must be positive")));
        }
        Ok(DimFunction { s, gamma })
    }

    pub fn eval<T: Float + FromPrimitive>(&self, r: T) -> T {
        let mut v = r.powf(to_float::<T>(&self.s));
        if !self.gamma.is_zero() {
            v = v * r.recip().ln().powf(to_float::<T>(&self.gamma));
        }
        v
    }

    /// `ln f(y)` from `ln y` (`y < 1`).
    pub fn ln_eval(&self, ln_y: f64) -> f64 {
        let mut v = self.s.to_f64().unwrap() * ln_y;
        if !self.gamma.is_zero() {
            v += self.gamma.to_f64().unwrap() * (-ln_y).ln();
        }
        v
    }
}

impl fmt::Display for DimFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r^({})", self.s)?;
        if !self.gamma.is_zero() {
            write!(f, "*log(1/r)^({})", self.gamma)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub status: Status,
    /// The parameter inequality that decided the status.
    pub detail: String,
}

impl Condition {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Condition {
            status: if ok { Status::Satisfied } else { Status::Violated },
            detail: detail.into(),
        }
    }

    fn inconclusive(detail: impl Into<String>) -> Self {
        Condition {
            status: Status::Inconclusive,
            detail: detail.into(),
        }
    }

    pub fn ok(&self) -> bool {
        self.status == Status::Satisfied
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypothesisReport {
    pub psi_decreasing: Condition,
    pub dimension_function: Condition,
    /// `r^-n f(r) -> infinity` as `r -> 0`, eventually decreasing.
    pub f_growth: Condition,
    /// `f(Cx) << f(x)` for small `x`.
    pub f_doubling: Condition,
    /// `f(psi(delta r)) << f(psi(r))` for large `r`.
    pub psi_compatibility: Condition,
    /// `r^d psi(r) -> 0`; needed only for intrinsic = ambient.
    pub growth_condition: Condition,
    /// `psi` is constant.
    pub degenerate_psi: bool,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    /// Conditions required for the zero/infinity law (growth excluded).
    pub fn verdict_conditions(&self) -> [(&'static str, &Condition); 5] {
        [
            ("psi_decreasing", &self.psi_decreasing),
            ("dimension_function", &self.dimension_function),
            ("f_growth", &self.f_growth),
            ("f_doubling", &self.f_doubling),
            ("psi_compatibility", &self.psi_compatibility),
        ]
    }
}

fn f_growth_condition(f: &DimFunction, n: u32) -> Condition {
    let n = rat(n as i64);
    if f.s < n {
        Condition::new(true, format!("s = {} < n = {}", f.s, n))
    } else if f.s == n {
        Condition::new(
            f.gamma.is_positive(),
            format!("s = n = {n}, needs gamma > 0 (gamma = {})", f.gamma),
        )
    } else {
        Condition::new(false, format!("s = {} > n = {}", f.s, n))
    }
}

/// Closed-form check of every hypothesis of the zero/infinity law.
pub fn validate_hypotheses(psi: &ApproxFunction, f: &DimFunction, n: u32, d: u32) -> HypothesisReport {
    let mut notes = Vec::new();
    let dimension_function = Condition::new(f.s.is_positive(), format!("s = {} > 0", f.s));
    if !f.gamma.is_zero() {
        notes.push("f is increasing only near 0 (gamma != 0); conditions hold eventually".into());
    }
    let f_growth = f_growth_condition(f, n);
    if f_growth.ok() && !f.gamma.is_zero() && f.s < rat(n as i64) {
        notes.push("r^-n f(r) is decreasing eventually, not on all of (0, 1)".into());
    }
    let f_doubling = Condition::new(true, "f(Cx)/f(x) -> C^s for power-log f");

    let (psi_decreasing, psi_compatibility, growth_condition, degenerate_psi) = match psi {
        ApproxFunction::PowerLog { tau, beta, .. } => {
            let decreasing = if tau.is_positive() {
                Condition::new(true, format!("tau = {tau} > 0"))
            } else {
                Condition::new(!beta.is_negative(), format!("tau = 0, needs beta >= 0 (beta = {beta})"))
            };
            let degenerate = tau.is_zero() && beta.is_zero();
            if degenerate {
                notes.push("psi is constant: decreasing only in the weak sense".into());
            }
            let compat = Condition::new(true, "f(psi(delta r))/f(psi(r)) -> delta^(-tau s) for power-log psi");
            let dd = rat(d as i64);
            let growth = if *tau > dd {
                Condition::new(true, format!("tau = {tau} > d = {d}"))
            } else if *tau == dd {
                Condition::new(beta.is_positive(), format!("tau = d = {d}, needs beta > 0 (beta = {beta})"))
            } else {
                Condition::new(false, format!("tau = {tau} < d = {d}"))
            };
            (decreasing, compat, growth, degenerate)
        }
        ApproxFunction::Table(_) => (
            Condition::inconclusive("tabulated psi has no symbolic form"),
            Condition::inconclusive("tabulated psi has no symbolic form"),
            Condition::inconclusive("tabulated psi has no symbolic form"),
            false,
        ),
    };

    HypothesisReport {
        psi_decreasing,
        dimension_function,
        f_growth,
        f_doubling,
        psi_compatibility,
        growth_condition,
        degenerate_psi,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Zero,
    Infinity,
    NotApplicable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Power of `r` in the general term of the series.
    #[serde(with = "serde_rat")]
    pub exponent: Rat,
    /// Power of `log r` in the general term.
    #[serde(with = "serde_rat")]
    pub log_exponent: Rat,
    pub series: String,
    pub hypotheses: HypothesisReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
}

/// Convergence of `sum r^a (log r)^b`.
pub fn series_converges(exponent: &Rat, log_exponent: &Rat) -> bool {
    let minus_one = -Rat::one();
    *exponent < minus_one || (*exponent == minus_one && *log_exponent < minus_one)
}

fn term_exponents(psi: &ApproxFunction, f: &DimFunction, n: u32, d: u32) -> Option<(Rat, Rat)> {
    match psi {
        ApproxFunction::PowerLog { tau, beta, .. } => {
            let exponent = rat(n as i64) - rat(d as i64) * tau * &f.s;
            let log_exponent = if tau.is_positive() {
                &f.gamma - beta * &f.s
            } else {
                // r^n dominates; only the sign of the r-exponent matters
                -beta * &f.s
            };
            Some((exponent, log_exponent))
        }
        ApproxFunction::Table(_) => None,
    }
}

fn decide(
    psi: &ApproxFunction,
    f: &DimFunction,
    n: u32,
    d: u32,
    hypotheses: HypothesisReport,
    conditions: Vec<(&'static str, Condition)>,
    series: String,
) -> Verdict {
    let Some((exponent, log_exponent)) = term_exponents(psi, f, n, d) else {
        return Verdict {
            outcome: Outcome::Inconclusive,
            exponent: Rat::zero(),
            log_exponent: Rat::zero(),
            series,
            hypotheses,
            reasons: vec!["tabulated psi: no symbolic series test".into()],
        };
    };
    let reasons: Vec<String> = conditions
        .iter()
        .filter(|(_, c)| !c.ok())
        .map(|(name, c)| format!("{name}: {}", c.detail))
        .collect();
    let outcome = if !reasons.is_empty() {
        Outcome::NotApplicable
    } else if series_converges(&exponent, &log_exponent) {
        Outcome::Zero
    } else {
        Outcome::Infinity
    };
    Verdict {
        outcome,
        exponent,
        log_exponent,
        series,
        hypotheses,
        reasons,
    }
}

/// Zero/infinity law for the intrinsically approximable points on the graph:
/// the measure is zero iff `sum r^n f(psi(r^d))` converges.
pub fn series_verdict(psi: &ApproxFunction, f: &DimFunction, n: u32, d: u32) -> Verdict {
    let hyp = validate_hypotheses(psi, f, n, d);
    let conditions = hyp
        .verdict_conditions()
        .into_iter()
        .map(|(k, c)| (k, c.clone()))
        .collect();
    decide(psi, f, n, d, hyp, conditions, format!("sum r^{n} f(psi(r^{d}))"))
}

/// Jarník's (and, for `f = r^n`, Khintchine's) law on `R^n`:
/// the measure is zero iff `sum f(psi(r)) r^n` converges.
pub fn classical_verdict(psi: &ApproxFunction, f: &DimFunction, n: u32) -> Verdict {
    let hyp = validate_hypotheses(psi, f, n, 1);
    let khintchine = f.s == rat(n as i64) && f.gamma.is_zero();
    let mut conditions: Vec<(&'static str, Condition)> = hyp
        .verdict_conditions()
        .into_iter()
        .filter(|(k, _)| *k != "f_growth" && *k != "psi_compatibility")
        .map(|(k, c)| (k, c.clone()))
        .collect();
    conditions.push((
        "f_growth",
        if khintchine {
            Condition::new(true, format!("f = r^{n}: Lebesgue case"))
        } else {
            hyp.f_growth.clone()
        },
    ));
    decide(psi, f, n, 1, hyp, conditions, format!("sum f(psi(r)) r^{n}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dimension {
    #[serde(with = "serde_rat")]
    pub s: Rat,
    pub applicable: bool,
    pub intrinsic_equals_ambient: bool,
    /// `(n+1)/(nd)`; the formula needs `tau` strictly above it.
    #[serde(with = "serde_rat")]
    pub threshold: Rat,
}

/// `dim = (1+n)/(d tau)` for `tau > (n+1)/(nd)`.
pub fn dimension_formula(n: u32, d: u32, tau: &Rat) -> Result<Dimension> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be at least 1".into()));
    }
    let threshold = Rat::new(BigInt::from(n + 1), BigInt::from(n * d));
    if *tau <= threshold {
        return Err(Error::NotApplicable(format!(
            "tau = {tau} must exceed (n+1)/(nd) = {threshold}"
        )));
    }
    let s = Rat::from_integer(BigInt::from(n + 1)) / (rat(d as i64) * tau);
    Ok(Dimension {
        s,
        applicable: true,
        intrinsic_equals_ambient: *tau > rat(d as i64),
        threshold,
    })
}
