//! Closed-form exponents for `|x|^σ1 u_t = Δu + |x|^σ2 |u|^p + t^ϱ w(x)`.
//!
//! Everything here is plain arithmetic on `f64`. The only non-obvious piece is
//! [`ExtReal`]: the forced critical exponent is infinite whenever
//! `N - 2 - ϱ(2 + σ1) <= 0`, and that case is carried as a distinct variant
//! rather than as `f64::INFINITY`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for closed-form identity checks.
pub const IDENTITY_RTOL: f64 = 1e-12;

/// The parameter tuple `(N, σ1, σ2, ϱ, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Spatial dimension N.
    #[serde(rename = "N")]
    pub dim: u32,
    /// Weight exponent on the time derivative.
    pub sigma1: f64,
    /// Weight exponent on the nonlinearity.
    pub sigma2: f64,
    /// Temporal forcing exponent ϱ.
    pub rho: f64,
    /// Nonlinearity power.
    pub p: f64,
}

impl ProblemParams {
    pub fn new(dim: u32, sigma1: f64, sigma2: f64, rho: f64, p: f64) -> Self {
        Self { dim, sigma1, sigma2, rho, p }
    }

    pub fn with_p(self, p: f64) -> Self {
        Self { p, ..self }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// `A = 2 + σ1`.
    pub fn a(&self) -> f64 {
        2.0 + self.sigma1
    }

    /// Checks the hypotheses and returns the params back, or every violation.
    pub fn validated(self) -> Result<Self> {
        let v = validate(&self);
        if v.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(v.violations))
        }
    }

    /// Compact `key=value` rendering used in CSV comment lines.
    pub fn describe(&self) -> String {
        format!("N={},sigma1={},sigma2={},rho={},p={}", self.dim, self.sigma1, self.sigma2, self.rho, self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationResult {
    pub violations: Vec<String>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(params: &ProblemParams) -> ValidationResult {
    let mut violations = Vec::new();
    let reals = [("sigma1", params.sigma1), ("sigma2", params.sigma2), ("rho", params.rho), ("p", params.p)];
    for (name, v) in reals {
        if !v.is_finite() {
            violations.push(format!("{name} is not finite"));
        }
    }
    if params.dim < 2 {
        violations.push("N < 2".to_string());
    }
    if params.sigma1 <= -2.0 {
        violations.push("sigma1 <= -2".to_string());
    }
    if params.sigma2 <= -2.0 {
        violations.push("sigma2 <= -2".to_string());
    }
    if params.rho <= -1.0 {
        violations.push("rho <= -1".to_string());
    }
    if params.p <= 1.0 {
        violations.push("p <= 1".to_string());
    }
    ValidationResult { violations }
}

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// Compares a real number against this extended real.
    pub fn cmp_real(&self, x: f64) -> Ordering {
        match *self {
            ExtReal::PosInfinity => Ordering::Greater,
            ExtReal::Finite(v) => v.partial_cmp(&x).unwrap_or(Ordering::Equal),
        }
    }

    /// `x < self`
    pub fn exceeds(&self, x: f64) -> bool {
        self.cmp_real(x) == Ordering::Greater
    }

    /// `x > self`
    pub fn is_exceeded_by(&self, x: f64) -> bool {
        self.cmp_real(x) == Ordering::Less
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "inf"),
        }
    }
}

/// First critical (Fujita) exponent `1 + (2+σ2)/(N+σ1)`.
pub fn fujita_first(params: &ProblemParams) -> f64 {
    1.0 + (2.0 + params.sigma2) / (params.n() + params.sigma1)
}

/// Second critical exponent μ* `= 2(2+σ2)/((2+σ1)(p-1))`.
pub fn fujita_second(params: &ProblemParams) -> f64 {
    2.0 * (2.0 + params.sigma2) / (params.a() * (params.p - 1.0))
}

/// Scaling-invariant Lebesgue index `p_c = N(p-1)/(2+σ2)`.
pub fn scaling_index(params: &ProblemParams) -> f64 {
    params.n() * (params.p - 1.0) / (2.0 + params.sigma2)
}

/// Forced critical exponent `p* = (N+σ2-ϱA)/(N-2-ϱA)`, infinite when the
/// denominator is not positive.
pub fn critical_forced(params: &ProblemParams) -> ExtReal {
    let ra = params.rho * params.a();
    let den = params.n() - 2.0 - ra;
    if den <= 0.0 {
        ExtReal::PosInfinity
    } else {
        ExtReal::Finite((params.n() + params.sigma2 - ra) / den)
    }
}

/// Forcing index `r_c = N(p-1)/(2+σ2+(1+ϱ)(2+σ1)(p-1))`.
pub fn forcing_index(params: &ProblemParams) -> f64 {
    let pm1 = params.p - 1.0;
    params.n() * pm1 / (2.0 + params.sigma2 + (1.0 + params.rho) * params.a() * pm1)
}

/// `1/r_c` computed through `1/p_c + (1+ϱ)A/N` instead of directly.
pub fn forcing_index_inverse_via_identity(params: &ProblemParams) -> f64 {
    1.0 / scaling_index(params) + (1.0 + params.rho) * params.a() / params.n()
}

/// `f(p) = ϱA p² - (N-2+ϱA) p + (N+σ2)` evaluated at an arbitrary `p`.
pub fn quadratic_f(params: &ProblemParams, p: f64) -> f64 {
    let ra = params.rho * params.a();
    ra * p * p - (params.n() - 2.0 + ra) * p + (params.n() + params.sigma2)
}

/// Closed form of `f(p*) = ϱA(σ2+2)²/(N-2-ϱA)²`.
pub fn quadratic_f_at_critical(params: &ProblemParams) -> f64 {
    let ra = params.rho * params.a();
    let den = params.n() - 2.0 - ra;
    ra * (params.sigma2 + 2.0).powi(2) / (den * den)
}

/// Open interval `(lo, hi)` of admissible values of `1/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseWindow {
    pub lo: f64,
    pub hi: f64,
}

impl InverseWindow {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains_r(&self, r: f64) -> bool {
        let inv = 1.0 / r;
        r > 1.0 && inv > self.lo && inv < self.hi
    }

    /// Midpoint in `1/r` coordinates, returned as `r`.
    pub fn midpoint_r(&self) -> f64 {
        2.0 / (self.lo + self.hi)
    }

    /// Window in `r` coordinates; the upper end is infinite when `lo == 0`.
    pub fn r_bounds(&self) -> (f64, f64) {
        let r_lo = 1.0 / self.hi;
        let r_hi = if self.lo > 0.0 { 1.0 / self.lo } else { f64::INFINITY };
        (r_lo, r_hi)
    }
}

/// Raw bounds `(L, U)` of the `1/r` window; no emptiness check. `L` is clipped
/// at zero since `r < ∞`.
pub fn r_window_bounds(params: &ProblemParams) -> InverseWindow {
    let n = params.n();
    let a = params.a();
    let p = params.p;
    let inv_pc = 1.0 / scaling_index(params);
    let lo = (inv_pc - a / (n * p)).max(inv_pc + params.rho * a / n).max(0.0);
    let hi = inv_pc.min((n + params.sigma2) / (n * p));
    InverseWindow { lo, hi }
}

pub fn r_window(params: &ProblemParams) -> Result<InverseWindow> {
    let w = r_window_bounds(params);
    if w.is_empty() {
        Err(Error::EmptyWindow { lo: w.lo, hi: w.hi })
    } else {
        Ok(w)
    }
}

/// Time weights of the global fixed-point construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub r: f64,
    pub mu: f64,
    pub beta: f64,
    pub delta: f64,
}

impl Weights {
    /// Residuals of `1 - pμ - δ = -μ` and `-μ = ϱ + 1 - β`.
    pub fn identity_residuals(&self, params: &ProblemParams) -> (f64, f64) {
        let lhs = 1.0 - params.p * self.mu - self.delta;
        (lhs + self.mu, -self.mu - (params.rho + 1.0 - self.beta))
    }

    pub fn bounds_hold(&self, params: &ProblemParams) -> bool {
        self.mu > 0.0
            && self.mu < 1.0 / params.p
            && self.beta > 0.0
            && self.beta < 1.0
            && self.delta > 0.0
            && self.delta < 1.0
    }
}

pub fn derived_weights(params: &ProblemParams, r: f64) -> Result<Weights> {
    let window = r_window(params)?;
    if !window.contains_r(r) {
        return Err(Error::WindowViolation { r, lo: window.lo, hi: window.hi });
    }
    let n = params.n();
    let a = params.a();
    let mu = n / a * (1.0 / scaling_index(params) - 1.0 / r);
    let beta = n / a * (1.0 / forcing_index(params) - 1.0 / r);
    let delta = n * (params.p - 1.0) / (a * r) - (params.sigma2 - params.sigma1) / a;
    let w = Weights { r, mu, beta, delta };

    let (e1, e2) = w.identity_residuals(params);
    let scale = 1.0 + mu.abs() + beta.abs() + params.rho.abs();
    if e1.abs() > IDENTITY_RTOL * scale || e2.abs() > IDENTITY_RTOL * scale || !w.bounds_hold(params) {
        return Err(Error::ConditionViolation(format!(
            "weights {w:?} break the bounds or identities (residuals {e1:e}, {e2:e})"
        )));
    }
    Ok(w)
}

/// `q > max{Np/(N+σ2), N(p-1)/(2+σ2)}` and `q >= p`.
pub fn local_q_admissible(params: &ProblemParams, q: f64) -> bool {
    let n = params.n();
    let lower = (n * params.p / (n + params.sigma2)).max(n * (params.p - 1.0) / (2.0 + params.sigma2));
    q.is_finite() && q >= 1.0 && q > lower && q >= params.p
}

/// Time-decay exponent α of the nonlinear Duhamel term in the local theory.
pub fn local_alpha(params: &ProblemParams, q: f64) -> Result<f64> {
    if !local_q_admissible(params, q) {
        return Err(Error::Inadmissible {
            q,
            reason: "need q > max{Np/(N+sigma2), N(p-1)/(2+sigma2)} and q >= p".into(),
        });
    }
    let a = params.a();
    let alpha = params.n() * (params.p - 1.0) / (q * a) + (params.sigma1 - params.sigma2) / a;
    debug_assert!(alpha < 1.0);
    Ok(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassSign {
    Positive,
    Zero,
    Negative,
}

impl MassSign {
    pub fn of(mass: f64) -> Self {
        if mass > 0.0 {
            MassSign::Positive
        } else if mass < 0.0 {
            MassSign::Negative
        } else {
            MassSign::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NoGlobalRhoPositive,
    NoGlobalSubcritical,
    NoGlobalCriticalRhoZero,
    GlobalCandidateSupercritical,
    Unclassified,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NoGlobalRhoPositive => "NoGlobal_RhoPositive",
            Regime::NoGlobalSubcritical => "NoGlobal_Subcritical",
            Regime::NoGlobalCriticalRhoZero => "NoGlobal_CriticalRhoZero",
            Regime::GlobalCandidateSupercritical => "GlobalCandidate_Supercritical",
            Regime::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(N+σ2)/(N-2)_+`, infinite at `N = 2`.
pub fn rho_zero_threshold(params: &ProblemParams) -> ExtReal {
    let den = params.n() - 2.0;
    if den <= 0.0 {
        ExtReal::PosInfinity
    } else {
        ExtReal::Finite((params.n() + params.sigma2) / den)
    }
}

pub fn classify_regime(params: &ProblemParams, mass: MassSign) -> Regime {
    if !validate(params).is_valid() {
        return Regime::Unclassified;
    }
    let positive = mass == MassSign::Positive;
    let p = params.p;
    if params.rho > 0.0 {
        return if positive { Regime::NoGlobalRhoPositive } else { Regime::Unclassified };
    }
    if params.rho == 0.0 {
        let below = rho_zero_threshold(params).cmp_real(p) != Ordering::Less;
        return if positive && below { Regime::NoGlobalCriticalRhoZero } else { Regime::Unclassified };
    }
    let p_star = critical_forced(params);
    match p_star.cmp_real(p) {
        Ordering::Greater if positive => Regime::NoGlobalSubcritical,
        Ordering::Less => Regime::GlobalCandidateSupercritical,
        _ => Regime::Unclassified,
    }
}

/// All derived exponents for one parameter tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub params: ProblemParams,
    pub p_fujita: f64,
    pub mu_star: f64,
    pub p_c: f64,
    pub p_star: ExtReal,
    pub r_c: f64,
    /// Raw `(L, U)` bounds; may be empty.
    pub r_window: InverseWindow,
    pub weights: Option<Weights>,
    pub regime: Regime,
}

pub const REPORT_COLUMNS: [&str; 16] = [
    "N", "sigma1", "sigma2", "rho", "p", "p_fujita", "mu_star", "p_c", "p_star", "r_c", "r_lo", "r_hi", "mu", "beta",
    "delta", "regime",
];

impl ExponentReport {
    /// Builds the report. Weights are computed at `r`, or at the window
    /// midpoint when `r` is `None`, and only when the window is nonempty.
    pub fn compute(params: &ProblemParams, mass: MassSign, r: Option<f64>) -> Result<Self> {
        let params = params.validated()?;
        let window = r_window_bounds(&params);
        let weights = if window.is_empty() {
            None
        } else {
            let r = r.unwrap_or_else(|| window.midpoint_r());
            Some(derived_weights(&params, r)?)
        };
        Ok(Self {
            params,
            p_fujita: fujita_first(&params),
            mu_star: fujita_second(&params),
            p_c: scaling_index(&params),
            p_star: critical_forced(&params),
            r_c: forcing_index(&params),
            r_window: window,
            weights,
            regime: classify_regime(&params, mass),
        })
    }

    /// Values in [`REPORT_COLUMNS`] order. Missing values are empty strings.
    pub fn csv_fields(&self) -> Vec<String> {
        let (r_lo, r_hi) = if self.r_window.is_empty() {
            (String::new(), String::new())
        } else {
            let (a, b) = self.r_window.r_bounds();
            (fmt_f64(a), fmt_f64(b))
        };
        let w = |f: fn(&Weights) -> f64| self.weights.as_ref().map(|x| fmt_f64(f(x))).unwrap_or_default();
        vec![
            self.params.dim.to_string(),
            fmt_f64(self.params.sigma1),
            fmt_f64(self.params.sigma2),
            fmt_f64(self.params.rho),
            fmt_f64(self.params.p),
            fmt_f64(self.p_fujita),
            fmt_f64(self.mu_star),
            fmt_f64(self.p_c),
            self.p_star.to_string(),
            fmt_f64(self.r_c),
            r_lo,
            r_hi,
            w(|x| x.mu),
            w(|x| x.beta),
            w(|x| x.delta),
            self.regime.to_string(),
        ]
    }

    /// Flat `key=value` block, one pair per line.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in REPORT_COLUMNS.iter().zip(self.csv_fields()) {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pp(dim: u32, s1: f64, s2: f64, rho: f64, p: f64) -> ProblemParams {
        ProblemParams::new(dim, s1, s2, rho, p)
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&pp(3, 0.0, 0.0, -0.5, 2.0)).is_valid());
        let v = validate(&pp(3, -2.0, 0.0, -0.5, 2.0));
        assert_eq!(v.violations, vec!["sigma1 <= -2"]);
        let v = validate(&pp(1, 0.0, 0.0, -0.5, 2.0));
        assert_eq!(v.violations, vec!["N < 2"]);
        let v = validate(&pp(1, -3.0, -3.0, -1.0, 1.0));
        assert_eq!(v.violations.len(), 5);
    }

    #[test]
    fn fujita_exponents() {
        assert_relative_eq!(fujita_first(&pp(3, 0.0, 0.0, 0.0, 2.0)), 5.0 / 3.0);
        assert_relative_eq!(fujita_first(&pp(3, -1.0, 1.0, 0.0, 2.0)), 2.5);
        assert_relative_eq!(fujita_first(&pp(2, 0.0, 2.0, 0.0, 2.0)), 3.0);

        assert_relative_eq!(fujita_second(&pp(3, 0.0, 0.0, 0.0, 2.0)), 2.0);
        assert_relative_eq!(fujita_second(&pp(3, -1.0, 0.0, 0.0, 2.0)), 4.0);
        // 2(2+2)/((2+0)(3-1)) = 2
        assert_relative_eq!(fujita_second(&pp(3, 0.0, 2.0, 0.0, 3.0)), 2.0);
    }

    #[test]
    fn scaling_index_examples() {
        assert_relative_eq!(scaling_index(&pp(3, 0.0, 0.0, 0.0, 2.0)), 1.5);
        assert_relative_eq!(scaling_index(&pp(4, 0.0, -1.0, 0.0, 2.0)), 4.0);
        // p = 1 + (2+σ2)/N gives p_c = 1
        let s2 = 0.7;
        let p = 1.0 + (2.0 + s2) / 3.0;
        assert_relative_eq!(scaling_index(&pp(3, 0.0, s2, 0.0, p)), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn critical_forced_examples() {
        for s1 in [-1.5, -1.0, 0.0, 0.5] {
            assert_eq!(critical_forced(&pp(4, s1, 0.0, 0.0, 2.0)), ExtReal::Finite(2.0));
        }
        assert_eq!(critical_forced(&pp(2, -0.5, 0.3, 0.0, 2.0)), ExtReal::PosInfinity);
        assert_eq!(critical_forced(&pp(3, 0.0, 0.0, -0.5, 2.0)), ExtReal::Finite(2.0));
    }

    #[test]
    fn extreal_ordering() {
        let inf = ExtReal::PosInfinity;
        assert!(inf.exceeds(1e300));
        assert!(!inf.is_exceeded_by(f64::MAX));
        let two = ExtReal::Finite(2.0);
        assert!(two.is_exceeded_by(2.1));
        assert!(two.exceeds(1.9));
        assert_eq!(two.cmp_real(2.0), Ordering::Equal);
        assert_eq!(inf.to_string(), "inf");
    }

    #[test]
    fn forcing_index_examples() {
        assert_relative_eq!(forcing_index(&pp(3, 0.0, 0.0, -0.5, 3.0)), 1.5);
        assert_relative_eq!(forcing_index(&pp(4, -1.0, -1.0, -0.5, 2.0)), 8.0 / 3.0);
        // ϱ → -1 gives r_c → p_c
        let q = pp(3, -0.3, 0.2, -1.0 + 1e-12, 2.5);
        assert_relative_eq!(forcing_index(&q), scaling_index(&q), max_relative = 1e-10);
    }

    #[test]
    fn quadratic_f_examples() {
        let q = pp(3, 0.0, 0.0, -0.5, 2.0);
        assert_relative_eq!(quadratic_f(&q, 2.0), -1.0);
        assert_relative_eq!(quadratic_f_at_critical(&q), -1.0);
        // ϱ = 0: linear
        let q0 = pp(5, -0.5, 0.4, 0.0, 2.0);
        for p in [1.0, 2.0, 7.5] {
            assert_relative_eq!(quadratic_f(&q0, p), -3.0 * p + 5.4, max_relative = 1e-14);
        }
    }

    #[test]
    fn r_window_examples() {
        let w = r_window(&pp(3, 0.0, 0.0, -0.5, 3.0)).unwrap();
        assert_relative_eq!(w.lo, 1.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(w.hi, 1.0 / 3.0, max_relative = 1e-14);
        let (a, b) = w.r_bounds();
        assert_relative_eq!(a, 3.0, max_relative = 1e-14);
        assert_relative_eq!(b, 9.0, max_relative = 1e-12);

        // p = p* is outside the precondition: bounds are still reported.
        let at_crit = pp(3, 0.0, 0.0, -0.5, 2.0);
        let raw = r_window_bounds(&at_crit);
        assert!(raw.lo.is_finite() && raw.hi.is_finite());

        // below (N+2+σ1+σ2)/(N+σ1) with ϱ near 0
        let low = pp(3, 0.0, 0.0, -0.01, 5.0 / 3.0);
        assert!(matches!(r_window(&low), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn derived_weights_example() {
        let q = pp(3, 0.0, 0.0, -0.5, 3.0);
        let w = derived_weights(&q, 6.0).unwrap();
        assert_relative_eq!(w.mu, 0.25, max_relative = 1e-14);
        assert_relative_eq!(w.beta, 0.75, max_relative = 1e-14);
        assert_relative_eq!(w.delta, 0.5, max_relative = 1e-14);
        assert_relative_eq!(1.0 - 3.0 * w.mu - w.delta, -0.25, max_relative = 1e-14);
        assert_relative_eq!(q.rho + 1.0 - w.beta, -0.25, max_relative = 1e-14);
        assert_relative_eq!(w.delta, 1.0 - (q.p - 1.0) * w.mu, max_relative = 1e-14);
        assert_relative_eq!(w.mu - w.beta, -(1.0 + q.rho), max_relative = 1e-14);

        assert!(matches!(derived_weights(&q, 2.0), Err(Error::WindowViolation { .. })));
        assert!(matches!(derived_weights(&q, 10.0), Err(Error::WindowViolation { .. })));
    }

    #[test]
    fn local_exponents() {
        let q = pp(3, 0.0, 0.0, 0.0, 2.0);
        assert!(local_q_admissible(&q, 4.0));
        assert_relative_eq!(local_alpha(&q, 4.0).unwrap(), 0.375);
        assert!(!local_q_admissible(&q, 1.4));
        assert!(matches!(local_alpha(&q, 1.4), Err(Error::Inadmissible { .. })));
        // q = p allowed when the strict bounds hold: N=2, σ2=0, p=3 → bounds 3 and 2.
        let q2 = pp(2, 0.0, 0.0, 0.0, 3.0);
        assert!(!local_q_admissible(&q2, 3.0));
        let q3 = pp(3, 0.0, 0.5, 0.0, 2.0); // bounds 6/3.5 ≈ 1.714, 3/2.5 = 1.2
        assert!(local_q_admissible(&q3, 2.0));
        // large q with σ1 = σ2 drives α to 0
        let a = local_alpha(&pp(3, -0.5, -0.5, 0.0, 2.0), 1e9).unwrap();
        assert!(a.abs() < 1e-8);
    }

    #[test]
    fn alpha_below_one_iff_q_above_scaling_index() {
        let q = pp(3, 0.0, 0.0, 0.0, 2.0);
        let a = q.a();
        for qq in [1.2, 1.5, 1.6, 3.0, 10.0] {
            let alpha = q.n() * (q.p - 1.0) / (qq * a) + (q.sigma1 - q.sigma2) / a;
            assert_eq!(alpha < 1.0, qq > scaling_index(&q));
        }
    }

    #[test]
    fn regime_examples() {
        use MassSign::*;
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, -0.5, 1.5), Positive), Regime::NoGlobalSubcritical);
        assert_eq!(classify_regime(&pp(2, 0.0, 0.0, 0.0, 7.0), Positive), Regime::NoGlobalCriticalRhoZero);
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, -0.5, 2.0), Positive), Regime::Unclassified);
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, 0.5, 9.0), Positive), Regime::NoGlobalRhoPositive);
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, 0.5, 9.0), Negative), Regime::Unclassified);
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, -0.5, 3.0), Zero), Regime::GlobalCandidateSupercritical);
        // ϱ = 0 at the threshold (N+σ2)/(N-2) = 3 is still blow-up
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, 0.0, 3.0), Positive), Regime::NoGlobalCriticalRhoZero);
        assert_eq!(classify_regime(&pp(3, 0.0, 0.0, 0.0, 3.5), Positive), Regime::Unclassified);
    }

    #[test]
    fn report_serialization() {
        let rep = ExponentReport::compute(&pp(3, 0.0, 0.0, -0.5, 3.0), MassSign::Positive, None).unwrap();
        let kv = rep.to_key_value();
        assert!(kv.contains("p_star=2\n"));
        assert!(kv.contains("r_lo=3\n"));
        assert!(kv.contains("regime=GlobalCandidate_Supercritical\n"));
        assert_eq!(rep.csv_fields().len(), REPORT_COLUMNS.len());
        let w = rep.weights.unwrap();
        // midpoint of (1/9, 1/3) in 1/r is 2/9
        assert_relative_eq!(w.r, 4.5, max_relative = 1e-14);

        let rep2 = ExponentReport::compute(&pp(2, 0.0, 0.0, 0.0, 3.0), MassSign::Positive, None).unwrap();
        assert_eq!(rep2.p_star, ExtReal::PosInfinity);
        assert!(rep2.to_key_value().contains("p_star=inf"));

        assert!(ExponentReport::compute(&pp(1, 0.0, 0.0, 0.0, 3.0), MassSign::Positive, None).is_err());
    }
}
