//! Test-function (capacity) integrals and their exponent fits in `R`.
//!
//! With `p' = p/(p-1)` the test function is
//! `Φ(t,x) = ψ(t/T)^{p'} φ(|x|/R)^{2p'}`. The negative power `Φ^{-1/(p-1)}`
//! cancels against the positive powers produced by differentiation:
//!
//! ```text
//! |Φ_t|^{p'} Φ^{-1/(p-1)}  = (p'|ψ'|/T)^{p'} φ^{2p'}
//! |ΔΦ|^{p'}  Φ^{-1/(p-1)}  = ψ^{p'} (2p')^{p'} |φ Δφ + (2p'-1)|∇φ|²|^{p'}
//! ```
//!
//! so every integrand below is bounded and the quadrature sees no singular edge.
//! Integration is done in physical variables `t ∈ [0,T]`, `r ∈ [0,2R]`; the
//! dependence on `R` and `T` is left for the fit to discover.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponents::{ExtReal, ProblemParams};
use crate::fit::{linear_fit, LineFit};
use crate::grid::sphere_area;
use crate::report::{csv_writer, num};

/// Minimum coefficient of determination accepted from a regression.
pub const MIN_R_SQUARED: f64 = 0.99;
/// Simpson panels per unit-length flat piece.
const BASE_PANELS: usize = 64;
/// Refinement factor inside transition bands.
const BAND_REFINEMENT: usize = 8;

/// Quintic smoothstep `6x⁵ - 15x⁴ + 10x³` on `[0,1]`, clamped outside.
/// Returns value, first and second derivative.
pub fn smoothstep(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let x2 = x * x;
        let v = x2 * x * (10.0 + x * (-15.0 + 6.0 * x));
        let d1 = 30.0 * x2 * (1.0 - x) * (1.0 - x);
        let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        (v, d1, d2)
    }
}

/// Ramp from 1 at `a` down to 0 at `b`.
fn ramp_down(x: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let w = b - a;
    let (v, d1, d2) = smoothstep((b - x) / w);
    (v, -d1 / w, d2 / (w * w))
}

/// The time cutoff `ψ`, the space cutoff `φ` and the log-coordinate cutoff
/// used in the critical case. Breakpoints are fixed; the ramps are C².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    /// `ψ` rises on `[psi[0], psi[1]]`, equals 1 up to `psi[2]`, falls to 0 at `psi[3]`.
    pub psi: [f64; 4],
    /// `φ` equals 1 on `[0, phi[0]]`, 0 beyond `phi[1]`.
    pub phi: [f64; 2],
    /// Log cutoff equals 1 for `y ≤ log_phi[0]`, 0 for `y ≥ log_phi[1]`.
    pub log_phi: [f64; 2],
}

impl Default for CutoffPair {
    fn default() -> Self {
        Self { psi: [0.25, 0.5, 0.75, 0.8], phi: [1.0, 2.0], log_phi: [0.0, 1.0] }
    }
}

impl CutoffPair {
    pub fn psi(&self, t: f64) -> (f64, f64) {
        let [a, b, c, d] = self.psi;
        if t <= c {
            let w = b - a;
            let (v, d1, _) = smoothstep((t - a) / w);
            (v, d1 / w)
        } else {
            let (v, d1, _) = ramp_down(t, c, d);
            (v, d1)
        }
    }

    pub fn phi(&self, r: f64) -> (f64, f64, f64) {
        ramp_down(r, self.phi[0], self.phi[1])
    }

    pub fn log_phi(&self, y: f64) -> (f64, f64, f64) {
        ramp_down(y, self.log_phi[0], self.log_phi[1])
    }

    /// Intervals of `τ = t/T` on which `ψ` is not constant.
    fn psi_bands(&self) -> [(f64, f64); 2] {
        [(self.psi[0], self.psi[1]), (self.psi[2], self.psi[3])]
    }
}

/// Composite Simpson with `n` panels (rounded up to even).
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Simpson over a transition band of `[a, b]`, where `scale` maps the band
/// back to unit-scale cutoff coordinates. `BAND_REFINEMENT` times finer than a
/// flat piece of the same scaled length.
fn band(f: &impl Fn(f64) -> f64, a: f64, b: f64, scale: f64) -> f64 {
    let panels = ((b - a) / scale * (BASE_PANELS * BAND_REFINEMENT) as f64).ceil() as usize;
    simpson(f, a, b, panels.max(BASE_PANELS))
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure(format!("{name} evaluated to {v}")))
    }
}

fn conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    Ok(p / (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityIntegrals {
    pub r: f64,
    pub t: f64,
    pub i_time: f64,
    pub i_space: f64,
    pub i_forcing: f64,
}

/// The three integrals for one `(R, T)`.
pub fn capacity_integrals(params: &ProblemParams, r: f64, t: f64, cut: &CutoffPair) -> Result<CapacityIntegrals> {
    if !(r > 1.0 && t > 1.0) {
        return Err(Error::InvalidArgument(format!("R = {r} and T = {t} must both exceed 1")));
    }
    let pc = conjugate(params.p)?;
    let n = params.n();
    let omega = sphere_area(n);
    let k = (params.sigma1 * params.p - params.sigma2) / (params.p - 1.0);
    let s_space = -params.sigma2 / (params.p - 1.0);

    // Time factors.
    let dpsi = |s: f64| (pc * cut.psi(s / t).1.abs() / t).powf(pc);
    let psi_pow = |s: f64| cut.psi(s / t).0.powf(pc);
    let forcing = |s: f64| s.powf(params.rho) * psi_pow(s);
    let bands = cut.psi_bands();
    let time_deriv: f64 = bands.iter().map(|&(a, b)| band(&dpsi, a * t, b * t, t)).sum();
    let plateau = (bands[0].1, bands[1].0);
    let flat_panels = ((plateau.1 - plateau.0) * BASE_PANELS as f64).ceil() as usize;
    let psi_mass =
        bands.iter().map(|&(a, b)| band(&psi_pow, a * t, b * t, t)).sum::<f64>() + (plateau.1 - plateau.0) * t;
    let i_forcing = bands.iter().map(|&(a, b)| band(&forcing, a * t, b * t, t)).sum::<f64>()
        + simpson(&forcing, plateau.0 * t, plateau.1 * t, flat_panels);

    // Space factors.
    let (r0, r1) = (cut.phi[0] * r, cut.phi[1] * r);
    if !(n + k > 0.0) {
        return Err(Error::QuadratureFailure(format!("r^{} is not integrable at the origin", n - 1.0 + k)));
    }
    let phi_pow = |x: f64| x.powf(n - 1.0 + k) * cut.phi(x / r).0.powf(2.0 * pc);
    let space_time = r0.powf(n + k) / (n + k) + band(&phi_pow, r0, r1, r);
    let lap = |x: f64| {
        let (v, d1, d2) = cut.phi(x / r);
        let (g1, g2) = (d1 / r, d2 / (r * r));
        let delta = g2 + (n - 1.0) / x * g1;
        let body = (2.0 * pc).powf(pc) * (v * delta + (2.0 * pc - 1.0) * g1 * g1).abs().powf(pc);
        x.powf(n - 1.0 + s_space) * body
    };
    let space_lap = band(&lap, r0, r1, r);

    Ok(CapacityIntegrals {
        r,
        t,
        i_time: finite("I_time", omega * time_deriv * space_time)?,
        i_space: finite("I_space", omega * psi_mass * space_lap)?,
        i_forcing: finite("I_forcing", i_forcing)?,
    })
}

/// How `T` is tied to `R` in a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TRule {
    /// `T = R^{2+σ1}`.
    Subcritical,
    /// `T = R^m`.
    Power(f64),
}

impl TRule {
    pub fn exponent(&self, params: &ProblemParams) -> f64 {
        match self {
            TRule::Subcritical => params.a(),
            TRule::Power(m) => *m,
        }
    }

    /// Closed-form `R`-exponents of `I_time/I_forcing` and `I_space/I_forcing`.
    pub fn theory(&self, params: &ProblemParams) -> (f64, f64) {
        let (n, p, rho) = (params.n(), params.p, params.rho);
        let pc = p / (p - 1.0);
        let k = (params.sigma1 * p - params.sigma2) / (p - 1.0);
        let m = self.exponent(params);
        let time = -rho * m - pc * m + k + n;
        let space = -rho * m - (2.0 * p + params.sigma2) / (p - 1.0) + n;
        (time, space)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityFit {
    pub params: ProblemParams,
    pub rule: TRule,
    pub samples: Vec<CapacityIntegrals>,
    /// Fit of `ln(I_time/I_forcing)` against `ln R`.
    pub time_fit: LineFit,
    /// Fit of `ln(I_space/I_forcing)` against `ln R`.
    pub space_fit: LineFit,
    pub theory_time: f64,
    pub theory_space: f64,
}

impl CapacityFit {
    pub fn time_error(&self) -> f64 {
        rel(self.time_fit.slope, self.theory_time)
    }

    pub fn space_error(&self) -> f64 {
        rel(self.space_fit.slope, self.theory_space)
    }

    /// Theory predicts nonexistence when both exponents are negative.
    pub fn theory_negative(&self) -> bool {
        self.theory_time < 0.0 && self.theory_space < 0.0
    }

    pub fn fitted_negative(&self) -> bool {
        self.time_fit.slope < 0.0 && self.space_fit.slope < 0.0
    }

    pub fn signs_agree(&self) -> bool {
        self.theory_negative() == self.fitted_negative()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out, &format!("{} rule={:?}", self.params.describe(), self.rule))?;
        w.write_record([
            "R",
            "T",
            "I_time",
            "I_space",
            "I_forcing",
            "fitted_slope_time",
            "theory_slope_time",
            "fitted_slope_space",
            "theory_slope_space",
        ])?;
        for s in &self.samples {
            w.write_record([
                num(s.r),
                num(s.t),
                num(s.i_time),
                num(s.i_space),
                num(s.i_forcing),
                num(self.time_fit.slope),
                num(self.theory_time),
                num(self.space_fit.slope),
                num(self.theory_space),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rel(fitted: f64, theory: f64) -> f64 {
    (fitted - theory).abs() / theory.abs()
}

fn check_span(r_list: &[f64]) -> Result<()> {
    if r_list.len() < 3 || r_list.iter().any(|r| !(*r > 1.0)) {
        return Err(Error::InvalidArgument("need at least three R values, all > 1".into()));
    }
    let (lo, hi) = r_list.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if (hi / lo).log10() < 1.5 {
        return Err(Error::InvalidArgument(format!("R list spans {:.2} decades, need 1.5", (hi / lo).log10())));
    }
    Ok(())
}

fn check_fit(fit: &LineFit) -> Result<()> {
    if fit.r_squared < MIN_R_SQUARED {
        return Err(Error::PoorFit { r_squared: fit.r_squared, threshold: MIN_R_SQUARED });
    }
    Ok(())
}

/// Log-log regression of both capacity ratios against `R` under `rule`.
pub fn capacity_exponent_fit(
    params: &ProblemParams,
    r_list: &[f64],
    rule: TRule,
    cut: &CutoffPair,
) -> Result<CapacityFit> {
    let params = params.validated()?;
    check_span(r_list)?;
    let m = rule.exponent(&params);
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("T = R^{m} must grow with R")));
    }
    let samples =
        r_list.par_iter().map(|&r| capacity_integrals(&params, r, r.powf(m), cut)).collect::<Result<Vec<_>>>()?;
    let lr: Vec<f64> = samples.iter().map(|s| s.r.ln()).collect();
    let lt: Vec<f64> = samples.iter().map(|s| (s.i_time / s.i_forcing).ln()).collect();
    let ls: Vec<f64> = samples.iter().map(|s| (s.i_space / s.i_forcing).ln()).collect();
    let time_fit = linear_fit(&lr, &lt);
    let space_fit = linear_fit(&lr, &ls);
    check_fit(&time_fit)?;
    check_fit(&space_fit)?;
    let (theory_time, theory_space) = rule.theory(&params);
    Ok(CapacityFit { params, rule, samples, time_fit, space_fit, theory_time, theory_space })
}

/// Space capacity `ω ∫ r^{N-1-σ2/(p-1)} |Δg|^{p'} g^{-1/(p-1)} dr` for the
/// log cutoff `g(r) = ℓ(ln(r/√R)/ln√R)^{2p'}`, with the time factor set to 1.
pub fn log_space_capacity(params: &ProblemParams, r: f64, cut: &CutoffPair) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::InvalidArgument(format!("R = {r} must exceed 1")));
    }
    let pc = conjugate(params.p)?;
    let n = params.n();
    let big_l = 0.5 * r.ln();
    // With u = ln r every derivative carries a factor r^{-1}; the remaining
    // power of r is collected into a single exponent.
    let expo = n - params.sigma2 / (params.p - 1.0) - 2.0 * pc;
    let integrand = |y: f64| {
        let (v, d1, d2) = cut.log_phi(y);
        let (f1, f2) = (d1 / big_l, d2 / (big_l * big_l));
        // r²Δf = f_uu + (N-2) f_u for radial f(u).
        let lap = f2 + (n - 2.0) * f1;
        let body = (2.0 * pc).powf(pc) * (v * lap + (2.0 * pc - 1.0) * f1 * f1).abs().powf(pc);
        let u = big_l * (1.0 + y);
        (expo * u).exp() * body * big_l
    };
    let [y0, y1] = cut.log_phi;
    finite("log capacity", sphere_area(n) * band(&integrand, y0, y1, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogCapacityFit {
    pub params: ProblemParams,
    /// `(R, I_space)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Fit of `ln I` against `ln ln R`.
    pub fit: LineFit,
    pub theory: f64,
}

impl LogCapacityFit {
    pub fn relative_error(&self) -> f64 {
        rel(self.fit.slope, self.theory)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out, &format!("{} log cutoff", self.params.describe()))?;
        w.write_record(["R", "log_R", "I_space", "fitted_slope", "theory_slope"])?;
        for &(r, i) in &self.samples {
            w.write_record([num(r), num(r.ln()), num(i), num(self.fit.slope), num(self.theory)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Slope of the critical-case space capacity in `ln ln R`, against `(2-N)/(2+σ2)`.
pub fn log_capacity_fit(params: &ProblemParams, r_list: &[f64], cut: &CutoffPair) -> Result<LogCapacityFit> {
    let params = params.validated()?;
    if params.dim < 3 || params.rho != 0.0 {
        return Err(Error::ConditionViolation("log cutoff needs N >= 3 and rho = 0".into()));
    }
    let critical = match crate::exponents::critical_forced(&params) {
        ExtReal::Finite(v) => v,
        ExtReal::PosInfinity => unreachable!("finite for N >= 3, rho = 0"),
    };
    if (params.p - critical).abs() > 1e-12 * critical {
        return Err(Error::ConditionViolation(format!("p = {} is not the critical value {critical}", params.p)));
    }
    if r_list.len() < 3 || r_list.iter().any(|r| !(*r > 1.0)) {
        return Err(Error::InvalidArgument("need at least three R values, all > 1".into()));
    }
    let samples =
        r_list.par_iter().map(|&r| log_space_capacity(&params, r, cut).map(|i| (r, i))).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = samples.iter().map(|(r, _)| r.ln().ln()).collect();
    let y: Vec<f64> = samples.iter().map(|(_, i)| i.ln()).collect();
    let fit = linear_fit(&x, &y);
    check_fit(&fit)?;
    let theory = (2.0 - params.n()) / (2.0 + params.sigma2);
    Ok(LogCapacityFit { params, samples, fit, theory })
}
