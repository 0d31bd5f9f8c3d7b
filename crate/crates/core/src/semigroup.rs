//! Discrete semigroup generated by `|x|^{-σ1} Δ` on radial functions.
//!
//! The operator is discretized in flux form on cells around each node: with
//! weighted cell volumes `V_i = ∫ r^{N-1+σ1} dr` (the first cell reaches down
//! to the origin) and face conductances `a_{i+1/2} = r_{i+1/2}^{N-1} / (r_{i+1} - r_i)`,
//!
//! ```text
//! V_i du_i/dt = a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1}).
//! ```
//!
//! There is no flux through the origin and the last node is held at zero.
//! `Σ V_i u_i` changes only through the outer face, which gives exact
//! discrete bookkeeping of the weighted mass `∫ |x|^{σ1} u dx`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::grid::{sphere_area, RadialField, RadialGrid};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    /// Crank–Nicolson; the first step is replaced by two implicit Euler half
    /// steps to damp stiff modes of rough data.
    CrankNicolson,
}

/// Factored symmetric tridiagonal system (Thomas algorithm).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    inv_pivot: Vec<f64>,
    c_prime: Vec<f64>,
}

impl Tridiagonal {
    /// `diag[i] x_i + off[i-1] x_{i-1} + off[i] x_{i+1}`; `off.len() == diag.len() - 1`.
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        debug_assert_eq!(off.len() + 1, n);
        let mut c_prime = vec![0.0; n.saturating_sub(1)];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let lower = if i > 0 { off[i - 1] } else { 0.0 };
            let pivot = diag[i] - lower * prev_c;
            if !(pivot.is_finite() && pivot > 0.0) {
                return Err(Error::StepFailure { node: i, pivot });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                prev_c = off[i] * inv_pivot[i];
                c_prime[i] = prev_c;
            }
        }
        Ok(Self { sub: off.to_vec(), inv_pivot, c_prime })
    }

    /// Solves in place.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.inv_pivot.len();
        debug_assert_eq!(x.len(), n);
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i - 1] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }
}

/// One implicit Euler step `(V/dt + K) u⁺ = V/dt (u + dt·s)` for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct EulerStep {
    dt: f64,
    system: Tridiagonal,
    vol_over_dt: Vec<f64>,
}

impl EulerStep {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` by one step with an explicit nodal source (in `u_t`
    /// units). The boundary node is reset to zero.
    pub fn step(&self, values: &mut [f64], source: Option<&[f64]>) {
        let n = self.vol_over_dt.len();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let s = source.map_or(0.0, |s| s[i]);
                self.vol_over_dt[i] * (values[i] + self.dt * s)
            })
            .collect();
        self.system.solve(&mut rhs);
        values[..n].copy_from_slice(&rhs);
        values[n] = 0.0;
    }
}

/// Immutable discrete semigroup on a fixed grid.
#[derive(Debug, Clone)]
pub struct SemigroupOp {
    grid: Arc<RadialGrid>,
    dim: u32,
    sigma1: f64,
    scheme: Scheme,
    max_dt: f64,
    /// Weighted cell volumes of the interior unknowns `0..M-1`.
    volumes: Vec<f64>,
    /// `a_{i+1/2}` for `i = 0..M-1`; the last one couples to the boundary node.
    conductance: Vec<f64>,
}

impl SemigroupOp {
    pub fn new(grid: Arc<RadialGrid>, dim: u32, sigma1: f64, scheme: Scheme, max_dt: f64) -> Result<Self> {
        if grid.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!("semigroup needs at least {MIN_NODES} nodes, got {}", grid.len())));
        }
        if dim < 1 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(sigma1 > -2.0 && sigma1 <= 0.0) {
            return Err(Error::ConditionViolation(format!("sigma1 = {sigma1} must lie in (-2, 0]")));
        }
        if !(max_dt > 0.0) {
            return Err(Error::InvalidArgument(format!("max_dt = {max_dt} must be positive")));
        }
        let r = grid.nodes();
        let faces = grid.faces();
        let n = r.len() - 1;
        let kappa = dim as f64 + sigma1;
        let vol = |a: f64, b: f64| (b.powf(kappa) - a.powf(kappa)) / kappa;
        let volumes: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { faces[i - 1] };
                vol(left, faces[i])
            })
            .collect();
        let conductance: Vec<f64> = (0..n).map(|i| faces[i].powi(dim as i32 - 1) / (r[i + 1] - r[i])).collect();
        Ok(Self { grid, dim, sigma1, scheme, max_dt, volumes, conductance })
    }

    /// Default grid of the smoothing studies: log-uniform on `[r_max·10⁻⁴, r_max]`.
    pub fn with_default_grid(r_max: f64, m: usize, dim: u32, sigma1: f64, scheme: Scheme, max_dt: f64) -> Result<Self> {
        let grid = Arc::new(RadialGrid::default_log(r_max, m)?);
        Self::new(grid, dim, sigma1, scheme, max_dt)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn max_dt(&self) -> f64 {
        self.max_dt
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn zeros(&self) -> RadialField {
        RadialField::zeros(self.grid.clone(), self.dim as f64)
    }

    pub fn field(&self, values: Vec<f64>) -> Result<RadialField> {
        RadialField::new(self.grid.clone(), values, self.dim as f64)
    }

    /// `ω_{N-1} Σ V_i u_i`, the discrete `∫ |x|^{σ1} u dx`.
    pub fn weighted_mass(&self, values: &[f64]) -> f64 {
        let s: f64 = self.volumes.iter().zip(values).map(|(v, u)| v * u).sum();
        sphere_area(self.dim as f64) * s
    }

    /// Nodal `|x|^{-σ1} Δu` of the discrete operator; zero at the boundary node.
    pub fn apply_generator(&self, values: &[f64]) -> Vec<f64> {
        let n = self.volumes.len();
        let mut out = vec![0.0; n + 1];
        for i in 0..n {
            let right = self.conductance[i] * (values[i + 1] - values[i]);
            let left = if i > 0 { self.conductance[i - 1] * (values[i] - values[i - 1]) } else { 0.0 };
            out[i] = (right - left) / self.volumes[i];
        }
        out
    }

    fn matrix(&self, dt: f64, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.volumes.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let left = if i > 0 { self.conductance[i - 1] } else { 0.0 };
            diag[i] = self.volumes[i] / dt + theta * (left + self.conductance[i]);
            if i + 1 < n {
                off[i] = -theta * self.conductance[i];
            }
        }
        (diag, off)
    }

    pub fn euler_step(&self, dt: f64) -> Result<EulerStep> {
        let (diag, off) = self.matrix(dt, 1.0);
        let system = Tridiagonal::factor(&diag, &off)?;
        let vol_over_dt = self.volumes.iter().map(|v| v / dt).collect();
        Ok(EulerStep { dt, system, vol_over_dt })
    }

    /// Advances nodal values in place by time `t`.
    pub fn advance(&self, values: &mut [f64], t: f64) -> Result<()> {
        self.advance_with(values, t, true)
    }

    /// Like [`advance`](Self::advance), but a Crank–Nicolson operator skips the
    /// damping start. For continuing a march whose data is already smooth.
    pub fn advance_continuing(&self, values: &mut [f64], t: f64) -> Result<()> {
        self.advance_with(values, t, false)
    }

    fn advance_with(&self, values: &mut [f64], t: f64, startup: bool) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time {t} must be non-negative")));
        }
        let n = self.volumes.len();
        if values.len() != n + 1 {
            return Err(Error::InvalidArgument(format!("{} values for {} nodes", values.len(), n + 1)));
        }
        if t == 0.0 {
            return Ok(());
        }
        let steps = (t / self.max_dt).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        values[n] = 0.0;
        match self.scheme {
            Scheme::ImplicitEuler => {
                let stepper = self.euler_step(dt)?;
                for _ in 0..steps {
                    stepper.step(values, None);
                }
            }
            Scheme::CrankNicolson => {
                let mut remaining = steps;
                if startup {
                    let half = self.euler_step(0.5 * dt)?;
                    half.step(values, None);
                    half.step(values, None);
                    remaining -= 1;
                }
                if remaining > 0 {
                    let (diag, off) = self.matrix(dt, 0.5);
                    let system = Tridiagonal::factor(&diag, &off)?;
                    let mut rhs = vec![0.0; n];
                    for _ in 0..remaining {
                        for i in 0..n {
                            let right = self.conductance[i] * (values[i + 1] - values[i]);
                            let left = if i > 0 { self.conductance[i - 1] * (values[i] - values[i - 1]) } else { 0.0 };
                            rhs[i] = self.volumes[i] / dt * values[i] + 0.5 * (right - left);
                        }
                        system.solve(&mut rhs);
                        values[..n].copy_from_slice(&rhs);
                    }
                }
            }
        }
        Ok(())
    }

    /// `S(t) field`.
    pub fn apply(&self, field: &RadialField, t: f64) -> Result<RadialField> {
        let mut out = field.clone();
        self.advance(&mut out.values, t)?;
        Ok(out)
    }

    /// Evolves `source` through the sorted times, returning `S(t_k) source`.
    pub fn evolve_through(&self, source: &RadialField, times: &[f64]) -> Result<Vec<RadialField>> {
        let mut current = source.clone();
        let mut t_prev = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t < t_prev {
                return Err(Error::InvalidArgument("times must be non-decreasing".into()));
            }
            self.advance(&mut current.values, t - t_prev)?;
            t_prev = t;
            out.push(current.clone());
        }
        Ok(out)
    }
}

/// Result of a decay-exponent fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeStudy {
    pub samples: Vec<(f64, f64)>,
    pub fit: LineFit,
    pub theory: f64,
    /// Lebesgue index of the measured norm.
    pub q: f64,
    pub gamma: f64,
}

impl SlopeStudy {
    pub fn fitted(&self) -> f64 {
        self.fit.slope
    }

    pub fn relative_error(&self) -> f64 {
        if self.theory == 0.0 {
            self.fit.slope.abs()
        } else {
            ((self.fit.slope - self.theory) / self.theory).abs()
        }
    }
}

/// Theory exponent `-(N/(2+σ1))(1/a - 1/b)`.
pub fn smoothing_theory(dim: u32, sigma1: f64, a: f64, b: f64) -> f64 {
    -(dim as f64 / (2.0 + sigma1)) * (1.0 / a - 1.0 / b)
}

/// Theory exponent `-(N/(2+σ1))(1/q1 - 1/q2) - γ/(2+σ1)`.
pub fn weighted_smoothing_theory(dim: u32, sigma1: f64, q1: f64, q2: f64, gamma: f64) -> f64 {
    smoothing_theory(dim, sigma1, q1, q2) - gamma / (2.0 + sigma1)
}

/// `1 < a, b < ∞` and `1/b <= 1/a < 1 + σ1/N` (`a = b` allowed, slope 0).
pub fn check_smoothing_pair(dim: u32, sigma1: f64, a: f64, b: f64) -> Result<()> {
    let upper = 1.0 + sigma1 / dim as f64;
    let ok = a > 1.0 && b > 1.0 && a.is_finite() && b.is_finite() && 1.0 / b <= 1.0 / a && 1.0 / a < upper;
    if ok {
        Ok(())
    } else {
        Err(Error::ConditionViolation(format!("(a, b) = ({a}, {b}) needs 1 < a, b < inf and 1/b <= 1/a < {upper}")))
    }
}

/// `0 < 1/q2 < γ/N + 1/q1 < 1 + σ1/N`, `0 <= γ < N`, `1 < q1, q2 < ∞`.
pub fn check_weighted_condition(dim: u32, sigma1: f64, q1: f64, q2: f64, gamma: f64) -> Result<()> {
    let n = dim as f64;
    let mid = gamma / n + 1.0 / q1;
    let ok = q1 > 1.0
        && q2 > 1.0
        && q1.is_finite()
        && q2.is_finite()
        && (0.0..n).contains(&gamma)
        && 1.0 / q2 < mid
        && mid < 1.0 + sigma1 / n;
    if ok {
        Ok(())
    } else {
        Err(Error::ConditionViolation(format!(
            "(q1, q2, gamma) = ({q1}, {q2}, {gamma}) violates 0 < 1/q2 < gamma/N + 1/q1 < 1 + sigma1/N"
        )))
    }
}

fn fit_decay(op: &SemigroupOp, source: &RadialField, q: f64, t_list: &[f64]) -> Result<(Vec<(f64, f64)>, LineFit)> {
    if t_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sample times".into()));
    }
    let mut times = t_list.to_vec();
    times.sort_by(|a, b| a.total_cmp(b));
    if !(times[0] > 0.0) {
        return Err(Error::InvalidArgument("sample times must be positive".into()));
    }
    let states = op.evolve_through(source, &times)?;
    let samples: Vec<(f64, f64)> = times.iter().zip(&states).map(|(&t, s)| (t, s.lq_norm(q, 0.0))).collect();
    let (ts, ns): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    if ns.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("norm vanished; cannot fit a decay exponent".into()));
    }
    Ok((samples, log_log_fit(&ts, &ns)))
}

/// Fits the decay of `‖S(t)φ‖_b` over `t_list` and compares with the
/// `L^a → L^b` exponent.
pub fn smoothing_slope(op: &SemigroupOp, a: f64, b: f64, source: &RadialField, t_list: &[f64]) -> Result<SlopeStudy> {
    check_smoothing_pair(op.dim, op.sigma1, a, b)?;
    let (samples, fit) = fit_decay(op, source, b, t_list)?;
    Ok(SlopeStudy { samples, fit, theory: smoothing_theory(op.dim, op.sigma1, a, b), q: b, gamma: 0.0 })
}

/// Fits the decay of `‖S(t)(|x|^{-γ}φ)‖_{q2}`.
pub fn weighted_smoothing_check(
    op: &SemigroupOp,
    q1: f64,
    q2: f64,
    gamma: f64,
    source: &RadialField,
    t_list: &[f64],
) -> Result<SlopeStudy> {
    check_weighted_condition(op.dim, op.sigma1, q1, q2, gamma)?;
    let weighted = source.map(|r, v| v * r.powf(-gamma));
    let (samples, fit) = fit_decay(op, &weighted, q2, t_list)?;
    Ok(SlopeStudy { samples, fit, theory: weighted_smoothing_theory(op.dim, op.sigma1, q1, q2, gamma), q: q2, gamma })
}

/// Weighted cell averages of `r^{-k}` (exact for the power law, including the
/// innermost cell that reaches down to the origin). Requires `k < N + σ1`.
pub fn power_cell_averages(op: &SemigroupOp, k: f64) -> Result<Vec<f64>> {
    let kappa = op.dim as f64 + op.sigma1;
    let e = kappa - k;
    if !(e > 0.0) {
        return Err(Error::ConditionViolation(format!("r^-{k} is not locally integrable against r^(N-1+sigma1)")));
    }
    let faces = op.grid.faces();
    let mut out: Vec<f64> = (0..op.volumes.len())
        .map(|i| {
            let left = if i == 0 { 0.0 } else { faces[i - 1].powf(e) };
            (faces[i].powf(e) - left) / e / op.volumes[i]
        })
        .collect();
    out.push(0.0);
    Ok(out)
}

/// Scale-critical source `r^{-N/a}`, projected onto cells. The smoothing bound
/// is attained by it, so the measured `L^b` decay follows the `L^a → L^b`
/// exponent exactly up to truncation at the grid ends.
pub fn critical_source(op: &SemigroupOp, a: f64) -> Result<RadialField> {
    let values = power_cell_averages(op, op.dim as f64 / a)?;
    op.field(values)
}

/// `φ ≈ r^{-N/q1}` chosen so that `|x|^{-γ}φ` is the cell projection of
/// `r^{-γ-N/q1}`; the source for [`weighted_smoothing_check`].
pub fn weighted_critical_source(op: &SemigroupOp, q1: f64, gamma: f64) -> Result<RadialField> {
    let avg = power_cell_averages(op, gamma + op.dim as f64 / q1)?;
    let values = op.grid.nodes().iter().zip(avg).map(|(r, v)| r.powf(gamma) * v).collect();
    op.field(values)
}

/// `t_list` log-spaced over one decade ending at `t_max` (so `t₀ = 0.1·t_max`).
pub fn default_t_list(t_max: f64, n: usize) -> Vec<f64> {
    crate::fit::logspace(0.1 * t_max, t_max, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub discrepancy: f64,
    pub compared_nodes: usize,
}

/// Relative `L²` discrepancy between `D_λ^{-1} S(t) D_λ φ` and `S(λ^{2+σ1} t) φ`
/// over nodes at least a decade away from both grid ends.
pub fn scaling_identity_check(op: &SemigroupOp, lambda: f64, t: f64, source: &RadialField) -> Result<ScalingCheck> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(Error::InvalidArgument(format!("need lambda > 0 and t > 0 (got {lambda}, {t})")));
    }
    let dilated = source.map(|r, _| source.interpolate(lambda * r));
    let lhs_raw = op.apply(&dilated, t)?;
    let rhs = op.apply(source, lambda.powf(2.0 + op.sigma1) * t)?;

    let (lo, hi) = (10.0 * op.grid.r_min(), 0.1 * op.grid.r_max());
    let nodes = op.grid.nodes();
    let mut r_sel = Vec::new();
    let mut diff2 = Vec::new();
    let mut ref2 = Vec::new();
    let k = op.dim as f64 - 1.0;
    for (i, &r) in nodes.iter().enumerate() {
        let back = r / lambda;
        if r < lo || r > hi || back < lo || back > hi {
            continue;
        }
        let lhs = lhs_raw.interpolate(back);
        let w = r.powf(k);
        r_sel.push(r);
        diff2.push((lhs - rhs.values[i]).powi(2) * w);
        ref2.push(rhs.values[i].powi(2) * w);
    }
    if r_sel.len() < 5 {
        return Err(Error::InsufficientResolution { found: r_sel.len(), needed: 5 });
    }
    let num = crate::grid::trapezoid(&r_sel, &diff2);
    let den = crate::grid::trapezoid(&r_sel, &ref2);
    let discrepancy = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok(ScalingCheck { discrepancy, compared_nodes: r_sel.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Profile;
    use approx::assert_relative_eq;

    fn gaussian_op(m: usize, sigma1: f64, scheme: Scheme, max_dt: f64) -> SemigroupOp {
        SemigroupOp::with_default_grid(20.0, m, 3, sigma1, scheme, max_dt).unwrap()
    }

    #[test]
    fn thomas_matches_dense() {
        let diag = [4.0, 5.0, 6.0, 7.0];
        let off = [-1.0, -2.0, -0.5];
        let t = Tridiagonal::factor(&diag, &off).unwrap();
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x_true[i];
            if i > 0 {
                b[i] += off[i - 1] * x_true[i - 1];
            }
            if i < 3 {
                b[i] += off[i] * x_true[i + 1];
            }
        }
        t.solve(&mut b);
        for i in 0..4 {
            assert_relative_eq!(b[i], x_true[i], max_relative = 1e-13);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let op = gaussian_op(128, -0.5, Scheme::ImplicitEuler, 1e-2);
        let f = RadialField::from_profile(
            op.grid().clone(),
            3.0,
            &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
        );
        assert_eq!(op.apply(&f, 0.0).unwrap(), f);
        assert!(op.apply(&f, -1.0).is_err());
    }

    #[test]
    fn rejects_small_grid() {
        let g = Arc::new(RadialGrid::log_uniform(1e-2, 1.0, 8).unwrap());
        assert!(SemigroupOp::new(g, 3, 0.0, Scheme::ImplicitEuler, 0.1).is_err());
    }

    #[test]
    fn matches_heat_kernel_for_gaussian() {
        // σ1 = 0: S(t) e^{-r²} = (1+4t)^{-3/2} e^{-r²/(1+4t)}
        let op = gaussian_op(1024, 0.0, Scheme::CrankNicolson, 2.5e-3);
        let f = RadialField::from_profile(
            op.grid().clone(),
            3.0,
            &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
        );
        let t = 0.25;
        let u = op.apply(&f, t).unwrap();
        let exact = RadialField::from_fn(op.grid().clone(), 3.0, |r| {
            (1.0 + 4.0 * t).powf(-1.5) * (-r * r / (1.0 + 4.0 * t)).exp()
        });
        let rel = u.sub(&exact).lq_norm(2.0, 0.0) / exact.lq_norm(2.0, 0.0);
        assert!(rel < 1e-2, "relative L2 error {rel}");
    }

    #[test]
    fn positivity_and_weighted_mass() {
        for sigma1 in [0.0, -0.5, -1.0] {
            let op = SemigroupOp::with_default_grid(50.0, 512, 3, sigma1, Scheme::ImplicitEuler, 1e-2).unwrap();
            let f = RadialField::from_profile(op.grid().clone(), 3.0, &Profile::Bump { support: 1.0, amplitude: 1.0 });
            let m0 = op.weighted_mass(&f.values);
            let u = op.apply(&f, 1.0).unwrap();
            assert!(u.values.iter().all(|&v| v >= 0.0));
            let drift = ((op.weighted_mass(&u.values) - m0) / m0).abs();
            assert!(drift < 1e-6, "sigma1={sigma1} drift {drift}");
        }
    }

    #[test]
    fn semigroup_property_under_refinement() {
        let f_of = |op: &SemigroupOp| {
            RadialField::from_profile(
                op.grid().clone(),
                3.0,
                &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
            )
        };
        let mut errs = Vec::new();
        for dt in [2e-2, 1e-2, 5e-3] {
            let op = gaussian_op(256, -0.5, Scheme::ImplicitEuler, dt);
            let f = f_of(&op);
            let two = op.apply(&op.apply(&f, 0.13).unwrap(), 0.29).unwrap();
            let one = op.apply(&f, 0.42).unwrap();
            errs.push(two.sub(&one).lq_norm(2.0, 0.0) / one.lq_norm(2.0, 0.0));
        }
        assert!(errs[0] < 1e-2);
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn condition_checks() {
        assert!(check_smoothing_pair(3, -1.0, 2.0, 4.0).is_ok());
        assert!(check_smoothing_pair(3, -1.0, 1.4, 4.0).is_err()); // 1/a = 0.71 > 2/3
        assert!(check_smoothing_pair(3, 0.0, 4.0, 2.0).is_err());
        assert!(check_smoothing_pair(3, 0.0, 2.0, 2.0).is_ok());
        assert!(check_weighted_condition(3, 0.0, 3.0, 3.0, 1.0).is_ok());
        assert!(check_weighted_condition(3, -0.5, 2.0, 4.0, 0.5).is_ok());
        assert!(check_weighted_condition(3, 0.0, 1.2, 3.0, 1.0).is_err());
        assert!(check_weighted_condition(3, 0.0, 3.0, 3.0, 3.0).is_err());
    }

    #[test]
    fn theory_exponents() {
        assert_relative_eq!(smoothing_theory(3, -0.5, 2.0, 4.0), -0.5, max_relative = 1e-14);
        assert_relative_eq!(smoothing_theory(3, 0.0, 1.5, 3.0), -0.5, max_relative = 1e-14);
        assert_eq!(smoothing_theory(3, -0.5, 2.5, 2.5), 0.0);
        assert_relative_eq!(weighted_smoothing_theory(3, 0.0, 3.0, 3.0, 1.0), -0.5, max_relative = 1e-14);
        assert_relative_eq!(weighted_smoothing_theory(3, -0.5, 2.0, 4.0, 0.5), -0.5 - 1.0 / 3.0, max_relative = 1e-14);
        assert_eq!(weighted_smoothing_theory(3, -0.5, 2.0, 4.0, 0.0), smoothing_theory(3, -0.5, 2.0, 4.0));
    }

    #[test]
    fn equal_exponents_do_not_increase() {
        let op = gaussian_op(512, 0.0, Scheme::ImplicitEuler, 1e-2);
        let f = RadialField::from_profile(
            op.grid().clone(),
            3.0,
            &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
        );
        let study = smoothing_slope(&op, 2.0, 2.0, &f, &default_t_list(1.0, 6)).unwrap();
        assert_eq!(study.theory, 0.0);
        assert!(study.samples.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12)));
    }

    #[test]
    fn weighted_with_zero_gamma_matches_plain() {
        let op = gaussian_op(256, -0.5, Scheme::ImplicitEuler, 1e-3);
        let src = critical_source(&op, 2.0).unwrap();
        let t_list = default_t_list(0.02, 5);
        let a = smoothing_slope(&op, 2.0, 4.0, &src, &t_list).unwrap();
        let b = weighted_smoothing_check(&op, 2.0, 4.0, 0.0, &src, &t_list).unwrap();
        assert_eq!(a.fit, b.fit);
        assert_eq!(a.theory, b.theory);
    }

    #[test]
    fn unit_dilation_is_exact() {
        let op = gaussian_op(256, -1.0, Scheme::ImplicitEuler, 1e-2);
        let f = RadialField::from_profile(
            op.grid().clone(),
            3.0,
            &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
        );
        let c = scaling_identity_check(&op, 1.0, 0.1, &f).unwrap();
        assert_eq!(c.discrepancy, 0.0);
    }
}
