//! Duhamel formulation and Picard iteration.
//!
//! `G(u)(t) = S(t)u0 + F(u)(t) + H(t)` with
//! `F(u)(t) = ∫_0^t S(t-s) |x|^{σ2-σ1}|u(s)|^p ds` and
//! `H(t) = ∫_0^t S(t-s) s^ϱ |x|^{-σ1} w ds`.
//!
//! Integrals are marched on a fixed time grid. On each interval `[a, b]` the
//! integrand is interpolated linearly between the end values, the left value
//! is propagated by `S(b-a)` and the right one is not; for `H` the interval
//! weights are computed against `s^ϱ` exactly, so the integrable singularity
//! at `s = 0` needs no special treatment.

use std::io::Write;

use crate::error::{Error, Result};
use crate::exponents::{critical_forced, derived_weights, local_alpha, r_window, ProblemParams};
use crate::fit::logspace;
use crate::grid::{RadialField, RadialGrid};
use crate::semigroup::SemigroupOp;

/// Values above this are treated as a diverging iteration.
pub const OVERFLOW_CAP: f64 = 1e30;

/// Iteration is declared non-contracting after this many successive ratios ≥ 1.
pub const NON_CONTRACTING_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MildConfig {
    /// Lebesgue index of the X-norm.
    pub r: f64,
    /// Time weight of the X-norm.
    pub mu: f64,
    pub max_picard: usize,
    pub picard_tol: f64,
    /// March steps per output interval.
    pub substeps: usize,
    pub t_max: f64,
    /// Output times are log-spaced on `[t_min_ratio·t_max, t_max]`.
    pub t_min_ratio: f64,
    pub n_times: usize,
}

impl MildConfig {
    /// Defaults for the given parameters, with `r` at the middle of the admissible window.
    pub fn for_params(params: &ProblemParams) -> Result<Self> {
        let window = r_window(params)?;
        let r = window.midpoint_r();
        let weights = derived_weights(params, r)?;
        Ok(Self {
            r,
            mu: weights.mu,
            max_picard: 50,
            picard_tol: 1e-12,
            substeps: 8,
            t_max: 10.0,
            t_min_ratio: 1e-3,
            n_times: 64,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min_ratio * self.t_max
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::log(self.t_min(), self.t_max, self.n_times, self.substeps)
    }

    fn check(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidArgument("picard_tol must be positive".into()));
        }
        if self.max_picard < 2 {
            return Err(Error::InvalidArgument("max_picard must be at least 2".into()));
        }
        Ok(())
    }
}

/// March nodes starting at `t = 0`, with the subset of output nodes marked.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    outputs: Vec<usize>,
}

impl TimeGrid {
    /// Output times log-spaced on `[t_min, t_max]`; `[0, t_min]` and every
    /// interval between outputs is split into `substeps` equal steps.
    pub fn log(t_min: f64, t_max: f64, n_out: usize, substeps: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) || n_out < 2 || substeps == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad time grid: t_min={t_min}, t_max={t_max}, n_out={n_out}, substeps={substeps}"
            )));
        }
        let out_times = logspace(t_min, t_max, n_out);
        let mut nodes = vec![0.0];
        let mut outputs = Vec::with_capacity(n_out);
        let mut prev = 0.0;
        for &t in &out_times {
            for j in 1..=substeps {
                nodes.push(if j == substeps { t } else { prev + (t - prev) * j as f64 / substeps as f64 });
            }
            outputs.push(nodes.len() - 1);
            prev = t;
        }
        Ok(Self { nodes, outputs })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn output_times(&self) -> Vec<f64> {
        self.outputs.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn t_max(&self) -> f64 {
        *self.nodes.last().expect("grid is never empty")
    }
}

/// Fields at every march node of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<RadialField>,
    /// `sup t^μ ‖u(t)‖_r` over the stored times `t ≥ t_min`.
    pub x_norm: f64,
}

impl Trajectory {
    fn new(times: Vec<f64>, fields: Vec<RadialField>, r: f64, mu: f64, t_min: f64) -> Self {
        let x_norm = x_norm_of(&times, &fields, r, mu, t_min);
        Self { times, fields, x_norm }
    }

    pub fn zeros(grid: &TimeGrid, like: &RadialField) -> Self {
        let z = RadialField::zeros(like.grid.clone(), like.dim);
        Self { times: grid.nodes.clone(), fields: vec![z; grid.nodes.len()], x_norm: 0.0 }
    }

    /// Stored field closest to time `t`.
    pub fn at(&self, t: f64) -> &RadialField {
        let k = (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .expect("trajectory is never empty");
        &self.fields[k]
    }

    pub fn norm_trace(&self, q: f64) -> Vec<f64> {
        self.fields.iter().map(|f| f.lq_norm(q, 0.0)).collect()
    }

    pub fn sub(&self, other: &Trajectory) -> Vec<RadialField> {
        self.fields.iter().zip(&other.fields).map(|(a, b)| a.sub(b)).collect()
    }

    /// `t, L^r norm, t^μ-weighted norm, max value` at the given node indices.
    pub fn write_csv<W: Write>(&self, out: W, comment: &str, r: f64, mu: f64, indices: &[usize]) -> Result<()> {
        let mut w = crate::report::csv_writer(out, comment)?;
        w.write_record(["t", "lr_norm", "weighted_norm", "max_value"])?;
        for &i in indices {
            let t = self.times[i];
            let n = self.fields[i].lq_norm(r, 0.0);
            w.write_record([t, n, t.powf(mu) * n, self.fields[i].max_abs()].map(crate::report::num))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn x_norm_of(times: &[f64], fields: &[RadialField], r: f64, mu: f64, t_min: f64) -> f64 {
    times
        .iter()
        .zip(fields)
        .filter(|(t, _)| **t >= t_min * (1.0 - 1e-12))
        .map(|(t, f)| t.powf(mu) * f.lq_norm(r, 0.0))
        .fold(0.0, f64::max)
}

fn x_distance(times: &[f64], a: &[RadialField], b: &[RadialField], r: f64, mu: f64, t_min: f64) -> f64 {
    let diff: Vec<RadialField> = a.iter().zip(b).map(|(x, y)| x.sub(y)).collect();
    x_norm_of(times, &diff, r, mu, t_min)
}

/// `∫_a^b s^e (b-s)/(b-a) ds` and `∫_a^b s^e (s-a)/(b-a) ds`.
fn product_weights(a: f64, b: f64, e: f64) -> (f64, f64) {
    let d = b - a;
    if e == 0.0 {
        return (0.5 * d, 0.5 * d);
    }
    let i0 = (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0);
    let i1 = (b.powf(e + 2.0) - a.powf(e + 2.0)) / (e + 2.0);
    ((b * i0 - i1) / d, (i1 - a * i0) / d)
}

/// Marches `Y' = LY + s^e g(s)` from `init` over the grid, where `source(m)`
/// yields `g` at node `m`.
fn march(
    op: &SemigroupOp,
    grid: &TimeGrid,
    init: &[f64],
    kernel_exponent: f64,
    mut source: impl FnMut(usize, &[f64]) -> Option<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let t = &grid.nodes;
    let mut out = Vec::with_capacity(t.len());
    let mut y = init.to_vec();
    let mut g_prev = source(0, &y);
    out.push(y.clone());
    for m in 0..t.len() - 1 {
        let (wl, wr) = product_weights(t[m], t[m + 1], kernel_exponent);
        if let Some(g) = &g_prev {
            for (yi, gi) in y.iter_mut().zip(g) {
                *yi += wl * gi;
            }
        }
        if m == 0 {
            op.advance(&mut y, t[1] - t[0])?;
        } else {
            op.advance_continuing(&mut y, t[m + 1] - t[m])?;
        }
        let g_next = source(m + 1, &y);
        if let Some(g) = &g_next {
            for (yi, gi) in y.iter_mut().zip(g) {
                *yi += wr * gi;
            }
            if let Some(last) = y.last_mut() {
                *last = 0.0;
            }
        }
        out.push(y.clone());
        g_prev = g_next;
    }
    Ok(out)
}

fn wrap(like: &RadialField, values: Vec<Vec<f64>>) -> Vec<RadialField> {
    values.into_iter().map(|v| RadialField { grid: like.grid.clone(), values: v, dim: like.dim }).collect()
}

fn check_compatible(op: &SemigroupOp, fields: &[&RadialField]) -> Result<()> {
    for f in fields {
        if f.len() != op.grid().len()
            || !std::ptr::eq(f.grid.as_ref(), op.grid().as_ref()) && f.grid.nodes() != op.grid().nodes()
        {
            return Err(Error::InvalidArgument("field does not live on the operator grid".into()));
        }
    }
    Ok(())
}

/// Nodal `r^{-σ1} w`, zero at the boundary node.
fn forcing_density(params: &ProblemParams, w: &RadialField) -> Vec<f64> {
    let n = w.len();
    w.nodes()
        .iter()
        .zip(&w.values)
        .enumerate()
        .map(|(i, (r, v))| if i + 1 == n { 0.0 } else { r.powf(-params.sigma1) * v })
        .collect()
}

/// Nodal `r^{σ2-σ1}|u|^p`.
fn nonlinearity(params: &ProblemParams, nodes: &[f64], u: &[f64]) -> Vec<f64> {
    let k = params.sigma2 - params.sigma1;
    nodes.iter().zip(u).map(|(r, v)| r.powf(k) * v.abs().powf(params.p)).collect()
}

/// `H(t)` at every node of `grid`.
pub fn duhamel_forcing(
    op: &SemigroupOp,
    w: &RadialField,
    params: &ProblemParams,
    grid: &TimeGrid,
) -> Result<Vec<RadialField>> {
    check_compatible(op, &[w])?;
    if !(params.rho > -1.0) {
        return Err(Error::InvalidParams(vec!["rho <= -1".into()]));
    }
    let f = forcing_density(params, w);
    let zero = vec![0.0; f.len()];
    let values = march(op, grid, &zero, params.rho, |_, _| Some(f.clone()))?;
    Ok(wrap(w, values))
}

/// `S(t)u0 + H(t)` at every node of `grid`.
pub fn linear_part(
    op: &SemigroupOp,
    u0: &RadialField,
    w: &RadialField,
    params: &ProblemParams,
    grid: &TimeGrid,
) -> Result<Vec<RadialField>> {
    check_compatible(op, &[u0, w])?;
    let f = forcing_density(params, w);
    let forced = f.iter().any(|v| *v != 0.0);
    let values = march(op, grid, &u0.values, params.rho, |_, _| forced.then(|| f.clone()))?;
    Ok(wrap(u0, values))
}

/// `F(u)` at every node of `grid`.
pub fn nonlinear_part(
    op: &SemigroupOp,
    u: &[RadialField],
    params: &ProblemParams,
    grid: &TimeGrid,
) -> Result<Vec<RadialField>> {
    let like = &u[0];
    let nodes = like.nodes().to_vec();
    let zero = vec![0.0; nodes.len()];
    let values = march(op, grid, &zero, 0.0, |m, _| Some(nonlinearity(params, &nodes, &u[m].values)))?;
    Ok(wrap(like, values))
}

fn check_overflow(fields: &[RadialField]) -> Result<()> {
    for f in fields {
        let m = f.max_abs();
        if !(m <= OVERFLOW_CAP) {
            return Err(Error::Overflow { value: m });
        }
    }
    Ok(())
}

/// `G(u_n)` given the precomputed linear part `S(t)u0 + H(t)`.
pub fn picard_step(
    op: &SemigroupOp,
    u_n: &[RadialField],
    linear: &[RadialField],
    params: &ProblemParams,
    grid: &TimeGrid,
) -> Result<Vec<RadialField>> {
    let nl = nonlinear_part(op, u_n, params, grid)?;
    let next: Vec<RadialField> = linear
        .iter()
        .zip(&nl)
        .map(|(l, f)| {
            let values = l.values.iter().zip(&f.values).map(|(a, b)| a + b).collect();
            RadialField { grid: l.grid.clone(), values, dim: l.dim }
        })
        .collect();
    check_overflow(&next)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub trajectory: Trajectory,
    /// `‖u_{n+1} - u_n‖` in the iteration norm, starting from `u_0 = 0`.
    pub diffs: Vec<f64>,
    /// `diffs[n] / diffs[n-1]`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// `‖G(u*) - u*‖` after the last iterate.
    pub residual: f64,
}

impl PicardReport {
    pub fn iterations(&self) -> usize {
        self.diffs.len()
    }

    /// `iteration, x_norm_diff, ratio`; the first ratio is empty.
    pub fn write_convergence_csv<W: Write>(&self, out: W, comment: &str) -> Result<()> {
        let mut w = crate::report::csv_writer(out, comment)?;
        w.write_record(["iteration", "x_norm_diff", "ratio"])?;
        for (i, d) in self.diffs.iter().enumerate() {
            let ratio = if i == 0 { String::new() } else { crate::report::num(self.ratios[i - 1]) };
            w.write_record([(i + 1).to_string(), crate::report::num(*d), ratio])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct PicardRun {
    fields: Vec<RadialField>,
    diffs: Vec<f64>,
    ratios: Vec<f64>,
    converged: bool,
    residual: f64,
}

fn picard_loop(
    op: &SemigroupOp,
    linear: Vec<RadialField>,
    params: &ProblemParams,
    grid: &TimeGrid,
    max_iter: usize,
    tol: f64,
    dist: impl Fn(&[RadialField], &[RadialField]) -> f64,
) -> Result<PicardRun> {
    let zero: Vec<RadialField> = linear.iter().map(|f| RadialField::zeros(f.grid.clone(), f.dim)).collect();
    let mut current = zero;
    let mut diffs: Vec<f64> = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = picard_step(op, &current, &linear, params, grid)?;
        let d = dist(&next, &current);
        if let Some(&prev) = diffs.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            ratios.push(ratio);
            let run = ratios.iter().rev().take_while(|r| **r >= 1.0).count();
            if run >= NON_CONTRACTING_RUN {
                return Err(Error::NotContracting { ratios });
            }
        }
        diffs.push(d);
        current = next;
        if d < tol {
            converged = true;
            break;
        }
    }
    let check = picard_step(op, &current, &linear, params, grid)?;
    let residual = dist(&check, &current);
    Ok(PicardRun { fields: current, diffs, ratios, converged, residual })
}

/// Global small-data solution in the X-norm `sup t^μ ‖u(t)‖_r`.
pub fn solve_global_small(
    op: &SemigroupOp,
    u0: &RadialField,
    w: &RadialField,
    params: &ProblemParams,
    cfg: &MildConfig,
) -> Result<PicardReport> {
    let params = params.validated()?;
    cfg.check()?;
    if !critical_forced(&params).is_exceeded_by(params.p) {
        return Err(Error::ConditionViolation(format!(
            "global construction needs p > p* = {}",
            critical_forced(&params)
        )));
    }
    let window = r_window(&params)?;
    if !window.contains_r(cfg.r) {
        let (lo, hi) = (window.lo, window.hi);
        return Err(Error::WindowViolation { r: cfg.r, lo, hi });
    }
    let grid = cfg.time_grid()?;
    let linear = linear_part(op, u0, w, &params, &grid)?;
    let (r, mu, t_min) = (cfg.r, cfg.mu, cfg.t_min());
    let times = grid.nodes.clone();
    let PicardRun { fields, diffs, ratios, converged, residual } =
        picard_loop(op, linear, &params, &grid, cfg.max_picard, cfg.picard_tol, |a, b| {
            x_distance(&times, a, b, r, mu, t_min)
        })?;
    Ok(PicardReport {
        trajectory: Trajectory::new(grid.nodes, fields, r, mu, t_min),
        diffs,
        ratios,
        converged,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalConfig {
    pub q: f64,
    /// Upper end of the search for `T`; also the probe horizon.
    pub horizon_guess: f64,
    pub n_times: usize,
    pub substeps: usize,
    pub t_min_ratio: f64,
    pub max_picard: usize,
    pub picard_tol: f64,
    /// Smallest `T` tried, relative to `horizon_guess`.
    pub t_floor_ratio: f64,
    /// Relative jump tolerance unit for the continuity check.
    pub scheme_tol: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            q: 4.0,
            horizon_guess: 1.0,
            n_times: 48,
            substeps: 8,
            t_min_ratio: 1e-3,
            max_picard: 60,
            picard_tol: 1e-10,
            t_floor_ratio: 1e-8,
            scheme_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    pub t_final: f64,
    pub alpha: f64,
    /// Ball radius `2 sup ‖S(t)u0‖_q`.
    pub radius: f64,
    pub c1: f64,
    pub c2: f64,
    pub report: PicardReport,
    /// Largest relative change of `‖u(t)‖_q` between consecutive march nodes.
    pub max_jump: f64,
    pub continuous: bool,
}

fn sup_norm(fields: &[RadialField], q: f64) -> f64 {
    fields.iter().map(|f| f.lq_norm(q, 0.0)).fold(0.0, f64::max)
}

/// Local solution in `C([0, T]; L^q)` with `T` chosen from the empirical bound
/// `R(T) = C1 T^{1-α} M^p + C2 ‖f‖_q T^{ϱ+1} <= M/2`.
pub fn solve_local_lq(
    op: &SemigroupOp,
    u0: &RadialField,
    w: &RadialField,
    params: &ProblemParams,
    cfg: &LocalConfig,
) -> Result<LocalSolution> {
    let params = params.validated()?;
    let q = cfg.q;
    let alpha = local_alpha(&params, q)?;
    let horizon = cfg.horizon_guess;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon_guess must be positive".into()));
    }
    let grid_for = |t: f64| TimeGrid::log(cfg.t_min_ratio * t, t, cfg.n_times, cfg.substeps);
    let probe_grid = grid_for(horizon)?;
    let t = probe_grid.nodes.clone();

    let zero_w = RadialField::zeros(w.grid.clone(), w.dim);
    let free = linear_part(op, u0, &zero_w, &params, &probe_grid)?;
    let h = duhamel_forcing(op, w, &params, &probe_grid)?;
    let f_norm = RadialField { grid: w.grid.clone(), values: forcing_density(&params, w), dim: w.dim }.lq_norm(q, 0.0);

    let mut radius = 2.0 * sup_norm(&free, q);
    if radius == 0.0 {
        // no initial datum: size the ball on the forcing response instead
        radius = 2.0 * sup_norm(&h, q);
    }
    if radius == 0.0 {
        let grid = grid_for(horizon)?;
        let traj = Trajectory::zeros(&grid, u0);
        let report =
            PicardReport { trajectory: traj, diffs: vec![0.0], ratios: vec![], converged: true, residual: 0.0 };
        return Ok(LocalSolution {
            t_final: horizon,
            alpha,
            radius,
            c1: 0.0,
            c2: 0.0,
            report,
            max_jump: 0.0,
            continuous: true,
        });
    }

    // probe 1: F applied to the free evolution rescaled to the ball radius
    let free_sup = sup_norm(&free, q);
    let probe: Vec<RadialField> = if free_sup > 0.0 {
        free.iter().map(|f| f.scaled(radius / free_sup)).collect()
    } else {
        h.iter().map(|f| f.scaled(radius / sup_norm(&h, q))).collect()
    };
    let f_probe = nonlinear_part(op, &probe, &params, &probe_grid)?;
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    let mut running = 0.0f64;
    for k in 1..t.len() {
        running = running.max(probe[k].lq_norm(q, 0.0));
        let bound = t[k].powf(1.0 - alpha) * running.powf(params.p);
        if bound > 0.0 {
            c1 = c1.max(f_probe[k].lq_norm(q, 0.0) / bound);
        }
        // probe 2: the forcing response
        if f_norm > 0.0 {
            c2 = c2.max(h[k].lq_norm(q, 0.0) / (f_norm * t[k].powf(params.rho + 1.0)));
        }
    }
    let r_of = |tt: f64| c1 * tt.powf(1.0 - alpha) * radius.powf(params.p) + c2 * f_norm * tt.powf(params.rho + 1.0);
    let target = radius / 2.0;
    let t_floor = cfg.t_floor_ratio * horizon;
    let t_final = if r_of(horizon) <= target {
        horizon
    } else if r_of(t_floor) > target {
        return Err(Error::NoValidT { t_floor });
    } else {
        let (mut lo, mut hi) = (t_floor.ln(), horizon.ln());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if r_of(mid.exp()) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo.exp()
    };

    let grid = grid_for(t_final)?;
    let linear = linear_part(op, u0, w, &params, &grid)?;
    let PicardRun { fields, diffs, ratios, converged, residual } =
        picard_loop(op, linear, &params, &grid, cfg.max_picard, cfg.picard_tol, |a, b| {
            a.iter().zip(b).map(|(x, y)| x.sub(y).lq_norm(q, 0.0)).fold(0.0, f64::max)
        })?;
    let trace: Vec<f64> = fields.iter().map(|f| f.lq_norm(q, 0.0)).collect();
    let scale = trace.iter().copied().fold(0.0, f64::max);
    let max_jump =
        if scale > 0.0 { trace.windows(2).map(|p| (p[1] - p[0]).abs() / scale).fold(0.0, f64::max) } else { 0.0 };
    let x_norm = scale;
    let report = PicardReport {
        trajectory: Trajectory { times: grid.nodes, fields, x_norm },
        diffs,
        ratios,
        converged,
        residual,
    };
    Ok(LocalSolution { t_final, alpha, radius, c1, c2, report, max_jump, continuous: max_jump < 5.0 * cfg.scheme_tol })
}

/// Separable test function `a(t) b(|x|)`, with
/// `a(t) = ((t-t0)(t1-t))^4` on `[t0, t1]` and `b(r) = (1 - r²/R²)^4` on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakTest {
    pub t0: f64,
    pub t1: f64,
    pub radius: f64,
}

impl WeakTest {
    fn a(&self, t: f64) -> f64 {
        if t <= self.t0 || t >= self.t1 {
            0.0
        } else {
            ((t - self.t0) * (self.t1 - t)).powi(4)
        }
    }

    fn a_dot(&self, t: f64) -> f64 {
        if t <= self.t0 || t >= self.t1 {
            0.0
        } else {
            let g = (t - self.t0) * (self.t1 - t);
            4.0 * g.powi(3) * (self.t0 + self.t1 - 2.0 * t)
        }
    }

    fn b(&self, r: f64) -> f64 {
        let x = r * r / (self.radius * self.radius);
        if x >= 1.0 {
            0.0
        } else {
            (1.0 - x).powi(4)
        }
    }

    /// `b'' + (N-1)/r b'`.
    fn laplacian_b(&self, r: f64, dim: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let x = r * r / r2;
        if x >= 1.0 {
            return 0.0;
        }
        let one = 1.0 - x;
        // b' = -8r/R² (1-x)³, b'/r = -8/R² (1-x)³
        let b1_over_r = -8.0 / r2 * one.powi(3);
        let b2 = b1_over_r + 48.0 * r * r / (r2 * r2) * one.powi(2);
        b2 + (dim - 1.0) * b1_over_r
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Relative residual of the weak formulation tested against `a(t)b(|x|)`:
/// `∫∫|x|^{σ2}|u|^p φ + ∫∫ t^ϱ w φ + ∫∫ |x|^{σ1} u φ_t + ∫∫ u Δφ`,
/// divided by the sum of the magnitudes of the four terms.
pub fn weak_residual(traj: &Trajectory, w: &RadialField, params: &ProblemParams, test: &WeakTest) -> Result<f64> {
    if !(test.t0 > 0.0 && test.t1 > test.t0 && test.t1 <= *traj.times.last().unwrap_or(&0.0)) {
        return Err(Error::InvalidArgument("test function support must lie inside (0, T]".into()));
    }
    let dim = w.dim;
    let b: Vec<f64> = w.nodes().iter().map(|&r| test.b(r)).collect();
    let lap_b: Vec<f64> = w.nodes().iter().map(|&r| test.laplacian_b(r, dim)).collect();
    let weighted = |u: &RadialField, g: &[f64], h: &dyn Fn(f64) -> f64, weight: f64| {
        let values = u.values.iter().zip(g).map(|(v, gi)| h(*v) * gi).collect();
        RadialField { grid: u.grid.clone(), values, dim }.integral(weight)
    };
    let p = params.p;
    let mut nonlin = Vec::with_capacity(traj.times.len());
    let mut dt_term = Vec::with_capacity(traj.times.len());
    let mut lap_term = Vec::with_capacity(traj.times.len());
    for (&t, u) in traj.times.iter().zip(&traj.fields) {
        nonlin.push(test.a(t) * weighted(u, &b, &|v| v.abs().powf(p), params.sigma2));
        dt_term.push(test.a_dot(t) * weighted(u, &b, &|v| v, params.sigma1));
        lap_term.push(test.a(t) * weighted(u, &lap_b, &|v| v, 0.0));
    }
    let tt = &traj.times;
    let terms = [
        crate::grid::trapezoid(tt, &nonlin),
        simpson(|t| t.powf(params.rho) * test.a(t), test.t0, test.t1, 2000) * weighted(w, &b, &|v| v, 0.0),
        crate::grid::trapezoid(tt, &dt_term),
        crate::grid::trapezoid(tt, &lap_term),
    ];
    let total: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    Ok(if scale > 0.0 { total.abs() / scale } else { 0.0 })
}

/// Empirical Lipschitz quotient `‖F(u) - F(v)‖_X / ‖u - v‖_X`.
pub fn lipschitz_quotient(
    op: &SemigroupOp,
    u: &[RadialField],
    v: &[RadialField],
    params: &ProblemParams,
    grid: &TimeGrid,
    cfg: &MildConfig,
) -> Result<f64> {
    let fu = nonlinear_part(op, u, params, grid)?;
    let fv = nonlinear_part(op, v, params, grid)?;
    let t = grid.nodes();
    let num = x_distance(t, &fu, &fv, cfg.r, cfg.mu, cfg.t_min());
    let den = x_distance(t, u, v, cfg.r, cfg.mu, cfg.t_min());
    Ok(num / den)
}

/// Data on `grid` from a radial profile.
pub fn field_on(grid: &std::sync::Arc<RadialGrid>, dim: u32, profile: &crate::grid::Profile) -> RadialField {
    RadialField::from_profile(grid.clone(), dim as f64, profile)
}
