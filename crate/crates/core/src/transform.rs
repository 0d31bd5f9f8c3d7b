//! Radial change of variables taking the weighted equation to Hardy–Hénon form.
//!
//! With `θ = 1 + σ1/2`, `z = r^θ`, `s = c z` where `c = θ^{-2/(2+σ̄)}`, and
//! `τ = Λ t`, a radial solution `u(t, r)` becomes `v(τ, s)` solving
//!
//! ```text
//! v_τ = v_ss + (N̄-1)/s v_s + s^σ̄ |v|^p + τ^ϱ W(s)
//! ```
//!
//! in the (generally fractional) dimension `N̄`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::grid::{trapezoid, RadialField, RadialGrid, Spacing};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub theta: f64,
    pub sigma_bar: f64,
    pub n_bar: f64,
    pub lambda: f64,
}

impl TransformParams {
    /// Spatial scale `c = θ^{-2/(2+σ̄)}` in `s = c r^θ`.
    pub fn space_scale(&self) -> f64 {
        self.theta.powf(-2.0 / (2.0 + self.sigma_bar))
    }

    pub fn s_of_r(&self, r: f64) -> f64 {
        self.space_scale() * r.powf(self.theta)
    }

    pub fn r_of_s(&self, s: f64) -> f64 {
        (s / self.space_scale()).powf(1.0 / self.theta)
    }

    pub fn tau_of_t(&self, t: f64) -> f64 {
        self.lambda * t
    }

    pub fn t_of_tau(&self, tau: f64) -> f64 {
        tau / self.lambda
    }
}

/// Fails with `DegenerateTransform` when `2 + σ̄ = 0`, which happens exactly at
/// `σ2 = -2`; that is checked ahead of the general parameter validation.
pub fn transform_params(params: &ProblemParams) -> Result<TransformParams> {
    let (s1, s2) = (params.sigma1, params.sigma2);
    let sigma_bar = 2.0 * (s2 - s1) / (2.0 + s1);
    if 2.0 + sigma_bar == 0.0 {
        return Err(Error::DegenerateTransform(2.0 + sigma_bar));
    }
    let params = params.validated()?;
    let theta = 1.0 + s1 / 2.0;
    let n_bar = 2.0 * (params.n() + s1) / (2.0 + s1);
    let lambda = theta.powf(2.0 * sigma_bar / (2.0 + sigma_bar));
    Ok(TransformParams { theta, sigma_bar, n_bar, lambda })
}

fn remap_grid(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Result<Arc<RadialGrid>> {
    let nodes = grid.nodes().iter().map(|&r| f(r)).collect();
    // r ↦ c r^θ keeps log-uniform grids log-uniform.
    let spacing = match grid.spacing() {
        Spacing::LogUniform => Spacing::LogUniform,
        _ => Spacing::Irregular,
    };
    Ok(Arc::new(RadialGrid::from_nodes(nodes, spacing)?))
}

/// Carries `u(t, ·)` to `v(τ, ·)` on the mapped grid. Values are unchanged.
pub fn to_transformed(field: &RadialField, t: f64, tp: &TransformParams) -> Result<(RadialField, f64)> {
    let grid = remap_grid(&field.grid, |r| tp.s_of_r(r))?;
    let v = RadialField::new(grid, field.values.clone(), tp.n_bar)?;
    Ok((v, tp.tau_of_t(t)))
}

/// Inverse of [`to_transformed`]; `dim` is the original dimension `N`.
pub fn from_transformed(field: &RadialField, tau: f64, tp: &TransformParams, dim: u32) -> Result<(RadialField, f64)> {
    let grid = remap_grid(&field.grid, |s| tp.r_of_s(s))?;
    let u = RadialField::new(grid, field.values.clone(), dim as f64)?;
    Ok((u, tp.t_of_tau(tau)))
}

/// `W(s) = Λ^{-ϱ-1} c^{σ1/θ} s^{-2σ1/(2+σ1)} w(r(s))` evaluated at a point.
pub fn forcing_w_at(w: impl Fn(f64) -> f64, s: f64, params: &ProblemParams, tp: &TransformParams) -> f64 {
    let prefactor = tp.lambda.powf(-params.rho - 1.0) * tp.space_scale().powf(params.sigma1 / tp.theta);
    prefactor * s.powf(-2.0 * params.sigma1 / (2.0 + params.sigma1)) * w(tp.r_of_s(s))
}

/// Transformed forcing on the image of `r_grid`.
pub fn forcing_w(w: impl Fn(f64) -> f64, r_grid: &RadialGrid, params: &ProblemParams) -> Result<RadialField> {
    let tp = transform_params(params)?;
    let grid = remap_grid(r_grid, |r| tp.s_of_r(r))?;
    Ok(RadialField::from_fn(grid, tp.n_bar, |s| forcing_w_at(&w, s, params, &tp)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub t: f64,
    pub tau: f64,
    /// `L²(s^{N̄-1} ds)` norm of the pointwise residual over interior nodes.
    pub residual_l2: f64,
    /// Same norm of `v_τ`, for scale.
    pub reference_l2: f64,
    pub n_interior: usize,
}

impl ResidualSample {
    pub fn relative(&self) -> f64 {
        if self.reference_l2 > 0.0 {
            self.residual_l2 / self.reference_l2
        } else {
            self.residual_l2
        }
    }
}

/// Three-point first and second derivatives on a non-uniform stencil.
fn stencil(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let hm = x[1] - x[0];
    let hp = x[2] - x[1];
    let d1 = (hm * hm * (y[2] - y[1]) + hp * hp * (y[1] - y[0])) / (hm * hp * (hm + hp));
    let d2 = 2.0 * (hm * (y[2] - y[1]) - hp * (y[1] - y[0])) / (hm * hp * (hm + hp));
    (d1, d2)
}

/// Residual of the transformed equation along a computed trajectory of the
/// original one. Each test time is snapped to the nearest stored time that
/// has neighbours on both sides; `v_τ` uses those neighbours.
pub fn residual_check(
    times: &[f64],
    fields: &[RadialField],
    w: impl Fn(f64) -> f64,
    params: &ProblemParams,
    test_times: &[f64],
) -> Result<Vec<ResidualSample>> {
    let tp = transform_params(params)?;
    if times.len() != fields.len() || times.len() < 3 {
        return Err(Error::InvalidArgument("trajectory needs at least three stored times".into()));
    }
    let r_nodes = fields[0].grid.nodes();
    let m = r_nodes.len();
    if m < 7 {
        return Err(Error::InsufficientResolution { found: m.saturating_sub(2), needed: 5 });
    }
    let s: Vec<f64> = r_nodes.iter().map(|&r| tp.s_of_r(r)).collect();
    let big_w: Vec<f64> = s.iter().map(|&si| forcing_w_at(&w, si, params, &tp)).collect();
    // the last node carries the outer boundary condition, the first one the
    // truncated origin; neither satisfies the equation pointwise
    let interior = 1..m - 1;
    let mut out = Vec::with_capacity(test_times.len());
    for &tt in test_times {
        let k = (1..times.len() - 1)
            .min_by(|&a, &b| (times[a] - tt).abs().total_cmp(&(times[b] - tt).abs()))
            .expect("at least one interior time");
        let tau: Vec<f64> = (k - 1..=k + 1).map(|j| tp.tau_of_t(times[j])).collect();
        let mut res = Vec::new();
        let mut refv = Vec::new();
        let mut ss = Vec::new();
        for i in interior.clone() {
            let (v_tau, _) = stencil(
                [tau[0], tau[1], tau[2]],
                [fields[k - 1].values[i], fields[k].values[i], fields[k + 1].values[i]],
            );
            let v = &fields[k].values;
            let (v_s, v_ss) = stencil([s[i - 1], s[i], s[i + 1]], [v[i - 1], v[i], v[i + 1]]);
            let rhs = v_ss
                + (tp.n_bar - 1.0) / s[i] * v_s
                + s[i].powf(tp.sigma_bar) * v[i].abs().powf(params.p)
                + tau[1].powf(params.rho) * big_w[i];
            let weight = s[i].powf(tp.n_bar - 1.0);
            res.push((v_tau - rhs).powi(2) * weight);
            refv.push(v_tau.powi(2) * weight);
            ss.push(s[i]);
        }
        if ss.len() < 5 {
            return Err(Error::InsufficientResolution { found: ss.len(), needed: 5 });
        }
        out.push(ResidualSample {
            t: times[k],
            tau: tau[1],
            residual_l2: trapezoid(&ss, &res).sqrt(),
            reference_l2: trapezoid(&ss, &refv).sqrt(),
            n_interior: ss.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(dim: u32, s1: f64, s2: f64, rho: f64) -> ProblemParams {
        ProblemParams::new(dim, s1, s2, rho, 2.0)
    }

    #[test]
    fn params_examples() {
        let t = transform_params(&p(3, -1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(t.theta, 0.5);
        assert_relative_eq!(t.sigma_bar, 2.0);
        assert_relative_eq!(t.n_bar, 4.0);
        assert_relative_eq!(t.lambda, 0.5, max_relative = 1e-15);

        let t = transform_params(&p(3, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(t, TransformParams { theta: 1.0, sigma_bar: 0.0, n_bar: 3.0, lambda: 1.0 });

        let t = transform_params(&p(2, -1.0, -1.0, 0.0)).unwrap();
        assert_relative_eq!(t.theta, 0.5);
        assert_eq!(t.sigma_bar, 0.0);
        assert_relative_eq!(t.n_bar, 2.0);
        assert_eq!(t.lambda, 1.0);
    }

    #[test]
    fn sigma1_zero_keeps_sigma2() {
        let t = transform_params(&p(4, 0.0, 1.3, 0.0)).unwrap();
        assert_eq!((t.theta, t.sigma_bar, t.n_bar, t.lambda), (1.0, 1.3, 4.0, 1.0));
    }

    #[test]
    fn degenerate() {
        // 2 + σ̄ = 0 exactly when σ2 = -2
        for s1 in [0.0, -0.5, -1.0] {
            let err = transform_params(&p(3, s1, -2.0, 0.0)).unwrap_err();
            assert!(matches!(err, Error::DegenerateTransform(_)), "{err}");
        }
        assert!(transform_params(&p(3, -1.0, -1.9, 0.0)).is_ok());
    }

    #[test]
    fn grid_example() {
        let tp = transform_params(&p(3, -1.0, 0.0, 0.0)).unwrap();
        let g = Arc::new(RadialGrid::from_nodes(vec![1.0, 4.0], Spacing::Irregular).unwrap());
        let f = RadialField::new(g, vec![2.0, 2.0], 3.0).unwrap();
        let (v, tau) = to_transformed(&f, 3.0, &tp).unwrap();
        let c = 0.5f64.powf(-0.5);
        assert_relative_eq!(v.nodes()[0], c, max_relative = 1e-15);
        assert_relative_eq!(v.nodes()[1], 2.0 * c, max_relative = 1e-15);
        assert_eq!(v.values, vec![2.0, 2.0]);
        assert_relative_eq!(tau, 1.5);
        let (back, t) = from_transformed(&v, tau, &tp, 3).unwrap();
        assert_relative_eq!(back.nodes()[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(back.nodes()[1], 4.0, max_relative = 1e-14);
        assert_relative_eq!(t, 3.0);
    }

    #[test]
    fn forcing_examples() {
        let g = RadialGrid::log_uniform(0.1, 5.0, 32).unwrap();
        let w = |r: f64| (-r * r).exp();
        let big_w = forcing_w(w, &g, &p(3, 0.0, 0.7, -0.5)).unwrap();
        for (s, v) in big_w.nodes().iter().zip(&big_w.values) {
            assert_relative_eq!(*v, w(*s), max_relative = 1e-14);
        }
        // w ≡ 1, N=3, σ1=-1, σ2=0, ϱ=-1/2: Λ = 1/2, c = √2, so W = Λ^{-1/2} c^{-2} s² = s²/√2
        let big_w = forcing_w(|_| 1.0, &g, &p(3, -1.0, 0.0, -0.5)).unwrap();
        for (s, v) in big_w.nodes().iter().zip(&big_w.values) {
            assert_relative_eq!(*v, s * s / 2f64.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn forcing_support_is_transported() {
        let params = p(3, -0.5, 0.0, 0.0);
        let tp = transform_params(&params).unwrap();
        let g = RadialGrid::log_uniform(0.01, 10.0, 200).unwrap();
        let w = |r: f64| if (1.0..=2.0).contains(&r) { 1.0 } else { 0.0 };
        let big_w = forcing_w(w, &g, &params).unwrap();
        for (s, v) in big_w.nodes().iter().zip(&big_w.values) {
            let inside = (tp.s_of_r(1.0)..=tp.s_of_r(2.0)).contains(s);
            assert_eq!(*v != 0.0, inside, "s = {s}");
        }
    }

    #[test]
    fn zero_solution_has_zero_residual() {
        let g = Arc::new(RadialGrid::log_uniform(0.01, 10.0, 64).unwrap());
        let z = RadialField::zeros(g, 3.0);
        let times = [0.5, 1.0, 1.5];
        let fields = vec![z.clone(), z.clone(), z];
        let out = residual_check(&times, &fields, |_| 0.0, &p(3, -1.0, 0.0, -0.5), &[1.0]).unwrap();
        assert_eq!(out[0].residual_l2, 0.0);
        assert_eq!(out[0].n_interior, 62);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = Arc::new(RadialGrid::log_uniform(0.1, 1.0, 6).unwrap());
        let z = RadialField::zeros(g, 3.0);
        let fields = vec![z.clone(), z.clone(), z];
        let err = residual_check(&[0.0, 1.0, 2.0], &fields, |_| 0.0, &p(3, 0.0, 0.0, 0.0), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::InsufficientResolution { .. }));
    }

    #[test]
    fn stencil_is_exact_for_quadratics() {
        let x = [1.0, 1.3, 2.0];
        let y = x.map(|v| 3.0 * v * v - v + 2.0);
        let (d1, d2) = stencil(x, y);
        assert_relative_eq!(d1, 6.0 * 1.3 - 1.0, max_relative = 1e-13);
        assert_relative_eq!(d2, 6.0, max_relative = 1e-13);
    }
}
