use std::sync::Arc;

use fujita_lab::blowup::{integrate_nonlinear, unit_mass, BlowupConfig, SolveOutcome};
use fujita_lab::exponents::ProblemParams;
use fujita_lab::fit::linear_fit;
use fujita_lab::grid::{Profile, RadialField, RadialGrid};
use fujita_lab::mild::*;
use fujita_lab::semigroup::{Scheme, SemigroupOp};

fn gaussian(op: &SemigroupOp, amplitude: f64) -> RadialField {
    RadialField::from_profile(
        op.grid().clone(),
        op.dim() as f64,
        &Profile::Gaussian { center: 0.0, width: 1.0, amplitude },
    )
}

fn small_data_setup() -> (SemigroupOp, ProblemParams) {
    let grid = Arc::new(RadialGrid::default_log(100.0, 256).unwrap());
    let op = SemigroupOp::new(grid, 3, 0.0, Scheme::CrankNicolson, 1e9).unwrap();
    (op, ProblemParams::new(3, 0.0, -0.1, -0.5, 3.0))
}

#[test]
fn nonnegative_data_stay_nonnegative() {
    let op = SemigroupOp::with_default_grid(30.0, 256, 3, -0.5, Scheme::ImplicitEuler, 1e9).unwrap();
    let params = ProblemParams::new(3, -0.5, -0.7, -0.3, 2.5);
    let u0 = gaussian(&op, 0.3);
    let cfg = BlowupConfig { t_max: 2.0, ..BlowupConfig::default() };
    let run = integrate_nonlinear(&op, &u0, &u0, &params, &cfg, &[0.5, 1.0, 2.0]).unwrap();
    assert_eq!(run.records.len(), 3);
    for (_, f) in &run.records {
        assert!(f.values.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn lipschitz_quotient_scales_like_norm_to_p_minus_one() {
    let (op, params) = small_data_setup();
    let cfg = MildConfig { n_times: 16, substeps: 4, ..MildConfig::for_params(&params).unwrap() };
    let grid = cfg.time_grid().unwrap();
    let zero = op.zeros();
    let base = linear_part(&op, &gaussian(&op, 1.0), &zero, &params, &grid).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for eps in [1e-3, 1e-2, 1e-1] {
        let u: Vec<_> = base.iter().map(|f| f.scaled(eps)).collect();
        let v: Vec<_> = base.iter().map(|f| f.scaled(0.9 * eps)).collect();
        x.push(f64::ln(eps));
        y.push(lipschitz_quotient(&op, &u, &v, &params, &grid, &cfg).unwrap().ln());
    }
    let fit = linear_fit(&x, &y);
    assert!((fit.slope - (params.p - 1.0)).abs() < 1e-6, "slope {}", fit.slope);
}

#[test]
fn fixed_point_satisfies_weak_formulation() {
    let (op, params) = small_data_setup();
    let u0 = gaussian(&op, 1e-3);
    let cfg = MildConfig::for_params(&params).unwrap();
    let rep = solve_global_small(&op, &u0, &u0, &params, &cfg).unwrap();
    assert!(rep.converged);
    let test = WeakTest { t0: 0.5, t1: 5.0, radius: 5.0 };
    let res = weak_residual(&rep.trajectory, &u0, &params, &test).unwrap();
    assert!(res < 1e-2, "relative weak residual {res:.3e}");
}

fn blowup_time(amplitude: f64, dt_init: f64) -> f64 {
    let op = SemigroupOp::with_default_grid(50.0, 256, 3, 0.0, Scheme::ImplicitEuler, 1e9).unwrap();
    let bump = RadialField::from_profile(op.grid().clone(), 3.0, &Profile::Bump { support: 1.0, amplitude: 1.0 });
    let w = unit_mass(&bump).unwrap().scaled(amplitude);
    let params = ProblemParams::new(3, 0.0, 0.0, -0.5, 1.5);
    let cfg = BlowupConfig { t_max: 50.0, dt_init, ..BlowupConfig::default() };
    match integrate_nonlinear(&op, &op.zeros(), &w, &params, &cfg, &[]).unwrap().outcome {
        SolveOutcome::BlownUp { t_star } => t_star,
        other => panic!("amplitude {amplitude}: {other:?}"),
    }
}

#[test]
fn larger_forcing_blows_up_sooner() {
    let t: Vec<f64> = [4.0, 8.0, 16.0].iter().map(|&a| blowup_time(a, 1e-6)).collect();
    assert!(t[0] > t[1] && t[1] > t[2], "{t:?}");
}

#[test]
fn blowup_time_is_stable_under_initial_step_halving() {
    let a = blowup_time(8.0, 1e-4);
    let b = blowup_time(8.0, 5e-5);
    assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");
}
