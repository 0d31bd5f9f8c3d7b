use proptest::prelude::*;

use fujita_lab::exponents::*;

fn tuple() -> impl Strategy<Value = ProblemParams> {
    (2u32..=8, 0.0f64..1.9, 0.01f64..0.99, 1e-3f64..0.999).prop_map(|(n, a, frac, r)| {
        let s1 = -a;
        let s2 = s1 - frac * (2.0 + s1);
        ProblemParams::new(n, s1, s2, -r, 2.0)
    })
}

proptest! {
    #[test]
    fn weights_satisfy_identities_across_window(params in tuple(), lift in 1e-6f64..2.0, k in 1u32..10) {
        let p_star = critical_forced(&params).finite().unwrap();
        let params = params.with_p(p_star * (1.0 + lift));
        let win = r_window(&params).unwrap();
        prop_assert!(!win.is_empty());
        let inv = win.lo + (win.hi - win.lo) * k as f64 / 10.0;
        let w = derived_weights(&params, 1.0 / inv).unwrap();
        prop_assert!(w.bounds_hold(&params));
        let (e1, e2) = w.identity_residuals(&params);
        let tol = IDENTITY_RTOL * (1.0 + params.p);
        prop_assert!(e1.abs() <= tol && e2.abs() <= tol, "{e1} {e2}");
    }

    #[test]
    fn quadratic_negative_beyond_critical(params in tuple(), dp in 0.0f64..100.0) {
        let p_star = critical_forced(&params).finite().unwrap();
        prop_assert!(quadratic_f(&params, p_star + dp) < 0.0);
    }

    #[test]
    fn critical_exponent_decreases_with_dimension(params in tuple()) {
        let bigger = ProblemParams::new(params.dim + 1, params.sigma1, params.sigma2, params.rho, params.p);
        let (a, b) = (critical_forced(&params).finite().unwrap(), critical_forced(&bigger).finite().unwrap());
        prop_assert!(b < a);
    }

    #[test]
    fn critical_exceeds_one(params in tuple()) {
        prop_assert!(critical_forced(&params).finite().unwrap() > 1.0);
    }
}

#[test]
fn rho_zero_dimension_two_has_no_finite_threshold() {
    for s1 in [-1.5, -0.5, 0.0] {
        assert_eq!(critical_forced(&ProblemParams::new(2, s1, s1 - 0.1, 0.0, 2.0)), ExtReal::PosInfinity);
    }
}

#[test]
fn quadratic_at_one_is_two_plus_sigma2() {
    for (s1, s2, rho) in [(0.0, 0.0, -0.5), (-1.0, -1.5, -0.2), (-0.3, -0.4, 0.7)] {
        let params = ProblemParams::new(4, s1, s2, rho, 2.0);
        approx::assert_relative_eq!(quadratic_f(&params, 1.0), 2.0 + s2, epsilon = 1e-14);
    }
}
