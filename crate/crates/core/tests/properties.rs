use std::f64::consts::PI;

use meanfield::bumps::{self, BumpSpec};
use meanfield::diagnostics;
use meanfield::functional::{self, eval_g, eval_i};
use meanfield::torus::{self, MU1};
use meanfield::{Field, MeanZeroField, Params, Point, TorusGrid};
use proptest::prelude::*;

const N: usize = 16;

fn grid() -> TorusGrid {
    TorusGrid::new(N).unwrap()
}

fn field() -> impl Strategy<Value = Field> {
    prop::collection::vec(-3.0..3.0f64, N * N).prop_map(|v| Field::from_values(grid(), v).unwrap())
}

fn mean_zero() -> impl Strategy<Value = MeanZeroField> {
    field().prop_map(MeanZeroField::project)
}

fn params() -> impl Strategy<Value = Params> {
    (0.0..60.0f64, 0.0..60.0f64).prop_map(|(a, b)| Params::new(a, b).unwrap())
}

proptest! {
    #[test]
    fn region_is_symmetric(p in params()) {
        prop_assert_eq!(diagnostics::in_lambda(&p), diagnostics::in_lambda(&p.swapped()));
    }

    #[test]
    fn region_matches_its_inequalities(p in params()) {
        let v = diagnostics::in_lambda(&p);
        prop_assert_eq!(v.in_region, p.lambda1 + p.lambda2 < 4.0 * PI * PI && p.lambda1.max(p.lambda2) > 8.0 * PI);
        prop_assert_eq!(v.in_region, v.margin > 0.0);
    }

    #[test]
    fn jensen_lower_bound(u in mean_zero()) {
        prop_assert!(eval_g(&u) >= -1e-12);
    }

    #[test]
    fn g_is_shift_covariant(u in field(), c in -5.0..5.0f64) {
        let shifted = u.map(|v| v + c);
        prop_assert!((eval_g(&shifted) - eval_g(&u) - c).abs() < 1e-12 * (1.0 + c.abs() + eval_g(&u).abs()));
    }

    #[test]
    fn g_bounded_by_extremes(u in field()) {
        let g = eval_g(&u);
        prop_assert!(g <= u.max() + 1e-12);
        prop_assert!(g >= u.mean() - 1e-12);
    }

    #[test]
    fn energy_swap_symmetry(u in mean_zero(), p in params()) {
        let a = eval_i(&u, &p).total;
        let b = eval_i(&u.neg(), &p.swapped()).total;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn energy_decreases_in_parameters(u in mean_zero(), p in params(), s in 0.0..10.0f64) {
        prop_assert!(eval_i(&u, &p.shifted(s)).total <= eval_i(&u, &p).total);
    }

    #[test]
    fn projection_removes_the_mean(u in field()) {
        let m = MeanZeroField::project(u.clone());
        prop_assert!(m.mean().abs() <= torus::mean_zero_tolerance(&m));
        let d = &u - m.as_field();
        prop_assert!(d.values().iter().all(|v| (v - u.mean()).abs() < 1e-12));
    }

    #[test]
    fn poincare_inequality(u in mean_zero()) {
        let l2 = u.l2_norm().powi(2);
        prop_assert!(torus::spectral_dirichlet(&u) >= MU1 * l2 * (1.0 - 1e-10));
    }

    #[test]
    fn inverse_laplacian_round_trip(u in mean_zero()) {
        let back = torus::inv_minus_laplacian(&torus::minus_laplacian(&u)).unwrap();
        let err = (back.as_field() - u.as_field()).max_abs();
        prop_assert!(err < 1e-10 * (1.0 + u.max_abs()));
    }

    #[test]
    fn residual_is_mean_zero(u in mean_zero(), p in params()) {
        let r = functional::residual(&u, &p);
        prop_assert!(r.mean().abs() <= torus::mean_zero_tolerance(&r));
    }

    #[test]
    fn line_fit_recovers_exact_lines(a in -50.0..50.0f64, b in -10.0..10.0f64) {
        let x = [1.0, 2.0, 3.5, 4.0, 6.0];
        let y: Vec<f64> = x.iter().map(|t| a * t + b).collect();
        let f = bumps::fit_line(&x, &y);
        prop_assert!((f.slope - a).abs() < 1e-10 * (1.0 + a.abs()));
        prop_assert!((f.intercept - b).abs() < 1e-9 * (1.0 + b.abs() + a.abs()));
        prop_assert!(f.max_residual < 1e-9 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn mass_relation_vanishes_on_its_parametrization(x in 12.0..200.0f64) {
        // y solves (x − y)² = 8π(x + y) on the branch below x
        let e = 8.0 * PI;
        let y = x + 0.5 * e - (2.0 * e * x + 0.25 * e * e).sqrt();
        prop_assert!(diagnostics::mass_relation_residual(x, y).abs() < 1e-9 * x * x);
    }

    #[test]
    fn field_files_round_trip(u in field()) {
        let mut buf = Vec::new();
        u.write_to(&mut buf).unwrap();
        prop_assert_eq!(Field::read_from(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn bubbles_are_translation_invariant(cx in 0usize..N, cy in 0usize..N) {
        let g = TorusGrid::new(64).unwrap();
        let h = g.h();
        let base = bumps::build_u_eps(&BumpSpec::new(Point { x: 0.5, y: 0.5 }, 0.0625, 0.25).unwrap(), g).unwrap();
        let moved = bumps::build_u_eps(
            &BumpSpec::new(Point { x: (cx as f64 * 4.0 * h + 0.5) % 1.0, y: (cy as f64 * 4.0 * h + 0.5) % 1.0 }, 0.0625, 0.25).unwrap(),
            g,
        )
        .unwrap();
        let a = eval_g(&base);
        let b = eval_g(&moved);
        prop_assert!((a - b).abs() < 1e-10 * a.abs());
        prop_assert!((torus::fd_dirichlet(&base) - torus::fd_dirichlet(&moved)).abs() < 1e-9 * torus::fd_dirichlet(&base));
    }
}
