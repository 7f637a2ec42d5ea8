use fracsol_core::ground_state::rayleigh_quotient;
use fracsol_core::inequalities::{check_multiplier_inequality, MultiplierGapParams};
use fracsol_core::spectral::{frac_laplacian, sobolev_inner, sobolev_norm_squared};
use fracsol_core::symmetry::{asymmetry, even_part, odd_part, symmetrize};
use fracsol_core::{GridSpec, RealField};
use proptest::prelude::*;

fn grid1() -> GridSpec {
    GridSpec::new(1, 32, 5.0).unwrap()
}

fn grid2() -> GridSpec {
    GridSpec::new(2, 16, 4.0).unwrap()
}

fn field(grid: GridSpec) -> impl Strategy<Value = RealField> {
    prop::collection::vec(-1.0..1.0f64, grid.len()).prop_map(move |v| RealField::new(grid, v).unwrap())
}

fn order() -> impl Strategy<Value = f64> {
    0.05..=1.0f64
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frac_laplacian_is_linear(u in field(grid2()), v in field(grid2()), a in -3.0..3.0f64, s in order()) {
        let lhs = frac_laplacian(&u.scaled(a).add(&v), s).unwrap();
        let rhs = frac_laplacian(&u, s).unwrap().scaled(a).add(&frac_laplacian(&v, s).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11 * (1.0 + rhs.norm_linf()));
    }

    #[test]
    fn frac_laplacian_is_self_adjoint_and_nonnegative(u in field(grid1()), v in field(grid1()), s in order()) {
        let a = frac_laplacian(&u, s).unwrap().inner(&v);
        let b = frac_laplacian(&v, s).unwrap().inner(&u);
        prop_assert!(close(a, b, 1e-12));
        prop_assert!(frac_laplacian(&u, s).unwrap().inner(&u) >= -1e-12);
    }

    #[test]
    fn orders_compose(u in field(grid2()), s in 0.05..0.5f64, t in 0.05..0.5f64) {
        let twice = frac_laplacian(&frac_laplacian(&u, s).unwrap(), t).unwrap();
        let once = frac_laplacian(&u, s + t).unwrap();
        prop_assert!(twice.max_abs_diff(&once) < 1e-10 * (1.0 + once.norm_linf()));
    }

    #[test]
    fn parseval(u in field(grid2())) {
        let physical = u.norm_l2().powi(2);
        let spectral = u.to_spectral().norm_l2_squared();
        prop_assert!(close(physical, spectral, 1e-12));
    }

    #[test]
    fn sobolev_norm_splits(u in field(grid1()), s in order()) {
        let full = sobolev_norm_squared(&u, s).unwrap();
        let split = u.norm_l2().powi(2) + frac_laplacian(&u, s).unwrap().inner(&u);
        prop_assert!(close(full, split, 1e-12));
        prop_assert!(close(sobolev_inner(&u, &u, s).unwrap(), full, 1e-12));
    }

    #[test]
    fn symmetrize_is_an_idempotent_projection(u in field(grid2())) {
        let once = symmetrize(&u);
        prop_assert!(symmetrize(&once).max_abs_diff(&once) < 1e-14);
        prop_assert!(asymmetry(&once) < 1e-14);
        prop_assert!(once.inner(&u.sub(&once)).abs() < 1e-12 * (1.0 + u.inner(&u)));
    }

    #[test]
    fn even_and_odd_parts_split(u in field(grid2())) {
        let (e, o) = (even_part(&u), odd_part(&u));
        prop_assert!(e.add(&o).max_abs_diff(&u) < 1e-15);
        prop_assert!(e.inner(&o).abs() < 1e-12 * (1.0 + u.inner(&u)));
    }

    #[test]
    fn rayleigh_quotient_is_scale_invariant(u in field(grid1()), c in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64], s in order(), p in 1.2..4.0f64) {
        prop_assume!(u.norm_linf() > 1e-3);
        let a = rayleigh_quotient(&u, s, p).unwrap();
        let b = rayleigh_quotient(&u.scaled(c), s, p).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn rayleigh_quotient_is_translation_invariant(u in field(grid2()), shift in prop::array::uniform2(-8i64..8)) {
        prop_assume!(u.norm_linf() > 1e-3);
        let a = rayleigh_quotient(&u, 0.7, 2.0).unwrap();
        let b = rayleigh_quotient(&u.roll(&shift), 0.7, 2.0).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn multiplier_bound_above_unit_frequency(
        sigma_bar in 0.01..=1.0f64,
        s in 0.01..=1.0f64,
        extra in 1e-6..2.0f64,
        xi in 1.0..1e4f64,
    ) {
        let params = MultiplierGapParams::new(sigma_bar, s, 2.0 * (sigma_bar - s).abs() + extra).unwrap();
        let sides = check_multiplier_inequality(xi, &params).unwrap();
        prop_assert!(sides.holds, "{sides:?}");
    }
}
