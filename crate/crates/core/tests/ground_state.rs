use fracsol_core::ground_state::{
    box_extrapolated_nu, decay_check, euler_lagrange_residual, functional_energy, rayleigh_quotient,
    solve_ground_state, solve_local, tail_window_radii, GroundState, Init, ProblemSpec, SolverOptions, TailKind,
};
use fracsol_core::oracle::{benjamin_ono_minimizer, benjamin_ono_nu, sech_minimizer, sech_nu, RadialShooting};
use fracsol_core::spectral::{sobolev_inner, sobolev_norm_squared};
use fracsol_core::symmetry::{asymmetry, recenter};
use fracsol_core::{GridSpec, RealField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(dims: usize, points: usize, half_width: f64, s: f64, p: f64) -> GroundState {
    let problem = ProblemSpec::new(GridSpec::new(dims, points, half_width).unwrap(), s, p).unwrap();
    solve_ground_state(&problem, &Init::Gaussian { width: 1.5 }, &SolverOptions::default()).unwrap()
}

fn sup_gap(u: &RealField, f: impl Fn(f64) -> f64) -> f64 {
    let g = *u.grid();
    (0..g.len())
        .map(|i| {
            let x = g.point(i);
            let r = x[..g.dims()].iter().map(|c| c * c).sum::<f64>().sqrt();
            (u.values()[i] - f(r)).abs()
        })
        .fold(0.0, f64::max)
}

fn random_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> RealField {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RealField::from_fn(grid, |x| {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        (-(x[0] - c[0]).powi(2) / 2.0 - (y - c[1]).powi(2) / 3.0).exp() * (c[2] + c[3] * x[0] + c[4] * y + c[5] * x[0] * y)
    })
}

fn check_invariants(gs: &GroundState) {
    // Exponential tails sit at the rounding level near the box corners.
    let floor = -SolverOptions::default().clip_floor.abs();
    let min = gs.u.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > floor, "min {min}");
    assert!((gs.lp1_norm - 1.0).abs() < 1e-10);
    assert!((sobolev_norm_squared(&gs.u, gs.problem.s).unwrap() - gs.nu).abs() < 1e-8 * gs.nu);
    assert!(asymmetry(&gs.u) < 1e-9);
    assert!(gs.residual < 1e-9);
    let max = gs.u.norm_linf();
    assert_eq!(gs.u.at_origin(), max);
}

#[test]
fn benjamin_ono_ground_state() {
    let gs = solve(1, 2048, 200.0, 0.5, 2.0);
    check_invariants(&gs);
    let gap = sup_gap(&gs.u, benjamin_ono_minimizer);
    assert!(gap < 1e-4, "profile gap {gap}");
    let extrapolated = box_extrapolated_nu(&gs, &SolverOptions::default()).unwrap();
    assert!((extrapolated.nu_extrapolated - benjamin_ono_nu()).abs() < 1e-5, "{extrapolated:?}");
    assert!(gs.is_one_dimensional_check());
}

#[test]
fn benjamin_ono_residual_of_the_closed_form() {
    let g = GridSpec::new(1, 2048, 200.0).unwrap();
    let u = RealField::from_radial(g, benjamin_ono_minimizer);
    let r = euler_lagrange_residual(&u, benjamin_ono_nu(), 0.5, 2.0).unwrap();
    // The algebraic tail feels the periodic images at order L^{-2}.
    assert!(r.norm_l2() < 1e-3, "{}", r.norm_l2());
}

#[test]
fn sech_ground_state() {
    let gs = solve(1, 1024, 30.0, 1.0, 3.0);
    check_invariants(&gs);
    assert!((gs.nu - sech_nu()).abs() < 1e-6);
    assert!(sup_gap(&gs.u, sech_minimizer) < 1e-5);
    let g = *gs.grid();
    let closed = RealField::from_radial(g, sech_minimizer);
    assert!(euler_lagrange_residual(&closed, sech_nu(), 1.0, 3.0).unwrap().norm_l2() < 1e-9);
}

#[test]
fn planar_local_solution_matches_shooting() {
    let problem = ProblemSpec::new(GridSpec::new(2, 256, 20.0).unwrap(), 1.0, 2.0).unwrap();
    let gs = solve_local(&problem, &SolverOptions::default()).unwrap();
    check_invariants(&gs);
    let shooting = RadialShooting::solve(2, 2.0).unwrap();
    assert!((gs.nu - shooting.nu()).abs() < 1e-5 * shooting.nu());
    let gap = sup_gap(&gs.u, |r| shooting.minimizer(r));
    assert!(gap < 1e-5, "profile gap {gap}");
}

#[test]
fn planar_local_solution_is_grid_converged() {
    let coarse = solve(2, 128, 20.0, 1.0, 2.0);
    let fine = solve(2, 256, 20.0, 1.0, 2.0);
    assert!((coarse.nu - fine.nu).abs() < 1e-7, "{} vs {}", coarse.nu, fine.nu);
}

#[test]
fn initial_width_does_not_matter() {
    let problem = ProblemSpec::new(GridSpec::new(2, 128, 20.0).unwrap(), 0.9, 2.0).unwrap();
    let opts = SolverOptions::default();
    let a = solve_ground_state(&problem, &Init::Gaussian { width: 1.0 }, &opts).unwrap();
    let b = solve_ground_state(&problem, &Init::Gaussian { width: 3.0 }, &opts).unwrap();
    assert!((a.nu - b.nu).abs() < 1e-7);
    assert!(recenter(&a.u).max_abs_diff(&recenter(&b.u)) < 1e-5);
}

#[test]
fn off_centre_start_is_recentred() {
    let g = GridSpec::new(2, 128, 20.0).unwrap();
    let problem = ProblemSpec::new(g, 0.9, 2.0).unwrap();
    let start = RealField::from_fn(g, |x| (-((x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)) / 3.0).exp());
    let gs = solve_ground_state(&problem, &Init::Field(start), &SolverOptions::default()).unwrap();
    let reference = solve(2, 128, 20.0, 0.9, 2.0);
    assert!((gs.nu - reference.nu).abs() < 1e-7);
    assert_eq!(gs.u.at_origin(), gs.u.norm_linf());
}

#[test]
fn quotient_at_the_minimizer_and_scale_invariance() {
    let gs = solve(2, 128, 20.0, 0.8, 2.0);
    let q = rayleigh_quotient(&gs.u, 0.8, 2.0).unwrap();
    assert!((q - gs.nu).abs() < 1e-8 * gs.nu);
    let q3 = rayleigh_quotient(&gs.u.scaled(3.0), 0.8, 2.0).unwrap();
    assert!((q3 - q).abs() < 1e-12 * q);
    assert!(rayleigh_quotient(&RealField::zeros(*gs.grid()), 0.8, 2.0).is_err());
}

#[test]
fn energy_at_the_minimizer() {
    let gs = solve(2, 128, 20.0, 0.85, 2.0);
    let p = 2.0;
    let j = functional_energy(&gs.u, gs.nu, 0.85, p).unwrap();
    assert!((j - gs.nu * (p - 1.0) / (2.0 * (p + 1.0))).abs() < 1e-9);
    assert_eq!(functional_energy(&RealField::zeros(*gs.grid()), gs.nu, 0.85, p).unwrap(), 0.0);
}

#[test]
fn gradient_is_the_euler_lagrange_representative() {
    let gs = solve(2, 64, 16.0, 0.75, 2.0);
    let (s, p) = (0.75, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = gs.u.add(&random_field(*gs.grid(), &mut rng).scaled(0.1));
    let phi = random_field(*gs.grid(), &mut rng);
    let r = euler_lagrange_residual(&u, gs.nu, s, p).unwrap();
    let exact = r.inner(&phi);
    let fd = |eps: f64| {
        let plus = functional_energy(&u.add(&phi.scaled(eps)), gs.nu, s, p).unwrap();
        let minus = functional_energy(&u.sub(&phi.scaled(eps)), gs.nu, s, p).unwrap();
        (plus - minus) / (2.0 * eps)
    };
    let e1 = (fd(1e-2) - exact).abs();
    let e2 = (fd(5e-3) - exact).abs();
    assert!(e2 < 0.3 * e1, "{e1} -> {e2}");
}

#[test]
fn residual_vanishes_at_the_minimizer() {
    let gs = solve(2, 128, 20.0, 0.9, 2.0);
    let r = euler_lagrange_residual(&gs.u, gs.nu, 0.9, 2.0).unwrap();
    assert!(r.norm_l2() < 1e-8);
    assert!((r.norm_l2() - gs.residual).abs() < 1e-12);
}

#[test]
fn perturbations_never_lower_the_quotient() {
    let gs = solve(2, 64, 16.0, 0.8, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let phi = random_field(*gs.grid(), &mut rng);
        let eps = rng.gen_range(1e-3..1e-1);
        let v = gs.u.add(&phi.scaled(eps / phi.norm_l2()));
        let v = v.scaled(1.0 / v.norm_lp(3.0));
        assert!(rayleigh_quotient(&v, 0.8, 2.0).unwrap() >= gs.nu - 1e-10);
    }
}

#[test]
fn local_profile_bounds_every_order() {
    let g = GridSpec::new(2, 128, 20.0).unwrap();
    let anchor = solve_local(&ProblemSpec::new(g, 1.0, 2.0).unwrap(), &SolverOptions::default()).unwrap();
    let mut previous_gap = f64::INFINITY;
    for s in [0.8, 0.9, 0.95] {
        let gs = solve(2, 128, 20.0, s, 2.0);
        assert!(gs.nu <= rayleigh_quotient(&anchor.u, s, 2.0).unwrap());
        let gap = gs.u.sub(&anchor.u).norm_l2();
        assert!(gap < previous_gap);
        previous_gap = gap;
    }
}

#[test]
fn s_orthogonality_of_the_minimizer_to_its_translations() {
    let gs = solve(2, 64, 16.0, 0.8, 2.0);
    let shifted = gs.u.roll(&[1, 0]);
    let centred = sobolev_inner(&gs.u, &gs.u, 0.8).unwrap();
    assert!(sobolev_inner(&gs.u, &shifted, 0.8).unwrap() < centred);
}

#[test]
fn benjamin_ono_tail_constant() {
    let gs = solve(1, 2048, 200.0, 0.5, 2.0);
    let report = decay_check(&gs, &tail_window_radii(gs.grid())).unwrap();
    assert!(report.tail_flat);
    assert_eq!(report.kind, TailKind::Polynomial);
    // The far field is the linear response to a compact source, so on the
    // torus it picks up the images of the free-space tail `2/(ν r²)`.
    let period = 2.0 * gs.grid().half_width();
    let torus_tail = |r: f64| {
        let images: f64 = (-50..=50).map(|k| (r / (r - period * k as f64)).powi(2)).sum();
        2.0 / benjamin_ono_nu() * images
    };
    for (&r, &ratio) in report.radii.iter().zip(&report.ratio).rev().take(5) {
        let expected = torus_tail(r);
        assert!((ratio - expected).abs() < 5e-3 * expected, "r = {r}: {ratio} vs {expected}");
    }
}

#[test]
fn local_tail_is_super_polynomial() {
    let gs = solve(1, 512, 40.0, 1.0, 3.0);
    let report = decay_check(&gs, &tail_window_radii(gs.grid())).unwrap();
    assert!(!report.tail_flat);
    assert_eq!(report.kind, TailKind::SuperPolynomial);
}

#[test]
fn planar_fractional_tail_is_flat() {
    let gs = solve(2, 1024, 160.0, 0.8, 2.0);
    let report = decay_check(&gs, &tail_window_radii(gs.grid())).unwrap();
    assert!(report.tail_flat, "{report:?}");
    assert!(report.max_ratio.is_finite());
}

#[test]
fn decay_radii_are_validated() {
    let gs = solve(1, 256, 20.0, 1.0, 3.0);
    assert!(decay_check(&gs, &[1.0, 12.0]).is_err());
    assert!(decay_check(&gs, &[2.0, 1.0]).is_err());
}

#[test]
fn invalid_problems_are_rejected() {
    let g = GridSpec::new(2, 32, 10.0).unwrap();
    let err = ProblemSpec::new(g, 1.5, 2.0).unwrap_err();
    assert!(err.to_string().contains("s must lie in (0,1]"), "{err}");
    assert!(ProblemSpec::new(GridSpec::new(3, 8, 10.0).unwrap(), 0.5, 3.0).is_err());
    assert!(ProblemSpec::new(g, 1.0, 7.0).is_ok());
    assert!(ProblemSpec::new(g, 0.5, 1.0).is_err());
}
