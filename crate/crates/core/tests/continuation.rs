use fracsol_core::continuation::{
    alpha, branch_step, lipschitz_estimate, random_radial, trace_branch, uniqueness_test, BranchOptions, NuSource,
    PhiMap,
};
use fracsol_core::ground_state::{solve_ground_state, solve_local, GroundState, Init, ProblemSpec, SolverOptions};
use fracsol_core::krylov::SolveOptions;
use fracsol_core::{GridSpec, RealField};

fn grid() -> GridSpec {
    GridSpec::new(2, 128, 20.0).unwrap()
}

fn anchor() -> GroundState {
    solve_local(&ProblemSpec::new(grid(), 1.0, 2.0).unwrap(), &SolverOptions::default()).unwrap()
}

fn direct(s: f64) -> GroundState {
    let problem = ProblemSpec::new(grid(), s, 2.0).unwrap();
    solve_ground_state(&problem, &Init::Gaussian { width: 1.5 }, &SolverOptions::default()).unwrap()
}

fn zeros() -> RealField {
    RealField::zeros(grid())
}

#[test]
fn branch_point_matches_direct_solution() {
    let a = anchor();
    let d = direct(0.95);
    let map = PhiMap::new(&a, 0.95, d.nu).unwrap();
    let pt = branch_step(&map, &zeros(), &BranchOptions::default()).unwrap();
    assert!(pt.contraction_rate < 1.0);
    assert!(pt.in_ball);
    assert!(pt.fixed_point_residual < 1e-10);
    assert!(map.norm(&map.phi(pt.omega()).unwrap()) < 1e-10);
    let report = uniqueness_test(&a, &d, &pt, 1e-5).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.linf_gap < 1e-5);
}

#[test]
fn recentering_absorbs_translations() {
    let a = anchor();
    let mut d = direct(0.95);
    let map = PhiMap::new(&a, 0.95, d.nu).unwrap();
    let pt = branch_step(&map, &zeros(), &BranchOptions::default()).unwrap();
    d.u = d.u.roll(&[1, -2]);
    assert!(uniqueness_test(&a, &d, &pt, 1e-4).unwrap().pass);
}

#[test]
fn mismatched_order_is_rejected() {
    let a = anchor();
    let d = direct(0.9);
    let map = PhiMap::new(&a, 0.95, d.nu).unwrap();
    let pt = branch_step(&map, &zeros(), &BranchOptions::default()).unwrap();
    assert!(uniqueness_test(&a, &d, &pt, 1e-4).is_err());
}

#[test]
fn derivative_defect_is_first_order() {
    let a = anchor();
    let map = PhiMap::new(&a, 0.9, a.nu).unwrap();
    let w = random_radial(grid(), 11);
    let e1 = map.derivative_defect(&w, 1e-3).unwrap();
    let e2 = map.derivative_defect(&w, 5e-4).unwrap();
    let ratio = e1 / e2;
    assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn remainder_is_quadratic_for_p_two() {
    let a = anchor();
    let map = PhiMap::new(&a, 0.9, a.nu).unwrap();
    let w = random_radial(grid(), 12);
    let q = |eps: f64| map.norm(&map.remainder(&w.scaled(eps)).unwrap());
    let ratio = q(0.02) / q(0.01);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn remainder_scales_with_p_below_two() {
    let g = GridSpec::new(1, 256, 20.0).unwrap();
    let a = solve_local(&ProblemSpec::new(g, 1.0, 1.5).unwrap(), &SolverOptions::default()).unwrap();
    let map = PhiMap::new(&a, 0.9, a.nu).unwrap();
    // A datum that changes sign where U_1 is small exercises the |·|^{p-1} kink.
    let w = RealField::from_radial(g, |r| (0.3 * r).cos());
    let q = |eps: f64| map.norm(&map.remainder(&w.scaled(eps)).unwrap());
    // Between the kink rate 2^p and the smooth rate 4 at every halving.
    for eps in [4e-3, 2e-3, 1e-3] {
        let ratio = q(eps) / q(0.5 * eps);
        assert!(ratio > 2f64.powf(1.5) - 0.05 && ratio < 4.05, "ratio {ratio} at {eps}");
    }
}

#[test]
fn inverse_norm_is_uniform_near_one() {
    let a = anchor();
    let f = random_radial(grid(), 13);
    let mut ratios = Vec::new();
    for s in [0.8, 0.9, 0.95] {
        let d = direct(s);
        let map = PhiMap::new(&a, s, d.nu).unwrap();
        let inv = map.invert(&f, SolveOptions::default()).unwrap();
        assert!(inv.rel_residual < 1e-9);
        ratios.push(inv.norm_ratio);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max < 2.0 * min, "{ratios:?}");
}

#[test]
fn fixed_point_map_contracts_in_the_ball() {
    let a = anchor();
    let d = direct(0.95);
    let map = PhiMap::new(&a, 0.95, d.nu).unwrap();
    let opts = BranchOptions::default();
    let pt = branch_step(&map, &zeros(), &opts).unwrap();
    let radius = opts.r0 * pt.alpha;
    let lip = lipschitz_estimate(&map, pt.omega(), 0.5 * radius, 4, 7, opts.solve).unwrap();
    assert!(lip < 1.0, "Lipschitz estimate {lip}");
}

#[test]
fn cold_and_warm_starts_agree() {
    let a = anchor();
    let d90 = direct(0.9);
    let d95 = direct(0.95);
    let opts = BranchOptions::default();
    let warm_from = branch_step(&PhiMap::new(&a, 0.95, d95.nu).unwrap(), &zeros(), &opts).unwrap();
    let map = PhiMap::new(&a, 0.9, d90.nu).unwrap();
    let cold = branch_step(&map, &zeros(), &opts).unwrap();
    let warm = branch_step(&map, warm_from.omega(), &opts).unwrap();
    assert!(map.norm(&cold.omega().sub(warm.omega())) < 1e-9);
    assert!(warm.iterations <= cold.iterations);
}

#[test]
fn far_start_never_lands_elsewhere_in_the_ball() {
    let a = anchor();
    let d = direct(0.95);
    let map = PhiMap::new(&a, 0.95, d.nu).unwrap();
    let opts = BranchOptions::default();
    let reference = branch_step(&map, &zeros(), &opts).unwrap();
    let far = random_radial(grid(), 21);
    let far = far.scaled(10.0 / map.norm(&far));
    match branch_step(&map, &far, &opts) {
        Ok(pt) => {
            let gap = map.norm(&pt.omega().sub(reference.omega()));
            let radius = opts.r0 * reference.alpha;
            assert!(gap < 1e-9 || map.norm(pt.omega()) > radius, "distinct fixed point inside the ball");
        }
        Err(e) => {
            let msg = e.to_string();
            assert!(msg.contains("diverged") || msg.contains("converge") || msg.contains("breakdown"), "{msg}");
        }
    }
}

#[test]
fn branch_over_default_grid() {
    let a = anchor();
    let s_values = [1.0, 0.98, 0.96, 0.94, 0.92, 0.9];
    let table: Vec<(f64, f64)> = s_values
        .iter()
        .map(|&s| (s, if s == 1.0 { a.nu } else { direct(s).nu }))
        .collect();
    let branch = trace_branch(&a, &s_values, &NuSource::Measured(table), &BranchOptions::default()).unwrap();
    assert!(branch.failure.is_none(), "{:?}", branch.failure);
    assert_eq!(branch.points.len(), s_values.len());
    assert!(branch.r0_estimate.is_finite());
    assert!(branch.r0_estimate <= 0.5 * BranchOptions::default().r0);
    for pt in &branch.points {
        assert!(pt.contraction_rate < 1.0);
        assert!(pt.in_ball);
        assert!(pt.fixed_point_residual < 1e-10);
        assert_eq!(pt.alpha, alpha(pt.s, a.nu, pt.nu_used));
    }
    assert_eq!(branch.smallest_s(), Some(0.9));
}

#[test]
fn direct_source_reports_gaps() {
    let a = anchor();
    let solver = SolverOptions::default();
    let branch = trace_branch(&a, &[1.0, 0.97], &NuSource::Direct(solver), &BranchOptions::default()).unwrap();
    assert!(branch.failure.is_none());
    for pt in &branch.points {
        assert!(pt.linf_gap_vs_direct.unwrap() < 1e-6);
    }
}

#[test]
fn single_point_branch() {
    let a = anchor();
    let branch = trace_branch(&a, &[1.0], &NuSource::Measured(vec![(1.0, a.nu)]), &BranchOptions::default()).unwrap();
    assert_eq!(branch.points.len(), 1);
    assert!(branch.points[0].omega_norm < 1e-8);
}

#[test]
fn small_order_fails_gracefully() {
    let a = anchor();
    let branch = trace_branch(
        &a,
        &[1.0, 0.95, 0.3],
        &NuSource::Direct(SolverOptions::default()),
        &BranchOptions::default(),
    )
    .unwrap();
    assert_eq!(branch.points.len(), 2);
    let failure = branch.failure.expect("s = 0.3 is supercritical for p = 2 in the plane");
    assert_eq!(failure.s, 0.3);
}

#[test]
fn small_order_with_supplied_nu_fails_gracefully() {
    let a = anchor();
    let d = direct(0.95);
    let branch = trace_branch(
        &a,
        &[1.0, 0.95, 0.5],
        &NuSource::Measured(vec![(1.0, a.nu), (0.95, d.nu), (0.5, 0.5 * a.nu)]),
        &BranchOptions::default(),
    )
    .unwrap();
    assert_eq!(branch.smallest_s(), Some(0.95));
    assert_eq!(branch.failure.map(|f| f.s), Some(0.5));
}
