use fracsol_core::extension::{
    a1_form, calibrate_kappa, dtn_check, extend, extended_rayleigh, kappa_closed_form, neumann_trace,
    random_quarter_plane, sample_fn, translation_mode_extension, ExtensionField, FarBoundary, HalfSpaceGrid, Sector,
    CALIBRATION_WIDTHS, DEFAULT_T_FIRST,
};
use fracsol_core::ground_state::{solve_ground_state, GroundState, Init, ProblemSpec, SolverOptions};
use fracsol_core::oracle::gaussian_frac_laplacian;
use fracsol_core::GridSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn gaussian(width: f64) -> impl Fn(f64) -> f64 {
    move |r| (-0.5 * r * r / (width * width)).exp()
}

fn gaussian_gap(grid: &HalfSpaceGrid) -> f64 {
    let s = grid.s();
    let data = sample_fn(grid, gaussian(1.0));
    let ext = extend(&data, grid, Sector::Radial).unwrap();
    let f: Vec<f64> = grid.r().iter().map(|&r| gaussian_frac_laplacian(grid.dims(), s, 1.0, r).unwrap()).collect();
    let report = dtn_check(&ext, &f, kappa_closed_form(s)).unwrap();
    assert!(report.reliable);
    report.max_gap
}

fn slab_grid(cells: usize) -> HalfSpaceGrid {
    HalfSpaceGrid::new(1, 0.5, 2.0 * PI, cells, 40.0, 0.96, DEFAULT_T_FIRST, FarBoundary::Neumann).unwrap()
}

fn ground_state(s: f64) -> GroundState {
    let problem = ProblemSpec::new(GridSpec::new(2, 128, 20.0).unwrap(), s, 2.0).unwrap();
    solve_ground_state(&problem, &Init::Gaussian { width: 1.5 }, &SolverOptions::default()).unwrap()
}

#[test]
fn slab_mode_decays_exponentially() {
    let g = slab_grid(800);
    let ext = extend(&sample_fn(&g, f64::cos), &g, Sector::Radial).unwrap();
    assert!(ext.rel_residual < 1e-10);
    let mut err = 0.0f64;
    for (i, &t) in g.t().iter().enumerate() {
        for (j, &r) in g.r().iter().enumerate() {
            err = err.max((ext.at(i, j) - (-t).exp() * r.cos()).abs());
        }
    }
    assert!(err < 1e-4, "field error {err}");
}

#[test]
fn slab_neumann_trace_is_the_wavenumber() {
    let g = slab_grid(800);
    let data = sample_fn(&g, f64::cos);
    let ext = extend(&data, &g, Sector::Radial).unwrap();
    let report = dtn_check(&ext, &data, 1.0).unwrap();
    assert!(report.max_gap < 1e-3, "gap {}", report.max_gap);
}

#[test]
fn zero_data_gives_zero_traces() {
    let g = HalfSpaceGrid::standard(2, 0.75, 10.0).unwrap();
    let ext = extend(&vec![0.0; g.r().len()], &g, Sector::Radial).unwrap();
    let report = dtn_check(&ext, &vec![0.0; g.r().len()], kappa_closed_form(0.75)).unwrap();
    assert!(report.neumann.iter().all(|&v| v == 0.0));
    assert_eq!(report.max_gap, 0.0);
}

#[test]
fn minimum_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in [0.2, 0.5, 0.8] {
        let g = HalfSpaceGrid::standard(2, s, 10.0).unwrap();
        let centre: f64 = rng.gen_range(0.0..4.0);
        let mut data = sample_fn(&g, |r| (-(r - centre).powi(2)).exp() * (1.0 + (3.0 * r).sin().powi(2)));
        *data.last_mut().unwrap() = 0.0;
        let ext = extend(&data, &g, Sector::Radial).unwrap();
        let min = ext.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10, "min {min} at s = {s}");
    }
}

#[test]
fn extension_decays_toward_the_top() {
    let g = HalfSpaceGrid::standard(2, 0.5, 20.0).unwrap();
    let ext = extend(&sample_fn(&g, gaussian(1.0)), &g, Sector::Radial).unwrap();
    let top = ext.row(g.t().len() - 1).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(top < 1e-6);
}

#[test]
fn gaussian_dtn_gap_halves_under_refinement() {
    let g = HalfSpaceGrid::standard(2, 0.75, 20.0).unwrap();
    let coarse = gaussian_gap(&g);
    let fine = gaussian_gap(&g.refined().unwrap());
    assert!(coarse < 1e-2, "gap {coarse}");
    assert!(fine <= 0.5 * coarse, "{coarse} -> {fine}");
}

#[test]
fn gaussian_dtn_gap_small_across_orders() {
    for s in [0.25, 0.5, 0.9] {
        let gap = gaussian_gap(&HalfSpaceGrid::standard(2, s, 20.0).unwrap());
        assert!(gap < 1e-2, "gap {gap} at s = {s}");
    }
}

#[test]
fn dtn_is_linear() {
    let g = HalfSpaceGrid::standard(2, 0.6, 12.0).unwrap();
    let a = sample_fn(&g, gaussian(1.0));
    let b = sample_fn(&g, |r| r * r * (-r * r).exp());
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + 2.0 * y).collect();
    let trace = |d: &[f64]| neumann_trace(&extend(d, &g, Sector::Radial).unwrap()).values;
    let (ta, tb, ts) = (trace(&a), trace(&b), trace(&sum));
    let peak = ts.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dev = (0..ts.len()).fold(0.0f64, |m, j| m.max((ts[j] - ta[j] - 2.0 * tb[j]).abs()));
    assert!(dev < 1e-10 * peak, "deviation {dev} against {peak}");
}

#[test]
fn kappa_one_half_is_one() {
    let cal = calibrate_kappa(&HalfSpaceGrid::standard(2, 0.5, 20.0).unwrap(), &CALIBRATION_WIDTHS).unwrap();
    assert!((cal.kappa - 1.0).abs() < 0.01, "kappa {}", cal.kappa);
    assert!(cal.consistent);
}

#[test]
fn kappa_consistent_across_widths() {
    let cal = calibrate_kappa(&HalfSpaceGrid::standard(2, 0.75, 20.0).unwrap(), &[1.0, 2.0]).unwrap();
    let (a, b) = (cal.per_width[0].1, cal.per_width[1].1);
    assert!((a - b).abs() / a.max(b) < 0.01, "{:?}", cal.per_width);
}

#[test]
fn kappa_distinct_and_stable_under_refinement() {
    let mut values = Vec::new();
    for s in [0.25, 0.75] {
        let g = HalfSpaceGrid::standard(2, s, 20.0).unwrap();
        let coarse = calibrate_kappa(&g, &CALIBRATION_WIDTHS).unwrap().kappa;
        let fine = calibrate_kappa(&g.refined().unwrap(), &CALIBRATION_WIDTHS).unwrap().kappa;
        assert!((coarse - fine).abs() / fine < 5e-3, "{coarse} vs {fine} at s = {s}");
        values.push(fine);
    }
    assert!(values[1] > 2.0 * values[0]);
}

#[test]
fn kappa_varies_continuously() {
    let orders = [0.3, 0.5, 0.7, 0.9];
    let kappas: Vec<f64> = orders
        .iter()
        .map(|&s| calibrate_kappa(&HalfSpaceGrid::standard(2, s, 20.0).unwrap(), &CALIBRATION_WIDTHS).unwrap().kappa)
        .collect();
    for w in kappas.windows(2) {
        assert!(w[1] > w[0], "{kappas:?}");
    }
    // Midpoint calibrations lie between their neighbours.
    for (k, &s) in [0.4, 0.6, 0.8].iter().enumerate() {
        let mid = calibrate_kappa(&HalfSpaceGrid::standard(2, s, 20.0).unwrap(), &CALIBRATION_WIDTHS).unwrap().kappa;
        assert!(mid > kappas[k] && mid < kappas[k + 1], "{mid} at s = {s}");
    }
    for (&s, &k) in orders.iter().zip(&kappas) {
        assert!((k - kappa_closed_form(s)).abs() / k < 0.01, "{k} at s = {s}");
    }
}

#[test]
fn a1_nonnegative_on_random_fields() {
    let s = 0.75;
    let gs = ground_state(s);
    let g = HalfSpaceGrid::standard(2, s, 10.0).unwrap();
    let kappa = calibrate_kappa(&HalfSpaceGrid::standard(2, s, 20.0).unwrap(), &CALIBRATION_WIDTHS).unwrap().kappa;
    for seed in 0..100 {
        let field = random_quarter_plane(&g, seed);
        let report = a1_form(&field, &gs, kappa).unwrap();
        assert!(report.value >= -1e-6 * report.positive_part, "seed {seed}: {report:?}");
    }
}

#[test]
fn a1_vanishes_on_zero_field() {
    let gs = ground_state(0.75);
    let g = HalfSpaceGrid::standard(2, 0.75, 10.0).unwrap();
    let zero = ExtensionField::from_values(g.clone(), Sector::Dipole, vec![0.0; g.t().len() * g.r().len()]).unwrap();
    let report = a1_form(&zero, &gs, 1.0).unwrap();
    assert_eq!(report.value, 0.0);
}

#[test]
fn a1_nearly_vanishes_on_translation_mode() {
    let s = 0.75;
    let gs = ground_state(s);
    let g = HalfSpaceGrid::standard(2, s, 20.0).unwrap();
    let kappa = calibrate_kappa(&g, &CALIBRATION_WIDTHS).unwrap().kappa;
    let field = translation_mode_extension(&gs, &g).unwrap();
    let report = a1_form(&field, &gs, kappa).unwrap();
    assert!(report.value.abs() < 1e-3 * report.positive_part, "{report:?}");
}

#[test]
fn a1_rejects_axis_values_in_the_plane() {
    let gs = ground_state(0.75);
    let g = HalfSpaceGrid::standard(2, 0.75, 10.0).unwrap();
    let mut field = random_quarter_plane(&g, 1);
    field.values[0] = 1.0;
    assert!(a1_form(&field, &gs, 1.0).is_err());
    let radial = ExtensionField::from_values(g.clone(), Sector::Radial, field.values.clone()).unwrap();
    assert!(a1_form(&radial, &gs, 1.0).is_err());
}

#[test]
fn extension_minimizes_energy() {
    let g = HalfSpaceGrid::standard(2, 0.4, 8.0).unwrap();
    let ext = extend(&sample_fn(&g, gaussian(1.0)), &g, Sector::Radial).unwrap();
    let base = ext.energy();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cols = g.r().len();
    let rows = g.t().len();
    for _ in 0..20 {
        let amp: f64 = rng.gen_range(-0.1..0.1);
        let (tc, rc): (f64, f64) = (rng.gen_range(0.1..3.0), rng.gen_range(0.0..4.0));
        let mut values = ext.values.clone();
        for i in 1..rows - 1 {
            for j in 0..cols - 1 {
                let (t, r) = (g.t()[i], g.r()[j]);
                values[i * cols + j] += amp * (-(t - tc).powi(2) - (r - rc).powi(2)).exp();
            }
        }
        let competitor = ExtensionField::from_values(g.clone(), Sector::Radial, values).unwrap();
        assert!(competitor.energy() >= base);
    }
}

#[test]
fn extended_rayleigh_reproduces_nu() {
    let s = 0.75;
    let gs = ground_state(s);
    let g = HalfSpaceGrid::standard(2, s, 20.0).unwrap();
    let kappa = calibrate_kappa(&g, &CALIBRATION_WIDTHS).unwrap().kappa;
    let report = extended_rayleigh(&gs, &g, kappa).unwrap();
    assert!(report.rel_gap < 0.02, "{report:?}");
}
