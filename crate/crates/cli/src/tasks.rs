//! The computations behind each subcommand. Every function takes a
//! validated configuration, writes its artifacts into `dir` and returns
//! their paths relative to `dir`.

use std::path::{Path, PathBuf};

use fracsol_core::continuation::{trace_branch, uniqueness_test, Branch, NuSource, UniquenessReport};
use fracsol_core::extension::{
    a1_form, calibrate_kappa, dtn_check, extend, extended_rayleigh, kappa_closed_form, random_quarter_plane, sample_fn,
    HalfSpaceGrid, Sector, CALIBRATION_WIDTHS,
};
use fracsol_core::ground_state::{solve_ground_state, solve_local, GroundState, Init, SolverOptions};
use fracsol_core::inequalities::elementary_inequality_suite;
use fracsol_core::linearized::{nondegeneracy_report, quadratic_form, radial_gap, EigenOptions, SpectrumReport};
use fracsol_core::oracle::gaussian_frac_laplacian;
use rayon::prelude::*;

use crate::config::{
    BranchConfig, ExtendConfig, IneqConfig, ProblemParams, SolveConfig, SpectrumConfig, SweepConfig,
};
use crate::emit::{write_csv, write_json, write_sidecar, Cell};
use crate::error::{numerical, Result};
use crate::records::{
    ExtensionRecord, GroundStateRecord, InequalityRecord, RefinementRow, SpectrumRecord, UniquenessRecord,
    SCHEMA_VERSION,
};

/// Radial extent of the grid on which `A_1` is sampled.
pub const FORM_EXTENT: f64 = 10.0;
/// `A_1(g,g) ≥ -A1_TOL · positive part` counts as non-negative.
pub const A1_TOL: f64 = 1e-6;

pub fn ground_state(params: &ProblemParams, init_width: f64, solver: &SolverOptions) -> Result<GroundState> {
    let problem = params.spec()?;
    solve_ground_state(&problem, &Init::Gaussian { width: init_width }, solver).map_err(numerical)
}

pub fn solve(cfg: &SolveConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let gs = solve_ground_state(&cfg.problem, &Init::Gaussian { width: cfg.init_width }, &cfg.solver).map_err(numerical)?;
    write_ground_state(&gs, dir, "ground_state")
}

/// `<stem>.json` and `<stem>.bin`.
pub fn write_ground_state(gs: &GroundState, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let json = PathBuf::from(format!("{stem}.json"));
    let bin = PathBuf::from(format!("{stem}.bin"));
    write_json(&dir.join(&json), &GroundStateRecord::from(gs))?;
    write_sidecar(&dir.join(&bin), gs)?;
    Ok(vec![json, bin])
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub gs: GroundState,
    pub k_r: f64,
    pub self_pairing: f64,
}

impl SweepPoint {
    pub fn s(&self) -> f64 {
        self.gs.problem.s
    }

    /// `|J''[u,u] - (1-p)ν| / |(1-p)ν|`.
    pub fn self_pairing_error(&self) -> f64 {
        let expected = (1.0 - self.gs.problem.p) * self.gs.nu;
        (self.self_pairing - expected).abs() / expected.abs()
    }
}

/// Ground states at every `s`, solved independently and merged in `s`
/// order.
pub fn sweep_ground_states(cfg: &SweepConfig) -> Result<Vec<GroundState>> {
    cfg.s_values
        .par_iter()
        .map(|&s| ground_state(&cfg.params.at_order(s), cfg.init_width, &cfg.solver))
        .collect()
}

pub fn sweep_gaps(states: Vec<GroundState>, eigen: &EigenOptions) -> Result<Vec<SweepPoint>> {
    states
        .into_par_iter()
        .map(|gs| {
            let k_r = radial_gap(&gs, eigen).map_err(numerical)?;
            let self_pairing = quadratic_form(&gs, &gs.u, &gs.u).map_err(numerical)?;
            Ok(SweepPoint { gs, k_r, self_pairing })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 8] =
    ["s", "nu", "K_r", "self_pairing", "self_pairing_rel_error", "residual", "iterations", "linf_norm"];

pub fn write_sweep(points: &[SweepPoint], path: &Path) -> Result<()> {
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|pt| {
            vec![
                pt.s().into(),
                pt.gs.nu.into(),
                pt.k_r.into(),
                pt.self_pairing.into(),
                pt.self_pairing_error().into(),
                pt.gs.residual.into(),
                pt.gs.iterations.into(),
                pt.gs.u.norm_linf().into(),
            ]
        })
        .collect();
    write_csv(path, &SWEEP_HEADER, &rows)
}

pub fn sweep(cfg: &SweepConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let points = sweep_gaps(sweep_ground_states(cfg)?, &cfg.eigen)?;
    let csv = PathBuf::from("sweep.csv");
    write_sweep(&points, &dir.join(&csv))?;
    Ok(vec![csv])
}

pub fn spectrum_report(gs: &GroundState, zero_tol: f64, eigen: &EigenOptions) -> Result<SpectrumReport> {
    nondegeneracy_report(gs, zero_tol, eigen).map_err(numerical)
}

pub fn spectrum(cfg: &SpectrumConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let gs = solve_ground_state(&cfg.problem, &Init::Gaussian { width: cfg.init_width }, &cfg.solver).map_err(numerical)?;
    let report = spectrum_report(&gs, cfg.zero_tol, &cfg.eigen)?;
    let json = PathBuf::from("spectrum.json");
    write_json(&dir.join(&json), &SpectrumRecord::new(&report, cfg.params.points, cfg.params.half_width))?;
    Ok(vec![json])
}

#[derive(Debug, Clone)]
pub struct BranchRun {
    pub branch: Branch,
    /// Direct minimizers in `s_values` order, the anchor first.
    pub direct: Vec<GroundState>,
    /// One per converged branch point.
    pub uniqueness: Vec<UniquenessReport>,
}

pub fn branch_run(cfg: &BranchConfig) -> Result<BranchRun> {
    let anchor_problem = cfg.params.at_order(1.0).spec()?;
    let anchor = solve_local(&anchor_problem, &cfg.solver).map_err(numerical)?;
    let others: Vec<GroundState> = cfg.s_values[1..]
        .par_iter()
        .map(|&s| ground_state(&cfg.params.at_order(s), cfg.init_width, &cfg.solver))
        .collect::<Result<_>>()?;
    let mut direct = vec![anchor.clone()];
    direct.extend(others);
    let table = direct.iter().map(|gs| (gs.problem.s, gs.nu)).collect();
    let mut branch = trace_branch(&anchor, &cfg.s_values, &NuSource::Measured(table), &cfg.options).map_err(numerical)?;
    let mut uniqueness = Vec::with_capacity(branch.points.len());
    for (point, gs) in branch.points.iter_mut().zip(&direct) {
        let report = uniqueness_test(&anchor, gs, point, cfg.uniqueness_tol).map_err(numerical)?;
        point.linf_gap_vs_direct = Some(report.linf_gap);
        uniqueness.push(report);
    }
    Ok(BranchRun { branch, direct, uniqueness })
}

pub const BRANCH_HEADER: [&str; 8] =
    ["s", "nu_s", "omega_norm", "alpha", "ratio", "contraction_rate", "fixed_point_residual", "linf_gap_vs_direct"];

pub fn write_branch(run: &BranchRun, cfg: &BranchConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let rows: Vec<Vec<Cell>> = run
        .branch
        .points
        .iter()
        .map(|pt| {
            vec![
                pt.s.into(),
                pt.nu_used.into(),
                pt.omega_norm.into(),
                pt.alpha.into(),
                pt.ratio.into(),
                pt.contraction_rate.into(),
                pt.fixed_point_residual.into(),
                pt.linf_gap_vs_direct.into(),
            ]
        })
        .collect();
    let csv = PathBuf::from("branch.csv");
    write_csv(&dir.join(&csv), &BRANCH_HEADER, &rows)?;
    let json = PathBuf::from("uniqueness.json");
    let record = UniquenessRecord {
        schema_version: SCHEMA_VERSION.into(),
        tol: cfg.uniqueness_tol,
        r0: cfg.options.r0,
        r0_estimate: run.branch.r0_estimate,
        smallest_s: run.branch.smallest_s(),
        failure: run.branch.failure.clone(),
        reports: run.uniqueness.clone(),
    };
    write_json(&dir.join(&json), &record)?;
    Ok(vec![csv, json])
}

pub fn branch(cfg: &BranchConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let run = branch_run(cfg)?;
    write_branch(&run, cfg, dir)
}

/// Gap of the unit Gaussian's Neumann trace against the closed-form
/// constant times the multiplier.
pub fn gaussian_dtn_gap(grid: &HalfSpaceGrid) -> Result<f64> {
    let s = grid.s();
    let data = sample_fn(grid, |r| (-0.5 * r * r).exp());
    let ext = extend(&data, grid, Sector::Radial).map_err(numerical)?;
    let f = grid
        .r()
        .iter()
        .map(|&r| gaussian_frac_laplacian(grid.dims(), s, 1.0, r))
        .collect::<fracsol_core::Result<Vec<f64>>>()
        .map_err(numerical)?;
    Ok(dtn_check(&ext, &f, kappa_closed_form(s)).map_err(numerical)?.max_gap)
}

pub fn extension_record(cfg: &ExtendConfig) -> Result<ExtensionRecord> {
    let (dims, s) = (cfg.params.dims, cfg.params.s);
    let base = HalfSpaceGrid::standard(dims, s, cfg.extent).map_err(crate::error::usage)?;
    let mut table: Vec<RefinementRow> = Vec::with_capacity(cfg.levels);
    let mut grid = base.clone();
    for level in 0..cfg.levels {
        if level > 0 {
            grid = grid.refined().map_err(numerical)?;
        }
        let max_gap = gaussian_dtn_gap(&grid)?;
        let kappa = calibrate_kappa(&grid, &CALIBRATION_WIDTHS).map_err(numerical)?.kappa;
        let reduction = table.last().map(|prev| prev.max_gap / max_gap);
        table.push(RefinementRow {
            level,
            r_cells: grid.r().len() - 1,
            t_cells: grid.t().len() - 1,
            max_gap,
            reduction,
            kappa,
        });
    }
    let calibration = calibrate_kappa(&base, &CALIBRATION_WIDTHS).map_err(numerical)?;
    let kappa = calibration.kappa;
    let gs = ground_state(&cfg.params, cfg.init_width, &cfg.solver)?;
    let rayleigh = extended_rayleigh(&gs, &base, kappa).map_err(numerical)?;
    let form_grid = HalfSpaceGrid::standard(dims, s, FORM_EXTENT.min(cfg.extent)).map_err(numerical)?;
    let (mut violations, mut min_relative) = (0u64, f64::INFINITY);
    for k in 0..cfg.samples {
        let field = random_quarter_plane(&form_grid, cfg.seed.wrapping_add(k));
        let a1 = a1_form(&field, &gs, kappa).map_err(numerical)?;
        let rel = a1.value / a1.positive_part;
        if rel < -A1_TOL {
            violations += 1;
        }
        min_relative = min_relative.min(rel);
    }
    Ok(ExtensionRecord {
        schema_version: SCHEMA_VERSION.into(),
        s,
        dims,
        kappa,
        kappa_closed_form: calibration.closed_form,
        kappa_spread: calibration.spread,
        max_gap: table[0].max_gap,
        energy: rayleigh.energy,
        refinement_table: table,
        extended_quotient: rayleigh.quotient,
        nu: rayleigh.nu,
        extended_rel_gap: rayleigh.rel_gap,
        a1_samples: cfg.samples,
        a1_violations: violations,
        a1_min_relative: min_relative,
    })
}

pub fn extend_check(cfg: &ExtendConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let record = extension_record(cfg)?;
    let json = PathBuf::from("extension.json");
    write_json(&dir.join(&json), &record)?;
    Ok(vec![json])
}

pub fn ineq_suite(cfg: &IneqConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let report = elementary_inequality_suite(cfg.samples, cfg.seed).map_err(numerical)?;
    let json = PathBuf::from("inequalities.json");
    write_json(&dir.join(&json), &InequalityRecord::from(&report))?;
    Ok(vec![json])
}
