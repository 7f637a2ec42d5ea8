//! The acceptance battery: criteria 1 to 10 as numerical checks, and
//! criterion 11 as a bit-for-bit rerun of the whole battery.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracsol_core::continuation::BranchOptions;
use fracsol_core::extension::{calibrate_kappa, HalfSpaceGrid, CALIBRATION_WIDTHS};
use fracsol_core::ground_state::{
    box_extrapolated_nu, decay_check, solve_local, tail_window_radii, GroundState, SolverOptions,
};
use fracsol_core::inequalities::elementary_inequality_suite;
use fracsol_core::linearized::EigenOptions;
use fracsol_core::oracle::{benjamin_ono_minimizer, benjamin_ono_nu, sech_minimizer, sech_nu, RadialShooting};
use fracsol_core::RealField;

use crate::config::{AcceptConfig, BranchConfig, Echo, ExtendConfig, ProblemParams, SweepConfig};
use crate::emit::{ensure_dir, write_json, Manifest, TaskStatus};
use crate::error::{numerical, HarnessError, Result};
use crate::records::{
    AcceptanceRecord, CriterionRecord, DecayRecord, InequalityRecord, SpectrumRecord, SCHEMA_VERSION,
};
use crate::tasks::{
    branch_run, extension_record, ground_state, spectrum_report, sweep_gaps, sweep_ground_states, write_branch,
    write_ground_state, write_sweep, SweepPoint,
};

/// Relative zero threshold of the spectral criteria.
pub const ZERO_TOL: f64 = 1e-4;
const INIT_WIDTH: f64 = 1.5;
/// Summary of criteria 1 to 10; compared between the two runs.
pub const CRITERIA_FILE: &str = "criteria.json";
pub const ACCEPTANCE_FILE: &str = "acceptance.json";

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub record: CriterionRecord,
    pub seconds: f64,
    /// Wall-clock budget in seconds, where one is stated.
    pub budget: Option<f64>,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.budget.map_or(true, |b| self.seconds <= b)
    }

    pub fn passed(&self) -> bool {
        self.record.pass && self.within_budget()
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let budget = match self.budget {
            Some(b) if !self.within_budget() => format!(", over the {b:.0} s budget"),
            _ => String::new(),
        };
        format!(
            "criterion {:>2} {verdict}  {}: {} ({:.1} s{budget})",
            self.record.id, self.record.title, self.record.detail, self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct AcceptanceOutcome {
    pub results: Vec<CriterionResult>,
    pub manifest: Manifest,
}

impl AcceptanceOutcome {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(CriterionResult::passed)
    }
}

struct Check {
    pass: bool,
    detail: String,
    metrics: BTreeMap<String, f64>,
    files: Vec<PathBuf>,
}

impl Check {
    fn new(pass: bool, detail: String) -> Self {
        Check { pass, detail, metrics: BTreeMap::new(), files: Vec::new() }
    }

    fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.into(), value);
        self
    }

    fn files(mut self, files: Vec<PathBuf>) -> Self {
        self.files.extend(files);
        self
    }
}

/// Runs `f`, turning an error into a failed criterion.
fn criterion(
    id: u32,
    title: &str,
    budget: Option<f64>,
    files: &mut Vec<PathBuf>,
    f: impl FnOnce() -> Result<Check>,
) -> CriterionResult {
    let start = Instant::now();
    let check = f().unwrap_or_else(|e| Check::new(false, format!("error: {e}")));
    files.extend(check.files);
    CriterionResult {
        record: CriterionRecord {
            id,
            title: title.into(),
            pass: check.pass,
            detail: check.detail,
            metrics: check.metrics,
        },
        seconds: start.elapsed().as_secs_f64(),
        budget,
    }
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

fn planar(s: f64, points: usize, half_width: f64) -> ProblemParams {
    ProblemParams { dims: 2, s, p: 2.0, points, half_width }
}

fn solve(params: ProblemParams) -> Result<GroundState> {
    ground_state(&params, INIT_WIDTH, &SolverOptions::default())
}

fn benjamin_ono(dir: &Path) -> Result<Check> {
    let gs = solve(ProblemParams { dims: 1, s: 0.5, p: 2.0, points: 2048, half_width: 200.0 })?;
    let gap = sup_gap(&gs.u, benjamin_ono_minimizer);
    let box_nu = box_extrapolated_nu(&gs, &SolverOptions::default()).map_err(numerical)?;
    let nu_error = (box_nu.nu_extrapolated - benjamin_ono_nu()).abs();
    let files = write_ground_state(&gs, dir, "benjamin_ono")?;
    Ok(Check::new(
        gap < 1e-4 && nu_error < 1e-5,
        format!("profile gap {gap:.2e} (< 1e-4), box-extrapolated nu error {nu_error:.2e} (< 1e-5)"),
    )
    .metric("profile_gap", gap)
    .metric("nu_raw", gs.nu)
    .metric("nu_extrapolated", box_nu.nu_extrapolated)
    .metric("nu_error", nu_error)
    .files(files))
}

fn local_oracles(dir: &Path) -> Result<Check> {
    let sech = solve(ProblemParams { dims: 1, s: 1.0, p: 3.0, points: 1024, half_width: 30.0 })?;
    let sech_nu_error = (sech.nu - sech_nu()).abs();
    let sech_gap = sup_gap(&sech.u, sech_minimizer);
    let planar_problem = planar(1.0, 256, 20.0).spec()?;
    let plane = solve_local(&planar_problem, &SolverOptions::default()).map_err(numerical)?;
    let shooting = RadialShooting::solve(2, 2.0).map_err(numerical)?;
    let plane_nu_error = (plane.nu - shooting.nu()).abs() / shooting.nu();
    let plane_gap = sup_gap(&plane.u, |r| shooting.minimizer(r));
    let mut files = write_ground_state(&sech, dir, "sech")?;
    files.extend(write_ground_state(&plane, dir, "planar_local")?);
    let pass = sech_nu_error < 1e-6 && sech_gap < 1e-5 && plane_nu_error < 1e-5 && plane_gap < 1e-5;
    Ok(Check::new(
        pass,
        format!(
            "sech nu error {sech_nu_error:.2e}, profile gap {sech_gap:.2e}; planar nu rel error {plane_nu_error:.2e}, profile gap {plane_gap:.2e}"
        ),
    )
    .metric("sech_nu_error", sech_nu_error)
    .metric("sech_profile_gap", sech_gap)
    .metric("planar_nu_rel_error", plane_nu_error)
    .metric("planar_profile_gap", plane_gap)
    .files(files))
}

fn inequalities(dir: &Path, seed: u64) -> Result<Check> {
    let report = elementary_inequality_suite(1_000_000, seed).map_err(numerical)?;
    let file = PathBuf::from("inequalities.json");
    write_json(&dir.join(&file), &InequalityRecord::from(&report))?;
    let counts: Vec<String> = report.tallies.iter().map(|t| format!("{} {}", t.name, t.violations)).collect();
    let pass = report.total_violations() == 0 && report.extremal_equality_gap < 1e-12;
    let mut check = Check::new(
        pass,
        format!("violations: {}; extremal equality gap {:.1e}", counts.join(", "), report.extremal_equality_gap),
    )
    .metric("extremal_equality_gap", report.extremal_equality_gap)
    .files(vec![file]);
    for t in &report.tallies {
        check = check.metric(&format!("violations_{}", t.name), t.violations as f64);
    }
    Ok(check)
}

pub const SWEEP_ORDERS: [f64; 7] = [0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];

fn sweep_config(seed: u64) -> SweepConfig {
    SweepConfig {
        params: planar(1.0, 128, 20.0),
        s_values: SWEEP_ORDERS.to_vec(),
        zero_tol: ZERO_TOL,
        init_width: INIT_WIDTH,
        solver: SolverOptions::default(),
        eigen: EigenOptions { seed, ..Default::default() },
    }
}

/// Difference quotients stay below this multiple of `ν_1`, and
/// `|ν_s - ν_1|` falls strictly as `s → 1`.
pub const QUOTIENT_BOUND: f64 = 1.0;

fn continuity(states: &[GroundState]) -> Check {
    let nus: Vec<f64> = states.iter().map(|g| g.nu).collect();
    let orders: Vec<f64> = states.iter().map(|g| g.problem.s).collect();
    let quotients: Vec<f64> = (1..nus.len()).map(|k| (nus[k] - nus[k - 1]).abs() / (orders[k] - orders[k - 1])).collect();
    let nu_1 = *nus.last().unwrap();
    let gaps: Vec<f64> = nus.iter().map(|nu| (nu - nu_1).abs()).collect();
    let max_q = quotients.iter().cloned().fold(0.0, f64::max);
    let min_q = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = QUOTIENT_BOUND * nu_1;
    let bounded = quotients.iter().all(|q| q.is_finite()) && max_q <= limit;
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let mut check = Check::new(
        bounded && monotone,
        format!(
            "difference quotients in [{min_q:.4}, {max_q:.4}] (limit {limit:.4}), |nu_s - nu_1| strictly decreasing: {monotone}"
        ),
    )
    .metric("lipschitz_constant", max_q)
    .metric("min_quotient", min_q);
    for (s, nu) in orders.iter().zip(&nus) {
        check = check.metric(&format!("nu_{s:.2}"), *nu);
    }
    check
}

fn radial_gaps(points: &[SweepPoint]) -> Check {
    let min = points.iter().map(|p| p.k_r).fold(f64::INFINITY, f64::min);
    let floor = 10.0 * ZERO_TOL;
    let all: Vec<String> = points.iter().map(|p| format!("{:.2}: {:.4}", p.s(), p.k_r)).collect();
    let mut check = Check::new(min > floor, format!("min K_r {min:.4} (> {floor:.0e}); {}", all.join(", ")))
        .metric("min_k_r", min);
    for p in points {
        check = check.metric(&format!("k_r_{:.2}", p.s()), p.k_r);
    }
    check
}

fn self_pairing(points: &[SweepPoint]) -> Check {
    let worst = points.iter().map(SweepPoint::self_pairing_error).fold(0.0, f64::max);
    Check::new(worst < 1e-8, format!("worst relative error of J''[u,u] against (1-p)nu {worst:.2e} (< 1e-8)"))
        .metric("worst_rel_error", worst)
}

/// Grid of the nondegeneracy criterion: `M` and `2M` on `[-L, L)²`.
pub const SPECTRUM_GRID: (usize, f64) = (96, 14.0);
pub const SPECTRUM_ORDERS: [f64; 3] = [0.8, 0.9, 0.95];

fn nondegeneracy(dir: &Path, seed: u64) -> Result<Check> {
    let (m, l) = SPECTRUM_GRID;
    let eigen = EigenOptions { seed, ..Default::default() };
    let mut pass = true;
    let mut notes = Vec::new();
    let mut check = Check::new(true, String::new());
    for &s in &SPECTRUM_ORDERS {
        let mut kernels = Vec::new();
        for points in [m, 2 * m] {
            let gs = solve(planar(s, points, l))?;
            let report = spectrum_report(&gs, ZERO_TOL, &eigen)?;
            let ok = report.kernel_by_sector[&1] == 2
                && report.negative_radial == 1
                && report.kernel_by_sector[&0] == 0
                && report.sector_eigs[&2][0] > 0.0;
            pass &= ok;
            kernels.push(report.kernel_dim);
            let file = PathBuf::from(format!("spectrum_s{s:.2}_M{points}.json"));
            write_json(&dir.join(&file), &SpectrumRecord::new(&report, points, l))?;
            check.files.push(file);
            check.metrics.insert(format!("min_l2_{s:.2}_M{points}"), report.sector_eigs[&2][0]);
            check.metrics.insert(format!("kernel_dim_{s:.2}_M{points}"), report.kernel_dim as f64);
            if !ok {
                notes.push(format!("s = {s}, M = {points}: {:?}", report.verdict));
            }
        }
        let stable = kernels.windows(2).all(|w| w[0] == w[1]);
        pass &= stable;
        notes.push(format!("s = {s}: kernel {:?}", kernels));
    }
    check.pass = pass;
    check.detail = notes.join("; ");
    Ok(check)
}

fn branch_config() -> BranchConfig {
    BranchConfig {
        params: planar(1.0, 128, 20.0),
        s_values: (0..=10).map(|k| 1.0 - 0.01 * k as f64).map(|s| (s * 1e12).round() / 1e12).collect(),
        options: BranchOptions::default(),
        uniqueness_tol: 1e-4,
        init_width: INIT_WIDTH,
        solver: SolverOptions::default(),
    }
}

pub const UNIQUENESS_ORDERS: [f64; 3] = [0.95, 0.92, 0.9];

fn branch(dir: &Path) -> Result<Check> {
    let cfg = branch_config();
    let run = branch_run(&cfg)?;
    let files = write_branch(&run, &cfg, dir)?;
    let pts = &run.branch.points;
    let complete = run.branch.failure.is_none() && pts.len() == cfg.s_values.len();
    let contracting = pts.iter().all(|p| p.contraction_rate < 1.0);
    let in_ball = pts.iter().all(|p| p.in_ball && p.ratio <= cfg.options.r0);
    let max_ratio = pts.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let max_rate = pts.iter().map(|p| p.contraction_rate).fold(0.0, f64::max);
    let mut unique = true;
    let mut gaps = Vec::new();
    for &s in &UNIQUENESS_ORDERS {
        match run.uniqueness.iter().find(|u| (u.s - s).abs() < 1e-12) {
            Some(u) => {
                unique &= u.pass;
                gaps.push(format!("{s}: {:.1e}", u.linf_gap));
            }
            None => {
                unique = false;
                gaps.push(format!("{s}: missing"));
            }
        }
    }
    Ok(Check::new(
        complete && contracting && in_ball && unique,
        format!(
            "{} of {} points, max contraction rate {max_rate:.3}, max ball ratio {max_ratio:.3} (<= r0 = {}), uniqueness L∞ gaps {}",
            pts.len(),
            cfg.s_values.len(),
            cfg.options.r0,
            gaps.join(", ")
        ),
    )
    .metric("max_contraction_rate", max_rate)
    .metric("max_ball_ratio", max_ratio)
    .metric("r0_estimate", run.branch.r0_estimate)
    .files(files))
}

pub const EXTENSION_ORDERS: [f64; 2] = [0.5, 0.75];
pub const EXTENSION_POINTS: usize = 512;

fn extension(dir: &Path, seed: u64) -> Result<Check> {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut check = Check::new(true, String::new());
    for &s in &EXTENSION_ORDERS {
        let cfg = ExtendConfig {
            params: planar(s, EXTENSION_POINTS, 20.0),
            extent: 20.0,
            levels: 2,
            samples: 100,
            seed,
            init_width: INIT_WIDTH,
            solver: SolverOptions::default(),
        };
        let record = extension_record(&cfg)?;
        let file = PathBuf::from(format!("extension_s{s:.2}.json"));
        write_json(&dir.join(&file), &record)?;
        check.files.push(file);
        let fine = record.refinement_table[1].max_gap;
        let ok = record.max_gap < 1e-2
            && fine <= 0.5 * record.max_gap
            && record.a1_violations == 0
            && record.extended_rel_gap < 0.02;
        pass &= ok;
        notes.push(format!(
            "s = {s}: gap {:.2e} -> {fine:.2e}, A_1 min {:.2e}, extended quotient gap {:.2e}",
            record.max_gap, record.a1_min_relative, record.extended_rel_gap
        ));
        check.metrics.insert(format!("max_gap_{s:.2}"), record.max_gap);
        check.metrics.insert(format!("refined_gap_{s:.2}"), fine);
        check.metrics.insert(format!("a1_min_relative_{s:.2}"), record.a1_min_relative);
        check.metrics.insert(format!("extended_rel_gap_{s:.2}"), record.extended_rel_gap);
        check.metrics.insert(format!("kappa_{s:.2}"), record.kappa);
    }
    let half = HalfSpaceGrid::standard(2, 0.5, 20.0).map_err(numerical)?;
    let kappa_half = calibrate_kappa(&half, &CALIBRATION_WIDTHS).map_err(numerical)?.kappa;
    let kappa_ok = (kappa_half - 1.0).abs() < 0.01;
    pass &= kappa_ok;
    notes.push(format!("kappa_1/2 = {kappa_half:.5}"));
    check.pass = pass;
    check.detail = notes.join("; ");
    Ok(check.metric("kappa_half", kappa_half))
}

fn decay(dir: &Path) -> Result<Check> {
    let params = planar(0.8, 1024, 160.0);
    let gs = solve(params)?;
    let report = decay_check(&gs, &tail_window_radii(gs.grid())).map_err(numerical)?;
    let file = PathBuf::from("decay.json");
    let record = DecayRecord {
        schema_version: SCHEMA_VERSION.into(),
        dims: 2,
        s: params.s,
        p: params.p,
        points: params.points,
        half_width: params.half_width,
        report: report.clone(),
    };
    write_json(&dir.join(&file), &record)?;
    Ok(Check::new(
        report.tail_flat && report.max_ratio.is_finite(),
        format!(
            "u r^(N+2s) varies by {:.1}% over [L/8, L/4] (< 25%), max {:.4}",
            100.0 * report.window_variation,
            report.max_ratio
        ),
    )
    .metric("window_variation", report.window_variation)
    .metric("max_ratio", report.max_ratio)
    .files(vec![file]))
}

/// Criteria 1 to 10 with their artifacts in `dir`.
pub fn run_battery(seed: u64, dir: &Path) -> Result<(Vec<CriterionResult>, Vec<PathBuf>)> {
    ensure_dir(dir)?;
    let mut files = Vec::new();
    let mut results = Vec::new();
    results.push(criterion(1, "Benjamin-Ono oracle", Some(30.0), &mut files, || benjamin_ono(dir)));
    results.push(criterion(2, "local oracles", Some(120.0), &mut files, || local_oracles(dir)));
    results.push(criterion(3, "multiplier inequalities", Some(10.0), &mut files, || inequalities(dir, seed)));

    let cfg = sweep_config(seed);
    let mut states = None;
    results.push(criterion(4, "nu_s continuity", Some(600.0), &mut files, || {
        let solved = sweep_ground_states(&cfg)?;
        let check = continuity(&solved);
        states = Some(solved);
        Ok(check)
    }));
    results.push(criterion(5, "nondegeneracy", Some(900.0), &mut files, || nondegeneracy(dir, seed)));
    let mut points = None;
    results.push(criterion(6, "radial gap K_r", None, &mut files, || {
        let solved = states.take().ok_or_else(|| HarnessError::Numerical("sweep did not complete".into()))?;
        let pts = sweep_gaps(solved, &cfg.eigen)?;
        let file = PathBuf::from("sweep.csv");
        write_sweep(&pts, &dir.join(&file))?;
        let check = radial_gaps(&pts).files(vec![file]);
        points = Some(pts);
        Ok(check)
    }));
    results.push(criterion(7, "self-pairing identity", None, &mut files, || {
        points.as_deref().map(self_pairing).ok_or_else(|| HarnessError::Numerical("sweep did not complete".into()))
    }));
    results.push(criterion(8, "branch and uniqueness", Some(1200.0), &mut files, || branch(dir)));
    results.push(criterion(9, "extension", None, &mut files, || extension(dir, seed)));
    results.push(criterion(10, "decay", None, &mut files, || decay(dir)));

    let summary = AcceptanceRecord {
        schema_version: SCHEMA_VERSION.into(),
        seed,
        criteria: results.iter().map(|r| r.record.clone()).collect(),
    };
    write_json(&dir.join(CRITERIA_FILE), &summary)?;
    files.push(PathBuf::from(CRITERIA_FILE));
    Ok((results, files))
}

fn status(result: &CriterionResult) -> TaskStatus {
    TaskStatus {
        name: format!("criterion {}: {}", result.record.id, result.record.title),
        status: if result.passed() { "ok" } else { "failed" }.into(),
        detail: match result.budget {
            Some(b) => format!("{} [budget {b:.0} s]", result.record.detail),
            None => result.record.detail.clone(),
        },
        seconds: result.seconds,
    }
}

/// Runs the battery in `dir`, reruns it in a scratch directory and
/// compares every artifact checksum. Prints one line per criterion when
/// `echo` is set.
pub fn run_acceptance(cfg: &AcceptConfig, dir: &Path, echo: bool) -> Result<AcceptanceOutcome> {
    ensure_dir(dir)?;
    let manifest = Manifest::new("accept", cfg.echo());
    let (mut results, files) = run_battery(cfg.seed, dir)?;
    if echo {
        for r in &results {
            println!("{}", r.line());
        }
    }
    let first = crate::emit::inventory(dir, &files)?;

    let start = Instant::now();
    let scratch = tempfile::tempdir().map_err(|e| HarnessError::io(std::env::temp_dir(), e))?;
    let (_, second_files) = run_battery(cfg.seed, scratch.path())?;
    let second = crate::emit::inventory(scratch.path(), &second_files)?;
    let a: BTreeMap<_, _> = first.iter().map(|o| (o.path.clone(), o.sha256.clone())).collect();
    let b: BTreeMap<_, _> = second.iter().map(|o| (o.path.clone(), o.sha256.clone())).collect();
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let detail = if differing.is_empty() {
        format!("{} artifacts identical across two runs", a.len())
    } else {
        format!("checksums differ for {}", differing.join(", "))
    };
    let determinism = CriterionResult {
        record: CriterionRecord {
            id: 11,
            title: "determinism".into(),
            pass: differing.is_empty() && !a.is_empty(),
            detail,
            metrics: BTreeMap::from([("artifacts".into(), a.len() as f64), ("differing".into(), differing.len() as f64)]),
        },
        seconds: start.elapsed().as_secs_f64(),
        budget: None,
    };
    if echo {
        println!("{}", determinism.line());
    }
    results.push(determinism);

    let record = AcceptanceRecord {
        schema_version: SCHEMA_VERSION.into(),
        seed: cfg.seed,
        criteria: results.iter().map(|r| r.record.clone()).collect(),
    };
    write_json(&dir.join(ACCEPTANCE_FILE), &record)?;
    let mut all_files = files;
    all_files.push(PathBuf::from(ACCEPTANCE_FILE));
    let mut manifest = manifest;
    manifest.tasks = results.iter().map(status).collect();
    let manifest = manifest.finish(dir, &all_files)?;
    Ok(AcceptanceOutcome { results, manifest })
}
