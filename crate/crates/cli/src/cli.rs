//! Command-line definitions and their resolution into validated
//! configurations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fracsol_core::continuation::BranchOptions;
use fracsol_core::ground_state::SolverOptions;
use fracsol_core::linearized::EigenOptions;

use crate::config::{
    check_positive, check_zero_tol, output_dir, s_grid, AcceptConfig, BranchConfig, ConfigFile, ExtendConfig,
    IneqConfig, ProblemParams, SolveConfig, SpectrumConfig, SweepConfig,
};
use crate::error::{usage, HarnessError, Result};

#[derive(Debug, Parser)]
#[command(name = "fracsol", version, about = "Ground states of (-Δ)^s u + u = ν u^p and their verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for one ground state.
    Solve(SolveArgs),
    /// ν_s, K_r and the self-pairing over an s-grid.
    Sweep(SweepArgs),
    /// Sector spectra and the nondegeneracy verdict.
    Spectrum(SpectrumArgs),
    /// Continuation branch from s = 1 with uniqueness checks.
    Branch(BranchArgs),
    /// Extension diagnostics: DtN gap, κ_s, A_1, extended quotient.
    #[command(name = "extend-check")]
    ExtendCheck(ExtendArgs),
    /// Randomized elementary inequality suite.
    #[command(name = "ineq-suite")]
    IneqSuite(IneqArgs),
    /// Full acceptance battery.
    Accept(AcceptArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides OUTPUT_DIR and the config file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-width L of the box [-L, L)^N.
    #[arg(long = "box")]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub init_width: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub s_from: Option<f64>,
    #[arg(long)]
    pub s_to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Relative zero threshold: |λ| < zero_tol · (λ_1 - λ_0) of ℓ = 0.
    #[arg(long)]
    pub zero_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lanczos_steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BranchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub s_to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Ball radius factor: ‖ω‖_s ≤ r0 · max(1 - s, |ν_1 - ν_s|).
    #[arg(long)]
    pub r0: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub uniqueness_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtendArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Radial and vertical extent of the half-space grid.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Number of grids in the refinement table.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Random fields for the A_1 check.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct IneqArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct AcceptArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Defaults of the problem block for each command.
#[derive(Debug, Clone, Copy)]
struct ProblemDefaults {
    dims: usize,
    s: f64,
    p: f64,
    points: usize,
    half_width: f64,
}

/// The widest calibration Gaussian must vanish at the far edge.
const MIN_EXTENT: f64 = 12.0;

const PLANAR: ProblemDefaults = ProblemDefaults { dims: 2, s: 0.9, p: 2.0, points: 128, half_width: 20.0 };
const DEFAULT_INIT_WIDTH: f64 = 1.5;
const DEFAULT_ZERO_TOL: f64 = 1e-4;

fn resolve_problem(
    args: &ProblemArgs,
    file: &mut ConfigFile,
    d: ProblemDefaults,
) -> Result<(ProblemParams, f64, SolverOptions)> {
    let params = ProblemParams {
        dims: file.pick(args.dim, "dim", d.dims)?,
        s: file.pick(args.s, "s", d.s)?,
        p: file.pick(args.p, "p", d.p)?,
        points: file.pick(args.points, "points", d.points)?,
        half_width: file.pick(args.half_width, "box", d.half_width)?,
    };
    let init_width = file.pick(args.init_width, "init_width", DEFAULT_INIT_WIDTH)?;
    check_positive("init_width", init_width)?;
    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        residual_tol: file.pick(args.residual_tol, "residual_tol", defaults.residual_tol)?,
        max_iter: file.pick(args.max_iter, "max_iter", defaults.max_iter)?,
        ..defaults
    };
    check_positive("residual_tol", solver.residual_tol)?;
    if solver.max_iter == 0 {
        return Err(HarnessError::Usage("max_iter must be at least 1".into()));
    }
    Ok((params, init_width, solver))
}

/// A validated command with its output directory.
#[derive(Debug, Clone)]
pub enum Resolved {
    Solve(SolveConfig),
    Sweep(SweepConfig),
    Spectrum(SpectrumConfig),
    Branch(BranchConfig),
    ExtendCheck(ExtendConfig),
    IneqSuite(IneqConfig),
    Accept(AcceptConfig),
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Resolved::Solve(_) => "solve",
            Resolved::Sweep(_) => "sweep",
            Resolved::Spectrum(_) => "spectrum",
            Resolved::Branch(_) => "branch",
            Resolved::ExtendCheck(_) => "extend-check",
            Resolved::IneqSuite(_) => "ineq-suite",
            Resolved::Accept(_) => "accept",
        }
    }
}

/// Merges flags, environment and config file and validates everything
/// before any computation starts.
pub fn resolve(command: &Command) -> Result<(Resolved, PathBuf)> {
    let common = match command {
        Command::Solve(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Spectrum(a) => &a.common,
        Command::Branch(a) => &a.common,
        Command::ExtendCheck(a) => &a.common,
        Command::IneqSuite(a) => &a.common,
        Command::Accept(a) => &a.common,
    };
    let mut file = ConfigFile::from_option(common.config.as_deref())?;
    let out = output_dir(common.out.clone(), &mut file)?;
    let resolved = match command {
        Command::Solve(a) => {
            let (params, init_width, solver) = resolve_problem(&a.problem, &mut file, PLANAR)?;
            Resolved::Solve(SolveConfig { problem: params.spec()?, params, init_width, solver })
        }
        Command::Sweep(a) => {
            let (params, init_width, solver) = resolve_problem(&a.problem, &mut file, PLANAR)?;
            let from = file.pick(a.s_from, "s_from", 0.7)?;
            let to = file.pick(a.s_to, "s_to", 1.0)?;
            let steps = file.pick(a.steps, "steps", 7)?;
            let s_values = s_grid(from, to, steps)?;
            for &s in &s_values {
                params.at_order(s).spec()?;
            }
            let zero_tol = file.pick(a.zero_tol, "zero_tol", DEFAULT_ZERO_TOL)?;
            check_zero_tol(zero_tol)?;
            let eigen = EigenOptions { seed: file.pick(a.seed, "seed", EigenOptions::default().seed)?, ..Default::default() };
            Resolved::Sweep(SweepConfig { params, s_values, zero_tol, init_width, solver, eigen })
        }
        Command::Spectrum(a) => {
            let (params, init_width, solver) = resolve_problem(&a.problem, &mut file, PLANAR)?;
            let zero_tol = file.pick(a.zero_tol, "zero_tol", DEFAULT_ZERO_TOL)?;
            check_zero_tol(zero_tol)?;
            let defaults = EigenOptions::default();
            let eigen = EigenOptions {
                seed: file.pick(a.seed, "seed", defaults.seed)?,
                lanczos_steps: file.pick(a.lanczos_steps, "lanczos_steps", defaults.lanczos_steps)?,
                ..defaults
            };
            if eigen.lanczos_steps < 2 {
                return Err(HarnessError::Usage("lanczos_steps must be at least 2".into()));
            }
            Resolved::Spectrum(SpectrumConfig { problem: params.spec()?, params, zero_tol, init_width, solver, eigen })
        }
        Command::Branch(a) => {
            let (params, init_width, solver) = resolve_problem(&a.problem, &mut file, PLANAR)?;
            let to = file.pick(a.s_to, "s_to", 0.9)?;
            let steps = file.pick(a.steps, "steps", 11)?;
            let s_values = s_grid(1.0, to, steps)?;
            if steps > 1 && !(to < 1.0) {
                return Err(HarnessError::Usage(format!("s_to must lie below 1 (got {to})")));
            }
            for &s in &s_values {
                params.at_order(s).spec()?;
            }
            let defaults = BranchOptions::default();
            let options = BranchOptions {
                r0: file.pick(a.r0, "r0", defaults.r0)?,
                tol: file.pick(a.tol, "tol", defaults.tol)?,
                ..defaults
            };
            check_positive("r0", options.r0)?;
            check_positive("tol", options.tol)?;
            let uniqueness_tol = file.pick(a.uniqueness_tol, "uniqueness_tol", 1e-4)?;
            check_positive("uniqueness_tol", uniqueness_tol)?;
            Resolved::Branch(BranchConfig { params, s_values, options, uniqueness_tol, init_width, solver })
        }
        Command::ExtendCheck(a) => {
            let defaults = ProblemDefaults { s: 0.5, points: 512, ..PLANAR };
            let (params, init_width, solver) = resolve_problem(&a.problem, &mut file, defaults)?;
            params.spec()?;
            if !(params.s < 1.0) {
                return Err(HarnessError::Usage(format!("the extension needs s in (0,1) (got {})", params.s)));
            }
            let extent = file.pick(a.extent, "extent", 20.0)?;
            check_positive("extent", extent)?;
            if extent < MIN_EXTENT {
                return Err(HarnessError::Usage(format!("extent must be at least {MIN_EXTENT} (got {extent})")));
            }
            if extent > params.half_width {
                return Err(HarnessError::Usage(format!("extent {extent} exceeds the box half-width {}", params.half_width)));
            }
            fracsol_core::extension::HalfSpaceGrid::standard(params.dims, params.s, extent).map_err(usage)?;
            let levels = file.pick(a.levels, "levels", 2)?;
            if !(1..=3).contains(&levels) {
                return Err(HarnessError::Usage(format!("levels must be 1, 2 or 3 (got {levels})")));
            }
            let samples = file.pick(a.samples, "samples", 100)?;
            let seed = file.pick(a.seed, "seed", 7)?;
            Resolved::ExtendCheck(ExtendConfig { params, extent, levels, samples, seed, init_width, solver })
        }
        Command::IneqSuite(a) => {
            let samples = file.pick(a.samples, "samples", 1_000_000)?;
            if samples == 0 {
                return Err(HarnessError::Usage("samples must be at least 1".into()));
            }
            Resolved::IneqSuite(IneqConfig { samples, seed: file.pick(a.seed, "seed", 1)? })
        }
        Command::Accept(a) => Resolved::Accept(AcceptConfig { seed: file.pick(a.seed, "seed", 2024)? }),
    };
    file.finish()?;
    Ok((resolved, out))
}
