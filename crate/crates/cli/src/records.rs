//! Serialized record types. Every JSON file is one object carrying
//! `schema_version`; the matching schemas live in `schemas/`.

use std::collections::BTreeMap;

use fracsol_core::continuation::{BranchFailure, UniquenessReport};
use fracsol_core::ground_state::{DecayReport, GroundState};
use fracsol_core::inequalities::{InequalityReport, InequalityTally};
use fracsol_core::linearized::{SpectrumReport, Verdict};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateRecord {
    pub schema_version: String,
    #[serde(rename = "N")]
    pub dims: usize,
    pub s: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub nu: f64,
    pub residual: f64,
    pub iterations: usize,
    pub lp1_norm: f64,
    pub sobolev_norm_squared: f64,
    pub method: String,
    pub clipped_mass: f64,
    pub normalization: String,
    /// `[r, u(r)]` along the positive first axis.
    pub profile: Vec<[f64; 2]>,
}

impl From<&GroundState> for GroundStateRecord {
    fn from(gs: &GroundState) -> Self {
        let g = gs.grid();
        GroundStateRecord {
            schema_version: SCHEMA_VERSION.into(),
            dims: g.dims(),
            s: gs.problem.s,
            p: gs.problem.p,
            points: g.points(),
            half_width: g.half_width(),
            nu: gs.nu,
            residual: gs.residual,
            iterations: gs.iterations,
            lp1_norm: gs.lp1_norm,
            sobolev_norm_squared: gs.sobolev_norm_squared,
            method: format!("{:?}", gs.method),
            clipped_mass: gs.clipped_mass,
            normalization: "unit L^{p+1} norm; (-Δ)^s u + u = nu u^p".into(),
            profile: gs.profile().into_iter().map(|(r, u)| [r, u]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub schema_version: String,
    #[serde(rename = "N")]
    pub dims: usize,
    pub s: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub nu: f64,
    /// Keyed by `ℓ`.
    pub sector_eigs: BTreeMap<String, Vec<f64>>,
    pub sector_residuals: BTreeMap<String, Vec<f64>>,
    pub kernel_by_sector: BTreeMap<String, usize>,
    pub kernel_dim: usize,
    pub negative_radial: usize,
    #[serde(rename = "K_r")]
    pub k_r: f64,
    #[serde(rename = "K")]
    pub k_full: f64,
    pub self_pairing: f64,
    pub zero_tol: f64,
    pub zero_threshold: f64,
    pub radial_spectral_gap: f64,
    /// `NONDEGENERATE` or `DEGENERATE`.
    pub verdict: String,
    pub degenerate_sectors: Vec<usize>,
}

impl SpectrumRecord {
    pub fn new(report: &SpectrumReport, points: usize, half_width: f64) -> Self {
        let keyed = |m: &BTreeMap<usize, Vec<f64>>| m.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let (verdict, degenerate_sectors) = match &report.verdict {
            Verdict::Nondegenerate => ("NONDEGENERATE", Vec::new()),
            Verdict::Degenerate { sectors } => ("DEGENERATE", sectors.clone()),
        };
        SpectrumRecord {
            schema_version: SCHEMA_VERSION.into(),
            dims: report.dims,
            s: report.s,
            p: report.p,
            points,
            half_width,
            nu: report.nu,
            sector_eigs: keyed(&report.sector_eigs),
            sector_residuals: keyed(&report.sector_residuals),
            kernel_by_sector: report.kernel_by_sector.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            kernel_dim: report.kernel_dim,
            negative_radial: report.negative_radial,
            k_r: report.k_r,
            k_full: report.k_full,
            self_pairing: report.self_pairing,
            zero_tol: report.zero_tol,
            zero_threshold: report.zero_threshold,
            radial_spectral_gap: report.radial_spectral_gap,
            verdict: verdict.into(),
            degenerate_sectors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub level: usize,
    pub r_cells: usize,
    pub t_cells: usize,
    pub max_gap: f64,
    /// `max_gap` of the previous level over this one.
    pub reduction: Option<f64>,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRecord {
    pub schema_version: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub dims: usize,
    pub kappa: f64,
    pub kappa_closed_form: f64,
    pub kappa_spread: f64,
    /// Gaussian DtN gap on the coarsest grid, relative to the peak of the
    /// multiplier side.
    pub max_gap: f64,
    /// Weighted Dirichlet energy of the ground-state extension.
    pub energy: f64,
    pub refinement_table: Vec<RefinementRow>,
    pub extended_quotient: f64,
    pub nu: f64,
    pub extended_rel_gap: f64,
    pub a1_samples: u64,
    /// Samples with `A_1(g,g) < -1e-6` times its positive part.
    pub a1_violations: u64,
    /// Smallest `A_1(g,g)` over its positive part.
    pub a1_min_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub schema_version: String,
    pub samples: u64,
    pub seed: u64,
    pub total_violations: u64,
    pub extremal_equality_gap: f64,
    pub tallies: Vec<InequalityTally>,
}

impl From<&InequalityReport> for InequalityRecord {
    fn from(r: &InequalityReport) -> Self {
        InequalityRecord {
            schema_version: SCHEMA_VERSION.into(),
            samples: r.samples,
            seed: r.seed,
            total_violations: r.total_violations(),
            extremal_equality_gap: r.extremal_equality_gap,
            tallies: r.tallies.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessRecord {
    pub schema_version: String,
    pub tol: f64,
    pub r0: f64,
    pub r0_estimate: f64,
    pub smallest_s: Option<f64>,
    pub failure: Option<BranchFailure>,
    pub reports: Vec<UniquenessReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub schema_version: String,
    #[serde(rename = "N")]
    pub dims: usize,
    pub s: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub report: DecayReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRecord {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    pub schema_version: String,
    pub seed: u64,
    pub criteria: Vec<CriterionRecord>,
}
