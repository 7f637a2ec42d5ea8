//! Second variation of `J_s` at a ground state.
//!
//! `L = (-Δ)^s + 1 - pν u^{p-1}` is the `L²` representative of
//! `J_s''(u, ν)`: `J_s''[φ, ψ] = ⟨Lφ, ψ⟩`. Its `H^s` representative is
//! `A^{-1}L` with `A = 1 + |ξ|^{2s}`. The eigenproblems `Lφ = λφ` and
//! `Lφ = μAφ` have the same inertia and the same null space, so kernel
//! counts and signs agree between the two conventions; sector spectra are
//! reported for `L`, the coercivity constants for the pencil `(L, A)`.
//!
//! Angular sectors are realized with the grid symmetry group:
//! `ℓ = 0` is the group average, `ℓ = 1` the part odd under `x ↦ -x`, and
//! `ℓ = 2` the even part with the group average removed. The odd part holds
//! the translation modes `∂_i u`; for `N = 1` only `ℓ ∈ {0, 1}` exist.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::ground_state::GroundState;
use crate::krylov::{self, LanczosOptions, SolveOptions};
use crate::spectral::Multiplier;
use crate::symmetry::{even_part, odd_part, symmetrize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectorSpec {
    ell: usize,
}

impl SectorSpec {
    pub fn new(ell: usize, dims: usize) -> Result<Self> {
        if ell > 2 {
            return Err(Error::invalid(format!("sector ell = {ell} out of range (0, 1, 2)")));
        }
        if dims == 1 && ell == 2 {
            return Err(Error::invalid("sector ell = 2 does not exist for N = 1"));
        }
        Ok(SectorSpec { ell })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// The sectors available in dimension `dims`.
    pub fn all(dims: usize) -> Vec<SectorSpec> {
        let top = if dims == 1 { 1 } else { 2 };
        (0..=top).map(|ell| SectorSpec { ell }).collect()
    }
}

/// Orthogonal projection onto a sector.
pub fn sector_project(phi: &RealField, sector: SectorSpec) -> Result<RealField> {
    SectorSpec::new(sector.ell, phi.grid().dims())?;
    Ok(project(phi, sector))
}

fn project(phi: &RealField, sector: SectorSpec) -> RealField {
    match sector.ell {
        0 => symmetrize(phi),
        1 => odd_part(phi),
        _ => {
            let even = even_part(phi);
            even.sub(&symmetrize(&even))
        }
    }
}

/// `pν u^{p-1}` together with the metric of the ground state.
struct Operator<'a> {
    gs: &'a GroundState,
    metric: Multiplier,
    potential: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(gs: &'a GroundState) -> Self {
        let (p, nu) = (gs.problem.p, gs.nu);
        Operator {
            gs,
            metric: gs.problem.metric(),
            potential: gs.u.values().iter().map(|&v| p * nu * v.abs().powf(p - 1.0)).collect(),
        }
    }

    fn field(&self, v: &[f64]) -> RealField {
        RealField::new(*self.gs.grid(), v.to_vec()).unwrap_or_else(|_| RealField::zeros(*self.gs.grid()))
    }

    fn apply(&self, phi: &RealField) -> RealField {
        let mut out = self.metric.apply(phi);
        for ((o, &w), &f) in out.values_mut().iter_mut().zip(&self.potential).zip(phi.values()) {
            *o -= w * f;
        }
        out
    }
}

/// `Lφ = (-Δ)^s φ + φ - pν u^{p-1} φ`.
pub fn apply_linearized(gs: &GroundState, phi: &RealField) -> Result<RealField> {
    gs.grid().check_same(phi.grid())?;
    Ok(Operator::new(gs).apply(phi))
}

/// `J_s''[φ, ψ] = ⟨φ, ψ⟩_s - pν ∫ u^{p-1} φ ψ`.
pub fn quadratic_form(gs: &GroundState, phi: &RealField, psi: &RealField) -> Result<f64> {
    gs.grid().check_same(phi.grid())?;
    gs.grid().check_same(psi.grid())?;
    let op = Operator::new(gs);
    let mass: f64 = op
        .potential
        .iter()
        .zip(phi.values())
        .zip(psi.values())
        .map(|((w, a), b)| w * a * b)
        .sum();
    Ok(op.metric.pairing(phi, psi) - gs.grid().cell_volume() * mass)
}

/// `φ - (⟨φ, u⟩_s / ‖u‖_s²) u`.
pub fn s_orthogonal_part(gs: &GroundState, phi: &RealField) -> Result<RealField> {
    gs.grid().check_same(phi.grid())?;
    let a = gs.problem.metric();
    let c = a.pairing(phi, &gs.u) / a.pairing(&gs.u, &gs.u);
    let mut out = phi.clone();
    out.axpy(-c, &gs.u);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub seed: u64,
    pub lanczos_steps: usize,
    /// Relative Ritz residual for the shift-inverted operator.
    pub tol: f64,
    /// Relative residual of the inner solves.
    pub inner_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            seed: 2024,
            lanczos_steps: 300,
            tol: 1e-11,
            inner_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub sector: SectorSpec,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `‖Lφ - λφ‖ / ‖φ‖` per eigenpair.
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<RealField>,
}

fn random_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// The `count` smallest eigenvalues of `L` on a sector.
///
/// Shift-invert Lanczos: with `σ` below the spectrum, `(L - σ)^{-1}` is
/// applied by conjugate gradients preconditioned with `(A - σ)^{-1}`, and
/// one eigenpair is locked per Lanczos run. Each eigenvalue is the Rayleigh
/// quotient of `L` at the converged Ritz vector.
pub fn sector_spectrum(gs: &GroundState, sector: SectorSpec, count: usize, opts: &EigenOptions) -> Result<SectorSpectrum> {
    SectorSpec::new(sector.ell, gs.problem.dims())?;
    if !(1..=10).contains(&count) {
        return Err(Error::invalid(format!("eigenvalue count must be in 1..=10 (got {count})")));
    }
    let op = Operator::new(gs);
    let vmax = op.potential.iter().cloned().fold(0.0, f64::max);
    let sigma = -vmax;
    let shifted_metric = op.metric.map(|m| 1.0 / (m - sigma));
    let n = gs.grid().len();
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut pairs: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for k in 0..count {
        let project_locked = |v: &[f64], locked: &[Vec<f64>]| -> Vec<f64> {
            let mut w = project(&op.field(v), sector).into_values();
            krylov::orthogonalize(&mut w, locked);
            w
        };
        let shift_invert = |v: &[f64]| -> Vec<f64> {
            let b = project_locked(v, &locked);
            let solve = krylov::conjugate_gradient(
                |x: &[f64]| {
                    let f = op.field(x);
                    let mut y = op.apply(&f).into_values();
                    krylov::axpy(&mut y, -sigma, x);
                    y
                },
                |r: &[f64]| project_locked(&shifted_metric.apply(&op.field(r)).into_values(), &locked),
                &b,
                SolveOptions { rel_tol: opts.inner_tol, max_iter: 2000 },
            );
            match solve {
                Ok(sol) => project_locked(&sol.x, &locked),
                Err(_) => vec![f64::NAN; v.len()],
            }
        };
        let start = project_locked(&random_start(n, opts.seed.wrapping_add(1000 * sector.ell as u64 + k as u64)), &locked);
        if krylov::norm(&start) == 0.0 {
            break;
        }
        let ritz = krylov::lanczos_extreme(
            shift_invert,
            &start,
            &locked,
            true,
            LanczosOptions { max_steps: opts.lanczos_steps, tol: opts.tol },
        )?;
        if ritz.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Breakdown {
                what: "shift-invert Lanczos",
                detail: format!("inner solve failed in sector {}", sector.ell),
            });
        }
        let x = op.field(&ritz.vector);
        let lx = op.apply(&x);
        let xx = krylov::dot(x.values(), x.values());
        let lambda = krylov::dot(lx.values(), x.values()) / xx;
        let mut r = lx.into_values();
        krylov::axpy(&mut r, -lambda, x.values());
        let residual = krylov::norm(&r) / xx.sqrt();
        locked.push(ritz.vector.clone());
        pairs.push((lambda, residual, ritz.vector));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let grid = *gs.grid();
    Ok(SectorSpectrum {
        sector,
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
        eigenvectors: pairs
            .into_iter()
            .map(|p| RealField::new(grid, p.2).unwrap_or_else(|_| RealField::zeros(grid)))
            .collect(),
    })
}

/// Smallest values of `J_s''[φ,φ] / ‖φ‖_s²` on a sector, with `excluded`
/// directions removed `H^s`-orthogonally. Computed as the smallest
/// eigenvalues of `A^{-1/2} L A^{-1/2}` by plain Lanczos.
const OFF_SECTOR_SHIFT: f64 = 2.0;

/// Smallest pencil eigenvalues on `φ ⊥_s excluded`, after dropping the
/// `skip` lowest pencil eigenpairs.
fn pencil_minima(
    gs: &GroundState,
    sector: SectorSpec,
    excluded: &[RealField],
    skip: usize,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<f64>> {
    let op = Operator::new(gs);
    let half = op.metric.map(f64::sqrt);
    let inv_half = op.metric.map(|m| 1.0 / m.sqrt());
    let mut locked: Vec<Vec<f64>> = Vec::new();
    for e in excluded {
        // φ ⊥_s e  ⇔  A^{1/2}φ ⊥ A^{1/2}e.
        let mut v = half.apply(&project(e, sector)).into_values();
        krylov::orthogonalize(&mut v, &locked);
        let nv = krylov::norm(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            locked.push(v);
        }
    }
    let n = gs.grid().len();
    let mut values = Vec::new();
    for k in 0..skip + count {
        let apply = |v: &[f64]| -> Vec<f64> {
            let mut free = v.to_vec();
            krylov::orthogonalize(&mut free, &locked);
            let field = op.field(&free);
            let y = project(&field, sector);
            let x = inv_half.apply(&y);
            let mut out = project(&inv_half.apply(&op.apply(&x)), sector).into_values();
            krylov::orthogonalize(&mut out, &locked);
            // Locked and off-sector directions sit above the pencil spectrum,
            // which is bounded by 1.
            for ((o, &a), &y) in out.iter_mut().zip(v).zip(y.values()) {
                *o += OFF_SECTOR_SHIFT * (a - y);
            }
            out
        };
        let mut start = project(&op.field(&random_start(n, opts.seed.wrapping_add(77 + k as u64))), sector).into_values();
        krylov::orthogonalize(&mut start, &locked);
        if krylov::norm(&start) == 0.0 {
            break;
        }
        let ritz = krylov::lanczos_extreme(
            apply,
            &start,
            &locked,
            false,
            LanczosOptions { max_steps: opts.lanczos_steps, tol: opts.tol },
        )?;
        if k >= skip {
            values.push(ritz.value);
        }
        locked.push(ritz.vector);
    }
    Ok(values)
}

/// `K_r = inf { J_s''[φ,φ] / ‖φ‖_s² : φ in the ℓ = 0 sector, φ ⊥_s u }`.
pub fn radial_gap(gs: &GroundState, opts: &EigenOptions) -> Result<f64> {
    let radial = SectorSpec { ell: 0 };
    pencil_minima(gs, radial, std::slice::from_ref(&gs.u), 0, 1, opts)?
        .first()
        .copied()
        .ok_or_else(|| Error::invalid("radial sector is empty"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Nondegenerate,
    /// Zero-mode count differs from the translation count in these sectors.
    Degenerate { sectors: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dims: usize,
    pub s: f64,
    pub p: f64,
    pub nu: f64,
    /// Ascending smallest eigenvalues of `L` per sector.
    pub sector_eigs: BTreeMap<usize, Vec<f64>>,
    pub sector_residuals: BTreeMap<usize, Vec<f64>>,
    /// Eigenvalues with `|λ| < zero_tol · gap`, per sector.
    pub kernel_by_sector: BTreeMap<usize, usize>,
    pub kernel_dim: usize,
    pub negative_radial: usize,
    /// `λ_1 - λ_0` of the `ℓ = 0` sector.
    pub radial_spectral_gap: f64,
    /// Relative threshold as supplied.
    pub zero_tol: f64,
    /// `zero_tol · radial_spectral_gap`.
    pub zero_threshold: f64,
    #[serde(rename = "K_r")]
    pub k_r: f64,
    /// `K`: the pencil minimum over all sectors with `u` and the kernel
    /// removed.
    #[serde(rename = "K")]
    pub k_full: f64,
    pub self_pairing: f64,
    pub verdict: Verdict,
}

impl SpectrumReport {
    pub fn is_nondegenerate(&self) -> bool {
        self.verdict == Verdict::Nondegenerate
    }
}

/// Sector spectra, kernel count, `K_r`, `K` and `J_s''[u,u]`.
///
/// An eigenvalue counts as zero when `|λ| < zero_tol · (λ_1 - λ_0)` with
/// `λ_0 < λ_1` the two lowest `ℓ = 0` eigenvalues; `zero_tol = 0` counts
/// nothing. The verdict is nondegenerate when the zeros are exactly the
/// `N` translation modes in `ℓ = 1`.
pub fn nondegeneracy_report(gs: &GroundState, zero_tol: f64, opts: &EigenOptions) -> Result<SpectrumReport> {
    if !(zero_tol >= 0.0 && zero_tol.is_finite()) {
        return Err(Error::invalid("zero_tol must be a finite non-negative number"));
    }
    let dims = gs.problem.dims();
    let mut sector_eigs = BTreeMap::new();
    let mut sector_residuals = BTreeMap::new();
    let mut spectra = Vec::new();
    for sector in SectorSpec::all(dims) {
        let count = match sector.ell {
            0 => 3,
            1 => dims + 2,
            _ => 2,
        };
        spectra.push(sector_spectrum(gs, sector, count, opts)?);
    }
    let radial = &spectra[0].eigenvalues;
    let gap = radial[1] - radial[0];
    let threshold = zero_tol * gap;
    let mut kernel_by_sector = BTreeMap::new();
    let mut degenerate = Vec::new();
    for spec in &spectra {
        let ell = spec.sector.ell;
        let zeros: Vec<usize> = (0..spec.eigenvalues.len()).filter(|&i| spec.eigenvalues[i].abs() < threshold).collect();
        let expected = if ell == 1 { dims } else { 0 };
        if zeros.len() != expected {
            degenerate.push(ell);
        }
        kernel_by_sector.insert(ell, zeros.len());
        sector_eigs.insert(ell, spec.eigenvalues.clone());
        sector_residuals.insert(ell, spec.residuals.clone());
    }
    let k_r = radial_gap(gs, opts)?;
    let mut k_full = k_r;
    for spec in &spectra[1..] {
        // Kernel modes are dropped as pencil eigenpairs so that the next
        // value does not inherit the eigenvector error of `L`.
        let skip = kernel_by_sector[&spec.sector.ell];
        let minima = pencil_minima(gs, spec.sector, &[], skip, 1, opts)?;
        if let Some(&m) = minima.first() {
            k_full = k_full.min(m);
        }
    }
    let self_pairing = quadratic_form(gs, &gs.u, &gs.u)?;
    Ok(SpectrumReport {
        dims,
        s: gs.problem.s,
        p: gs.problem.p,
        nu: gs.nu,
        negative_radial: radial.iter().filter(|&&l| l < -threshold).count(),
        kernel_dim: kernel_by_sector.values().sum(),
        kernel_by_sector,
        sector_eigs,
        sector_residuals,
        radial_spectral_gap: gap,
        zero_tol,
        zero_threshold: threshold,
        k_r,
        k_full,
        self_pairing,
        verdict: if degenerate.is_empty() {
            Verdict::Nondegenerate
        } else {
            Verdict::Degenerate { sectors: degenerate }
        },
    })
}
