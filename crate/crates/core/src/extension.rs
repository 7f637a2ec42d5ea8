//! The weighted-harmonic extension of radial data to the half space.
//!
//! For data `u(|x|)` the extension `U(t, r)` solves
//! `∂_t(t^{1-2s} U_t) + t^{1-2s}(U_rr + (N-1)/r U_r - λ/r² U) = 0` with
//! `λ = 0` in the radial sector and `λ = N - 1` in the dipole sector
//! (`g(t, r) x_i/|x|`), and `-lim t^{1-2s} U_t = κ_s (-Δ)^s u`.
//!
//! The discretization is a finite-volume scheme on nodes `t_0 = 0 < t_1 <
//! … < t_{m+1} = T` (geometric toward `t = 0`) and `r_j = j h`, `j = 0..J`.
//! Edge conductances in `t` are exact harmonic means of the weight,
//! `1 / ∫_{t_i}^{t_{i+1}} τ^{2s-1} dτ = 2s / (t_{i+1}^{2s} - t_i^{2s})`, and
//! dual-cell weights are exact integrals of `t^{1-2s}` and `r^{N-1}`. The
//! `t` dual cells end where the discrete flux of `t²` is exact, which keeps
//! the near-boundary expansion `u + b t^{2s} + c t²` intact. The
//! resulting matrix is `K_t ⊗ W_r + W_t ⊗ K_r`; it is solved by
//! diagonalizing the `(K_t, W_t)` pencil and running a tridiagonal solve in
//! `r` per mode, followed by iterative refinement against the assembled
//! operator.

use libm::tgamma;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::ground_state::GroundState;
use crate::oracle::{gaussian_frac_laplacian, sphere_area};
use crate::spectral::{frac_laplacian, spectral_derivative, TrigInterpolant};

/// `2^{1-2s} Γ(1-s) / Γ(s)`; reference value only.
pub fn kappa_closed_form(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * tgamma(1.0 - s) / tgamma(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// `λ = 0`, Neumann on the axis.
    Radial,
    /// `λ = N - 1`, Dirichlet on the axis.
    Dipole,
}

/// Condition at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FarBoundary {
    Dirichlet,
    /// Zero flux; with `N = 1` this is the periodic slab for cosine data.
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceGrid {
    dims: usize,
    s: f64,
    r: Vec<f64>,
    t: Vec<f64>,
    ratio: f64,
    far: FarBoundary,
}

/// Default radial spacing.
pub const DEFAULT_SPACING: f64 = 0.05;
/// Default geometric ratio of consecutive `t` nodes.
pub const DEFAULT_RATIO: f64 = 0.85;
/// The first `t` node lies below this.
pub const DEFAULT_T_FIRST: f64 = 1e-4;

impl HalfSpaceGrid {
    /// `r_j = j R / r_cells`; `t_{m+1} = T`, `t_i = T q^{m+1-i}` with the
    /// smallest `m` such that `t_1 < t_first`.
    pub fn new(
        dims: usize,
        s: f64,
        r_max: f64,
        r_cells: usize,
        t_max: f64,
        ratio: f64,
        t_first: f64,
        far: FarBoundary,
    ) -> Result<Self> {
        if !(1..=3).contains(&dims) {
            return Err(Error::invalid(format!("dims must be 1, 2 or 3 (got {dims})")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid(format!("the extension needs s in (0,1) (got {s})")));
        }
        if !(r_max > 0.0 && t_max > 0.0 && r_max.is_finite() && t_max.is_finite()) {
            return Err(Error::invalid("extents must be positive and finite"));
        }
        if r_cells < 4 {
            return Err(Error::invalid("at least 4 radial cells are needed"));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid(format!("grading ratio must lie in (0,1) (got {ratio})")));
        }
        if !(t_first > 0.0 && t_first < t_max) {
            return Err(Error::invalid("first t node must lie in (0, T)"));
        }
        let m = ((t_first / t_max).ln() / ratio.ln()).floor() as i32 + 1;
        let mut t = vec![0.0];
        t.extend((0..=m).rev().map(|k| t_max * ratio.powi(k)));
        let h = r_max / r_cells as f64;
        let r = (0..=r_cells).map(|j| j as f64 * h).collect();
        Ok(HalfSpaceGrid { dims, s, r, t, ratio, far })
    }

    /// `R = T = extent`, spacing 0.05, ratio 0.85, `t_1 < 1e-4`.
    pub fn standard(dims: usize, s: f64, extent: f64) -> Result<Self> {
        let cells = (extent / DEFAULT_SPACING).round().max(4.0) as usize;
        Self::new(dims, s, extent, cells, extent, DEFAULT_RATIO, DEFAULT_T_FIRST, FarBoundary::Dirichlet)
    }

    /// Half the radial spacing and the square root of the grading ratio.
    pub fn refined(&self) -> Result<Self> {
        Self::new(
            self.dims,
            self.s,
            self.r_max(),
            2 * self.r_cells(),
            self.t_max(),
            self.ratio.sqrt(),
            self.t[1] * 1.000_001,
            self.far,
        )
    }

    pub fn with_far_boundary(mut self, far: FarBoundary) -> Self {
        self.far = far;
        self
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn far(&self) -> FarBoundary {
        self.far
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap_or(&0.0)
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    pub fn r_cells(&self) -> usize {
        self.r.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.r[1]
    }

    /// `τ^{2-2s}` for the dual-cell boundary `τ` inside the edge `(i, i+1)`.
    ///
    /// `τ` is where the exact flux of the profile `t²` equals its
    /// harmonic-mean discrete flux, so that both `t^{2s}` and `t²` are
    /// reproduced exactly by the scheme.
    fn dual_boundary_pow(&self, i: usize) -> f64 {
        let s = self.s;
        let (lo, hi) = (self.t[i], self.t[i + 1]);
        s * (hi * hi - lo * lo) / (hi.powf(2.0 * s) - lo.powf(2.0 * s))
    }

    /// `∫ t^{1-2s}` over the dual cell of row `i`.
    fn t_weight(&self, i: usize) -> f64 {
        let q = 2.0 - 2.0 * self.s;
        let last = self.t.len() - 1;
        let lo = if i == 0 { 0.0 } else { self.dual_boundary_pow(i - 1) };
        let hi = if i == last { self.t[last].powf(q) } else { self.dual_boundary_pow(i) };
        (hi - lo) / q
    }

    /// Harmonic-mean conductance of the edge `(i, i+1)`.
    fn t_conductance(&self, i: usize) -> f64 {
        let two_s = 2.0 * self.s;
        two_s / (self.t[i + 1].powf(two_s) - self.t[i].powf(two_s))
    }

    fn r_bounds(&self, j: usize) -> (f64, f64) {
        let h = self.spacing();
        ((self.r[j] - 0.5 * h).max(0.0), (self.r[j] + 0.5 * h).min(self.r_max()))
    }

    /// `∫ r^{N-1}` over the dual cell of column `j`.
    fn r_weight(&self, j: usize) -> f64 {
        let n = self.dims as f64;
        let (lo, hi) = self.r_bounds(j);
        (hi.powf(n) - lo.powf(n)) / n
    }

    /// `r_{j+1/2}^{N-1} / h`.
    fn r_conductance(&self, j: usize) -> f64 {
        let mid = 0.5 * (self.r[j] + self.r[j + 1]);
        mid.powi(self.dims as i32 - 1) / self.spacing()
    }

    /// `λ ∫ r^{N-3}` over the dual cell of column `j`.
    fn r_reaction(&self, j: usize, sector: Sector) -> f64 {
        if sector == Sector::Radial || self.dims == 1 || j == 0 {
            return 0.0;
        }
        let lambda = (self.dims - 1) as f64;
        let (lo, hi) = self.r_bounds(j);
        match self.dims {
            2 => lambda * (hi / lo).ln(),
            _ => lambda * (hi - lo),
        }
    }

    /// Columns carrying unknowns.
    fn columns(&self, sector: Sector) -> (usize, usize) {
        let first = if sector == Sector::Dipole { 1 } else { 0 };
        let last = match self.far {
            FarBoundary::Dirichlet => self.r_cells() - 1,
            FarBoundary::Neumann => self.r_cells(),
        };
        (first, last)
    }

    fn column_is_pinned(&self, j: usize, sector: Sector) -> bool {
        let (first, last) = self.columns(sector);
        j < first || j > last
    }
}

/// Values `U(t_i, r_j)` stored row by row, `t_0 = 0` first.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub grid: HalfSpaceGrid,
    pub sector: Sector,
    pub values: Vec<f64>,
    pub refinements: usize,
    pub rel_residual: f64,
}

impl ExtensionField {
    /// Wraps arbitrary values, e.g. a competitor with a prescribed trace.
    pub fn from_values(grid: HalfSpaceGrid, sector: Sector, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.t.len() * grid.r.len() {
            return Err(Error::invalid("value count does not match the half-space grid"));
        }
        Ok(ExtensionField { grid, sector, values, refinements: 0, rel_residual: 0.0 })
    }

    pub fn cols(&self) -> usize {
        self.grid.r.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn trace(&self) -> &[f64] {
        self.row(0)
    }

    /// Discrete `∫∫ (U_t² + U_r² + λ U²/r²) t^{1-2s} r^{N-1} dt dr`.
    pub fn energy(&self) -> f64 {
        let g = &self.grid;
        let (rows, cols) = (g.t.len(), g.r.len());
        let mut e = 0.0;
        for i in 0..rows {
            let wt = g.t_weight(i);
            for j in 0..cols {
                let u = self.at(i, j);
                if i + 1 < rows {
                    let d = self.at(i + 1, j) - u;
                    e += g.t_conductance(i) * g.r_weight(j) * d * d;
                }
                if j + 1 < cols {
                    let d = self.at(i, j + 1) - u;
                    e += wt * g.r_conductance(j) * d * d;
                }
                e += wt * g.r_reaction(j, self.sector) * u * u;
            }
        }
        e
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], work: &mut Vec<f64>) {
    let n = diag.len();
    work.clear();
    work.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for k in 1..n {
        work[k] = upper[k - 1] / beta;
        beta = diag[k] - lower[k - 1] * work[k];
        rhs[k] = (rhs[k] - lower[k - 1] * rhs[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= work[k + 1] * rhs[k + 1];
    }
}

/// The assembled operator on the interior unknowns and its fast inverse.
struct Solver {
    first: usize,
    nr: usize,
    m: usize,
    wr: Vec<f64>,
    /// Conductances to the left and right neighbours and the reaction term.
    kr_left: Vec<f64>,
    kr_right: Vec<f64>,
    kr_react: Vec<f64>,
    /// `t` conductances of the edges `(i, i+1)`, `i = 0..=m`.
    kt: Vec<f64>,
    wt: Vec<f64>,
    /// `W_t^{-1/2} Q`, column per mode.
    modes: DMatrix<f64>,
    mu: Vec<f64>,
}

impl Solver {
    fn new(grid: &HalfSpaceGrid, sector: Sector) -> Self {
        let (first, last) = grid.columns(sector);
        let nr = last + 1 - first;
        let m = grid.t.len() - 2;
        let cols = grid.r.len();
        let wr: Vec<f64> = (first..=last).map(|j| grid.r_weight(j)).collect();
        let mut kr_left = vec![0.0; nr];
        let mut kr_right = vec![0.0; nr];
        let mut kr_react = vec![0.0; nr];
        for (k, j) in (first..=last).enumerate() {
            if j > 0 {
                kr_left[k] = grid.r_conductance(j - 1);
            }
            if j + 1 < cols {
                kr_right[k] = grid.r_conductance(j);
            }
            kr_react[k] = grid.r_reaction(j, sector);
        }
        let wt: Vec<f64> = (1..=m).map(|i| grid.t_weight(i)).collect();
        let kt: Vec<f64> = (0..=m).map(|i| grid.t_conductance(i)).collect();
        let mut s = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            s[(k, k)] = (kt[k] + kt[k + 1]) / wt[k];
            if k + 1 < m {
                let v = -kt[k + 1] / (wt[k] * wt[k + 1]).sqrt();
                s[(k, k + 1)] = v;
                s[(k + 1, k)] = v;
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut modes = eig.eigenvectors;
        for k in 0..m {
            let scale = 1.0 / wt[k].sqrt();
            for c in 0..m {
                modes[(k, c)] *= scale;
            }
        }
        Solver {
            first,
            nr,
            m,
            wr,
            kr_left,
            kr_right,
            kr_react,
            kt,
            wt,
            modes,
            mu: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// `b - A x` for `x` of shape `m × nr` and the trace on the free
    /// columns, in flux form so that near-boundary differences stay exact.
    fn residual(&self, trace: &[f64], x: &[f64]) -> Vec<f64> {
        let (m, nr) = (self.m, self.nr);
        let at = |i: usize, k: usize| x[i * nr + k];
        let mut out = vec![0.0; m * nr];
        for i in 0..m {
            for k in 0..nr {
                let v = at(i, k);
                let below = if i == 0 { trace[k] } else { at(i - 1, k) };
                let above = if i + 1 < m { at(i + 1, k) } else { 0.0 };
                let tpart = self.kt[i] * (v - below) + self.kt[i + 1] * (v - above);
                let left = if k > 0 { at(i, k - 1) } else { 0.0 };
                let right = if k + 1 < nr { at(i, k + 1) } else { 0.0 };
                let rpart = self.kr_left[k] * (v - left) + self.kr_right[k] * (v - right) + self.kr_react[k] * v;
                out[i * nr + k] = -(tpart * self.wr[k] + self.wt[i] * rpart);
            }
        }
        out
    }

    /// Direct solve through the `t` eigenbasis.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (m, nr) = (self.m, self.nr);
        let mut coeffs = vec![0.0; m * nr];
        for c in 0..m {
            let row = &mut coeffs[c * nr..(c + 1) * nr];
            for i in 0..m {
                let phi = self.modes[(i, c)];
                if phi != 0.0 {
                    for k in 0..nr {
                        row[k] += phi * b[i * nr + k];
                    }
                }
            }
        }
        let mut work = Vec::new();
        let off: Vec<f64> = self.kr_right[..nr - 1].iter().map(|c| -c).collect();
        let mut diag = vec![0.0; nr];
        for c in 0..m {
            for k in 0..nr {
                diag[k] = self.kr_left[k] + self.kr_right[k] + self.kr_react[k] + self.mu[c] * self.wr[k];
            }
            thomas(&off, &diag, &off, &mut coeffs[c * nr..(c + 1) * nr], &mut work);
        }
        let mut x = vec![0.0; m * nr];
        for i in 0..m {
            let row = &mut x[i * nr..(i + 1) * nr];
            for c in 0..m {
                let phi = self.modes[(i, c)];
                for k in 0..nr {
                    row[k] += phi * coeffs[c * nr + k];
                }
            }
        }
        x
    }
}

/// Relative residual target of [`extend`].
pub const SOLVE_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 12;
const MIN_REFINEMENTS: usize = 2;

/// Extends data sampled on the radial nodes.
///
/// Data at pinned columns (`r = R` under a Dirichlet far condition, and
/// `r = 0` in the dipole sector) must vanish to `1e-6` of its maximum and
/// is then set to zero.
pub fn extend(data: &[f64], grid: &HalfSpaceGrid, sector: Sector) -> Result<ExtensionField> {
    let cols = grid.r.len();
    if data.len() != cols {
        return Err(Error::invalid(format!("expected {cols} data samples, got {}", data.len())));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("boundary data must be finite"));
    }
    let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut trace = data.to_vec();
    for j in 0..cols {
        if grid.column_is_pinned(j, sector) {
            if data[j].abs() > 1e-6 * scale {
                return Err(Error::invalid(format!(
                    "boundary data must vanish at r = {} (got {:.3e} against max {:.3e})",
                    grid.r[j], data[j], scale
                )));
            }
            trace[j] = 0.0;
        }
    }
    let rows = grid.t.len();
    let mut values = vec![0.0; rows * cols];
    values[..cols].copy_from_slice(&trace);
    if scale == 0.0 {
        return ExtensionField::from_values(grid.clone(), sector, values);
    }
    let solver = Solver::new(grid, sector);
    let (first, nr, m) = (solver.first, solver.nr, solver.m);
    let c0 = grid.t_conductance(0);
    let mut b = vec![0.0; m * nr];
    for k in 0..nr {
        b[k] = c0 * solver.wr[k] * trace[first + k];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = solver.solve(&b);
    let mut refinements = 0;
    let mut rel = f64::INFINITY;
    for pass in 0..=MAX_REFINEMENTS {
        let r = solver.residual(&trace[first..first + nr], &x);
        rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        if (rel < SOLVE_TOL && pass >= MIN_REFINEMENTS) || pass == MAX_REFINEMENTS {
            break;
        }
        let dx = solver.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        refinements += 1;
    }
    if !(rel < SOLVE_TOL) {
        return Err(Error::NotConverged { what: "extension solve", iterations: refinements, residual: rel });
    }
    for i in 0..m {
        for k in 0..nr {
            values[(i + 1) * cols + first + k] = x[i * nr + k];
        }
    }
    Ok(ExtensionField { grid: grid.clone(), sector, values, refinements, rel_residual: rel })
}

/// Samples `f(r)` on the radial nodes.
pub fn sample_fn(grid: &HalfSpaceGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.r.iter().map(|&r| f(r)).collect()
}

/// Samples a periodic field along the positive first axis by band-limited
/// interpolation; `R` must not exceed the box half-width.
pub fn sample_field(u: &RealField, grid: &HalfSpaceGrid) -> Result<Vec<f64>> {
    if u.grid().dims() != grid.dims {
        return Err(Error::GridMismatch(format!(
            "field has N = {}, half-space grid has N = {}",
            u.grid().dims(),
            grid.dims
        )));
    }
    if grid.r_max() > u.grid().half_width() + 1e-12 {
        return Err(Error::invalid("radial extent exceeds the periodic box"));
    }
    let interp = TrigInterpolant::new(u);
    Ok(grid.r.iter().map(|&r| interp.eval(&[r, 0.0, 0.0])).collect())
}

/// `-lim t^{1-2s} U_t` from the two finest rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannTrace {
    /// Richardson combination for an error `∝ t^{2-2s}`.
    pub values: Vec<f64>,
    /// `2s (U(0) - U(t_1)) / t_1^{2s}`, the flux through the first cell.
    pub first_row: Vec<f64>,
    pub second_row: Vec<f64>,
    /// Gap to the same extrapolation one row further out, relative to
    /// `max |values|`.
    pub disagreement: f64,
    pub reliable: bool,
}

pub fn neumann_trace(ext: &ExtensionField) -> NeumannTrace {
    let g = &ext.grid;
    let two_s = 2.0 * g.s;
    let q = 2.0 - two_s;
    let cols = ext.cols();
    let flux = |i: usize| -> Vec<f64> {
        let t = g.t[i];
        (0..cols).map(|j| two_s * (ext.at(0, j) - ext.at(i, j)) / t.powf(two_s)).collect()
    };
    let extrapolate = |i: usize, lo: &[f64], hi: &[f64]| -> Vec<f64> {
        let (a, b) = (g.t[i].powf(q), g.t[i + 1].powf(q));
        lo.iter().zip(hi).map(|(d1, d2)| (d1 * b - d2 * a) / (b - a)).collect()
    };
    let first_row = flux(1);
    let second_row = flux(2);
    let values = extrapolate(1, &first_row, &second_row);
    let disagreement = if g.t.len() > 3 {
        let coarse = extrapolate(2, &second_row, &flux(3));
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = coarse.iter().zip(&values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if peak > 0.0 {
            dev / peak
        } else {
            0.0
        }
    } else {
        f64::INFINITY
    };
    NeumannTrace { values, first_row, second_row, disagreement, reliable: disagreement <= 0.1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtnReport {
    pub r: Vec<f64>,
    pub neumann: Vec<f64>,
    /// `κ (-Δ)^s u` on the radial nodes.
    pub multiplier: Vec<f64>,
    /// `max |neumann - multiplier| / max |multiplier|` over `r ≤ R/2`.
    pub max_gap: f64,
    pub extrapolation_disagreement: f64,
    pub reliable: bool,
}

/// Compares the Neumann trace of `ext` with `kappa · frac_trace`, where
/// `frac_trace` holds `(-Δ)^s u` on the radial nodes.
pub fn dtn_check(ext: &ExtensionField, frac_trace: &[f64], kappa: f64) -> Result<DtnReport> {
    let g = &ext.grid;
    if frac_trace.len() != g.r.len() {
        return Err(Error::invalid("multiplier trace length does not match the grid"));
    }
    let trace = neumann_trace(ext);
    let multiplier: Vec<f64> = frac_trace.iter().map(|v| kappa * v).collect();
    let half = 0.5 * g.r_max();
    let (mut dev, mut peak) = (0.0f64, 0.0f64);
    for (j, &r) in g.r.iter().enumerate() {
        if r <= half + 1e-12 {
            dev = dev.max((trace.values[j] - multiplier[j]).abs());
            peak = peak.max(multiplier[j].abs());
        }
    }
    let max_gap = if peak > 0.0 { dev / peak } else { dev };
    Ok(DtnReport {
        r: g.r.clone(),
        neumann: trace.values,
        multiplier,
        max_gap,
        extrapolation_disagreement: trace.disagreement,
        reliable: trace.reliable,
    })
}

/// [`dtn_check`] with `(-Δ)^s u` taken from the Fourier multiplier.
pub fn dtn_check_field(ext: &ExtensionField, u: &RealField, kappa: f64) -> Result<DtnReport> {
    let f = frac_laplacian(u, ext.grid.s)?;
    dtn_check(ext, &sample_field(&f, &ext.grid)?, kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    pub s: f64,
    pub kappa: f64,
    pub per_width: Vec<(f64, f64)>,
    /// `(max - min) / mean` of the per-width values.
    pub spread: f64,
    /// Spread within 1%.
    pub consistent: bool,
    pub closed_form: f64,
}

/// Gaussian widths used by [`calibrate_kappa`] by default.
pub const CALIBRATION_WIDTHS: [f64; 3] = [1.0, 1.5, 2.0];

/// Least-squares ratio of the Neumann trace of Gaussian data to its
/// fractional Laplacian over `r ≤ R/2`, per width and pooled.
pub fn calibrate_kappa(grid: &HalfSpaceGrid, widths: &[f64]) -> Result<KappaCalibration> {
    if widths.is_empty() {
        return Err(Error::invalid("at least one width is needed"));
    }
    let s = grid.s;
    let half = 0.5 * grid.r_max();
    let (mut num, mut den) = (0.0, 0.0);
    let mut per_width = Vec::new();
    for &w in widths {
        let data = sample_fn(grid, |r| (-0.5 * r * r / (w * w)).exp());
        let ext = extend(&data, grid, Sector::Radial)?;
        let trace = neumann_trace(&ext);
        let (mut n, mut d) = (0.0, 0.0);
        for (j, &r) in grid.r.iter().enumerate() {
            if r > half {
                break;
            }
            let f = gaussian_frac_laplacian(grid.dims, s, w, r)?;
            let wgt = grid.r_weight(j);
            n += wgt * trace.values[j] * f;
            d += wgt * f * f;
        }
        per_width.push((w, n / d));
        num += n;
        den += d;
    }
    let kappa = num / den;
    let vals: Vec<f64> = per_width.iter().map(|p| p.1).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = (max - min) / mean;
    if !(kappa > 0.0) || spread > 0.05 {
        return Err(Error::Diverged {
            what: "kappa calibration",
            detail: format!("per-width ratios {vals:?} spread by {spread:.3e}; the grid is inadequate"),
        });
    }
    Ok(KappaCalibration { s, kappa, per_width, spread, consistent: spread <= 0.01, closed_form: kappa_closed_form(s) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A1Report {
    pub value: f64,
    /// Sum of the non-negative terms.
    pub positive_part: f64,
}

/// The dipole-sector form
/// `∫(g_t² + g_r² + (N-1) g²/r²) t^{1-2s} r^{N-1} + κ∫g² r^{N-1} - pνκ∫u^{p-1} g² r^{N-1}`
/// for `g` on the half-space grid, with `u = gs.u` on the radial nodes.
pub fn a1_form(g: &ExtensionField, gs: &GroundState, kappa: f64) -> Result<A1Report> {
    let grid = &g.grid;
    if (gs.problem.s - grid.s).abs() > 1e-12 {
        return Err(Error::invalid(format!("ground state has s = {}, grid has s = {}", gs.problem.s, grid.s)));
    }
    if g.sector != Sector::Dipole {
        return Err(Error::invalid("the form acts on dipole-sector fields"));
    }
    let scale = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if grid.dims == 2 && (0..grid.t.len()).any(|i| g.at(i, 0).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::invalid("g must vanish on the axis for N = 2; the r^{-1} integral diverges otherwise"));
    }
    let u = sample_field(&gs.u, grid)?;
    let p = gs.problem.p;
    let energy = g.energy();
    let (mut mass, mut potential) = (0.0, 0.0);
    for j in 0..grid.r.len() {
        let w = grid.r_weight(j);
        let t0 = g.at(0, j);
        mass += w * t0 * t0;
        potential += w * u[j].abs().powf(p - 1.0) * t0 * t0;
    }
    let positive_part = energy + kappa * mass;
    Ok(A1Report { value: positive_part - p * gs.nu * kappa * potential, positive_part })
}

/// A random field that vanishes on the axis, at `t = T` and at `r = R`.
pub fn random_quarter_plane(grid: &HalfSpaceGrid, seed: u64) -> ExtensionField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<[f64; 5]> = (0..3)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..1.5),
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.5..2.0),
            ]
        })
        .collect();
    let (tm, rm) = (grid.t_max(), grid.r_max());
    let mut values = Vec::with_capacity(grid.t.len() * grid.r.len());
    for &t in &grid.t {
        for &r in &grid.r {
            let cutoff = r / (1.0 + r) * (1.0 - (t / tm).powi(2)).max(0.0) * (1.0 - (r / rm).powi(2)).max(0.0);
            let v: f64 = bumps
                .iter()
                .map(|b| b[0] * (-((t - b[1]) / b[3]).powi(2) - ((r - b[2]) / b[4]).powi(2)).exp())
                .sum();
            values.push(cutoff * v);
        }
    }
    ExtensionField { grid: grid.clone(), sector: Sector::Dipole, values, refinements: 0, rel_residual: 0.0 }
}

/// Extension of the radial derivative of the ground state in the dipole
/// sector: the trace of the translation mode `∂_1 u`.
pub fn translation_mode_extension(gs: &GroundState, grid: &HalfSpaceGrid) -> Result<ExtensionField> {
    let du = spectral_derivative(&gs.u, 0)?;
    let mut data = sample_field(&du, grid)?;
    data[0] = 0.0;
    let last = data.len() - 1;
    if grid.far == FarBoundary::Dirichlet {
        data[last] = 0.0;
    }
    extend(&data, grid, Sector::Dipole)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedRayleigh {
    pub energy: f64,
    pub quotient: f64,
    pub nu: f64,
    pub rel_gap: f64,
}

/// `(κ^{-1} ∫|∇U|² t^{1-2s} + ∫u²) / (∫|u|^{p+1})^{2/(p+1)}` at the
/// extension `U` of the ground state. With a Dirichlet far boundary the
/// algebraic tail of `u` is cut at `r = R`.
pub fn extended_rayleigh(gs: &GroundState, grid: &HalfSpaceGrid, kappa: f64) -> Result<ExtendedRayleigh> {
    if (gs.problem.s - grid.s).abs() > 1e-12 {
        return Err(Error::invalid("ground state and grid have different s"));
    }
    let mut data = sample_field(&gs.u, grid)?;
    if grid.far == FarBoundary::Dirichlet {
        *data.last_mut().unwrap() = 0.0;
    }
    let ext = extend(&data, grid, Sector::Radial)?;
    let area = sphere_area(grid.dims);
    let p = gs.problem.p;
    let energy = area * ext.energy();
    let (mut l2, mut lp) = (0.0, 0.0);
    for j in 0..grid.r.len() {
        let w = grid.r_weight(j);
        let v = ext.at(0, j);
        l2 += w * v * v;
        lp += w * v.abs().powf(p + 1.0);
    }
    let quotient = (energy / kappa + area * l2) / (area * lp).powf(2.0 / (p + 1.0));
    Ok(ExtendedRayleigh { energy, quotient, nu: gs.nu, rel_gap: (quotient - gs.nu).abs() / gs.nu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_at_one_half() {
        assert_relative_eq!(kappa_closed_form(0.5), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_layout() {
        let g = HalfSpaceGrid::standard(2, 0.5, 10.0).unwrap();
        assert_eq!(g.t()[0], 0.0);
        assert!(g.t()[1] < DEFAULT_T_FIRST);
        assert!(g.t()[1] / g.t()[2] > 0.84 && g.t()[1] / g.t()[2] < 0.86);
        assert_eq!(g.t_max(), 10.0);
        assert_eq!(g.r_cells(), 200);
        let r = g.refined().unwrap();
        assert_eq!(r.r_cells(), 400);
        assert!(r.t().len() > g.t().len());
        assert!(HalfSpaceGrid::standard(2, 1.0, 10.0).is_err());
    }

    #[test]
    fn weights_integrate_exactly() {
        let g = HalfSpaceGrid::standard(3, 0.3, 5.0).unwrap();
        let total_r: f64 = (0..g.r().len()).map(|j| g.r_weight(j)).sum();
        assert_relative_eq!(total_r, 125.0 / 3.0, max_relative = 1e-12);
        let total_t: f64 = (0..g.t().len()).map(|i| g.t_weight(i)).sum();
        assert_relative_eq!(total_t, 5f64.powf(1.4) / 1.4, max_relative = 1e-12);
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let mut rhs = vec![1.0, 2.0, 3.0];
        thomas(&[-1.0, -1.0], &[2.0, 2.0, 2.0], &[-1.0, -1.0], &mut rhs, &mut Vec::new());
        assert_relative_eq!(rhs[0], 2.5, epsilon = 1e-14);
        assert_relative_eq!(rhs[1], 4.0, epsilon = 1e-14);
        assert_relative_eq!(rhs[2], 3.5, epsilon = 1e-14);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = HalfSpaceGrid::standard(2, 0.4, 8.0).unwrap();
        let ext = extend(&vec![0.0; g.r().len()], &g, Sector::Radial).unwrap();
        assert!(ext.values.iter().all(|&v| v == 0.0));
        let tr = neumann_trace(&ext);
        assert!(tr.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pinned_data_rejected() {
        let g = HalfSpaceGrid::standard(2, 0.4, 8.0).unwrap();
        assert!(extend(&vec![1.0; g.r().len()], &g, Sector::Radial).is_err());
        assert!(extend(&[1.0, 2.0], &g, Sector::Radial).is_err());
    }
}
