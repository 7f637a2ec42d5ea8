//! Periodic grids on `[-L, L)^N` and the fields sampled on them.
//!
//! Samples sit at `x_j = -L + j h` with `h = 2L / M`, so the origin is the
//! grid point with every index equal to `M / 2`. Arrays are row-major: the
//! last axis is contiguous.
//!
//! Spectral coefficients use the unitary DFT in FFT order. Index `j` along
//! an axis carries the signed wavenumber `k = j` for `j < M/2` and `k = j - M`
//! otherwise, i.e. the frequency `ξ = π k / L`. The unpaired Nyquist index
//! `j = M/2` (`k = -M/2`) is treated as a null mode by every multiplier.
//! With the grid inner product `⟨u, v⟩ = h^N Σ u_j v_j`, Parseval reads
//! `⟨u, u⟩ = h^N Σ |û_k|²` with no further factors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

pub const MAX_DIMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: usize,
    points: usize,
    half_width: f64,
}

impl GridSpec {
    /// Builds the grid `[-L, L)^N` with `M` points per axis.
    pub fn new(dims: usize, points: usize, half_width: f64) -> Result<Self> {
        if !(1..=MAX_DIMS).contains(&dims) {
            return Err(Error::invalid(format!("N must be 1, 2 or 3 (got {dims})")));
        }
        if points < 2 || points % 2 != 0 {
            return Err(Error::invalid(format!("M must be even (got {points})")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!("L must be positive (got {half_width})")));
        }
        points
            .checked_pow(dims as u32)
            .filter(|&total| total <= (1usize << 31))
            .ok_or_else(|| Error::invalid("M^N exceeds the supported grid size"))?;
        Ok(GridSpec {
            dims,
            points,
            half_width,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of samples `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// `h^N`, the quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing()
    }

    /// Signed wavenumber of FFT-order index `index`.
    pub fn wavenumber(&self, index: usize) -> i64 {
        let m = self.points as i64;
        let j = index as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn frequency(&self, index: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(index) as f64 / self.half_width
    }

    /// Frequencies `π k / L` for `k = -M/2, …, M/2 - 1`, ascending.
    pub fn frequency_lattice(&self) -> Vec<f64> {
        let m = self.points as i64;
        (-m / 2..m / 2)
            .map(|k| std::f64::consts::PI * k as f64 / self.half_width)
            .collect()
    }

    pub fn is_nyquist_index(&self, index: usize) -> bool {
        index == self.points / 2
    }

    /// Index along one axis of the origin `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.points / 2
    }

    pub fn origin_flat(&self) -> usize {
        self.ravel(&[self.origin_index(); MAX_DIMS][..self.dims])
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIMS] {
        let mut idx = [0; MAX_DIMS];
        for a in (0..self.dims).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.dims]
            .iter()
            .fold(0, |acc, &i| acc * self.points + i)
    }

    /// Physical coordinates of a flat sample index.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIMS] {
        let idx = self.unravel(flat);
        let mut x = [0.0; MAX_DIMS];
        for a in 0..self.dims {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// `|ξ|²` at a flat spectral index, or `None` on any Nyquist row.
    pub fn xi_squared(&self, flat: usize) -> Option<f64> {
        let idx = self.unravel(flat);
        let mut acc = 0.0;
        for &i in &idx[..self.dims] {
            if self.is_nyquist_index(i) {
                return None;
            }
            let xi = self.frequency(i);
            acc += xi * xi;
        }
        Some(acc)
    }

    /// Same box, `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        GridSpec::new(self.dims, self.points * factor, self.half_width)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// A real function sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {pos}")));
        }
        Ok(RealField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RealField { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        RealField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every grid point. `f` receives the first `N`
    /// coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let n = grid.dims();
        let values = (0..grid.len())
            .map(|flat| f(&grid.point(flat)[..n]))
            .collect();
        RealField { grid, values }
    }

    /// Samples a radial profile `f(|x|)`.
    pub fn from_radial(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| f(x.iter().map(|v| v * v).sum::<f64>().sqrt()))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at_origin(&self) -> f64 {
        self.values[self.grid.origin_flat()]
    }

    /// `h^N Σ u v`.
    pub fn inner(&self, other: &RealField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn norm_lp(&self, q: f64) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>())
            .powf(1.0 / q)
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> RealField {
        self.map(|v| c * v)
    }

    pub fn scale_mut(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &RealField) {
        debug_assert_eq!(self.grid, x.grid);
        for (y, &xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a - b)
    }

    /// Largest absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Cyclic shift by whole grid cells: `out(x) = self(x - shift h)`.
    pub fn roll(&self, shift: &[i64]) -> RealField {
        let m = self.grid.points() as i64;
        let n = self.grid.dims();
        let mut out = vec![0.0; self.values.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let idx = self.grid.unravel(flat);
            let mut moved = [0usize; MAX_DIMS];
            for a in 0..n {
                moved[a] = (idx[a] as i64 + shift[a]).rem_euclid(m) as usize;
            }
            out[self.grid.ravel(&moved)] = v;
        }
        RealField {
            grid: self.grid,
            values: out,
        }
    }

    /// Samples along the positive first axis from the origin:
    /// `(r_j, u(r_j e_1))` for `r_j = j h`, `j = 0, …, M/2 - 1`.
    pub fn radial_ray(&self) -> Vec<(f64, f64)> {
        let g = self.grid;
        let o = g.origin_index();
        let mut idx = [o; MAX_DIMS];
        (0..g.points() / 2)
            .map(|j| {
                idx[0] = o + j;
                (j as f64 * g.spacing(), self.values[g.ravel(&idx)])
            })
            .collect()
    }

    pub fn to_spectral(&self) -> SpectralField {
        let mut coeffs: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::transform(&self.grid, &mut coeffs, false);
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }
}

/// Unitary DFT coefficients of a field, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::invalid("coefficient count does not match grid"));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `h^N Σ |û|²`, equal to the squared grid `L²` norm by Parseval.
    pub fn norm_l2_squared(&self) -> f64 {
        self.grid.cell_volume() * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Inverse transform and the largest discarded imaginary part.
    pub fn to_real_with_residue(&self) -> (RealField, f64) {
        let mut data = self.coeffs.clone();
        fft::transform(&self.grid, &mut data, true);
        let residue = data.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        let values = data.into_iter().map(|z| z.re).collect();
        (RealField::from_vec_unchecked(self.grid, values), residue)
    }

    pub fn to_real(&self) -> RealField {
        self.to_real_with_residue().0
    }
}
