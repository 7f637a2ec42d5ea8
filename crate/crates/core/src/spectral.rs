//! Fourier multipliers on the periodic grid: the fractional Laplacian,
//! the `H^s` metric `1 + |ξ|^{2s}` and its powers, spectral derivatives.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, SpectralField};

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("s must lie in (0,1] (got {s})")))
    }
}

/// A real, even Fourier symbol tabulated on a grid in FFT order.
#[derive(Debug, Clone)]
pub struct Multiplier {
    grid: GridSpec,
    symbol: Vec<f64>,
}

impl Multiplier {
    /// Tabulates `f(|ξ|²)`; Nyquist rows get `nyquist` instead.
    pub fn from_xi_squared(grid: GridSpec, nyquist: f64, f: impl Fn(f64) -> f64) -> Self {
        let symbol = (0..grid.len())
            .map(|k| grid.xi_squared(k).map_or(nyquist, &f))
            .collect();
        Multiplier { grid, symbol }
    }

    /// `|ξ|^{2s}`, zero on the Nyquist rows.
    pub fn frac_laplacian(grid: GridSpec, s: f64) -> Result<Self> {
        check_order(s)?;
        Ok(Self::frac_laplacian_unchecked(grid, s))
    }

    /// Same as [`Multiplier::frac_laplacian`] for any exponent `s ≥ 0`.
    pub fn frac_laplacian_unchecked(grid: GridSpec, s: f64) -> Self {
        Self::from_xi_squared(grid, 0.0, |xi2| if xi2 == 0.0 { 0.0 } else { xi2.powf(s) })
    }

    /// The `H^s` metric `1 + |ξ|^{2s}`.
    pub fn metric(grid: GridSpec, s: f64) -> Result<Self> {
        Ok(Self::frac_laplacian(grid, s)?.map(|m| 1.0 + m))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Multiplier {
            grid: self.grid,
            symbol: self.symbol.iter().map(|&m| f(m)).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply_spectral(&self, field: &mut SpectralField) {
        for (z, &m) in field.coeffs_mut().iter_mut().zip(&self.symbol) {
            *z *= m;
        }
    }

    pub fn apply(&self, u: &RealField) -> RealField {
        debug_assert_eq!(u.grid(), &self.grid);
        let mut spec = u.to_spectral();
        self.apply_spectral(&mut spec);
        spec.to_real()
    }

    /// `h^N Σ m(ξ) Re(û v̂*)`.
    pub fn pairing(&self, u: &RealField, v: &RealField) -> f64 {
        let a = u.to_spectral();
        let b = v.to_spectral();
        self.pairing_spectral(&a, &b)
    }

    pub fn pairing_spectral(&self, a: &SpectralField, b: &SpectralField) -> f64 {
        let sum: f64 = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .zip(&self.symbol)
            .map(|((x, y), m)| m * (x * y.conj()).re)
            .sum();
        self.grid.cell_volume() * sum
    }
}

/// `(-Δ)^s u` through the symbol `|ξ|^{2s}`.
pub fn frac_laplacian(u: &RealField, s: f64) -> Result<RealField> {
    Ok(Multiplier::frac_laplacian(*u.grid(), s)?.apply(u))
}

/// `‖u‖_s² = h^N Σ (1 + |ξ|^{2s}) |û|²`.
pub fn sobolev_norm_squared(u: &RealField, s: f64) -> Result<f64> {
    sobolev_inner(u, u, s)
}

pub fn sobolev_norm(u: &RealField, s: f64) -> Result<f64> {
    Ok(sobolev_norm_squared(u, s)?.max(0.0).sqrt())
}

/// The `H^s` pairing `⟨u, v⟩_s`.
pub fn sobolev_inner(u: &RealField, v: &RealField, s: f64) -> Result<f64> {
    u.grid().check_same(v.grid())?;
    Ok(Multiplier::metric(*u.grid(), s)?.pairing(u, v))
}

/// `∂_axis u` by multiplication with `i ξ_axis` (Nyquist zeroed).
pub fn spectral_derivative(u: &RealField, axis: usize) -> Result<RealField> {
    let g = *u.grid();
    if axis >= g.dims() {
        return Err(Error::invalid(format!("axis {axis} out of range")));
    }
    let mut spec = u.to_spectral();
    for (k, z) in spec.coeffs_mut().iter_mut().enumerate() {
        let idx = g.unravel(k);
        let i = idx[axis];
        *z *= if g.is_nyquist_index(i) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, g.frequency(i))
        };
    }
    Ok(spec.to_real())
}

/// Band-limited (trigonometric) interpolant of a field, evaluable anywhere
/// in the box. Nyquist content is dropped, matching the multipliers.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(u: &RealField) -> Self {
        let g = *u.grid();
        let spec = u.to_spectral();
        let norm = 1.0 / (g.len() as f64).sqrt();
        let coeffs = spec
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let idx = g.unravel(k);
                if idx[..g.dims()].iter().any(|&i| g.is_nyquist_index(i)) {
                    Complex64::new(0.0, 0.0)
                } else {
                    z * norm
                }
            })
            .collect();
        TrigInterpolant { grid: g, coeffs }
    }

    /// Value at `x` (first `N` entries used). Periodic outside the box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let m = g.points();
        let n = g.dims();
        // e^{i ξ_k (x_a + L)} for each axis, since samples start at -L.
        let phases: Vec<Vec<Complex64>> = (0..n)
            .map(|a| {
                (0..m)
                    .map(|i| Complex64::from_polar(1.0, g.frequency(i) * (x[a] + g.half_width())))
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let idx = g.unravel(k);
            let mut ph = phases[0][idx[0]];
            for a in 1..n {
                ph *= phases[a][idx[a]];
            }
            acc += c * ph;
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1() -> GridSpec {
        GridSpec::new(1, 64, std::f64::consts::PI).unwrap()
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = GridSpec::new(2, 32, 4.0).unwrap();
        let (k1, k2) = (3.0 * std::f64::consts::PI / 4.0, std::f64::consts::PI / 4.0);
        let u = RealField::from_fn(g, |x| (k1 * x[0] + k2 * x[1]).cos());
        for s in [0.25, 0.5, 0.9, 1.0] {
            let lap = frac_laplacian(&u, s).unwrap();
            let factor = (k1 * k1 + k2 * k2).powf(s);
            assert!(lap.max_abs_diff(&u.scaled(factor)) < 1e-12);
        }
    }

    #[test]
    fn s_one_is_the_spectral_laplacian() {
        let g = grid1();
        let u = RealField::from_fn(g, |x| (x[0].sin() * 2.0).exp());
        let lap = frac_laplacian(&u, 1.0).unwrap();
        let second = spectral_derivative(&spectral_derivative(&u, 0).unwrap(), 0).unwrap();
        assert!(lap.max_abs_diff(&second.scaled(-1.0)) < 1e-10 * lap.norm_linf());
    }

    #[test]
    fn zero_mode_is_annihilated() {
        let g = grid1();
        let u = RealField::from_fn(g, |_| 3.0);
        let lap = frac_laplacian(&u, 0.4).unwrap();
        assert!(lap.norm_linf() < 1e-14);
    }

    #[test]
    fn rejects_orders_outside_unit_interval() {
        let u = RealField::zeros(grid1());
        assert!(frac_laplacian(&u, 0.0).is_err());
        assert!(frac_laplacian(&u, 1.5).is_err());
        assert!(sobolev_norm(&u, -0.1).is_err());
    }

    #[test]
    fn sobolev_norm_of_unit_frequency_is_order_free() {
        let g = grid1();
        let u = RealField::from_fn(g, |x| x[0].cos());
        let base = sobolev_norm(&u, 0.1).unwrap();
        for s in [0.3, 0.6, 1.0] {
            assert_relative_eq!(sobolev_norm(&u, s).unwrap(), base, max_relative = 1e-13);
        }
        assert_relative_eq!(base * base, 2.0 * u.inner(&u), max_relative = 1e-13);
        assert_eq!(sobolev_norm(&RealField::zeros(g), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn interpolant_reproduces_samples_and_modes() {
        let g = GridSpec::new(2, 16, std::f64::consts::PI).unwrap();
        let u = RealField::from_fn(g, |x| (2.0 * x[0]).cos() * x[1].sin() + 0.5);
        let interp = TrigInterpolant::new(&u);
        let p = g.point(37);
        assert_relative_eq!(interp.eval(&p[..2]), u.values()[37], epsilon = 1e-12);
        let off: [f64; 2] = [0.123, -1.7];
        let exact = (2.0 * off[0]).cos() * off[1].sin() + 0.5;
        assert_relative_eq!(interp.eval(&off), exact, epsilon = 1e-12);
    }
}
