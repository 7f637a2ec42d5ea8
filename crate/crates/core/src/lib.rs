//! Pseudospectral ground states for the fractional equation
//! `(-Δ)^s u + u = ν u^p` on a periodic truncation of `R^N`.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] and [`spectral`]: periodic grids, the unitary FFT, the
//!   Fourier-multiplier fractional Laplacian and `H^s` norms.
//! * [`inequalities`]: the elementary bounds controlling how `|ξ|^{2s}`
//!   moves with `s`.
//! * [`ground_state`]: the constrained minimiser of the Rayleigh quotient.
//! * [`linearized`]: the second variation at the ground state and its
//!   sector spectra.
//! * [`continuation`]: the `s → 1` branch `U_1 + ω_s` built by a
//!   contraction mapping.
//! * [`extension`]: the weighted-harmonic extension to the half space and
//!   its Dirichlet-to-Neumann map.
//!
//! [`oracle`] and [`quadrature`] hold reference computations that are
//! deliberately independent of the spectral machinery and are used by the
//! test and acceptance suites.

pub mod continuation;
pub mod error;
pub mod extension;
mod fft;
pub mod grid;
pub mod ground_state;
pub mod inequalities;
pub mod krylov;
pub mod linearized;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
pub use grid::{GridSpec, RealField, SpectralField};
