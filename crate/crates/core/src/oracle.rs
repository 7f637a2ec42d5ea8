//! Reference values computed without the FFT path.
//!
//! * closed-form solitons: the Benjamin–Ono profile `2/(1+x²)` solving
//!   `(-Δ)^{1/2}Q + Q = Q²` and `√2 sech x` solving `-Q'' + Q = Q³`;
//! * the fractional Laplacian of a Gaussian by a Hankel-transform integral;
//! * the principal-value singular integral
//!   `(-Δ)^s u(x) = C(N,s) PV∫ (u(x) - u(y)) |x-y|^{-N-2s} dy` with
//!   `C(N,s) = 4^s Γ(N/2+s) / (π^{N/2} |Γ(-s)|)`;
//! * a shooting solver for the radial equation at `s = 1`, together with a
//!   Sturm-sequence eigenvalue count for its radial linearization.
//!
//! Every profile `Q` solving `(-Δ)^s Q + Q = Q^p` gives the normalized
//! minimizer `u = Q / ‖Q‖_{p+1}` with `ν = ‖Q‖_{p+1}^{p-1}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{RealField, MAX_DIMS};
use crate::quadrature::{integrate, integrate_piecewise, integrate_to_infinity, QuadratureOptions};
use crate::spectral::TrigInterpolant;

/// Unnormalized Benjamin–Ono soliton `2/(1+x²)` (N=1, s=1/2, p=2).
pub fn benjamin_ono_profile(x: f64) -> f64 {
    2.0 / (1.0 + x * x)
}

/// `ν_{1/2}` for N=1, p=2: `(∫Q³)^{1/3} = (3π)^{1/3}`.
pub fn benjamin_ono_nu() -> f64 {
    (3.0 * PI).cbrt()
}

/// Unit-`L³` Benjamin–Ono minimizer.
pub fn benjamin_ono_minimizer(x: f64) -> f64 {
    benjamin_ono_profile(x) / benjamin_ono_nu()
}

/// Unnormalized cubic soliton `√2 sech x` (N=1, s=1, p=3).
pub fn sech_profile(x: f64) -> f64 {
    std::f64::consts::SQRT_2 / x.cosh()
}

/// `ν_1` for N=1, p=3: `‖√2 sech‖_{L⁴}² = (16/3)^{1/2}`.
pub fn sech_nu() -> f64 {
    4.0 / 3f64.sqrt()
}

/// Unit-`L⁴` cubic minimizer.
pub fn sech_minimizer(x: f64) -> f64 {
    sech_profile(x) / (16.0f64 / 3.0).powf(0.25)
}

/// Normalization constant of the singular-integral definition.
pub fn singular_integral_constant(dims: usize, s: f64) -> f64 {
    4f64.powf(s) * libm::tgamma(dims as f64 / 2.0 + s) / (PI.powf(dims as f64 / 2.0) * libm::tgamma(-s).abs())
}

/// Surface area of the unit sphere `S^{N-1}`.
pub fn sphere_area(dims: usize) -> f64 {
    2.0 * PI.powf(dims as f64 / 2.0) / libm::tgamma(dims as f64 / 2.0)
}

fn check_open_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("the singular integral needs s in (0,1) (got {s})")))
    }
}

/// `(ρr)^{1-N/2} J_{N/2-1}(ρr)`, the radial plane-wave kernel.
fn radial_kernel(dims: usize, z: f64) -> f64 {
    match dims {
        1 => (2.0 / PI).sqrt() * z.cos(),
        2 => libm::j0(z),
        _ => {
            if z < 1e-4 {
                (2.0 / PI).sqrt() * (1.0 - z * z / 6.0)
            } else {
                (2.0 / PI).sqrt() * z.sin() / z
            }
        }
    }
}

/// `(-Δ)^s` of the Gaussian `exp(-|x|²/(2w²))` at radius `r`, by quadrature
/// of the radial inverse Fourier integral
/// `∫_0^∞ ρ^{2s} w^N e^{-w²ρ²/2} (ρr)^{1-N/2} J_{N/2-1}(ρr) ρ^{N-1} dρ`.
pub fn gaussian_frac_laplacian(dims: usize, s: f64, width: f64, r: f64) -> Result<f64> {
    if !(1..=MAX_DIMS).contains(&dims) || !(width > 0.0) || !(r >= 0.0) {
        return Err(Error::invalid("gaussian oracle needs N in 1..=3, w > 0, r >= 0"));
    }
    if !(s.is_finite() && s >= 0.0 && s <= 1.0) {
        return Err(Error::invalid(format!("s must lie in [0,1] (got {s})")));
    }
    let n = dims as f64;
    let rho_max = 12.0 / width;
    let panels = 64 + (rho_max * r / PI).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| rho_max * k as f64 / panels as f64).collect();
    let integrand = |rho: f64| {
        let spec = width.powf(n) * (-0.5 * width * width * rho * rho).exp();
        rho.powf(2.0 * s) * spec * radial_kernel(dims, rho * r) * rho.powf(n - 1.0)
    };
    let opts = QuadratureOptions { abs_tol: 1e-15, rel_tol: 1e-13, ..Default::default() };
    Ok(integrate_piecewise(integrand, &breaks, opts)?.value)
}

/// `‖exp(-|x|²/(2w²))‖_s²` by quadrature of
/// `|S^{N-1}| ∫_0^∞ (1 + ρ^{2s}) w^{2N} e^{-w²ρ²} ρ^{N-1} dρ`.
pub fn gaussian_sobolev_norm_squared(dims: usize, s: f64, width: f64) -> Result<f64> {
    let n = dims as f64;
    let f = |rho: f64| (1.0 + rho.powf(2.0 * s)) * width.powf(2.0 * n) * (-(width * rho).powi(2)).exp() * rho.powf(n - 1.0);
    let opts = QuadratureOptions { abs_tol: 1e-15, rel_tol: 1e-13, ..Default::default() };
    Ok(sphere_area(dims) * integrate(f, 0.0, 12.0 / width, opts)?.value)
}

/// `∫_0^∞ g(z) z^{-1-2s} dz` for `g(z) = O(z²)` at the origin. The inner
/// piece uses `z = w^{1/(1-s)}`, which turns `z^{1-2s} dz` into a smooth
/// measure. Below `Z_QUAD` the second difference `g` is replaced by its
/// quadratic model, since rounding in `g` would be amplified by `z^{-1-2s}`.
fn hypersingular_radial(mut g: impl FnMut(f64) -> f64, s: f64, split: f64, far: f64, opts: QuadratureOptions) -> Result<f64> {
    const Z_QUAD: f64 = 1e-3;
    let z_quad = Z_QUAD.min(0.5 * split);
    let curvature = g(z_quad) / (z_quad * z_quad);
    let mut g = move |z: f64| if z < z_quad { curvature * z * z } else { g(z) };
    let e = 1.0 / (1.0 - s);
    let w_split = split.powf(1.0 - s);
    let inner = integrate(
        |w| {
            if w == 0.0 {
                return 0.0;
            }
            let z = w.powf(e);
            // dz = e w^{e-1} dw
            g(z) * z.powf(-1.0 - 2.0 * s) * e * w.powf(e - 1.0)
        },
        0.0,
        w_split,
        opts,
    )?
    .value;
    let outer = if far.is_finite() {
        integrate(|z| g(z) * z.powf(-1.0 - 2.0 * s), split, far, opts)?.value
    } else {
        integrate_to_infinity(|z| g(z) * z.powf(-1.0 - 2.0 * s), split, opts)?.value
    };
    Ok(inner + outer)
}

/// Singular-integral `(-Δ)^s f(x)` for a 1-D function decaying at infinity.
pub fn frac_laplacian_singular_1d(f: impl Fn(f64) -> f64, s: f64, x: f64) -> Result<f64> {
    check_open_order(s)?;
    let fx = f(x);
    let opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };
    let g = |z: f64| 2.0 * fx - f(x + z) - f(x - z);
    Ok(singular_integral_constant(1, s) * hypersingular_radial(g, s, 1.0, f64::INFINITY, opts)?)
}

/// Singular-integral `(-Δ)^s f(x)` in the plane, in polar coordinates around
/// `x`; `f` must be negligible beyond `support` from the origin.
pub fn frac_laplacian_singular_2d(f: impl Fn([f64; 2]) -> f64, s: f64, x: [f64; 2], support: f64) -> Result<f64> {
    check_open_order(s)?;
    let fx = f(x);
    let far = support + (x[0] * x[0] + x[1] * x[1]).sqrt();
    let inner_opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 2000 };
    let outer_opts = QuadratureOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 2000 };
    let mut failure = None;
    let angular = |rho: f64| {
        let ring = |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            let d = [rho * cs, rho * sn];
            2.0 * fx - f([x[0] + d[0], x[1] + d[1]]) - f([x[0] - d[0], x[1] - d[1]])
        };
        match integrate(ring, 0.0, PI, inner_opts) {
            Ok(e) => e.value,
            Err(err) => {
                failure.get_or_insert(err);
                0.0
            }
        }
    };
    // Beyond `far` only 2 f(x) survives: π ∫ 2 f(x) ρ^{-1-2s} dρ.
    let near = hypersingular_radial(angular, s, far.min(1.0), far, outer_opts)?;
    if let Some(err) = failure {
        return Err(err);
    }
    let tail = 2.0 * PI * fx * far.powf(-2.0 * s) / (2.0 * s);
    // ½∫_{R²} over the symmetric difference equals the half-turn integral.
    Ok(singular_integral_constant(2, s) * (near + tail))
}

/// Singular-integral oracle for a sampled field at the grid point `flat`.
///
/// The field is read through its trigonometric interpolant inside the box
/// and taken as zero outside, so `u` must be compactly supported well
/// inside `[-L, L)^N`. Points with `|x_a| > L/2` are rejected.
pub fn frac_laplacian_oracle(u: &RealField, s: f64, flat: usize) -> Result<f64> {
    check_open_order(s)?;
    let g = *u.grid();
    if g.dims() > 2 {
        return Err(Error::invalid("singular-integral oracle supports N <= 2 only"));
    }
    if flat >= g.len() {
        return Err(Error::invalid("grid index out of range"));
    }
    let x = g.point(flat);
    let l = g.half_width();
    if x[..g.dims()].iter().any(|c| c.abs() > 0.5 * l) {
        return Err(Error::invalid("oracle point too close to the box boundary"));
    }
    let interp = TrigInterpolant::new(u);
    let inside = |y: &[f64]| y.iter().all(|c| *c >= -l && *c < l);
    if g.dims() == 1 {
        let f = |y: f64| if inside(&[y]) { interp.eval(&[y]) } else { 0.0 };
        frac_laplacian_singular_1d(f, s, x[0])
    } else {
        let f = |y: [f64; 2]| if inside(&y) { interp.eval(&y) } else { 0.0 };
        frac_laplacian_singular_2d(f, s, [x[0], x[1]], l * std::f64::consts::SQRT_2)
    }
}

/// One adaptive Dormand–Prince 5(4) integration of `y' = f(r, y)` from `r0`
/// to `r1`. The closure may stop the integration early by returning `None`.
pub fn dormand_prince<const D: usize>(
    mut f: impl FnMut(f64, &[f64; D]) -> Option<[f64; D]>,
    r0: f64,
    y0: [f64; D],
    r1: f64,
    tol: f64,
    max_step: f64,
) -> Option<[f64; D]> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut r = r0;
    let mut y = y0;
    let mut h = max_step.min(r1 - r0);
    while r < r1 {
        h = h.min(r1 - r);
        let mut k = [[0.0; D]; 7];
        for stage in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                for d in 0..D {
                    ys[d] += h * A[stage][j] * kj[d];
                }
            }
            k[stage] = f(r + C[stage] * h, &ys)?;
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for d in 0..D {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for st in 0..7 {
                hi += B5[st] * k[st][d];
                lo += B4[st] * k[st][d];
            }
            y5[d] += h * hi;
            let scale = tol * (1.0 + y[d].abs().max(y5[d].abs()));
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if err <= 1.0 || h < 1e-14 {
            r += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(max_step);
    }
    Some(y)
}

/// Outcome of one shot from `Q(0) = a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// The profile crossed zero: `a` too large.
    Over,
    /// The profile turned upward while positive: `a` too small.
    Under,
}

/// Positive radial solution of `-Q'' - (N-1)Q'/r + Q = Q^p` by shooting on
/// `Q(0)`, tabulated on a uniform radial grid with cubic Hermite
/// interpolation. Beyond the reliable shooting range the profile is
/// continued by the decaying solution of the linear equation,
/// `r^{1-N/2} K_{N/2-1}(r)`.
#[derive(Debug, Clone)]
pub struct RadialShooting {
    pub dims: usize,
    pub p: f64,
    /// `Q(0)`.
    pub center: f64,
    step: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    /// Radius where the tabulated part hands over to the tail.
    pub cutoff: f64,
    tail_scale: f64,
    /// `‖Q‖_{L^{p+1}}`.
    pub lp1_norm: f64,
}

fn bessel_k_asymptotic(order: f64, r: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
        sum += term;
    }
    (PI / (2.0 * r)).sqrt() * (-r).exp() * sum
}

impl RadialShooting {
    const STEP: f64 = 1.0 / 256.0;
    const R_START: f64 = 1e-6;

    pub fn solve(dims: usize, p: f64) -> Result<Self> {
        if !(1..=MAX_DIMS).contains(&dims) {
            return Err(Error::invalid("shooting oracle needs N in 1..=3"));
        }
        if !(p > 1.0) || (dims > 2 && p >= (dims as f64 + 2.0) / (dims as f64 - 2.0)) {
            return Err(Error::invalid(format!("p = {p} is not subcritical at s = 1")));
        }
        let n1 = dims as f64 - 1.0;
        let rhs = move |r: f64, y: &[f64; 2]| -> Option<[f64; 2]> {
            let q = y[0];
            let nl = q.abs().powf(p - 1.0) * q;
            let d2 = q - nl - if dims == 1 { 0.0 } else { n1 * y[1] / r };
            if d2.is_finite() {
                Some([y[1], d2])
            } else {
                None
            }
        };
        let start = |a: f64| {
            let c = (a - a.powf(p)) / dims as f64;
            [a + 0.5 * c * Self::R_START * Self::R_START, c * Self::R_START]
        };
        // Trajectory classified on the tabulation grid; returns samples.
        let run = |a: f64, r_max: f64| -> (Shot, f64, Vec<[f64; 2]>) {
            let mut y = start(a);
            let mut r = Self::R_START;
            let mut samples = vec![[a, 0.0]];
            let mut k = 1;
            loop {
                let target = k as f64 * Self::STEP;
                match dormand_prince(rhs, r, y, target, 1e-13, Self::STEP) {
                    Some(next) => y = next,
                    None => return (Shot::Over, target, samples),
                }
                r = target;
                samples.push(y);
                if y[0] < 0.0 {
                    return (Shot::Over, r, samples);
                }
                if y[1] > 0.0 {
                    return (Shot::Under, r, samples);
                }
                if r >= r_max {
                    return (Shot::Under, r, samples);
                }
                k += 1;
            }
        };
        let r_max = 60.0;
        let mut lo = 1.0 + 1e-9;
        let mut hi = 2.0;
        while run(hi, r_max).0 == Shot::Under {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Diverged { what: "radial shooting", detail: "no overshoot bracket".into() });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match run(mid, r_max).0 {
                Shot::Over => hi = mid,
                Shot::Under => lo = mid,
            }
        }
        let (_, _, low) = run(lo, r_max);
        let (_, _, high) = run(hi, r_max);
        // Trust the tabulation while the bracketing shots agree and stay
        // clear of the turning point.
        let mut last = 0;
        for i in 0..low.len().min(high.len()) {
            let (a, b) = (low[i][0], high[i][0]);
            if a <= 0.0 || (a - b).abs() > 1e-6 * a || low[i][1] > 0.0 {
                break;
            }
            last = i;
        }
        let keep = (last as f64 * 0.8) as usize;
        if keep < 256 {
            return Err(Error::Diverged { what: "radial shooting", detail: "bracket collapsed too early".into() });
        }
        let q: Vec<f64> = low[..=keep].iter().map(|y| y[0]).collect();
        let dq: Vec<f64> = low[..=keep].iter().map(|y| y[1]).collect();
        let cutoff = keep as f64 * Self::STEP;
        let order = dims as f64 / 2.0 - 1.0;
        let tail_shape = |r: f64| r.powf(-order) * bessel_k_asymptotic(order, r);
        let tail_scale = q[keep] / tail_shape(cutoff);
        let mut out = RadialShooting {
            dims,
            p,
            center: 0.5 * (lo + hi),
            step: Self::STEP,
            q,
            dq,
            cutoff,
            tail_scale,
            lp1_norm: 0.0,
        };
        let opts = QuadratureOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 20_000 };
        let n = dims as f64;
        let weight = if dims == 1 { 2.0 } else { sphere_area(dims) };
        let breaks: Vec<f64> = (0..=((cutoff / 0.5).ceil() as usize)).map(|k| (k as f64 * 0.5).min(cutoff)).collect();
        let body = integrate_piecewise(|r| out.eval(r).powf(p + 1.0) * r.powf(n - 1.0), &breaks, opts)?.value;
        let tail = integrate_to_infinity(|r| out.eval(r).powf(p + 1.0) * r.powf(n - 1.0), cutoff, opts)?.value;
        out.lp1_norm = (weight * (body + tail)).powf(1.0 / (p + 1.0));
        Ok(out)
    }

    /// `Q(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.cutoff {
            let order = self.dims as f64 / 2.0 - 1.0;
            return self.tail_scale * r.powf(-order) * bessel_k_asymptotic(order, r);
        }
        let t = r / self.step;
        let i = (t.floor() as usize).min(self.q.len() - 2);
        let u = t - i as f64;
        let h = self.step;
        let (y0, y1, d0, d1) = (self.q[i], self.q[i + 1], self.dq[i], self.dq[i + 1]);
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// `ν_1 = ‖Q‖_{p+1}^{p-1}`.
    pub fn nu(&self) -> f64 {
        self.lp1_norm.powf(self.p - 1.0)
    }

    /// The unit-`L^{p+1}` minimizer `Q / ‖Q‖_{p+1}` at radius `r`.
    pub fn minimizer(&self, r: f64) -> f64 {
        self.eval(r) / self.lp1_norm
    }

    /// Smallest `count` eigenvalues of the radial operator
    /// `-φ'' - (N-1)φ'/r + φ - p Q^{p-1} φ` on `[0, R]` with `φ(R) = 0`,
    /// from a symmetric cell-centred finite-difference matrix and Sturm
    /// bisection. For `N = 1` the even sector is returned.
    pub fn radial_eigenvalues(&self, count: usize, radius: f64, cells: usize) -> Vec<f64> {
        let h = radius / cells as f64;
        let n1 = self.dims as f64 - 1.0;
        let rc = |j: usize| (j as f64 + 0.5) * h;
        // Face weights r^{N-1} at r = j h; the face at 0 carries no flux.
        let face = |j: usize| (j as f64 * h).powf(n1);
        let mut diag = vec![0.0; cells];
        let mut off = vec![0.0; cells.saturating_sub(1)];
        for j in 0..cells {
            let w = rc(j).powf(n1);
            let left = if j == 0 { 0.0 } else { face(j) };
            let right = if j + 1 == cells { 2.0 * face(j + 1) } else { face(j + 1) };
            let pot = 1.0 - self.p * self.eval(rc(j)).powf(self.p - 1.0);
            diag[j] = (left + right) / (h * h * w) + pot;
            if j + 1 < cells {
                // Symmetrized with the mass weights w_j.
                off[j] = -face(j + 1) / (h * h * (w * rc(j + 1).powf(n1)).sqrt());
            }
        }
        let below = |lambda: f64| -> usize {
            let mut count = 0;
            let mut d = diag[0] - lambda;
            if d < 0.0 {
                count += 1;
            }
            for j in 1..cells {
                let denom = if d == 0.0 { f64::EPSILON } else { d };
                d = diag[j] - lambda - off[j - 1] * off[j - 1] / denom;
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let lo0 = diag
            .iter()
            .enumerate()
            .map(|(j, d)| d - off.get(j).map_or(0.0, |o| o.abs()) - if j > 0 { off[j - 1].abs() } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        (0..count)
            .map(|k| {
                let (mut lo, mut hi) = (lo0, 10.0);
                while below(hi) <= k {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants() {
        assert_relative_eq!(singular_integral_constant(1, 0.5), 1.0 / PI, max_relative = 1e-13);
        assert_relative_eq!(singular_integral_constant(2, 0.5), 1.0 / (2.0 * PI), max_relative = 1e-13);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_half_laplacian_at_origin() {
        let v = gaussian_frac_laplacian(1, 0.5, 1.0, 0.0).unwrap();
        assert_relative_eq!(v, (2.0 / PI).sqrt(), max_relative = 1e-12);
        // s = 1: -(x² - 1) e^{-x²/2}.
        for r in [0.0, 0.7, 2.5] {
            let v = gaussian_frac_laplacian(1, 1.0, 1.0, r).unwrap();
            assert_relative_eq!(v, (1.0 - r * r) * (-0.5 * r * r).exp(), epsilon = 1e-12);
            let v2 = gaussian_frac_laplacian(2, 1.0, 1.0, r).unwrap();
            assert_relative_eq!(v2, (2.0 - r * r) * (-0.5 * r * r).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_integral_matches_fourier_route() {
        for (s, x) in [(0.5, 0.0), (0.3, 1.2), (0.8, 0.4)] {
            let a = frac_laplacian_singular_1d(|y| (-0.5 * y * y).exp(), s, x).unwrap();
            let b = gaussian_frac_laplacian(1, s, 1.0, x).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn singular_integral_in_the_plane() {
        let f = |y: [f64; 2]| (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp();
        for (s, x) in [(0.5, [0.0, 0.0]), (0.7, [0.6, -0.3])] {
            let a = frac_laplacian_singular_2d(f, s, x, 10.0).unwrap();
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let b = gaussian_frac_laplacian(2, s, 1.0, r).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn benjamin_ono_identity() {
        for x in [0.0, 0.5, 3.0] {
            let u = benjamin_ono_profile(x);
            let lap = frac_laplacian_singular_1d(benjamin_ono_profile, 0.5, x).unwrap();
            assert_relative_eq!(lap, u * u - u, epsilon = 1e-8);
        }
    }

    #[test]
    fn shooting_recovers_sech() {
        let shot = RadialShooting::solve(1, 3.0).unwrap();
        assert_relative_eq!(shot.center, std::f64::consts::SQRT_2, max_relative = 1e-10);
        for r in [0.0, 1.0, 4.0, 12.0, 25.0] {
            assert_relative_eq!(shot.eval(r), sech_profile(r), max_relative = 1e-7, epsilon = 1e-12);
        }
        // ‖Q‖ over the whole line.
        assert_relative_eq!(shot.nu(), sech_nu(), max_relative = 1e-9);
    }

    #[test]
    fn linearized_sech_spectrum() {
        // -∂² + 1 - 6 sech² has the even eigenvalue -3 and continuum from 1.
        let shot = RadialShooting::solve(1, 3.0).unwrap();
        let eig = shot.radial_eigenvalues(2, 30.0, 6000);
        assert_relative_eq!(eig[0], -3.0, epsilon = 1e-5);
        assert!(eig[1] > 1.0);
    }

    #[test]
    fn planar_quadratic_profile() {
        let shot = RadialShooting::solve(2, 2.0).unwrap();
        assert!(shot.center > 2.0 && shot.center < 3.0);
        assert!(shot.cutoff > 8.0);
        let eig = shot.radial_eigenvalues(2, 30.0, 3000);
        assert!(eig[0] < 0.0 && eig[1] > 0.0, "{eig:?}");
    }
}
