//! Globally adaptive 15-point Gauss–Kronrod quadrature on finite and
//! semi-infinite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    let err = ((k - g) * h).abs();
    // Standard QUADPACK error scaling.
    let error = if err == 0.0 {
        0.0
    } else {
        err.min(err * (200.0 * err / (k * h).abs().max(f64::MIN_POSITIVE)).powf(1.5).min(1.0))
    };
    Panel {
        a,
        b,
        value: k * h,
        error: error.max(50.0 * f64::EPSILON * (k * h).abs()),
    }
}

/// Integrates `f` over `[a, b]` by bisecting the panel with the largest
/// error estimate until the total error meets the tolerance.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, opts: QuadratureOptions) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, intervals: 0 });
    }
    let mut panels = vec![kronrod(&mut f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Diverged {
                what: "quadrature",
                detail: "integrand produced a non-finite value".into(),
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate { value, error, intervals: panels.len() });
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::NotConverged {
                what: "quadrature",
                iterations: panels.len(),
                residual: error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Panel at floating-point resolution: accept it as is.
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
    }
}

/// `∫_a^∞ f` through the map `x = a + t/(1−t)`.
pub fn integrate_to_infinity(mut f: impl FnMut(f64) -> f64, a: f64, opts: QuadratureOptions) -> Result<Estimate> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Sum of [`integrate`] over consecutive breakpoints.
pub fn integrate_piecewise(mut f: impl FnMut(f64) -> f64, breaks: &[f64], opts: QuadratureOptions) -> Result<Estimate> {
    let mut total = Estimate { value: 0.0, error: 0.0, intervals: 0 };
    for w in breaks.windows(2) {
        let e = integrate(&mut f, w[0], w[1], opts)?;
        total.value += e.value;
        total.error += e.error;
        total.intervals += e.intervals;
    }
    Ok(total)
}
