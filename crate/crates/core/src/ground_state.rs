//! Normalized ground states of `(-Δ)^s u + u = ν u^p`.
//!
//! The solver works with the unnormalized profile `Q` solving
//! `A Q = Q^p`, `A = 1 + |ξ|^{2s}`, and rescales once at the end:
//! `u = Q / ‖Q‖_{p+1}` has unit `L^{p+1}` norm and solves the equation with
//! `ν = ‖Q‖_{p+1}^{p-1} = ‖u‖_s²`.
//!
//! The main iteration is Petviashvili's scheme
//! `Q̂ ← M^γ (Q^p)^ / A` with `M = ⟨AQ, Q⟩ / ⟨Q^p, Q⟩` and `γ = p/(p-1)`.
//! Every iterate is averaged over the grid symmetry group and negative
//! undershoots are clipped. If the scheme stalls, a normalized gradient
//! flow on the Rayleigh quotient takes over and hands back a better start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::spectral::{check_order, sobolev_norm_squared, Multiplier};
use crate::symmetry::{recenter, symmetrize};

/// Grid, order `s` and exponent `p` of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub s: f64,
    pub p: f64,
}

impl ProblemSpec {
    pub fn new(grid: GridSpec, s: f64, p: f64) -> Result<Self> {
        check_order(s)?;
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid(format!("p must exceed 1 (got {p})")));
        }
        let spec = ProblemSpec { grid, s, p };
        if let Some(pc) = spec.critical_exponent() {
            if p >= pc {
                return Err(Error::invalid(format!(
                    "p = {p} is not subcritical: need p < (N+2s)/(N-2s) = {pc}"
                )));
            }
        }
        Ok(spec)
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    /// `(N+2s)/(N-2s)` when `N > 2s`; `None` when every `p > 1` is admitted.
    pub fn critical_exponent(&self) -> Option<f64> {
        let n = self.dims() as f64;
        (n > 2.0 * self.s).then(|| (n + 2.0 * self.s) / (n - 2.0 * self.s))
    }

    /// Same `N`, `p` and grid at another order.
    pub fn with_order(&self, s: f64) -> Result<Self> {
        ProblemSpec::new(self.grid, s, self.p)
    }

    pub fn with_grid(&self, grid: GridSpec) -> Result<Self> {
        ProblemSpec::new(grid, self.s, self.p)
    }

    /// `1 + |ξ|^{2s}`.
    pub fn metric(&self) -> Multiplier {
        Multiplier::frac_laplacian_unchecked(self.grid, self.s).map(|m| 1.0 + m)
    }
}

/// `|u|^{p-1} u`.
pub fn signed_power(u: &RealField, p: f64) -> RealField {
    u.map(|v| v.abs().powf(p - 1.0) * v)
}

/// `‖u‖_s² / ‖u‖_{p+1}²`.
pub fn rayleigh_quotient(u: &RealField, s: f64, p: f64) -> Result<f64> {
    let denom = u.norm_lp(p + 1.0);
    if denom == 0.0 {
        return Err(Error::invalid("Rayleigh quotient of the zero field"));
    }
    Ok(sobolev_norm_squared(u, s)? / (denom * denom))
}

/// `J_s(u, ν) = ½‖u‖_s² - ν/(p+1) ∫|u|^{p+1}`.
pub fn functional_energy(u: &RealField, nu: f64, s: f64, p: f64) -> Result<f64> {
    let lp = u.norm_lp(p + 1.0);
    Ok(0.5 * sobolev_norm_squared(u, s)? - nu / (p + 1.0) * lp.powf(p + 1.0))
}

/// `(-Δ)^s u + u - ν |u|^{p-1} u`, the `L²` representative of `J_s'(u, ν)`.
/// Its `H^s` representative is obtained by dividing by `1 + |ξ|^{2s}`.
pub fn euler_lagrange_residual(u: &RealField, nu: f64, s: f64, p: f64) -> Result<RealField> {
    let a = Multiplier::metric(*u.grid(), s)?;
    let mut r = a.apply(u);
    r.axpy(-nu, &signed_power(u, p));
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Petviashvili,
    /// Gradient flow followed by a Petviashvili polish.
    GradientFlow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Bound on `‖(-Δ)^s u + u - ν u^p‖_{L²}`.
    pub residual_tol: f64,
    /// Bound on the sup-norm change of successive normalized iterates.
    pub step_tol: f64,
    /// Negative samples above this level are left alone.
    pub clip_floor: f64,
    /// Clipping stops once the step drops below this, so that the iteration
    /// settles on the discrete fixed point including its sub-resolution
    /// ringing.
    pub clip_until_step: f64,
    /// Pseudo-time step of the fallback gradient flow.
    pub flow_step: f64,
    pub allow_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 5000,
            residual_tol: 1e-9,
            step_tol: 1e-10,
            clip_floor: -1e-12,
            clip_until_step: 1e-6,
            flow_step: 0.5,
            allow_fallback: true,
        }
    }
}

/// Initial guess for [`solve_ground_state`].
#[derive(Debug, Clone)]
pub enum Init {
    /// `exp(-|x|²/(2w²))`.
    Gaussian { width: f64 },
    Field(RealField),
}

impl Init {
    fn materialize(&self, grid: GridSpec) -> Result<RealField> {
        match self {
            Init::Gaussian { width } => {
                if !(*width > 0.0) {
                    return Err(Error::invalid("Gaussian width must be positive"));
                }
                Ok(RealField::from_radial(grid, |r| (-0.5 * r * r / (width * width)).exp()))
            }
            Init::Field(f) => {
                grid.check_same(f.grid())?;
                if !f.values().iter().any(|&v| v > 0.0) {
                    return Err(Error::invalid("initial field must be positive somewhere"));
                }
                Ok(f.clone())
            }
        }
    }
}

/// A converged, normalized minimizer.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub problem: ProblemSpec,
    /// Unit `L^{p+1}` profile, maximum at the origin.
    pub u: RealField,
    pub nu: f64,
    /// `‖(-Δ)^s u + u - ν u^p‖_{L²}`.
    pub residual: f64,
    pub iterations: usize,
    pub lp1_norm: f64,
    /// `‖u‖_s²`; agrees with `nu` to solver accuracy.
    pub sobolev_norm_squared: f64,
    pub method: Method,
    /// `L¹` mass removed by positivity clipping, relative to `‖u‖_{L¹}`.
    pub clipped_mass: f64,
}

impl GroundState {
    pub fn grid(&self) -> &GridSpec {
        &self.problem.grid
    }

    /// `(r, u(r))` along the positive first axis.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        self.u.radial_ray()
    }

    /// Whether clipping removed more than `1e-8` of the mass.
    pub fn clipping_flagged(&self) -> bool {
        self.clipped_mass > 1e-8
    }

    /// N = 1 runs exist only as closed-form checks.
    pub fn is_one_dimensional_check(&self) -> bool {
        self.problem.dims() == 1
    }
}

struct Iterate {
    q: RealField,
    iterations: usize,
    clipped: f64,
}

fn clip(q: &mut RealField, floor: f64) -> f64 {
    let mut removed = 0.0;
    for v in q.values_mut() {
        if *v < floor {
            removed += -*v;
            *v = 0.0;
        }
    }
    removed
}

fn normalized(q: &RealField, p: f64) -> RealField {
    q.scaled(1.0 / q.norm_lp(p + 1.0))
}

fn normalized_residual(q: &RealField, a: &Multiplier, p: f64) -> f64 {
    // For u = Q/‖Q‖, ν = ‖Q‖^{p-1}: Au - ν u^p = (AQ - Q^p)/‖Q‖.
    let mut r = a.apply(q);
    r.axpy(-1.0, &signed_power(q, p));
    r.norm_l2() / q.norm_lp(p + 1.0)
}

fn petviashvili(problem: &ProblemSpec, q0: RealField, opts: &SolverOptions) -> Result<Iterate> {
    let a = problem.metric();
    let p = problem.p;
    let gamma = p / (p - 1.0);
    let mut q = symmetrize(&q0);
    let mut clipped = 0.0;
    let mut prev_u = normalized(&q, p);
    let mut best = f64::INFINITY;
    let mut stall = 0;
    let mut clipping = true;
    for it in 1..=opts.max_iter {
        let qp = signed_power(&q, p);
        let mut spec = q.to_spectral();
        let aqq = a.pairing_spectral(&spec, &spec);
        let qpq = qp.inner(&q);
        if !(aqq > 0.0 && qpq > 0.0) {
            return Err(Error::Diverged {
                what: "Petviashvili iteration",
                detail: format!("stabilizing ratio undefined at iteration {it}"),
            });
        }
        let factor = (aqq / qpq).powf(gamma);
        spec = qp.to_spectral();
        let inv = a.symbol();
        for (z, &m) in spec.coeffs_mut().iter_mut().zip(inv) {
            *z *= if m > 0.0 { factor / m } else { 0.0 };
        }
        q = symmetrize(&spec.to_real());
        if clipping {
            clipped += clip(&mut q, opts.clip_floor);
        }
        if !q.values().iter().all(|v| v.is_finite()) || q.norm_linf() == 0.0 {
            return Err(Error::Diverged {
                what: "Petviashvili iteration",
                detail: format!("iterate degenerated at iteration {it}"),
            });
        }
        let u = normalized(&q, p);
        let step = u.max_abs_diff(&prev_u);
        prev_u = u;
        clipping &= step >= opts.clip_until_step;
        if step < opts.step_tol {
            let res = normalized_residual(&q, &a, p);
            if res < opts.residual_tol {
                return Ok(Iterate { q, iterations: it, clipped });
            }
        }
        // Stall detection on the step size.
        if step < 0.999 * best {
            best = step;
            stall = 0;
        } else {
            stall += 1;
            if stall > 200 {
                return Err(Error::NotConverged {
                    what: "Petviashvili iteration",
                    iterations: it,
                    residual: normalized_residual(&q, &a, p),
                });
            }
        }
    }
    Err(Error::NotConverged {
        what: "Petviashvili iteration",
        iterations: opts.max_iter,
        residual: normalized_residual(&q, &a, p),
    })
}

/// `u ← (I + τA)^{-1}(u + τν u^p)`, renormalized, with `ν` the current
/// Rayleigh quotient. Stops once the residual drops below `target`.
fn gradient_flow(problem: &ProblemSpec, u0: RealField, opts: &SolverOptions, target: f64) -> Result<Iterate> {
    let a = problem.metric();
    let p = problem.p;
    let tau = opts.flow_step;
    let resolvent = a.map(|m| 1.0 / (1.0 + tau * m));
    let mut u = normalized(&symmetrize(&u0), p);
    let mut clipped = 0.0;
    for it in 1..=opts.max_iter {
        let nu = a.pairing(&u, &u);
        let mut rhs = u.clone();
        rhs.axpy(tau * nu, &signed_power(&u, p));
        let mut next = symmetrize(&resolvent.apply(&rhs));
        clipped += clip(&mut next, opts.clip_floor);
        u = normalized(&next, p);
        let nu = a.pairing(&u, &u);
        let mut r = a.apply(&u);
        r.axpy(-nu, &signed_power(&u, p));
        if r.norm_l2() < target {
            // Back to the Q scaling so that A Q ≈ Q^p.
            let q = u.scaled(nu.powf(1.0 / (p - 1.0)));
            return Ok(Iterate { q, iterations: it, clipped });
        }
    }
    Err(Error::NotConverged {
        what: "gradient flow",
        iterations: opts.max_iter,
        residual: normalized_residual(&u, &a, p),
    })
}

fn finish(problem: ProblemSpec, it: Iterate, method: Method) -> Result<GroundState> {
    let p = problem.p;
    let qnorm = it.q.norm_lp(p + 1.0);
    let u = recenter(&it.q.scaled(1.0 / qnorm));
    let nu = qnorm.powf(p - 1.0);
    let residual = euler_lagrange_residual(&u, nu, problem.s, p)?.norm_l2();
    let mass: f64 = u.values().iter().map(|v| v.abs()).sum();
    Ok(GroundState {
        sobolev_norm_squared: sobolev_norm_squared(&u, problem.s)?,
        lp1_norm: u.norm_lp(p + 1.0),
        clipped_mass: it.clipped / qnorm / mass.max(f64::MIN_POSITIVE),
        problem,
        u,
        nu,
        residual,
        iterations: it.iterations,
        method,
    })
}

/// Computes the normalized positive radial minimizer and `ν_s`.
pub fn solve_ground_state(problem: &ProblemSpec, init: &Init, opts: &SolverOptions) -> Result<GroundState> {
    let q0 = init.materialize(problem.grid)?;
    match petviashvili(problem, q0.clone(), opts) {
        Ok(it) => finish(*problem, it, Method::Petviashvili),
        Err(err) if !opts.allow_fallback => Err(err),
        Err(_) => {
            let flow = gradient_flow(problem, q0, opts, 1e-4)?;
            let polish = petviashvili(problem, flow.q, opts)?;
            let it = Iterate {
                iterations: flow.iterations + polish.iterations,
                clipped: flow.clipped + polish.clipped,
                q: polish.q,
            };
            finish(*problem, it, Method::GradientFlow)
        }
    }
}

/// The local (`s = 1`) minimizer `U_1`.
pub fn solve_local(problem: &ProblemSpec, opts: &SolverOptions) -> Result<GroundState> {
    if problem.s != 1.0 {
        return Err(Error::invalid(format!("solve_local needs s = 1 (got {})", problem.s)));
    }
    solve_ground_state(problem, &Init::Gaussian { width: 1.5 }, opts)
}

/// `ν` on the box `[-L, L)^N` and on the half box with the same spacing,
/// and their Richardson combination for a truncation error `∝ L^{-q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxExtrapolation {
    pub nu_full: f64,
    pub nu_half: f64,
    pub exponent: Option<f64>,
    pub nu_extrapolated: f64,
}

/// Removes the leading periodic-image error of `ν` for algebraically
/// decaying profiles (`s < 1`), whose images perturb `ν` at order
/// `L^{-(N+2s)}`. For `s = 1` the error is exponentially small and the
/// full-box value is returned.
pub fn box_extrapolated_nu(full: &GroundState, opts: &SolverOptions) -> Result<BoxExtrapolation> {
    let problem = full.problem;
    if problem.s >= 1.0 {
        return Ok(BoxExtrapolation {
            nu_full: full.nu,
            nu_half: full.nu,
            exponent: None,
            nu_extrapolated: full.nu,
        });
    }
    let g = problem.grid;
    if g.points() % 4 != 0 {
        return Err(Error::invalid("box extrapolation needs M divisible by 4"));
    }
    let half_grid = GridSpec::new(g.dims(), g.points() / 2, g.half_width() / 2.0)?;
    let half = solve_ground_state(&problem.with_grid(half_grid)?, &Init::Gaussian { width: 2.0 }, opts)?;
    let q = g.dims() as f64 + 2.0 * problem.s;
    let w = 2f64.powf(q);
    Ok(BoxExtrapolation {
        nu_full: full.nu,
        nu_half: half.nu,
        exponent: Some(q),
        nu_extrapolated: (w * full.nu - half.nu) / (w - 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    /// `u r^{N+2s}` flat over the window.
    Polynomial,
    /// `u r^{N+2s}` keeps falling: faster than any power.
    SuperPolynomial,
    /// Neither flat nor falling; the box is too small for the tail.
    TruncationDominated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub radii: Vec<f64>,
    /// `u(r) r^{N+2s}`.
    pub ratio: Vec<f64>,
    pub max_ratio: f64,
    /// `(max - min) / max` of the ratio over `[L/8, L/4]`.
    pub window_variation: f64,
    pub tail_flat: bool,
    pub kind: TailKind,
}

fn sample_ray(ray: &[(f64, f64)], r: f64) -> f64 {
    let h = ray[1].0 - ray[0].0;
    let t = r / h;
    let i = (t.floor() as usize).clamp(1, ray.len() - 3);
    let x = t - i as f64;
    let (y0, y1, y2, y3) = (ray[i - 1].1, ray[i].1, ray[i + 1].1, ray[i + 2].1);
    // Cubic Lagrange on nodes -1, 0, 1, 2.
    -x * (x - 1.0) * (x - 2.0) / 6.0 * y0 + (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0 * y1
        - (x + 1.0) * x * (x - 2.0) / 2.0 * y2
        + (x + 1.0) * x * (x - 1.0) / 6.0 * y3
}

/// Tabulates `u(r) r^{N+2s}` and classifies the tail over `[L/8, L/4]`.
pub fn decay_check(gs: &GroundState, radii: &[f64]) -> Result<DecayReport> {
    let l = gs.grid().half_width();
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < 0.5 * l)) {
        return Err(Error::invalid("radii must lie in (0, L/2)"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be strictly increasing"));
    }
    let q = gs.problem.dims() as f64 + 2.0 * gs.problem.s;
    let ray = gs.profile();
    let ratio: Vec<f64> = radii.iter().map(|&r| sample_ray(&ray, r) * r.powf(q)).collect();
    let max_ratio = ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let window: Vec<f64> = radii
        .iter()
        .zip(&ratio)
        .filter(|(r, _)| **r >= l / 8.0 - 1e-12 && **r <= l / 4.0 + 1e-12)
        .map(|(_, v)| *v)
        .collect();
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let window_variation = if window.is_empty() || hi <= 0.0 { f64::INFINITY } else { (hi - lo) / hi };
    let tail_flat = window_variation < 0.25;
    // Logarithmic slope of the ratio at the outer end of the window.
    let window_radii: Vec<f64> = radii.iter().copied().filter(|r| *r >= l / 8.0 - 1e-12 && *r <= l / 4.0 + 1e-12).collect();
    let falling = window.len() >= 2 && {
        let k = window.len() - 1;
        let slope = (window[k] / window[k - 1]).ln() / (window_radii[k] / window_radii[k - 1]).ln();
        slope < -1.0
    };
    let kind = if tail_flat {
        TailKind::Polynomial
    } else if falling {
        TailKind::SuperPolynomial
    } else {
        TailKind::TruncationDominated
    };
    Ok(DecayReport { radii: radii.to_vec(), ratio, max_ratio, window_variation, tail_flat, kind })
}

/// Grid radii of the first axis inside `[L/8, L/4]`.
pub fn tail_window_radii(grid: &GridSpec) -> Vec<f64> {
    let l = grid.half_width();
    let h = grid.spacing();
    let first = (l / 8.0 / h).ceil() as usize;
    let last = (l / 4.0 / h).floor() as usize;
    (first..=last).map(|k| k as f64 * h).collect()
}
