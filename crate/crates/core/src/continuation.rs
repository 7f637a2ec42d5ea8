//! The branch `s ↦ U_1 + ω_s` of radial solutions near `s = 1`.
//!
//! `Φ_s(ω)` is the `H^s` Riesz representative of `J_s'(U_1 + ω, ν_s)`:
//!
//! ```text
//! Φ_s(ω) = (U_1 + ω) - ν A^{-1} |U_1 + ω|^{p-1} (U_1 + ω),   A = 1 + |ξ|^{2s}.
//! ```
//!
//! Its derivative at zero is `A^{-1}L` with `L = A - pν U_1^{p-1}`, and the
//! fixed-point map is `T(ω) = -(Φ_s'(0))^{-1}(Φ_s(0) + Q_s(ω))`, which
//! equals the chord step `ω - (Φ_s'(0))^{-1}Φ_s(ω)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use crate::ground_state::{signed_power, solve_ground_state, GroundState, Init, SolverOptions};
use crate::krylov::{self, SolveOptions};
use crate::spectral::{check_order, Multiplier};
use crate::symmetry::{recenter, symmetrize};

/// Below this, `α_s` is treated as the anchor's own solver accuracy.
pub const ALPHA_FLOOR: f64 = 1e-8;

/// `max{1 - s, |ν_1 - ν_s|}`.
pub fn alpha(s: f64, nu_1: f64, nu_s: f64) -> f64 {
    (1.0 - s).max((nu_1 - nu_s).abs())
}

/// `Φ_s` and its linearization at `ω = 0` for a fixed anchor `U_1`.
#[derive(Debug, Clone)]
pub struct PhiMap<'a> {
    anchor: &'a GroundState,
    s: f64,
    nu: f64,
    metric: Multiplier,
    inv_metric: Multiplier,
    half: Multiplier,
    inv_half: Multiplier,
    /// `pν U_1^{p-1}`.
    potential: Vec<f64>,
}

/// Output of [`PhiMap::invert`].
#[derive(Debug, Clone)]
pub struct Inversion {
    pub w: RealField,
    pub iterations: usize,
    pub rel_residual: f64,
    /// `‖w‖_s / ‖f‖_s`, zero for `f = 0`.
    pub norm_ratio: f64,
}

impl<'a> PhiMap<'a> {
    pub fn new(anchor: &'a GroundState, s: f64, nu: f64) -> Result<Self> {
        if anchor.problem.s != 1.0 {
            return Err(Error::invalid(format!("the anchor must be the s = 1 minimizer (got s = {})", anchor.problem.s)));
        }
        check_order(s)?;
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::invalid(format!("nu must be positive (got {nu})")));
        }
        let grid = *anchor.grid();
        let metric = Multiplier::frac_laplacian(grid, s)?.map(|m| 1.0 + m);
        let p = anchor.problem.p;
        Ok(PhiMap {
            anchor,
            s,
            nu,
            inv_metric: metric.map(|m| 1.0 / m),
            half: metric.map(f64::sqrt),
            inv_half: metric.map(|m| 1.0 / m.sqrt()),
            metric,
            potential: anchor.u.values().iter().map(|&v| p * nu * v.abs().powf(p - 1.0)).collect(),
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn anchor(&self) -> &GroundState {
        self.anchor
    }

    pub fn grid(&self) -> &GridSpec {
        self.anchor.grid()
    }

    /// `‖φ‖_s`.
    pub fn norm(&self, phi: &RealField) -> f64 {
        self.metric.pairing(phi, phi).max(0.0).sqrt()
    }

    /// `U_1 + ω`.
    pub fn solution(&self, omega: &RealField) -> Result<RealField> {
        self.grid().check_same(omega.grid())?;
        Ok(self.anchor.u.add(omega))
    }

    pub fn phi(&self, omega: &RealField) -> Result<RealField> {
        let v = self.solution(omega)?;
        let mut out = v.clone();
        out.axpy(-self.nu, &self.inv_metric.apply(&signed_power(&v, self.anchor.problem.p)));
        Ok(out)
    }

    /// `Φ_s'(0)[w] = w - pν A^{-1}(U_1^{p-1} w)`.
    pub fn derivative(&self, w: &RealField) -> Result<RealField> {
        self.grid().check_same(w.grid())?;
        let weighted = RealField::from_vec_unchecked(
            *self.grid(),
            w.values().iter().zip(&self.potential).map(|(a, b)| a * b).collect(),
        );
        let mut out = w.clone();
        out.axpy(-1.0, &self.inv_metric.apply(&weighted));
        Ok(out)
    }

    /// `Q_s(ω) = Φ_s(ω) - Φ_s(0) - Φ_s'(0)[ω]`, evaluated pointwise as
    /// `ν A^{-1}(U_1^p + pU_1^{p-1}ω - |U_1+ω|^{p-1}(U_1+ω))` to avoid the
    /// cancellation of the three-term difference.
    pub fn remainder(&self, omega: &RealField) -> Result<RealField> {
        self.grid().check_same(omega.grid())?;
        let p = self.anchor.problem.p;
        let taylor = RealField::from_vec_unchecked(
            *self.grid(),
            self.anchor
                .u
                .values()
                .iter()
                .zip(omega.values())
                .map(|(&u, &w)| {
                    let v = u + w;
                    let up = u.abs().powf(p - 1.0);
                    up * u + p * up * w - v.abs().powf(p - 1.0) * v
                })
                .collect(),
        );
        Ok(self.inv_metric.apply(&taylor).scaled(self.nu))
    }

    /// Solves `Φ_s'(0)[w] = f` on radial fields.
    ///
    /// Equivalently `J_s''(U_1, ν)[w, ·] = ⟨f, ·⟩_s`, i.e. `Lw = Af`. The
    /// symmetric but indefinite system `A^{-1/2} L A^{-1/2} y = A^{1/2} f`,
    /// `w = A^{-1/2} y`, is solved by MINRES on the group-averaged subspace.
    pub fn invert(&self, f: &RealField, opts: SolveOptions) -> Result<Inversion> {
        self.grid().check_same(f.grid())?;
        let grid = *self.grid();
        let f = symmetrize(f);
        let fnorm = self.norm(&f);
        let rhs = self.half.apply(&f).into_values();
        let op = |v: &[f64]| -> Vec<f64> {
            let x = self.inv_half.apply(&symmetrize(&RealField::from_vec_unchecked(grid, v.to_vec())));
            let mut lx = self.metric.apply(&x);
            for ((o, &w), &xv) in lx.values_mut().iter_mut().zip(&self.potential).zip(x.values()) {
                *o -= w * xv;
            }
            symmetrize(&self.inv_half.apply(&lx)).into_values()
        };
        let sol = krylov::minres(op, &rhs, opts)?;
        let w = self.inv_half.apply(&RealField::from_vec_unchecked(grid, sol.x));
        let norm_ratio = if fnorm > 0.0 { self.norm(&w) / fnorm } else { 0.0 };
        Ok(Inversion { w, iterations: sol.iterations, rel_residual: sol.rel_residual, norm_ratio })
    }

    /// `T(ω) = ω - (Φ_s'(0))^{-1} Φ_s(ω)`, restricted to radial fields.
    pub fn fixed_point_map(&self, omega: &RealField, opts: SolveOptions) -> Result<RealField> {
        let step = self.invert(&self.phi(omega)?, opts)?;
        Ok(symmetrize(&omega.sub(&step.w)))
    }

    /// `‖(Φ_s(εw) - Φ_s(0))/ε - Φ_s'(0)[w]‖_s`.
    pub fn derivative_defect(&self, w: &RealField, eps: f64) -> Result<f64> {
        let zero = RealField::zeros(*self.grid());
        let mut quotient = self.phi(&w.scaled(eps))?.sub(&self.phi(&zero)?);
        quotient.scale_mut(1.0 / eps);
        Ok(self.norm(&quotient.sub(&self.derivative(w)?)))
    }
}

/// A smooth random radial field with unit `L∞` norm.
pub fn random_radial(grid: GridSpec, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..3.0), rng.gen_range(0.7..2.5)))
        .collect();
    let f = RealField::from_radial(grid, |r| {
        bumps.iter().map(|&(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum()
    });
    let m = f.norm_linf();
    f.scaled(1.0 / m)
}

/// `Φ_s(ω)` for the anchor `U_1`.
pub fn phi_map(anchor: &GroundState, omega: &RealField, s: f64, nu: f64) -> Result<RealField> {
    PhiMap::new(anchor, s, nu)?.phi(omega)
}

/// `Q_s(ω)` for the anchor `U_1`.
pub fn q_remainder(anchor: &GroundState, omega: &RealField, s: f64, nu: f64) -> Result<RealField> {
    PhiMap::new(anchor, s, nu)?.remainder(omega)
}

/// `(Φ_s'(0))^{-1} f` for the anchor `U_1`.
pub fn invert_linearized_at_u1(anchor: &GroundState, f: &RealField, s: f64, nu: f64, opts: SolveOptions) -> Result<Inversion> {
    PhiMap::new(anchor, s, nu)?.invert(f, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchOptions {
    /// Bound on `‖ω_{k+1} - ω_k‖_s`.
    pub tol: f64,
    pub max_iter: usize,
    /// Ball radius factor: `‖ω‖_s ≤ r_0 α_s`.
    pub r0: f64,
    pub solve: SolveOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            tol: 1e-11,
            max_iter: 200,
            r0: 10.0,
            solve: SolveOptions { rel_tol: 1e-12, max_iter: 2000 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub s: f64,
    #[serde(skip)]
    pub omega: Option<RealField>,
    pub nu_used: f64,
    /// `‖ω - T(ω)‖_s` at the accepted `ω`.
    pub fixed_point_residual: f64,
    pub omega_norm: f64,
    pub alpha: f64,
    /// `‖ω‖_s / max(α_s, ALPHA_FLOOR)`.
    pub ratio: f64,
    /// Geometric mean of successive-difference ratios above the noise floor.
    pub contraction_rate: f64,
    pub iterations: usize,
    pub in_ball: bool,
    pub linf_gap_vs_direct: Option<f64>,
}

impl BranchPoint {
    pub fn omega(&self) -> &RealField {
        self.omega.as_ref().expect("branch point carries its correction")
    }
}

/// Runs the fixed-point iteration of `map` from `omega_init`.
pub fn branch_step(map: &PhiMap<'_>, omega_init: &RealField, opts: &BranchOptions) -> Result<BranchPoint> {
    map.grid().check_same(omega_init.grid())?;
    let mut omega = symmetrize(omega_init);
    let mut diffs: Vec<f64> = Vec::new();
    let mut growth = 0;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = map.fixed_point_map(&omega, opts.solve)?;
        let d = map.norm(&next.sub(&omega));
        omega = next;
        if !d.is_finite() {
            return Err(Error::Diverged { what: "branch iteration", detail: "non-finite iterate".into() });
        }
        if let Some(&prev) = diffs.last() {
            growth = if d >= prev { growth + 1 } else { 0 };
        }
        diffs.push(d);
        if d < opts.tol {
            converged = true;
            break;
        }
        if growth >= 5 || d > 1e6 {
            return Err(Error::Diverged {
                what: "branch iteration",
                detail: format!("successive differences grew to {d:.3e} after {} iterations", diffs.len()),
            });
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "branch iteration",
            iterations: opts.max_iter,
            residual: diffs.last().copied().unwrap_or(f64::NAN),
        });
    }
    let rate = contraction_rate(&diffs, opts.tol);
    if rate >= 1.0 {
        return Err(Error::Diverged {
            what: "branch iteration",
            detail: format!("observed contraction rate {rate:.3} is not below 1"),
        });
    }
    let residual = map.norm(&map.fixed_point_map(&omega, opts.solve)?.sub(&omega));
    let omega_norm = map.norm(&omega);
    let a = alpha(map.s, map.anchor.nu, map.nu);
    let ratio = omega_norm / a.max(ALPHA_FLOOR);
    Ok(BranchPoint {
        s: map.s,
        nu_used: map.nu,
        fixed_point_residual: residual,
        omega_norm,
        alpha: a,
        ratio,
        contraction_rate: rate,
        iterations: diffs.len(),
        in_ball: ratio <= opts.r0,
        linf_gap_vs_direct: None,
        omega: Some(omega),
    })
}

fn contraction_rate(diffs: &[f64], tol: f64) -> f64 {
    let floor = 100.0 * tol;
    let ratios: Vec<f64> = diffs
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
}

/// Where `ν_s` comes from along a branch.
#[derive(Debug, Clone)]
pub enum NuSource {
    /// `(s, ν_s)` pairs from earlier ground-state solves on the anchor grid.
    Measured(Vec<(f64, f64)>),
    /// Re-solve the ground state at every `s`.
    Direct(SolverOptions),
}

impl NuSource {
    fn lookup(table: &[(f64, f64)], s: f64) -> Result<f64> {
        table
            .iter()
            .find(|(t, _)| (t - s).abs() <= 1e-12)
            .map(|&(_, nu)| nu)
            .ok_or_else(|| Error::invalid(format!("no measured nu for s = {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFailure {
    pub s: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub anchor: GroundState,
    /// Ordered by decreasing `s`.
    pub points: Vec<BranchPoint>,
    /// `max ‖ω‖_s / α_s` over the points.
    pub r0_estimate: f64,
    /// The first `s` at which the iteration failed, if any.
    pub failure: Option<BranchFailure>,
}

impl Branch {
    /// Smallest `s` with a converged point.
    pub fn smallest_s(&self) -> Option<f64> {
        self.points.last().map(|p| p.s)
    }
}

/// Natural-parameter continuation in `s` with warm starts.
///
/// Stops at the first `s` where `ν_s` or the fixed point cannot be
/// obtained and returns the branch up to there.
pub fn trace_branch(anchor: &GroundState, s_values: &[f64], nu_source: &NuSource, opts: &BranchOptions) -> Result<Branch> {
    if anchor.problem.s != 1.0 {
        return Err(Error::invalid("the anchor must be the s = 1 minimizer"));
    }
    if s_values.first() != Some(&1.0) {
        return Err(Error::invalid("s values must start at 1"));
    }
    for w in s_values.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::invalid("s values must be strictly decreasing"));
        }
    }
    for &s in s_values {
        check_order(s)?;
    }
    if let NuSource::Measured(table) = nu_source {
        for &s in s_values {
            NuSource::lookup(table, s)?;
        }
    }
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut failure = None;
    let mut omega = RealField::zeros(*anchor.grid());
    let mut direct_u = anchor.u.clone();
    for &s in s_values {
        let outcome = (|| -> Result<BranchPoint> {
            let (nu, direct) = match nu_source {
                NuSource::Measured(table) => (NuSource::lookup(table, s)?, None),
                NuSource::Direct(solver) => {
                    let problem = anchor.problem.with_order(s)?;
                    let gs = solve_ground_state(&problem, &Init::Field(direct_u.clone()), solver)?;
                    (gs.nu, Some(gs))
                }
            };
            let map = PhiMap::new(anchor, s, nu)?;
            let mut point = branch_step(&map, &omega, opts)?;
            if let Some(gs) = direct {
                point.linf_gap_vs_direct = Some(uniqueness_test(anchor, &gs, &point, f64::INFINITY)?.linf_gap);
                direct_u = gs.u;
            }
            Ok(point)
        })();
        match outcome {
            Ok(point) => {
                omega = point.omega().clone();
                points.push(point);
            }
            Err(e) => {
                failure = Some(BranchFailure { s, reason: e.to_string() });
                break;
            }
        }
    }
    let r0_estimate = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(Branch { anchor: anchor.clone(), points, r0_estimate, failure })
}

/// Largest observed `‖T(a) - T(b)‖_s / ‖a - b‖_s` over random radial
/// pairs in the ball of radius `radius` around `center`.
pub fn lipschitz_estimate(
    map: &PhiMap<'_>,
    center: &RealField,
    radius: f64,
    samples: usize,
    seed: u64,
    solve: SolveOptions,
) -> Result<f64> {
    let grid = *map.grid();
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let pick = |j: u64| {
            let f = random_radial(grid, seed.wrapping_mul(31).wrapping_add(2 * k as u64 + j));
            let n = map.norm(&f);
            let scale = radius * (0.25 + 0.75 * ((k as f64 + 0.5 * j as f64) / samples.max(1) as f64));
            center.add(&f.scaled(scale / n))
        };
        let (a, b) = (pick(0), pick(1));
        let gap = map.norm(&a.sub(&b));
        if gap == 0.0 {
            continue;
        }
        let ta = map.fixed_point_map(&a, solve)?;
        let tb = map.fixed_point_map(&b, solve)?;
        worst = worst.max(map.norm(&ta.sub(&tb)) / gap);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub s: f64,
    /// `‖u_direct - (U_1 + ω_s)‖_{L∞}` after recentering.
    pub linf_gap: f64,
    pub hs_gap: f64,
    pub nu_gap: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Compares a direct minimizer with the branch solution at the same `s`.
pub fn uniqueness_test(anchor: &GroundState, direct: &GroundState, point: &BranchPoint, tol: f64) -> Result<UniquenessReport> {
    direct.grid().check_same(anchor.grid())?;
    if (direct.problem.s - point.s).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "direct solution has s = {} but the branch point has s = {}",
            direct.problem.s, point.s
        )));
    }
    if direct.problem.p != anchor.problem.p {
        return Err(Error::invalid("direct solution and anchor have different p"));
    }
    let omega = point.omega.as_ref().ok_or_else(|| Error::invalid("branch point has no correction field"))?;
    let branch_u = anchor.u.add(omega);
    let diff = recenter(&direct.u).sub(&branch_u);
    let metric = direct.problem.metric();
    let linf_gap = diff.norm_linf();
    let hs_gap = metric.pairing(&diff, &diff).max(0.0).sqrt();
    let nu_gap = (direct.nu - point.nu_used).abs();
    Ok(UniquenessReport {
        s: point.s,
        linf_gap,
        hs_gap,
        nu_gap,
        tol,
        pass: linf_gap < tol && hs_gap < tol && nu_gap < tol,
    })
}
