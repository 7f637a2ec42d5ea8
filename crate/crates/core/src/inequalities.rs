//! Elementary inequalities controlling `|ξ|^{2s} - |ξ|^{2σ̄}`.
//!
//! For `σ̄, s ∈ (0, 1]` and `δ > 2|σ̄ - s|`, with
//! `C_{σ̄,δ} = (2σ̄e)^{-1} + (δe)^{-1}`,
//!
//! ```text
//! ||ξ|^{2s} - |ξ|^{2σ̄}| ≤ 4 C_{σ̄,δ} |σ̄ - s| (1 + |ξ|^{2(σ̄+δ)})
//! ```
//!
//! follows from the scalar bounds implemented below. Comparisons accept a
//! few ulps of excess so that the analytic equality cases are not reported
//! as violations.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealField;
use crate::spectral::Multiplier;

const ULP_SLACK: f64 = 8.0 * f64::EPSILON;

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ULP_SLACK * lhs.abs().max(rhs.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierGapParams {
    sigma_bar: f64,
    s: f64,
    delta: f64,
}

impl MultiplierGapParams {
    pub fn new(sigma_bar: f64, s: f64, delta: f64) -> Result<Self> {
        let unit = |v: f64| v.is_finite() && v > 0.0 && v <= 1.0;
        if !unit(sigma_bar) || !unit(s) {
            return Err(Error::invalid(format!(
                "σ̄ and s must lie in (0,1] (got σ̄={sigma_bar}, s={s})"
            )));
        }
        if !(delta.is_finite() && delta > 2.0 * (sigma_bar - s).abs()) {
            return Err(Error::invalid(format!(
                "δ must exceed 2|σ̄ - s| = {} (got {delta})",
                2.0 * (sigma_bar - s).abs()
            )));
        }
        Ok(MultiplierGapParams {
            sigma_bar,
            s,
            delta,
        })
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_bar
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `C_{σ̄,δ} = (2σ̄e)^{-1} + (δe)^{-1}`.
    pub fn constant(&self) -> f64 {
        1.0 / (2.0 * self.sigma_bar * E) + 1.0 / (self.delta * E)
    }

    pub fn gap(&self) -> f64 {
        (self.sigma_bar - self.s).abs()
    }
}

/// Both sides of a scalar inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Sides {
    fn new(lhs: f64, rhs: f64) -> Self {
        Sides {
            lhs,
            rhs,
            holds: within(lhs, rhs),
        }
    }
}

/// Pointwise multiplier bound at `|ξ| = xi_abs`.
pub fn check_multiplier_inequality(xi_abs: f64, params: &MultiplierGapParams) -> Result<Sides> {
    if !(xi_abs.is_finite() && xi_abs > 0.0) {
        return Err(Error::invalid(format!("|ξ| must be positive (got {xi_abs})")));
    }
    let MultiplierGapParams {
        sigma_bar,
        s,
        delta,
    } = *params;
    let lhs = (xi_abs.powf(2.0 * s) - xi_abs.powf(2.0 * sigma_bar)).abs();
    let rhs = 4.0 * params.constant() * params.gap() * (1.0 + xi_abs.powf(2.0 * (sigma_bar + delta)));
    Ok(Sides::new(lhs, rhs))
}

/// `(1 + τ^{2σ̄+δ}) τ^{2|σ̄-s|} ≤ 2 (1 + τ^{2(σ̄+δ)})` for `τ ≥ 0`.
pub fn power_mix_bound(tau: f64, params: &MultiplierGapParams) -> Sides {
    let MultiplierGapParams { sigma_bar, delta, .. } = *params;
    let lhs = (1.0 + tau.powf(2.0 * sigma_bar + delta)) * tau.powf(2.0 * params.gap());
    let rhs = 2.0 * (1.0 + tau.powf(2.0 * (sigma_bar + delta)));
    Sides::new(lhs, rhs)
}

/// `|e^t - 1| ≤ |t| e^{|t|}`.
pub fn exp_increment_bound(t: f64) -> Sides {
    Sides::new(t.exp_m1().abs(), t.abs() * t.abs().exp())
}

/// `|τ^{2σ̄} log τ| ≤ (2σ̄e)^{-1}` on `τ ∈ (0, 1)`; equality at `τ = e^{-1/(2σ̄)}`.
pub fn small_tau_log_bound(tau: f64, sigma_bar: f64) -> Sides {
    Sides::new(
        (tau.powf(2.0 * sigma_bar) * tau.ln()).abs(),
        1.0 / (2.0 * sigma_bar * E),
    )
}

/// `|τ^{-δ} log τ| ≤ (δe)^{-1}` on `τ ≥ 1`; equality at `τ = e^{1/δ}`.
pub fn large_tau_log_bound(tau: f64, delta: f64) -> Sides {
    Sides::new((tau.powf(-delta) * tau.ln()).abs(), 1.0 / (delta * E))
}

/// `|τ^{2σ̄} log τ| ≤ C_{σ̄,δ} (1 + τ^{2σ̄+δ})` for `τ > 0`.
pub fn log_power_bound(tau: f64, params: &MultiplierGapParams) -> Sides {
    let MultiplierGapParams { sigma_bar, delta, .. } = *params;
    Sides::new(
        (tau.powf(2.0 * sigma_bar) * tau.ln()).abs(),
        params.constant() * (1.0 + tau.powf(2.0 * sigma_bar + delta)),
    )
}

/// Tally for one inequality over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityTally {
    pub name: String,
    pub evaluated: u64,
    pub violations: u64,
    /// Smallest `rhs - lhs` seen.
    pub worst_slack: f64,
    /// Smallest `(rhs - lhs) / rhs` seen among samples with `rhs > 0`.
    pub worst_relative_slack: f64,
    /// Sample attaining `worst_relative_slack`: `[σ̄, s, δ, argument]`.
    pub worst_point: [f64; 4],
}

impl InequalityTally {
    fn new(name: &str) -> Self {
        InequalityTally {
            name: name.to_string(),
            evaluated: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            worst_relative_slack: f64::INFINITY,
            worst_point: [f64::NAN; 4],
        }
    }

    fn record(&mut self, sides: Sides, params: &MultiplierGapParams, arg: f64) {
        self.evaluated += 1;
        if !sides.holds {
            self.violations += 1;
        }
        let slack = sides.rhs - sides.lhs;
        self.worst_slack = self.worst_slack.min(slack);
        if sides.rhs > 0.0 && slack / sides.rhs < self.worst_relative_slack {
            self.worst_relative_slack = slack / sides.rhs;
            self.worst_point = [params.sigma_bar, params.s, params.delta, arg];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub samples: u64,
    pub seed: u64,
    pub tallies: Vec<InequalityTally>,
    /// `|lhs - rhs|` of the small-τ log bound at its analytic extremum,
    /// maximised over the sampled `σ̄`.
    pub extremal_equality_gap: f64,
}

impl InequalityReport {
    pub fn total_violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn tally(&self, name: &str) -> Option<&InequalityTally> {
        self.tallies.iter().find(|t| t.name == name)
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> MultiplierGapParams {
    // Keep σ̄, s away from 0 so C_{σ̄,δ} stays representable.
    let sigma_bar = rng.gen_range(1e-3..=1.0);
    let s = rng.gen_range(1e-3..=1.0);
    let floor = 2.0 * f64::abs(sigma_bar - s);
    let delta = floor + rng.gen_range(1e-6..=2.0);
    MultiplierGapParams::new(sigma_bar, s, delta).expect("sampled parameters satisfy δ > 2|σ̄-s|")
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Evaluates every bound at `samples` random points plus the analytic
/// extremal points.
pub fn elementary_inequality_suite(samples: u64, seed: u64) -> Result<InequalityReport> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut power_mix = InequalityTally::new("power_mix");
    let mut exp_inc = InequalityTally::new("exp_increment");
    let mut small_log = InequalityTally::new("small_tau_log");
    let mut large_log = InequalityTally::new("large_tau_log");
    let mut log_power = InequalityTally::new("log_power");
    let mut multiplier = InequalityTally::new("multiplier_gap");
    let mut equality_gap = 0.0f64;

    for _ in 0..samples {
        let params = random_params(&mut rng);
        let tau = log_uniform(&mut rng, 1e-6, 1e6);
        let tau_small = log_uniform(&mut rng, 1e-6, 1.0);
        let tau_large = log_uniform(&mut rng, 1.0, 1e6);
        let t = rng.gen_range(-20.0..=20.0);

        power_mix.record(power_mix_bound(tau, &params), &params, tau);
        exp_inc.record(exp_increment_bound(t), &params, t);
        small_log.record(small_tau_log_bound(tau_small, params.sigma_bar), &params, tau_small);
        large_log.record(large_tau_log_bound(tau_large, params.delta), &params, tau_large);
        log_power.record(log_power_bound(tau, &params), &params, tau);
        multiplier.record(check_multiplier_inequality(tau, &params)?, &params, tau);

        // Analytic extremal points of the same parameter draw.
        let tau_min = (-1.0 / (2.0 * params.sigma_bar)).exp();
        let tau_max = (1.0 / params.delta).exp();
        let at_min = small_tau_log_bound(tau_min, params.sigma_bar);
        equality_gap = equality_gap.max((at_min.lhs - at_min.rhs).abs());
        small_log.record(at_min, &params, tau_min);
        large_log.record(large_tau_log_bound(tau_max, params.delta), &params, tau_max);
        log_power.record(log_power_bound(tau_min, &params), &params, tau_min);
        power_mix.record(power_mix_bound(0.0, &params), &params, 0.0);
        power_mix.record(power_mix_bound(1.0, &params), &params, 1.0);
        multiplier.record(check_multiplier_inequality(1.0, &params)?, &params, 1.0);
    }
    let unit = MultiplierGapParams::new(1.0, 1.0, 1.0)?;
    exp_inc.record(exp_increment_bound(0.0), &unit, 0.0);

    Ok(InequalityReport {
        samples,
        seed,
        tallies: vec![power_mix, exp_inc, small_log, large_log, log_power, multiplier],
        extremal_equality_gap: equality_gap,
    })
}

/// Both sides of the `L²` multiplier-approximation bound for a field:
/// `‖(-Δ)^{σ̄} u - (-Δ)^s u‖ ≤ 4 C_{σ̄,δ} |σ̄-s| ‖(1 + |ξ|^{2(σ̄+δ)}) û‖`.
pub fn multiplier_approximation(u: &RealField, params: &MultiplierGapParams) -> Sides {
    let g = *u.grid();
    let MultiplierGapParams {
        sigma_bar,
        s,
        delta,
    } = *params;
    let diff = Multiplier::from_xi_squared(g, 0.0, |xi2| {
        if xi2 == 0.0 {
            0.0
        } else {
            xi2.powf(sigma_bar) - xi2.powf(s)
        }
    });
    let weight = Multiplier::from_xi_squared(g, 1.0, |xi2| 1.0 + xi2.powf(sigma_bar + delta));
    let lhs = diff.map(|m| m * m).pairing(u, u).sqrt();
    let rhs = 4.0 * params.constant() * params.gap() * weight.map(|m| m * m).pairing(u, u).sqrt();
    Sides::new(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_frequency_has_no_gap() {
        let p = MultiplierGapParams::new(0.7, 0.5, 0.5).unwrap();
        let sides = check_multiplier_inequality(1.0, &p).unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert!(sides.holds && sides.rhs > 0.0);
    }

    #[test]
    fn worked_example_at_xi_two() {
        let p = MultiplierGapParams::new(1.0, 0.9, 0.3).unwrap();
        // Independent arithmetic: C = 1/(2e) + 1/(0.3e).
        let c = 1.0 / (2.0 * E) + 1.0 / (0.3 * E);
        assert_relative_eq!(p.constant(), c, max_relative = 1e-15);
        assert_relative_eq!(c, 1.4102, epsilon = 1e-4);
        let sides = check_multiplier_inequality(2.0, &p).unwrap();
        assert_relative_eq!(sides.lhs, (4.0 - 2f64.powf(1.8)), max_relative = 1e-14);
        assert_relative_eq!(sides.lhs, 0.5178, epsilon = 1e-4);
        assert_relative_eq!(sides.rhs, 3.98, epsilon = 5e-3);
        assert!(sides.holds);
    }

    #[test]
    fn equal_orders_are_degenerate() {
        let p = MultiplierGapParams::new(0.6, 0.6, 0.1).unwrap();
        let sides = check_multiplier_inequality(3.7, &p).unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert_eq!(sides.rhs, 0.0);
        assert!(sides.holds);
    }

    #[test]
    fn rejects_narrow_delta() {
        assert!(MultiplierGapParams::new(1.0, 0.9, 0.19).is_err());
        assert!(MultiplierGapParams::new(1.0, 0.9, 0.2000001).is_ok());
        assert!(MultiplierGapParams::new(0.0, 0.9, 3.0).is_err());
        assert!(MultiplierGapParams::new(1.2, 0.9, 3.0).is_err());
        let p = MultiplierGapParams::new(1.0, 0.9, 0.3).unwrap();
        assert!(check_multiplier_inequality(0.0, &p).is_err());
    }

    #[test]
    fn exp_bound_is_tight_at_zero() {
        let sides = exp_increment_bound(0.0);
        assert_eq!((sides.lhs, sides.rhs), (0.0, 0.0));
        assert!(sides.holds);
    }

    #[test]
    fn small_tau_extremum_is_attained() {
        let sigma_bar: f64 = 0.5;
        let tau = (-1.0 / (2.0 * sigma_bar)).exp();
        let sides = small_tau_log_bound(tau, sigma_bar);
        assert_relative_eq!(sides.lhs, 1.0 / E, max_relative = 1e-15);
        assert!((sides.lhs - sides.rhs).abs() < 1e-12);
        assert!(sides.holds);
    }

    #[test]
    fn power_mix_at_origin() {
        let p = MultiplierGapParams::new(0.8, 0.5, 0.7).unwrap();
        let sides = power_mix_bound(0.0, &p);
        assert_eq!(sides.lhs, 0.0);
        assert_eq!(sides.rhs, 2.0);
    }

    #[test]
    fn scalar_bounds_hold_across_the_suite() {
        let report = elementary_inequality_suite(20_000, 7).unwrap();
        for name in ["power_mix", "exp_increment", "small_tau_log", "large_tau_log", "log_power"] {
            assert_eq!(report.tally(name).unwrap().violations, 0, "{report:#?}");
        }
        assert!(report.extremal_equality_gap < 1e-12);
        assert!(elementary_inequality_suite(0, 1).is_err());
    }

    #[test]
    fn multiplier_bound_fails_below_unit_frequency_for_tiny_s() {
        // For |ξ| < 1 the chain of estimates needs |ξ|^{-2|σ̄-s|}, not
        // |ξ|^{2|σ̄-s|}; with s ≪ σ̄ and large δ the stated constant is short.
        let p = MultiplierGapParams::new(0.4215, 0.00206, 2.7018).unwrap();
        let sides = check_multiplier_inequality(0.00536, &p).unwrap();
        assert!(!sides.holds, "{sides:?}");
        assert!(sides.lhs > 0.966 && sides.rhs < 0.961);
        // The same parameters are fine at and above |ξ| = 1.
        for xi in [1.0, 1.5, 10.0, 1e4] {
            assert!(check_multiplier_inequality(xi, &p).unwrap().holds);
        }
    }
}
