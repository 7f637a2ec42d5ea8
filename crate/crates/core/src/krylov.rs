//! Matrix-free Krylov solvers on plain `f64` vectors: preconditioned
//! conjugate gradients, MINRES and a Lanczos process with full
//! reorthogonalization.
//!
//! Operators are closures `&[f64] -> Vec<f64>` and must be symmetric with
//! respect to the Euclidean dot product.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`.
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(y: &mut [f64], alpha: f64) {
    for v in y.iter_mut() {
        *v *= alpha;
    }
}

/// Removes from `v` its components along the orthonormal `basis` (twice,
/// for numerical orthogonality).
pub fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            axpy(v, -c, q);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rel_tol: 1e-10,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖`, recomputed from the returned `x`.
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for SPD `op`; `precond` applies an
/// SPD approximation of the inverse.
pub fn conjugate_gradient(
    mut op: impl FnMut(&[f64]) -> Vec<f64>,
    mut precond: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: SolveOptions,
) -> Result<Solution> {
    let bnorm = norm(b);
    let n = b.len();
    if bnorm == 0.0 {
        return Ok(Solution { x: vec![0.0; n], iterations: 0, rel_residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        let ap = op(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown {
                what: "conjugate gradients",
                detail: format!("non-positive curvature {pap:e} at iteration {it}"),
            });
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        if norm(&r) <= opts.rel_tol * bnorm {
            let true_res = residual(&mut op, &x, b) / bnorm;
            if true_res <= 10.0 * opts.rel_tol {
                return Ok(Solution { x, iterations: it, rel_residual: true_res });
            }
            r = b.iter().zip(op(&x)).map(|(bi, ai)| bi - ai).collect();
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NotConverged {
        what: "conjugate gradients",
        iterations: opts.max_iter,
        residual: norm(&r) / bnorm,
    })
}

fn residual(op: &mut impl FnMut(&[f64]) -> Vec<f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = op(x);
    b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt()
}

/// MINRES (Paige–Saunders) for symmetric, possibly indefinite `op`.
pub fn minres(mut op: impl FnMut(&[f64]) -> Vec<f64>, b: &[f64], opts: SolveOptions) -> Result<Solution> {
    let n = b.len();
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return Ok(Solution { x: vec![0.0; n], iterations: 0, rel_residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let v: Vec<f64> = y.iter().map(|yi| yi / beta).collect();
        y = op(&v);
        if it >= 2 {
            axpy(&mut y, -beta / oldb, &r1);
        }
        let alfa = dot(&v, &y);
        axpy(&mut y, -alfa / beta, &r2);
        r1 = std::mem::replace(&mut r2, y.clone());
        oldb = beta;
        beta = norm(&y);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(&mut x, phi, &w);
        if phibar <= opts.rel_tol * beta1 || beta <= f64::EPSILON * beta1 {
            break;
        }
    }
    let rel_residual = residual(&mut op, &x, b) / beta1;
    if rel_residual <= 10.0 * opts.rel_tol {
        Ok(Solution { x, iterations, rel_residual })
    } else if iterations < opts.max_iter {
        Err(Error::Breakdown {
            what: "minres",
            detail: format!("stagnated at relative residual {rel_residual:e} after {iterations} iterations"),
        })
    } else {
        Err(Error::NotConverged { what: "minres", iterations, residual: rel_residual })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Largest Krylov dimension before giving up.
    pub max_steps: usize,
    /// Convergence when the Ritz residual is below `tol · |θ|`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_steps: 200, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖op v - θ v‖` estimated from the recurrence.
    pub residual: f64,
    pub steps: usize,
}

/// Lanczos with full reorthogonalization for the algebraically largest
/// (`largest = true`) or smallest eigenpair of `op` on the orthogonal
/// complement of `locked` (orthonormal).
pub fn lanczos_extreme(
    mut op: impl FnMut(&[f64]) -> Vec<f64>,
    start: &[f64],
    locked: &[Vec<f64>],
    largest: bool,
    opts: LanczosOptions,
) -> Result<RitzPair> {
    let mut q = start.to_vec();
    orthogonalize(&mut q, locked);
    let q_norm = norm(&q);
    if q_norm == 0.0 {
        return Err(Error::invalid("start vector lies in the locked subspace"));
    }
    scale(&mut q, 1.0 / q_norm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for k in 0..opts.max_steps {
        let mut w = op(&basis[k]);
        orthogonalize(&mut w, locked);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, locked);
        let b = norm(&w);
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let idx = (0..m)
            .max_by(|&i, &j| {
                let (x, y) = (eig.eigenvalues[i], eig.eigenvalues[j]);
                if largest {
                    x.total_cmp(&y)
                } else {
                    y.total_cmp(&x)
                }
            })
            .unwrap_or(0);
        let theta = eig.eigenvalues[idx];
        let coeffs = eig.eigenvectors.column(idx);
        let res = (b * coeffs[m - 1]).abs();
        best = Some((theta, coeffs.iter().copied().collect(), res));
        let invariant = b <= 1e-14 * a.abs().max(1.0);
        if res <= opts.tol * theta.abs().max(1e-300) || invariant {
            break;
        }
        scale(&mut w, 1.0 / b);
        beta.push(b);
        basis.push(w);
    }
    let (value, coeffs, residual) = best.ok_or_else(|| Error::invalid("Lanczos needs at least one step"))?;
    let mut vector = vec![0.0; start.len()];
    for (c, qv) in coeffs.iter().zip(&basis) {
        axpy(&mut vector, *c, qv);
    }
    let vn = norm(&vector);
    scale(&mut vector, 1.0 / vn);
    let steps = alpha.len();
    if residual > opts.tol * value.abs().max(1e-300) && steps >= opts.max_steps {
        return Err(Error::NotConverged { what: "lanczos", iterations: steps, residual });
    }
    Ok(RitzPair { value, vector, residual, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_1d(n: usize, shift: f64) -> impl Fn(&[f64]) -> Vec<f64> {
        move |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let left = if i > 0 { v[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                    2.0 * v[i] - left - right + shift * v[i]
                })
                .collect()
        }
    }

    fn eig(n: usize, k: usize) -> f64 {
        let th = std::f64::consts::PI * k as f64 / (n as f64 + 1.0);
        2.0 - 2.0 * th.cos()
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 50;
        let op = laplacian_1d(n, 0.1);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let sol = conjugate_gradient(&op, |r: &[f64]| r.to_vec(), &b, SolveOptions::default()).unwrap();
        assert!(sol.rel_residual < 1e-9);
    }

    #[test]
    fn minres_handles_indefinite_systems() {
        let n = 60;
        let shift = -eig(n, 5) - 0.01;
        let op = laplacian_1d(n, shift);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.01).collect();
        let sol = minres(&op, &b, SolveOptions { rel_tol: 1e-12, max_iter: 500 }).unwrap();
        assert!(sol.rel_residual < 1e-11);
        assert_eq!(minres(&op, &vec![0.0; n], SolveOptions::default()).unwrap().x, vec![0.0; n]);
    }

    #[test]
    fn lanczos_with_locking_walks_up_the_spectrum() {
        let n = 40;
        let op = laplacian_1d(n, 0.0);
        let start: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).sqrt()).collect();
        let mut locked = Vec::new();
        for k in 1..=3 {
            let pair = lanczos_extreme(&op, &start, &locked, false, LanczosOptions { max_steps: 60, tol: 1e-12 }).unwrap();
            assert_relative_eq!(pair.value, eig(n, k), epsilon = 1e-10);
            locked.push(pair.vector);
        }
        let top = lanczos_extreme(&op, &start, &[], true, LanczosOptions::default()).unwrap();
        assert_relative_eq!(top.value, eig(n, n), epsilon = 1e-10);
    }
}
