//! Symmetries of the Cartesian grid about the origin.
//!
//! The grid is invariant under the hyperoctahedral group (coordinate
//! reflections `x_a ↦ -x_a` and axis permutations), which is the largest
//! subgroup of `O(N)` that maps grid points to grid points. Averaging over
//! it is the grid's realisation of angular averaging: it is an exact
//! orthogonal projection and commutes with every radial multiplier and
//! with multiplication by invariant potentials.

use crate::grid::{GridSpec, RealField, MAX_DIMS};

fn reflect_index(m: usize, i: usize) -> usize {
    (m - i) % m
}

/// `u(x) ↦ u(x')` with `x'_axis = -x_axis`.
pub fn reflect(u: &RealField, axis: usize) -> RealField {
    let g = *u.grid();
    let mut out = vec![0.0; g.len()];
    for (flat, &v) in u.values().iter().enumerate() {
        let mut idx = g.unravel(flat);
        idx[axis] = reflect_index(g.points(), idx[axis]);
        out[g.ravel(&idx)] = v;
    }
    RealField::from_vec_unchecked(g, out)
}

/// Point inversion `u(x) ↦ u(-x)`.
pub fn invert(u: &RealField) -> RealField {
    let g = *u.grid();
    let m = g.points();
    let mut out = vec![0.0; g.len()];
    for (flat, &v) in u.values().iter().enumerate() {
        let mut idx = g.unravel(flat);
        for i in idx.iter_mut().take(g.dims()) {
            *i = reflect_index(m, *i);
        }
        out[g.ravel(&idx)] = v;
    }
    RealField::from_vec_unchecked(g, out)
}

fn permute(u: &RealField, perm: &[usize]) -> RealField {
    let g = *u.grid();
    let mut out = vec![0.0; g.len()];
    for (flat, &v) in u.values().iter().enumerate() {
        let idx = g.unravel(flat);
        let mut moved = [0; MAX_DIMS];
        for a in 0..g.dims() {
            moved[a] = idx[perm[a]];
        }
        out[g.ravel(&moved)] = v;
    }
    RealField::from_vec_unchecked(g, out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    }
}

/// Average over the hyperoctahedral group.
pub fn symmetrize(u: &RealField) -> RealField {
    let g = *u.grid();
    let mut acc = u.clone();
    for axis in 0..g.dims() {
        let r = reflect(&acc, axis);
        acc = acc.zip_map(&r, |a, b| 0.5 * (a + b));
    }
    let perms = permutations(g.dims());
    if perms.len() == 1 {
        return acc;
    }
    let weight = 1.0 / perms.len() as f64;
    let mut out = RealField::zeros(g);
    for perm in &perms {
        out.axpy(weight, &permute(&acc, perm));
    }
    out
}

/// Largest deviation of `u` from its group average.
pub fn asymmetry(u: &RealField) -> f64 {
    u.max_abs_diff(&symmetrize(u))
}

/// `(u(x) + u(-x)) / 2`.
pub fn even_part(u: &RealField) -> RealField {
    u.zip_map(&invert(u), |a, b| 0.5 * (a + b))
}

/// `(u(x) - u(-x)) / 2`.
pub fn odd_part(u: &RealField) -> RealField {
    u.zip_map(&invert(u), |a, b| 0.5 * (a - b))
}

/// Grid shift that moves the largest sample of `u` to the origin.
pub fn centering_shift(u: &RealField) -> [i64; MAX_DIMS] {
    let g: GridSpec = *u.grid();
    let (argmax, _) = u
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let idx = g.unravel(argmax);
    let mut shift = [0i64; MAX_DIMS];
    for a in 0..g.dims() {
        shift[a] = g.origin_index() as i64 - idx[a] as i64;
    }
    shift
}

/// `u` translated by whole cells so that its maximum sits at the origin.
pub fn recenter(u: &RealField) -> RealField {
    u.roll(&centering_shift(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: GridSpec) -> RealField {
        RealField::from_fn(grid, |x| {
            let mut v = 0.0;
            for (a, xa) in x.iter().enumerate() {
                v += (0.3 + a as f64) * xa + (xa * (1.0 + a as f64)).sin();
            }
            (-x.iter().map(|t| t * t).sum::<f64>()).exp() * (1.0 + v)
        })
    }

    #[test]
    fn symmetrize_is_idempotent_and_invariant() {
        for dims in 1..=3 {
            let g = GridSpec::new(dims, 8, 2.0).unwrap();
            let u = sample(g);
            let p = symmetrize(&u);
            assert!(symmetrize(&p).max_abs_diff(&p) < 1e-14);
            assert!(asymmetry(&p) < 1e-14);
            assert!(reflect(&p, 0).max_abs_diff(&p) < 1e-14);
            assert!(asymmetry(&u) > 1e-3);
        }
    }

    #[test]
    fn radial_fields_are_fixed() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let u = RealField::from_radial(g, |r| (-r * r).exp());
        assert!(asymmetry(&u) < 1e-15);
    }

    #[test]
    fn even_and_odd_parts_split_the_field() {
        let g = GridSpec::new(2, 8, 2.0).unwrap();
        let u = sample(g);
        let sum = even_part(&u).add(&odd_part(&u));
        assert!(sum.max_abs_diff(&u) < 1e-15);
        assert!(even_part(&u).inner(&odd_part(&u)).abs() < 1e-13);
    }

    #[test]
    fn recentering_undoes_a_roll() {
        let g = GridSpec::new(2, 16, 4.0).unwrap();
        let u = RealField::from_radial(g, |r| (-r * r).exp());
        let moved = u.roll(&[1, -2, 0]);
        assert!(recenter(&moved).max_abs_diff(&u) < 1e-15);
    }
}
