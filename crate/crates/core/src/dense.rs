//! Small dense solvers: the local block solve used by every smoother and the
//! null-space-bordered direct solve used on the coarsest grid.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::{Error, Result};

/// Relative pivot threshold below which a local block counts as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Solve the `k × k` row-major system `a x = b` in place by Gaussian
/// elimination with full pivoting. On success `b` holds `x` and the number of
/// floating point operations spent is returned; `None` signals a singular
/// block.
pub fn solve_full_pivot(a: &mut [f64], b: &mut [f64], k: usize) -> Option<u64> {
    debug_assert_eq!(a.len(), k * k);
    debug_assert_eq!(b.len(), k);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut col_perm: Vec<usize> = (0..k).collect();
    let mut ops = 0u64;
    for step in 0..k {
        let (mut pr, mut pc, mut best) = (step, step, 0.0);
        for r in step..k {
            for c in step..k {
                let v = a[r * k + c].abs();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best <= PIVOT_TOL * scale {
            return None;
        }
        if pr != step {
            for c in 0..k {
                a.swap(step * k + c, pr * k + c);
            }
            b.swap(step, pr);
        }
        if pc != step {
            for r in 0..k {
                a.swap(r * k + step, r * k + pc);
            }
            col_perm.swap(step, pc);
        }
        let pivot = a[step * k + step];
        for r in step + 1..k {
            let factor = a[r * k + step] / pivot;
            ops += 1;
            if factor == 0.0 {
                continue;
            }
            for c in step + 1..k {
                a[r * k + c] -= factor * a[step * k + c];
            }
            b[r] -= factor * b[step];
            ops += 2 * (k - step - 1) as u64 + 2;
        }
    }
    let mut y = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = b[r];
        for c in r + 1..k {
            s -= a[r * k + c] * y[c];
        }
        y[r] = s / a[r * k + r];
        ops += 2 * (k - r - 1) as u64 + 1;
    }
    for (pos, &orig) in col_perm.iter().enumerate() {
        b[orig] = y[pos];
    }
    Some(ops)
}

/// Numerical rank from singular values.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Direct solver for `A x = b` where `A` has a known null space spanned by the
/// columns of `null`. Solves the bordered system
///
/// ```text
/// [ A   N ] [x]   [b]
/// [ Nᵀ  0 ] [λ] = [0]
/// ```
///
/// which returns the solution orthogonal to `N` and discards the part of `b`
/// lying in `N` when `N` also spans the left null space.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    dim: usize,
    n_null: usize,
    lu: LU<f64, Dyn, Dyn>,
}

impl BorderedSolver {
    pub fn new(a: &DMatrix<f64>, null: &[Vec<f64>]) -> Result<Self> {
        let dim = a.nrows();
        let k = null.len();
        let mut m = DMatrix::zeros(dim + k, dim + k);
        m.view_mut((0, 0), (dim, dim)).copy_from(a);
        for (c, vec) in null.iter().enumerate() {
            let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (r, &x) in vec.iter().enumerate() {
                m[(r, dim + c)] = x / norm;
                m[(dim + c, r)] = x / norm;
            }
        }
        let scale = a.amax().max(1.0);
        let lu = m.clone().lu();
        let u = lu.u();
        let umax = u.diagonal().amax();
        let full_rank = u
            .diagonal()
            .iter()
            .all(|d| d.abs() > 1e-11 * umax.max(scale));
        if !full_rank {
            return Err(Error::SingularCoarse {
                rank: rank(&m, 1e-11),
                dim: dim + k,
            });
        }
        Ok(Self { dim, n_null: k, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = DVector::zeros(self.dim + self.n_null);
        rhs.rows_mut(0, self.dim).copy_from_slice(b);
        let x = self
            .lu
            .solve(&rhs)
            .expect("factorization checked nonsingular");
        x.rows(0, self.dim).iter().copied().collect()
    }
}
