//! Dense continuous Lyapunov solver `A X + X A† = C` (Bartels-Stewart).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::psd::CMatrix;

/// Right-hand-side entries below this fraction of `max |C|` are treated as
/// zero on singular eigenvalue pairs.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

/// Solves `A X + X A† = C` for square `A`, `C`.
///
/// `A = Q T Q†` is reduced to complex Schur form and the transformed
/// equation `T Y + Y T† = Q† C Q` is solved by back substitution.
/// Eigenvalue pairs with `λ_i + conj(λ_j)` at rounding level leave the
/// corresponding entry free; it is set to zero when the transformed
/// right-hand side vanishes there and reported as `SingularLyapunov`
/// otherwise.
pub fn solve_lyapunov(a: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    solve_lyapunov_with(a, c, DEFAULT_CONSISTENCY_TOL)
}

/// As [`solve_lyapunov`], with the relative threshold below which the
/// right-hand side on a singular pair counts as zero.
pub fn solve_lyapunov_with(a: &CMatrix, c: &CMatrix, consistency_tol: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch(n, c.nrows()));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let (q, t) = a.clone().schur().unpack();
    let f = q.adjoint() * c * &q;

    let t_norm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let singular = n as f64 * f64::EPSILON * t_norm.max(f64::MIN_POSITIVE);
    let f_scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut y = CMatrix::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = f[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * y[(k, j)];
            }
            for k in j + 1..n {
                rhs -= y[(i, k)] * t[(j, k)].conj();
            }
            let den = t[(i, i)] + t[(j, j)].conj();
            if den.norm() <= singular {
                if rhs.norm() <= consistency_tol * f_scale.max(f64::MIN_POSITIVE) {
                    y[(i, j)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                return Err(Error::SingularLyapunov { residual: rhs.norm() });
            }
            y[(i, j)] = rhs / den;
        }
    }
    Ok(&q * y * q.adjoint())
}
