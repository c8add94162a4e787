//! Singular value decomposition by one-sided Jacobi rotation, and the
//! Moore-Penrose pseudoinverse / minimum-norm least-squares solve built on it.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix by plane
//! rotations until every pair is numerically orthogonal. It is slower than
//! bidiagonalization methods but simple, unconditionally convergent on cyclic
//! sweeps, and accurate to a few ulps per singular value, which is what the
//! Penrose-condition tolerances here need.

use super::{matmul, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Pair (i, j) counts as orthogonal when cos^2 of the angle between the
/// columns falls below this.
const COS_TOL_SQ: f64 = 4.0 * f64::EPSILON * f64::EPSILON;

/// Thin SVD of an m x n matrix: `u` is m x p, `v` is n x p, `singular` has
/// length p = min(m, n), descending, with `m = u * diag(singular) * v^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// Factorizes `m`. Fails only if the Jacobi sweeps do not converge, in
    /// which case the sweep count is surfaced.
    pub fn decompose(m: &Matrix) -> Result<Svd> {
        // Work on the tall orientation so sweeps run over min(m, n) columns.
        let transposed = m.rows() < m.cols();
        let mut a = if transposed { m.transpose() } else { m.clone() };
        let n = a.cols();
        let mut v = Matrix::identity(n);

        let mut converged = false;
        let mut sweeps = 0;
        while !converged {
            if sweeps == MAX_SWEEPS {
                return Err(Error::SvdNonConvergence { sweeps });
            }
            sweeps += 1;
            converged = true;
            for i in 0..n - 1 {
                for j in i + 1..n {
                    if !rotate_pair(&mut a, &mut v, i, j) {
                        converged = false;
                    }
                }
            }
        }

        // Column norms are the singular values; normalize to get U.
        let mut order: Vec<usize> = (0..n).collect();
        let norms: Vec<f64> = (0..n)
            .map(|c| {
                (0..a.rows())
                    .map(|r| a.get(r, c) * a.get(r, c))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

        let mut u = Matrix::zeros(a.rows(), n);
        let mut v_sorted = Matrix::zeros(n, n);
        let mut singular = Vec::with_capacity(n);
        for (dst, &src) in order.iter().enumerate() {
            let s = norms[src];
            singular.push(s);
            if s > 0.0 {
                for r in 0..a.rows() {
                    u.set(r, dst, a.get(r, src) / s);
                }
            }
            for r in 0..n {
                v_sorted.set(r, dst, v.get(r, src));
            }
        }

        if transposed {
            Ok(Svd {
                u: v_sorted,
                singular,
                v: u,
            })
        } else {
            Ok(Svd {
                u,
                singular,
                v: v_sorted,
            })
        }
    }

    /// Largest singular value.
    pub fn sigma_max(&self) -> f64 {
        self.singular.first().copied().unwrap_or(0.0)
    }

    /// Count of singular values above `threshold`.
    pub fn rank_at(&self, threshold: f64) -> usize {
        self.singular.iter().filter(|s| **s > threshold).count()
    }

    /// Applies the pseudoinverse to `y` without forming it: V * S^+ * (U^T y).
    /// Singular values at or below `cutoff` are dropped.
    fn apply_pinv(&self, y: &Matrix, cutoff: f64) -> Result<Matrix> {
        let mut uty = matmul(&self.u.transpose(), y)?;
        for (i, s) in self.singular.iter().enumerate() {
            let inv = if *s > cutoff { 1.0 / s } else { 0.0 };
            for c in 0..uty.cols() {
                uty.set(i, c, uty.get(i, c) * inv);
            }
        }
        matmul(&self.v, &uty)
    }
}

/// One Jacobi rotation on columns (i, j) of `a`, mirrored on `v`.
/// Returns true when the pair was already orthogonal.
fn rotate_pair(a: &mut Matrix, v: &mut Matrix, i: usize, j: usize) -> bool {
    let rows = a.rows();
    let mut aa = 0.0;
    let mut bb = 0.0;
    let mut ab = 0.0;
    for r in 0..rows {
        let x = a.get(r, i);
        let y = a.get(r, j);
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }

    if ab * ab <= COS_TOL_SQ * aa * bb || ab == 0.0 {
        return true;
    }

    let zeta = (bb - aa) / (2.0 * ab);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;

    for r in 0..rows {
        let x = a.get(r, i);
        let y = a.get(r, j);
        a.set(r, i, c * x - s * y);
        a.set(r, j, s * x + c * y);
    }
    for r in 0..v.rows() {
        let x = v.get(r, i);
        let y = v.get(r, j);
        v.set(r, i, c * x - s * y);
        v.set(r, j, s * x + c * y);
    }
    false
}

/// Effective cutoff for dropping singular values: `factor * sigma_max`, where
/// a `None` factor means the conventional numerical-rank default
/// `machine epsilon * max(rows, cols)`.
pub(crate) fn cutoff_for(m: &Matrix, svd: &Svd, sv_cutoff_factor: Option<f64>) -> Result<f64> {
    let factor = match sv_cutoff_factor {
        Some(f) if f < 0.0 => {
            return Err(Error::invalid(
                "sv_cutoff_factor",
                format!("{f} is negative"),
            ))
        }
        Some(f) => f,
        None => f64::EPSILON * m.rows().max(m.cols()) as f64,
    };
    Ok(factor * svd.sigma_max())
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// `sv_cutoff_factor * sigma_max` are treated as zero; `None` selects the
/// `eps * max(rows, cols)` default factor.
pub fn pseudoinverse(m: &Matrix, sv_cutoff_factor: Option<f64>) -> Result<Matrix> {
    let svd = Svd::decompose(m)?;
    let cutoff = cutoff_for(m, &svd, sv_cutoff_factor)?;
    svd.apply_pinv(&Matrix::identity(m.rows()), cutoff)
}

/// Minimum-norm least-squares solution of `h * beta = y`: among all
/// minimizers of the Frobenius residual, returns the one of least norm.
pub fn solve_least_squares(
    h: &Matrix,
    y: &Matrix,
    sv_cutoff_factor: Option<f64>,
) -> Result<Matrix> {
    if h.rows() != y.rows() {
        return Err(Error::ShapeMismatch {
            op: "solve_least_squares",
            left_rows: h.rows(),
            left_cols: h.cols(),
            right_rows: y.rows(),
            right_cols: y.cols(),
        });
    }
    let svd = Svd::decompose(h)?;
    let cutoff = cutoff_for(h, &svd, sv_cutoff_factor)?;
    svd.apply_pinv(y, cutoff)
}
