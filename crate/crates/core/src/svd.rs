//! Thin singular value decomposition via one-sided Jacobi.
//!
//! `a = u · diag(s) · vᵀ` with `r = min(rows, cols)` singular triplets,
//! `s` sorted nonincreasing, and both factors orthonormal to well below
//! the crate-wide 1e-8 contract. One-sided Jacobi rotates pairs of
//! columns until they are mutually orthogonal; it is slower than
//! bidiagonalization-based methods but backward stable, simple to verify,
//! and easily fast enough for the dictionary-sized matrices this crate
//! works with.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative off-diagonal tolerance: a column pair (i, j) counts as
/// orthogonal once |cᵢ·cⱼ| ≤ tol · ‖cᵢ‖‖cⱼ‖.
const JACOBI_TOL: f64 = 1e-14;

/// A full sweep touches every column pair once; random matrices settle in
/// well under ten sweeps, so the limit only trips on adversarial input.
const MAX_SWEEPS: usize = 64;

/// Thin SVD factors: `u` is rows×r, `s` has r entries, `v` is cols×r.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    /// Multiply the factors back together (used by tests and by the
    /// singular value thresholding operator).
    pub fn reconstruct(&self) -> Matrix {
        let r = self.s.len();
        let mut scaled = self.u.clone();
        for c in 0..r {
            for row in 0..scaled.rows() {
                scaled[(row, c)] *= self.s[c];
            }
        }
        scaled.matmul(&self.v.transpose())
    }
}

/// Compute the thin SVD of `a`.
///
/// Fails with [`Error::SvdNoConvergence`] if the rotation sweeps do not
/// reach the orthogonality tolerance, and with [`Error::Validation`] on
/// non-finite input.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if !a.all_finite() {
        return Err(Error::validation("svd: input contains non-finite entries"));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(a.rows(), 0),
            s: Vec::new(),
            v: Matrix::zeros(a.cols(), 0),
        });
    }
    // One-sided Jacobi wants at least as many rows as columns; for wide
    // input decompose the transpose and swap the factors.
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }

    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone(); // rotated in place; ends as U·diag(s)
    let mut v = Matrix::identity(n);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in (i + 1)..n {
                let (mut p, mut qi, mut qj) = (0.0, 0.0, 0.0);
                for r in 0..m {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    p += wi * wj;
                    qi += wi * wi;
                    qj += wj * wj;
                }
                if p.abs() <= JACOBI_TOL * (qi * qj).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotation angle that zeroes the (i, j) cross-product.
                let theta = (qj - qi) / (2.0 * p);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    w[(r, i)] = c * wi - s * wj;
                    w[(r, j)] = s * wi + c * wj;
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)];
                    v[(r, i)] = c * vi - s * vj;
                    v[(r, j)] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { rows: m, cols: n });
    }

    // Singular values are the column norms of the rotated matrix; order
    // them nonincreasing and permute both factors to match.
    let mut norms: Vec<f64> = (0..n)
        .map(|c| (0..m).map(|r| w[(r, c)] * w[(r, c)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut s = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        for r in 0..n {
            v_sorted[(r, dst)] = v[(r, src)];
        }
        if norms[src] > 0.0 {
            for r in 0..m {
                u[(r, dst)] = w[(r, src)] / norms[src];
            }
        }
        // Zero-norm columns are filled in afterwards.
    }
    norms.sort_by(|x, y| y.partial_cmp(x).unwrap());

    // Exactly-zero singular values leave holes in U; patch them with an
    // orthonormal completion so the factor contract holds even for
    // rank-deficient input.
    for c in 0..n {
        if s[c] > 0.0 {
            continue;
        }
        'basis: for k in 0..m {
            let mut cand = vec![0.0; m];
            cand[k] = 1.0;
            // Project out every column already in U; holes not yet filled
            // are all-zero and contribute nothing.
            for uc in 0..n {
                let dot: f64 = (0..m).map(|r| u[(r, uc)] * cand[r]).sum();
                for (r, val) in cand.iter_mut().enumerate() {
                    *val -= dot * u[(r, uc)];
                }
            }
            let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for (r, val) in cand.iter().enumerate() {
                    u[(r, c)] = val / norm;
                }
                break 'basis;
            }
        }
    }

    Ok(SvdResult { u, s, v: v_sorted })
}
