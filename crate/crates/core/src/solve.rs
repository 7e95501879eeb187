//! Symmetric positive definite solves and the sum-to-one constrained solve.
//!
//! Every linear system in the learning loops has the form `A x = b` with
//! `A` symmetric positive definite (a Gram matrix plus a positive ridge),
//! so a Cholesky factorization is all we need. On top of the plain solve
//! sits [`sum_to_one_solve`], the workhorse of the code updates: minimize
//! `½ xᵀA x − bᵀx` per column subject to the column summing to one. The
//! equality constraint is eliminated through its KKT system, which gives
//! a closed form built from two triangular solves:
//!
//! ```text
//! x = A⁻¹b − c (1ᵀA⁻¹b − 1),   c = A⁻¹1 / (1ᵀA⁻¹1)
//! ```
//!
//! `1ᵀA⁻¹1 > 0` whenever `A` is positive definite, so the division is safe
//! once the factorization has succeeded.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative tolerance for the symmetry precheck on Cholesky inputs.
const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor of an SPD matrix.
///
/// Factor once, then solve against as many right-hand sides as needed.
#[derive(Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factor `a = L Lᵀ`. Fails with [`Error::NotSpd`] when `a` is not
    /// square, not symmetric within `1e-10` (relative to its magnitude),
    /// or has a non-positive pivot.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSpd(format!("matrix is {}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let asym = if n > 0 { a.max_asymmetry() } else { 0.0 };
        if asym > SYMMETRY_TOL * (1.0 + a.max_abs()) {
            return Err(Error::NotSpd(format!(
                "asymmetry {asym:.3e} exceeds tolerance"
            )));
        }

        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::NotSpd(format!(
                    "pivot {diag:.3e} at index {j} of {n}"
                )));
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn order(&self) -> usize {
        self.l.rows()
    }

    /// Solve `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert!(b.len() == n, "solve_vec: rhs length {} for order {}", b.len(), n);
        // Forward: L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[(i, k)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        // Backward: Lᵀ x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[(k, i)] * y[k];
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix) -> Matrix {
        let n = self.order();
        assert!(
            b.rows() == n,
            "solve_mat: rhs has {} rows for order {}",
            b.rows(),
            n
        );
        let mut x = Matrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            let col = self.solve_vec(&b.col(c));
            x.set_col(c, &col);
        }
        x
    }
}

/// Solve `a x = b` for an SPD `a` and matrix right-hand side `b`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(Cholesky::new(a)?.solve_mat(b))
}

/// Columnwise equality-constrained quadratic solve.
///
/// For each column `b_j` of `b`, returns the minimizer of
/// `½ xᵀ a x − b_jᵀ x` subject to `1ᵀx = 1`. The construction makes each
/// output column sum to one up to roundoff, and the KKT stationarity
/// residual `a x − b + λ 1` vanish for the implied multiplier.
pub fn sum_to_one_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "sum_to_one_solve: a is {}x{} but b has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    let chol = Cholesky::new(a)?;
    let n = a.rows();

    let unconstrained = chol.solve_mat(b);
    let weights = chol.solve_vec(&vec![1.0; n]); // A⁻¹ 1
    let total: f64 = weights.iter().sum(); // 1ᵀ A⁻¹ 1 > 0 for SPD A
    debug_assert!(total > 0.0, "sum_to_one_solve: 1ᵀA⁻¹1 = {total}");

    let mut x = unconstrained;
    for c in 0..x.cols() {
        let excess: f64 = (0..n).map(|r| x[(r, c)]).sum::<f64>() - 1.0;
        let shift = excess / total;
        for r in 0..n {
            x[(r, c)] -= shift * weights[r];
        }
    }
    Ok(x)
}
