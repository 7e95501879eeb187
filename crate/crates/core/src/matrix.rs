//! Dense row-major `f64` matrices.
//!
//! Everything in this crate that does arithmetic works on this one type:
//! spectra-by-pixels data matrices, dictionaries, code matrices, Gram
//! matrices. Shapes here are small by linear-algebra standards (hundreds,
//! not millions), so the implementation favours clarity and predictable
//! memory layout over blocking tricks.
//!
//! Shape agreement is a programmer contract, not a user input: mismatches
//! panic with a message naming the offending dimensions. Anything driven
//! by files the user controls is validated long before it gets here.

use std::fmt;
use std::ops::{Index, IndexMut};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    /// Row-major storage: entry (r, c) lives at `r * cols + c`.
    data: Vec<f64>,
}

impl Matrix {
    // ---------------------------------------------------------------
    // Constructors
    // ---------------------------------------------------------------

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Matrix with every entry equal to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested row vectors. Rows must all have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            assert!(
                row.len() == c,
                "from_rows: row {} has {} entries, expected {}",
                i,
                row.len(),
                c
            );
        }
        Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Build from a flat row-major buffer.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(
            data.len() == rows * cols,
            "from_flat: buffer has {} entries, expected {}x{} = {}",
            data.len(),
            rows,
            cols,
            rows * cols
        );
        Matrix { rows, cols, data }
    }

    /// Build entrywise from a function of (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Column vector (n x 1) from a slice.
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Stack `top` over `bottom` (column counts must agree).
    pub fn vstack(top: &Matrix, bottom: &Matrix) -> Self {
        assert!(
            top.cols == bottom.cols,
            "vstack: column counts differ ({} vs {})",
            top.cols,
            bottom.cols
        );
        let mut data = Vec::with_capacity((top.rows + bottom.rows) * top.cols);
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Matrix {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        }
    }

    // ---------------------------------------------------------------
    // Shape and element access
    // ---------------------------------------------------------------

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Flat row-major view of the entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Borrow row `r` as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy column `c` into a fresh vector.
    pub fn col(&self, c: usize) -> Vec<f64> {
        assert!(c < self.cols, "col: index {} out of {} columns", c, self.cols);
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Overwrite column `c` with `values`.
    pub fn set_col(&mut self, c: usize, values: &[f64]) {
        assert!(
            values.len() == self.rows,
            "set_col: {} values for {} rows",
            values.len(),
            self.rows
        );
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    /// Gather the listed columns (in order, repeats allowed) into a new matrix.
    /// Copy of the half-open column range `[start, end)`.
    pub fn col_range(&self, start: usize, end: usize) -> Matrix {
        assert!(
            start <= end && end <= self.cols,
            "col_range: [{start}, {end}) out of {} columns",
            self.cols
        );
        let mut out = Matrix::zeros(self.rows, end - start);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(&self.row(r)[start..end]);
        }
        out
    }

    /// Overwrite columns `[start, start + block.cols())` with `block`.
    pub fn paste_cols(&mut self, start: usize, block: &Matrix) {
        assert!(
            block.rows == self.rows && start + block.cols <= self.cols,
            "paste_cols: {}x{} block at column {start} into {}x{}",
            block.rows,
            block.cols,
            self.rows,
            self.cols
        );
        for r in 0..self.rows {
            self.row_mut(r)[start..start + block.cols].copy_from_slice(block.row(r));
        }
    }

    pub fn select_cols(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, indices.len());
        for (k, &c) in indices.iter().enumerate() {
            assert!(c < self.cols, "select_cols: index {} out of {} columns", c, self.cols);
            for r in 0..self.rows {
                out[(r, k)] = self[(r, c)];
            }
        }
        out
    }

    // ---------------------------------------------------------------
    // Arithmetic
    // ---------------------------------------------------------------

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert!(
            self.cols == other.rows,
            "matmul: inner dimensions differ ({}x{} times {}x{})",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        // i-k-j order: the inner loop walks contiguous rows of `other`
        // and `out`, which keeps the traversal cache-friendly.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self + scale * other`, entrywise.
    pub fn add_scaled(&self, other: &Matrix, scale: f64) -> Matrix {
        self.zip_with(other, |a, b| a + scale * b)
    }

    /// Entrywise combination of two equal-shaped matrices.
    pub fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "zip_with: shapes differ ({}x{} vs {}x{})",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    /// Add `value` to every diagonal entry (square matrices).
    pub fn add_diag(&self, value: f64) -> Matrix {
        assert!(self.is_square(), "add_diag: matrix is {}x{}", self.rows, self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += value;
        }
        out
    }

    /// Gram matrix `selfᵀ * self` (exploits symmetry).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in i..n {
                    g[(i, j)] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    // ---------------------------------------------------------------
    // Reductions
    // ---------------------------------------------------------------

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Sum of all entries.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Sum of absolute values of all entries.
    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    /// Per-column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    /// True if every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|` (square matrices).
    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square(), "max_asymmetry: matrix is {}x{}", self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        let show_rows = self.rows.min(8);
        for r in 0..show_rows {
            let cells: Vec<String> = self
                .row(r)
                .iter()
                .take(8)
                .map(|v| format!("{v:>10.4}"))
                .collect();
            let ell = if self.cols > 8 { " ..." } else { "" };
            writeln!(f, "  [{}{}]", cells.join(", "), ell)?;
        }
        if self.rows > show_rows {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}
