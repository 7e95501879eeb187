//! Reference reconstruction methods to compare the coupled-dictionary
//! pipeline against.
//!
//! Three classics, in increasing order of sophistication:
//!
//! * [`pwc`] — pixel-wise copy: each prediction pixel takes the
//!   narrowband spectrum of its most similar overlap pixel (nearest
//!   neighbor in channel space), so every output column is a verbatim
//!   member of the training set.
//! * [`fit_regression`] / [`apply_regression`] — one global linear map
//!   from channels to bands, fitted on the overlap by ridge-regularized
//!   least squares.
//! * [`ms_dictionary_baseline`] — sparse coding as in the main pipeline,
//!   but on a dictionary of raw sampled overlap pixels instead of a
//!   learned one.
//!
//! All three produce a `P × N₁` matrix in prediction-region raster
//! order, directly comparable with the pipeline's reconstruction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::solve::solve_spd;
use crate::sparsecode::{reconstruct, run_sstep, SStepParams};
use crate::split::OverlapSplit;

/// Default ridge weight for [`fit_regression`]: small enough to leave
/// well-posed fits untouched, large enough to keep rank-deficient
/// channel Grams solvable.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// A fitted channels-to-bands linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    /// The map itself, `P × Q`.
    pub t: Matrix,
    /// Ridge weight the fit used.
    pub ridge: f64,
}

impl RegressionModel {
    pub fn validate(&self) -> Result<()> {
        if !self.t.all_finite() {
            return Err(Error::validation(
                "regression model: matrix has non-finite entries",
            ));
        }
        if !self.ridge.is_finite() || self.ridge < 0.0 {
            return Err(Error::validation(format!(
                "regression model: ridge = {} must be a nonnegative real",
                self.ridge
            )));
        }
        Ok(())
    }
}

/// Pixel-wise copy. For every prediction pixel, finds the overlap pixel
/// with the nearest channel vector (Euclidean distance, ties broken by
/// lowest column index) and copies that pixel's narrowband spectrum.
pub fn pwc(split: &OverlapSplit) -> Result<Matrix> {
    let n_in = split.num_in();
    let n_out = split.num_out();
    // Pixel vectors as contiguous rows, so the distance scan below runs
    // on slices.
    let m_in_t = split.m_in.transpose();
    let m_out_t = split.m_out.transpose();

    let matches: Vec<usize> = (0..n_out)
        .into_par_iter()
        .map(|j| {
            let query = m_out_t.row(j);
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for i in 0..n_in {
                let d: f64 = m_in_t
                    .row(i)
                    .iter()
                    .zip(query)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            best
        })
        .collect();

    let mut out = Matrix::zeros(split.h_in.rows(), n_out);
    for (j, &i) in matches.iter().enumerate() {
        out.set_col(j, &split.h_in.col(i));
    }
    Ok(out)
}

/// Fits `T = H_in·M_inᵀ·(M_in·M_inᵀ + ridge·I)⁻¹`, the minimizer of
/// `‖H_in − T·M_in‖²_F + ridge·‖T‖²_F`.
///
/// With `ridge = 0` this is plain least squares and fails when the
/// channel Gram `M_in·M_inᵀ` is singular (fewer independent pixels than
/// channels, or linearly dependent channels).
pub fn fit_regression(split: &OverlapSplit, ridge: f64) -> Result<RegressionModel> {
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::validation(format!(
            "regression fit: ridge = {ridge} must be a nonnegative real",
        )));
    }
    // Gram of the transposed channel block is M_in·M_inᵀ, exactly
    // symmetric by construction.
    let a = split.m_in.transpose().gram().add_diag(ridge);
    let b = split.m_in.matmul(&split.h_in.transpose());
    let t = solve_spd(&a, &b)?.transpose();
    let model = RegressionModel { t, ridge };
    model.validate()?;
    Ok(model)
}

/// Predicts narrowband spectra as `T·M_out`.
pub fn apply_regression(model: &RegressionModel, m_out: &Matrix) -> Result<Matrix> {
    model.validate()?;
    if model.t.cols() != m_out.rows() {
        return Err(Error::Shape(format!(
            "regression apply: model maps {} channels, data has {}",
            model.t.cols(),
            m_out.rows()
        )));
    }
    Ok(model.t.matmul(m_out))
}

/// Sparse-coding reconstruction on a dictionary of raw overlap pixels:
/// `atom_budget` columns of `m_in` are sampled without replacement
/// (uniformly, seeded) as the channel dictionary, their narrowband
/// partners as the band dictionary, and the prediction pixels are
/// encoded and reconstructed exactly as in the main pipeline's
/// inference stage.
pub fn ms_dictionary_baseline(
    split: &OverlapSplit,
    sparams: &SStepParams,
    atom_budget: usize,
    seed: u64,
) -> Result<Matrix> {
    let n = split.num_in();
    if atom_budget == 0 || atom_budget > n {
        return Err(Error::validation(format!(
            "ms-dictionary baseline: atom budget {atom_budget} must be in [1, {n}] \
             (the overlap pixel count)",
        )));
    }
    let (d_h, d_m) = sample_pixel_dictionary(split, atom_budget, seed);
    if split.num_out() == 0 {
        log::warn!("ms-dictionary baseline: no prediction pixels, returning an empty block");
        return Ok(Matrix::zeros(split.h_in.rows(), 0));
    }
    let (y, _trace) = run_sstep(&split.m_out, &d_m, sparams)?;
    reconstruct(&d_h, &y)
}

/// Draws `count` distinct overlap pixel columns (partial Fisher–Yates)
/// and returns them as a band/channel dictionary pair.
fn sample_pixel_dictionary(split: &OverlapSplit, count: usize, seed: u64) -> (Matrix, Matrix) {
    let n = split.num_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut d_h = Matrix::zeros(split.h_in.rows(), count);
    let mut d_m = Matrix::zeros(split.m_in.rows(), count);
    for i in 0..count {
        let pick = rng.gen_range(i..n);
        pool.swap(i, pick);
        d_h.set_col(i, &split.h_in.col(pool[i]));
        d_m.set_col(i, &split.m_in.col(pool[i]));
    }
    (d_h, d_m)
}
