//! Sparse coding of prediction-region pixels and spectral
//! reconstruction (the inference stage).
//!
//! With a learned dictionary pair in hand, every multispectral pixel
//! `m` outside the overlap is encoded on the broadband dictionary by
//!
//! ```text
//!   min_y ½‖m − D_m·y‖² + η‖y‖₁   subject to  1ᵀy = 1,
//! ```
//!
//! and its narrowband spectrum is predicted as `D_h·y` — the code is
//! estimated where data exists (the broad channels) and applied where it
//! does not. The solver mirrors the training stage's scheme on a single
//! split `O = Y` with multiplier `Δ` and penalty `ρ`: update `Y` (a
//! sum-to-one least squares), shrink into `O`, ascend `Δ`, grow `ρ`,
//! and stop when `‖O − Y‖_F < eps`.
//!
//! The problem is separable per pixel, so [`run_sstep`] processes
//! columns in fixed-size blocks — bounding temporary memory and letting
//! blocks run on worker threads — without changing a single bit of the
//! result (blocks share the per-iteration normal matrix and each column
//! is solved independently either way).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prox::soft_threshold;
use crate::solve::sum_to_one_solve;
use crate::trace::AdmmTrace;

/// Columns per solve block. Chosen to keep per-block temporaries in the
/// tens of megabytes for realistic dictionary sizes.
const COLUMN_BLOCK: usize = 4096;

/// Tuning knobs for the inference stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SStepParams {
    /// Weight of the code sparsity term.
    pub eta: f64,
    pub max_iter: usize,
    /// Penalty growth factor (> 1).
    pub xi: f64,
    /// Convergence tolerance on `‖O − Y‖_F`.
    pub eps: f64,
    /// Initial and maximal penalty.
    pub rho0: f64,
    pub rho_max: f64,
}

impl Default for SStepParams {
    fn default() -> Self {
        SStepParams {
            eta: 0.0001,
            max_iter: 500,
            xi: 1.5,
            eps: 1e-6,
            rho0: 1e-3,
            rho_max: 1e6,
        }
    }
}

impl SStepParams {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::validation(format!(
                "sparse coding: eta = {} must be a nonnegative real",
                self.eta
            )));
        }
        if !(self.xi > 1.0) || !self.xi.is_finite() {
            return Err(Error::validation(format!(
                "sparse coding: penalty growth xi = {} must exceed 1",
                self.xi
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::validation(format!(
                "sparse coding: tolerance eps = {} must be positive",
                self.eps
            )));
        }
        if !(self.rho0 > 0.0) || !(self.rho0 < self.rho_max) {
            return Err(Error::validation(format!(
                "sparse coding: need 0 < rho0 < rho_max, got {} and {}",
                self.rho0, self.rho_max
            )));
        }
        Ok(())
    }
}

/// Solver state: codes, the sparsity split, its multiplier, and the
/// penalty.
#[derive(Debug, Clone)]
pub struct SStepState {
    /// Codes (`L × N₁`), columns summing to one after every update.
    pub y: Matrix,
    /// Sparsity split of `y`.
    pub o: Matrix,
    pub delta: Matrix,
    pub rho: f64,
    pub iter: usize,
}

/// Code update: minimizes the fit term plus `ρ/2‖Y − O − Δ/ρ‖²_F` under
/// the column-sum constraint — the sum-to-one solve of
/// `Ã = D_mᵀD_m + ρI` against `B̃ = D_mᵀM_out + ρO + Δ`, executed in
/// column blocks.
pub fn update_y(
    state: &SStepState,
    d_m: &Matrix,
    m_out: &Matrix,
    params: &SStepParams,
) -> Result<Matrix> {
    update_y_blocked(state, d_m, m_out, params, COLUMN_BLOCK)
}

fn update_y_blocked(
    state: &SStepState,
    d_m: &Matrix,
    m_out: &Matrix,
    _params: &SStepParams,
    block: usize,
) -> Result<Matrix> {
    let a = d_m.gram().add_diag(state.rho);
    let d_m_t = d_m.transpose();
    let n = m_out.cols();
    let starts: Vec<usize> = (0..n).step_by(block.max(1)).collect();
    let blocks: Vec<(usize, Matrix)> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + block).min(n);
            let b = d_m_t
                .matmul(&m_out.col_range(start, end))
                .add_scaled(&state.o.col_range(start, end), state.rho)
                .add_scaled(&state.delta.col_range(start, end), 1.0);
            Ok((start, sum_to_one_solve(&a, &b)?))
        })
        .collect::<Result<_>>()?;
    let mut y = Matrix::zeros(d_m.cols(), n);
    for (start, b) in blocks {
        y.paste_cols(start, &b);
    }
    Ok(y)
}

/// Sparsity split update: entrywise shrink of the multiplier-shifted
/// codes by `eta/ρ`.
pub fn update_o(state: &SStepState, eta: f64) -> Matrix {
    soft_threshold(
        &state.y.add_scaled(&state.delta, -1.0 / state.rho),
        eta / state.rho,
    )
}

/// Multiplier ascent on the split residual, then penalty growth
/// `ρ ← min(ξρ, ρ_max)`.
pub fn update_delta(state: &mut SStepState, params: &SStepParams) {
    let rho = state.rho;
    state.delta = state
        .delta
        .add_scaled(&state.o.add_scaled(&state.y, -1.0), rho);
    state.rho = (params.xi * rho).min(params.rho_max);
}

/// The inference objective: `½‖M_out − D_m·Y‖²_F + η‖Y‖₁`.
pub fn objective_sstep(d_m: &Matrix, y: &Matrix, m_out: &Matrix, eta: f64) -> f64 {
    let fit = m_out.add_scaled(&d_m.matmul(y), -1.0).frob();
    0.5 * fit * fit + eta * y.abs_sum()
}

/// Residual names in trace column order.
pub const SSTEP_RESIDUALS: [&str; 1] = ["res_code"];

/// Encode every `m_out` column on the broadband dictionary.
///
/// Returns the codes `Y` (`L × N₁`, columns summing to one) and a trace
/// of objective, split residual `‖O − Y‖_F`, and penalty per iteration.
/// `Y` starts at uniform `1/L` columns (feasible), `O` and `Δ` at zero.
/// Deterministic for fixed inputs.
pub fn run_sstep(m_out: &Matrix, d_m: &Matrix, params: &SStepParams) -> Result<(Matrix, AdmmTrace)> {
    run_sstep_blocked(m_out, d_m, params, COLUMN_BLOCK)
}

fn run_sstep_blocked(
    m_out: &Matrix,
    d_m: &Matrix,
    params: &SStepParams,
    block: usize,
) -> Result<(Matrix, AdmmTrace)> {
    params.validate()?;
    let l = d_m.cols();
    if l == 0 || d_m.rows() == 0 {
        return Err(Error::validation(
            "sparse coding: dictionary has no atoms",
        ));
    }
    if m_out.cols() == 0 {
        return Err(Error::validation(
            "sparse coding: no pixels to encode",
        ));
    }
    if m_out.rows() != d_m.rows() {
        return Err(Error::Shape(format!(
            "sparse coding: {} data rows vs {} dictionary rows",
            m_out.rows(),
            d_m.rows()
        )));
    }

    let n = m_out.cols();
    let mut state = SStepState {
        y: Matrix::filled(l, n, 1.0 / l as f64),
        o: Matrix::zeros(l, n),
        delta: Matrix::zeros(l, n),
        rho: params.rho0,
        iter: 0,
    };
    let mut trace = AdmmTrace::new(SSTEP_RESIDUALS.to_vec());

    for iter in 1..=params.max_iter {
        state.y = update_y_blocked(&state, d_m, m_out, params, block)?;
        state.o = update_o(&state, params.eta);
        for (name, m) in [("code update", &state.y), ("sparsity split update", &state.o)] {
            if !m.all_finite() {
                return Err(Error::Divergence(format!(
                    "sparse coding diverged: {name} produced non-finite values at iteration {iter}"
                )));
            }
        }
        let residual = state.o.add_scaled(&state.y, -1.0).frob();
        let rho_used = state.rho;
        update_delta(&mut state, params);
        state.iter = iter;
        trace.push(
            iter,
            objective_sstep(d_m, &state.y, m_out, params.eta),
            vec![residual],
            rho_used,
        );
        if residual < params.eps {
            trace.mark_converged();
            break;
        }
    }
    Ok((state.y, trace))
}

/// Predict narrowband spectra from codes: `Ĥ = D_h·Y`.
///
/// A plain matrix product — values are *not* clamped to the reflectance
/// range here; clamping happens only on cube export so that metrics see
/// the raw estimate.
pub fn reconstruct(d_h: &Matrix, y: &Matrix) -> Result<Matrix> {
    if d_h.cols() != y.rows() {
        return Err(Error::Shape(format!(
            "reconstruct: {} dictionary atoms vs {} code rows",
            d_h.cols(),
            y.rows()
        )));
    }
    Ok(d_h.matmul(y))
}
