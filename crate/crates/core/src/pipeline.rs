//! End-to-end spectral super-resolution: train on the overlap, encode
//! the prediction region, reconstruct, and reassemble into a cube.

use crate::cube::SpectralCube;
use crate::dictlearn::{run_dstep, DStepParams, DictionaryPair};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::sparsecode::{reconstruct, run_sstep, SStepParams};
use crate::split::OverlapSplit;
use crate::trace::AdmmTrace;

/// Everything a pipeline run produces, for callers that want to persist
/// or inspect the intermediates.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Reconstruction of the prediction region, in the out-region cube
    /// geometry of [`OverlapSplit::assemble_out`] (empty when the
    /// overlap spans the scene).
    pub recon: SpectralCube,
    /// Learned dictionary pair.
    pub dict: DictionaryPair,
    /// Training codes over the overlap (`L × N`).
    pub train_codes: Matrix,
    /// Prediction codes (`L × N₁`; zero columns when `N₁ = 0`).
    pub codes: Matrix,
    /// Raw (unclamped) reconstruction matrix, one column per
    /// out-region pixel — metrics should use this, not the cube.
    pub recon_matrix: Matrix,
    pub dstep_trace: AdmmTrace,
    /// Empty (zero iterations) when there was nothing to encode.
    pub sstep_trace: AdmmTrace,
}

/// Run the two solver stages and reassemble the predicted spectra.
///
/// Returns the out-region reconstruction as a cube plus all
/// intermediates. With a full-width overlap there is nothing to
/// predict: the sparse-coding stage is skipped and the cube is empty.
/// Deterministic for a fixed seed and parameter set.
pub fn jslol_pipeline(
    split: &OverlapSplit,
    dparams: &DStepParams,
    sparams: &SStepParams,
) -> Result<PipelineOutput> {
    let (dict, train_codes, dstep_trace) = run_dstep(split, dparams)?;

    let (codes, sstep_trace) = if split.num_out() == 0 {
        log::warn!("pipeline: overlap spans the scene; nothing to predict");
        (
            Matrix::zeros(dict.atoms(), 0),
            AdmmTrace::new(crate::sparsecode::SSTEP_RESIDUALS.to_vec()),
        )
    } else {
        run_sstep(&split.m_out, &dict.d_m, sparams)?
    };

    let recon_matrix = reconstruct(&dict.d_h, &codes)?;
    let recon = split.assemble_out(&recon_matrix)?;
    Ok(PipelineOutput {
        recon,
        dict,
        train_codes,
        codes,
        recon_matrix,
        dstep_trace,
        sstep_trace,
    })
}
