//! Coupled dictionary learning for spectral super-resolution.
//!
//! A multispectral sensor covers a scene with a few broad channels; a
//! hyperspectral sensor covers only part of it with hundreds of narrow
//! bands. Where the two overlap, this crate learns a pair of coupled
//! nonnegative low-rank dictionaries — one per sensor — tied together by
//! shared sum-to-one sparse codes. Outside the overlap, sparse-coding the
//! multispectral pixels against the learned low-resolution dictionary and
//! expanding the codes through the high-resolution dictionary predicts
//! the missing hyperspectral bands.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`], [`solve`], [`svd`], [`prox`] — dense numeric kernels.
//! * [`cube`], [`srf`], [`split`], [`labels`], [`io`] — the data model:
//!   reflectance cubes, spectral response functions, overlap splits, and
//!   their file formats.
//! * [`dictlearn`] — the coupled dictionary learner (an ADMM loop).
//! * [`sparsecode`] — simplex-constrained sparse coding and
//!   reconstruction, plus the end-to-end [`pipeline`].
//! * [`baselines`] — nearest-neighbour copying, ridge channel
//!   regression, and an unlearned sampled-dictionary variant.
//! * [`metrics`], [`classify`], [`unmix`] — evaluation: reconstruction
//!   quality, downstream 1-NN classification, and abundance unmixing.
//! * [`synth`] — seeded planted-scene generator for demos and tests.

pub mod baselines;
pub mod classify;
pub mod cube;
pub mod dictlearn;
pub mod error;
pub mod io;
pub mod labels;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod prox;
pub mod solve;
pub mod sparsecode;
pub mod split;
pub mod srf;
pub mod svd;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
pub mod trace;
pub mod unmix;

pub use error::{Error, Result};
pub use matrix::Matrix;
