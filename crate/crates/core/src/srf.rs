//! Spectral response functions and multispectral simulation.
//!
//! An [`Srf`] maps a `P`-band narrowband spectrum onto `Q < P` broad
//! channels: each channel is a convex combination of bands (nonnegative
//! row weights summing to one). Real instruments come in as CSV; the
//! [`Srf::box_average`] constructor builds the idealized flat response
//! that simply averages contiguous band groups, which is what synthetic
//! experiments use.

use crate::cube::SpectralCube;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Row-sum tolerance when validating user-supplied response tables.
const ROW_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Srf {
    /// `channels × bands` weight table.
    weights: Matrix,
}

impl Srf {
    /// Validate and wrap a `Q × P` weight table.
    pub fn new(weights: Matrix) -> Result<Self> {
        let (q, p) = (weights.rows(), weights.cols());
        if q == 0 || p == 0 {
            return Err(Error::validation("srf: empty weight table"));
        }
        if q >= p {
            return Err(Error::validation(format!(
                "srf: {q} channels must be fewer than {p} bands"
            )));
        }
        for r in 0..q {
            let mut sum = 0.0;
            for &w in weights.row(r) {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::validation(format!(
                        "srf: channel {r} has a negative or non-finite weight"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::validation(format!(
                    "srf: channel {r} weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Srf { weights })
    }

    /// Idealized flat response: split `bands` contiguous bands into
    /// `channels` groups (as even as possible, leftovers to the leading
    /// groups) and average inside each group.
    pub fn box_average(bands: usize, channels: usize) -> Result<Self> {
        if channels == 0 || channels >= bands {
            return Err(Error::validation(format!(
                "box srf: need 0 < channels < bands (got {channels} of {bands})"
            )));
        }
        let base = bands / channels;
        let extra = bands % channels;
        let mut weights = Matrix::zeros(channels, bands);
        let mut start = 0;
        for ch in 0..channels {
            let len = base + usize::from(ch < extra);
            for b in start..start + len {
                weights[(ch, b)] = 1.0 / len as f64;
            }
            start += len;
        }
        debug_assert_eq!(start, bands);
        Ok(Srf { weights })
    }

    pub fn channels(&self) -> usize {
        self.weights.rows()
    }

    pub fn bands(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// Apply the response to a `P × n` spectra matrix.
    pub fn apply(&self, spectra: &Matrix) -> Result<Matrix> {
        if spectra.rows() != self.bands() {
            return Err(Error::Shape(format!(
                "srf: spectra have {} bands, response table expects {}",
                spectra.rows(),
                self.bands()
            )));
        }
        Ok(self.weights.matmul(spectra))
    }
}

/// Degrade a hyperspectral cube to the response's broad channels.
///
/// Every output pixel is the channelwise convex combination of that
/// pixel's narrowband spectrum, so values stay inside `[0, 1]`.
pub fn simulate_ms(hs: &SpectralCube, srf: &Srf) -> Result<SpectralCube> {
    if hs.bands() != srf.bands() {
        return Err(Error::Shape(format!(
            "simulate: cube has {} bands, srf expects {}",
            hs.bands(),
            srf.bands()
        )));
    }
    let ms = srf.apply(&hs.to_matrix())?;
    SpectralCube::from_matrix(&ms, hs.width(), hs.height())
}
