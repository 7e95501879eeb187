//! Reflectance cubes: the in-memory image type.
//!
//! A [`SpectralCube`] is a `width × height × bands` block of reflectance
//! samples in `[0, 1]`, stored band-sequential (all of band 0, then all
//! of band 1, ...) with rows raster-ordered inside each band. Samples are
//! kept as `f32` — the on-disk sample type — so saving and reloading any
//! cube, including one computed in memory, is bit-exact. Solvers never
//! touch cubes directly; they work on `f64` matrices extracted through
//! [`SpectralCube::to_matrix`], where each column is one pixel spectrum
//! in raster order.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How far outside `[0, 1]` an f64 value may land before the export
/// clamp is considered worth a warning (anything closer is roundoff).
const QUIET_CLAMP_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    width: usize,
    height: usize,
    bands: usize,
    /// Band-sequential samples: `values[b·W·H + y·W + x]`.
    values: Vec<f32>,
}

impl SpectralCube {
    /// Wrap a sample buffer, validating length, finiteness and range.
    ///
    /// A zero-pixel footprint (width or height 0) is legal and yields an
    /// empty cube — the natural result of reconstructing a scene with no
    /// prediction region. The band count must always be positive.
    pub fn new(width: usize, height: usize, bands: usize, values: Vec<f32>) -> Result<Self> {
        if bands == 0 {
            return Err(Error::validation(format!(
                "cube band count must be positive (got {width}x{height}x{bands})"
            )));
        }
        let expect = width * height * bands;
        if values.len() != expect {
            return Err(Error::validation(format!(
                "cube buffer has {} samples, expected {width}x{height}x{bands} = {expect}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "cube sample {i} is not finite"
                )));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!(
                    "cube sample {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(SpectralCube {
            width,
            height,
            bands,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    /// True when the footprint contains no pixels.
    pub fn is_empty(&self) -> bool {
        self.num_pixels() == 0
    }

    /// Raw band-sequential samples.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// All samples of one band, raster order.
    pub fn band(&self, b: usize) -> &[f32] {
        assert!(b < self.bands, "band {} out of {}", b, self.bands);
        let n = self.num_pixels();
        &self.values[b * n..(b + 1) * n]
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize, b: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height && b < self.bands);
        self.values[b * self.num_pixels() + y * self.width + x]
    }

    /// One pixel's spectrum as f64 (exact widening).
    pub fn pixel_spectrum(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.bands).map(|b| self.value(x, y, b) as f64).collect()
    }

    /// Flatten to a `bands × pixels` matrix, pixels in raster order.
    pub fn to_matrix(&self) -> Matrix {
        let n = self.num_pixels();
        let mut m = Matrix::zeros(self.bands, n);
        for b in 0..self.bands {
            let src = self.band(b);
            let dst = m.row_mut(b);
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s as f64;
            }
        }
        m
    }

    /// Quantize a `bands × pixels` matrix back into a cube.
    ///
    /// This is the export path: f64 values are clamped to `[0, 1]` and
    /// rounded to f32. Excursions beyond roundoff distance are counted
    /// and reported through a warning, not an error — solver output may
    /// legitimately overshoot the reflectance range by a little.
    pub fn from_matrix(m: &Matrix, width: usize, height: usize) -> Result<Self> {
        if m.cols() != width * height {
            return Err(Error::Shape(format!(
                "matrix has {} pixel columns, expected {width}x{height} = {}",
                m.cols(),
                width * height
            )));
        }
        if !m.all_finite() {
            return Err(Error::validation(
                "cube export: matrix contains non-finite entries",
            ));
        }
        let bands = m.rows();
        let mut values = Vec::with_capacity(bands * m.cols());
        let mut clamped = 0usize;
        for b in 0..bands {
            for &v in m.row(b) {
                if !(-QUIET_CLAMP_MARGIN..=1.0 + QUIET_CLAMP_MARGIN).contains(&v) {
                    clamped += 1;
                }
                values.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        if clamped > 0 {
            log::warn!("cube export clamped {clamped} samples to [0, 1]");
        }
        SpectralCube::new(width, height, bands, values)
    }

    /// Smallest and largest sample.
    pub fn value_range(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn checkerboard(width: usize, height: usize, bands: usize) -> SpectralCube {
        let mut values = vec![0.0f32; width * height * bands];
        for b in 0..bands {
            for y in 0..height {
                for x in 0..width {
                    values[b * width * height + y * width + x] =
                        ((x + y + b) % 2) as f32 * 0.5 + 0.25;
                }
            }
        }
        SpectralCube::new(width, height, bands, values).unwrap()
    }

    #[test]
    fn indexing_matches_band_sequential_layout() {
        let c = checkerboard(4, 3, 2);
        assert_eq!(c.value(0, 0, 0), 0.25);
        assert_eq!(c.value(1, 0, 0), 0.75);
        assert_eq!(c.value(0, 0, 1), 0.75);
        // Band slices are W*H long and raster ordered.
        assert_eq!(c.band(1).len(), 12);
        assert_eq!(c.band(1)[4 * 1 + 1], c.value(1, 1, 1));
    }

    #[test]
    fn matrix_roundtrip_preserves_pixel_order() {
        let c = checkerboard(5, 4, 3);
        let m = c.to_matrix();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.cols(), 20);
        // Column j is pixel (x, y) with j = y*W + x.
        let j = 2 * 5 + 3;
        assert_eq!(m.col(j), c.pixel_spectrum(3, 2));
        let back = SpectralCube::from_matrix(&m, 5, 4).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn construction_rejects_out_of_range_samples() {
        let err = SpectralCube::new(1, 1, 2, vec![0.5, 1.5]);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = SpectralCube::new(1, 1, 2, vec![0.5, f32::NAN]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn construction_rejects_wrong_buffer_length() {
        assert!(SpectralCube::new(2, 2, 2, vec![0.0; 7]).is_err());
    }

    #[test]
    fn zero_pixel_cube_is_legal_but_zero_bands_are_not() {
        let empty = SpectralCube::new(0, 3, 4, vec![]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.bands(), 4);
        assert_eq!(empty.to_matrix().cols(), 0);
        assert!(SpectralCube::new(2, 2, 0, vec![]).is_err());
    }

    #[test]
    fn export_clamps_overshoot() {
        let m = Matrix::from_rows(&[vec![-0.2, 0.5], vec![1.3, 1.0]]);
        let c = SpectralCube::from_matrix(&m, 2, 1).unwrap();
        assert_eq!(c.value(0, 0, 0), 0.0);
        assert_eq!(c.value(0, 0, 1), 1.0);
        assert_eq!(c.value(1, 0, 0), 0.5);
    }
}
