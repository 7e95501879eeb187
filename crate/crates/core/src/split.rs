//! Overlap geometry: carving the scene into training and prediction data.
//!
//! The acquisition geometry is a vertical strip: hyperspectral coverage
//! exists only for a contiguous range of image columns, while the
//! multispectral cube covers everything. [`split_overlap`] turns the two
//! cubes into the four matrices the learning stages consume:
//!
//! * `h_in` (`P × N`), `m_in` (`Q × N`) — paired spectra inside the strip;
//! * `m_out` (`Q × N₁`) — multispectral pixels outside it;
//! * `h_out_ref` (`P × N₁`) — held-out hyperspectral truth, when the
//!   full reference cube is available (simulation studies).
//!
//! Matrix columns enumerate pixels in raster order restricted to the
//! region (`y` outer, `x` inner). [`OverlapSplit::assemble`] inverts the
//! split, writing an in-strip and an out-strip matrix back into cube
//! geometry; together with the pixel coordinate accessors this is the
//! single source of truth for pixel/column correspondence.

use crate::cube::SpectralCube;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct OverlapSplit {
    pub h_in: Matrix,
    pub m_in: Matrix,
    pub m_out: Matrix,
    /// Ground-truth spectra for the out region, if a full reference
    /// hyperspectral cube was supplied.
    pub h_out_ref: Option<Matrix>,
    width: usize,
    height: usize,
    /// Half-open overlap column range.
    overlap: (usize, usize),
}

impl OverlapSplit {
    /// Assemble a split directly from its matrices — for callers that
    /// load persisted training data or preprocess spectra. Shape rules
    /// match [`split_overlap`]'s output: `h_in`/`m_in` share one column
    /// per in-strip pixel, `m_out` (and `h_out_ref` when given) one per
    /// out-strip pixel, raster order inside each region.
    pub fn from_matrices(
        h_in: Matrix,
        m_in: Matrix,
        m_out: Matrix,
        h_out_ref: Option<Matrix>,
        width: usize,
        height: usize,
        overlap: (usize, usize),
    ) -> Result<Self> {
        if overlap.0 >= overlap.1 || overlap.1 > width || height == 0 {
            return Err(Error::validation(format!(
                "split: overlap columns [{}, {}) invalid for width {width}",
                overlap.0, overlap.1
            )));
        }
        let strip = overlap.1 - overlap.0;
        let (n, n1) = (height * strip, height * (width - strip));
        if h_in.cols() != n || m_in.cols() != n || m_out.cols() != n1 {
            return Err(Error::Shape(format!(
                "split: expected {n} in / {n1} out pixel columns, got {} / {} / {}",
                h_in.cols(),
                m_in.cols(),
                m_out.cols()
            )));
        }
        if m_in.rows() != m_out.rows() || h_in.rows() <= m_in.rows() {
            return Err(Error::Shape(format!(
                "split: band counts inconsistent ({} narrow, {} / {} broad)",
                h_in.rows(),
                m_in.rows(),
                m_out.rows()
            )));
        }
        if let Some(h_out) = &h_out_ref {
            if h_out.rows() != h_in.rows() || h_out.cols() != n1 {
                return Err(Error::Shape(format!(
                    "split: reference block is {}x{}, expected {}x{n1}",
                    h_out.rows(),
                    h_out.cols(),
                    h_in.rows()
                )));
            }
        }
        Ok(OverlapSplit {
            h_in,
            m_in,
            m_out,
            h_out_ref,
            width,
            height,
            overlap,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Half-open column range `[start, end)` of the overlap strip.
    pub fn overlap_cols(&self) -> (usize, usize) {
        self.overlap
    }

    /// Number of in-strip pixels (`N`).
    pub fn num_in(&self) -> usize {
        self.h_in.cols()
    }

    /// Number of out-strip pixels (`N₁`).
    pub fn num_out(&self) -> usize {
        self.m_out.cols()
    }

    /// Image coordinates of in-strip matrix column `j`.
    pub fn in_pixel(&self, j: usize) -> (usize, usize) {
        let strip = self.overlap.1 - self.overlap.0;
        assert!(j < self.num_in(), "in_pixel: column {} of {}", j, self.num_in());
        (self.overlap.0 + j % strip, j / strip)
    }

    /// Image coordinates of out-strip matrix column `j`.
    pub fn out_pixel(&self, j: usize) -> (usize, usize) {
        let out_w = self.width - (self.overlap.1 - self.overlap.0);
        assert!(j < self.num_out(), "out_pixel: column {} of {}", j, self.num_out());
        let x_rel = j % out_w;
        let y = j / out_w;
        // Out-strip columns skip over the overlap range.
        let x = if x_rel < self.overlap.0 {
            x_rel
        } else {
            x_rel + (self.overlap.1 - self.overlap.0)
        };
        (x, y)
    }

    /// True if image column `x` lies inside the overlap strip.
    pub fn is_overlap_col(&self, x: usize) -> bool {
        x >= self.overlap.0 && x < self.overlap.1
    }

    /// Write an out-strip matrix into a cube covering only the
    /// prediction region: `width − strip` columns by `height` rows, with
    /// image columns renumbered by skipping the overlap strip (the same
    /// order [`OverlapSplit::out_pixel`] enumerates). With a full-width
    /// overlap this is an empty cube.
    pub fn assemble_out(&self, out_strip: &Matrix) -> Result<SpectralCube> {
        if out_strip.cols() != self.num_out() {
            return Err(Error::Shape(format!(
                "assemble_out: got {} columns, split has {} prediction pixels",
                out_strip.cols(),
                self.num_out()
            )));
        }
        let out_w = self.width - (self.overlap.1 - self.overlap.0);
        SpectralCube::from_matrix(out_strip, out_w, self.height)
    }

    /// Write an in-strip matrix and an out-strip matrix back into cube
    /// geometry. Both must have the same band count; the out matrix may
    /// be absent only when the overlap spans the full width.
    pub fn assemble(&self, in_strip: &Matrix, out_strip: &Matrix) -> Result<SpectralCube> {
        if in_strip.rows() != out_strip.rows() && self.num_out() > 0 {
            return Err(Error::Shape(format!(
                "assemble: band counts differ ({} vs {})",
                in_strip.rows(),
                out_strip.rows()
            )));
        }
        if in_strip.cols() != self.num_in() || out_strip.cols() != self.num_out() {
            return Err(Error::Shape(format!(
                "assemble: got {} in / {} out columns, split has {} / {}",
                in_strip.cols(),
                out_strip.cols(),
                self.num_in(),
                self.num_out()
            )));
        }
        let bands = in_strip.rows();
        let mut full = Matrix::zeros(bands, self.width * self.height);
        for j in 0..self.num_in() {
            let (x, y) = self.in_pixel(j);
            for b in 0..bands {
                full[(b, y * self.width + x)] = in_strip[(b, j)];
            }
        }
        for j in 0..self.num_out() {
            let (x, y) = self.out_pixel(j);
            for b in 0..bands {
                full[(b, y * self.width + x)] = out_strip[(b, j)];
            }
        }
        SpectralCube::from_matrix(&full, self.width, self.height)
    }
}

/// Split an (optionally reference) hyperspectral cube and a full-scene
/// multispectral cube along an overlap column strip.
///
/// `hs` must cover the whole scene here — this entry point serves
/// simulation studies where ground truth exists everywhere; `h_out_ref`
/// is populated from it. The overlap range is half-open and must be
/// nonempty; a strip spanning the entire width is legal (degenerate, no
/// prediction targets) and only logs a warning.
pub fn split_overlap(
    hs: &SpectralCube,
    ms: &SpectralCube,
    overlap_start: usize,
    overlap_end: usize,
) -> Result<OverlapSplit> {
    if hs.width() != ms.width() || hs.height() != ms.height() {
        return Err(Error::Shape(format!(
            "split: cube footprints differ ({}x{} vs {}x{})",
            hs.width(),
            hs.height(),
            ms.width(),
            ms.height()
        )));
    }
    if ms.bands() >= hs.bands() {
        return Err(Error::validation(format!(
            "split: multispectral cube has {} bands, expected fewer than the {} hyperspectral bands",
            ms.bands(),
            hs.bands()
        )));
    }
    if overlap_start >= overlap_end || overlap_end > hs.width() {
        return Err(Error::validation(format!(
            "split: overlap columns [{overlap_start}, {overlap_end}) invalid for width {}",
            hs.width()
        )));
    }
    if overlap_end - overlap_start == hs.width() {
        log::warn!("split: overlap spans the full width; nothing left to predict");
    }

    let height = hs.height();
    let strip = overlap_end - overlap_start;
    let n = height * strip;
    let n1 = height * (hs.width() - strip);

    let mut h_in = Matrix::zeros(hs.bands(), n);
    let mut m_in = Matrix::zeros(ms.bands(), n);
    let mut m_out = Matrix::zeros(ms.bands(), n1);
    let mut h_out = Matrix::zeros(hs.bands(), n1);

    let mut j_in = 0;
    let mut j_out = 0;
    for y in 0..height {
        for x in 0..hs.width() {
            if x >= overlap_start && x < overlap_end {
                for b in 0..hs.bands() {
                    h_in[(b, j_in)] = hs.value(x, y, b) as f64;
                }
                for b in 0..ms.bands() {
                    m_in[(b, j_in)] = ms.value(x, y, b) as f64;
                }
                j_in += 1;
            } else {
                for b in 0..ms.bands() {
                    m_out[(b, j_out)] = ms.value(x, y, b) as f64;
                }
                for b in 0..hs.bands() {
                    h_out[(b, j_out)] = hs.value(x, y, b) as f64;
                }
                j_out += 1;
            }
        }
    }
    debug_assert_eq!(j_in, n);
    debug_assert_eq!(j_out, n1);

    Ok(OverlapSplit {
        h_in,
        m_in,
        m_out,
        h_out_ref: Some(h_out),
        width: hs.width(),
        height,
        overlap: (overlap_start, overlap_end),
    })
}
