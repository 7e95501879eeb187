//! Reconstruction quality metrics.
//!
//! Five standard figures for comparing an estimated band-by-pixel block
//! against its reference, pinned to exact definitions so every consumer
//! agrees at the bit level:
//!
//! * **RMSE** — global root-mean-square difference over all entries.
//! * **PSNR** — mean over bands of `10·log₁₀(peak_b²/mse_b)`, where
//!   `peak_b` is the largest reference value in band `b`; each band is
//!   capped at 100 dB (a band reproduced exactly scores the cap).
//! * **SAD** — mean over pixels of the angle between reference and
//!   estimated spectra, in radians. Pixels whose reference or estimate
//!   has zero norm carry no angle and are excluded (with a warning).
//! * **SSIM** — mean over bands of the single-window structural
//!   similarity computed from global band statistics (no sliding
//!   window: blocks are compared as pixel sets, not perceptually),
//!   with the conventional constants `C₁ = 0.01²`, `C₂ = 0.03²` for
//!   unit dynamic range.
//! * **ERGAS** — `100·d·sqrt(mean_b((rmse_b/mean_b)²))` with the
//!   resolution ratio `d = 1` (both instruments share one ground
//!   sampling distance). Undefined when a reference band has zero
//!   mean, and reported as such rather than as a number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Resolution ratio between the compared products. Both sensors sample
/// the same grid here, so the classic ERGAS prefactor reduces to one.
const ERGAS_RESOLUTION_RATIO: f64 = 1.0;

/// PSNR ceiling: a band with zero error reports this value.
const PSNR_CAP_DB: f64 = 100.0;

/// Reconstruction quality summary. `ergas` is `None` when a reference
/// band mean is zero (the ratio is undefined there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub rmse: f64,
    /// Decibels, per-band average, each band capped at 100.
    pub psnr: f64,
    /// Radians, averaged over pixels with nonzero norms.
    pub sad: f64,
    pub ssim: f64,
    pub ergas: Option<f64>,
}

/// Computes all five metrics for an estimate against its reference.
///
/// Both blocks are `P × N` with one column per pixel; `width × height`
/// must equal `N`. Every statistic is global, so the layout never
/// influences a value — the geometry argument exists to catch
/// mismatched reshapes at the door.
pub fn recon_metrics(
    reference: &Matrix,
    estimate: &Matrix,
    width: usize,
    height: usize,
) -> Result<ReconReport> {
    if reference.rows() != estimate.rows() || reference.cols() != estimate.cols() {
        return Err(Error::Shape(format!(
            "metrics: reference is {}x{}, estimate {}x{}",
            reference.rows(),
            reference.cols(),
            estimate.rows(),
            estimate.cols()
        )));
    }
    let (p, n) = (reference.rows(), reference.cols());
    if p == 0 || n == 0 {
        return Err(Error::validation(
            "metrics: need at least one band and one pixel",
        ));
    }
    if width * height != n {
        return Err(Error::Shape(format!(
            "metrics: geometry {width}x{height} does not cover {n} pixels",
        )));
    }

    // Per-band error statistics feed RMSE, PSNR, and ERGAS alike.
    let mut mse_b = vec![0.0; p];
    let mut peak_b = vec![f64::NEG_INFINITY; p];
    let mut mean_b = vec![0.0; p];
    for b in 0..p {
        let r = reference.row(b);
        let e = estimate.row(b);
        let mut acc = 0.0;
        for j in 0..n {
            let d = r[j] - e[j];
            acc += d * d;
            if r[j] > peak_b[b] {
                peak_b[b] = r[j];
            }
            mean_b[b] += r[j];
        }
        mse_b[b] = acc / n as f64;
        mean_b[b] /= n as f64;
    }

    let rmse = (mse_b.iter().sum::<f64>() / p as f64).sqrt();

    let psnr = mse_b
        .iter()
        .zip(&peak_b)
        .map(|(&mse, &peak)| {
            if mse == 0.0 {
                PSNR_CAP_DB
            } else {
                (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
            }
        })
        .sum::<f64>()
        / p as f64;

    let sad = mean_spectral_angle(reference, estimate);
    let ssim = mean_band_ssim(reference, estimate);

    let ergas = if mean_b.iter().any(|&m| m == 0.0) {
        log::warn!("metrics: a reference band has zero mean, ERGAS is undefined");
        None
    } else {
        let ratio_sq = mse_b
            .iter()
            .zip(&mean_b)
            .map(|(&mse, &m)| mse / (m * m))
            .sum::<f64>()
            / p as f64;
        Some(100.0 * ERGAS_RESOLUTION_RATIO * ratio_sq.sqrt())
    };

    Ok(ReconReport {
        rmse,
        psnr,
        sad,
        ssim,
        ergas,
    })
}

/// Mean angle between paired pixel spectra, skipping pixels where
/// either side has zero norm.
///
/// The angle is evaluated through the chord, `2·asin(‖u − v‖/2)` for
/// unit vectors `u`, `v`: algebraically the same arc, but exact for
/// identical inputs and well-conditioned near zero, where the direct
/// arccosine loses half the significant digits.
fn mean_spectral_angle(reference: &Matrix, estimate: &Matrix) -> f64 {
    let (p, n) = (reference.rows(), reference.cols());
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for j in 0..n {
        let mut nr = 0.0;
        let mut ne = 0.0;
        for b in 0..p {
            nr += reference.row(b)[j] * reference.row(b)[j];
            ne += estimate.row(b)[j] * estimate.row(b)[j];
        }
        let (nr, ne) = (nr.sqrt(), ne.sqrt());
        if nr == 0.0 || ne == 0.0 {
            skipped += 1;
            continue;
        }
        let mut chord_sq = 0.0;
        for b in 0..p {
            let d = reference.row(b)[j] / nr - estimate.row(b)[j] / ne;
            chord_sq += d * d;
        }
        let half_chord = (chord_sq.sqrt() / 2.0).min(1.0);
        total += 2.0 * half_chord.asin();
        counted += 1;
    }
    if skipped > 0 {
        log::warn!("metrics: {skipped} zero-norm pixels excluded from the spectral angle");
    }
    if counted == 0 {
        return 0.0;
    }
    total / counted as f64
}

/// Mean over bands of the global-statistics structural similarity.
fn mean_band_ssim(reference: &Matrix, estimate: &Matrix) -> f64 {
    const C1: f64 = 0.01 * 0.01;
    const C2: f64 = 0.03 * 0.03;
    let (p, n) = (reference.rows(), reference.cols());
    let mut total = 0.0;
    for b in 0..p {
        let r = reference.row(b);
        let e = estimate.row(b);
        let mu_r = r.iter().sum::<f64>() / n as f64;
        let mu_e = e.iter().sum::<f64>() / n as f64;
        let mut var_r = 0.0;
        let mut var_e = 0.0;
        let mut cov = 0.0;
        for j in 0..n {
            let dr = r[j] - mu_r;
            let de = e[j] - mu_e;
            var_r += dr * dr;
            var_e += de * de;
            cov += dr * de;
        }
        var_r /= n as f64;
        var_e /= n as f64;
        cov /= n as f64;
        total += ((2.0 * mu_r * mu_e + C1) * (2.0 * cov + C2))
            / ((mu_r * mu_r + mu_e * mu_e + C1) * (var_r + var_e + C2));
    }
    total / p as f64
}
