//! Fully constrained linear unmixing and its accuracy scores.
//!
//! Each pixel spectrum `h` is decomposed over a set of endmember
//! spectra `E` as the abundance vector solving
//!
//! ```text
//!   min_a ‖h − E·a‖₂   subject to  a ≥ 0,  1ᵀa = 1,
//! ```
//!
//! by an exact active-set method: solve the sum-to-one least squares on
//! the currently positive abundances, walk back along the segment to
//! the feasible set when a coefficient would turn negative (freezing it
//! at zero), and release a frozen coefficient whenever its Lagrange
//! multiplier says the objective can still fall. Every returned pixel
//! is certified: feasibility to `1e-8`, nonnegativity to `−1e-12`, and
//! a KKT stationarity residual of at most `1e-6` — a pixel that cannot
//! be certified is reported as an error naming it.
//!
//! Pixels are independent, so the solver fans them out across worker
//! threads with disjoint outputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::solve::sum_to_one_solve;

/// Certification bound on the KKT stationarity residual.
const KKT_TOL: f64 = 1e-6;

/// A frozen coefficient whose multiplier dips below this is released
/// for another solve round.
const RELEASE_TOL: f64 = 1e-10;

/// A sample mean with its population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Unmixing accuracy summary: abundance error, reconstruction
/// residual, and spectral angle, each as mean ± std over pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmixReport {
    /// Per-pixel RMS abundance error against the true abundances.
    pub armse: MeanStd,
    /// Per-pixel RMS of the spectral residual `h − E·â`.
    pub rrmse: MeanStd,
    /// Per-pixel angle between `h` and `E·â`, radians.
    pub asam: MeanStd,
}

/// Unmixes every column of `spectra` (`P × N`) over the endmember
/// columns of `endmembers` (`P × K`), returning `K × N` abundances.
pub fn fclsu(spectra: &Matrix, endmembers: &Matrix) -> Result<Matrix> {
    let (p, k, n) = (endmembers.rows(), endmembers.cols(), spectra.cols());
    if k == 0 {
        return Err(Error::validation("unmixing: no endmembers"));
    }
    if spectra.rows() != p {
        return Err(Error::Shape(format!(
            "unmixing: spectra have {} bands, endmembers {}",
            spectra.rows(),
            p
        )));
    }

    let gram = endmembers.gram();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            // cᵢ = ⟨endmember i, pixel⟩ feeds both the solves and the
            // KKT certificate.
            let mut c = vec![0.0; k];
            for i in 0..k {
                for b in 0..p {
                    c[i] += endmembers.row(b)[i] * spectra.row(b)[j];
                }
            }
            fclsu_pixel(&gram, &c, j)
        })
        .collect::<Result<_>>()?;

    let mut out = Matrix::zeros(k, n);
    for (j, col) in columns.iter().enumerate() {
        out.set_col(j, col);
    }
    Ok(out)
}

/// Active-set solve for one pixel. `gram = EᵀE`, `c = Eᵀh`.
fn fclsu_pixel(gram: &Matrix, c: &[f64], pixel: usize) -> Result<Vec<f64>> {
    let k = gram.rows();
    if k == 1 {
        // The simplex is a single point.
        return Ok(vec![1.0]);
    }

    let mut free = vec![true; k];
    let mut a = vec![1.0 / k as f64; k];
    // Each round either frees a coefficient (at most K of them, each
    // at most once per sign pattern) or stops; the freeze walk inside
    // shrinks the free set strictly. The cap is generous slack over
    // the worst case rather than a tuning knob.
    let max_rounds = 4 * k + 16;

    for _ in 0..max_rounds {
        solve_on_free_set(gram, c, &mut free, &mut a, pixel)?;

        // Stationarity on the free set fixes the equality multiplier;
        // frozen coefficients stay at zero only while their own
        // multiplier `gᵢ + λ` is nonnegative.
        let g = gradient(gram, c, &a);
        let (mut lambda, mut count) = (0.0, 0);
        for i in 0..k {
            if free[i] {
                lambda -= g[i];
                count += 1;
            }
        }
        lambda /= count as f64;

        let scale = 1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = (0usize, 0.0f64);
        for i in 0..k {
            if !free[i] && g[i] + lambda < worst.1 {
                worst = (i, g[i] + lambda);
            }
        }
        if worst.1 < -RELEASE_TOL * scale {
            free[worst.0] = true;
        } else {
            certify(gram, c, &a, &free, pixel)?;
            return Ok(a);
        }
    }
    Err(Error::Divergence(format!(
        "unmixing did not settle on an active set at pixel {pixel}"
    )))
}

/// Solves the sum-to-one least squares on the free coefficients,
/// walking back toward the previous feasible point and freezing
/// coefficients at zero until the solution is nonnegative.
fn solve_on_free_set(
    gram: &Matrix,
    c: &[f64],
    free: &mut [bool],
    a: &mut [f64],
    pixel: usize,
) -> Result<()> {
    loop {
        let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
        let s = idx.len();
        let sub_gram = Matrix::from_fn(s, s, |r, q| gram[(idx[r], idx[q])]);
        let sub_c = Matrix::column(&idx.iter().map(|&i| c[i]).collect::<Vec<_>>());
        let y = sum_to_one_solve(&sub_gram, &sub_c).map_err(|e| {
            Error::Divergence(format!("unmixing failed at pixel {pixel}: {e}"))
        })?;
        let y: Vec<f64> = (0..s).map(|r| y.row(r)[0]).collect();

        if y.iter().all(|&v| v >= 0.0) {
            for (r, &i) in idx.iter().enumerate() {
                a[i] = y[r];
            }
            return Ok(());
        }

        // Longest feasible step from the current point toward the
        // solve; the blocking coefficient lands exactly on zero. Every
        // negative coefficient must be eligible to block even when its
        // ratio rounds to exactly one (a pixel sitting on a simplex
        // face solves to an abundance of about −1e-19, and 0.25/(0.25 +
        // 1e-19) is 1.0 in floating point) — a strict comparison
        // against an initial step of one would skip it and freeze an
        // unrelated coefficient instead. A coefficient already at or
        // below zero blocks immediately.
        let mut t = 1.0f64;
        let mut blocker = None;
        for (r, &i) in idx.iter().enumerate() {
            if y[r] < 0.0 {
                let step = if a[i] > 0.0 {
                    (a[i] / (a[i] - y[r])).min(1.0)
                } else {
                    0.0
                };
                if blocker.is_none() || step < t {
                    t = step;
                    blocker = Some(i);
                }
            }
        }
        let Some(blocker) = blocker else {
            // Only reachable when the solve produced a NaN.
            return Err(Error::Divergence(format!(
                "unmixing produced a non-finite coefficient at pixel {pixel}"
            )));
        };
        for (r, &i) in idx.iter().enumerate() {
            a[i] += t * (y[r] - a[i]);
        }
        a[blocker] = 0.0;
        free[blocker] = false;
    }
}

fn gradient(gram: &Matrix, c: &[f64], a: &[f64]) -> Vec<f64> {
    let k = c.len();
    let mut g = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i] += gram[(i, j)] * a[j];
        }
        g[i] -= c[i];
    }
    g
}

/// Confirms the finished pixel meets the advertised optimality and
/// feasibility bounds.
fn certify(gram: &Matrix, c: &[f64], a: &[f64], free: &[bool], pixel: usize) -> Result<()> {
    let g = gradient(gram, c, a);
    let (mut lambda, mut count) = (0.0, 0);
    for i in 0..a.len() {
        if free[i] {
            lambda -= g[i];
            count += 1;
        }
    }
    lambda /= count as f64;

    let mut residual: f64 = (a.iter().sum::<f64>() - 1.0).abs();
    for i in 0..a.len() {
        residual = residual.max(-a[i]);
        if free[i] {
            residual = residual.max((g[i] + lambda).abs());
        } else {
            residual = residual.max(-(g[i] + lambda));
        }
    }
    if residual > KKT_TOL {
        return Err(Error::Divergence(format!(
            "unmixing failed to certify optimality at pixel {pixel}: residual {residual:.3e}"
        )));
    }
    Ok(())
}

/// Scores estimated abundances against the truth and the spectra they
/// should explain. `est_abund` and `true_abund` are `K × N`, `spectra`
/// is `P × N`, `endmembers` is `P × K`.
pub fn unmix_scores(
    est_abund: &Matrix,
    true_abund: &Matrix,
    spectra: &Matrix,
    endmembers: &Matrix,
) -> Result<UnmixReport> {
    let (k, n) = (est_abund.rows(), est_abund.cols());
    let p = spectra.rows();
    if true_abund.rows() != k || true_abund.cols() != n {
        return Err(Error::Shape(format!(
            "unmixing scores: abundance blocks are {}x{} and {}x{}",
            k,
            n,
            true_abund.rows(),
            true_abund.cols()
        )));
    }
    if spectra.cols() != n || endmembers.rows() != p || endmembers.cols() != k {
        return Err(Error::Shape(format!(
            "unmixing scores: spectra {}x{} and endmembers {}x{} do not match {k} abundances on {n} pixels",
            p,
            spectra.cols(),
            endmembers.rows(),
            endmembers.cols()
        )));
    }
    if n == 0 {
        return Err(Error::validation("unmixing scores: no pixels"));
    }

    let resynth = endmembers.matmul(est_abund);
    let mut armse = Vec::with_capacity(n);
    let mut rrmse = Vec::with_capacity(n);
    let mut asam = Vec::with_capacity(n);
    for j in 0..n {
        let mut sq = 0.0;
        for i in 0..k {
            let d = est_abund.row(i)[j] - true_abund.row(i)[j];
            sq += d * d;
        }
        armse.push((sq / k as f64).sqrt());

        let mut rsq = 0.0;
        let mut nh = 0.0;
        let mut nr = 0.0;
        for b in 0..p {
            let d = spectra.row(b)[j] - resynth.row(b)[j];
            rsq += d * d;
            nh += spectra.row(b)[j] * spectra.row(b)[j];
            nr += resynth.row(b)[j] * resynth.row(b)[j];
        }
        rrmse.push((rsq / p as f64).sqrt());

        let (nh, nr) = (nh.sqrt(), nr.sqrt());
        if nh == 0.0 || nr == 0.0 {
            // No direction to compare against; the angle degenerates.
            asam.push(0.0);
            continue;
        }
        let mut chord_sq = 0.0;
        for b in 0..p {
            let d = spectra.row(b)[j] / nh - resynth.row(b)[j] / nr;
            chord_sq += d * d;
        }
        let half_chord = (chord_sq.sqrt() / 2.0).min(1.0);
        asam.push(2.0 * half_chord.asin());
    }

    Ok(UnmixReport {
        armse: mean_std(&armse),
        rrmse: mean_std(&rrmse),
        asam: mean_std(&asam),
    })
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.max(0.0).sqrt(),
    }
}
