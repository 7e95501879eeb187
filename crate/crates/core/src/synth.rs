//! Seeded planted-scene generator for demos and convergence tests.
//!
//! The generator builds a scene from a hidden model with known structure:
//!
//! * a hidden spectral dictionary `D* = u₀·1ᵀ + U·C` whose atoms share a
//!   positive base spectrum `u₀` plus a few latent spectral factors, so
//!   `D*` has rank `channels + 1`;
//! * per-pixel codes that are sparse convex combinations of atoms
//!   (nonnegative, summing to one, a handful of nonzeros each);
//! * the hyperspectral cube `H = D*·codes` and — downstream, via the box
//!   response — its multispectral degradation.
//!
//! Two properties make this the right test bed. First, because the
//! all-ones functional is inside the span of the latent factors' loadings
//! and codes sum to one, every narrowband spectrum is an *affine*
//! function of its broad channels: held-out spectra are fully determined
//! by the multispectral data, so near-exact recovery is achievable and a
//! reconstruction method can be held to a tight error bound. Second, the
//! spectra span `channels + 1` dimensions — one more than any linear map
//! of the channels can produce — so a plain channel regression has an
//! irreducible error floor and cannot tie an exact method.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::SpectralCube;
use crate::error::{Error, Result};
use crate::labels::{LabelField, SampleRole};
use crate::matrix::Matrix;
use crate::srf::Srf;

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    /// Hyperspectral band count `P`.
    pub bands: usize,
    /// Multispectral channel count `Q` (the hidden rank is `Q + 1`).
    pub channels: usize,
    /// Hidden dictionary size.
    pub atoms: usize,
    /// Nonzeros per pixel code.
    pub sparsity: usize,
    pub width: usize,
    pub height: usize,
    /// The overlap strip is columns `[0, overlap_end)`.
    pub overlap_end: usize,
    pub seed: u64,
}

impl PlantedConfig {
    /// The footprint used by the demo and the convergence suites:
    /// 40 bands, 4 channels, 30 atoms, 3-sparse codes, and a 40×20 scene
    /// split 500 / 300 pixels by a 25-column strip.
    pub fn standard(seed: u64) -> Self {
        PlantedConfig {
            bands: 40,
            channels: 4,
            atoms: 30,
            sparsity: 3,
            width: 40,
            height: 20,
            overlap_end: 25,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedScene {
    pub config: PlantedConfig,
    /// Ground-truth hyperspectral cube over the whole scene.
    pub hs: SpectralCube,
    /// Box-average response used to degrade it.
    pub srf: Srf,
    /// Hidden spectral dictionary (`bands × atoms`).
    pub dictionary: Matrix,
    /// Hidden codes (`atoms × pixels`, raster order), sparse columns on
    /// the simplex.
    pub codes: Matrix,
}

impl PlantedScene {
    /// Index of the heaviest atom in pixel (x, y)'s code.
    pub fn dominant_atom(&self, x: usize, y: usize) -> usize {
        let j = y * self.config.width + x;
        let mut best = 0;
        for l in 1..self.config.atoms {
            if self.codes[(l, j)] > self.codes[(best, j)] {
                best = l;
            }
        }
        best
    }

    /// Synthetic ground-truth labels: pixels are classed by their
    /// dominant atom, bucketed into `num_classes` groups; overlap-strip
    /// pixels become training samples, the rest test samples.
    pub fn label_field(&self, num_classes: u32) -> Result<LabelField> {
        let cfg = &self.config;
        let mut records = Vec::new();
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let atom = self.dominant_atom(x, y);
                let class = (atom * num_classes as usize / cfg.atoms) as u32 + 1;
                let role = if x < cfg.overlap_end {
                    SampleRole::Train
                } else {
                    SampleRole::Test
                };
                records.push((y, x, class, role));
            }
        }
        LabelField::from_records(cfg.width, cfg.height, &records)
    }
}

/// Generate a planted scene. Fully determined by the config (seed
/// included); the same config always yields the same scene.
pub fn generate_planted_scene(config: &PlantedConfig) -> Result<PlantedScene> {
    let (p, q, l) = (config.bands, config.channels, config.atoms);
    if q + 1 >= p {
        return Err(Error::validation(format!(
            "planted scene: channels + 1 = {} must be below bands = {p}",
            q + 1
        )));
    }
    if config.sparsity == 0 || config.sparsity > l {
        return Err(Error::validation(format!(
            "planted scene: sparsity {} out of range for {l} atoms",
            config.sparsity
        )));
    }
    if config.overlap_end == 0 || config.overlap_end > config.width {
        return Err(Error::validation(format!(
            "planted scene: overlap end {} invalid for width {}",
            config.overlap_end, config.width
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Hidden dictionary: base spectrum in [0.1, 0.3], factor loadings in
    // [0, 0.7/q], factor coefficients in [0, 1]. Atom entries then stay
    // inside [0.1, 1.0], and convex code combinations inherit the bound.
    let base: Vec<f64> = (0..p).map(|_| rng.gen_range(0.1..0.3)).collect();
    let loadings = Matrix::from_fn(p, q, |_, _| rng.gen_range(0.0..0.7 / q as f64));
    let coeffs = Matrix::from_fn(q, l, |_, _| rng.gen::<f64>());
    let mut dictionary = loadings.matmul(&coeffs);
    for c in 0..l {
        for r in 0..p {
            dictionary[(r, c)] += base[r];
        }
    }

    // Codes: supports cycle through a shuffled atom list so every atom
    // carries weight somewhere (keeps the code matrix well conditioned);
    // weights are uniform on the simplex via normalized exponentials.
    let pixels = config.width * config.height;
    let mut deck: Vec<usize> = (0..l).collect();
    for i in (1..deck.len()).rev() {
        deck.swap(i, rng.gen_range(0..=i));
    }
    let mut deal = 0usize;
    let mut codes = Matrix::zeros(l, pixels);
    for j in 0..pixels {
        let mut support = Vec::with_capacity(config.sparsity);
        while support.len() < config.sparsity {
            let atom = deck[deal % l];
            deal += 1;
            if !support.contains(&atom) {
                support.push(atom);
            }
        }
        let mut weights: Vec<f64> = (0..config.sparsity)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        for (&atom, &w) in support.iter().zip(&weights) {
            codes[(atom, j)] = w;
        }
    }

    let hs = SpectralCube::from_matrix(&dictionary.matmul(&codes), config.width, config.height)?;
    let srf = Srf::box_average(p, q)?;
    Ok(PlantedScene {
        config: config.clone(),
        hs,
        srf,
        dictionary,
        codes,
    })
}
