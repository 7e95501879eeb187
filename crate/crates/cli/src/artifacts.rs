//! Artifact layout and the readers/writers the verbs share.
//!
//! Every artifact lands directly under the configured output directory
//! with a fixed name, so chained verbs find each other's products
//! without extra plumbing. Nothing here embeds a timestamp or an
//! absolute path (the demo's config echo is the one deliberate
//! exception): rerunning a verb with the same config and seed rewrites
//! every product with identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use jslol_core::classify::ClassReport;
use jslol_core::cube::SpectralCube;
use jslol_core::dictlearn::{DStepParams, DictionaryPair};
use jslol_core::error::{Error, Result};
use jslol_core::io::{load_cube, load_matrix, load_matrix_csv, save_matrix};
use jslol_core::labels::{LabelField, SampleRole};
use jslol_core::metrics::ReconReport;
use jslol_core::split::{split_overlap, OverlapSplit};
use jslol_core::srf::{simulate_ms, Srf};
use jslol_core::trace::TraceSummary;
use jslol_core::unmix::UnmixReport;

use crate::config::RunConfig;

/// Simulated broadband cube.
pub const MS_CUBE: &str = "ms.bsq";
/// Scene and overlap bookkeeping written by `simulate`.
pub const SPLIT_MANIFEST: &str = "split.json";
/// Learned narrowband dictionary (matrix raster).
pub const DICT_H: &str = "dict_h.bsq";
/// Learned broadband dictionary (matrix raster).
pub const DICT_M: &str = "dict_m.bsq";
/// Dictionary shapes, training parameters, and run summary.
pub const DICT_MANIFEST: &str = "dict.json";
/// Per-iteration training trace.
pub const DSTEP_TRACE: &str = "dstep_trace.csv";
/// Per-iteration coding trace.
pub const SSTEP_TRACE: &str = "sstep_trace.csv";
/// Codes for the prediction region (matrix raster).
pub const CODES: &str = "codes.bsq";
/// Predicted narrowband cube for the region outside the overlap.
pub const RECON_CUBE: &str = "recon.bsq";
/// Evaluation report (JSON).
pub const REPORT_JSON: &str = "report.json";
/// Evaluation report (flat one-row CSV).
pub const REPORT_CSV: &str = "report.csv";
/// Comparative method table.
pub const BASELINE_TABLE: &str = "baselines.csv";
/// Nearest-neighbour baseline cube.
pub const BASELINE_PWC: &str = "baseline_pwc.bsq";
/// Ridge-regression baseline cube.
pub const BASELINE_REGRESSION: &str = "baseline_regression.bsq";
/// Pixel-dictionary baseline cube.
pub const BASELINE_MSDICT: &str = "baseline_msdict.bsq";
/// The resolved configuration a demo run actually used.
pub const CONFIG_ECHO: &str = "config.json";
/// Eyeball dump of the first simulated channel.
pub const MS_PGM: &str = "ms_c0.pgm";
/// Eyeball dump of the first predicted band.
pub const RECON_PGM: &str = "recon_b0.pgm";

/// Write UTF-8 text, mapping failures to the I/O error group.
pub fn write_text(text: &str, path: &Path) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Serialize a value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    write_text(&text, path)
}

/// Export one band as a plain (ASCII) PGM, maxval 255, for eyeballing.
///
/// The band's value range maps linearly onto `0..=255`; a constant band
/// renders black. Callers skip zero-pixel bands — a PGM with no
/// raster would be malformed.
pub fn write_pgm(samples: &[f32], width: usize, height: usize, path: &Path) -> Result<()> {
    if samples.len() != width * height {
        return Err(Error::Shape(format!(
            "pgm export: {} samples for a {width}x{height} image",
            samples.len()
        )));
    }
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for &v in samples {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let scale = if hi > lo {
        255.0 / f64::from(hi - lo)
    } else {
        0.0
    };
    let mut text = format!("P2\n{width} {height}\n255\n");
    for y in 0..height {
        for x in 0..width {
            if x > 0 {
                text.push(' ');
            }
            let gray = (f64::from(samples[y * width + x] - lo) * scale).round() as u32;
            text.push_str(&gray.to_string());
        }
        text.push('\n');
    }
    write_text(&text, path)
}

/// Load the narrowband cube and the channel response table.
pub fn load_inputs(config: &RunConfig) -> Result<(SpectralCube, Srf)> {
    let hs = load_cube(config.require_hs()?)?;
    let srf = Srf::new(load_matrix_csv(config.require_srf()?)?)?;
    Ok((hs, srf))
}

/// Rebuild the overlap split from the configured inputs.
///
/// The broadband cube is re-simulated from the narrowband reference and
/// the response table — cheap, deterministic, and it keeps every verb
/// self-sufficient instead of depending on `simulate` having run.
pub fn load_split(config: &RunConfig) -> Result<OverlapSplit> {
    let (hs, srf) = load_inputs(config)?;
    let ms = simulate_ms(&hs, &srf)?;
    let (start, end) = config.require_overlap()?;
    split_overlap(&hs, &ms, start, end)
}

/// What `simulate` records about the scene geometry.
#[derive(Debug, Serialize)]
pub struct SplitManifest {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub channels: usize,
    /// Overlap strip `[start, end)` in columns.
    pub overlap: [usize; 2],
    /// Pixels inside the overlap strip (training samples).
    pub num_in: usize,
    /// Pixels outside it (prediction targets).
    pub num_out: usize,
}

/// Shapes, parameters, and training summary stored beside the pair.
#[derive(Debug, Serialize)]
pub struct DictManifest {
    /// Narrowband rows of the learned pair.
    pub bands: usize,
    /// Broadband rows.
    pub channels: usize,
    /// Shared atom count.
    pub atoms: usize,
    pub params: DStepParams,
    pub trace: TraceSummary,
}

/// Persist a learned pair: two matrix rasters plus the manifest.
pub fn save_dictionary(
    config: &RunConfig,
    dict: &DictionaryPair,
    params: &DStepParams,
    trace: &TraceSummary,
) -> Result<()> {
    save_matrix(&dict.d_h, &config.artifact(DICT_H))?;
    save_matrix(&dict.d_m, &config.artifact(DICT_M))?;
    let manifest = DictManifest {
        bands: dict.d_h.rows(),
        channels: dict.d_m.rows(),
        atoms: dict.atoms(),
        params: params.clone(),
        trace: trace.clone(),
    };
    write_json(&manifest, &config.artifact(DICT_MANIFEST))
}

/// Load a pair persisted by [`save_dictionary`], revalidating it.
pub fn load_dictionary(config: &RunConfig) -> Result<DictionaryPair> {
    let d_h = load_matrix(&config.require_artifact(DICT_H, "train")?)?;
    let d_m = load_matrix(&config.require_artifact(DICT_M, "train")?)?;
    let dict = DictionaryPair { d_h, d_m };
    dict.validate()?;
    Ok(dict)
}

/// Everything `evaluate` measures, in one document. Sections that were
/// skipped (no labels, no endmembers) serialize as `null` so a report
/// always has the same shape.
#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub reconstruction: ReconReport,
    pub classification: Option<ClassReport>,
    pub unmixing: Option<UnmixReport>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Flatten a report into a one-row CSV (header + values). Absent
/// sections leave their cells empty; an undefined relative-error score
/// leaves its single cell empty.
pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let header = [
        "rmse",
        "psnr",
        "sad",
        "ssim",
        "ergas",
        "oa",
        "aa",
        "kappa",
        "armse_mean",
        "armse_std",
        "rrmse_mean",
        "rrmse_std",
        "asam_mean",
        "asam_std",
    ];
    let r = &report.reconstruction;
    let mut row = vec![
        num(r.rmse),
        num(r.psnr),
        num(r.sad),
        num(r.ssim),
        r.ergas.map_or_else(String::new, num),
    ];
    match &report.classification {
        Some(c) => row.extend([num(c.oa), num(c.aa), num(c.kappa)]),
        None => row.extend([String::new(), String::new(), String::new()]),
    }
    match &report.unmixing {
        Some(u) => row.extend([
            num(u.armse.mean),
            num(u.armse.std),
            num(u.rrmse.mean),
            num(u.rrmse.std),
            num(u.asam.mean),
            num(u.asam.std),
        ]),
        None => row.extend(std::iter::repeat_with(String::new).take(6)),
    }
    let text = format!("{}\n{}\n", header.join(","), row.join(","));
    write_text(&text, path)
}

/// One scored method in the comparison table.
#[derive(Debug)]
pub struct BaselineRow {
    pub method: &'static str,
    pub metrics: ReconReport,
}

/// Write the comparison table: one row per enabled method.
pub fn write_baseline_table(rows: &[BaselineRow], path: &Path) -> Result<()> {
    let mut text = String::from("method,rmse,psnr,sad,ssim,ergas\n");
    for row in rows {
        let m = &row.metrics;
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            num(m.rmse),
            num(m.psnr),
            num(m.sad),
            num(m.ssim),
            m.ergas.map_or_else(String::new, num),
        ));
    }
    write_text(&text, path)
}

/// Write a label field back out in the labeled-pixel CSV dialect.
pub fn write_labels_csv(field: &LabelField, path: &Path) -> Result<()> {
    let mut text = String::from("row,col,class_id,split\n");
    for y in 0..field.height() {
        for x in 0..field.width() {
            let role = match field.role_at(x, y) {
                SampleRole::Train => "train",
                SampleRole::Test => "test",
                SampleRole::Unlabeled => continue,
            };
            text.push_str(&format!("{y},{x},{},{role}\n", field.class_at(x, y)));
        }
    }
    write_text(&text, path)
}
