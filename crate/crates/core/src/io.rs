//! File formats: the raster container, matrix persistence, and CSV.
//!
//! The raster container is a pair of files: `<name>.bsq` holds raw
//! little-endian 32-bit floats in band-sequential order, and `<name>.json`
//! is the sidecar header `{width, height, bands, data_max}`. On load,
//! samples are divided by `data_max` (default 1.0), so external data
//! scaled to e.g. 10000 normalizes to reflectance in `[0, 1]`. Cubes this
//! crate saves always carry their samples pre-normalized with
//! `data_max = 1`, which makes a save → load roundtrip bit-exact.
//!
//! The same container doubles as matrix persistence (a matrix is a
//! one-band image: `height` = rows, `width` = cols). Matrices skip the
//! reflectance range rules — learned code matrices may be negative.
//!
//! CSV here means strictly rectangular numeric CSV: comma-separated
//! decimal numbers, one row per line, no quoting. Ragged rows are
//! rejected with the offending line number.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cube::SpectralCube;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sidecar header for the raster container.
#[derive(Debug, Serialize, Deserialize)]
struct RasterHeader {
    width: usize,
    height: usize,
    bands: usize,
    #[serde(default = "default_data_max")]
    data_max: f64,
}

fn default_data_max() -> f64 {
    1.0
}

/// Sidecar path: the data path with its extension replaced by `json`.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("json")
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn read_header(data_path: &Path) -> Result<RasterHeader> {
    let side = sidecar_path(data_path);
    let text = fs::read_to_string(&side).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::validation(format!("missing sidecar header {}", side.display()))
        } else {
            Error::io(path_str(&side), e)
        }
    })?;
    let header: RasterHeader =
        serde_json::from_str(&text).map_err(|e| Error::parse(path_str(&side), e.to_string()))?;
    // A zero-pixel footprint is legal (empty reconstruction region);
    // a zero band count never is.
    if header.bands == 0 {
        return Err(Error::validation(format!(
            "sidecar {}: band count must be positive",
            side.display()
        )));
    }
    if !(header.data_max.is_finite() && header.data_max > 0.0) {
        return Err(Error::validation(format!(
            "sidecar {}: data_max {} must be a positive number",
            side.display(),
            header.data_max
        )));
    }
    Ok(header)
}

fn read_samples(data_path: &Path, expected: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(data_path).map_err(|e| Error::io(path_str(data_path), e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::validation(format!(
            "{}: file holds {} bytes, header implies {} samples ({} bytes)",
            data_path.display(),
            bytes.len(),
            expected,
            expected * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn write_container(data_path: &Path, header: &RasterHeader, samples: &[f32]) -> Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 4);
    for &v in samples {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(data_path, &bytes).map_err(|e| Error::io(path_str(data_path), e))?;
    let side = sidecar_path(data_path);
    let mut text = serde_json::to_string_pretty(header)
        .expect("raster header serializes");
    text.push('\n');
    fs::write(&side, text).map_err(|e| Error::io(path_str(&side), e))
}

// -------------------------------------------------------------------
// Cubes
// -------------------------------------------------------------------

/// Save a cube. Samples are written verbatim (they are already
/// normalized reflectance), so the header carries `data_max = 1`.
pub fn save_cube(cube: &SpectralCube, data_path: &Path) -> Result<()> {
    let header = RasterHeader {
        width: cube.width(),
        height: cube.height(),
        bands: cube.bands(),
        data_max: 1.0,
    };
    write_container(data_path, &header, cube.values())
}

/// Load a cube, dividing samples by the header's `data_max`.
///
/// Values that normalize slightly outside `[0, 1]` are clamped with a
/// warning; non-finite samples are an error.
pub fn load_cube(data_path: &Path) -> Result<SpectralCube> {
    let header = read_header(data_path)?;
    let raw = read_samples(data_path, header.width * header.height * header.bands)?;
    let inv = 1.0 / header.data_max;
    let mut clamped = 0usize;
    let mut values = Vec::with_capacity(raw.len());
    for (i, &v) in raw.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::validation(format!(
                "{}: sample {i} is not finite",
                data_path.display()
            )));
        }
        let scaled = if header.data_max == 1.0 {
            v // exact passthrough keeps roundtrips bit-identical
        } else {
            (v as f64 * inv) as f32
        };
        if !(0.0..=1.0).contains(&scaled) {
            clamped += 1;
        }
        values.push(scaled.clamp(0.0, 1.0));
    }
    if clamped > 0 {
        log::warn!(
            "{}: clamped {clamped} samples to [0, 1] after data_max normalization",
            data_path.display()
        );
    }
    SpectralCube::new(header.width, header.height, header.bands, values)
}

// -------------------------------------------------------------------
// Matrices in the raster container
// -------------------------------------------------------------------

/// Persist a matrix as a one-band raster (row-major, f32 precision).
pub fn save_matrix(m: &Matrix, data_path: &Path) -> Result<()> {
    let header = RasterHeader {
        width: m.cols(),
        height: m.rows(),
        bands: 1,
        data_max: 1.0,
    };
    let samples: Vec<f32> = m.data().iter().map(|&v| v as f32).collect();
    for (i, v) in samples.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::validation(format!(
                "save_matrix: entry {i} is not finite in f32"
            )));
        }
    }
    write_container(data_path, &header, &samples)
}

/// Load a matrix previously saved with [`save_matrix`]. No range rules
/// apply; entries only need to be finite.
pub fn load_matrix(data_path: &Path) -> Result<Matrix> {
    let header = read_header(data_path)?;
    if header.bands != 1 {
        return Err(Error::validation(format!(
            "{}: expected a one-band matrix raster, header says {} bands",
            data_path.display(),
            header.bands
        )));
    }
    let raw = read_samples(data_path, header.width * header.height)?;
    for (i, &v) in raw.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::validation(format!(
                "{}: entry {i} is not finite",
                data_path.display()
            )));
        }
    }
    Ok(Matrix::from_flat(
        header.height,
        header.width,
        raw.iter().map(|&v| v as f64).collect(),
    ))
}

// -------------------------------------------------------------------
// CSV
// -------------------------------------------------------------------

/// Load a strictly rectangular numeric CSV as a matrix.
pub fn load_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue; // tolerate a trailing blank line
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(
                    path_str(path),
                    format!("line {}: '{}' is not a number", lineno + 1, field.trim()),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path_str(path),
                    format!("line {}: non-finite value", lineno + 1),
                ));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::parse(
                    path_str(path),
                    format!(
                        "line {}: {} fields, expected {} (ragged rows rejected)",
                        lineno + 1,
                        row.len(),
                        w
                    ),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path_str(path), "no data rows".to_string()));
    }
    Ok(Matrix::from_rows(&rows))
}

/// Write a matrix as numeric CSV with full f64 precision.
pub fn save_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path_str(path), e))?;
    }
    w.flush().map_err(|e| Error::io(path_str(path), e))
}
