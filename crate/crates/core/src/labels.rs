//! Ground-truth label fields for downstream classification.
//!
//! Labels arrive as a CSV of `(row, col, class_id, split)` records, one
//! per labeled pixel, with `split` either `train` or `test` and class
//! ids forming a contiguous `1..=K` set (0 is reserved for unlabeled).
//! The [`LabelField`] rasterizes those records over the scene footprint;
//! train and test sets are disjoint by construction because a pixel may
//! appear at most once.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRole {
    Unlabeled,
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct LabelField {
    width: usize,
    height: usize,
    /// Per-pixel class id in raster order; 0 = unlabeled.
    classes: Vec<u32>,
    roles: Vec<SampleRole>,
    num_classes: u32,
}

/// One labeled pixel with its image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPixel {
    pub x: usize,
    pub y: usize,
    pub class_id: u32,
}

impl LabelField {
    /// Build from explicit records `(row, col, class_id, role)`.
    pub fn from_records(
        width: usize,
        height: usize,
        records: &[(usize, usize, u32, SampleRole)],
    ) -> Result<Self> {
        let mut classes = vec![0u32; width * height];
        let mut roles = vec![SampleRole::Unlabeled; width * height];
        let mut max_class = 0u32;
        for &(row, col, class_id, role) in records {
            if row >= height || col >= width {
                return Err(Error::validation(format!(
                    "label at (row {row}, col {col}) outside {width}x{height} scene"
                )));
            }
            if class_id == 0 {
                return Err(Error::validation(format!(
                    "label at (row {row}, col {col}) uses reserved class id 0"
                )));
            }
            if role == SampleRole::Unlabeled {
                return Err(Error::validation(format!(
                    "label at (row {row}, col {col}) must be train or test"
                )));
            }
            let idx = row * width + col;
            if roles[idx] != SampleRole::Unlabeled {
                return Err(Error::validation(format!(
                    "pixel (row {row}, col {col}) labeled twice"
                )));
            }
            classes[idx] = class_id;
            roles[idx] = role;
            max_class = max_class.max(class_id);
        }
        // Contiguity: every id in 1..=K must occur somewhere.
        let mut present = vec![false; max_class as usize + 1];
        for &c in &classes {
            present[c as usize] = true;
        }
        for id in 1..=max_class {
            if !present[id as usize] {
                return Err(Error::validation(format!(
                    "class ids must be contiguous from 1: id {id} of {max_class} is unused"
                )));
            }
        }
        Ok(LabelField {
            width,
            height,
            classes,
            roles,
            num_classes: max_class,
        })
    }

    /// Parse the `(row, col, class_id, split)` CSV. A header line is
    /// tolerated when its first field is not numeric.
    pub fn load_csv(path: &Path, width: usize, height: usize) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if lineno == 0 && fields[0].parse::<usize>().is_err() {
                continue; // header
            }
            if fields.len() != 4 {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("line {}: expected row,col,class_id,split", lineno + 1),
                ));
            }
            let parse_idx = |s: &str, what: &str| -> Result<usize> {
                s.parse().map_err(|_| {
                    Error::parse(
                        path.display().to_string(),
                        format!("line {}: {what} '{s}' is not an integer", lineno + 1),
                    )
                })
            };
            let row = parse_idx(fields[0], "row")?;
            let col = parse_idx(fields[1], "col")?;
            let class_id = parse_idx(fields[2], "class id")? as u32;
            let role = match fields[3] {
                "train" => SampleRole::Train,
                "test" => SampleRole::Test,
                other => {
                    return Err(Error::parse(
                        path.display().to_string(),
                        format!("line {}: split '{other}' must be train or test", lineno + 1),
                    ))
                }
            };
            records.push((row, col, class_id, role));
        }
        LabelField::from_records(width, height, &records)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of distinct classes `K`.
    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn class_at(&self, x: usize, y: usize) -> u32 {
        self.classes[y * self.width + x]
    }

    pub fn role_at(&self, x: usize, y: usize) -> SampleRole {
        self.roles[y * self.width + x]
    }

    fn pixels_with_role(&self, role: SampleRole) -> Vec<LabeledPixel> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.roles[y * self.width + x] == role {
                    out.push(LabeledPixel {
                        x,
                        y,
                        class_id: self.classes[y * self.width + x],
                    });
                }
            }
        }
        out
    }

    /// Training pixels in raster order.
    pub fn train_pixels(&self) -> Vec<LabeledPixel> {
        self.pixels_with_role(SampleRole::Train)
    }

    /// Test pixels in raster order.
    pub fn test_pixels(&self) -> Vec<LabeledPixel> {
        self.pixels_with_role(SampleRole::Test)
    }
}
