//! Run configuration: a single JSON document layered under the flags.
//!
//! Every verb reads the same [`RunConfig`]. Values resolve with
//! precedence flags > config file > built-in defaults; `main` performs
//! that merge once, before dispatch. The `seed` field is the master
//! seed: it is copied into the training parameters and also drives the
//! baseline atom sampling and the demo scene, so a single number pins
//! every randomized stage of a run.
//!
//! Path handling follows one rule: paths a command *requires* must
//! exist when the command validates its inputs (missing ones are a
//! validation failure, exit code 2), while the optional enrichment
//! files (labels, endmembers) degrade to a logged skip so a partial
//! dataset still evaluates.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jslol_core::baselines::DEFAULT_RIDGE;
use jslol_core::dictlearn::DStepParams;
use jslol_core::error::{Error, Result};
use jslol_core::sparsecode::SStepParams;

/// Which reference methods the `baselines` verb runs, plus their knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineToggles {
    /// Nearest-neighbour pixel copying.
    pub pwc: bool,
    /// Ridge regression from channels to bands.
    pub regression: bool,
    /// Sparse coding over sampled overlap pixels.
    pub ms_dictionary: bool,
    /// Ridge strength for the regression baseline.
    pub ridge: f64,
    /// Pixels sampled as atoms by the pixel-dictionary baseline;
    /// `None` keeps every overlap pixel.
    pub atom_budget: Option<usize>,
}

impl Default for BaselineToggles {
    fn default() -> Self {
        BaselineToggles {
            pwc: true,
            regression: true,
            ms_dictionary: true,
            ridge: DEFAULT_RIDGE,
            atom_budget: None,
        }
    }
}

/// Everything one run needs: input paths, the overlap geometry, the
/// two solver parameter sets, baseline toggles, and the master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Narrowband reference cube (raster container).
    pub hs_cube: Option<PathBuf>,
    /// Channel response table CSV (`channels × bands`, rows sum to 1).
    pub srf_csv: Option<PathBuf>,
    /// Optional labeled-pixel CSV for downstream classification.
    pub labels_csv: Option<PathBuf>,
    /// Optional endmember CSV (`bands × K`) for abundance unmixing.
    pub endmembers_csv: Option<PathBuf>,
    /// Directory that receives every artifact.
    pub out_dir: PathBuf,
    /// Overlap strip `[start, end)` in scene columns.
    pub overlap: Option<[usize; 2]>,
    /// Dictionary-learning stage parameters.
    pub dstep: DStepParams,
    /// Sparse-coding stage parameters.
    pub sstep: SStepParams,
    /// Baseline selection for the comparison table.
    pub baselines: BaselineToggles,
    /// Master seed for every randomized stage.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hs_cube: None,
            srf_csv: None,
            labels_csv: None,
            endmembers_csv: None,
            out_dir: PathBuf::from("out"),
            overlap: None,
            dstep: DStepParams::default(),
            sstep: SStepParams::default(),
            baselines: BaselineToggles::default(),
            seed: 0,
        }
    }
}

/// Flag-level overrides collected by the argument parser.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strict_thresholds: bool,
}

impl RunConfig {
    /// Parse a config file. A missing path is a validation failure (the
    /// file is a referenced input); malformed JSON is a parse failure.
    pub fn load(path: &Path) -> Result<RunConfig> {
        if !path.exists() {
            return Err(Error::validation(format!(
                "config file {} does not exist",
                path.display()
            )));
        }
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }

    /// Layer flag values over the config, then re-master the seed so the
    /// training initialization follows the run seed.
    pub fn resolve(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.out_dir = out.clone();
        }
        if overrides.strict_thresholds {
            self.dstep.strict_paper_thresholds = true;
        }
        self.dstep.seed = self.seed;
    }

    fn require_path<'a>(path: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
        let path = path.as_deref().ok_or_else(|| {
            Error::validation(format!("config field `{field}` is required by this command"))
        })?;
        if !path.exists() {
            return Err(Error::validation(format!(
                "{field} path {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn require_hs(&self) -> Result<&Path> {
        Self::require_path(&self.hs_cube, "hs_cube")
    }

    pub fn require_srf(&self) -> Result<&Path> {
        Self::require_path(&self.srf_csv, "srf_csv")
    }

    pub fn require_overlap(&self) -> Result<(usize, usize)> {
        self.overlap.map(|[start, end]| (start, end)).ok_or_else(|| {
            Error::validation(
                "config field `overlap` ([start, end) columns) is required by this command",
            )
        })
    }

    /// Create the output directory and prove it is writable.
    pub fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| Error::io(self.out_dir.display().to_string(), e))?;
        let probe = self.out_dir.join(".write_probe");
        fs::write(&probe, b"").map_err(|e| Error::io(probe.display().to_string(), e))?;
        if let Err(e) = fs::remove_file(&probe) {
            log::warn!("could not remove write probe {}: {e}", probe.display());
        }
        Ok(())
    }

    /// Where a named artifact of this run lives.
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// An artifact a previous verb should have produced.
    pub fn require_artifact(&self, name: &str, producer: &str) -> Result<PathBuf> {
        let path = self.artifact(name);
        if !path.exists() {
            return Err(Error::validation(format!(
                "artifact {} not found; run `jslol {producer}` first",
                path.display()
            )));
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_runnable_parameters() {
        let config = RunConfig::default();
        assert!(config.dstep.validate().is_ok());
        assert!(config.sstep.validate().is_ok());
        assert!(config.baselines.pwc && config.baselines.regression);
        assert_eq!(config.seed, 0);
        assert_eq!(config.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn partial_json_fills_missing_fields_from_defaults() {
        let config: RunConfig =
            serde_json::from_str(r#"{"seed": 9, "dstep": {"max_iter": 7}}"#).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.dstep.max_iter, 7);
        // Untouched fields keep their defaults.
        assert_eq!(config.dstep.alpha, DStepParams::default().alpha);
        assert_eq!(config.sstep.eta, SStepParams::default().eta);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"sseed": 1}"#);
        assert!(err.is_err(), "typo'd key must not parse");
    }

    #[test]
    fn flags_override_config_and_master_the_seed() {
        let mut config: RunConfig =
            serde_json::from_str(r#"{"seed": 1, "out_dir": "a"}"#).unwrap();
        config.resolve(&Overrides {
            seed: Some(2),
            out: Some(PathBuf::from("b")),
            strict_thresholds: true,
        });
        assert_eq!(config.seed, 2);
        assert_eq!(config.out_dir, PathBuf::from("b"));
        assert!(config.dstep.strict_paper_thresholds);
        assert_eq!(config.dstep.seed, 2, "run seed must reach the trainer");
    }

    #[test]
    fn absent_flags_keep_config_values() {
        let mut config: RunConfig = serde_json::from_str(r#"{"seed": 5}"#).unwrap();
        config.resolve(&Overrides::default());
        assert_eq!(config.seed, 5);
        assert_eq!(config.dstep.seed, 5);
        assert!(!config.dstep.strict_paper_thresholds);
    }

    #[test]
    fn missing_required_fields_name_themselves() {
        let config = RunConfig::default();
        let err = config.require_hs().unwrap_err().to_string();
        assert!(err.contains("hs_cube"), "got: {err}");
        let err = config.require_overlap().unwrap_err().to_string();
        assert!(err.contains("overlap"), "got: {err}");
    }
}
