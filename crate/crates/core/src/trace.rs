//! Per-iteration history of an ADMM run.
//!
//! Both learning stages log one row per iteration: the objective value,
//! the primal residuals they monitor for convergence, and the penalty
//! weight. The trace is what convergence tests pin down (residuals fall,
//! the penalty grows geometrically to its cap) and what the CLI exports
//! as CSV next to the learned model.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub residuals: Vec<f64>,
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmTrace {
    /// Column names for the residuals, e.g. `["res_code", "res_dict_h", ...]`.
    residual_names: Vec<&'static str>,
    rows: Vec<TraceRow>,
    converged: bool,
}

/// Compact statistics embedded into model manifests.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub final_residuals: Vec<f64>,
    pub final_penalty: f64,
}

impl AdmmTrace {
    pub fn new(residual_names: Vec<&'static str>) -> Self {
        AdmmTrace {
            residual_names,
            rows: Vec::new(),
            converged: false,
        }
    }

    pub fn push(&mut self, iter: usize, objective: f64, residuals: Vec<f64>, penalty: f64) {
        debug_assert_eq!(residuals.len(), self.residual_names.len());
        self.rows.push(TraceRow {
            iter,
            objective,
            residuals,
            penalty,
        });
    }

    pub fn mark_converged(&mut self) {
        self.converged = true;
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Number of iterations recorded.
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn residual_names(&self) -> &[&'static str] {
        &self.residual_names
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn summary(&self) -> TraceSummary {
        let last = self.rows.last();
        TraceSummary {
            iterations: self.iterations(),
            converged: self.converged,
            final_objective: last.map_or(f64::NAN, |r| r.objective),
            final_residuals: last.map_or_else(Vec::new, |r| r.residuals.clone()),
            final_penalty: last.map_or(f64::NAN, |r| r.penalty),
        }
    }

    /// Export as CSV: `iter,objective,<residual columns...>,penalty`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
        write!(w, "iter,objective").map_err(&mut io_err)?;
        for name in &self.residual_names {
            write!(w, ",{name}").map_err(&mut io_err)?;
        }
        writeln!(w, ",penalty").map_err(&mut io_err)?;
        for row in &self.rows {
            write!(w, "{},{:?}", row.iter, row.objective).map_err(&mut io_err)?;
            for r in &row.residuals {
                write!(w, ",{r:?}").map_err(&mut io_err)?;
            }
            writeln!(w, ",{:?}", row.penalty).map_err(&mut io_err)?;
        }
        w.flush().map_err(&mut io_err)
    }
}
