//! Python bindings for the spectral super-resolution library.
//!
//! Exposes the headline types and operations — dense matrices, the
//! proximal operators and constrained solves, planted benchmark scenes,
//! the two-stage learning pipeline, the prediction baselines, and the
//! evaluation metrics — as a CPython extension module named `jslol`.
//!
//! Build with `cargo build -p jslol-py`, then rename the produced
//! `libjslol.so` to `jslol.so` somewhere on `sys.path` (the smoke test
//! under `python/` does this automatically). Matrices cross the
//! boundary as nested lists; reports come back as plain dicts.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use jslol_core::baselines as core_baselines;
use jslol_core::classify as core_classify;
use jslol_core::dictlearn::DStepParams as CoreDStepParams;
use jslol_core::metrics as core_metrics;
use jslol_core::pipeline::{jslol_pipeline, PipelineOutput};
use jslol_core::prox as core_prox;
use jslol_core::solve as core_solve;
use jslol_core::sparsecode::SStepParams as CoreSStepParams;
use jslol_core::split::{split_overlap, OverlapSplit};
use jslol_core::srf::simulate_ms;
use jslol_core::synth::{generate_planted_scene, PlantedConfig, PlantedScene};
use jslol_core::unmix as core_unmix;
use jslol_core::Matrix as CoreMatrix;

/// Translate a library error into the closest Python exception:
/// bad inputs become `ValueError`, file trouble `OSError`, and
/// numerical failures `RuntimeError`.
fn to_py_err(err: jslol_core::Error) -> PyErr {
    use jslol_core::Error::*;
    match err {
        Validation(_) | Shape(_) | Parse { .. } => PyValueError::new_err(err.to_string()),
        Io { .. } => PyIOError::new_err(err.to_string()),
        NotSpd(_) | SvdNoConvergence { .. } | Divergence(_) => {
            PyRuntimeError::new_err(err.to_string())
        }
    }
}

/// A dense row-major matrix of finite floats.
#[pyclass(name = "Matrix", module = "jslol", skip_from_py_object)]
#[derive(Clone)]
struct PyMatrix {
    inner: CoreMatrix,
}

impl PyMatrix {
    fn wrap(inner: CoreMatrix) -> Self {
        PyMatrix { inner }
    }
}

#[pymethods]
impl PyMatrix {
    /// Build from a list of equal-length rows of finite numbers.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(PyValueError::new_err(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(PyValueError::new_err(format!(
                    "row {i} contains a non-finite value {v}"
                )));
            }
        }
        Ok(PyMatrix::wrap(CoreMatrix::from_rows(&rows)))
    }

    /// All-zero matrix of the given shape.
    #[staticmethod]
    fn zeros(rows: usize, cols: usize) -> Self {
        PyMatrix::wrap(CoreMatrix::zeros(rows, cols))
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    /// Entry at (row, col).
    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.inner.rows() || col >= self.inner.cols() {
            return Err(PyValueError::new_err(format!(
                "index ({row}, {col}) out of bounds for {}x{}",
                self.inner.rows(),
                self.inner.cols()
            )));
        }
        Ok(self.inner[(row, col)])
    }

    /// Nested-list copy, row by row.
    fn tolist(&self) -> Vec<Vec<f64>> {
        (0..self.inner.rows())
            .map(|r| self.inner.row(r).to_vec())
            .collect()
    }

    /// Frobenius norm.
    fn frob(&self) -> f64 {
        self.inner.frob()
    }

    fn __repr__(&self) -> String {
        format!("Matrix({}x{})", self.inner.rows(), self.inner.cols())
    }
}

/// Entrywise shrinkage `sign(x) · max(0, |x| − tau)`.
#[pyfunction]
fn soft_threshold(m: PyRef<'_, PyMatrix>, tau: f64) -> PyResult<PyMatrix> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PyValueError::new_err(format!(
            "threshold {tau} must be finite and nonnegative"
        )));
    }
    Ok(PyMatrix::wrap(core_prox::soft_threshold(&m.inner, tau)))
}

/// Singular value thresholding: shrink each singular value by `tau`.
#[pyfunction]
fn svt(m: PyRef<'_, PyMatrix>, tau: f64) -> PyResult<PyMatrix> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PyValueError::new_err(format!(
            "threshold {tau} must be finite and nonnegative"
        )));
    }
    core_prox::svt(&m.inner, tau)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

/// Sum of singular values.
#[pyfunction]
fn nuclear_norm(m: PyRef<'_, PyMatrix>) -> PyResult<f64> {
    core_prox::nuclear_norm(&m.inner).map_err(to_py_err)
}

/// Solve `a·x = b` for symmetric positive definite `a`.
#[pyfunction]
fn solve_spd(a: PyRef<'_, PyMatrix>, b: PyRef<'_, PyMatrix>) -> PyResult<PyMatrix> {
    core_solve::solve_spd(&a.inner, &b.inner)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

/// Minimize `½xᵀa x − bᵀx` per column of `b` subject to each solution
/// column summing to one.
#[pyfunction]
fn sum_to_one_solve(a: PyRef<'_, PyMatrix>, b: PyRef<'_, PyMatrix>) -> PyResult<PyMatrix> {
    core_solve::sum_to_one_solve(&a.inner, &b.inner)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

/// Training-stage parameters. Any argument left as `None` keeps the
/// library default.
#[pyclass(name = "DStepParams", module = "jslol", skip_from_py_object)]
#[derive(Clone)]
struct PyDStepParams {
    inner: CoreDStepParams,
}

#[pymethods]
impl PyDStepParams {
    #[new]
    #[pyo3(signature = (*, alpha=None, beta=None, gamma=None, dict_size=None,
                        max_iter=None, xi=None, eps=None, mu0=None, mu_max=None, seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: Option<f64>,
        beta: Option<f64>,
        gamma: Option<f64>,
        dict_size: Option<usize>,
        max_iter: Option<usize>,
        xi: Option<f64>,
        eps: Option<f64>,
        mu0: Option<f64>,
        mu_max: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut p = CoreDStepParams::default();
        if let Some(v) = alpha {
            p.alpha = v;
        }
        if let Some(v) = beta {
            p.beta = v;
        }
        if let Some(v) = gamma {
            p.gamma = v;
        }
        if dict_size.is_some() {
            p.dict_size = dict_size;
        }
        if let Some(v) = max_iter {
            p.max_iter = v;
        }
        if let Some(v) = xi {
            p.xi = v;
        }
        if let Some(v) = eps {
            p.eps = v;
        }
        if let Some(v) = mu0 {
            p.mu0 = v;
        }
        if let Some(v) = mu_max {
            p.mu_max = v;
        }
        if let Some(v) = seed {
            p.seed = v;
        }
        p.validate().map_err(to_py_err)?;
        Ok(PyDStepParams { inner: p })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "DStepParams(alpha={}, beta={}, gamma={}, dict_size={:?}, seed={})",
            p.alpha, p.beta, p.gamma, p.dict_size, p.seed
        )
    }
}

/// Coding-stage parameters. Any argument left as `None` keeps the
/// library default.
#[pyclass(name = "SStepParams", module = "jslol", skip_from_py_object)]
#[derive(Clone)]
struct PySStepParams {
    inner: CoreSStepParams,
}

#[pymethods]
impl PySStepParams {
    #[new]
    #[pyo3(signature = (*, eta=None, max_iter=None, xi=None, eps=None, rho0=None, rho_max=None))]
    fn new(
        eta: Option<f64>,
        max_iter: Option<usize>,
        xi: Option<f64>,
        eps: Option<f64>,
        rho0: Option<f64>,
        rho_max: Option<f64>,
    ) -> PyResult<Self> {
        let mut p = CoreSStepParams::default();
        if let Some(v) = eta {
            p.eta = v;
        }
        if let Some(v) = max_iter {
            p.max_iter = v;
        }
        if let Some(v) = xi {
            p.xi = v;
        }
        if let Some(v) = eps {
            p.eps = v;
        }
        if let Some(v) = rho0 {
            p.rho0 = v;
        }
        if let Some(v) = rho_max {
            p.rho_max = v;
        }
        p.validate().map_err(to_py_err)?;
        Ok(PySStepParams { inner: p })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("SStepParams(eta={}, rho0={}, xi={})", p.eta, p.rho0, p.xi)
    }
}

/// A seeded synthetic benchmark scene with known ground truth.
#[pyclass(name = "Scene", module = "jslol")]
struct PyScene {
    inner: PlantedScene,
}

#[pymethods]
impl PyScene {
    #[getter]
    fn width(&self) -> usize {
        self.inner.config.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.config.height
    }

    #[getter]
    fn bands(&self) -> usize {
        self.inner.config.bands
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.config.channels
    }

    #[getter]
    fn overlap_end(&self) -> usize {
        self.inner.config.overlap_end
    }

    /// Hidden spectral dictionary (`bands × atoms`).
    fn dictionary(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.dictionary.clone())
    }

    /// Hidden codes (`atoms × pixels`, raster order).
    fn codes(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.codes.clone())
    }

    /// Ground-truth narrowband spectra (`bands × pixels`, raster order).
    fn hs(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.hs.to_matrix())
    }

    /// Simulated broadband channels (`channels × pixels`, raster order).
    fn ms(&self) -> PyResult<PyMatrix> {
        let ms = simulate_ms(&self.inner.hs, &self.inner.srf).map_err(to_py_err)?;
        Ok(PyMatrix::wrap(ms.to_matrix()))
    }

    /// Overlap split along the scene's training strip (or a custom
    /// column range).
    #[pyo3(signature = (overlap_start=0, overlap_end=None))]
    fn split(&self, overlap_start: usize, overlap_end: Option<usize>) -> PyResult<PySplit> {
        let end = overlap_end.unwrap_or(self.inner.config.overlap_end);
        let ms = simulate_ms(&self.inner.hs, &self.inner.srf).map_err(to_py_err)?;
        let split = split_overlap(&self.inner.hs, &ms, overlap_start, end).map_err(to_py_err)?;
        Ok(PySplit { inner: split })
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Scene({}x{} pixels, {} bands, {} channels, overlap [0, {}))",
            c.width, c.height, c.bands, c.channels, c.overlap_end
        )
    }
}

/// Generate a planted benchmark scene; every argument left as `None`
/// keeps the standard footprint (40 bands, 4 channels, 30 atoms,
/// 3-sparse codes, 40×20 pixels, 25-column overlap strip).
#[pyfunction]
#[pyo3(signature = (seed, *, bands=None, channels=None, atoms=None, sparsity=None,
                    width=None, height=None, overlap_end=None))]
#[allow(clippy::too_many_arguments)]
fn planted_scene(
    seed: u64,
    bands: Option<usize>,
    channels: Option<usize>,
    atoms: Option<usize>,
    sparsity: Option<usize>,
    width: Option<usize>,
    height: Option<usize>,
    overlap_end: Option<usize>,
) -> PyResult<PyScene> {
    let mut config = PlantedConfig::standard(seed);
    if let Some(v) = bands {
        config.bands = v;
    }
    if let Some(v) = channels {
        config.channels = v;
    }
    if let Some(v) = atoms {
        config.atoms = v;
    }
    if let Some(v) = sparsity {
        config.sparsity = v;
    }
    if let Some(v) = width {
        config.width = v;
    }
    if let Some(v) = height {
        config.height = v;
    }
    if let Some(v) = overlap_end {
        config.overlap_end = v;
    }
    let scene = generate_planted_scene(&config).map_err(to_py_err)?;
    Ok(PyScene { inner: scene })
}

/// A scene partitioned into a paired training strip and a
/// prediction-only region.
#[pyclass(name = "Split", module = "jslol")]
struct PySplit {
    inner: OverlapSplit,
}

#[pymethods]
impl PySplit {
    #[getter]
    fn num_in(&self) -> usize {
        self.inner.num_in()
    }

    #[getter]
    fn num_out(&self) -> usize {
        self.inner.num_out()
    }

    /// Narrowband training spectra (`bands × num_in`).
    fn h_in(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.h_in.clone())
    }

    /// Broadband training spectra (`channels × num_in`).
    fn m_in(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.m_in.clone())
    }

    /// Broadband prediction inputs (`channels × num_out`).
    fn m_out(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.m_out.clone())
    }

    /// Held-out narrowband reference, when the source scene had one.
    fn h_out_ref(&self) -> Option<PyMatrix> {
        self.inner.h_out_ref.as_ref().cloned().map(PyMatrix::wrap)
    }

    fn __repr__(&self) -> String {
        format!(
            "Split({} paired + {} prediction pixels)",
            self.inner.num_in(),
            self.inner.num_out()
        )
    }
}

/// Everything the two-stage pipeline produced.
#[pyclass(name = "PipelineResult", module = "jslol")]
struct PyPipelineResult {
    inner: PipelineOutput,
}

#[pymethods]
impl PyPipelineResult {
    /// Learned narrowband dictionary (`bands × atoms`).
    fn dict_h(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.dict.d_h.clone())
    }

    /// Learned broadband dictionary (`channels × atoms`).
    fn dict_m(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.dict.d_m.clone())
    }

    /// Codes fit to the training strip during learning.
    fn train_codes(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.train_codes.clone())
    }

    /// Codes inferred for the prediction region.
    fn codes(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.codes.clone())
    }

    /// Predicted narrowband spectra (`bands × num_out`, raster order).
    fn recon(&self) -> PyMatrix {
        PyMatrix::wrap(self.inner.recon_matrix.clone())
    }

    #[getter]
    fn dstep_iterations(&self) -> usize {
        self.inner.dstep_trace.iterations()
    }

    #[getter]
    fn dstep_converged(&self) -> bool {
        self.inner.dstep_trace.converged()
    }

    #[getter]
    fn sstep_iterations(&self) -> usize {
        self.inner.sstep_trace.iterations()
    }

    #[getter]
    fn sstep_converged(&self) -> bool {
        self.inner.sstep_trace.converged()
    }

    fn __repr__(&self) -> String {
        format!(
            "PipelineResult({} atoms, training {} iters, coding {} iters)",
            self.inner.dict.atoms(),
            self.inner.dstep_trace.iterations(),
            self.inner.sstep_trace.iterations()
        )
    }
}

/// Run dictionary learning on the split's training strip, then code
/// and reconstruct the prediction region.
#[pyfunction]
#[pyo3(signature = (split, dparams=None, sparams=None))]
fn run_pipeline(
    split: PyRef<'_, PySplit>,
    dparams: Option<PyRef<'_, PyDStepParams>>,
    sparams: Option<PyRef<'_, PySStepParams>>,
) -> PyResult<PyPipelineResult> {
    let d = dparams.map_or_else(CoreDStepParams::default, |p| p.inner.clone());
    let s = sparams.map_or_else(CoreSStepParams::default, |p| p.inner.clone());
    let output = jslol_pipeline(&split.inner, &d, &s).map_err(to_py_err)?;
    Ok(PyPipelineResult { inner: output })
}

/// Nearest-channel-neighbour copying baseline: predict each pixel by
/// copying the training spectrum whose channels match best.
#[pyfunction]
fn pwc_baseline(split: PyRef<'_, PySplit>) -> PyResult<PyMatrix> {
    core_baselines::pwc(&split.inner)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

/// Ridge channel-regression baseline: fit bands as a linear map of the
/// channels on the training strip, apply it to the prediction region.
#[pyfunction]
#[pyo3(signature = (split, ridge=1e-6))]
fn regression_baseline(split: PyRef<'_, PySplit>, ridge: f64) -> PyResult<PyMatrix> {
    let model = core_baselines::fit_regression(&split.inner, ridge).map_err(to_py_err)?;
    core_baselines::apply_regression(&model, &split.inner.m_out)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

/// Reconstruction quality of `estimate` against `reference` (both
/// `bands × pixels` over a `width × height` region): a dict with rmse,
/// psnr, sad, ssim, and ergas (None when undefined).
#[pyfunction]
fn recon_metrics<'py>(
    py: Python<'py>,
    reference: PyRef<'_, PyMatrix>,
    estimate: PyRef<'_, PyMatrix>,
    width: usize,
    height: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let report = core_metrics::recon_metrics(&reference.inner, &estimate.inner, width, height)
        .map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("rmse", report.rmse)?;
    out.set_item("psnr", report.psnr)?;
    out.set_item("sad", report.sad)?;
    out.set_item("ssim", report.ssim)?;
    out.set_item("ergas", report.ergas)?;
    Ok(out)
}

/// Label test spectra by their Euclidean-nearest training spectrum.
#[pyfunction]
fn nn_classify(
    train_specs: PyRef<'_, PyMatrix>,
    train_labels: Vec<u32>,
    test_specs: PyRef<'_, PyMatrix>,
) -> PyResult<Vec<u32>> {
    core_classify::nn_classify(&train_specs.inner, &train_labels, &test_specs.inner)
        .map_err(to_py_err)
}

/// Score predicted labels against ground truth: a dict with oa, aa,
/// kappa, and the per-class recalls.
#[pyfunction]
fn classification_scores<'py>(
    py: Python<'py>,
    predicted: Vec<u32>,
    truth: Vec<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let report = core_classify::classification_scores(&predicted, &truth).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("oa", report.oa)?;
    out.set_item("aa", report.aa)?;
    out.set_item("kappa", report.kappa)?;
    out.set_item("per_class", report.per_class)?;
    Ok(out)
}

/// Fully constrained unmixing: nonnegative sum-to-one abundances of
/// each spectrum column over the endmember columns.
#[pyfunction]
fn fclsu(spectra: PyRef<'_, PyMatrix>, endmembers: PyRef<'_, PyMatrix>) -> PyResult<PyMatrix> {
    core_unmix::fclsu(&spectra.inner, &endmembers.inner)
        .map(PyMatrix::wrap)
        .map_err(to_py_err)
}

#[pymodule]
fn jslol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyDStepParams>()?;
    m.add_class::<PySStepParams>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<PySplit>()?;
    m.add_class::<PyPipelineResult>()?;
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(nuclear_norm, m)?)?;
    m.add_function(wrap_pyfunction!(solve_spd, m)?)?;
    m.add_function(wrap_pyfunction!(sum_to_one_solve, m)?)?;
    m.add_function(wrap_pyfunction!(planted_scene, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(pwc_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(regression_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(recon_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(nn_classify, m)?)?;
    m.add_function(wrap_pyfunction!(classification_scores, m)?)?;
    m.add_function(wrap_pyfunction!(fclsu, m)?)?;
    Ok(())
}
