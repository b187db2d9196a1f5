//! Python bindings for the logicloc localizer.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use logicloc::align::{self, AlignSource};
use logicloc::corpus::{self, split_folds, synth_corpus, LineRange};
use logicloc::eval::{self, HitRule};
use logicloc::forge::{forge_corpus_with_report, ForgeKind, TypeMix};
use logicloc::graph::{build_graph, dump_dot};
use logicloc::model::gradcheck::{gradient_check_example, GradCheckOptions};
use logicloc::model::params::{load_params, save_params};
use logicloc::model::train as trainer;
use logicloc::model::{AlignInput, AlignMode, AlignWeighting, Dims, EpochLog, Example, ModelParams};
use logicloc::ranking::RankingResult;
use logicloc::sbfl::{rank_lines, SbflMethod, SpectraFile};

fn py_err(e: logicloc::Error) -> PyErr {
    match e {
        logicloc::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr<Err = logicloc::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// One program with aligned source and pseudocode lines.
#[pyclass(name = "Program", module = "logicloc_py", from_py_object)]
#[derive(Clone)]
pub struct PyProgram {
    inner: corpus::Program,
}

#[pymethods]
impl PyProgram {
    #[new]
    #[pyo3(signature = (problem_id, source_lines, pseudo_lines, error_lines = Vec::new(), error_types = Vec::new()))]
    fn new(
        problem_id: String,
        source_lines: Vec<String>,
        pseudo_lines: Vec<Option<String>>,
        error_lines: Vec<usize>,
        error_types: Vec<String>,
    ) -> PyResult<Self> {
        let error_types = error_types.iter().map(|t| parse(t)).collect::<PyResult<Vec<_>>>()?;
        let inner = corpus::Program {
            problem_id,
            source_lines,
            pseudo_lines,
            error_lines,
            error_types,
        };
        inner.validate().map_err(py_err)?;
        Ok(PyProgram { inner })
    }

    #[getter]
    fn problem_id(&self) -> &str {
        &self.inner.problem_id
    }

    #[getter]
    fn source_lines(&self) -> Vec<String> {
        self.inner.source_lines.clone()
    }

    #[getter]
    fn pseudo_lines(&self) -> Vec<Option<String>> {
        self.inner.pseudo_lines.clone()
    }

    #[getter]
    fn error_lines(&self) -> Vec<usize> {
        self.inner.error_lines.clone()
    }

    #[getter]
    fn error_types(&self) -> Vec<&'static str> {
        self.inner.error_types.iter().map(|t| t.name()).collect()
    }

    /// Lexical alignment score of every line.
    fn align_scores(&self) -> Vec<f64> {
        align::score_program(&self.inner, &align::LexicalScorer).raw
    }

    /// The code/pseudocode token graph in DOT format.
    fn graph_dot(&self) -> String {
        dump_dot(&build_graph(&self.inner))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("program serializes")
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Program({:?}, lines={}, errors={:?})", self.inner.problem_id, self.inner.len(), self.inner.error_lines)
    }
}

/// A validated collection of programs.
#[pyclass(name = "Corpus", module = "logicloc_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCorpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    #[new]
    fn new(programs: Vec<PyProgram>) -> PyResult<Self> {
        let programs = programs.into_iter().map(|p| p.inner).collect();
        Ok(PyCorpus {
            inner: corpus::Corpus::infer(programs).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, min_lines = 10, max_lines = 30, seed = 0))]
    fn synth(n: usize, min_lines: usize, max_lines: usize, seed: u64) -> PyResult<Self> {
        let range = LineRange::new(min_lines, max_lines).map_err(py_err)?;
        Ok(PyCorpus {
            inner: synth_corpus(n, range, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: corpus::load_corpus(path).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyCorpus {
            inner: corpus::Corpus::from_jsonl(text, &PathBuf::from("<string>")).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        corpus::save_corpus(&self.inner, path).map_err(py_err)
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    /// Injects labeled errors into a clean corpus. Returns the forged corpus
    /// and the per-type report.
    #[pyo3(signature = (kind = "single", k = 2, mix = "table5-s", seed = 0))]
    fn forge<'py>(&self, py: Python<'py>, kind: &str, k: usize, mix: &str, seed: u64) -> PyResult<(Self, Bound<'py, PyAny>)> {
        let kind = match parse::<ForgeKind>(kind)? {
            ForgeKind::Multi { .. } => ForgeKind::Multi { k },
            single => single,
        };
        let mix: TypeMix = parse(mix)?;
        let (forged, report) = forge_corpus_with_report(&self.inner, kind, &mix, seed).map_err(py_err)?;
        Ok((PyCorpus { inner: forged }, to_py(py, &report)?))
    }

    /// Fold index of every problem id.
    fn split_folds<'py>(&self, py: Python<'py>, k: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let folds = split_folds(&self.inner, k, seed).map_err(py_err)?;
        let assignment: std::collections::BTreeMap<&str, usize> = self
            .inner
            .programs
            .iter()
            .filter_map(|p| folds.fold_of(&p.problem_id).map(|f| (p.problem_id.as_str(), f)))
            .collect();
        to_py(py, &assignment)
    }

    #[getter]
    fn kind<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.kind)
    }

    fn mean_len(&self) -> f64 {
        self.inner.mean_len()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, index: isize) -> PyResult<PyProgram> {
        let n = self.inner.len() as isize;
        let i = if index < 0 { index + n } else { index };
        if !(0..n).contains(&i) {
            return Err(pyo3::exceptions::PyIndexError::new_err("corpus index out of range"));
        }
        Ok(PyProgram {
            inner: self.inner.programs[i as usize].clone(),
        })
    }
}

/// Training hyperparameters.
#[pyclass(name = "TrainConfig", module = "logicloc_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrainConfig {
    inner: trainer::TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (
        epochs = 30, lr = 0.05, seed = 0, lambda_max = 0.3, clip = 5.0, dims = 32,
        min_count = 1, align_mode = "inverted", align_input = "raw", batch_size = 1, lr_decay = 0.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        epochs: usize,
        lr: f64,
        seed: u64,
        lambda_max: f64,
        clip: f64,
        dims: usize,
        min_count: usize,
        align_mode: &str,
        align_input: &str,
        batch_size: usize,
        lr_decay: f64,
    ) -> PyResult<Self> {
        let mode: AlignMode = parse(align_mode)?;
        let input: AlignInput = parse(align_input)?;
        let inner = trainer::TrainConfig {
            epochs,
            lr,
            seed,
            lambda_max,
            clip,
            dims: Dims::uniform(dims),
            min_count,
            align: AlignWeighting::new(mode, input),
            batch_size,
            lr_decay,
        };
        inner.validate().map_err(py_err)?;
        Ok(PyTrainConfig { inner })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

/// Trained localizer parameters.
#[pyclass(name = "Model", module = "logicloc_py")]
pub struct PyModel {
    params: ModelParams,
    log: Vec<EpochLog>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (corpus, config = None))]
    fn train(py: Python<'_>, corpus: &PyCorpus, config: Option<&PyTrainConfig>) -> PyResult<Self> {
        let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
        let outcome = py
            .detach(|| trainer::train(&corpus.inner, None, &cfg, &AlignSource::default()))
            .map_err(py_err)?;
        Ok(PyModel {
            params: outcome.params,
            log: outcome.log,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            params: load_params(path).map_err(py_err)?,
            log: Vec::new(),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_params(&self.params, path).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.params.to_json()
    }

    /// Per-epoch training statistics.
    #[getter]
    fn log<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.log)
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Line probabilities and the full line ranking for one program.
    fn localize<'py>(&self, py: Python<'py>, program: &PyProgram) -> PyResult<Bound<'py, PyAny>> {
        let pred = trainer::localize(&self.params, &program.inner, &AlignSource::default()).map_err(py_err)?;
        let out = serde_json::json!({ "probs": pred.probs, "ranking": pred.ranking().order });
        to_py(py, &out)
    }

    /// Compares analytic and central-difference gradients on one labeled program.
    #[pyo3(signature = (program, epsilon = 1e-5, lambda_ = 0.3, coords = 200, seed = 0))]
    fn gradient_check<'py>(
        &self,
        py: Python<'py>,
        program: &PyProgram,
        epsilon: f64,
        lambda_: f64,
        coords: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let ex = Example::from_source(&program.inner, &self.params.vocab, &AlignSource::default()).map_err(py_err)?;
        let opts = GradCheckOptions {
            epsilon,
            lambda: lambda_,
            coords,
            seed,
        };
        let report = gradient_check_example(&self.params, &ex, &opts).map_err(py_err)?;
        to_py(py, &report)
    }
}

/// Lexical alignment between one code line and its pseudocode.
#[pyfunction]
#[pyo3(signature = (code_line, pseudo_line = None))]
fn lexical_align(code_line: &str, pseudo_line: Option<&str>) -> f64 {
    align::lexical_align(code_line, pseudo_line)
}

fn sbfl_method(method: &str, star: f64) -> PyResult<SbflMethod> {
    Ok(match parse::<SbflMethod>(method)? {
        SbflMethod::DStar { .. } => SbflMethod::DStar { star },
        other => other,
    })
}

/// Suspiciousness of every line from `[ef, ep]` counts and test totals.
#[pyfunction]
#[pyo3(signature = (lines, n_pass, n_fail, method = "ochiai", star = 2.0))]
fn sbfl_scores(lines: Vec<[u64; 2]>, n_pass: u64, n_fail: u64, method: &str, star: f64) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let record = SpectraFile {
        problem_id: "spectra".into(),
        n_pass,
        n_fail,
        lines,
    }
    .into_record()
    .map_err(py_err)?;
    let ranking = rank_lines(&record, sbfl_method(method, star)?).map_err(py_err)?;
    Ok((ranking.scores, ranking.order))
}

/// Top-k accuracy of line orders given in corpus order.
#[pyfunction]
#[pyo3(signature = (corpus, rankings, ks = vec![1, 5, 10], all_hit = false))]
fn evaluate<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    rankings: Vec<Vec<usize>>,
    ks: Vec<usize>,
    all_hit: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let rankings: Vec<RankingResult> = rankings.into_iter().map(RankingResult::from_order).collect();
    let rule = if all_hit { HitRule::All } else { HitRule::Any };
    let report = eval::evaluate(&corpus.inner, &rankings, "external", &ks, rule).map_err(py_err)?;
    to_py(py, &report)
}

/// K-fold cross-validation of the localizer.
#[pyfunction]
#[pyo3(signature = (corpus, folds = 5, fold_seed = 0, config = None, ks = vec![1, 5, 10]))]
fn cross_validate<'py>(
    py: Python<'py>,
    corpus: &PyCorpus,
    folds: usize,
    fold_seed: u64,
    config: Option<&PyTrainConfig>,
    ks: Vec<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let report = py
        .detach(|| {
            let split = split_folds(&corpus.inner, folds, fold_seed)?;
            eval::cross_validate(&corpus.inner, &split, &cfg, &AlignSource::default(), &ks)
        })
        .map_err(py_err)?;
    to_py(py, &report)
}

#[pymodule]
fn logicloc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(lexical_align, m)?)?;
    m.add_function(wrap_pyfunction!(sbfl_scores, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
