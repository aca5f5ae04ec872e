//! Python bindings: simulation, reconstruction, verification and the
//! algebraic predicates behind them.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use ultri::geometry::{self, DEFAULT_TOL};
use ultri::io::{from_json, to_json, ExperimentSpec};
use ultri::measurement::{self as meas, MatrixKind, Mode};
use ultri::reconstruct::{self as rec, ReconstructionOptions};
use ultri::relation::{self, RankStrategy, DEFAULT_RELATION_TOL};
use ultri::variety;
use ultri::Error;

create_exception!(ultri_py, NoBaseFound, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoBaseFound => NoBaseFound::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn parse_kind(s: &str) -> PyResult<MatrixKind> {
    match s {
        "base" => Ok(MatrixKind::Base),
        "trilat" => Ok(MatrixKind::Trilat),
        "identity" => Ok(MatrixKind::Identity),
        other => Err(PyValueError::new_err(format!("unknown matrix kind {other:?}"))),
    }
}

/// Unlabeled measurement values with their metadata.
#[pyclass(module = "ultri_py")]
#[derive(Clone)]
struct DataSet(meas::DataSet);

#[pymethods]
impl DataSet {
    #[new]
    fn new(dim: usize, bound: u32, mode: &str, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self(meas::DataSet::new(dim, bound, parse(mode)?, values).map_err(py_err)?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn bound(&self) -> u32 {
        self.0.bound
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode.to_string()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(from_json(text).map_err(py_err)?))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "DataSet(dim={}, bound={}, mode='{}', {} values)",
            self.0.dim,
            self.0.bound,
            self.0.mode,
            self.0.len()
        )
    }
}

/// An ordered point set in `R^d`.
#[pyclass(module = "ultri_py")]
#[derive(Clone)]
struct Configuration(geometry::Configuration);

#[pymethods]
impl Configuration {
    #[new]
    fn new(dim: usize, points: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self(geometry::Configuration::new(dim, points).map_err(py_err)?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().to_vec()
    }

    /// All pairwise lengths in edge order `01, 02, 12, 03, ...`.
    fn lengths(&self) -> Vec<f64> {
        geometry::measure_all_lengths(&self.0).values().to_vec()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.0).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(from_json(text).map_err(py_err)?))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Configuration(dim={}, {} points)", self.0.dim(), self.0.len())
    }
}

/// Output of [`generate`]: data, truth, and the walk behind each value.
#[pyclass(module = "ultri_py", get_all)]
struct Experiment {
    dataset: DataSet,
    truth: Configuration,
    walks: Vec<Vec<usize>>,
}

#[pyclass(module = "ultri_py", get_all)]
struct Reconstruction {
    configuration: Configuration,
    explained_count: usize,
    /// `(value_index, walk)` for every consumed value.
    labeling: Vec<(usize, Vec<usize>)>,
    certificate_residual: f64,
}

#[pyclass(module = "ultri_py", get_all)]
struct VerifyReport {
    matched: bool,
    scale: u32,
    relabeling: Vec<usize>,
    max_residual: f64,
}

/// Simulate a configuration, a trilaterating ensemble and its shuffled values.
#[pyfunction]
#[pyo3(signature = (n, d, mode, extra=0, max_hops=4, seed_config=0, seed_ensemble=0, seed_shuffle=0, scale=1))]
#[allow(clippy::too_many_arguments)]
fn generate(
    n: usize,
    d: usize,
    mode: &str,
    extra: usize,
    max_hops: usize,
    seed_config: u64,
    seed_ensemble: u64,
    seed_shuffle: u64,
    scale: u32,
) -> PyResult<Experiment> {
    let spec = ExperimentSpec {
        n,
        d,
        mode: parse(mode)?,
        extra_distractors: extra,
        max_hops,
        seed_config,
        seed_ensemble,
        seed_shuffle,
        scale,
        ..Default::default()
    };
    let exp = spec.generate().map_err(py_err)?;
    Ok(Experiment {
        dataset: DataSet(exp.dataset),
        truth: Configuration(exp.truth),
        walks: exp.ensemble.iter().map(|p| p.vertices().to_vec()).collect(),
    })
}

/// Recover the configuration behind a data set; raises `NoBaseFound` when
/// no candidate base exists.
#[pyfunction]
#[pyo3(signature = (dataset, tol=DEFAULT_TOL, rank_strategy="brute", bound=None, assume_restricted=false))]
fn reconstruct(
    py: Python<'_>,
    dataset: &DataSet,
    tol: f64,
    rank_strategy: &str,
    bound: Option<u32>,
    assume_restricted: bool,
) -> PyResult<Reconstruction> {
    let opts = ReconstructionOptions {
        tol,
        relation_tol: DEFAULT_RELATION_TOL,
        strategy: parse::<RankStrategy>(rank_strategy)?,
        assume_restricted,
        bound,
    };
    let data = dataset.0.clone();
    let (r, residual) = py
        .allow_threads(|| {
            let r = rec::reconstruct(&data, &opts)?;
            let residual = r.certificate_residual(&data)?;
            Ok((r, residual))
        })
        .map_err(py_err)?;
    Ok(Reconstruction {
        configuration: Configuration(r.configuration),
        explained_count: r.explained_count,
        labeling: r
            .labeling
            .iter()
            .map(|e| (e.value_index, e.path.vertices().to_vec()))
            .collect(),
        certificate_residual: residual,
    })
}

/// Match `recovered` to `truth` up to congruence, relabeling and integer scale.
#[pyfunction]
#[pyo3(signature = (truth, recovered, tol=1e-7, max_scale=16))]
fn verify(truth: &Configuration, recovered: &Configuration, tol: f64, max_scale: u32) -> PyResult<VerifyReport> {
    let v = rec::verify(&truth.0, &recovered.0, tol, max_scale).map_err(py_err)?;
    Ok(VerifyReport {
        matched: v.matched,
        scale: v.scale,
        relabeling: v.relabeling,
        max_residual: v.max_residual,
    })
}

/// Rows of the canonical measurement matrix (`"base"`, `"trilat"` or `"identity"`).
#[pyfunction]
fn canonical_matrix(kind: &str, d: usize) -> PyResult<Vec<Vec<i64>>> {
    Ok(meas::canonical_matrix(parse_kind(kind)?, d).map_err(py_err)?.rows().to_vec())
}

/// Cayley–Menger determinant of `d+2` points from squared lengths in edge order.
#[pyfunction]
#[pyo3(signature = (sq, d, normalized=false))]
fn cayley_menger_det(sq: Vec<f64>, d: usize, normalized: bool) -> PyResult<f64> {
    if normalized {
        geometry::cayley_menger_normalized(&sq, d).map_err(py_err)
    } else {
        geometry::cayley_menger_det(&sq, d).map_err(py_err)
    }
}

/// `(member, cm_residual)` for the transformed length variety.
#[pyfunction]
#[pyo3(signature = (w, kind, d, tol=DEFAULT_TOL))]
fn membership(w: Vec<f64>, kind: &str, d: usize, tol: f64) -> PyResult<(bool, f64)> {
    let m = meas::canonical_matrix(parse_kind(kind)?, d).map_err(py_err)?;
    let v = variety::membership_l(&w, &m, tol).map_err(py_err)?;
    Ok((v.member, v.cm_residual))
}

/// A nonzero integer vector `c` with `c·w ≈ 0`, or `None` when no relation
/// exists within the bound.
#[pyfunction]
#[pyo3(signature = (w, bound, strategy="brute", tol=DEFAULT_RELATION_TOL))]
fn find_integer_relation(w: Vec<f64>, bound: u64, strategy: &str, tol: f64) -> PyResult<Option<Vec<i64>>> {
    let cert = match parse::<RankStrategy>(strategy)? {
        RankStrategy::Brute => relation::find_integer_relation_brute(&w, bound, tol),
        RankStrategy::Reduced => relation::find_integer_relation_reduced(&w, bound as f64, tol),
        RankStrategy::DistinctValues => {
            return Err(PyValueError::new_err("relation search needs 'brute' or 'reduced'"));
        }
    }
    .map_err(py_err)?;
    Ok(cert.coefficients)
}

/// Name of the singular stratum containing planar four-point lengths `l`,
/// or `None` for a smooth point.
#[pyfunction]
#[pyo3(signature = (l, tol=DEFAULT_TOL))]
fn singular_stratum(l: Vec<f64>, tol: f64) -> PyResult<Option<String>> {
    Ok(variety::is_singular_l24(&l, tol)
        .map_err(py_err)?
        .stratum
        .map(|s| format!("{s:?}")))
}

#[pymodule]
fn ultri_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NoBaseFound", m.py().get_type_bound::<NoBaseFound>())?;
    m.add("Mode", vec![Mode::Path.to_string(), Mode::Loop.to_string()])?;
    m.add_class::<DataSet>()?;
    m.add_class::<Configuration>()?;
    m.add_class::<Experiment>()?;
    m.add_class::<Reconstruction>()?;
    m.add_class::<VerifyReport>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cayley_menger_det, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(find_integer_relation, m)?)?;
    m.add_function(wrap_pyfunction!(singular_stratum, m)?)?;
    Ok(())
}
