//! Python bindings: forms, class numbers, group structures, tabulation,
//! trace verification and the statistics reports.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use classtab::classnum::{ClassRecord as CoreRecord, CongruenceClass, Provenance};
use classtab::pipeline::{run_tabulate, tabulate_records, verify_records, OutputFormat, RunConfig};
use classtab::qform::{count_classes, group_table, QuadForm as CoreForm};
use classtab::{stats, tablefile, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Format(_) | Error::TruncatedChunk { .. } | Error::ChecksumMismatch(_) => {
            PyIOError::new_err(e.to_string())
        }
        Error::InvalidParameter(_)
        | Error::InvalidForm { .. }
        | Error::BoundTooLarge(_)
        | Error::DiscriminantMismatch(..)
        | Error::GroupTooLarge { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn disc_of(abs_disc: u64) -> PyResult<i64> {
    i64::try_from(abs_disc)
        .map(|d| -d)
        .map_err(|_| PyValueError::new_err(format!("|Δ| = {abs_disc} is out of range")))
}

/// Positive definite binary quadratic form `(a, b, c)`.
#[pyclass(name = "QuadForm", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyQuadForm(CoreForm);

#[pymethods]
impl PyQuadForm {
    #[new]
    fn new(a: i64, b: i64, c: i64) -> PyResult<Self> {
        CoreForm::new(a, b, c).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn principal(disc: i64) -> PyResult<Self> {
        CoreForm::principal(disc).map(Self).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> i64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> i64 {
        self.0.b
    }

    #[getter]
    fn c(&self) -> i64 {
        self.0.c
    }

    fn discriminant(&self) -> i64 {
        self.0.discriminant()
    }

    fn is_reduced(&self) -> bool {
        self.0.is_reduced()
    }

    fn reduce(&self) -> Self {
        Self(self.0.reduce())
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn compose(&self, other: &Self) -> PyResult<Self> {
        self.0.compose(&other.0).map(Self).map_err(to_py)
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.compose(other)
    }

    fn __pow__(&self, n: u64, _modulo: Option<u64>) -> PyResult<Self> {
        self.0.pow(n).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("QuadForm{}", self.0)
    }
}

/// Class number and invariant factors of `-abs_disc`.
#[pyclass(name = "ClassRecord", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyClassRecord(CoreRecord);

#[pymethods]
impl PyClassRecord {
    #[getter]
    fn abs_disc(&self) -> u64 {
        self.0.abs_disc
    }

    #[getter]
    fn h(&self) -> u64 {
        self.0.h
    }

    #[getter]
    fn divisors(&self) -> Vec<u64> {
        self.0.divisors.clone()
    }

    /// `"series"` or `"enumeration"`.
    #[getter]
    fn provenance(&self) -> &'static str {
        match self.0.provenance {
            Provenance::Series => "series",
            Provenance::Enumeration => "enumeration",
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "ClassRecord(abs_disc={}, h={}, divisors={:?})",
            self.0.abs_disc, self.0.h, self.0.divisors
        )
    }
}

fn unwrap_records(records: Vec<PyRef<'_, PyClassRecord>>) -> Vec<CoreRecord> {
    records.iter().map(|r| r.0.clone()).collect()
}

fn wrap_records(records: Vec<CoreRecord>) -> Vec<PyClassRecord> {
    records.into_iter().map(PyClassRecord).collect()
}

/// Class number of `-abs_disc` by counting reduced forms.
#[pyfunction]
fn class_number(abs_disc: u64) -> PyResult<u64> {
    count_classes(disc_of(abs_disc)?).map_err(to_py)
}

/// Invariant factors of the class group of `-abs_disc`, from the full form table.
#[pyfunction]
fn class_group(abs_disc: u64) -> PyResult<Vec<u64>> {
    group_table(disc_of(abs_disc)?)
        .map(|g| g.into_divisors())
        .map_err(to_py)
}

fn config(bound: u64, classes: Option<Vec<String>>, threads: usize, seed: u64) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::new(bound);
    if let Some(cs) = classes {
        cfg.classes = cs
            .iter()
            .map(|c| c.parse::<CongruenceClass>())
            .collect::<Result<_, _>>()
            .map_err(to_py)?;
    }
    cfg.threads = threads;
    cfg.seed = seed;
    Ok(cfg)
}

/// Records of every fundamental `|Δ| < bound`, computed in memory.
#[pyfunction]
#[pyo3(signature = (bound, classes=None, threads=1, seed=0))]
fn tabulate(
    py: Python<'_>,
    bound: u64,
    classes: Option<Vec<String>>,
    threads: usize,
    seed: u64,
) -> PyResult<Vec<PyClassRecord>> {
    let cfg = config(bound, classes, threads, seed)?;
    let records = py.detach(|| tabulate_records(&cfg)).map_err(to_py)?;
    Ok(wrap_records(records))
}

/// Tabulate into the directory `out`; returns the written file paths.
#[pyfunction]
#[pyo3(signature = (bound, out, classes=None, threads=1, seed=0, formats=None, staging=None))]
#[allow(clippy::too_many_arguments)]
fn tabulate_to(
    py: Python<'_>,
    bound: u64,
    out: PathBuf,
    classes: Option<Vec<String>>,
    threads: usize,
    seed: u64,
    formats: Option<Vec<String>>,
    staging: Option<PathBuf>,
) -> PyResult<Vec<PathBuf>> {
    let mut cfg = config(bound, classes, threads, seed)?;
    if let Some(fs) = formats {
        cfg.formats = fs
            .iter()
            .map(|f| f.parse::<OutputFormat>())
            .collect::<Result<_, _>>()
            .map_err(to_py)?;
    }
    cfg.staging = staging;
    let summary = py.detach(|| run_tabulate(&cfg, &out)).map_err(to_py)?;
    Ok(summary.files)
}

#[pyfunction]
fn read_table(dir: PathBuf) -> PyResult<Vec<PyClassRecord>> {
    tablefile::read_table_dir(&dir).map(wrap_records).map_err(to_py)
}

/// Aggregate trace-formula check; returns `(X, lhs, rhs, pass, first_failing_n)`.
#[pyfunction]
fn verify(
    records: Vec<PyRef<'_, PyClassRecord>>,
    bound: u64,
) -> PyResult<(u64, i128, i128, bool, Option<u64>)> {
    let r = verify_records(&unwrap_records(records), bound).map_err(to_py)?;
    Ok((r.x, r.lhs, r.rhs, r.pass, r.first_failing_n))
}

/// One of `littlewood`, `cohen-lenstra`, `exotic` or `idoneal`, as CSV text.
#[pyfunction]
fn report(records: Vec<PyRef<'_, PyClassRecord>>, kind: &str, bound: u64) -> PyResult<String> {
    let mut records = unwrap_records(records);
    records.retain(|r| r.abs_disc < bound);
    match kind {
        "littlewood" => Ok(stats::littlewood_csv(&stats::littlewood_extremes(&records, bound))),
        "cohen-lenstra" => stats::cohen_lenstra(&records, &stats::default_checkpoints(bound))
            .map(|rows| stats::cohen_lenstra_csv(&rows))
            .map_err(to_py),
        "exotic" => stats::exotic_scan(&records)
            .map(|s| stats::exotic_csv(&s))
            .map_err(to_py),
        "idoneal" => stats::idoneal_scan(&records, bound)
            .map(|l| stats::idoneal_csv(&l))
            .map_err(to_py),
        _ => Err(PyValueError::new_err(format!("unknown report {kind:?}"))),
    }
}

/// `(C_inf, Pr(odd part cyclic))`.
#[pyfunction]
fn cohen_lenstra_constants() -> (f64, f64) {
    (stats::c_infinity(), stats::pr_cyclic())
}

#[pymodule]
fn classtab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadForm>()?;
    m.add_class::<PyClassRecord>()?;
    m.add_function(wrap_pyfunction!(class_number, m)?)?;
    m.add_function(wrap_pyfunction!(class_group, m)?)?;
    m.add_function(wrap_pyfunction!(tabulate, m)?)?;
    m.add_function(wrap_pyfunction!(tabulate_to, m)?)?;
    m.add_function(wrap_pyfunction!(read_table, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(cohen_lenstra_constants, m)?)?;
    Ok(())
}
