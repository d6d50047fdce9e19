//! Python bindings. Reports come back as plain dicts (the same JSON shapes
//! the CLI emits); sequences and matrices are wrapped as classes.

use escape_lab::circle::{self, EstimateOptions, ScanOptions, UnimodularPoint};
use escape_lab::escape::{self, LatticeBasis, Real, TimeSet};
use escape_lab::matops::{self, ComplexMatrix, C64};
use escape_lab::positivity;
use escape_lab::random;
use escape_lab::seqcore::{self, SequenceSpec};
use escape_lab::Error;
use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(escape_lab, EscapeLabError, PyException);

fn err(e: Error) -> PyErr {
    EscapeLabError::new_err(format!("[{}] {e}", e.code()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| EscapeLabError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An integer sequence `n_0 = 1 < n_1 < ...` given by its spec string.
#[pyclass(name = "Sequence", module = "escape_lab", frozen)]
struct Sequence {
    spec: SequenceSpec,
}

#[pymethods]
impl Sequence {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Sequence {
            spec: spec.parse().map_err(err)?,
        })
    }

    fn __str__(&self) -> String {
        self.spec.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Sequence('{}')", self.spec)
    }

    /// `[n_0, ..., n_count]`.
    fn terms(&self, count: usize) -> PyResult<Vec<BigUint>> {
        seqcore::generate(&self.spec, count).map_err(err)
    }

    /// Residues `n_k mod q` as `(preperiod, cycle, exact)`.
    fn residues(&self, q: BigUint) -> PyResult<(Vec<BigUint>, Vec<BigUint>, bool)> {
        let s = seqcore::residues(&self.spec, &q).map_err(err)?;
        let exact = s.is_exact();
        Ok((s.preperiod, s.cycle, exact))
    }

    /// Largest ratio `n_{k+1}/n_k` over the first `count` terms, as a float.
    fn quotient_bound(&self, count: usize) -> Option<f64> {
        seqcore::quotient_bound(&self.spec, count).bound_f64()
    }
}

/// A square complex matrix.
#[pyclass(name = "Matrix", module = "escape_lab", frozen)]
struct Matrix {
    inner: ComplexMatrix,
}

#[pymethods]
impl Matrix {
    #[new]
    fn new(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        Ok(Matrix {
            inner: ComplexMatrix::from_rows(&rows).map_err(err)?,
        })
    }

    #[staticmethod]
    fn identity(dim: usize) -> Self {
        Matrix {
            inner: ComplexMatrix::identity(dim),
        }
    }

    #[staticmethod]
    fn diag(entries: Vec<C64>) -> Self {
        Matrix {
            inner: ComplexMatrix::diag(&entries),
        }
    }

    /// Text (`d` then `re,im` entries) or JSON format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Matrix {
            inner: ComplexMatrix::parse_any(text).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, seed = random::DEFAULT_SEED, rank = None))]
    fn random_psd(dim: usize, seed: u64, rank: Option<usize>) -> Self {
        let mut rng = random::rng(seed);
        Matrix {
            inner: random::random_psd(dim, rank.unwrap_or(dim), &mut rng),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (dim, margin = 0.1, seed = random::DEFAULT_SEED))]
    fn random_accretive(dim: usize, margin: f64, seed: u64) -> Self {
        let mut rng = random::rng(seed);
        Matrix {
            inner: random::random_accretive(dim, margin, &mut rng),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<C64>> {
        self.inner.rows()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn op_norm(&self) -> f64 {
        matops::op_norm(&self.inner)
    }

    fn eigenvalues(&self) -> PyResult<Vec<C64>> {
        Ok(matops::eig(&self.inner).map_err(err)?.eigenvalues)
    }

    /// `A^n`; `None` when the power overflows.
    fn pow(&self, n: BigUint) -> Option<Matrix> {
        self.inner.pow(&n).map(|inner| Matrix { inner })
    }

    fn __matmul__(&self, other: PyRef<'_, Matrix>) -> Matrix {
        Matrix {
            inner: self.inner.mul(&other.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Matrix(dim={})", self.inner.dim())
    }
}

fn spec_arg(obj: &Bound<'_, PyAny>) -> PyResult<SequenceSpec> {
    if let Ok(s) = obj.extract::<PyRef<'_, Sequence>>() {
        return Ok(s.spec.clone());
    }
    let text: String = obj.extract()?;
    text.parse().map_err(err)
}

/// `sup_k |λ^{n_k} - 1|` at `λ = e^{2πiθ}`; `theta` is `"p/q"` or a float.
#[pyfunction]
#[pyo3(signature = (theta, spec, k = 64))]
fn deviation<'py>(py: Python<'py>, theta: &str, spec: &Bound<'py, PyAny>, k: usize) -> PyResult<Bound<'py, PyAny>> {
    let point: UnimodularPoint = theta.parse().map_err(err)?;
    to_py(py, &circle::deviation(&point, &spec_arg(spec)?, k))
}

#[pyfunction]
#[pyo3(signature = (spec, theta0 = 1e-3, budget = 200_000, q_max = 64))]
fn jamison_constant<'py>(
    py: Python<'py>,
    spec: &Bound<'py, PyAny>,
    theta0: f64,
    budget: usize,
    q_max: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let options = EstimateOptions {
        theta0,
        node_budget: budget,
        scan: ScanOptions {
            q_max,
            ..ScanOptions::default()
        },
        ..EstimateOptions::default()
    };
    to_py(py, &circle::jamison_constant(&spec_arg(spec)?, &options).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (spec, epsilon, strict = false, tol = circle::DEFAULT_TOL))]
fn pair_check<'py>(
    py: Python<'py>,
    spec: &Bound<'py, PyAny>,
    epsilon: f64,
    strict: bool,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = circle::pair_check(&spec_arg(spec)?, epsilon, strict, tol, &EstimateOptions::default()).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, epsilon, q_max = 64))]
fn lambda_set<'py>(py: Python<'py>, spec: &Bound<'py, PyAny>, epsilon: f64, q_max: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &circle::lambda_set(&spec_arg(spec)?, epsilon, q_max).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (spec, epsilon, dim = 2))]
fn non_jamison_witness<'py>(
    py: Python<'py>,
    spec: &Bound<'py, PyAny>,
    epsilon: f64,
    dim: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spec_arg(spec)?;
    let scan = escape::default_witness_scan(&spec);
    to_py(py, &escape::non_jamison_witness(&spec, epsilon, dim, &scan).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, spec, epsilon, k = 64))]
fn algebra_escape<'py>(
    py: Python<'py>,
    a: PyRef<'py, Matrix>,
    spec: &Bound<'py, PyAny>,
    epsilon: f64,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &escape::algebra_escape(&a.inner, &spec_arg(spec)?, epsilon, k).map_err(err)?)
}

/// Coordinates are strings (`"1/3"`, `"0.25"`) so rationals stay exact.
#[pyfunction]
#[pyo3(signature = (x, spec, epsilon, basis = None, k = 64))]
fn torus_escape<'py>(
    py: Python<'py>,
    x: Vec<String>,
    spec: &Bound<'py, PyAny>,
    epsilon: f64,
    basis: Option<Vec<Vec<String>>>,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let parse = |v: &[String]| v.iter().map(|t| t.parse::<Real>()).collect::<Result<Vec<_>, _>>();
    let x = parse(&x).map_err(err)?;
    let basis = match basis {
        Some(b) => {
            let vectors = b.iter().map(|v| parse(v)).collect::<Result<Vec<_>, _>>().map_err(err)?;
            LatticeBasis::new(vectors).map_err(err)?
        }
        None => LatticeBasis::standard(x.len()),
    };
    to_py(py, &escape::torus_escape(&x, &basis, &spec_arg(spec)?, epsilon, k).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (g, epsilon, grid = 1000, times = Vec::new()))]
fn semigroup_scan<'py>(
    py: Python<'py>,
    g: PyRef<'py, Matrix>,
    epsilon: f64,
    grid: usize,
    times: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let ts = TimeSet::new(grid, times).map_err(err)?;
    to_py(py, &escape::semigroup_scan(&g.inner, &ts, epsilon).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, spec, k = 64, tol = circle::DEFAULT_TOL, strict = false))]
fn deprima_test<'py>(
    py: Python<'py>,
    a: PyRef<'py, Matrix>,
    spec: &Bound<'py, PyAny>,
    k: usize,
    tol: f64,
    strict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &positivity::deprima_test(&a.inner, &spec_arg(spec)?, k, tol, strict).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, tol = circle::DEFAULT_TOL))]
fn positivity_check<'py>(py: Python<'py>, a: PyRef<'py, Matrix>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &positivity::positivity_check(&a.inner, tol))
}

#[pyfunction]
#[pyo3(signature = (a, m, angles = 256, residual_tol = 1e-8, sector_tol = 1e-6))]
fn sector_root_check<'py>(
    py: Python<'py>,
    a: PyRef<'py, Matrix>,
    m: u32,
    angles: usize,
    residual_tol: f64,
    sector_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &positivity::sector_root_check(&a.inner, m, angles, residual_tol, sector_tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, spec, k = 64, tol = circle::DEFAULT_TOL))]
fn nagisa_check<'py>(
    py: Python<'py>,
    a: PyRef<'py, Matrix>,
    spec: &Bound<'py, PyAny>,
    k: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &positivity::nagisa_check(&a.inner, &spec_arg(spec)?, k, tol).map_err(err)?)
}

/// Runs the command line with `args` (no program name); returns
/// `(exit_code, output_text)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String) {
    let mut out = Vec::new();
    let mut errs = Vec::new();
    let code = escape_lab::cli::main_with(args, &mut out, &mut errs);
    (code, String::from_utf8_lossy(&out).into_owned())
}

#[pymodule]
#[pyo3(name = "escape_lab")]
fn escape_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EscapeLabError", m.py().get_type::<EscapeLabError>())?;
    m.add_class::<Sequence>()?;
    m.add_class::<Matrix>()?;
    m.add_function(wrap_pyfunction!(deviation, m)?)?;
    m.add_function(wrap_pyfunction!(jamison_constant, m)?)?;
    m.add_function(wrap_pyfunction!(pair_check, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_set, m)?)?;
    m.add_function(wrap_pyfunction!(non_jamison_witness, m)?)?;
    m.add_function(wrap_pyfunction!(algebra_escape, m)?)?;
    m.add_function(wrap_pyfunction!(torus_escape, m)?)?;
    m.add_function(wrap_pyfunction!(semigroup_scan, m)?)?;
    m.add_function(wrap_pyfunction!(deprima_test, m)?)?;
    m.add_function(wrap_pyfunction!(positivity_check, m)?)?;
    m.add_function(wrap_pyfunction!(sector_root_check, m)?)?;
    m.add_function(wrap_pyfunction!(nagisa_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
