//! Python bindings. Exact values cross the boundary as `fractions.Fraction`;
//! Python ints, `Fraction`s, floats and `"p/q"` strings are accepted as input.

use std::str::FromStr;

use cubic_moment::linalg::Matrix;
use cubic_moment::{
    classify, solve as solve_moments, verify_measure, AtomicMeasure, MomentSequence3, NoMeasureWitness,
    Rational, Solution, SolveOutcome, DEFAULT_TOL,
};
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyFloat, PyList};

create_exception!(cubic_moment, SolverError, PyException);

fn to_rational(v: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if v.is_instance_of::<PyFloat>() {
        let f: f64 = v.extract()?;
        return BigRational::from_float(f).ok_or_else(|| PyValueError::new_err(format!("not finite: {f}")));
    }
    let text = v.str()?.to_string();
    Rational::from_str(text.trim()).map_err(|_| PyValueError::new_err(format!("not a rational number: {text:?}")))
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    let cls = py.import("fractions")?.getattr("Fraction")?;
    cls.call1((format!("{}/{}", r.numer(), r.denom()),))
}

fn fractions<'py>(py: Python<'py>, rs: &[Rational]) -> PyResult<Bound<'py, PyList>> {
    let items = rs.iter().map(|r| fraction(py, r)).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

fn matrix<'py>(py: Python<'py>, m: &Matrix) -> PyResult<Bound<'py, PyList>> {
    let rows = (0..m.rows()).map(|i| fractions(py, m.row(i))).collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, rows)
}

fn measure_from(atoms: &[(Bound<'_, PyAny>, Bound<'_, PyAny>)], weights: &[Bound<'_, PyAny>]) -> PyResult<AtomicMeasure<Rational>> {
    let atoms = atoms
        .iter()
        .map(|(x, y)| Ok((to_rational(x)?, to_rational(y)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let weights = weights.iter().map(to_rational).collect::<PyResult<Vec<_>>>()?;
    AtomicMeasure::new(atoms, weights).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// The ten moments of degree at most 3, in graded lexicographic order
/// `β00, β10, β01, β20, β11, β02, β30, β21, β12, β03`.
#[pyclass(name = "Moments", module = "cubic_moment", frozen)]
struct PyMoments {
    inner: MomentSequence3,
}

#[pymethods]
impl PyMoments {
    #[new]
    fn new(beta: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let values: Vec<Rational> = beta.iter().map(to_rational).collect::<PyResult<_>>()?;
        let values: [Rational; 10] = values
            .try_into()
            .map_err(|v: Vec<_>| PyValueError::new_err(format!("expected 10 moments, got {}", v.len())))?;
        let inner = MomentSequence3::new(values).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMoments { inner })
    }

    /// Moments of the measure with the given atoms `[(x, y), ...]` and
    /// positive weights.
    #[staticmethod]
    fn from_measure(atoms: Vec<(Bound<'_, PyAny>, Bound<'_, PyAny>)>, weights: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let m = measure_from(&atoms, &weights)?;
        let inner = MomentSequence3::from_measure(&m).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMoments { inner })
    }

    /// `β_ij` for `i + j <= 3`.
    fn get<'py>(&self, py: Python<'py>, i: u32, j: u32) -> PyResult<Bound<'py, PyAny>> {
        if i + j > 3 {
            return Err(PyValueError::new_err(format!("degree {} exceeds 3", i + j)));
        }
        fraction(py, self.inner.get(i, j))
    }

    fn values<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        fractions(py, self.inner.values())
    }

    /// `(tag, rank M(1))`, with tag one of `NotPsd`, `NoRangeInclusion`,
    /// `FlatEqual`, `Greater`, `Less`.
    fn classify(&self) -> (String, usize) {
        let c = classify(&self.inner);
        (c.tag.to_string(), c.rank_m1)
    }

    fn __repr__(&self) -> String {
        let vals: Vec<String> = self.inner.values().iter().map(|r| r.to_string()).collect();
        format!("Moments([{}])", vals.join(", "))
    }
}

/// A representing measure together with its extension certificate.
#[pyclass(name = "Solution", module = "cubic_moment", frozen)]
struct PySolution {
    inner: Solution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.inner.measure.atoms().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.measure.weights().to_vec()
    }

    /// Rational atoms, or `None` when some atom is irrational.
    #[getter]
    fn exact_atoms<'py>(&self, py: Python<'py>) -> PyResult<Option<Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>>> {
        let Some(m) = &self.inner.exact else { return Ok(None) };
        m.atoms()
            .iter()
            .map(|(x, y)| Ok((fraction(py, x)?, fraction(py, y)?)))
            .collect::<PyResult<Vec<_>>>()
            .map(Some)
    }

    #[getter]
    fn exact_weights<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyList>>> {
        self.inner.exact.as_ref().map(|m| fractions(py, m.weights())).transpose()
    }

    #[getter]
    fn classification(&self) -> String {
        self.inner.certificate.classification.tag.to_string()
    }

    #[getter]
    fn rank_m1(&self) -> usize {
        self.inner.certificate.classification.rank_m1
    }

    #[getter]
    fn rank_m2(&self) -> usize {
        self.inner.certificate.rank_m2
    }

    #[getter]
    fn rank_m3(&self) -> usize {
        self.inner.certificate.rank_m3
    }

    #[getter]
    fn basis(&self) -> Vec<String> {
        self.inner.certificate.basis.iter().map(|m| m.to_string()).collect()
    }

    #[getter]
    fn relations(&self) -> Vec<String> {
        self.inner.certificate.relations.iter().map(|r| r.to_string()).collect()
    }

    /// Entries `x, a, b, y, t, z` of the Schur block `WᵀM(1)W`.
    #[getter]
    fn schur<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sd = &self.inner.certificate.schur;
        let d = PyDict::new(py);
        for (k, v) in [("x", &sd.x), ("a", &sd.a), ("b", &sd.b), ("y", &sd.y), ("t", &sd.t), ("z", &sd.z)] {
            d.set_item(k, fraction(py, v)?)?;
        }
        Ok(d)
    }

    #[getter]
    fn c2<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        matrix(py, self.inner.certificate.c2.as_matrix())
    }

    #[getter]
    fn m2<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        matrix(py, self.inner.certificate.m2.matrix().as_matrix())
    }

    #[getter]
    fn m3<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        matrix(py, self.inner.certificate.m3.matrix().as_matrix())
    }

    #[getter]
    fn max_abs_error(&self) -> f64 {
        self.inner.report.max_abs_error
    }

    #[getter]
    fn max_rel_error(&self) -> f64 {
        self.inner.report.max_rel_error
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution({}, atoms={:?}, weights={:?})",
            self.classification(),
            self.atoms(),
            self.weights()
        )
    }
}

/// Proof that no representing measure exists.
#[pyclass(name = "NoMeasure", module = "cubic_moment", frozen)]
struct PyNoMeasure {
    #[pyo3(get)]
    reason: String,
    #[pyo3(get)]
    witness: String,
    vector: Vec<Rational>,
}

#[pymethods]
impl PyNoMeasure {
    /// The vector `v` with `vᵀM(1)v < 0`, or with `M(1)v = 0` and `vᵀB(2) ≠ 0`.
    #[getter]
    fn vector<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        fractions(py, &self.vector)
    }

    fn __repr__(&self) -> String {
        format!("NoMeasure({}: {})", self.reason, self.witness)
    }
}

/// Returns a `Solution` or a `NoMeasure`; raises `SolverError` when the
/// pipeline cannot finish.
#[pyfunction]
#[pyo3(signature = (moments, tol = DEFAULT_TOL))]
fn solve<'py>(py: Python<'py>, moments: &PyMoments, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    match solve_moments(&moments.inner, tol) {
        Ok(SolveOutcome::Measure(sol)) => Ok(Bound::new(py, PySolution { inner: *sol })?.into_any()),
        Ok(SolveOutcome::NoMeasure { reason, witness }) => {
            let vector = match &witness {
                NoMeasureWitness::NegativeDirection { v, .. } | NoMeasureWitness::KernelLeak { v, .. } => v.clone(),
            };
            let out = PyNoMeasure {
                reason: reason.to_string(),
                witness: witness.to_string(),
                vector,
            };
            Ok(Bound::new(py, out)?.into_any())
        }
        Err(e) => Err(SolverError::new_err(e.to_string())),
    }
}

/// Compares a float measure's moments with `moments`. Returns a dict with
/// `pass`, `max_abs_error`, `max_rel_error` and the failing `"i,j"` labels.
#[pyfunction]
#[pyo3(signature = (moments, atoms, weights, tol = DEFAULT_TOL))]
fn verify<'py>(
    py: Python<'py>,
    moments: &PyMoments,
    atoms: Vec<(f64, f64)>,
    weights: Vec<f64>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = AtomicMeasure::new(atoms, weights).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = verify_measure(&moments.inner, &m, tol);
    let d = PyDict::new(py);
    d.set_item("pass", report.pass)?;
    d.set_item("max_abs_error", report.max_abs_error)?;
    d.set_item("max_rel_error", report.max_rel_error)?;
    d.set_item("failing", report.failing().map(|c| c.label()).collect::<Vec<_>>())?;
    Ok(d)
}

/// Moments of a measure; same as `Moments.from_measure`.
#[pyfunction]
fn synth(atoms: Vec<(Bound<'_, PyAny>, Bound<'_, PyAny>)>, weights: Vec<Bound<'_, PyAny>>) -> PyResult<PyMoments> {
    PyMoments::from_measure(atoms, weights)
}

#[pymodule]
#[pyo3(name = "cubic_moment")]
fn cubic_moment_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMoments>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyNoMeasure>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    Ok(())
}
