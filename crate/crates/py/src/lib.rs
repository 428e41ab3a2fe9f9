//! Python bindings. Exact values cross the boundary as strings (`"-3/4"`);
//! inputs may be `int`, `str` or `fractions.Fraction`.

use ghostcheck_core::acceptance::{run_all, Engines};
use ghostcheck_core::exact::Rational;
use ghostcheck_core::factory::{self, ModelKind, StratumSpec};
use ghostcheck_core::localmodel::{expand_ghost as core_expand, ghost_poly};
use ghostcheck_core::obstruction::{
    corollary_check_threaded, subset_ranks, theorem_check, AttachmentColumn, CorollaryVerdict,
    ObstructionProblem as CoreProblem, TheoremVerdict,
};
use ghostcheck_core::report::{self, CheckError, ComponentInput, ProblemFile};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

create_exception!(
    ghostcheck,
    InputError,
    PyValueError,
    "Malformed or inconsistent input."
);
create_exception!(
    ghostcheck,
    InternalError,
    PyRuntimeError,
    "A result failed its own certificate check."
);

fn input_err(code: &str, msg: impl std::fmt::Display) -> PyErr {
    InputError::new_err(format!("{code}: {msg}"))
}

fn check_err(e: CheckError) -> PyErr {
    match e {
        CheckError::Input(e) => input_err(e.code, e.message),
        CheckError::Internal(e) => InternalError::new_err(e.0),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = obj.str()?.to_string();
    s.parse()
        .map_err(|e| input_err("invalid_number", format!("{s:?}: {e}")))
}

fn rationals(objs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rational>> {
    objs.iter().map(rational).collect()
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

/// `(delta, deriv)` for one attachment point.
type Point<'py> = (Vec<Bound<'py, PyAny>>, Vec<Bound<'py, PyAny>>);

/// Evaluation covectors and branch derivatives at the attachment points of one ghost.
#[pyclass(name = "ObstructionProblem", module = "ghostcheck", frozen)]
pub struct PyProblem {
    inner: CoreProblem,
}

#[pymethods]
impl PyProblem {
    /// `points` is a list of `(delta, deriv)` pairs, `len(delta) == genus`
    /// and `len(deriv) == ambient_dim`.
    #[new]
    fn new(genus: usize, ambient_dim: usize, points: Vec<Point<'_>>) -> PyResult<Self> {
        let columns = points
            .iter()
            .map(|(delta, deriv)| {
                Ok(AttachmentColumn {
                    delta: rationals(delta)?,
                    deriv: rationals(deriv)?,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = CoreProblem::new(genus, ambient_dim, columns)
            .map_err(|e| input_err("invalid_problem", e))?;
        Ok(PyProblem { inner })
    }

    #[staticmethod]
    fn from_json(src: &str) -> PyResult<Self> {
        let inner: CoreProblem = serde_json::from_str(src).map_err(|e| input_err("schema", e))?;
        Ok(PyProblem { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("plain JSON")
    }

    #[getter]
    fn genus(&self) -> usize {
        self.inner.genus()
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ObstructionProblem(genus={}, ambient_dim={}, points={})",
            self.inner.genus(),
            self.inner.ambient_dim(),
            self.inner.len()
        )
    }

    /// Rows of the `N*h x n` obstruction matrix as strings.
    fn obstruction_matrix(&self) -> Vec<Vec<String>> {
        let m = self.inner.obstruction_matrix();
        (0..m.rows()).map(|r| strings(m.row(r))).collect()
    }

    /// `{"verdict", "rank", "kernel_witness"}`; the witness is `None` when the map is injective.
    fn theorem_check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let t = theorem_check(&self.inner);
        let (verdict, witness) = match &t.verdict {
            TheoremVerdict::NotEventuallySmoothable => (report::OBSTRUCTED, None),
            TheoremVerdict::Inconclusive { kernel_witness } => {
                (report::INCONCLUSIVE, Some(strings(kernel_witness)))
            }
        };
        to_py(
            py,
            &json!({"verdict": verdict, "rank": t.rank, "kernel_witness": witness}),
        )
    }

    /// `{"verdict", "witness_D"}` from the exhaustive subset search (at most 24 points).
    #[pyo3(signature = (threads = 1))]
    fn corollary_check<'py>(&self, py: Python<'py>, threads: usize) -> PyResult<Bound<'py, PyAny>> {
        let c = py
            .detach(|| corollary_check_threaded(&self.inner, threads.max(1)))
            .map_err(|e| input_err("invalid_problem", e))?;
        let (verdict, witness) = match c {
            CorollaryVerdict::NotEventuallySmoothable => (report::OBSTRUCTED, None),
            CorollaryVerdict::Inconclusive { witness_d } => (report::INCONCLUSIVE, Some(witness_d)),
        };
        to_py(py, &json!({"verdict": verdict, "witness_D": witness}))
    }

    /// `(rank of derivatives, rank of covectors, |D|)` for 0-based indices `d`.
    fn subset_ranks(&self, d: Vec<usize>) -> PyResult<(usize, usize, usize)> {
        let r = subset_ranks(&self.inner, &d).map_err(|e| input_err("invalid_subset", e))?;
        Ok((r.deriv_rank, r.delta_rank, r.size))
    }
}

/// Runs both checks on a problem file given as a JSON string.
#[pyfunction]
#[pyo3(signature = (src, threads = 1))]
fn check<'py>(py: Python<'py>, src: &str, threads: usize) -> PyResult<Bound<'py, PyAny>> {
    let file = ProblemFile::parse(src).map_err(|e| input_err(e.code, e.message))?;
    let r = py
        .detach(|| report::run_check(&file, threads.max(1)))
        .map_err(check_err)?;
    to_py(py, &serde_json::to_value(&r).expect("plain JSON"))
}

/// Residue check for a local-model file (`{"m": .., "G": [..]}`) given as a JSON string.
#[pyfunction]
#[pyo3(name = "localmodel")]
fn py_localmodel<'py>(py: Python<'py>, src: &str) -> PyResult<Bound<'py, PyAny>> {
    let file = ProblemFile::parse(src).map_err(|e| input_err(e.code, e.message))?;
    let r = report::run_localmodel(&file).map_err(check_err)?;
    to_py(py, &serde_json::to_value(&r).expect("plain JSON"))
}

/// Level-by-level expansion of a germ `G` in `x, y, t` on the chain of length `m`.
#[pyfunction]
fn expand_ghost<'py>(py: Python<'py>, g: Vec<String>, m: u32) -> PyResult<Bound<'py, PyAny>> {
    let polys = g
        .iter()
        .map(|s| ghost_poly(s).map_err(|e| input_err(e.code(), e)))
        .collect::<PyResult<Vec<_>>>()?;
    let exp = core_expand(&polys, m).map_err(|e| input_err(e.code(), e))?;
    to_py(py, &serde_json::to_value(&exp).expect("plain JSON"))
}

#[pyfunction]
#[pyo3(name = "dim_moduli")]
fn py_dim_moduli(ambient_dim: i64, g: i64, d: i64) -> PyResult<i64> {
    factory::dim_moduli(ambient_dim, g, d).map_err(|e| input_err("precondition", e))
}

/// Dimension of the stratum with a genus `h` ghost meeting components `parts = [(g_i, d_i), ...]`.
#[pyfunction]
#[pyo3(name = "dim_stratum")]
fn py_dim_stratum(ambient_dim: i64, h: i64, parts: Vec<(i64, i64)>) -> PyResult<i64> {
    let spec = StratumSpec::from_parts(ambient_dim, h, parts);
    factory::dim_stratum(&spec).map_err(|e| input_err("invalid_stratum", e))
}

/// Problem file as a JSON string: `"hyperelliptic"`, `"nodal_rational"` or `"random"`.
#[pyfunction]
#[pyo3(signature = (ambient_dim, h, model = "hyperelliptic", seed = 0, n = None))]
fn generate(
    ambient_dim: usize,
    h: usize,
    model: &str,
    seed: u64,
    n: Option<usize>,
) -> PyResult<String> {
    let input = if model == "random" {
        let count = n.unwrap_or(ambient_dim * h);
        if ambient_dim == 0 || h == 0 || count == 0 {
            return Err(input_err("precondition", "N, h and n must be at least 1"));
        }
        ComponentInput::Raw(factory::random_instance(seed, h, ambient_dim, count, 5))
    } else {
        let kind: ModelKind = model.parse().map_err(|e| input_err("precondition", e))?;
        let inst = factory::build_fan_instance(ambient_dim, h, kind)
            .map_err(|e| input_err("precondition", e))?;
        ComponentInput::Model {
            curve_model: inst.curve_model,
            attachments: inst.attachments,
            derivs: inst.derivs,
        }
    };
    Ok(ProblemFile::single(input).to_json())
}

/// Acceptance suite as a list of `{"id", "name", "passed", "detail"}`.
#[pyfunction]
fn selftest<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let results = py.detach(|| run_all(&Engines::default()));
    let rows: Vec<Value> = results
        .iter()
        .map(|r| json!({"id": r.id, "name": r.name, "passed": r.passed(), "detail": r.detail}))
        .collect();
    to_py(py, &Value::Array(rows))
}

#[pymodule]
fn ghostcheck(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(py_localmodel, m)?)?;
    m.add_function(wrap_pyfunction!(expand_ghost, m)?)?;
    m.add_function(wrap_pyfunction!(py_dim_moduli, m)?)?;
    m.add_function(wrap_pyfunction!(py_dim_stratum, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("InputError", py.get_type::<InputError>())?;
    m.add("InternalError", py.get_type::<InternalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
