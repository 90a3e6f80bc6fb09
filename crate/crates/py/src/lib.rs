//! Python bindings for the fklab toolkit.
//!
//! Exposes the interaction model, grids, ground-action brackets, minimal
//! action tables and weak KAM solutions as Python classes and functions.
//! Structured reports cross the boundary as JSON strings so Python callers
//! can `json.loads` them without a schema dependency.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fklab::ground_action;
use fklab::kam;
use fklab::mane;
use fklab::model::{Family, InteractionModel, ModelSpec};
use fklab::substrate::{self, SubstrateSpec};

fn err(e: fklab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn jsonify<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Uniform grid of sample sites.
#[pyclass(frozen)]
struct Grid {
    inner: ground_action::Grid,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(lo: f64, hi: f64, step: f64) -> PyResult<Self> {
        Ok(Grid { inner: ground_action::Grid::new(lo, hi, step).map_err(err)? })
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.inner.lo
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.inner.hi
    }

    #[getter]
    fn step(&self) -> f64 {
        self.inner.step
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn node(&self, i: usize) -> PyResult<f64> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!(
                "node index {i} out of range (grid has {} nodes)",
                self.inner.len()
            )));
        }
        Ok(self.inner.node(i))
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    fn index_nearest(&self, x: f64) -> usize {
        self.inner.index_nearest(x)
    }

    fn __repr__(&self) -> String {
        format!("Grid(lo={}, hi={}, step={})", self.inner.lo, self.inner.hi, self.inner.step)
    }
}

/// Nearest-neighbour interaction energy `E(x, y) = ½(y − x − λ)² + K·V(x)`
/// with a periodic or quasi-periodic on-site potential.
#[pyclass(frozen)]
struct Model {
    inner: InteractionModel,
}

impl Model {
    fn spec_for(
        family: &str,
        lambda: f64,
        coupling: f64,
        alpha: Option<f64>,
        rho: Option<f64>,
    ) -> PyResult<ModelSpec> {
        let family = Family::parse(family).map_err(err)?;
        let substrate = match (family, alpha, rho) {
            (Family::Periodic, _, _) => None,
            (Family::QuasiPeriodic, Some(a), Some(r)) => {
                Some(SubstrateSpec::new(a, r).map_err(err)?)
            }
            (Family::QuasiPeriodic, _, _) => {
                return Err(PyValueError::new_err(
                    "quasiperiodic model needs alpha and rho".to_string(),
                ))
            }
        };
        Ok(ModelSpec { lambda, coupling, family, substrate })
    }
}

#[pymethods]
impl Model {
    /// Build a model covering `[lo, hi]`. `family` is "periodic" or
    /// "quasiperiodic"; the latter requires `alpha` and `rho`.
    #[new]
    #[pyo3(signature = (family, lambda_, coupling, lo, hi, alpha=None, rho=None))]
    fn new(
        family: &str,
        lambda_: f64,
        coupling: f64,
        lo: f64,
        hi: f64,
        alpha: Option<f64>,
        rho: Option<f64>,
    ) -> PyResult<Self> {
        let spec = Model::spec_for(family, lambda_, coupling, alpha, rho)?;
        Ok(Model { inner: InteractionModel::for_window(spec, lo, hi).map_err(err)? })
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.spec().lambda
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.spec().coupling
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.spec().family.name()
    }

    fn potential(&self, x: f64) -> PyResult<f64> {
        self.inner.potential(x).map_err(err)
    }

    fn energy(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.energy(x, y).map_err(err)
    }

    fn chain_energy(&self, points: Vec<f64>) -> PyResult<f64> {
        self.inner.chain_energy(&points).map_err(err)
    }

    fn __repr__(&self) -> String {
        let s = self.inner.spec();
        format!("Model(family={}, lambda={}, coupling={})", s.family.name(), s.lambda, s.coupling)
    }
}

/// A localized weak KAM solution together with its trust metadata.
#[pyclass(frozen)]
struct Solution {
    inner: kam::KamSolution,
}

#[pymethods]
impl Solution {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn interior(&self) -> (usize, usize) {
        self.inner.interior
    }

    #[getter]
    fn type_label(&self) -> String {
        self.inner.type_label.clone()
    }

    #[getter]
    fn e_bar_used(&self) -> f64 {
        self.inner.e_bar_used
    }

    #[getter]
    fn epsilon_used(&self) -> i8 {
        self.inner.epsilon_used
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn slopes(&self) -> (f64, f64) {
        self.inner.slopes
    }

    fn to_json(&self) -> PyResult<String> {
        jsonify(&self.inner)
    }

    /// Rehydrate a solution persisted by `to_json` or by the CLI
    /// (`kam_solution.json`'s "solution" field).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Solution> {
        let inner: kam::KamSolution = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("malformed solution JSON: {e}")))?;
        Ok(Solution { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(type={}, nodes={}, residual={:.3e})",
            self.inner.type_label,
            self.inner.values.len(),
            self.inner.residual
        )
    }
}

/// Substrate points `(k, q_k, letter_k)` for `k` in `[k_min, k_max]`.
#[pyfunction]
fn substrate_points(
    alpha: f64,
    rho: f64,
    k_min: i64,
    k_max: i64,
) -> PyResult<Vec<(i64, f64, u8)>> {
    let spec = SubstrateSpec::new(alpha, rho).map_err(err)?;
    let sub = substrate::generate(&spec, k_min, k_max).map_err(err)?;
    Ok((k_min..=k_max)
        .map(|k| (k, sub.point(k).expect("k in generated range"), substrate::letter(k, alpha)))
        .collect())
}

/// Empirical frequency of a letter pattern in the substrate coding.
#[pyfunction]
fn subword_frequency(
    alpha: f64,
    rho: f64,
    k_min: i64,
    k_max: i64,
    pattern: Vec<u8>,
) -> PyResult<f64> {
    let spec = SubstrateSpec::new(alpha, rho).map_err(err)?;
    let sub = substrate::generate(&spec, k_min, k_max).map_err(err)?;
    sub.subword_frequency(&pattern).map_err(err)
}

/// Certified bracket for the ground energy per bond:
/// `(lower, estimate, upper)`.
#[pyfunction]
fn ground_action_bracket(
    model: &Model,
    grid: &Grid,
    n_max: usize,
) -> PyResult<(f64, f64, f64)> {
    let b = ground_action::bracket(&model.inner, &grid.inner, n_max).map_err(err)?;
    Ok((b.lower, b.estimate, b.upper))
}

/// Full pinning report (verdict, bracket, history) as a JSON string.
#[pyfunction]
fn nondegeneracy_report(model: &Model, grid: &Grid, n_max: usize) -> PyResult<String> {
    let rep = ground_action::nondegeneracy_check(&model.inner, &grid.inner, n_max).map_err(err)?;
    jsonify(&rep)
}

/// Minimal action from `ref_point` to every grid node at calibration
/// `e_bar`: returns `(values, predecessors)`.
#[pyfunction]
fn mane_table(
    model: &Model,
    grid: &Grid,
    ref_point: f64,
    e_bar: f64,
) -> PyResult<(Vec<f64>, Vec<i64>)> {
    let t = mane::mane_table(&model.inner, &grid.inner, ref_point, e_bar).map_err(err)?;
    Ok((t.values, t.predecessor))
}

/// Minimal action between two sites and the minimizing chain.
#[pyfunction]
fn mane_potential(
    model: &Model,
    grid: &Grid,
    x: f64,
    y: f64,
    e_bar: f64,
) -> PyResult<(f64, Vec<f64>)> {
    let (v, chain) = mane::mane_potential(&model.inner, &grid.inner, x, y, e_bar).map_err(err)?;
    Ok((v, chain.points))
}

/// Minimizing free configuration with `n` bonds: `(points, energy)`.
#[pyfunction]
fn fundamental_configuration(model: &Model, grid: &Grid, n: usize) -> PyResult<(Vec<f64>, f64)> {
    let chain = mane::fundamental_configuration(&model.inner, &grid.inner, n).map_err(err)?;
    Ok((chain.points.clone(), chain.energy))
}

/// One application of the smoothing operator
/// `T[u](y) = min_x (u(x) + E(x, y)) − e_bar`.
#[pyfunction]
fn smoothing_step(model: &Model, grid: &Grid, values: Vec<f64>, e_bar: f64) -> PyResult<Vec<f64>> {
    kam::lax_oleinik(&model.inner, &grid.inner, &values, e_bar).map_err(err)
}

/// Build a localized weak KAM solution of the given kind ("I", "II", "III").
#[pyfunction]
#[pyo3(signature = (model, grid, kind, epsilon=1, e_bar=0.0, max_iter=500, tol=1e-8))]
fn build_solution(
    model: &Model,
    grid: &Grid,
    kind: &str,
    epsilon: i8,
    e_bar: f64,
    max_iter: usize,
    tol: f64,
) -> PyResult<Solution> {
    let kind = kam::SolutionKind::parse(kind).map_err(err)?;
    let inner = kam::build_solution(&model.inner, &grid.inner, kind, epsilon, e_bar, max_iter, tol)
        .map_err(err)?;
    Ok(Solution { inner })
}

/// Check the sub-action inequality, calibration and regularity of a
/// solution; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (model, grid, solution, tol=1e-5))]
fn verify_solution(model: &Model, grid: &Grid, solution: &Solution, tol: f64) -> PyResult<String> {
    let rep =
        kam::verify_weak_kam(&model.inner, &grid.inner, &solution.inner, tol).map_err(err)?;
    jsonify(&rep)
}

/// Classify a solution into type I/II/III (or "unknown"); returns the
/// report as a JSON string.
#[pyfunction]
#[pyo3(signature = (model, grid, solution, epsilon=1))]
fn classify_solution(
    model: &Model,
    grid: &Grid,
    solution: &Solution,
    epsilon: i8,
) -> PyResult<String> {
    let rep = kam::classify(&model.inner, &grid.inner, &solution.inner, epsilon).map_err(err)?;
    jsonify(&rep)
}

/// Sup distance between two solutions on their common trusted interior,
/// after matching normalizations.
#[pyfunction]
fn solution_distance(a: &Solution, b: &Solution) -> PyResult<f64> {
    kam::solution_distance(&a.inner, &b.inner).map_err(err)
}

/// Pinning verdicts across a strictly ascending list of drifts; returns the
/// report (rows plus threshold estimates) as a JSON string.
#[pyfunction]
#[pyo3(signature = (model, lambdas, grid, n_max=16, sizes=vec![]))]
fn lambda_sweep(
    model: &Model,
    lambdas: Vec<f64>,
    grid: &Grid,
    n_max: usize,
    sizes: Vec<usize>,
) -> PyResult<String> {
    let rep = kam::lambda_sweep(model.inner.spec(), &lambdas, &grid.inner, n_max, &sizes)
        .map_err(err)?;
    jsonify(&rep)
}

#[pymodule]
fn fklab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Model>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(substrate_points, m)?)?;
    m.add_function(wrap_pyfunction!(subword_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(ground_action_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(nondegeneracy_report, m)?)?;
    m.add_function(wrap_pyfunction!(mane_table, m)?)?;
    m.add_function(wrap_pyfunction!(mane_potential, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_configuration, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_step, m)?)?;
    m.add_function(wrap_pyfunction!(build_solution, m)?)?;
    m.add_function(wrap_pyfunction!(verify_solution, m)?)?;
    m.add_function(wrap_pyfunction!(classify_solution, m)?)?;
    m.add_function(wrap_pyfunction!(solution_distance, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_sweep, m)?)?;
    Ok(())
}
