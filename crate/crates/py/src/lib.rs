//! Python bindings for the fractional derivative toolkit: the log-uniform
//! grid, the discrete operators with their error bound, both solvers, the
//! error norms, and the expression language. Values cross the boundary as
//! plain floats and lists; every library error becomes a `ValueError`
//! carrying the original message.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hadfrac::{
    make_weights, parse, ErrorBoundInputs, EvalPoint, FracOrder, GridSamples, RootConfig, Var,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order(alpha: f64) -> PyResult<FracOrder> {
    FracOrder::new(alpha).map_err(err)
}

/// Geometric mesh t_k = a * exp(k * dt) with n cells, uniform in ln t.
#[pyclass(frozen, from_py_object, name = "LogGrid")]
#[derive(Clone)]
struct PyLogGrid {
    inner: hadfrac::LogGrid,
}

impl PyLogGrid {
    fn samples(&self, values: Vec<f64>) -> PyResult<GridSamples> {
        GridSamples::new(self.inner, values).map_err(err)
    }
}

#[pymethods]
impl PyLogGrid {
    #[new]
    fn new(a: f64, b: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: hadfrac::make_grid(a, b, n).map_err(err)?,
        })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    /// Node k of the mesh, for k in 0..=n.
    fn node(&self, k: usize) -> PyResult<f64> {
        if k > self.inner.n() {
            return Err(PyValueError::new_err(format!(
                "node index {k} exceeds the mesh size {}",
                self.inner.n()
            )));
        }
        Ok(self.inner.node(k))
    }

    /// All n + 1 nodes in order.
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    fn __repr__(&self) -> String {
        format!(
            "LogGrid(a={:?}, b={:?}, n={})",
            self.inner.a(),
            self.inner.b(),
            self.inner.n()
        )
    }
}

/// Gamma function for positive arguments.
#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    hadfrac::gamma(x).map_err(err)
}

/// Discrete left derivative of the sampled values at one node, 1 <= node <= n.
#[pyfunction]
fn left_deriv(grid: PyLogGrid, alpha: f64, values: Vec<f64>, node: usize) -> PyResult<f64> {
    let s = grid.samples(values)?;
    let w = make_weights(order(alpha)?, grid.inner);
    hadfrac::left_deriv(&s, &w, node).map_err(err)
}

/// Discrete left derivative at every node 1..=n, as a list of length n.
#[pyfunction]
fn left_deriv_all(grid: PyLogGrid, alpha: f64, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = grid.samples(values)?;
    let w = make_weights(order(alpha)?, grid.inner);
    hadfrac::left_deriv_all(&s, &w).map_err(err)
}

/// Discrete right derivative at one node, 0 <= node <= n - 1.
#[pyfunction]
fn right_deriv(grid: PyLogGrid, alpha: f64, values: Vec<f64>, node: usize) -> PyResult<f64> {
    let s = grid.samples(values)?;
    let w = make_weights(order(alpha)?, grid.inner);
    hadfrac::right_deriv(&s, &w, node).map_err(err)
}

/// Closed form of the left derivative of ln t on a grid starting at a = 1.
#[pyfunction]
fn analytic_left_ln(alpha: f64, a: f64, t: f64) -> PyResult<f64> {
    hadfrac::analytic_left_ln(order(alpha)?, a, t).map_err(err)
}

/// A-priori bound on the pointwise discretization error, given maxima of
/// the first two derivatives of the sampled function.
#[pyfunction]
fn error_bound(grid: PyLogGrid, alpha: f64, m1: f64, m2: f64) -> PyResult<f64> {
    let w = make_weights(order(alpha)?, grid.inner);
    Ok(hadfrac::error_bound(
        &w,
        &ErrorBoundInputs::new(m1, m2).map_err(err)?,
    ))
}

/// Solves f(t, x, v) = 0 with v the operator value, marching from x(a) = x0.
/// Returns the n + 1 solution samples.
#[pyfunction]
fn solve_fde(grid: PyLogGrid, alpha: f64, residual: &str, x0: f64) -> PyResult<Vec<f64>> {
    let e = parse(residual).map_err(err)?;
    let p = hadfrac::FdeProblem::new(e, order(alpha)?, grid.inner, x0).map_err(err)?;
    let r = hadfrac::solve_fde(&p, &RootConfig::for_scalar()).map_err(err)?;
    Ok(r.samples.values().to_vec())
}

/// Minimizes the trapezoid discretization of the action of the Lagrangian
/// subject to x(a) = xa and x(b) = xb. Returns the n + 1 solution samples.
#[pyfunction]
fn solve_varmin(
    grid: PyLogGrid,
    alpha: f64,
    lagrangian: &str,
    xa: f64,
    xb: f64,
) -> PyResult<Vec<f64>> {
    let e = parse(lagrangian).map_err(err)?;
    let p = hadfrac::VariationalProblem::new(e, order(alpha)?, grid.inner, xa, xb).map_err(err)?;
    let r = hadfrac::solve_variational(&p, &RootConfig::for_system()).map_err(err)?;
    Ok(r.samples.values().to_vec())
}

/// Mean absolute difference over nodes 1..=n, divided by n.
#[pyfunction]
fn mean_abs_error(grid: PyLogGrid, xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    let sx = grid.samples(xs)?;
    let sy = grid.samples(ys)?;
    hadfrac::mean_abs_error(&sx, &sy).map_err(err)
}

/// Mean absolute difference over all n + 1 nodes.
#[pyfunction]
fn node_mean_abs_error(grid: PyLogGrid, xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    let sx = grid.samples(xs)?;
    let sy = grid.samples(ys)?;
    hadfrac::node_mean_abs_error(&sx, &sy).map_err(err)
}

/// Evaluates an expression in t, x, v at one point.
#[pyfunction]
fn eval_expr(src: &str, t: f64, x: f64, v: f64) -> PyResult<f64> {
    parse(src)
        .map_err(err)?
        .eval(&EvalPoint::new(t, x, v))
        .map_err(err)
}

/// Symbolic derivative of an expression with respect to "x" or "v",
/// rendered back to expression syntax.
#[pyfunction]
fn diff_expr(src: &str, wrt: &str) -> PyResult<String> {
    let var = match wrt {
        "t" => Var::T,
        "x" => Var::X,
        "v" => Var::V,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown variable {other:?}, expected t, x, or v"
            )))
        }
    };
    Ok(parse(src).map_err(err)?.diff(var).map_err(err)?.to_string())
}

#[pymodule]
fn hadfrac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLogGrid>()?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(left_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(left_deriv_all, m)?)?;
    m.add_function(wrap_pyfunction!(right_deriv, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_left_ln, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fde, m)?)?;
    m.add_function(wrap_pyfunction!(solve_varmin, m)?)?;
    m.add_function(wrap_pyfunction!(mean_abs_error, m)?)?;
    m.add_function(wrap_pyfunction!(node_mean_abs_error, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    m.add_function(wrap_pyfunction!(diff_expr, m)?)?;
    Ok(())
}
