//! Log-uniform time mesh and function samples attached to it.
//!
//! The mesh on [a, b] with n subintervals places node k at
//! t_k = a * exp(k * dT) with dT = ln(b/a) / n, so consecutive nodes keep
//! the constant ratio exp(dT).

use std::error::Error;
use std::fmt;

/// Errors from grid construction and sample handling.
#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Invalid construction argument.
    Domain(String),
    /// Sample vector length does not match the grid.
    LengthMismatch { expected: usize, got: usize },
    /// A sampled function produced a non-finite value.
    NonFiniteSample { index: usize, t: f64 },
    /// Two sample sets live on different grids.
    GridMismatch,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::Domain(msg) => write!(f, "domain error: {msg}"),
            GridError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} sample values, got {got}")
            }
            GridError::NonFiniteSample { index, t } => {
                write!(f, "sampled function is not finite at node {index} (t = {t})")
            }
            GridError::GridMismatch => write!(f, "sample sets live on different grids"),
        }
    }
}

impl Error for GridError {}

/// Geometric mesh t_k = a * exp(k * dT) on [a, b].
#[derive(Debug, Clone, Copy)]
pub struct LogGrid {
    a: f64,
    b: f64,
    n: usize,
    dt: f64,
}

// dt is derived from (a, b, n), so equality ignores it.
impl PartialEq for LogGrid {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.n == other.n
    }
}

impl LogGrid {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals; the grid has n + 1 nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Log-uniform step dT = ln(b/a) / n.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Node t_k = a * exp(k * dT). node(0) = a exactly; node(n) lands on b
    /// to rounding because each node is computed directly, not by repeated
    /// multiplication.
    pub fn node(&self, k: usize) -> f64 {
        self.a * (self.dt * k as f64).exp()
    }

    /// All n + 1 nodes in order.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.node(k)).collect()
    }
}

/// Builds the mesh on [a, b] with n subintervals.
pub fn make_grid(a: f64, b: f64, n: usize) -> Result<LogGrid, GridError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(GridError::Domain(format!(
            "interval endpoints must be finite, got [{a}, {b}]"
        )));
    }
    if a <= 0.0 {
        return Err(GridError::Domain(format!(
            "interval start must be positive, got {a}"
        )));
    }
    if b <= a {
        return Err(GridError::Domain(format!(
            "interval end must exceed the start, got [{a}, {b}]"
        )));
    }
    if n < 1 {
        return Err(GridError::Domain("need at least one subinterval".into()));
    }
    let dt = (b / a).ln() / n as f64;
    Ok(LogGrid { a, b, n, dt })
}

/// Function values x_0..x_n attached to a grid, x_k = x(t_k).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    grid: LogGrid,
    values: Vec<f64>,
}

impl GridSamples {
    /// Wraps precomputed values; the vector must hold one finite value per node.
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n() + 1 {
            return Err(GridError::LengthMismatch {
                expected: grid.n() + 1,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFiniteSample {
                index: k,
                t: grid.node(k),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }
}

/// Evaluates f at every node.
pub fn sample(grid: LogGrid, f: impl Fn(f64) -> f64) -> Result<GridSamples, GridError> {
    let mut values = Vec::with_capacity(grid.n() + 1);
    for k in 0..=grid.n() {
        let t = grid.node(k);
        let v = f(t);
        if !v.is_finite() {
            return Err(GridError::NonFiniteSample { index: k, t });
        }
        values.push(v);
    }
    Ok(GridSamples { grid, values })
}

/// Mean absolute difference over k = 1..n: sum |x_k - y_k| / n.
///
/// Index 0 is deliberately excluded; both solver classes pin x_0 by a
/// boundary condition, so that term carries no information.
pub fn mean_abs_error(x: &GridSamples, y: &GridSamples) -> Result<f64, GridError> {
    abs_error_sum(x, y).map(|s| s / x.grid.n() as f64)
}

/// Sum of |x_k - y_k| over k = 1..n divided by the node count n + 1.
///
/// Equals the mean over all nodes when the index-0 entries agree, which is
/// the convention behind the recorded convergence targets for both solver
/// classes.
pub fn node_mean_abs_error(x: &GridSamples, y: &GridSamples) -> Result<f64, GridError> {
    abs_error_sum(x, y).map(|s| s / (x.grid.n() + 1) as f64)
}

fn abs_error_sum(x: &GridSamples, y: &GridSamples) -> Result<f64, GridError> {
    if x.grid != y.grid {
        return Err(GridError::GridMismatch);
    }
    Ok(x.values
        .iter()
        .zip(&y.values)
        .skip(1)
        .map(|(xv, yv)| (xv - yv).abs())
        .sum())
}
