//! Solvers built on the discrete left operator: an initial-value problem
//! stepper for implicit equations f(t, x(t), D x(t)) = 0, and a direct
//! method for variational problems whose integrand depends on the
//! fractional derivative of the state.
//!
//! Both work on the same log-uniform grid as the operator itself. The
//! stepper solves one scalar implicit equation per node, walking left to
//! right; values already computed never change, so solving a prefix of the
//! grid yields bitwise the same samples as the full run. The variational
//! method minimizes a trapezoid discretization of the action by driving its
//! analytic gradient to zero with the damped Newton iteration from
//! [`crate::numerics`].

use std::cell::RefCell;
use std::error::Error;
use std::fmt;

use crate::expr::{EvalPoint, Expr, ExprError, Var};
use crate::grid::{GridSamples, LogGrid};
use crate::hadamard::{left_all_raw, make_weights, FracOrder, WeightTable};
use crate::numerics::{
    gamma_positive, solve_scalar_with_stats, solve_system, NumericsError, RootConfig,
};

/// Errors from problem construction and solving.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// The problem statement itself is rejected.
    Invalid(String),
    /// The residual or Lagrangian failed to evaluate at a grid node.
    Eval { node: usize, source: ExprError },
    /// The scalar solve for one step of the march gave up.
    Step { node: usize, source: NumericsError },
    /// The underlying root finder gave up.
    Numerics(NumericsError),
    /// The optimizer stopped making progress above the residual tolerance.
    NoConvergence { residual_norm: f64 },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Invalid(msg) => write!(f, "invalid problem: {msg}"),
            SolveError::Eval { node, source } => {
                write!(f, "evaluation failed at grid node {node}: {source}")
            }
            SolveError::Step { node, source } => {
                write!(f, "step at grid node {node} failed: {source}")
            }
            SolveError::Numerics(e) => write!(f, "{e}"),
            SolveError::NoConvergence { residual_norm } => {
                write!(f, "stalled with gradient norm {residual_norm:e}")
            }
        }
    }
}

impl Error for SolveError {}

impl From<NumericsError> for SolveError {
    fn from(e: NumericsError) -> Self {
        SolveError::Numerics(e)
    }
}

/// Per-solve diagnostic counters.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    /// Newton iterations spent at each node, in step order.
    Steps(Vec<usize>),
    /// Joint Newton solve over all interior unknowns.
    Newton { iterations: usize, residual_norm: f64 },
}

/// Solution samples plus how much work they took.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub samples: GridSamples,
    pub diagnostics: Diagnostics,
}

/// Initial-value problem f(t, x(t), D x(t)) = 0, x(a) = x0, with the
/// residual f given as an expression over `t`, `x`, and `v`, where `v`
/// stands for the operator value at the same node.
///
/// An explicit equation D x = g(t, x) is the residual `v - g(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdeProblem {
    residual: Expr,
    weights: WeightTable,
    x0: f64,
}

impl FdeProblem {
    pub fn new(
        residual: Expr,
        alpha: FracOrder,
        grid: LogGrid,
        x0: f64,
    ) -> Result<Self, SolveError> {
        if !x0.is_finite() {
            return Err(SolveError::Invalid(format!(
                "initial value must be finite, got {x0}"
            )));
        }
        Ok(Self {
            residual,
            weights: make_weights(alpha, grid),
            x0,
        })
    }

    pub fn grid(&self) -> &LogGrid {
        self.weights.grid()
    }

    pub fn alpha(&self) -> FracOrder {
        self.weights.alpha()
    }
}

/// Marches the implicit stepper across the whole grid.
pub fn solve_fde(problem: &FdeProblem, cfg: &RootConfig) -> Result<SolveResult, SolveError> {
    solve_fde_prefix(problem, cfg, problem.grid().n())
}

// Steps nodes 1..=m only. The full solve is the m = n case; anything
// shorter exists so tests can pin down that the march is causal.
pub(crate) fn solve_fde_prefix(
    problem: &FdeProblem,
    cfg: &RootConfig,
    m: usize,
) -> Result<SolveResult, SolveError> {
    let w = &problem.weights;
    let grid = *w.grid();
    let alpha = w.alpha().alpha();
    debug_assert!(m <= grid.n());

    let gamma_head = gamma_positive(1.0 - alpha);
    let mut x = Vec::with_capacity(m + 1);
    x.push(problem.x0);
    let mut iterations = Vec::with_capacity(m);

    for node in 1..=m {
        let t_node = grid.node(node);
        // Pieces of the operator that do not involve the unknown x_node:
        // the boundary term and the already-determined history sum.
        let head = problem.x0 / gamma_head * (t_node / grid.a()).ln().powf(-alpha);
        let mut history = 0.0;
        for k in 1..node {
            let c_k = grid.node(k) / (grid.dt() * k as f64).exp();
            history += w.omega(node - k + 1) * (x[k] - x[k - 1]) * c_k;
        }
        let fixed = head + w.psi() * history;
        let c_node = t_node / (grid.dt() * node as f64).exp();
        let slope = w.psi() * w.omega(1) * c_node;
        let x_prev = x[node - 1];

        // The operator value is affine in the one unknown, so the step is
        // the scalar root of the residual along that line.
        let captured: RefCell<Option<SolveError>> = RefCell::new(None);
        let g = |xn: f64| -> f64 {
            let v = fixed + slope * (xn - x_prev);
            match problem.residual.eval(&EvalPoint::new(t_node, xn, v)) {
                Ok(r) => r,
                Err(e) => {
                    let mut slot = captured.borrow_mut();
                    if slot.is_none() {
                        *slot = Some(SolveError::Eval { node, source: e });
                    }
                    f64::NAN
                }
            }
        };

        match solve_scalar_with_stats(&g, x_prev, cfg) {
            Ok((root, iters)) => {
                // Probes outside the domain of f are harmless once the
                // step converged, so a captured error is dropped here.
                x.push(root);
                iterations.push(iters);
            }
            Err(e) => {
                return Err(captured
                    .into_inner()
                    .unwrap_or(SolveError::Step { node, source: e }));
            }
        }
    }

    let prefix_grid = if m == grid.n() {
        grid
    } else {
        // A shortened march lives on the subgrid with the same step.
        crate::grid::make_grid(grid.a(), grid.node(m), m).map_err(|e| {
            SolveError::Invalid(format!("prefix grid construction failed: {e}"))
        })?
    };
    let samples = GridSamples::new(prefix_grid, x)
        .map_err(|e| SolveError::Invalid(format!("solution samples rejected: {e}")))?;
    Ok(SolveResult {
        samples,
        diagnostics: Diagnostics::Steps(iterations),
    })
}

/// Fixed-endpoint variational problem: minimize the trapezoid
/// discretization of the action integral of L(t, x(t), D x(t)) subject to
/// x(a) = xa and x(b) = xb.
///
/// The discrete objective weights node M by half the surrounding cell
/// width; the operator value at node 0, where the left operator does not
/// exist, is stood in for by the value at node 1.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem {
    lagrangian: Expr,
    l_x: Expr,
    l_v: Expr,
    weights: WeightTable,
    trapezoid: Vec<f64>,
    xa: f64,
    xb: f64,
}

impl VariationalProblem {
    /// Builds the problem and differentiates the Lagrangian in `x` and `v`
    /// up front, so an expression outside the differentiable fragment is
    /// rejected before any iteration runs.
    pub fn new(
        lagrangian: Expr,
        alpha: FracOrder,
        grid: LogGrid,
        xa: f64,
        xb: f64,
    ) -> Result<Self, SolveError> {
        if !xa.is_finite() || !xb.is_finite() {
            return Err(SolveError::Invalid(format!(
                "boundary values must be finite, got {xa} and {xb}"
            )));
        }
        let l_x = lagrangian
            .diff(Var::X)
            .map_err(|e| SolveError::Eval { node: 0, source: e })?;
        let l_v = lagrangian
            .diff(Var::V)
            .map_err(|e| SolveError::Eval { node: 0, source: e })?;
        let n = grid.n();
        let mut trapezoid = Vec::with_capacity(n + 1);
        trapezoid.push((grid.node(1) - grid.node(0)) / 2.0);
        for m in 1..n {
            trapezoid.push((grid.node(m + 1) - grid.node(m - 1)) / 2.0);
        }
        trapezoid.push((grid.node(n) - grid.node(n - 1)) / 2.0);
        Ok(Self {
            lagrangian,
            l_x,
            l_v,
            weights: make_weights(alpha, grid),
            trapezoid,
            xa,
            xb,
        })
    }

    pub fn grid(&self) -> &LogGrid {
        self.weights.grid()
    }

    pub fn alpha(&self) -> FracOrder {
        self.weights.alpha()
    }

    /// Number of free values: everything strictly between the endpoints.
    pub fn unknowns(&self) -> usize {
        self.grid().n().saturating_sub(1)
    }

    fn assemble(&self, interior: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
        if interior.len() != self.unknowns() {
            return Err(SolveError::Invalid(format!(
                "expected {} interior values, got {}",
                self.unknowns(),
                interior.len()
            )));
        }
        let mut x = Vec::with_capacity(self.grid().n() + 1);
        x.push(self.xa);
        x.extend_from_slice(interior);
        x.push(self.xb);
        let deriv = left_all_raw(&self.weights, &x);
        Ok((x, deriv))
    }

    /// Discrete action at the given interior values.
    pub fn objective(&self, interior: &[f64]) -> Result<f64, SolveError> {
        let (x, deriv) = self.assemble(interior)?;
        let mut acc = 0.0;
        for m in 0..=self.grid().n() {
            let v = if m == 0 { deriv[0] } else { deriv[m - 1] };
            let p = EvalPoint::new(self.grid().node(m), x[m], v);
            let val = self
                .lagrangian
                .eval(&p)
                .map_err(|e| SolveError::Eval { node: m, source: e })?;
            acc += self.trapezoid[m] * val;
        }
        Ok(acc)
    }

    /// Analytic gradient of [`Self::objective`] in the interior values.
    ///
    /// Component N couples to every node M >= N through the operator: the
    /// chain rule contributes psi * a * (w_{M-N+1} - w_{M-N}) per such M,
    /// plus the node-0 term, which rides on the operator value at node 1.
    /// Nothing here is local; perturbing a late value moves early
    /// components.
    pub fn gradient(&self, interior: &[f64]) -> Result<Vec<f64>, SolveError> {
        let (x, deriv) = self.assemble(interior)?;
        let n = self.grid().n();
        let w = &self.weights;
        let a = self.grid().a();

        // L_x and L_v at every node, evaluated once.
        let mut lx = vec![0.0; n + 1];
        let mut lv = vec![0.0; n + 1];
        for m in 0..=n {
            let v = if m == 0 { deriv[0] } else { deriv[m - 1] };
            let p = EvalPoint::new(self.grid().node(m), x[m], v);
            lx[m] = self
                .l_x
                .eval(&p)
                .map_err(|e| SolveError::Eval { node: m, source: e })?;
            lv[m] = self
                .l_v
                .eval(&p)
                .map_err(|e| SolveError::Eval { node: m, source: e })?;
        }

        let mut grad = vec![0.0; self.unknowns()];
        for (i, g) in grad.iter_mut().enumerate() {
            let big_n = i + 1;
            let mut acc = self.trapezoid[big_n] * lx[big_n];
            for m in big_n..=n {
                let dw = w.omega(m - big_n + 1) - w.omega(m - big_n);
                acc += self.trapezoid[m] * lv[m] * w.psi() * a * dw;
            }
            if big_n == 1 {
                acc += self.trapezoid[0] * lv[0] * w.psi() * a * w.omega(1);
            }
            *g = acc;
        }
        Ok(grad)
    }
}

/// Minimizes the discrete action by Newton iteration on the gradient,
/// starting from the straight line between the endpoints.
pub fn solve_variational(
    problem: &VariationalProblem,
    cfg: &RootConfig,
) -> Result<SolveResult, SolveError> {
    let n = problem.grid().n();
    let dim = problem.unknowns();

    if dim == 0 {
        let samples = GridSamples::new(*problem.grid(), vec![problem.xa, problem.xb])
            .map_err(|e| SolveError::Invalid(format!("solution samples rejected: {e}")))?;
        return Ok(SolveResult {
            samples,
            diagnostics: Diagnostics::Newton {
                iterations: 0,
                residual_norm: 0.0,
            },
        });
    }

    let guess: Vec<f64> = (1..n)
        .map(|k| problem.xa + (problem.xb - problem.xa) * k as f64 / n as f64)
        .collect();

    let captured: RefCell<Option<SolveError>> = RefCell::new(None);
    let g = |y: &[f64]| -> Vec<f64> {
        match problem.gradient(y) {
            Ok(v) => v,
            Err(e) => {
                let mut slot = captured.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                vec![f64::NAN; dim]
            }
        }
    };

    let report = match solve_system(&g, &guess, cfg) {
        Ok(r) => r,
        Err(e) => {
            return Err(captured.into_inner().unwrap_or(SolveError::Numerics(e)));
        }
    };
    if !report.converged {
        return Err(captured
            .into_inner()
            .unwrap_or(SolveError::NoConvergence {
                residual_norm: report.final_residual_norm,
            }));
    }

    let mut values = Vec::with_capacity(n + 1);
    values.push(problem.xa);
    values.extend_from_slice(&report.solution);
    values.push(problem.xb);
    let samples = GridSamples::new(*problem.grid(), values)
        .map_err(|e| SolveError::Invalid(format!("solution samples rejected: {e}")))?;
    Ok(SolveResult {
        samples,
        diagnostics: Diagnostics::Newton {
            iterations: report.iterations,
            residual_norm: report.final_residual_norm,
        },
    })
}
