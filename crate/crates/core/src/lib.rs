//! Fractional derivatives of Hadamard type on log-uniform grids.
//!
//! The central object is a first-order discretization of the operator
//!
//! ```text
//! D x(t) = 1/Gamma(1-alpha) * t d/dt Integral(a..t) (ln t/tau)^(-alpha) x(tau) dtau/tau
//! ```
//!
//! of order `alpha` in (0, 1), living on the geometric mesh
//! `t_N = a * exp(N * dT)` that is uniform in `ln t`. Everything else is
//! built on top of it:
//!
//! - [`grid`]: the mesh, sampled functions, and the two mean-error norms
//!   used throughout.
//! - [`hadamard`]: discrete left and right operators, their weight tables,
//!   the a-priori error bound, and slow adaptive-quadrature oracles to
//!   check the fast forms against.
//! - [`expr`]: a small expression language over `t`, `x`, `v` with exact
//!   symbolic differentiation, used to state problems at the command line
//!   and in tests.
//! - [`solvers`]: an implicit stepper for equations f(t, x, D x) = 0 and
//!   a direct method minimizing trapezoid discretizations of actions
//!   containing D x.
//! - [`numerics`]: the gamma function and safeguarded Newton iterations
//!   the layers above share.
//! - [`cli`]: the `hadfrac` binary's argument handling, CSV output, and
//!   convergence studies.

pub mod cli;
pub mod expr;
pub mod grid;
pub mod hadamard;
pub mod numerics;
pub mod solvers;

pub use expr::{parse, EvalPoint, Expr, ExprError, Func, Var};
pub use grid::{
    make_grid, mean_abs_error, node_mean_abs_error, sample, GridError, GridSamples, LogGrid,
};
pub use hadamard::{
    analytic_left_ln, error_bound, left_deriv, left_deriv_all, make_weights, oracle_left,
    oracle_right, right_deriv, ErrorBoundInputs, FracOrder, HadamardError, WeightTable,
};
pub use numerics::{gamma, NewtonReport, NumericsError, RootConfig};
pub use solvers::{
    solve_fde, solve_variational, Diagnostics, FdeProblem, SolveError, SolveResult,
    VariationalProblem,
};
