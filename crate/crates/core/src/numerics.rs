//! Shared numerical kernels: the Gamma function, a safeguarded scalar
//! root-finder, and a damped Newton solver for small dense systems.

use std::error::Error;
use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Errors produced by the kernels in this module.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// Argument outside a function's domain.
    Domain(String),
    /// Invalid solver configuration.
    Config(String),
    /// Scalar root search exhausted its budget without meeting the tolerance.
    ScalarNoConvergence {
        best: f64,
        residual: f64,
        iterations: usize,
    },
    /// Newton on a system exhausted its budget without meeting the tolerance.
    SystemNoConvergence {
        best: Vec<f64>,
        residual: f64,
        iterations: usize,
    },
    /// Jacobian stayed singular after a regularization attempt.
    SingularJacobian { iteration: usize },
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericsError::Domain(msg) => write!(f, "domain error: {msg}"),
            NumericsError::Config(msg) => write!(f, "invalid solver configuration: {msg}"),
            NumericsError::ScalarNoConvergence {
                best,
                residual,
                iterations,
            } => write!(
                f,
                "scalar root search stopped after {iterations} iterations without \
                 converging (best x = {best:e}, |g(x)| = {residual:e})"
            ),
            NumericsError::SystemNoConvergence {
                residual,
                iterations,
                ..
            } => write!(
                f,
                "Newton stopped after {iterations} iterations without converging \
                 (residual max norm {residual:e})"
            ),
            NumericsError::SingularJacobian { iteration } => {
                write!(f, "Jacobian singular at iteration {iteration} even after regularization")
            }
        }
    }
}

impl Error for NumericsError {}

// Lanczos approximation with shift 7 and nine coefficients, the classic
// double-precision set. Relative error stays below 1e-14 across (0, 2].
const LANCZOS_G: f64 = 7.0;
const LANCZOS_C: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments.
///
/// Orders alpha in (0, 1) only ever require arguments 1 - alpha and
/// 2 - alpha, both inside (0, 2]; the approximation covers all positive
/// arguments anyway.
pub fn gamma(x: f64) -> Result<f64, NumericsError> {
    if !x.is_finite() {
        return Err(NumericsError::Domain(format!(
            "gamma argument must be finite, got {x}"
        )));
    }
    if x <= 0.0 {
        return Err(NumericsError::Domain(format!(
            "gamma argument must be positive, got {x}"
        )));
    }
    Ok(gamma_positive(x))
}

// Valid for x > 0. Below 0.5 the reflection formula keeps the series
// argument away from small values where cancellation would hurt.
pub(crate) fn gamma_positive(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        PI / ((PI * x).sin() * lanczos_half_up(1.0 - x))
    } else {
        lanczos_half_up(x)
    }
}

// Core series, valid for x >= 0.5.
fn lanczos_half_up(x: f64) -> f64 {
    let mut s = LANCZOS_C[0];
    for (i, c) in LANCZOS_C.iter().enumerate().skip(1) {
        s += c / (x - 1.0 + i as f64);
    }
    let t = x + LANCZOS_G - 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x - 0.5) * (-t).exp() * s
}

/// Tolerances and budget shared by the root-finding routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Residual tolerance: accept once |g(x)| (max norm for systems) drops below this.
    pub abs_tol: f64,
    /// Step tolerance: stop once the iterate moves less than this.
    pub step_tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
}

impl RootConfig {
    /// Tight configuration for per-step scalar solves.
    pub fn for_scalar() -> Self {
        Self {
            abs_tol: 1e-12,
            step_tol: 1e-14,
            max_iter: 80,
        }
    }

    /// Configuration for small dense Newton systems.
    pub fn for_system() -> Self {
        Self {
            abs_tol: 1e-10,
            step_tol: 1e-13,
            max_iter: 60,
        }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) {
            return Err(NumericsError::Config(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.step_tol > 0.0) {
            return Err(NumericsError::Config(format!(
                "step_tol must be positive, got {}",
                self.step_tol
            )));
        }
        if self.max_iter < 1 {
            return Err(NumericsError::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a Newton system solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_residual_norm: f64,
    /// True exactly when the final residual meets `abs_tol`. A step-size
    /// exit below `step_tol` can end the iteration with this still false.
    pub converged: bool,
}

/// Finds x with |g(x)| <= `cfg.abs_tol`, starting from `x0`.
///
/// Newton iterations with a central-difference slope; when the slope
/// degenerates or the iteration stalls, falls back to outward bracket
/// expansion followed by bisection.
pub fn solve_scalar(
    g: impl FnMut(f64) -> f64,
    x0: f64,
    cfg: &RootConfig,
) -> Result<f64, NumericsError> {
    solve_scalar_with_stats(g, x0, cfg).map(|(x, _)| x)
}

pub(crate) fn solve_scalar_with_stats(
    mut g: impl FnMut(f64) -> f64,
    x0: f64,
    cfg: &RootConfig,
) -> Result<(f64, usize), NumericsError> {
    cfg.validate()?;
    if !x0.is_finite() {
        return Err(NumericsError::Domain(format!(
            "initial guess must be finite, got {x0}"
        )));
    }
    let mut x = x0;
    let mut fx = g(x);
    if !fx.is_finite() {
        return Err(NumericsError::Domain(format!(
            "g must be finite at the initial guess, got g({x0}) = {fx}"
        )));
    }
    let mut best = (x, fx.abs());
    let mut iterations = 0usize;
    let fd_scale = f64::EPSILON.cbrt();

    for _ in 0..cfg.max_iter {
        if fx.abs() <= cfg.abs_tol {
            return Ok((x, iterations));
        }
        let h = fd_scale * x.abs().max(1.0);
        let slope = (g(x + h) - g(x - h)) / (2.0 * h);
        if !slope.is_finite() || slope.abs() < 1e-300 {
            break;
        }
        let step = fx / slope;
        if !step.is_finite() {
            break;
        }
        let xn = x - step;
        let fxn = g(xn);
        iterations += 1;
        if !fxn.is_finite() {
            break;
        }
        if fxn.abs() < best.1 {
            best = (xn, fxn.abs());
        }
        // No residual decrease means Newton is cycling or climbing.
        if fxn.abs() >= fx.abs() && fxn.abs() > cfg.abs_tol {
            break;
        }
        let moved = (xn - x).abs();
        x = xn;
        fx = fxn;
        if moved <= cfg.step_tol * x.abs().max(1.0) {
            break;
        }
    }
    if fx.abs() <= cfg.abs_tol {
        return Ok((x, iterations));
    }

    // Fallback: expand outward from the best iterate until the sign changes.
    let center = best.0;
    let f_center = g(center);
    if f_center.is_finite() && f_center.abs() <= cfg.abs_tol {
        return Ok((center, iterations));
    }
    let mut d = 0.25 * center.abs().max(1.0);
    let mut bracket = None;
    for _ in 0..48 {
        let lo = center - d;
        let hi = center + d;
        let flo = g(lo);
        let fhi = g(hi);
        if flo.is_finite() && f_center.is_finite() && flo * f_center < 0.0 {
            bracket = Some((lo, center, flo, f_center));
            break;
        }
        if fhi.is_finite() && f_center.is_finite() && f_center * fhi < 0.0 {
            bracket = Some((center, hi, f_center, fhi));
            break;
        }
        if flo.is_finite() && fhi.is_finite() && flo * fhi < 0.0 {
            bracket = Some((lo, hi, flo, fhi));
            break;
        }
        d *= 2.0;
        if !d.is_finite() {
            break;
        }
    }

    let Some((mut lo, mut hi, mut flo, _fhi)) = bracket else {
        return Err(NumericsError::ScalarNoConvergence {
            best: best.0,
            residual: best.1,
            iterations,
        });
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = g(mid);
        iterations += 1;
        if fm.is_finite() && fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm.is_finite() && fm.abs() <= cfg.abs_tol {
            return Ok((mid, iterations));
        }
        if !fm.is_finite() || flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if (hi - lo).abs() <= cfg.step_tol * mid.abs().max(1.0) {
            break;
        }
    }
    if best.1 <= cfg.abs_tol {
        return Ok((best.0, iterations));
    }
    Err(NumericsError::ScalarNoConvergence {
        best: best.0,
        residual: best.1,
        iterations,
    })
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if m.is_finite() && !v.iter().any(|x| x.is_nan()) {
        m
    } else {
        f64::INFINITY
    }
}

/// Damped Newton with a forward-difference Jacobian for small dense systems.
///
/// Converged means the residual max norm dropped below `abs_tol`; a step
/// shorter than `step_tol` also ends the iteration, with the report's
/// `converged` flag recording whether the residual target was met.
pub fn solve_system(
    mut g: impl FnMut(&[f64]) -> Vec<f64>,
    x0: &[f64],
    cfg: &RootConfig,
) -> Result<NewtonReport, NumericsError> {
    cfg.validate()?;
    let m = x0.len();
    if m == 0 {
        return Err(NumericsError::Config("initial guess must be non-empty".into()));
    }
    let mut eval = |v: &DVector<f64>| -> Result<DVector<f64>, NumericsError> {
        let out = g(v.as_slice());
        if out.len() != m {
            return Err(NumericsError::Config(format!(
                "G returned length {} for input length {m}",
                out.len()
            )));
        }
        Ok(DVector::from_vec(out))
    };

    let mut x = DVector::from_column_slice(x0);
    let mut gx = eval(&x)?;
    let mut res = norm_inf(&gx);
    let fd_h = f64::EPSILON.sqrt();

    for iteration in 1..=cfg.max_iter {
        if res <= cfg.abs_tol {
            return Ok(NewtonReport {
                solution: x.as_slice().to_vec(),
                iterations: iteration - 1,
                final_residual_norm: res,
                converged: true,
            });
        }
        if !res.is_finite() {
            return Err(NumericsError::SystemNoConvergence {
                best: x.as_slice().to_vec(),
                residual: res,
                iterations: iteration - 1,
            });
        }

        let mut jac = DMatrix::zeros(m, m);
        for i in 0..m {
            let h = fd_h * x[i].abs().max(1.0);
            let mut xp = x.clone();
            xp[i] += h;
            let gp = eval(&xp)?;
            for r in 0..m {
                jac[(r, i)] = (gp[r] - gx[r]) / h;
            }
        }

        let step = match jac.clone().lu().solve(&(-&gx)) {
            Some(p) if p.iter().all(|v| v.is_finite()) => p,
            _ => {
                // Tikhonov nudge on the diagonal, sized to the matrix scale.
                let scale = jac.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
                let mut reg = jac;
                for i in 0..m {
                    reg[(i, i)] += 1e-10 * scale;
                }
                match reg.lu().solve(&(-&gx)) {
                    Some(p) if p.iter().all(|v| v.is_finite()) => p,
                    _ => return Err(NumericsError::SingularJacobian { iteration }),
                }
            }
        };

        let mut lambda = 1.0f64;
        let mut accepted = None;
        for _ in 0..40 {
            let xt = &x + &step * lambda;
            let gt = eval(&xt)?;
            let rt = norm_inf(&gt);
            if rt < res || rt <= cfg.abs_tol {
                accepted = Some((xt, gt, rt, lambda));
                break;
            }
            lambda *= 0.5;
        }
        let Some((xt, gt, rt, lam)) = accepted else {
            return Err(NumericsError::SystemNoConvergence {
                best: x.as_slice().to_vec(),
                residual: res,
                iterations: iteration,
            });
        };
        let step_norm = norm_inf(&(&step * lam));
        x = xt;
        gx = gt;
        res = rt;
        if step_norm <= cfg.step_tol {
            return Ok(NewtonReport {
                solution: x.as_slice().to_vec(),
                iterations: iteration,
                final_residual_norm: res,
                converged: res <= cfg.abs_tol,
            });
        }
    }
    if res <= cfg.abs_tol {
        return Ok(NewtonReport {
            solution: x.as_slice().to_vec(),
            iterations: cfg.max_iter,
            final_residual_norm: res,
            converged: true,
        });
    }
    Err(NumericsError::SystemNoConvergence {
        best: x.as_slice().to_vec(),
        residual: res,
        iterations: cfg.max_iter,
    })
}
