//! A small expression language over the variables `t`, `x`, `v` with exact
//! parsing, evaluation, symbolic differentiation, and a precedence-aware
//! printer whose output parses back to the same tree.
//!
//! The parser builds the tree verbatim; no simplification happens at parse
//! time, so every domain violation in the source surfaces at evaluation.
//! Differentiation goes through folding constructors instead, which keeps
//! derivative trees from drowning in `* 1.0` and `+ 0.0` noise.

mod parse;

pub use parse::parse;

use std::error::Error;
use std::fmt;

use crate::numerics::gamma_positive;

/// The three variables an expression may reference: time, state, and the
/// fractional derivative of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    V,
}

impl Var {
    pub fn name(&self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::V => "v",
        }
    }
}

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Sqrt,
    Sin,
    Cos,
    Abs,
    Gamma,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Gamma => "gamma",
        }
    }
}

/// Expression tree. `Pow` is right-associative and binds tightest, unary
/// minus sits between `*` and `^`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Errors from parsing, evaluation, and differentiation.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprError {
    /// Syntax error; `offset` is the byte position in the source.
    Parse { offset: usize, message: String },
    /// A function or operator was applied outside its domain.
    Domain(String),
    /// A subexpression evaluated to an infinity or NaN.
    NonFinite { expr: String },
    /// Differentiation with respect to `t` is not defined here.
    DiffTime,
    /// `abs` has no derivative in the requested variable.
    DiffAbs { expr: String },
    /// `gamma` of a variable argument has no derivative in this language.
    DiffGamma { expr: String },
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::Parse { offset, message } => {
                write!(f, "parse error at byte {offset}: {message}")
            }
            ExprError::Domain(msg) => write!(f, "domain error: {msg}"),
            ExprError::NonFinite { expr } => {
                write!(f, "evaluation of '{expr}' is not finite")
            }
            ExprError::DiffTime => {
                write!(f, "differentiation with respect to t is not supported")
            }
            ExprError::DiffAbs { expr } => {
                write!(f, "cannot differentiate '{expr}': abs is not smooth in that variable")
            }
            ExprError::DiffGamma { expr } => {
                write!(f, "cannot differentiate '{expr}': gamma of a variable argument")
            }
        }
    }
}

impl Error for ExprError {}

/// Values bound to the variables during evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl EvalPoint {
    pub fn new(t: f64, x: f64, v: f64) -> Self {
        Self { t, x, v }
    }

    fn get(&self, var: Var) -> f64 {
        match var {
            Var::T => self.t,
            Var::X => self.x,
            Var::V => self.v,
        }
    }
}

impl Expr {
    /// Evaluates the tree at `p`. Every node is checked: domain violations
    /// (logarithm of a nonpositive value, division by zero, fractional power
    /// of a negative base, ...) and non-finite intermediate results are
    /// reported with the offending subexpression, rather than letting NaN
    /// propagate to the caller.
    pub fn eval(&self, p: &EvalPoint) -> Result<f64, ExprError> {
        let value = match self {
            Expr::Literal(v) => *v,
            Expr::Var(var) => p.get(*var),
            Expr::Neg(e) => -e.eval(p)?,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let num = a.eval(p)?;
                let den = b.eval(p)?;
                if den == 0.0 {
                    return Err(Self::domain(self, "division by zero"));
                }
                num / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval(p)?;
                let exponent = b.eval(p)?;
                if base == 0.0 && exponent < 0.0 {
                    return Err(Self::domain(self, "zero base with a negative exponent"));
                }
                if base < 0.0 && exponent.fract() != 0.0 {
                    return Err(Self::domain(
                        self,
                        "negative base with a non-integer exponent",
                    ));
                }
                base.powf(exponent)
            }
            Expr::Call(func, arg) => {
                let u = arg.eval(p)?;
                match func {
                    Func::Ln => {
                        if u <= 0.0 {
                            return Err(Self::domain(self, "ln of a nonpositive value"));
                        }
                        u.ln()
                    }
                    Func::Exp => u.exp(),
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(Self::domain(self, "sqrt of a negative value"));
                        }
                        u.sqrt()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Abs => u.abs(),
                    Func::Gamma => {
                        if u <= 0.0 {
                            return Err(Self::domain(self, "gamma of a nonpositive value"));
                        }
                        gamma_positive(u)
                    }
                }
            }
        };
        if !value.is_finite() {
            return Err(ExprError::NonFinite {
                expr: self.to_string(),
            });
        }
        Ok(value)
    }

    fn domain(node: &Expr, what: &str) -> ExprError {
        ExprError::Domain(format!("{what} in '{node}'"))
    }

    /// True when the tree references `var` anywhere.
    pub fn contains_var(&self, var: Var) -> bool {
        match self {
            Expr::Literal(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.contains_var(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.contains_var(var) || b.contains_var(var),
        }
    }

    /// Symbolic derivative with respect to `x` or `v`.
    ///
    /// `t` is the integration variable of every use site, so
    /// differentiating by it is rejected. `abs` and `gamma` are only
    /// differentiable when their argument does not involve `wrt`; in that
    /// case the derivative is zero, otherwise the error names the node.
    /// Powers whose exponent is free of `wrt` use the plain power rule, so
    /// an exponent may still depend on `t`; a fully general `a^b` expands
    /// to `a^b * (b' ln a + b a' / a)`.
    pub fn diff(&self, wrt: Var) -> Result<Expr, ExprError> {
        if wrt == Var::T {
            return Err(ExprError::DiffTime);
        }
        self.diff_inner(wrt)
    }

    fn diff_inner(&self, wrt: Var) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Literal(_) => Expr::Literal(0.0),
            Expr::Var(v) => Expr::Literal(if *v == wrt { 1.0 } else { 0.0 }),
            Expr::Neg(e) => Expr::neg(e.diff_inner(wrt)?),
            Expr::Add(a, b) => Expr::add(a.diff_inner(wrt)?, b.diff_inner(wrt)?),
            Expr::Sub(a, b) => Expr::sub(a.diff_inner(wrt)?, b.diff_inner(wrt)?),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff_inner(wrt)?, (**b).clone()),
                Expr::mul((**a).clone(), b.diff_inner(wrt)?),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.diff_inner(wrt)?, (**b).clone()),
                    Expr::mul((**a).clone(), b.diff_inner(wrt)?),
                ),
                Expr::pow((**b).clone(), Expr::Literal(2.0)),
            ),
            Expr::Pow(a, b) => {
                let da = a.diff_inner(wrt)?;
                if !b.contains_var(wrt) {
                    // d(a^b) = b * a^(b-1) * a' when b is constant in wrt.
                    Expr::mul(
                        Expr::mul(
                            (**b).clone(),
                            Expr::pow(
                                (**a).clone(),
                                Expr::sub((**b).clone(), Expr::Literal(1.0)),
                            ),
                        ),
                        da,
                    )
                } else {
                    let db = b.diff_inner(wrt)?;
                    Expr::mul(
                        self.clone(),
                        Expr::add(
                            Expr::mul(db, Expr::Call(Func::Ln, a.clone())),
                            Expr::div(Expr::mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(func, arg) => {
                // gamma is only allowed over constants: there is no digamma
                // in the language, and a gamma of any variable would leave a
                // dead end even when that variable is not wrt.
                if *func == Func::Gamma
                    && (arg.contains_var(Var::T)
                        || arg.contains_var(Var::X)
                        || arg.contains_var(Var::V))
                {
                    return Err(ExprError::DiffGamma {
                        expr: self.to_string(),
                    });
                }
                if !arg.contains_var(wrt) {
                    return Ok(Expr::Literal(0.0));
                }
                let du = arg.diff_inner(wrt)?;
                match func {
                    Func::Ln => Expr::div(du, (**arg).clone()),
                    Func::Exp => Expr::mul(self.clone(), du),
                    Func::Sqrt => Expr::div(
                        du,
                        Expr::mul(Expr::Literal(2.0), self.clone()),
                    ),
                    Func::Sin => Expr::mul(Expr::Call(Func::Cos, arg.clone()), du),
                    Func::Cos => Expr::neg(Expr::mul(Expr::Call(Func::Sin, arg.clone()), du)),
                    Func::Abs => {
                        return Err(ExprError::DiffAbs {
                            expr: self.to_string(),
                        })
                    }
                    Func::Gamma => {
                        return Err(ExprError::DiffGamma {
                            expr: self.to_string(),
                        })
                    }
                }
            }
        })
    }

    // Folding constructors used by differentiation. Literal arithmetic is
    // collapsed only when the result is finite, so no tree ever holds a
    // non-finite literal.

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Literal(v) => Expr::Literal(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Literal(p), Expr::Literal(q)) if (p + q).is_finite() => Expr::Literal(p + q),
            (Expr::Literal(z), b) if z == 0.0 => b,
            (a, Expr::Literal(z)) if z == 0.0 => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Literal(p), Expr::Literal(q)) if (p - q).is_finite() => Expr::Literal(p - q),
            (a, Expr::Literal(z)) if z == 0.0 => a,
            (Expr::Literal(z), b) if z == 0.0 => Expr::neg(b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Literal(p), Expr::Literal(q)) if (p * q).is_finite() => Expr::Literal(p * q),
            (Expr::Literal(z), _) | (_, Expr::Literal(z)) if z == 0.0 => Expr::Literal(0.0),
            (Expr::Literal(one), b) if one == 1.0 => b,
            (a, Expr::Literal(one)) if one == 1.0 => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Literal(p), Expr::Literal(q)) if q != 0.0 && (p / q).is_finite() => {
                Expr::Literal(p / q)
            }
            (Expr::Literal(z), _) if z == 0.0 => Expr::Literal(0.0),
            (a, Expr::Literal(one)) if one == 1.0 => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (a, Expr::Literal(one)) if one == 1.0 => a,
            (_, Expr::Literal(z)) if z == 0.0 => Expr::Literal(1.0),
            (Expr::Literal(p), Expr::Literal(q)) if p.powf(q).is_finite() => {
                Expr::Literal(p.powf(q))
            }
            (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
        }
    }

    // Precedence levels for printing: Add/Sub 1, Mul/Div 2, unary minus 3,
    // Pow 4, atoms 5. Negative literals print with a leading minus, so they
    // rank like unary minus.
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Literal(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    /// Prints with the fewest parentheses that still parse back to the same
    /// tree: left-associative chains stay flat, anything that would
    /// re-associate is wrapped.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_child(f, 3)
            }
            Expr::Add(a, b) => {
                a.write_child(f, 1)?;
                write!(f, " + ")?;
                b.write_child(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_child(f, 1)?;
                write!(f, " - ")?;
                b.write_child(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_child(f, 2)?;
                write!(f, " * ")?;
                b.write_child(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_child(f, 2)?;
                write!(f, " / ")?;
                b.write_child(f, 3)
            }
            Expr::Pow(a, b) => {
                a.write_child(f, 5)?;
                write!(f, "^")?;
                b.write_child(f, 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(src: &str) -> Expr {
        parse(src).unwrap()
    }

    fn ev(src: &str, t: f64, x: f64, v: f64) -> f64 {
        p(src).eval(&EvalPoint::new(t, x, v)).unwrap()
    }

    #[test]
    fn literals_variables_constants() {
        assert_eq!(ev("2.5", 0.0, 0.0, 0.0), 2.5);
        assert_eq!(ev("t", 3.0, 0.0, 0.0), 3.0);
        assert_eq!(ev("x", 0.0, 4.0, 0.0), 4.0);
        assert_eq!(ev("v", 0.0, 0.0, 5.0), 5.0);
        assert_eq!(ev("pi", 0.0, 0.0, 0.0), std::f64::consts::PI);
        assert_eq!(ev("e", 0.0, 0.0, 0.0), std::f64::consts::E);
        assert_eq!(ev("1e2", 0.0, 0.0, 0.0), 100.0);
        assert_eq!(ev("2.5e-1", 0.0, 0.0, 0.0), 0.25);
        assert_eq!(ev(".5", 0.0, 0.0, 0.0), 0.5);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2 + 3 * 4", 0.0, 0.0, 0.0), 14.0);
        assert_eq!(ev("2 * 3 + 4", 0.0, 0.0, 0.0), 10.0);
        assert_eq!(ev("2 - 3 - 4", 0.0, 0.0, 0.0), -5.0);
        assert_eq!(ev("24 / 4 / 2", 0.0, 0.0, 0.0), 3.0);
        assert_eq!(ev("(2 + 3) * 4", 0.0, 0.0, 0.0), 20.0);
        // '^' is right-associative and binds above unary minus.
        assert_eq!(ev("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0, 0.0, 0.0), 0.5);
        assert_eq!(ev("2 * 3^2", 0.0, 0.0, 0.0), 18.0);
    }

    #[test]
    fn function_calls() {
        assert_relative_eq!(ev("ln(e)", 0.0, 0.0, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(ev("exp(1)", 0.0, 0.0, 0.0), std::f64::consts::E);
        assert_eq!(ev("sqrt(9)", 0.0, 0.0, 0.0), 3.0);
        assert_relative_eq!(ev("sin(pi / 2)", 0.0, 0.0, 0.0), 1.0);
        assert_relative_eq!(ev("cos(0)", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(ev("abs(-3)", 0.0, 0.0, 0.0), 3.0);
        assert_relative_eq!(ev("gamma(5)", 0.0, 0.0, 0.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(
            ev("gamma(1.5)", 0.0, 0.0, 0.0),
            0.8862269254527580,
            max_relative = 1e-13
        );
    }

    #[test]
    fn parse_errors_carry_byte_offsets() {
        match parse("2 + foo(3)") {
            Err(ExprError::Parse { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("foo"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("2 +") {
            Err(ExprError::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("(1 + 2") {
            Err(ExprError::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("1 2") {
            Err(ExprError::Parse { offset, message }) => {
                assert_eq!(offset, 2);
                assert!(message.contains("trailing"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("") {
            Err(ExprError::Parse { message, .. }) => assert!(message.contains("empty")),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("sin 3") {
            Err(ExprError::Parse { message, .. }) => assert!(message.contains("'('")),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("2 @ 3").is_err());
    }

    #[test]
    fn eval_domain_errors() {
        let pt = EvalPoint::new(1.0, 0.0, 0.0);
        let domain = |src: &str| match p(src).eval(&pt) {
            Err(ExprError::Domain(msg)) => msg,
            other => panic!("expected domain error for {src}, got {other:?}"),
        };
        assert!(domain("ln(0)").contains("ln"));
        assert!(domain("ln(-1)").contains("'ln(-1.0)'"));
        assert!(domain("sqrt(-4)").contains("sqrt"));
        assert!(domain("1 / (t - 1)").contains("division by zero"));
        assert!(domain("0^-1").contains("negative exponent"));
        assert!(domain("(-2)^0.5").contains("non-integer"));
        assert!(domain("gamma(0)").contains("gamma"));
        // Negative base with an integer exponent is fine.
        assert_eq!(ev("(-2)^3", 0.0, 0.0, 0.0), -8.0);
        assert_eq!(ev("0^0", 0.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn eval_reports_the_non_finite_node() {
        let pt = EvalPoint::new(0.0, 0.0, 0.0);
        match p("exp(1000) - exp(1000)").eval(&pt) {
            Err(ExprError::NonFinite { expr }) => assert_eq!(expr, "exp(1000.0)"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        match p("exp(exp(exp(7)))").eval(&pt) {
            Err(ExprError::NonFinite { .. }) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn derivative_examples() {
        let d = |src: &str, wrt: Var| p(src).diff(wrt).unwrap();
        let at = |e: &Expr, t: f64, x: f64, v: f64| e.eval(&EvalPoint::new(t, x, v)).unwrap();

        assert_eq!(d("x^2", Var::X), p("2 * x"));
        assert_eq!(d("x", Var::X), Expr::Literal(1.0));
        assert_eq!(d("x", Var::V), Expr::Literal(0.0));
        assert_eq!(d("t", Var::X), Expr::Literal(0.0));
        assert_eq!(d("sin(v)", Var::V), p("cos(v)"));
        assert_eq!(d("exp(2 * x)", Var::X), p("exp(2 * x) * 2"));
        assert_eq!(d("ln(x)", Var::X), p("1 / x"));

        // Exponent depending on t still takes the power rule in x.
        let dxt = d("x^t", Var::X);
        assert_relative_eq!(
            at(&dxt, 3.0, 2.0, 0.0),
            3.0 * 2.0f64.powf(2.0),
            max_relative = 1e-14
        );

        // Fully variable power falls back to the exponential form.
        let dxx = d("x^x", Var::X);
        let xv = 1.7;
        assert_relative_eq!(
            at(&dxx, 0.0, xv, 0.0),
            xv.powf(xv) * (xv.ln() + 1.0),
            max_relative = 1e-14
        );

        // Quotient rule.
        let q = d("x / (1 + x)", Var::X);
        assert_relative_eq!(at(&q, 0.0, 2.0, 0.0), 1.0 / 9.0, max_relative = 1e-14);

        // Mixed variables: v is constant when differentiating in x.
        let m = d("x * v + v^2", Var::X);
        assert_eq!(m, p("v"));
    }

    #[test]
    fn derivative_restrictions() {
        assert_eq!(p("x").diff(Var::T), Err(ExprError::DiffTime));
        assert!(matches!(
            p("abs(x)").diff(Var::X),
            Err(ExprError::DiffAbs { .. })
        ));
        assert!(matches!(
            p("gamma(x + 1)").diff(Var::X),
            Err(ExprError::DiffGamma { .. })
        ));
        // Constant in the requested variable: abs differentiates to zero,
        // but gamma over any variable is rejected outright.
        assert_eq!(p("abs(t)").diff(Var::X).unwrap(), Expr::Literal(0.0));
        assert_eq!(p("abs(x)").diff(Var::V).unwrap(), Expr::Literal(0.0));
        assert!(matches!(
            p("gamma(t)").diff(Var::X),
            Err(ExprError::DiffGamma { .. })
        ));
        assert_eq!(
            p("gamma(1.5) * x").diff(Var::X).unwrap(),
            p("gamma(1.5)")
        );
    }

    #[test]
    fn printer_round_trips_examples() {
        for src in [
            "x + 2.0 * t",
            "x - (t - v)",
            "x * (t + 2.0)",
            "(x + 1.0) / (t + 2.0)",
            "-(x + t)",
            "-x^2.0",
            "(x^2.0)^t",
            "x^t^2.0",
            "x^-2.0",
            "sin(cos(x))",
            "gamma(t + 1.0) * exp(-x)",
            "2.0 / (3.0 * x)",
            "1.0 - -x",
        ] {
            let tree = p(src);
            let printed = tree.to_string();
            assert_eq!(p(&printed), tree, "printing '{src}' gave '{printed}'");
            assert_eq!(printed, src);
        }
    }

    #[test]
    fn folding_keeps_derivatives_small() {
        assert_eq!(p("2 * x + 7").diff(Var::X).unwrap(), Expr::Literal(2.0));
        assert_eq!(p("x * x").diff(Var::X).unwrap(), p("x + x"));
        assert_eq!(
            p("t^2 * v").diff(Var::V).unwrap(),
            p("t^2.0"),
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_tree() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0.25f64..4.0).prop_map(Expr::Literal),
                Just(Expr::Var(Var::T)),
                Just(Expr::Var(Var::X)),
                Just(Expr::Var(Var::V)),
            ];
            leaf.prop_recursive(3, 24, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                    inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                    (inner.clone(), 2u8..4u8).prop_map(|(a, k)| {
                        Expr::Pow(Box::new(a), Box::new(Expr::Literal(k as f64)))
                    }),
                    (
                        proptest::sample::select(vec![
                            Func::Ln,
                            Func::Exp,
                            Func::Sqrt,
                            Func::Sin,
                            Func::Cos,
                            Func::Abs,
                            Func::Gamma,
                        ]),
                        inner,
                    )
                        .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                ]
            })
        }

        // Smooth, everywhere-defined trees for derivative checks.
        fn smooth_tree() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0.25f64..2.0).prop_map(Expr::Literal),
                Just(Expr::Var(Var::X)),
                Just(Expr::Var(Var::V)),
            ];
            leaf.prop_recursive(3, 16, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                    (
                        proptest::sample::select(vec![Func::Sin, Func::Cos]),
                        inner,
                    )
                        .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                ]
            })
        }

        proptest! {
            #[test]
            fn printed_form_parses_back_to_the_same_tree(tree in arb_tree()) {
                let printed = tree.to_string();
                let reparsed = parse(&printed).unwrap();
                prop_assert_eq!(&reparsed, &tree, "printed as '{}'", printed);
            }

            #[test]
            fn derivative_matches_finite_differences(
                tree in smooth_tree(),
                x in 0.5f64..1.5,
                v in 0.5f64..1.5,
            ) {
                let d = tree.diff(Var::X).unwrap();
                let h = 1e-5;
                let at = |xx: f64| tree.eval(&EvalPoint::new(1.0, xx, v)).unwrap();
                let fd = (at(x + h) - at(x - h)) / (2.0 * h);
                let sym = d.eval(&EvalPoint::new(1.0, x, v)).unwrap();
                let tol = 1e-6 * sym.abs().max(1.0);
                prop_assert!(
                    (sym - fd).abs() <= tol,
                    "symbolic {} vs finite difference {}", sym, fd
                );
            }
        }
    }
}
