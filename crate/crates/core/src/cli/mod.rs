//! Command line front end: tabulate the discrete operators, solve both
//! problem classes, and run convergence studies over a grid of orders and
//! mesh sizes.
//!
//! Output is CSV with a fixed header and 17-significant-digit floats, so
//! two runs with the same flags are byte-identical and diffs are exact.
//! Exit codes: 0 on success, 1 when a solve or write fails, 2 for usage
//! errors.

mod plot;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::expr::{parse, EvalPoint, Expr, Var};
use crate::grid::{make_grid, node_mean_abs_error, GridSamples, LogGrid};
use crate::hadamard::{
    error_bound, left_deriv, make_weights, right_deriv, ErrorBoundInputs, FracOrder,
};
use crate::numerics::RootConfig;
use crate::solvers::{solve_fde, solve_variational, FdeProblem, VariationalProblem};

const EXPR_NOTE: &str = "Expressions use the variables t (time), x (state), and v (the operator \
value at the same node), the functions ln, exp, sqrt, sin, cos, abs, and gamma, the constants pi \
and e, and the operators + - * / ^ with usual precedence. The standalone placeholder `A` is \
replaced textually by the numeric order in use (--alpha, or each entry of --alphas) before \
parsing, so one expression string can serve a whole study.";

#[derive(Parser)]
#[command(
    name = "hadfrac",
    version,
    about = "Fractional derivatives on log-uniform grids: operators, solvers, convergence studies",
    after_help = EXPR_NOTE
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the discrete fractional derivative of a function of t
    Deriv(DerivArgs),
    /// Solve an initial-value problem f(t, x, v) = 0 with v the operator value
    Fde(FdeArgs),
    /// Minimize the discrete action of a Lagrangian in t, x, v
    Varmin(VarminArgs),
    /// Run a study over orders and mesh sizes, reporting error and bound per cell
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct Interval {
    /// Left endpoint of the interval, must be positive
    #[arg(long)]
    a: f64,
    /// Right endpoint of the interval
    #[arg(long)]
    b: f64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Side {
    /// Integrate history from a up to t
    Left,
    /// Integrate the future from t up to b
    Right,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Case {
    Deriv,
    Fde,
    Varmin,
}

impl Case {
    fn name(self) -> &'static str {
        match self {
            Case::Deriv => "deriv",
            Case::Fde => "fde",
            Case::Varmin => "varmin",
        }
    }
}

#[derive(Args)]
struct DerivArgs {
    #[command(flatten)]
    interval: Interval,
    /// Number of mesh cells
    #[arg(long)]
    n: usize,
    /// Order of the derivative, strictly between 0 and 1
    #[arg(long)]
    alpha: f64,
    /// Function of t to differentiate
    #[arg(long)]
    func: String,
    /// Analytic derivative as a function of t; adds exact and abs_err columns
    #[arg(long)]
    exact: Option<String>,
    /// Which operator to apply
    #[arg(long, value_enum, default_value_t = Side::Left)]
    side: Side,
    /// Output file, standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FdeArgs {
    #[command(flatten)]
    interval: Interval,
    /// Number of mesh cells
    #[arg(long)]
    n: usize,
    /// Order of the derivative, strictly between 0 and 1
    #[arg(long)]
    alpha: f64,
    /// Residual expression in t, x, v; the solver drives it to zero per node
    #[arg(long)]
    residual: String,
    /// Initial value at t = a
    #[arg(long)]
    x0: f64,
    /// Output file, standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VarminArgs {
    #[command(flatten)]
    interval: Interval,
    /// Number of mesh cells
    #[arg(long)]
    n: usize,
    /// Order of the derivative, strictly between 0 and 1
    #[arg(long)]
    alpha: f64,
    /// Lagrangian expression in t, x, v
    #[arg(long)]
    lagrangian: String,
    /// Boundary value at t = a
    #[arg(long)]
    xa: f64,
    /// Boundary value at t = b
    #[arg(long)]
    xb: f64,
    /// Output file, standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    interval: Interval,
    /// Which pipeline to study
    #[arg(long, value_enum)]
    case: Case,
    /// Comma-separated list of orders
    #[arg(long)]
    alphas: String,
    /// Comma-separated list of mesh sizes
    #[arg(long)]
    ns: String,
    /// Function of t to differentiate (case deriv)
    #[arg(long, required_if_eq("case", "deriv"))]
    func: Option<String>,
    /// Residual expression in t, x, v (case fde)
    #[arg(long, required_if_eq("case", "fde"))]
    residual: Option<String>,
    /// Initial value at t = a (case fde)
    #[arg(long, required_if_eq("case", "fde"))]
    x0: Option<f64>,
    /// Lagrangian expression in t, x, v (case varmin)
    #[arg(long, required_if_eq("case", "varmin"))]
    lagrangian: Option<String>,
    /// Boundary value at t = a (case varmin)
    #[arg(long, required_if_eq("case", "varmin"))]
    xa: Option<f64>,
    /// Boundary value at t = b (case varmin)
    #[arg(long, required_if_eq("case", "varmin"))]
    xb: Option<f64>,
    /// Reference function of t the errors are measured against
    #[arg(long)]
    exact: String,
    /// Bound input: maximum of |x'| on the interval
    #[arg(long)]
    m1: f64,
    /// Bound input: maximum of |x''| on the interval
    #[arg(long)]
    m2: f64,
    /// Write a log-log SVG plot of error against n, one polyline per order
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Output file, standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
    Cells(usize),
}

type CliResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the selected
/// subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Deriv(a) => cmd_deriv(a),
        Command::Fde(a) => cmd_fde(a),
        Command::Varmin(a) => cmd_varmin(a),
        Command::Converge(a) => cmd_converge(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Cells(count)) => {
            eprintln!("error: {count} cell(s) failed; their rows read FAIL");
            1
        }
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

// Replaces every standalone identifier `A` with the parenthesized numeric
// value, leaving longer identifiers alone.
fn substitute_alpha(src: &str, alpha: f64) -> String {
    let mut out = String::with_capacity(src.len() + 8);
    let mut it = src.char_indices().peekable();
    while let Some(&(start, c)) = it.peek() {
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while let Some(&(j, d)) = it.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    it.next();
                    end = j + d.len_utf8();
                } else {
                    break;
                }
            }
            let word = &src[start..end];
            if word == "A" {
                let _ = write!(out, "({alpha:?})");
            } else {
                out.push_str(word);
            }
        } else {
            out.push(c);
            it.next();
        }
    }
    out
}

fn build_grid(a: f64, b: f64, n: usize) -> Result<LogGrid, Failure> {
    make_grid(a, b, n).map_err(|e| Failure::Usage(e.to_string()))
}

fn build_alpha(alpha: f64) -> Result<FracOrder, Failure> {
    FracOrder::new(alpha).map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_flag_expr(flag: &str, src: &str, alpha: f64) -> Result<Expr, Failure> {
    parse(&substitute_alpha(src, alpha)).map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

fn require_t_only(flag: &str, e: &Expr) -> Result<(), Failure> {
    if e.contains_var(Var::X) || e.contains_var(Var::V) {
        return Err(Failure::Usage(format!(
            "--{flag} must be a function of t alone"
        )));
    }
    Ok(())
}

fn eval_at_t(e: &Expr, t: f64) -> Result<f64, String> {
    e.eval(&EvalPoint::new(t, 0.0, 0.0))
        .map_err(|err| format!("at t = {t}: {err}"))
}

fn sample_expr(e: &Expr, grid: LogGrid) -> Result<GridSamples, String> {
    let mut values = Vec::with_capacity(grid.n() + 1);
    for k in 0..=grid.n() {
        values.push(eval_at_t(e, grid.node(k))?);
    }
    GridSamples::new(grid, values).map_err(|err| format!("sampled values rejected: {err}"))
}

fn write_output(path: &Option<PathBuf>, content: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, content)
            .map_err(|e| Failure::Run(format!("writing {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::Run(format!("writing standard output: {e}"))),
    }
}

fn cmd_deriv(args: &DerivArgs) -> CliResult {
    let grid = build_grid(args.interval.a, args.interval.b, args.n)?;
    let alpha = build_alpha(args.alpha)?;
    let func = parse_flag_expr("func", &args.func, args.alpha)?;
    require_t_only("func", &func)?;
    let exact = match &args.exact {
        Some(src) => {
            let e = parse_flag_expr("exact", src, args.alpha)?;
            require_t_only("exact", &e)?;
            Some(e)
        }
        None => None,
    };

    let w = make_weights(alpha, grid);
    let samples = sample_expr(&func, grid).map_err(Failure::Run)?;
    let mut csv = String::from(if exact.is_some() {
        "N,t,approx,exact,abs_err\n"
    } else {
        "N,t,approx\n"
    });
    let indices: Vec<usize> = match args.side {
        Side::Left => (1..=grid.n()).collect(),
        Side::Right => (0..grid.n()).collect(),
    };
    for k in indices {
        let t = grid.node(k);
        let approx = match args.side {
            Side::Left => left_deriv(&samples, &w, k),
            Side::Right => right_deriv(&samples, &w, k),
        }
        .map_err(|e| Failure::Run(format!("operator failed at node {k}: {e}")))?;
        match &exact {
            Some(e) => {
                let reference = eval_at_t(e, t).map_err(Failure::Run)?;
                let _ = writeln!(
                    csv,
                    "{k},{},{},{},{}",
                    fmt17(t),
                    fmt17(approx),
                    fmt17(reference),
                    fmt17((approx - reference).abs())
                );
            }
            None => {
                let _ = writeln!(csv, "{k},{},{}", fmt17(t), fmt17(approx));
            }
        }
    }
    write_output(&args.output, &csv)
}

fn cmd_fde(args: &FdeArgs) -> CliResult {
    let grid = build_grid(args.interval.a, args.interval.b, args.n)?;
    let alpha = build_alpha(args.alpha)?;
    let residual = parse_flag_expr("residual", &args.residual, args.alpha)?;
    let problem = FdeProblem::new(residual, alpha, grid, args.x0)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let result =
        solve_fde(&problem, &RootConfig::for_scalar()).map_err(|e| Failure::Run(e.to_string()))?;
    write_output(&args.output, &solution_csv(grid, &result.samples))
}

fn cmd_varmin(args: &VarminArgs) -> CliResult {
    let grid = build_grid(args.interval.a, args.interval.b, args.n)?;
    let alpha = build_alpha(args.alpha)?;
    let lagrangian = parse_flag_expr("lagrangian", &args.lagrangian, args.alpha)?;
    let problem = VariationalProblem::new(lagrangian, alpha, grid, args.xa, args.xb)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let result = solve_variational(&problem, &RootConfig::for_system())
        .map_err(|e| Failure::Run(e.to_string()))?;
    write_output(&args.output, &solution_csv(grid, &result.samples))
}

fn solution_csv(grid: LogGrid, samples: &GridSamples) -> String {
    let mut csv = String::from("N,t,x\n");
    for k in 0..=grid.n() {
        let _ = writeln!(csv, "{k},{},{}", fmt17(grid.node(k)), fmt17(samples.value(k)));
    }
    csv
}

fn parse_alpha_list(src: &str) -> Result<Vec<f64>, Failure> {
    let mut out = Vec::new();
    for part in src.split(',') {
        let part = part.trim();
        let value: f64 = part
            .parse()
            .map_err(|_| Failure::Usage(format!("--alphas entry {part:?} is not a number")))?;
        FracOrder::new(value).map_err(|e| Failure::Usage(format!("--alphas entry {part}: {e}")))?;
        out.push(value);
    }
    Ok(out)
}

fn parse_n_list(src: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in src.split(',') {
        let part = part.trim();
        let value: usize = part
            .parse()
            .map_err(|_| Failure::Usage(format!("--ns entry {part:?} is not a mesh size")))?;
        if value == 0 {
            return Err(Failure::Usage("--ns entries must be at least 1".into()));
        }
        out.push(value);
    }
    Ok(out)
}

fn cmd_converge(args: &ConvergeArgs) -> CliResult {
    let alphas = parse_alpha_list(&args.alphas)?;
    let ns = parse_n_list(&args.ns)?;
    build_grid(args.interval.a, args.interval.b, ns[0])?;
    let bound_inputs = ErrorBoundInputs::new(args.m1, args.m2)
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let mut cells: Vec<(f64, usize)> = alphas
        .iter()
        .flat_map(|&alpha| ns.iter().map(move |&n| (alpha, n)))
        .collect();
    cells.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));

    let case = args.case.name();
    let mut csv = String::from("case,alpha,n,error,bound\n");
    let mut series: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut failures = 0usize;
    for &(alpha, n) in &cells {
        let grid = build_grid(args.interval.a, args.interval.b, n)?;
        let w = make_weights(build_alpha(alpha)?, grid);
        let bound = error_bound(&w, &bound_inputs);
        match converge_cell(args, alpha, n, grid) {
            Ok(err) => {
                let _ = writeln!(csv, "{case},{alpha:?},{n},{},{}", fmt17(err), fmt17(bound));
                match series.last_mut() {
                    Some(last) if last.0 == alpha => last.1.push((n, err)),
                    _ => series.push((alpha, vec![(n, err)])),
                }
            }
            Err(msg) => {
                failures += 1;
                eprintln!("cell {case} alpha={alpha:?} n={n}: {msg}");
                let _ = writeln!(csv, "{case},{alpha:?},{n},FAIL,{}", fmt17(bound));
            }
        }
    }

    if let Some(path) = &args.plot {
        let svg = plot::render(case, &series);
        fs::write(path, svg)
            .map_err(|e| Failure::Run(format!("writing {}: {e}", path.display())))?;
    }
    write_output(&args.output, &csv)?;
    if failures > 0 {
        return Err(Failure::Cells(failures));
    }
    Ok(())
}

fn converge_cell(
    args: &ConvergeArgs,
    alpha_value: f64,
    n: usize,
    grid: LogGrid,
) -> Result<f64, String> {
    let alpha = FracOrder::new(alpha_value).map_err(|e| e.to_string())?;
    let exact = parse(&substitute_alpha(&args.exact, alpha_value))
        .map_err(|e| format!("--exact: {e}"))?;
    if exact.contains_var(Var::X) || exact.contains_var(Var::V) {
        return Err("--exact must be a function of t alone".into());
    }
    match args.case {
        Case::Deriv => {
            let func = parse(&substitute_alpha(args.func.as_deref().unwrap(), alpha_value))
                .map_err(|e| format!("--func: {e}"))?;
            if func.contains_var(Var::X) || func.contains_var(Var::V) {
                return Err("--func must be a function of t alone".into());
            }
            let samples = sample_expr(&func, grid)?;
            let w = make_weights(alpha, grid);
            let mut acc = 0.0;
            for k in 1..=n {
                let approx = left_deriv(&samples, &w, k).map_err(|e| e.to_string())?;
                let reference = eval_at_t(&exact, grid.node(k))?;
                acc += (approx - reference).abs();
            }
            Ok(acc / n as f64)
        }
        Case::Fde => {
            let residual = parse(&substitute_alpha(
                args.residual.as_deref().unwrap(),
                alpha_value,
            ))
            .map_err(|e| format!("--residual: {e}"))?;
            let problem = FdeProblem::new(residual, alpha, grid, args.x0.unwrap())
                .map_err(|e| e.to_string())?;
            let result =
                solve_fde(&problem, &RootConfig::for_scalar()).map_err(|e| e.to_string())?;
            let reference = sample_expr(&exact, grid)?;
            node_mean_abs_error(&result.samples, &reference).map_err(|e| e.to_string())
        }
        Case::Varmin => {
            let lagrangian = parse(&substitute_alpha(
                args.lagrangian.as_deref().unwrap(),
                alpha_value,
            ))
            .map_err(|e| format!("--lagrangian: {e}"))?;
            let problem = VariationalProblem::new(
                lagrangian,
                alpha,
                grid,
                args.xa.unwrap(),
                args.xb.unwrap(),
            )
            .map_err(|e| e.to_string())?;
            let result =
                solve_variational(&problem, &RootConfig::for_system()).map_err(|e| e.to_string())?;
            let reference = sample_expr(&exact, grid)?;
            node_mean_abs_error(&result.samples, &reference).map_err(|e| e.to_string())
        }
    }
}
