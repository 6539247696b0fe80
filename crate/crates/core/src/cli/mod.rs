//! The `fdm` command-line front end.
//!
//! Every command reads a problem file (see [`ProblemFile`]) and writes CSV,
//! SVG or a `key = value` report. Exit codes: 0 success, 1 parse, IO or
//! usage error, 2 failed condition, 3 analysis failure, 4 solver failure.

mod output;
mod problem_file;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::adm::{adm_compare, adm_solve};
use crate::analysis::{
    check_conditions, discrepancy_samples, radius, reference_solve, step_constants, AnalysisError,
    ConditionReport, MajorantSpec, PowerSeriesForm, ReferenceSolution, Truth,
};
use crate::fdcore::{fd_solve_on, FdError, Problem};
use crate::mesh::{Mesh, PiecewiseTerm};

pub use output::{format_number, read_csv, render_svg, write_csv, Columns};
pub use problem_file::{GridSpec, ProblemFile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("condition failed: {0}")]
    Condition(String),
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) | CliError::Usage(_) => 1,
            CliError::Condition(_) => 2,
            CliError::Analysis(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<FdError> for CliError {
    fn from(e: FdError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Fd(e) => e.into(),
            AnalysisError::StepUnderflow { .. } => CliError::Solver(e.to_string()),
            e => CliError::Analysis(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "fdm",
    version,
    about = "FD-method and Adomian series solvers for u' = N(x, u) u + phi(x)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the convergence conditions on a sampled box.
    Check(CheckArgs),
    /// FD-method terms, partial sums, errors and discrepancies as CSV.
    Solve(SolveArgs),
    /// Adomian decomposition terms in the same CSV layout.
    Adm(SolveArgs),
    /// Per-order sup errors of both methods and fitted ratios.
    Compare(SolveArgs),
    /// Step constants, the majorant sequence and its convergence radius.
    Radius(RadiusArgs),
    /// Line plot of CSV columns as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    /// Half-width of the sampled u range (default: the file's `u_bound`).
    #[arg(long)]
    pub u_bound: Option<f64>,
    /// Samples per axis.
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    /// Highest order (default: the file's `m`).
    #[arg(long)]
    pub m: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Samples per subinterval.
    #[arg(long)]
    pub quad: Option<usize>,
    /// Measure against the Runge-Kutta reference even when `exact` is given.
    #[arg(long)]
    pub reference: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub ref_tol: f64,
    /// Restrict rows (and sup errors) to `[a, b]`.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RadiusArgs {
    pub file: PathBuf,
    /// Use this sigma instead of the derived one.
    #[arg(long, conflicts_with = "auto")]
    pub sigma: Option<f64>,
    /// Derive sigma from the step constants (the default).
    #[arg(long)]
    pub auto: bool,
    /// The free constant Q of sigma (default: the file's `Q`).
    #[arg(long = "Q")]
    pub q: Option<f64>,
    /// Override V0 (default: mu).
    #[arg(long)]
    pub v0: Option<f64>,
    /// Samples per axis for the conditions and constants.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    /// Number of V-sequence terms to print.
    #[arg(long, default_value_t = 5)]
    pub terms: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub csv: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
    /// Comma-separated column names.
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Plot log10 of absolute values.
    #[arg(long)]
    pub log: bool,
}

/// Runs one command; reports go to `out`, warnings to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Check(a) => cmd_check(&a, out),
        Command::Solve(a) => cmd_series(&a, Method::Fd, out, err),
        Command::Adm(a) => cmd_series(&a, Method::Adm, out, err),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Radius(a) => cmd_radius(&a, out),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn emit(out: &mut dyn Write, line: String) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}

fn print_conditions(r: &ConditionReport, out: &mut dyn Write) -> Result<(), CliError> {
    let b = &r.sample_box;
    emit(
        out,
        format!(
            "# sampled x in [{}, {}] ({} points), u in [{}, {}] ({} points)",
            b.x_range.0, b.x_range.1, b.x_samples, b.u_range.0, b.u_range.1, b.u_samples
        ),
    )?;
    match &r.condition1 {
        PowerSeriesForm::Polynomial { degree, b } => {
            emit(
                out,
                format!("condition1 = polynomial of degree {degree} in u"),
            )?;
            let list: Vec<String> = b.iter().map(|v| v.to_string()).collect();
            emit(out, format!("B = [{}]", list.join(", ")))?;
        }
        PowerSeriesForm::NotPolynomial => emit(
            out,
            "condition1 = not polynomial in u; majorant must be supplied".into(),
        )?,
    }
    emit(
        out,
        format!(
            "condition2 = {}",
            if r.condition2 { "pass" } else { "fail" }
        ),
    )?;
    emit(
        out,
        format!(
            "condition3 = {}",
            if r.condition3 { "pass" } else { "fail" }
        ),
    )?;
    emit(out, format!("alpha = {}", r.alpha))?;
    emit(out, format!("k = {}", r.k))?;
    emit(out, format!("mu = {}", r.mu))
}

fn load(path: &Path) -> Result<(ProblemFile, Problem), CliError> {
    let file = ProblemFile::read(path)?;
    let problem = file.problem()?;
    Ok((file, problem))
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (file, p) = load(&a.file)?;
    let u_bound = a.u_bound.unwrap_or(file.u_bound);
    let r = check_conditions(&p, u_bound, a.samples, a.samples)?;
    print_conditions(&r, out)?;
    emit(out, format!("passed = {}", r.passed()))?;
    if r.passed() {
        Ok(())
    } else {
        let mut failed = Vec::new();
        if !r.condition2 {
            failed.push("2 (phi unbounded)".to_string());
        }
        if !r.condition3 {
            failed.push(format!("3 (alpha = {} is not positive)", r.alpha));
        }
        Err(CliError::Condition(format!(
            "condition {}",
            failed.join(", ")
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Fd,
    Adm,
}

fn window(a: &SolveArgs, p: &Problem) -> Result<(f64, f64), CliError> {
    match a.window.as_deref() {
        None => Ok((p.x0, p.x_end)),
        Some(&[lo, hi]) if lo <= hi => Ok((lo, hi)),
        Some(w) => Err(CliError::Usage(format!("--window needs a <= b, got {w:?}"))),
    }
}

fn mesh_for(file: &ProblemFile, p: &Problem, quad: Option<usize>) -> Result<Arc<Mesh>, CliError> {
    let grid = file.grid()?;
    let quad = file.quadrature(quad)?;
    Ok(p.mesh(grid, quad)?)
}

/// Exact solution when available (and not overridden), else the reference.
enum Oracle {
    Exact,
    Reference(ReferenceSolution),
    None,
}

fn oracle(p: &Problem, force_reference: bool, always: bool, tol: f64) -> Result<Oracle, CliError> {
    if p.exact.is_some() && !force_reference {
        return Ok(Oracle::Exact);
    }
    if force_reference || always {
        return Ok(Oracle::Reference(reference_solve(p, tol)?));
    }
    Ok(Oracle::None)
}

impl Oracle {
    fn truth<'a>(&'a self, p: &'a Problem) -> Option<(&'static str, Truth<'a>)> {
        match self {
            Oracle::Exact => p.exact.as_ref().map(|e| ("exact", Truth::Exact(e))),
            Oracle::Reference(r) => Some(("reference", Truth::Reference(r))),
            Oracle::None => None,
        }
    }
}

fn write_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    columns: &Columns,
) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let mut buf = Vec::new();
            write_csv(&mut buf, columns)?;
            std::fs::write(path, buf).map_err(|e| io_err(path, e))
        }
        None => write_csv(out, columns),
    }
}

fn cmd_series(
    a: &SolveArgs,
    method: Method,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let (file, p) = load(&a.file)?;
    let m = a.m.unwrap_or(file.m);
    let (lo, hi) = window(a, &p)?;
    let mesh = mesh_for(&file, &p, a.quad)?;
    let (terms, sums) = match method {
        Method::Fd => {
            let sol = fd_solve_on(&p, &mesh, m)?;
            for w in &sol.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            (sol.terms, sol.partial_sums)
        }
        Method::Adm => {
            let sol = adm_solve(&p, m, &mesh)?;
            (sol.terms, sol.partial_sums)
        }
    };
    let oracle = oracle(&p, a.reference, false, a.ref_tol)?;
    let truth = oracle.truth(&p);

    let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let nu: Vec<Vec<f64>> = sums
        .iter()
        .map(|s| {
            Ok(discrepancy_samples(&p, s)?
                .into_iter()
                .map(|(_, v)| v)
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    let rows: Vec<(usize, (usize, usize, f64))> = mesh
        .sample_points()
        .enumerate()
        .filter(|&(_, (_, _, x))| x >= lo - tol && x <= hi + tol)
        .collect();
    let at = |t: &PiecewiseTerm| -> Vec<f64> {
        rows.iter()
            .map(|&(_, (i, k, _))| t.panel_samples(i)[k])
            .collect()
    };

    let mut columns: Columns = vec![("x".into(), rows.iter().map(|r| r.1 .2).collect())];
    for (j, t) in terms.iter().enumerate() {
        columns.push((format!("u{j}term"), at(t)));
    }
    let sum_values: Vec<Vec<f64>> = sums.iter().map(at).collect();
    for (j, s) in sum_values.iter().enumerate() {
        columns.push((format!("sum{j}"), s.clone()));
    }
    if let Some((name, truth)) = truth {
        let t: Vec<f64> = rows
            .iter()
            .map(|r| truth.eval(r.1 .2))
            .collect::<Result<_, _>>()?;
        for (j, s) in sum_values.iter().enumerate() {
            columns.push((
                format!("delta{j}"),
                t.iter().zip(s).map(|(t, s)| t - s).collect(),
            ));
        }
        columns.insert(1 + 2 * terms.len(), (name.to_string(), t));
    }
    for (j, v) in nu.iter().enumerate() {
        columns.push((format!("nu{j}"), rows.iter().map(|&(r, _)| v[r]).collect()));
    }
    write_output(a.out.as_deref(), out, &columns)
}

fn cmd_compare(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (file, p) = load(&a.file)?;
    let m = a.m.unwrap_or(file.m);
    let win = window(a, &p)?;
    let mesh = mesh_for(&file, &p, a.quad)?;
    let oracle = oracle(&p, a.reference, true, a.ref_tol)?;
    let (name, truth) = oracle
        .truth(&p)
        .expect("an oracle is always built for compare");
    let cmp = adm_compare(&p, m, &mesh, win, &truth)?;

    let mut table = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut table);
        let csv_err = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["m", "fd_sup_error", "adm_sup_error"])
            .map_err(csv_err)?;
        for (j, (f, d)) in cmp
            .fd
            .sup_errors
            .iter()
            .zip(&cmp.adm.sup_errors)
            .enumerate()
        {
            w.write_record([j.to_string(), format_number(*f), format_number(*d)])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let ratio = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    let mut summary = vec![
        format!("# truth = {name}"),
        format!("window = [{}, {}]", win.0, win.1),
        format!("fd_ratio = {}", ratio(cmp.fd.ratio)),
        format!("adm_ratio = {}", ratio(cmp.adm.ratio)),
    ];
    match &a.out {
        Some(path) => {
            std::fs::write(path, &table).map_err(|e| io_err(path, e))?;
            summary.insert(0, format!("# table written to {}", path.display()));
        }
        None => out
            .write_all(&table)
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    for line in summary {
        emit(out, line)?;
    }
    Ok(())
}

/// Largest subinterval length of the file's grid.
fn max_step(file: &ProblemFile) -> Result<f64, CliError> {
    let grid = file.grid()?;
    Ok(grid
        .nodes()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max))
}

fn cmd_radius(a: &RadiusArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (file, p) = load(&a.file)?;
    let q = a.q.unwrap_or(file.q);
    let h = max_step(&file)?;
    let conditions = check_conditions(&p, file.u_bound, a.samples, a.samples);

    let b = match (&file.majorant, &conditions) {
        (Some(b), _) => b.clone(),
        (None, Ok(r)) => match &r.condition1 {
            PowerSeriesForm::Polynomial { b, .. } => b.clone(),
            PowerSeriesForm::NotPolynomial => return Err(AnalysisError::MissingMajorant.into()),
        },
        (None, Err(e)) => return Err(e.clone().into()),
    };

    let mut mu1 = None;
    let sigma = match (a.sigma, &conditions) {
        (Some(s), Ok(r)) => {
            print_conditions(r, out)?;
            if let Ok(c) = step_constants(&p, r, h, q, a.samples, a.samples) {
                emit(out, format!("mu1 = {}", c.mu1))?;
                mu1 = Some(c.mu1);
            }
            s
        }
        (Some(s), Err(e)) => {
            emit(out, format!("# conditions unavailable: {e}"))?;
            s
        }
        (None, Ok(r)) => {
            print_conditions(r, out)?;
            if !r.condition3 {
                return Err(CliError::Condition(format!(
                    "alpha = {} is not positive; sigma cannot be derived",
                    r.alpha
                )));
            }
            let c = step_constants(&p, r, h, q, a.samples, a.samples)?;
            emit(out, format!("h = {h}"))?;
            emit(out, format!("mu1 = {}", c.mu1))?;
            mu1 = Some(c.mu1);
            c.sigma
        }
        (None, Err(e)) => return Err(e.clone().into()),
    };
    if file.majorant.is_some() {
        let list: Vec<String> = b.iter().map(|v| v.to_string()).collect();
        emit(
            out,
            format!("majorant = [{}]  # from the problem file", list.join(", ")),
        )?;
    }
    emit(out, format!("sigma = {sigma}  # Q = {q}"))?;
    emit(
        out,
        format!("# caveat: Q enters sigma but is not defined by the convergence estimate; Q = {q} was assumed"),
    )?;

    let v0 = match (a.v0, &conditions) {
        (Some(v), _) => v,
        (None, Ok(r)) => r.mu,
        (None, Err(_)) => return Err(CliError::Usage("V0 cannot be derived; pass --v0".into())),
    };
    let spec = MajorantSpec::new(b, v0, sigma)?;
    emit(out, format!("V0 = {}", spec.v0))?;
    emit(out, format!("Sigma = {}", spec.sigma_big))?;
    let v = crate::analysis::majorant_sequence(&spec, a.terms)?;
    let list: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    emit(out, format!("V = [{}]", list.join(", ")))?;
    match radius(&spec, mu1) {
        Ok(r) => {
            emit(out, format!("g_max = {}", r.g_max))?;
            emit(out, format!("R = {}", r.r))?;
            emit(out, format!("slope_at_V0 = {}", r.slope_at_v0))?;
            emit(out, format!("expected_slope = {}", r.expected_slope))?;
            match r.admissible_h {
                Some(h) => emit(out, format!("admissible_h = {h}")),
                None => emit(
                    out,
                    format!("admissible_h = {}  # mu1 unavailable, R only", r.r),
                ),
            }
        }
        Err(e) => {
            if mu1.is_some() {
                emit(
                    out,
                    "# no certified radius; the step bound mu1 above still holds".into(),
                )?;
            }
            Err(e.into())
        }
    }
}

fn cmd_plot(a: &PlotArgs) -> Result<(), CliError> {
    let columns: Vec<String> = a
        .columns
        .iter()
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if columns.is_empty() {
        return Err(CliError::Usage(
            "select at least one column with --columns".into(),
        ));
    }
    let text = std::fs::read_to_string(&a.csv).map_err(|e| io_err(&a.csv, e))?;
    let table = read_csv(&text)?;
    let title = a
        .csv
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let svg = render_svg(&table, &columns, a.log, &title)?;
    std::fs::write(&a.svg, svg).map_err(|e| io_err(&a.svg, e))
}
