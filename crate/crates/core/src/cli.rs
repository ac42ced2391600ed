//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 the complete structure could
//! not be found, 3 path obstruction (possibly exceptional slope), 4 selftest
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::dilog::bloch_wigner_d;
use crate::error::{Error, Result};
use crate::invariants::{self, InvariantReport};
use crate::potential::{builtin, builtin_five_two, load_spec, reduced_residual, shapes_from_point, ParamPoint, Potential};
use crate::selftest::{self, Hooks};
use crate::solver::{
    inf_norm, normalize_slope, solve_complete, solve_filling_from, trace_deformation, CriticalPoint, FillingSolution,
    Slope, SolverConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPLETE_FAILED: i32 = 2;
pub const EXIT_OBSTRUCTION: i32 = 3;
pub const EXIT_SELFTEST_FAILED: i32 = 4;

/// Version of the JSON documents written by every command.
pub const SCHEMA_VERSION: u32 = 1;

pub const SCAN_HEADER: [&str; 11] = [
    "p", "q", "r", "s", "converged", "volume", "cs_mod_half", "length", "torsion", "residual", "steps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// Faults that can be injected into `selftest` to check that it notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    NegateD,
}

#[derive(Debug, Parser)]
#[command(name = "knotpot", version, about = "Potential-function computations for hyperbolic knot complements")]
pub struct Cli {
    /// `builtin:NAME` or a path to a JSON potential description.
    #[arg(long, global = true, default_value = "builtin:5_2")]
    pub spec: String,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-12, value_parser = positive)]
    pub newton_tol: f64,
    #[arg(long, global = true, env = "KNOTPOT_TOL", default_value_t = 1e-10, value_parser = positive)]
    pub accept_tol: f64,
    #[arg(long, global = true, value_enum, hide = true)]
    pub fault: Option<Fault>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the complete hyperbolic structure.
    Complete,
    /// Solve the Dehn filling equations for one slope.
    Fill {
        /// `p/q` or `p`.
        #[arg(long, allow_hyphen_values = true)]
        slope: String,
    },
    /// Fill every slope with `|p| ≤ pmax`, `1 ≤ q ≤ qmax`.
    Scan {
        #[arg(long, value_parser = clap::value_parser!(i64).range(1..))]
        pmax: i64,
        #[arg(long, value_parser = clap::value_parser!(i64).range(1..))]
        qmax: i64,
    },
    /// Follow the deformation space along `log ξ ∈ [0, u_end]`.
    Trace {
        /// Final value of `log ξ`, e.g. `0.05i` or `0.1+0.2i`.
        #[arg(long, allow_hyphen_values = true)]
        u_end: String,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
    },
    /// Run the built-in identity checks.
    Selftest,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

#[derive(Debug, Clone)]
pub enum SpecSource {
    Builtin(String),
    File(PathBuf),
}

impl FromStr for SpecSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.strip_prefix("builtin:") {
            Some(name) => SpecSource::Builtin(name.to_string()),
            None => SpecSource::File(PathBuf::from(s)),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec_source: SpecSource,
    pub solver: SolverConfig,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub fault: Option<Fault>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        RunConfig {
            spec_source: cli.spec.parse().unwrap_or_else(|e: std::convert::Infallible| match e {}),
            solver: SolverConfig {
                newton_tol: cli.newton_tol,
                accept_tol: cli.accept_tol,
                ..SolverConfig::default()
            },
            format: cli.format,
            output: cli.output.clone(),
            fault: cli.fault,
        }
    }
}

/// Failure of a command: the exit code and the message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = RunConfig::from_cli(&cli);
    let mut out = Output::default();
    let result = match &cli.command {
        Command::Complete => cmd_complete(&cfg, &mut out),
        Command::Fill { slope } => cmd_fill(&cfg, slope, &mut out),
        Command::Scan { pmax, qmax } => cmd_scan(&cfg, *pmax, *qmax, &mut out),
        Command::Trace { u_end, samples } => cmd_trace(&cfg, u_end, *samples as usize, &mut out),
        Command::Selftest => cmd_selftest(&cfg, &mut out),
    };
    if let Err(e) = out.flush(cfg.output.as_deref()) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[derive(Default)]
struct Output {
    buf: Vec<u8>,
}

impl Output {
    fn push(&mut self, text: &str) {
        self.buf.extend_from_slice(text.as_bytes());
    }

    fn push_json(&mut self, v: &Value) {
        let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
        s.push('\n');
        self.push(&s);
    }

    fn flush(&self, path: Option<&std::path::Path>) -> std::io::Result<()> {
        match path {
            Some(p) => std::fs::write(p, &self.buf),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                lock.write_all(&self.buf)?;
                lock.flush()
            }
        }
    }
}

fn load_potential(cfg: &RunConfig) -> std::result::Result<Potential, Failure> {
    let spec = match &cfg.spec_source {
        SpecSource::Builtin(name) => builtin(name).ok_or_else(|| Failure::new(EXIT_USAGE, format!("unknown built-in potential `{name}`")))?,
        SpecSource::File(path) => {
            let bytes = std::fs::read(path).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
            load_spec(&bytes).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?
        }
    };
    Potential::new(spec).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

fn complete_or_fail(pot: &Potential, cfg: &RunConfig) -> std::result::Result<CriticalPoint, Failure> {
    solve_complete(pot, None, &cfg.solver)
        .map_err(|e| Failure::new(EXIT_COMPLETE_FAILED, format!("complete structure not found: {e}")))
}

/// Whether `pot` is (a renaming-free copy of) the built-in 5_2 potential, so
/// that its tetrahedron shapes and reduced equations are available.
fn is_five_two(pot: &Potential) -> bool {
    let b = builtin_five_two();
    let s = pot.spec();
    s.variables == b.variables && s.dilog_terms == b.dilog_terms && s.quad_terms == b.quad_terms && s.meridian == b.meridian
}

/// `%.15g`: fifteen significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() && z.im != 0.0 { '-' } else { '+' };
    format!("{} {} {}i", fmt_num(z.re), sign, fmt_num(z.im.abs()))
}

/// A JSON number rounded to 15 significant digits; non-finite values become `null`.
fn jnum(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = fmt_num(x).parse().expect("formatted number parses");
    json!(rounded)
}

fn jcomplex(z: Complex64) -> Value {
    json!({ "re": jnum(z.re), "im": jnum(z.im) })
}

fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in rows {
        s.push_str(&format!("{k:<width$}  {v}\n"));
    }
    s
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Named shapes for 5_2, otherwise the dilog arguments keyed by monomial.
fn named_shapes(pot: &Potential, pt: &ParamPoint) -> Vec<(String, Complex64)> {
    if is_five_two(pot) {
        let sh = shapes_from_point(pt);
        crate::potential::Shapes::names()
            .iter()
            .zip(sh.as_array())
            .map(|(n, z)| (n.to_string(), z))
            .collect()
    } else {
        pot.spec()
            .dilog_terms
            .iter()
            .zip(pot.dilog_arguments(pt))
            .map(|(t, (_, z))| (t.arg.to_string(), z))
            .collect()
    }
}

/// Residual of the reduced equations for 5_2, of the gradient equations otherwise.
fn reduced_or_generic_residual(pot: &Potential, pt: &ParamPoint) -> f64 {
    let generic = inf_norm(&pot.equation_residuals(pt));
    if is_five_two(pot) {
        match reduced_residual(pt) {
            Ok((a, b)) => generic.max(a.norm()).max(b.norm()),
            Err(_) => f64::INFINITY,
        }
    } else {
        generic
    }
}

fn cmd_complete(cfg: &RunConfig, out: &mut Output) -> std::result::Result<i32, Failure> {
    let pot = load_potential(cfg)?;
    let cp = complete_or_fail(&pot, cfg)?;
    let rep = invariants::complete_report(&pot, &cp).map_err(|e| Failure::new(EXIT_COMPLETE_FAILED, e.to_string()))?;
    let residual = reduced_or_generic_residual(&pot, &cp.point);
    let vars = &pot.spec().variables;
    let shapes = named_shapes(&pot, &cp.point);
    match cfg.format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("schema".into(), json!(SCHEMA_VERSION));
            doc.insert("spec".into(), json!(pot.spec().name));
            for (name, z) in vars.iter().zip(&cp.point.values) {
                doc.insert(name.clone(), jcomplex(*z));
            }
            let sh: Map<String, Value> = shapes.iter().map(|(n, z)| (n.clone(), jcomplex(*z))).collect();
            doc.insert("shapes".into(), Value::Object(sh));
            doc.insert("v".into(), jcomplex(rep.v));
            doc.insert("volume".into(), jnum(rep.volume));
            doc.insert("volume_from_shapes".into(), jnum(rep.volume_from_shapes));
            doc.insert("eta".into(), jcomplex(rep.eta));
            if let Some(alt) = rep.eta_alternate {
                doc.insert("eta_alternate".into(), jcomplex(alt));
            }
            doc.insert("cs_mod_half".into(), jnum(rep.cs_value));
            doc.insert("residual".into(), jnum(residual));
            doc.insert("newton_iterations".into(), json!(cp.newton_iters));
            out.push_json(&Value::Object(doc));
        }
        Format::Table | Format::Csv => {
            let mut rows: Vec<(String, Complex64)> = vars.iter().cloned().zip(cp.point.values.iter().copied()).collect();
            rows.extend(shapes.iter().map(|(n, z)| (format!("shape {n}"), *z)));
            rows.push(("V".into(), rep.v));
            rows.push(("eta".into(), rep.eta));
            if let Some(alt) = rep.eta_alternate {
                rows.push(("eta_alternate".into(), alt));
            }
            let reals = [
                ("volume", rep.volume),
                ("volume_from_shapes", rep.volume_from_shapes),
                ("cs_mod_half", rep.cs_value),
                ("residual", residual),
            ];
            if cfg.format == Format::Table {
                let mut t: Vec<(String, String)> = vec![("spec".into(), pot.spec().name.clone())];
                t.extend(rows.iter().map(|(k, z)| (k.clone(), fmt_complex(*z))));
                t.extend(reals.iter().map(|(k, x)| (k.to_string(), fmt_num(*x))));
                out.push(&table(&t));
            } else {
                let mut r: Vec<Vec<String>> = rows
                    .iter()
                    .map(|(k, z)| vec![k.clone(), fmt_num(z.re), fmt_num(z.im)])
                    .collect();
                r.extend(reals.iter().map(|(k, x)| vec![k.to_string(), fmt_num(*x), "0".into()]));
                out.push(&csv_text(&["quantity", "re", "im"], &r));
            }
        }
    }
    Ok(EXIT_OK)
}

/// Outcome of one filling, as reported by `fill` and `scan`.
struct FillRecord {
    slope: Slope,
    solved: std::result::Result<(FillingSolution, InvariantReport, f64), Error>,
}

impl FillRecord {
    fn compute(pot: &Potential, complete: &CriticalPoint, slope: Slope, cfg: &SolverConfig) -> Self {
        let solved = solve_filling_from(pot, complete, slope, cfg).and_then(|sol| {
            let rep = invariants::report(pot, &sol)?;
            let residual = reduced_or_generic_residual(pot, &sol.critical.point).max(sol.filling_residual);
            Ok((sol, rep, residual))
        });
        FillRecord { slope, solved }
    }

    fn csv_row(&self) -> Vec<String> {
        let s = &self.slope;
        let mut row = vec![s.p().to_string(), s.q().to_string(), s.r().to_string(), s.s().to_string()];
        match &self.solved {
            Ok((sol, rep, residual)) => row.extend([
                "true".into(),
                fmt_num(rep.volume),
                fmt_num(rep.cs_value),
                fmt_num(rep.geodesic_length),
                fmt_num(rep.geodesic_torsion),
                fmt_num(*residual),
                sol.path_steps.to_string(),
            ]),
            Err(_) => row.extend(["false".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new()]),
        }
        row
    }

    fn json(&self, pot: &Potential) -> Value {
        let s = &self.slope;
        let mut doc = Map::new();
        doc.insert("slope".into(), json!(s.to_string()));
        doc.insert("p".into(), json!(s.p()));
        doc.insert("q".into(), json!(s.q()));
        doc.insert("r".into(), json!(s.r()));
        doc.insert("s".into(), json!(s.s()));
        match &self.solved {
            Ok((sol, rep, residual)) => {
                doc.insert("converged".into(), json!(true));
                doc.insert("volume".into(), jnum(rep.volume));
                doc.insert("volume_from_shapes".into(), jnum(rep.volume_from_shapes));
                doc.insert("cs_mod_half".into(), jnum(rep.cs_value));
                doc.insert("cs_raw".into(), jnum(rep.cs_raw));
                doc.insert("cs_ambiguity".into(), jnum(rep.cs_ambiguity));
                doc.insert("length".into(), jnum(rep.geodesic_length));
                doc.insert("torsion".into(), jnum(rep.geodesic_torsion));
                doc.insert("length_sign".into(), jnum(rep.length_sign));
                doc.insert("v_alpha".into(), jcomplex(rep.v_alpha));
                doc.insert("u".into(), jcomplex(sol.u.value));
                doc.insert("v".into(), jcomplex(sol.v.value));
                let point: Map<String, Value> = pot
                    .spec()
                    .variables
                    .iter()
                    .zip(&sol.critical.point.values)
                    .map(|(n, z)| (n.clone(), jcomplex(*z)))
                    .collect();
                doc.insert("point".into(), Value::Object(point));
                doc.insert("residual".into(), jnum(*residual));
                doc.insert("equation_residual".into(), jnum(reduced_or_generic_residual(pot, &sol.critical.point)));
                doc.insert("filling_residual".into(), jnum(sol.filling_residual));
                doc.insert("steps".into(), json!(sol.path_steps));
            }
            Err(e) => {
                doc.insert("converged".into(), json!(false));
                doc.insert("error".into(), json!(e.to_string()));
            }
        }
        Value::Object(doc)
    }
}

fn obstruction_message(slope: &Slope, e: &Error) -> String {
    let text = e.to_string();
    if text.contains("possibly exceptional slope") {
        format!("slope {slope}: {text}")
    } else {
        format!("slope {slope}: {text} (possibly exceptional slope)")
    }
}

fn cmd_fill(cfg: &RunConfig, slope_text: &str, out: &mut Output) -> std::result::Result<i32, Failure> {
    let slope: Slope = slope_text
        .parse()
        .map_err(|e: Error| Failure::new(EXIT_USAGE, format!("bad slope `{slope_text}`: {e}")))?;
    let pot = load_potential(cfg)?;
    let complete = complete_or_fail(&pot, cfg)?;
    let rec = FillRecord::compute(&pot, &complete, slope, &cfg.solver);
    match cfg.format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("schema".into(), json!(SCHEMA_VERSION));
            doc.insert("spec".into(), json!(pot.spec().name));
            if let Value::Object(m) = rec.json(&pot) {
                doc.extend(m);
            }
            out.push_json(&Value::Object(doc));
        }
        Format::Csv => out.push(&csv_text(&SCAN_HEADER, &[rec.csv_row()])),
        Format::Table => {
            let mut t = vec![
                ("slope".to_string(), slope.to_string()),
                ("(r, s)".to_string(), format!("({}, {})", slope.r(), slope.s())),
            ];
            if let Ok((sol, rep, residual)) = &rec.solved {
                t.extend([
                    ("volume".to_string(), fmt_num(rep.volume)),
                    ("volume_from_shapes".to_string(), fmt_num(rep.volume_from_shapes)),
                    ("cs_mod_half".to_string(), fmt_num(rep.cs_value)),
                    ("length".to_string(), fmt_num(rep.geodesic_length)),
                    ("torsion".to_string(), fmt_num(rep.geodesic_torsion)),
                    ("u".to_string(), fmt_complex(sol.u.value)),
                    ("v".to_string(), fmt_complex(sol.v.value)),
                    ("residual".to_string(), fmt_num(*residual)),
                    ("filling_residual".to_string(), fmt_num(sol.filling_residual)),
                    ("steps".to_string(), sol.path_steps.to_string()),
                ]);
                for (name, z) in pot.spec().variables.iter().zip(&sol.critical.point.values) {
                    t.push((name.clone(), fmt_complex(*z)));
                }
            } else {
                t.push(("converged".to_string(), "false".to_string()));
            }
            out.push(&table(&t));
        }
    }
    match &rec.solved {
        Ok(_) => Ok(EXIT_OK),
        Err(e) => Err(Failure::new(EXIT_OBSTRUCTION, obstruction_message(&slope, e))),
    }
}

/// Normalized slopes with `|p| ≤ pmax`, `1 ≤ q ≤ qmax`, sorted by `(q, p)`.
pub fn scan_slopes(pmax: i64, qmax: i64) -> Vec<Slope> {
    let mut slopes = Vec::new();
    for q in 1..=qmax {
        for p in -pmax..=pmax {
            if gcd(p.unsigned_abs(), q as u64) == 1 {
                slopes.push(normalize_slope(p, q).expect("coprime with q ≥ 1"));
            }
        }
    }
    slopes
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn cmd_scan(cfg: &RunConfig, pmax: i64, qmax: i64, out: &mut Output) -> std::result::Result<i32, Failure> {
    let pot = load_potential(cfg)?;
    let complete = complete_or_fail(&pot, cfg)?;
    let records: Vec<FillRecord> = scan_slopes(pmax, qmax)
        .into_par_iter()
        .map(|s| FillRecord::compute(&pot, &complete, s, &cfg.solver))
        .collect();
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = records.iter().map(|r| r.csv_row()).collect();
            out.push(&csv_text(&SCAN_HEADER, &rows));
        }
        Format::Json => {
            let rows: Vec<Value> = records.iter().map(|r| r.json(&pot)).collect();
            out.push_json(&json!({ "schema": SCHEMA_VERSION, "spec": pot.spec().name, "rows": rows }));
        }
        Format::Table => {
            let mut cells: Vec<Vec<String>> = vec![SCAN_HEADER.iter().map(|s| s.to_string()).collect()];
            cells.extend(records.iter().map(|r| r.csv_row()));
            let widths: Vec<usize> = (0..SCAN_HEADER.len())
                .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
                .collect();
            for row in &cells {
                let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                out.push(line.join("  ").trim_end());
                out.push("\n");
            }
        }
    }
    Ok(EXIT_OK)
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&cleaned).map_err(|_| Error::Validation(format!("`{s}` is not a complex number")))
}

fn cmd_trace(cfg: &RunConfig, u_end: &str, samples: usize, out: &mut Output) -> std::result::Result<i32, Failure> {
    let u_end = parse_complex(u_end).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let pot = load_potential(cfg)?;
    let complete = complete_or_fail(&pot, cfg)?;
    let traced = trace_deformation(&pot, &complete, u_end, samples, &cfg.solver)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let m = pot.meridian_index();
    let others: Vec<(usize, &String)> = pot.spec().variables.iter().enumerate().filter(|(i, _)| *i != m).collect();

    let mut header: Vec<String> = vec!["log_xi_re".into(), "log_xi_im".into()];
    for (_, name) in &others {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    header.extend(
        ["log_eta_re", "log_eta_im", "im_v", "sum_d", "rogers_defect_re", "rogers_defect_im", "residual"]
            .iter()
            .map(|s| s.to_string()),
    );

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for smp in &traced.samples {
        let pt = &smp.point;
        let mut row = vec![smp.log_xi.re, smp.log_xi.im];
        for (i, _) in &others {
            row.push(pt.values[*i].re);
            row.push(pt.values[*i].im);
        }
        let defect = invariants::rogers_defect(&pot, pt, smp.log_eta).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let sum_d = pot.dilog_volume(pt).unwrap_or(f64::NAN);
        row.extend([
            smp.log_eta.re,
            smp.log_eta.im,
            pot.eval_v(pt).im,
            sum_d,
            defect.re,
            defect.im,
            smp.residual_inf_norm.max(reduced_or_generic_residual(&pot, pt)),
        ]);
        rows.push(row);
    }

    match cfg.format {
        Format::Csv => {
            let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|x| fmt_num(*x)).collect()).collect();
            out.push(&csv_text(&header, &text));
        }
        Format::Json => {
            let samples: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(header.iter().cloned().zip(r.iter().map(|x| jnum(*x))).collect()))
                .collect();
            let mut doc = json!({
                "schema": SCHEMA_VERSION,
                "spec": pot.spec().name,
                "u_end": jcomplex(u_end),
                "samples": samples,
            });
            if let Some(e) = &traced.obstruction {
                doc["obstruction"] = json!(e.to_string());
            }
            out.push_json(&doc);
        }
        Format::Table => {
            let mut cells: Vec<Vec<String>> = vec![header.clone()];
            cells.extend(rows.iter().map(|r| r.iter().map(|x| fmt_num(*x)).collect()));
            let widths: Vec<usize> = (0..header.len())
                .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
                .collect();
            for row in &cells {
                let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                out.push(line.join("  ").trim_end());
                out.push("\n");
            }
        }
    }
    match traced.obstruction {
        None => Ok(EXIT_OK),
        Some(e) => Err(Failure::new(
            EXIT_OBSTRUCTION,
            format!("trace stopped after {} samples: {e}", traced.samples.len()),
        )),
    }
}

fn negated_d(z: Complex64) -> Result<f64> {
    bloch_wigner_d(z).map(|v| -v)
}

fn cmd_selftest(cfg: &RunConfig, out: &mut Output) -> std::result::Result<i32, Failure> {
    let hooks = match cfg.fault {
        Some(Fault::NegateD) => Hooks {
            bloch_wigner: negated_d,
        },
        None => Hooks::default(),
    };
    let report = selftest::run_with(&hooks);
    match cfg.format {
        Format::Json => {
            let groups: Vec<Value> = report
                .groups
                .iter()
                .map(|g| {
                    let mut v = json!({
                        "name": g.name,
                        "passed": g.passed,
                        "checks": g.checks,
                        "max_error": jnum(g.max_error),
                        "tolerance": jnum(g.tolerance),
                    });
                    if let Some(f) = &g.failure {
                        v["failure"] = json!(f);
                    }
                    v
                })
                .collect();
            out.push_json(&json!({ "schema": SCHEMA_VERSION, "passed": report.passed, "groups": groups }));
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .groups
                .iter()
                .map(|g| {
                    vec![
                        g.name.to_string(),
                        g.passed.to_string(),
                        g.checks.to_string(),
                        fmt_num(g.max_error),
                        fmt_num(g.tolerance),
                    ]
                })
                .collect();
            out.push(&csv_text(&["group", "passed", "checks", "max_error", "tolerance"], &rows));
        }
        Format::Table => {
            for g in &report.groups {
                out.push(&format!(
                    "{} {:<20} checks={:<6} max_error={}\n",
                    if g.passed { "PASS" } else { "FAIL" },
                    g.name,
                    g.checks,
                    fmt_num(g.max_error)
                ));
                if let Some(f) = &g.failure {
                    out.push(&format!("     {f}\n"));
                }
            }
        }
    }
    if report.passed {
        Ok(EXIT_OK)
    } else {
        let failed: Vec<&str> = report.groups.iter().filter(|g| !g.passed).map(|g| g.name).collect();
        Err(Failure::new(EXIT_SELFTEST_FAILED, format!("selftest failed: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_num(2.828122088330783), "2.82812208833078");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-1.5), "-1.5");
        assert_eq!(fmt_num(1e-12), "1e-12");
        assert_eq!(fmt_num(1.234e-13), "1.234e-13");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(0.000123), "0.000123");
        assert_eq!(fmt_num(1e20), "1e+20");
    }

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("0.05i").unwrap(), Complex64::new(0.0, 0.05));
        assert_eq!(parse_complex("0+0i").unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(parse_complex("10+0i").unwrap(), Complex64::new(10.0, 0.0));
        assert_eq!(parse_complex("0.1 - 0.2i").unwrap(), Complex64::new(0.1, -0.2));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn scan_enumeration() {
        let s: Vec<String> = scan_slopes(1, 1).iter().map(|s| s.to_string()).collect();
        assert_eq!(s, ["-1/1", "0/1", "1/1"]);
        let s = scan_slopes(2, 2);
        let pq: Vec<(i64, i64)> = s.iter().map(|s| (s.p(), s.q())).collect();
        assert_eq!(pq, [(-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1), (-1, 2), (1, 2)]);
    }

    #[test]
    fn spec_source_parsing() {
        assert!(matches!("builtin:5_2".parse::<SpecSource>().unwrap(), SpecSource::Builtin(n) if n == "5_2"));
        assert!(matches!("a/b.json".parse::<SpecSource>().unwrap(), SpecSource::File(_)));
    }
}
