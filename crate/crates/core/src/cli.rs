//! Command-line front end.
//!
//! Every subcommand reads a JSON spec (see [`crate::config`]) and writes JSON
//! or CSV to stdout or `--out`. Diagnostics go to stderr. Exit codes: 0 on
//! success, 2 for malformed specs or arguments, 3 for numerical failures.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExtensionSource, Problem, ProblemSpec, ScaleSpec};
use crate::error::{Error, Result};
use crate::gerber_shiu::{evaluate, FormulaChoice, GerberShiuValue, GsOptions};
use crate::montecarlo::{mc_gerber_shiu, McEstimate};
use crate::reflected_refracted::{eval_reflected, eval_refracted, BarrierValue};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Tolerance of `compare` when neither `--tol` nor the spec sets one.
pub const DEFAULT_COMPARE_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "levyfluct", version, about = "Gerber-Shiu and overshoot functionals of spectrally negative Levy processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate W, W' and Z on a grid.
    Scale,
    /// Evaluate the functional analytically.
    Eval,
    /// Evaluate by every applicable route and compare them pairwise.
    Compare,
    /// Estimate the functional by simulation.
    Mc,
    /// The functional for the process reflected at b.
    EvalReflected,
    /// The functional for the refracted process.
    EvalRefracted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Spec file, or `-` for stdin.
    #[arg(long, global = true, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Output format (default: csv for `scale`, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Overrides the simulation seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides the number of simulated paths.
    #[arg(long, global = true, value_name = "N")]
    pub paths: Option<u64>,
    /// Tolerance: pass/fail threshold for `compare`, required accuracy otherwise.
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
        }
    };
    match execute(&cli).and_then(|out| emit(&cli.common, &out)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_SPEC
    } else {
        EXIT_NUMERIC
    }
}

fn emit(common: &Common, out: &str) -> Result<()> {
    match &common.out {
        Some(p) => std::fs::write(p, out).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.as_bytes())?;
            so.flush()?;
            Ok(())
        }
    }
}

fn read_spec(common: &Common) -> Result<(Value, Option<PathBuf>)> {
    let path = common.spec.as_ref().ok_or_else(|| Error::spec("--spec", "a spec file is required"))?;
    let (text, base) = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        (s, None)
    } else {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        (s, path.parent().map(Path::to_path_buf))
    };
    let v = serde_json::from_str(&text).map_err(|e| Error::spec(".", format!("invalid JSON: {e}")))?;
    Ok((v, base))
}

/// Runs the command and returns the formatted output.
pub fn execute(cli: &Cli) -> Result<String> {
    let common = &cli.common;
    if let Some(t) = common.tol {
        if !(t >= 0.0) {
            return Err(Error::spec("--tol", "must be >= 0"));
        }
    }
    let (v, base) = read_spec(common)?;
    let base = base.as_deref();
    if let Command::Scale = cli.command {
        return cmd_scale(&ScaleSpec::from_value(&v)?, base, common);
    }
    let mut prob = ProblemSpec::from_value(&v)?.resolve(base)?;
    if let Some(s) = common.seed {
        prob.mc.seed = s;
    }
    if let Some(n) = common.paths {
        prob.mc.paths = n;
    }
    if let Some(t) = common.tol {
        prob.tol = Some(t);
    }
    let format = common.format.unwrap_or(Format::Json);
    match cli.command {
        Command::Scale => unreachable!(),
        Command::Eval => cmd_eval(&prob, format),
        Command::Compare => cmd_compare(&prob, format),
        Command::Mc => cmd_mc(&prob, format),
        Command::EvalReflected => cmd_barrier(&prob, false, format),
        Command::EvalRefracted => cmd_barrier(&prob, true, format),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn check_accuracy(what: &str, accuracy: f64, tol: Option<f64>) -> Result<()> {
    match tol {
        Some(t) if !(accuracy <= t) => Err(Error::NumericalAccuracy {
            what: what.into(),
            achieved: accuracy,
            target: t,
        }),
        _ => Ok(()),
    }
}

fn options(prob: &Problem) -> GsOptions {
    GsOptions {
        strict: prob.strict,
        ..GsOptions::default()
    }
}

fn print_notes(notes: &[String]) {
    for n in notes {
        eprintln!("note: {n}");
    }
}

#[derive(Serialize)]
struct ScaleRow {
    x: f64,
    #[serde(rename = "W")]
    w: f64,
    #[serde(rename = "W_prime")]
    w_prime: f64,
    #[serde(rename = "Z")]
    z: f64,
}

pub fn cmd_scale(spec: &ScaleSpec, base: Option<&Path>, common: &Common) -> Result<String> {
    let (model, sf, points) = spec.resolve(base)?;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::with_capacity(points.len());
    for &x in &points {
        let w = if x > 0.0 {
            let ev = sf.w_checked(x)?;
            if ev.value != 0.0 {
                worst = worst.max(ev.error / ev.value.abs());
            }
            ev.value
        } else {
            sf.w(x)
        };
        rows.push(ScaleRow {
            x,
            w,
            w_prime: sf.w_prime(x),
            z: sf.z(x)?,
        });
    }
    eprintln!(
        "scale: model={} q={} method={:?} phi={} W(0)={} max_rel_error={:.3e}",
        model.label,
        sf.q(),
        sf.method(),
        sf.phi(),
        sf.w0(),
        worst
    );
    check_accuracy("relative error of W", worst, common.tol)?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows),
    }
}

#[derive(Serialize)]
struct EvalRow<'a> {
    value: f64,
    boundary: f64,
    integral: f64,
    creeping: f64,
    accuracy: f64,
    formula_used: &'a str,
}

fn formula_name(v: &GerberShiuValue) -> &'static str {
    match v.formula_used {
        crate::gerber_shiu::Formula::General => "general",
        crate::gerber_shiu::Formula::Simple => "simple",
        crate::gerber_shiu::Formula::ZeroExtension => "zero_extension",
        crate::gerber_shiu::Formula::BoundaryStart => "boundary_start",
    }
}

pub fn cmd_eval(prob: &Problem, format: Format) -> Result<String> {
    let p = prob.extended()?;
    let v = evaluate(&p, &prob.scale, &prob.exit, prob.formula, None, &options(prob))?;
    print_notes(&v.notes);
    check_accuracy("functional", v.accuracy, prob.tol)?;
    match format {
        Format::Json => to_json(&v),
        Format::Csv => to_csv(&[EvalRow {
            value: v.value,
            boundary: v.terms.boundary,
            integral: v.terms.integral,
            creeping: v.terms.creeping,
            accuracy: v.accuracy,
            formula_used: formula_name(&v),
        }]),
    }
}

#[derive(Serialize)]
struct McRow {
    mean: f64,
    stderr: f64,
    n_paths: u64,
    capped_fraction: f64,
}

pub fn cmd_mc(prob: &Problem, format: Format) -> Result<String> {
    let e = mc_gerber_shiu(&prob.model.triplet, &prob.exit, &prob.penalty, &prob.mc)?;
    print_notes(&e.notes);
    match format {
        Format::Json => to_json(&e),
        Format::Csv => to_csv(&[McRow {
            mean: e.mean,
            stderr: e.stderr,
            n_paths: e.n_paths,
            capped_fraction: e.capped_fraction,
        }]),
    }
}

#[derive(Serialize)]
struct BarrierRow {
    value: f64,
    boundary: f64,
    integral: f64,
    creeping: f64,
    accuracy: f64,
    stderr: Option<f64>,
    provider: &'static str,
    n_paths: Option<u64>,
}

pub fn cmd_barrier(prob: &Problem, refracted: bool, format: Format) -> Result<String> {
    let p = prob.extended()?;
    let provider = prob.provider();
    let opts = options(prob);
    let v: BarrierValue = if refracted {
        let r = prob.refraction.ok_or_else(|| Error::spec("delta", "refracted dynamics need `delta` and `c`"))?;
        eval_refracted(&p, &prob.scale, &prob.exit, r, &provider, &opts)?
    } else {
        if prob.refraction.is_some() {
            return Err(Error::spec("delta", "`delta` and `c` apply to eval-refracted only"));
        }
        eval_reflected(&p, &prob.scale, &prob.exit, &provider, &opts)?
    };
    print_notes(&v.notes);
    check_accuracy("functional", v.accuracy, prob.tol)?;
    match format {
        Format::Json => to_json(&v),
        Format::Csv => to_csv(&[BarrierRow {
            value: v.value,
            boundary: v.terms.boundary,
            integral: v.terms.integral,
            creeping: v.terms.creeping,
            accuracy: v.accuracy,
            stderr: v.stderr,
            provider: match v.provider {
                crate::reflected_refracted::ProviderKind::ClosedForm => "closed_form",
                crate::reflected_refracted::ProviderKind::Mc => "mc",
            },
            n_paths: v.n_paths,
        }]),
    }
}

/// One evaluation route of `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct Route {
    pub route: String,
    pub value: Option<f64>,
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutePair {
    pub route_a: String,
    pub route_b: String,
    pub value_a: f64,
    pub value_b: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub routes: Vec<Route>,
    /// Routes whose preconditions do not hold, with the reason.
    pub skipped: Vec<(String, String)>,
    pub pairs: Vec<RoutePair>,
    pub all_pass: bool,
}

fn analytic_route(name: String, r: Result<GerberShiuValue>, routes: &mut Vec<Route>, skipped: &mut Vec<(String, String)>) {
    match r {
        Ok(v) => routes.push(Route {
            route: name,
            value: Some(v.value),
            accuracy: Some(v.accuracy),
            stderr: None,
            error: None,
        }),
        Err(Error::ConditionNotMet(m)) => skipped.push((name, m)),
        Err(e) => routes.push(Route {
            route: name,
            value: None,
            accuracy: None,
            stderr: None,
            error: Some(e.to_string()),
        }),
    }
}

/// Evaluates every applicable route and compares them pairwise. Pairs
/// involving a simulated route are allowed three standard errors on top of
/// `tol`.
pub fn compare_routes(prob: &Problem, tol: f64) -> Result<Comparison> {
    let opts = options(prob);
    let (sf, exit) = (&prob.scale, &prob.exit);
    let mut routes = Vec::new();
    let mut skipped = Vec::new();
    let mut recipes = vec![
        ExtensionSource::Zero,
        ExtensionSource::ConstantOne,
        ExtensionSource::AffineAtA,
        ExtensionSource::ScaleFunction,
    ];
    if let Some(c @ ExtensionSource::Custom(_)) = &prob.extension {
        recipes.push(c.clone());
    }
    for ext in &recipes {
        let p = prob.extended_with(ext)?;
        let r = evaluate(&p, sf, exit, FormulaChoice::General, None, &opts);
        analytic_route(format!("general/{}", ext.name()), r, &mut routes, &mut skipped);
    }
    let simple_ext = prob.extension.clone().unwrap_or(ExtensionSource::AffineAtA);
    let p = prob.extended_with(&simple_ext)?;
    let r = evaluate(&p, sf, exit, FormulaChoice::Simple, None, &opts);
    analytic_route(format!("simple/{}", simple_ext.name()), r, &mut routes, &mut skipped);
    let r = evaluate(&p, sf, exit, FormulaChoice::ZeroExtension, None, &opts);
    analytic_route("zero_extension".into(), r, &mut routes, &mut skipped);
    match mc_gerber_shiu(&prob.model.triplet, exit, &prob.penalty, &prob.mc) {
        Ok(e) => routes.push(mc_route(&e)),
        Err(e) if e.is_input_error() => return Err(e),
        Err(e) => routes.push(Route {
            route: "mc".into(),
            value: None,
            accuracy: None,
            stderr: None,
            error: Some(e.to_string()),
        }),
    }
    let mut pairs = Vec::new();
    let ok: Vec<&Route> = routes.iter().filter(|r| r.value.is_some()).collect();
    for (i, ra) in ok.iter().enumerate() {
        for rb in &ok[i + 1..] {
            let (va, vb) = (ra.value.unwrap(), rb.value.unwrap());
            let se = ra.stderr.unwrap_or(0.0).hypot(rb.stderr.unwrap_or(0.0));
            let tolerance = tol + 3.0 * se;
            let deviation = (va - vb).abs();
            pairs.push(RoutePair {
                route_a: ra.route.clone(),
                route_b: rb.route.clone(),
                value_a: va,
                value_b: vb,
                deviation,
                tolerance,
                pass: deviation <= tolerance,
            });
        }
    }
    let all_pass = routes.iter().all(|r| r.error.is_none()) && pairs.iter().all(|p| p.pass);
    Ok(Comparison {
        routes,
        skipped,
        pairs,
        all_pass,
    })
}

fn mc_route(e: &McEstimate) -> Route {
    Route {
        route: "mc".into(),
        value: Some(e.mean),
        accuracy: None,
        stderr: Some(e.stderr),
        error: None,
    }
}

pub fn cmd_compare(prob: &Problem, format: Format) -> Result<String> {
    let tol = prob.tol.unwrap_or(DEFAULT_COMPARE_TOL);
    let c = compare_routes(prob, tol)?;
    for (name, why) in &c.skipped {
        eprintln!("skipped {name}: {why}");
    }
    for r in &c.routes {
        if let Some(e) = &r.error {
            eprintln!("route {} failed: {e}", r.route);
        }
    }
    match format {
        Format::Json => to_json(&c),
        Format::Csv => to_csv(&c.pairs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_exit_code() {
        assert_eq!(run(["levyfluct", "eval", "--format", "xml"]), EXIT_SPEC);
        assert_eq!(run(["levyfluct", "frobnicate"]), EXIT_SPEC);
    }

    #[test]
    fn missing_spec_is_spec_error() {
        assert_eq!(run(["levyfluct", "eval"]), EXIT_SPEC);
    }
}
