//! Executes a [`RunConfig`] and writes its artifacts: a JSON report that
//! embeds the resolved config, a CSV table (the field, or the command's rows)
//! and a plain-text summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::config::{Command, DataConfig, RunConfig};
use crate::error::{Error, Result};
use crate::lemmas::{lemma_check, LemmaReport};
use crate::pipeline::{
    boundary_data, jump_check, solve_13_problem, standard_densities, DataSource, FieldSample, JumpRow, ProblemSpec,
    SolveReport, TabulatedData,
};
use crate::quadrature::sweep::{delta_sweep, SweepReport};
use crate::quadrature::{CauchyOptions, QuadratureGrid};
use crate::selftest::{algebra_selftest, SelfCheck, SelftestOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for an error: bad input is a validation failure, anything the
/// numerics raised is a numerical failure.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::ExponentOutOfRange(_)
        | Error::MapViolation(_)
        | Error::DataSingularAtCorner { .. }
        | Error::GridTooSmall { .. }
        | Error::Io(_) => EXIT_VALIDATION,
        Error::NonInvertible { .. }
        | Error::NodeOnCorner { .. }
        | Error::SingularityUnresolved { .. }
        | Error::SingularSystem { .. }
        | Error::PathExitsDomain(_) => EXIT_NUMERICAL,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum CommandResult {
    Solve(SolveReport),
    Jump(Vec<JumpRow>),
    Lemma(LemmaReport),
    Selftest(Vec<SelfCheck>),
    Sweep(SweepReport),
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Tolerance breaches and numerical flags behind a non-zero exit.
    pub failures: Vec<String>,
    pub error: Option<Error>,
    pub result: Option<CommandResult>,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    exit_code: i32,
    failures: &'a [String],
    error: Option<String>,
    config: &'a RunConfig,
    result: Option<&'a CommandResult>,
}

/// Validates and executes the configured command without touching the file
/// system. `log` receives progress messages.
pub fn evaluate(cfg: &RunConfig, log: &dyn Fn(&str)) -> RunOutcome {
    log(&format!("command {}", cfg.command.name()));
    let executed = cfg.validate().and_then(|_| execute(cfg, log));
    let (result, failures, error) = match executed {
        Ok((r, f)) => (Some(r), f, None),
        Err(e) => (None, Vec::new(), Some(e)),
    };
    let exit_code = match &error {
        Some(e) => exit_code_for(e),
        None if failures.is_empty() => EXIT_OK,
        None => EXIT_NUMERICAL,
    };
    let summary = summarize(cfg, exit_code, &failures, error.as_ref(), result.as_ref());
    RunOutcome { exit_code, failures, error, result, artifacts: Vec::new(), summary }
}

/// Runs the configured command and writes its artifacts under `out_dir`.
/// Artifact write failures are reported as an I/O error with exit status 2.
pub fn run(cfg: &RunConfig, out_dir: &Path, verbose: bool) -> RunOutcome {
    let started = Instant::now();
    let log = |msg: &str| {
        if verbose {
            eprintln!("[{:>8.2}s] {msg}", started.elapsed().as_secs_f64());
        }
    };
    let mut outcome = evaluate(cfg, &log);
    if let Err(e) = write_artifacts(cfg, out_dir, &mut outcome) {
        outcome.exit_code = EXIT_VALIDATION;
        outcome.summary.push_str(&format!("could not write artifacts: {e}\n"));
        outcome.error = Some(e);
    }
    log(&format!("exit {}", outcome.exit_code));
    outcome
}

fn data_source(cfg: &RunConfig) -> Result<DataSource> {
    Ok(match &cfg.data {
        DataConfig::Manufactured { degree } => DataSource::Manufactured { degree: *degree },
        DataConfig::Samples { path } => DataSource::Samples(Arc::new(read_boundary_samples(&cfg.resolve(path))?)),
    })
}

fn problem(cfg: &RunConfig) -> Result<ProblemSpec> {
    let map = cfg.build_map()?;
    let mut spec = ProblemSpec::new(map, data_source(cfg)?, cfg.grid);
    spec.probes = cfg.probes.clone();
    Ok(spec)
}

fn execute(cfg: &RunConfig, log: &dyn Fn(&str)) -> Result<(CommandResult, Vec<String>)> {
    let tol = &cfg.tolerances;
    let mut failures = Vec::new();
    let result = match cfg.command {
        Command::Solve | Command::FieldExport => {
            let spec = problem(cfg)?;
            log(&format!("solving on {} with N = {}", spec.map.name, cfg.grid.n));
            let report = solve_13_problem(&spec)?;
            log("solve finished");
            if !report.all_finite() {
                failures.push("report contains non-finite values".into());
            }
            if cfg.command == Command::Solve {
                let d = &report.diagnostics;
                if d.residual_offgrid > tol.residual_offgrid {
                    failures.push(format!(
                        "off-grid residual {:.3e} exceeds {:.3e}",
                        d.residual_offgrid, tol.residual_offgrid
                    ));
                }
                if report.boundary_residual > tol.boundary_residual {
                    failures.push(format!(
                        "boundary residual {:.3e} exceeds {:.3e}",
                        report.boundary_residual, tol.boundary_residual
                    ));
                }
                if d.singular && tol.fail_on_singular {
                    failures.push(format!("system is numerically singular (condition {:.3e})", d.condition));
                }
            }
            CommandResult::Solve(report)
        }
        Command::JumpCheck => {
            let map = cfg.build_map()?;
            let grid = QuadratureGrid::for_map(&map, &cfg.grid)?;
            log(&format!("jump check on {} with N = {}", map.name, grid.len()));
            let rows = jump_check(&map, &standard_densities(), &cfg.jump.angles, &grid, &CauchyOptions::default())?;
            let worst = rows.iter().map(|r| r.deviation).fold(0.0, |a: f64, b| if b.is_nan() { b } else { a.max(b) });
            if !(worst <= tol.jump) {
                failures.push(format!("jump deviation {worst:.3e} exceeds {:.3e}", tol.jump));
            }
            CommandResult::Jump(rows)
        }
        Command::LemmaCheck => {
            let map = cfg.build_map()?;
            log(&format!("lemma check on {} with {} samples", map.name, cfg.lemma.samples));
            let report = lemma_check(&map, &cfg.lemma.options())?;
            for r in &report.rows {
                if r.nonfinite > 0 || !r.fitted.is_finite() || !r.fitted_refined.is_finite() {
                    failures.push(format!("{} ({}): {} non-finite ratios", r.lemma, r.quantity, r.nonfinite));
                } else if !r.stable && tol.fail_on_unstable {
                    failures.push(format!("{} ({}): drift {:.3e} not stable", r.lemma, r.quantity, r.drift));
                }
            }
            CommandResult::Lemma(report)
        }
        Command::AlgebraSelftest => {
            let rows = algebra_selftest(&SelftestOptions::default())?;
            failures.extend(rows.iter().filter(|r| !r.pass).map(|r| {
                format!("{}: {:.3e} against tolerance {:.3e}", r.name, r.value, r.tolerance)
            }));
            CommandResult::Selftest(rows)
        }
        Command::DeltaSweep => {
            let spec = problem(cfg)?;
            let data = boundary_data(&spec);
            log(&format!("delta sweep on {} over {} radii", spec.map.name, cfg.sweep.deltas.len()));
            let report =
                delta_sweep(&spec.map, &data, &cfg.sweep.deltas, cfg.grid.n, cfg.grid.q, &cfg.sweep.probe_angles)?;
            for row in &report.rows {
                let probes_ok = row.probes.iter().flatten().all(|(a, b)| a.is_finite() && b.is_finite());
                if !row.residual_offgrid.is_finite() || !probes_ok {
                    failures.push(format!("non-finite values at delta = {}", row.delta));
                }
            }
            CommandResult::Sweep(report)
        }
    };
    Ok((result, failures))
}

fn write_artifacts(cfg: &RunConfig, out_dir: &Path, outcome: &mut RunOutcome) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let report = Report {
        command: cfg.command.name(),
        exit_code: outcome.exit_code,
        failures: &outcome.failures,
        error: outcome.error.as_ref().map(|e| e.to_string()),
        config: cfg,
        result: outcome.result.as_ref(),
    };
    let path = out_dir.join(&cfg.output.report);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&path, json)?;
    outcome.artifacts.push(path);

    match &outcome.result {
        Some(CommandResult::Solve(r)) => {
            let path = out_dir.join(&cfg.output.field);
            write_field_csv(&path, &r.field)?;
            outcome.artifacts.push(path);
        }
        Some(CommandResult::Jump(rows)) => outcome.artifacts.push(write_rows(out_dir, &cfg.output.table, rows)?),
        Some(CommandResult::Lemma(r)) => outcome.artifacts.push(write_rows(out_dir, &cfg.output.table, &r.rows)?),
        Some(CommandResult::Selftest(rows)) => outcome.artifacts.push(write_rows(out_dir, &cfg.output.table, rows)?),
        Some(CommandResult::Sweep(r)) => {
            let path = out_dir.join(&cfg.output.table);
            write_sweep_csv(&path, r)?;
            outcome.artifacts.push(path);
        }
        None => {}
    }

    let path = out_dir.join(&cfg.output.summary);
    std::fs::write(&path, &outcome.summary)?;
    outcome.artifacts.push(path);
    Ok(())
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(&path, e))?;
    }
    w.flush()?;
    Ok(path)
}

fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<String> =
        ["delta", "n", "q", "condition", "singular", "residual_offgrid"].iter().map(|s| s.to_string()).collect();
    for t in &report.probe_angles {
        header.push(format!("phi1@{t}"));
        header.push(format!("phi3@{t}"));
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in &report.rows {
        let mut rec = vec![
            row.delta.to_string(),
            row.n.to_string(),
            row.q.to_string(),
            row.condition.to_string(),
            row.singular.to_string(),
            row.residual_offgrid.to_string(),
        ];
        for p in &row.probes {
            match p {
                Some((a, b)) => rec.extend([a.to_string(), b.to_string()]),
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub const FIELD_HEADER: [&str; 9] = ["x", "y", "U1", "U2", "U3", "U4", "u", "zr", "zi"];

/// One row per probe; every number with 17 significant digits, so a read
/// back reproduces the samples bit for bit.
pub fn write_field_csv(path: &Path, field: &[FieldSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(FIELD_HEADER).map_err(|e| csv_error(path, e))?;
    for f in field {
        let rec = [f.x, f.y, f.u1, f.u2, f.u3, f.u4, f.u, f.zr, f.zi].map(|v| format!("{v:.16e}"));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_number(text: &str, path: &Path, line: u64, column: &str) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| {
        Error::Config(format!("{}:{line}: column {column}: '{}' is not a number", path.display(), text.trim()))
    })
}

pub fn read_field_csv(path: &Path) -> Result<Vec<FieldSample>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().map(str::trim).ne(FIELD_HEADER) {
        return Err(Error::Config(format!("{}: expected header {}", path.display(), FIELD_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut v = [0.0; 9];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = parse_number(&rec[k], path, line, FIELD_HEADER[k])?;
        }
        out.push(FieldSample { x: v[0], y: v[1], u1: v[2], u2: v[3], u3: v[4], u4: v[5], u: v[6], zr: v[7], zi: v[8] });
    }
    Ok(out)
}

/// Boundary samples `theta, u1, u3` on the unit circle. A header row and
/// `#` comment lines are allowed; angles must increase strictly.
pub fn read_boundary_samples(path: &Path) -> Result<TabulatedData> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let (mut theta, mut u1, mut u3) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(Error::Config(format!(
                "{}:{line}: expected 3 columns (theta, u1, u3), found {}",
                path.display(),
                rec.len()
            )));
        }
        if k == 0 && rec[0].parse::<f64>().is_err() {
            continue;
        }
        theta.push(parse_number(&rec[0], path, line, "theta")?);
        u1.push(parse_number(&rec[1], path, line, "u1")?);
        u3.push(parse_number(&rec[2], path, line, "u3")?);
    }
    TabulatedData::new(theta, u1, u3).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn summarize(
    cfg: &RunConfig,
    exit_code: i32,
    failures: &[String],
    error: Option<&Error>,
    result: Option<&CommandResult>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command: {}", cfg.command.name());
    let _ = writeln!(s, "map: {}  grid: N = {}, q = {}, delta = {}", cfg.map.name, cfg.grid.n, cfg.grid.q, cfg.grid.delta);
    match result {
        Some(CommandResult::Solve(r)) => {
            let d = &r.diagnostics;
            let _ = writeln!(s, "solver: {} (condition {:.3e}, singular {})", d.method, d.condition, d.singular);
            let _ = writeln!(s, "residual at nodes: {:.3e}", d.residual_nodes);
            let _ = writeln!(s, "off-grid residual: {:.3e} over {} points", d.residual_offgrid, d.offgrid_points);
            let _ = writeln!(s, "boundary residual: {:.3e}", r.boundary_residual);
            let _ = writeln!(s, "weighted density sup: {:.6e}", r.weighted_sup);
            if let Some(e) = &r.exponents {
                let _ = writeln!(s, "exponents: gamma = {:?}, gamma' = {:?}, beta = {}, beta0 = {}", e.gammas, e.gamma_primes, e.beta, e.beta0);
            }
            if let Some(e) = &r.errors {
                let _ = writeln!(
                    s,
                    "relative errors for |Z| <= {:.2}: U1 {:.3e}, U3 {:.3e}, u {:.3e}",
                    e.radius, e.u1_relative, e.u3_relative, e.u_relative
                );
            }
            let _ = writeln!(s, "field samples: {}", r.field.len());
            for w in &r.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
        }
        Some(CommandResult::Jump(rows)) => {
            for r in rows {
                let _ = writeln!(s, "{:<18} theta {:>8.4}  deviation {:.3e}", r.density, r.theta, r.deviation);
            }
        }
        Some(CommandResult::Lemma(rep)) => {
            let _ = writeln!(s, "r0 = {:.6}, seed = {}", rep.r0, rep.seed);
            let _ = writeln!(s, "{:<8} {:<40} {:>14} {:>14} {:>9} {:>7}", "lemma", "quantity", "fitted", "fitted 4x", "drift", "stable");
            for r in &rep.rows {
                let _ = writeln!(
                    s,
                    "{:<8} {:<40} {:>14.6e} {:>14.6e} {:>9.3e} {:>7}",
                    r.lemma, r.quantity, r.fitted, r.fitted_refined, r.drift, r.stable
                );
            }
        }
        Some(CommandResult::Selftest(rows)) => {
            for r in rows {
                let _ = writeln!(s, "{} {:<44} {:.3e} (tolerance {:.1e})", if r.pass { "ok  " } else { "FAIL" }, r.name, r.value, r.tolerance);
            }
        }
        Some(CommandResult::Sweep(rep)) => {
            for row in &rep.rows {
                let _ = writeln!(
                    s,
                    "delta {:<8} N {:<5} condition {:.3e} off-grid residual {:.3e}",
                    row.delta, row.n, row.condition, row.residual_offgrid
                );
            }
            for d in &rep.differences {
                let _ = writeln!(s, "probe change {} -> {}: {:.3e}", d.delta_from, d.delta_to, d.max_abs_diff);
            }
        }
        None => {}
    }
    if let Some(e) = error {
        let _ = writeln!(s, "error: {e}");
    }
    for f in failures {
        let _ = writeln!(s, "failure: {f}");
    }
    let _ = writeln!(s, "exit status: {exit_code}");
    s
}
