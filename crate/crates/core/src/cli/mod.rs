//! The `meanfield` command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 config or input error,
//! 3 numerical failure, 4 parameters outside the admissible region,
//! 5 non-convergence.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

pub use config::{Format, RunConfig};
use output::{num, opt_num, write_atomic, write_json, Table};

use crate::bumps;
use crate::checks::{self, ResidualFn};
use crate::diagnostics;
use crate::error::Error;
use crate::functional::{self, Params};
use crate::minimax;
use crate::torus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_OUTSIDE: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "meanfield", version, about = "Mountain-pass solver for the mean field equation on the unit torus")]
pub struct Cli {
    /// Run configuration (flat `key = value` file)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampling seed, overriding `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding `threads`
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bubble energies against ln(1/eps) with fitted slopes
    Expansions,
    /// Minimax solve and refinement at (lambda1, lambda2)
    Solve,
    /// Solve every (lambda1, lambda2) pair of a CSV file
    Sweep {
        /// CSV with header `lambda1,lambda2`
        #[arg(long)]
        params: PathBuf,
    },
    /// Run the invariant suites
    Check,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Expansions => "expansions",
            Command::Solve => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Check => "check",
        }
    }
}

/// A failed run: exit code and message.
#[derive(Debug)]
struct Failure(i32, String);

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure(EXIT_CONFIG, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OutsideRegion(..) => EXIT_OUTSIDE,
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::InvalidBump(_)
            | Error::InvalidEpsList(_)
            | Error::InvalidOptions(_)
            | Error::Parse(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        Failure(code, e.to_string())
    }
}

#[derive(Debug, Serialize)]
struct Stage {
    name: String,
    status: String,
    detail: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    started_unix_seconds: f64,
    wall_clock_seconds: f64,
    exit_code: i32,
    stages: Vec<Stage>,
    outputs: Vec<String>,
}

struct Run {
    config: RunConfig,
    out: PathBuf,
    stages: Vec<Stage>,
    outputs: Vec<String>,
    residual: ResidualFn,
}

impl Run {
    fn stage(&mut self, name: &str, status: &str, detail: impl Into<String>) {
        self.stages.push(Stage {
            name: name.into(),
            status: status.into(),
            detail: detail.into(),
        });
    }

    fn path(&mut self, file: &str) -> PathBuf {
        self.outputs.push(file.to_string());
        self.out.join(file)
    }

    fn table_name(&self, stem: &str) -> String {
        match self.config.format {
            Format::Csv => format!("{stem}.csv"),
            Format::Json => format!("{stem}.json"),
        }
    }

    fn write_table(&mut self, stem: &str, table: &Table) -> Result<(), Failure> {
        let name = self.table_name(stem);
        let path = self.path(&name);
        match self.config.format {
            Format::Csv => table.write_csv(&path),
            Format::Json => table.write_json(&path),
        }
        .map_err(|e| Failure(EXIT_NUMERICAL, format!("{}: {e}", path.display())))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_residual(args, functional::residual)
}

/// As [`run`], with the residual used by the `check` gradient suite replaced.
pub fn run_with_residual<I, T>(args: I, residual: ResidualFn) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = SystemTime::now();
    let clock = Instant::now();

    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let out = config.output_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return EXIT_CONFIG;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    let mut run = Run {
        config,
        out,
        stages: Vec::new(),
        outputs: Vec::new(),
        residual,
    };
    let result = pool.install(|| match &cli.command {
        Command::Expansions => cmd_expansions(&mut run),
        Command::Solve => cmd_solve(&mut run),
        Command::Sweep { params } => cmd_sweep(&mut run, params),
        Command::Check => cmd_check(&mut run),
    });
    let code = match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            run.stage(cli.command.name(), "failed", msg);
            code
        }
    };

    let manifest = RunManifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: &run.config,
        started_unix_seconds: started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0),
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        exit_code: code,
        stages: std::mem::take(&mut run.stages),
        outputs: run.outputs.clone(),
    };
    if let Err(e) = write_json(&run.out.join("manifest.json"), &manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return code.max(EXIT_NUMERICAL);
    }
    code
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_expansions(run: &mut Run) -> Result<i32, Failure> {
    let c = &run.config;
    let p = c.params()?;
    let grid = c.expansion_grid()?;
    let report = bumps::expansion_report(bumps::DEFAULT_CENTER, c.r0, &c.eps_list, &p, grid)?;

    let mut table = Table::new(&["eps", "ln_inv_eps", "dirichlet", "ln_exp_plus", "ln_exp_minus", "I_value"]);
    for r in &report.rows {
        table.push(vec![
            num(r.eps),
            num(r.ln_inv_eps),
            num(r.dirichlet_energy),
            num(r.ln_int_exp_plus),
            num(r.ln_int_exp_minus),
            num(r.i_value),
        ]);
    }
    run.write_table("expansions", &table)?;

    let f = &report.fits;
    let eight_pi = 8.0 * std::f64::consts::PI;
    let slopes = json!({
        "grid_n": grid.n(),
        "r0": report.r0,
        "lambda1": p.lambda1,
        "lambda2": p.lambda2,
        "slope_dirichlet": f.dirichlet.slope,
        "intercept_dirichlet": f.dirichlet.intercept,
        "max_residual_dirichlet": f.dirichlet.max_residual,
        "slope_ln_exp_plus": f.ln_exp_plus.slope,
        "intercept_ln_exp_plus": f.ln_exp_plus.intercept,
        "max_residual_ln_exp_plus": f.ln_exp_plus.max_residual,
        "slope_ln_exp_minus": f.ln_exp_minus.slope,
        "intercept_ln_exp_minus": f.ln_exp_minus.intercept,
        "max_residual_ln_exp_minus": f.ln_exp_minus.max_residual,
        "slope_I": f.i_value.slope,
        "intercept_I": f.i_value.intercept,
        "max_residual_I": f.i_value.max_residual,
        "slope_mt_gap": f.mt_gap.slope,
        "intercept_mt_gap": f.mt_gap.intercept,
        "max_residual_mt_gap": f.mt_gap.max_residual,
        "asymptotic_slope_dirichlet": 4.0 * eight_pi,
        "asymptotic_slope_ln_exp_plus": 2.0,
        "asymptotic_slope_ln_exp_minus": 0.0,
        "asymptotic_slope_I": 2.0 * (eight_pi - p.lambda1),
    });
    let path = run.path("slopes.json");
    write_json(&path, &slopes).map_err(|e| Failure(EXIT_NUMERICAL, e.to_string()))?;
    println!(
        "slopes: dirichlet {:.6} ln_exp_plus {:.6} ln_exp_minus {:.6} I {:.6}",
        f.dirichlet.slope, f.ln_exp_plus.slope, f.ln_exp_minus.slope, f.i_value.slope
    );
    run.stage("expansions", "ok", format!("{} scales", report.rows.len()));
    Ok(EXIT_OK)
}

fn cmd_solve(run: &mut Run) -> Result<i32, Failure> {
    let c = run.config.clone();
    let p = c.params()?;
    let grid = c.grid()?;
    let verdict = diagnostics::in_lambda(&p);
    if !verdict.in_region {
        run.stage("region", "outside", format!("margin {:e}", verdict.margin));
        return Err(Error::OutsideRegion(p.lambda1, p.lambda2).into());
    }
    run.stage("region", "ok", format!("margin {:e}", verdict.margin));

    let result = minimax::solve(&p, grid, &c.minimax_options(), c.tol_residual)?;
    let mut history = Table::new(&["iter", "max_energy", "grad_norm"]);
    for h in &result.history {
        history.push(vec![h.iter.to_string(), num(h.max_energy), num(h.grad_norm)]);
    }
    run.write_table("history", &history)?;
    run.stage(
        "minimax",
        if result.converged { "converged" } else { "not_converged" },
        format!("{} sweeps, c_est {:.17e}", result.history.len() - 1, result.c_est),
    );

    let refined = result.refined.as_ref().expect("solve refines");
    let u = &refined.field;
    let path = run.path("solution.field");
    let mut bytes = Vec::new();
    u.write_to(&mut bytes)?;
    write_atomic(&path, &bytes).map_err(|e| Failure(EXIT_NUMERICAL, e.to_string()))?;
    run.stage(
        "refine",
        if refined.converged { "converged" } else { "not_converged" },
        format!("residual {:e}", refined.residual),
    );

    let energy = functional::eval_i(u, &p);
    let h1 = torus::h1_norm_sq(u).sqrt();
    let report = diagnostics::concentration_report(u, &p, c.ball_radius)?;
    let summary = json!({
        "lambda1": p.lambda1,
        "lambda2": p.lambda2,
        "grid_n": grid.n(),
        "converged": refined.converged,
        "minimax_converged": result.converged,
        "c_est": result.c_est,
        "sweeps": result.history.len() - 1,
        "seed_scale": result.seed_scale,
        "attempts": result.attempts,
        "residual": refined.residual,
        "descent_iters": refined.descent_iters,
        "newton_iters": refined.newton_iters,
        "h1_norm": h1,
        "I_value": energy.total,
        "mean": u.mean(),
        "sup_plus": report.sup_plus,
        "sup_minus": report.sup_minus,
        "classification": report.classification,
        "peaks": report.peaks,
        "quantization_gaps": report.quantization_gaps,
    });
    let path = run.path("summary.json");
    write_json(&path, &summary).map_err(|e| Failure(EXIT_NUMERICAL, e.to_string()))?;
    println!(
        "c_est {:.10} residual {:.3e} I {:.10} h1_norm {:.6} classification {}",
        result.c_est, refined.residual, energy.total, h1, report.classification
    );
    Ok(if refined.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn read_params_file(path: &Path) -> Result<Vec<Params>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(Failure::config)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["lambda1", "lambda2"] {
        return Err(Failure::config(format!(
            "{}: header must be `lambda1,lambda2`",
            path.display()
        )));
    }
    let mut list = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(Failure::config)?;
        let parse = |i: usize| -> Result<f64, Failure> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Failure::config(format!("row {}: {e}", line + 1)))
        };
        list.push(Params::new(parse(0)?, parse(1)?)?);
    }
    if list.is_empty() {
        return Err(Failure::config(format!("{}: no parameter rows", path.display())));
    }
    Ok(list)
}

fn cmd_sweep(run: &mut Run, params: &Path) -> Result<i32, Failure> {
    let list = read_params_file(params)?;
    let c = run.config.clone();
    let grid = c.grid()?;
    let rows = diagnostics::sweep(&list, grid, &c.minimax_options(), c.tol_residual);

    let mut table = Table::new(&[
        "lambda1",
        "lambda2",
        "in_region",
        "margin",
        "status",
        "converged",
        "c_est",
        "residual",
        "h1_norm",
        "I_value",
        "classification",
        "message",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.params.lambda1),
            num(r.params.lambda2),
            r.region.in_region.to_string(),
            num(r.region.margin),
            r.status.as_str().into(),
            r.converged.to_string(),
            opt_num(r.c_est),
            opt_num(r.residual),
            opt_num(r.h1_norm),
            opt_num(r.i_value),
            r.classification.map(|c| c.as_str().to_string()).unwrap_or_default(),
            r.message.clone().unwrap_or_default(),
        ]);
    }
    run.write_table("sweep", &table)?;
    let all_converged = rows
        .iter()
        .filter(|r| r.region.in_region)
        .all(|r| r.converged);
    run.stage(
        "sweep",
        if all_converged { "ok" } else { "not_converged" },
        format!("{} rows", rows.len()),
    );
    println!("{} rows, all in-region rows converged: {all_converged}", rows.len());
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_check(run: &mut Run) -> Result<i32, Failure> {
    let c = run.config.clone();
    let report = checks::run_checks_with(c.grid()?, &c.params()?, c.seed, run.residual);
    let mut table = Table::new(&["suite", "passed", "samples", "worst", "bound", "detail"]);
    for s in &report.suites {
        println!(
            "{} {:<13} worst {:.6e} bound {:.1e}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.worst,
            s.bound
        );
        table.push(vec![
            s.name.clone(),
            s.passed.to_string(),
            s.samples.to_string(),
            num(s.worst),
            num(s.bound),
            s.detail.clone(),
        ]);
        run.stage(&s.name, if s.passed { "pass" } else { "fail" }, s.detail.clone());
    }
    run.write_table("check", &table)?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}
