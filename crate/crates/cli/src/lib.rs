//! Command-line front end: verification suites with JSON reports, trajectory
//! simulation to CSV, and closure-relation checks.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or configuration
//! error, 3 runtime divergence.

pub mod config;
pub mod report;
pub mod sample;
pub mod simulate;
pub mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gaudin_core::dynamics::{ClosureOptions, closure_residual, on_shell_lagrangian};
use thiserror::Error;

use config::{ModelChoice, Purpose, RunConfig};
use report::{ClosureJson, ReportJson};
use suites::Suite;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integration diverged: {0}")]
    Diverged(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Diverged(_) => EXIT_DIVERGED,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gaudin", version, about = "Cyclotomic Gaudin models: verification, simulation and closure checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification suite and emit a JSON report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Integrate a multi-time schedule and emit the trajectory as CSV.
    Simulate {
        /// Comma-separated `p:r:duration` segments, e.g. `1:0:1.0,1:1:0.5`.
        #[arg(long, allow_hyphen_values = true)]
        schedule: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the closure relation for a pair of flows and emit JSON.
    Closure {
        /// Two flows `p:r,p:r`, e.g. `1:0,1:1`.
        #[arg(long, allow_hyphen_values = true)]
        pair: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Flags shared by all commands; each overrides the configuration file.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    /// Cyclic order `T`.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Number of marked orbits for generic Gaudin data.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Marked point `re:im`; repeat for several.
    #[arg(long = "zeta", value_parser = parse_complex, allow_hyphen_values = true)]
    pub zetas: Vec<[f64; 2]>,
    /// Comma-separated constants `re:im`.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    pub c: Option<Vec<[f64; 2]>>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest `p` in the hierarchy.
    #[arg(long)]
    pub depth: Option<usize>,
    /// RK4 step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Closure finite-difference offset.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Flow time for dynamics checks.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tolerance override `name=value`; repeat for several.
    #[arg(long = "tol", value_parser = parse_tolerance)]
    pub tol: Vec<(String, f64)>,
    /// Initial Toda or coupled positions, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Initial Toda or coupled momenta, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Write the JSON report here as well as to standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the CSV trajectory here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(':').collect();
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{s}` is not re:im"));
    match parts.as_slice() {
        [re] => Ok([parse(re)?, 0.0]),
        [re, im] => Ok([parse(re)?, parse(im)?]),
        _ => Err(format!("`{s}` is not re:im")),
    }
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("`{s}` is not name=value"))?;
    let v = v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl CommonArgs {
    /// Defaults, then the configuration file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.model {
            cfg.model = Some(m);
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if !self.zetas.is_empty() {
            cfg.zetas = Some(self.zetas.clone());
        }
        if let Some(c) = &self.c {
            cfg.c = Some(c.clone());
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.depth {
            cfg.depth = v;
        }
        if let Some(v) = self.h {
            cfg.h = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        for (k, v) in &self.tol {
            cfg.tolerances.set(k, *v)?;
        }
        if let Some(q) = &self.q {
            cfg.state.q = Some(q.clone());
        }
        if let Some(p) = &self.p {
            cfg.state.p = Some(p.clone());
        }
        if let Some(r) = &self.report {
            cfg.report = Some(r.clone());
        }
        if let Some(c) = &self.csv {
            cfg.csv = Some(c.clone());
        }
        Ok(cfg)
    }
}

/// Text written by a command and the exit code it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: Vec<String>,
    pub code: u8,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

pub fn cmd_verify(suite: Suite, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate(Purpose::Verify { allows_order_one: suite.allows_order_one() })?;
    let run = suites::run_suite(suite, cfg)?;
    let json = ReportJson::new(&run.report, cfg);
    let text = to_json(&json);
    if let Some(path) = &cfg.report {
        write_file(path, &text)?;
    }
    let mut stderr = run.diagnostics;
    for c in json.cases.iter().filter(|c| !c.pass) {
        stderr.push(format!("FAIL {}: residual {:e}, tolerance {:e}", c.name, c.residual, c.tol));
    }
    stderr.extend(run.diverged.iter().map(|d| format!("DIVERGED {d}")));
    let code = if !run.diverged.is_empty() {
        EXIT_DIVERGED
    } else if json.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    Ok(Outcome { stdout: text, stderr, code })
}

pub fn cmd_simulate(cfg: &RunConfig, schedule: &str) -> Result<Outcome, CliError> {
    simulate::parse_schedule(schedule)?;
    cfg.validate(Purpose::Integrate)?;
    let out = simulate::simulate(cfg, schedule)?;
    let stdout = match &cfg.csv {
        Some(path) => {
            write_file(path, &out.csv)?;
            String::new()
        }
        None => out.csv,
    };
    Ok(match out.diverged {
        Some(why) => Outcome { stdout, stderr: vec![format!("integration diverged: {why}")], code: EXIT_DIVERGED },
        None => Outcome { stdout, stderr: Vec::new(), code: EXIT_PASS },
    })
}

pub fn cmd_closure(cfg: &RunConfig, pair: &str) -> Result<Outcome, CliError> {
    let (fa, fb) = simulate::parse_pair(pair)?;
    cfg.validate(Purpose::Integrate)?;
    let model = cfg.model.expect("validated");
    let s0 = sample::initial_state(cfg, model).map_err(|e| CliError::Config(e.to_string()))?;
    for f in [fa, fb] {
        s0.check_flow(f).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let runtime = |e: gaudin_core::Error| CliError::Diverged(e.to_string());
    let opts = ClosureOptions { h: cfg.h, delta: cfg.delta, hamiltonian_scale_b: 1.0 };
    let coarse = closure_residual(&s0, fa, fb, opts).map_err(runtime)?;
    let fine = closure_residual(&s0, fa, fb, ClosureOptions { h: cfg.h / 2.0, delta: cfg.delta / 2.0, ..opts })
        .map_err(runtime)?;
    let la = on_shell_lagrangian(&s0, fa).map_err(runtime)?;
    let lb = on_shell_lagrangian(&s0, fb).map_err(runtime)?;
    let tol = cfg.tolerances();
    let pass = coarse.residual <= tol.closure && coarse.ratio >= tol.closure_ratio;
    let json = ClosureJson {
        model: model.name().into(),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        pair: [[fa.p, fa.r], [fb.p, fb.r]],
        h: cfg.h,
        delta: cfg.delta,
        residual: coarse.residual,
        residual_refined: fine.residual,
        raw: coarse.raw,
        raw_half: coarse.raw_half,
        ratio: coarse.ratio,
        lagrangians: [[la.re, la.im], [lb.re, lb.im]],
        tol: tol.closure,
        ratio_tol: tol.closure_ratio,
        pass,
    };
    let text = to_json(&json);
    if let Some(path) = &cfg.report {
        write_file(path, &text)?;
    }
    Ok(Outcome { stdout: text, stderr: Vec::new(), code: if pass { EXIT_PASS } else { EXIT_FAIL } })
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify { suite, common } => cmd_verify(*suite, &common.resolve()?),
        Command::Simulate { schedule, common } => cmd_simulate(&common.resolve()?, schedule),
        Command::Closure { pair, common } => cmd_closure(&common.resolve()?, pair),
    }
}

/// Runs a command, prints its output and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    match execute(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            for line in &out.stderr {
                eprintln!("{line}");
            }
            out.code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
