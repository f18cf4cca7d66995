//! Command-line definitions and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use svtk_core::{MassConvention, RateFunction};

use crate::commands;
use crate::error::{exit, CliError, Result};
use crate::io::OutputDir;
use crate::manifest::RunManifest;
use crate::parse;

#[derive(Debug, Parser)]
#[command(name = "svtk", version, about = "Numerics for supplementary-variable reliability models")]
pub struct Cli {
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, env = "SVTK_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Closed-form fields of the constant-rate processing/repair model.
    Eval(EvalArgs),
    /// Laplace transforms in time of the processing/repair fields.
    Transform(TransformArgs),
    /// Fields of the processing/repair model by numerical Laplace inversion.
    Invert(InvertArgs),
    /// Characteristics solver for a registry or JSON model.
    Solve(SolveArgs),
    /// Monte Carlo simulation of the processing/repair process.
    Simulate(SimulateArgs),
    /// Cross-check two or more solution methods.
    Compare(CompareArgs),
    /// Registry models and their parameters.
    ListModels,
    /// Write a model as JSON.
    Export(ExportArgs),
    /// Rerun a manifest and check that its outputs are reproduced exactly.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Transform(_) => "transform",
            Command::Invert(_) => "invert",
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::ListModels => "list-models",
            Command::Export(_) => "export",
            Command::Replay(_) => "replay",
        }
    }
}

fn convention(s: &str) -> std::result::Result<MassConvention, String> {
    s.parse().map_err(|e: svtk_core::Error| e.to_string())
}

/// Hazards of the processing/repair model.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct HazardArgs {
    /// Constant breakdown, completion and repair rates.
    #[arg(long, value_name = "LAMBDA,MU,ETA", value_parser = parse::constant_triple)]
    pub rates: Option<[f64; 3]>,
    /// Breakdown hazard: a number, KIND:P1,P2,.. (weibull:SHAPE,SCALE, pwl:X0,R0,X1,R1,..) or JSON.
    #[arg(long, value_parser = parse::rate)]
    pub lambda: Option<RateFunction>,
    /// Completion hazard, same forms as --lambda.
    #[arg(long, value_parser = parse::rate)]
    pub mu: Option<RateFunction>,
    /// Repair hazard, same forms as --lambda.
    #[arg(long, value_parser = parse::rate)]
    pub eta: Option<RateFunction>,
    /// Registry name or JSON file of a two-component processing/repair model.
    #[arg(long)]
    pub model: Option<String>,
    /// Registry parameter override KEY=VALUE (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse::key_value)]
    pub params: Vec<(String, f64)>,
}

impl HazardArgs {
    pub fn resolve(&self) -> Result<svtk_core::LiCaoRates> {
        parse::licao_rates(self.rates, [&self.lambda, &self.mu, &self.eta], self.model.as_deref(), &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Constant breakdown, completion and repair rates.
    #[arg(long, required = true, value_name = "LAMBDA,MU,ETA", value_parser = parse::constant_triple)]
    pub rates: Option<[f64; 3]>,
    /// Times, comma separated.
    #[arg(long = "t", required = true, value_delimiter = ',', value_parser = parse::number)]
    pub times: Vec<f64>,
    /// Ages as START:STOP:STEP or a comma list; default 0:max(t):0.01.
    #[arg(long)]
    pub x_grid: Option<String>,
    #[arg(long, default_value = "probabilistic", value_parser = convention)]
    pub convention: MassConvention,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TransformArgs {
    #[command(flatten)]
    pub hazards: HazardArgs,
    /// Ages, comma separated.
    #[arg(long = "x", required = true, value_delimiter = ',', value_parser = parse::number)]
    pub ages: Vec<f64>,
    /// Transform variables, comma separated; complex values as 1+2i.
    #[arg(long = "s", required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub s: Vec<String>,
    #[arg(long, default_value = "probabilistic", value_parser = convention)]
    pub convention: MassConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvertMethod {
    Euler,
    Stehfest,
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InvertArgs {
    #[command(flatten)]
    pub hazards: HazardArgs,
    /// Ages as START:STOP:STEP or a comma list.
    #[arg(long, required = true)]
    pub x_grid: String,
    /// Times, comma separated.
    #[arg(long = "t", required = true, value_delimiter = ',', value_parser = parse::number)]
    pub times: Vec<f64>,
    #[arg(long, value_enum, default_value = "euler")]
    pub method: InvertMethod,
    /// Euler terms M.
    #[arg(long, default_value_t = 20)]
    pub euler_m: usize,
    /// Gaver-Stehfest terms (even, 8 to 20).
    #[arg(long, default_value_t = 14)]
    pub gs_terms: usize,
    /// Points with |t - x| below this are reported as excluded.
    #[arg(long, default_value = "0.05", value_parser = parse::number)]
    pub min_gap: f64,
    #[arg(long, default_value = "probabilistic", value_parser = convention)]
    pub convention: MassConvention,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Registry name or path to a JSON model.
    #[arg(long)]
    pub model: String,
    /// Registry parameter override KEY=VALUE (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse::key_value)]
    pub params: Vec<(String, f64)>,
    /// Final time.
    #[arg(long = "T", value_name = "T", value_parser = parse::number)]
    pub t_final: f64,
    /// Grid spacing and time step.
    #[arg(long, default_value = "1/256", value_parser = parse::number)]
    pub dx: f64,
    /// End of the age grid; default max(4T, 20).
    #[arg(long, value_parser = parse::number)]
    pub x_max: Option<f64>,
    #[arg(long, default_value = "probabilistic", value_parser = convention)]
    pub convention: MassConvention,
    /// Number of snapshots written after the initial state.
    #[arg(long, default_value_t = 20)]
    pub snapshots: usize,
    /// Write every k-th grid node; default keeps about 400 nodes.
    #[arg(long)]
    pub x_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub hazards: HazardArgs,
    /// Number of trajectories.
    #[arg(long, default_value = "100000", value_parser = parse::count)]
    pub n: u64,
    /// Random seed; required so that every run is reproducible.
    #[arg(long, required = true)]
    pub seed: Option<u64>,
    /// Query times as START:STOP:STEP or a comma list.
    #[arg(long, required = true)]
    pub t_grid: String,
    /// Age histogram bins on [0, horizon].
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Simulation horizon; default the largest query time.
    #[arg(long, value_parser = parse::number)]
    pub horizon: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Pde,
    Inversion,
    Montecarlo,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Pde => "pde",
            Method::Inversion => "inversion",
            Method::Montecarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub hazards: HazardArgs,
    /// Methods to compare, comma separated (at least two).
    #[arg(long, required = true, value_enum, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Comparison time.
    #[arg(long = "t", default_value = "1", value_parser = parse::number)]
    pub t: f64,
    /// Solver grid spacing.
    #[arg(long, default_value = "1/512", value_parser = parse::number)]
    pub dx: f64,
    /// Monte Carlo trajectories.
    #[arg(long, default_value = "1e6", value_parser = parse::count)]
    pub n: u64,
    /// Monte Carlo seed; required when montecarlo is selected.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Inversion probe ages, evenly spaced on [0, t - 0.25].
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    /// Relative tolerance for solver comparisons.
    #[arg(long, default_value = "0.02", value_parser = parse::number)]
    pub pde_tol: f64,
    /// Absolute tolerance for inversion against the closed form.
    #[arg(long, default_value = "1e-5", value_parser = parse::number)]
    pub inversion_tol: f64,
    /// z-score limit for Monte Carlo comparisons.
    #[arg(long, default_value = "3", value_parser = parse::number)]
    pub z: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ExportArgs {
    /// Registry name or path to a JSON model.
    #[arg(long)]
    pub model: String,
    /// Registry parameter override KEY=VALUE (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse::key_value)]
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

/// What a subcommand reports back after writing its outputs.
#[derive(Debug, Default)]
pub struct RunStatus {
    pub seed: Option<u64>,
    /// Failure detected after the outputs were written (a tolerance breach);
    /// the manifest is still written.
    pub failure: Option<CliError>,
}

/// Runs one command into `out_dir` and writes its manifest.
pub fn execute(command: &Command, out_dir: PathBuf) -> Result<RunManifest> {
    if let Command::Replay(args) = command {
        return replay(args, out_dir);
    }
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    let status = commands::run(command, &mut out)?;
    let code = status.failure.as_ref().map_or(exit::SUCCESS, CliError::exit_code);
    let params = serde_json::to_value(command).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = RunManifest::write(&out, command.name(), params, status.seed, start.elapsed().as_secs_f64(), code)?;
    match status.failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn replay(args: &ReplayArgs, out_dir: PathBuf) -> Result<RunManifest> {
    let original = RunManifest::read(&args.manifest)?;
    let command: Command = serde_json::from_value(original.parameters.clone())
        .map_err(|e| CliError::Usage(format!("{}: cannot rebuild the command: {e}", args.manifest.display())))?;
    if matches!(command, Command::Replay(_)) {
        return Err(CliError::Usage("a replay manifest cannot be replayed".into()));
    }
    let rerun = match execute(&command, out_dir.clone()) {
        Ok(m) => m,
        // a recorded tolerance breach is reproduced, not a replay failure
        Err(e) if e.exit_code() == original.exit_code && original.exit_code != exit::SUCCESS => {
            RunManifest::read(&out_dir.join(RunManifest::file_name(command.name())))?
        }
        Err(e) => return Err(e),
    };
    let bad = original.mismatches(&rerun);
    if !bad.is_empty() {
        return Err(CliError::Tolerance(format!("replay differs from the manifest in: {}", bad.join(", "))));
    }
    println!("replay reproduced {} output(s) exactly", rerun.outputs.len());
    Ok(rerun)
}

/// Entry point used by the binary; never panics on bad input.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };
    match execute(&cli.command, cli.out_dir) {
        Ok(_) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("svtk: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
