//! Command-line driver: `train`, `verify`, `classical` and `spectrum`.
//!
//! Output files written to the output directory:
//!
//! * `history.csv`: `iteration,cost,gradient_norm,update_norm`, one row per
//!   Adam iteration.
//! * `params.json`: [`ParamsFile`], the final angles nested as
//!   `[input][layer][qubit][angle]`.
//! * `config.json`: the resolved [`RunConfig`].
//! * `report.json`: a [`VerificationReport`].
//!
//! Floats are written in their shortest round-trip form. Exit status is 0 on
//! success, 1 for usage and input errors, 2 for numerical failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{self, AnsatzError, AnsatzShape, ParamSet, Player, TrainConfig, TrainTrace};
use crate::game::{self, GameSpec};
use crate::simulator::prepare_bell_stack;
use crate::verify::{self, VerificationReport, VerifyError};

pub const HISTORY_FILE: &str = "history.csv";
pub const PARAMS_FILE: &str = "params.json";
pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.json";
pub const HISTORY_HEADER: &str = "iteration,cost,gradient_norm,update_norm";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<AnsatzError> for CliError {
    fn from(e: AnsatzError) -> Self {
        match e {
            AnsatzError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Ansatz(inner) => inner.into(),
            VerifyError::CostMismatch { .. } | VerifyError::Game(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// A run counts as converged when its final cost is at most this.
    pub converged_cost: f64,
    pub min_win_rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { converged_cost: -8.9, min_win_rate: 0.98 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub layers: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub shots_per_input: usize,
    pub out_dir: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            seed: t.seed,
            layers: t.layers,
            learning_rate: t.learning_rate,
            iterations: t.iterations,
            shots_per_input: 10_000,
            out_dir: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(format!("invalid config: {m}")));
        if self.layers == 0 {
            return bad("layers must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be positive");
        }
        if self.shots_per_input == 0 {
            return bad("shots_per_input must be positive");
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            seed: self.seed,
            layers: self.layers,
            ..TrainConfig::default()
        }
    }
}

type Nested = Vec<Vec<Vec<[f64; 3]>>>;

/// On-disk parameter document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub layers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Cost of these parameters when they were written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_cost: Option<f64>,
    /// Alice's angles, `[row][layer][qubit][angle]`.
    pub theta: Nested,
    /// Bob's angles, `[column][layer][qubit][angle]`.
    pub phi: Nested,
}

impl ParamsFile {
    pub fn from_trace(trace: &TrainTrace) -> Self {
        let p = &trace.final_params;
        Self {
            layers: p.shape().layers,
            iterations: Some(trace.iterations()),
            final_cost: Some(trace.final_cost),
            theta: p.nested(Player::Alice),
            phi: p.nested(Player::Bob),
        }
    }

    pub fn params(&self) -> Result<ParamSet, CliError> {
        ParamSet::from_nested(AnsatzShape::new(self.layers), &self.theta, &self.phi)
            .map_err(|e| CliError::Usage(format!("parameter shape: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read parameters {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid parameters {}: {e}", path.display())))
    }
}

pub fn history_csv(trace: &TrainTrace) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for t in 0..trace.iterations() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            t, trace.costs[t], trace.gradient_norms[t], trace.update_norms[t]
        );
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes all files only after every document has been rendered.
fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "magic-square", version, about = "Variational strategies for the 3x3 magic square game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the six local unitaries with Adam
    Train {
        /// JSON run configuration
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: config out_dir, else "out")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify a parameter file and write report.json
    Verify {
        /// params.json written by train
        #[arg(long)]
        params: PathBuf,
        /// JSON run configuration
        #[arg(long)]
        config: Option<PathBuf>,
        /// Shots per input pair, overrides the config
        #[arg(long)]
        shots: Option<usize>,
        /// Sampling seed, overrides the config
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config out_dir, else "out")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaust classical deterministic strategies
    Classical,
    /// Spectrum of the value Hamiltonian
    Spectrum,
}

fn resolve_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn cmd_train(
    config_path: Option<&Path>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let mut config = resolve_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = out_dir(out, &config);
    let trace = ansatz::train(&config.train_config())?;
    let files = [
        (HISTORY_FILE, history_csv(&trace)),
        (PARAMS_FILE, to_json(&ParamsFile::from_trace(&trace))),
        (CONFIG_FILE, to_json(&config)),
    ];
    write_outputs(&dir, &files)?;
    let value = game::quantum_game_value(trace.final_cost).map_err(|e| CliError::Numerical(e.to_string()))?;
    let _ = writeln!(stdout, "final cost: {}", trace.final_cost);
    let _ = writeln!(stdout, "game value: {value}");
    let _ = writeln!(stdout, "wrote {}", dir.display());
    Ok(())
}

pub fn cmd_verify(
    params_path: &Path,
    config_path: Option<&Path>,
    shots: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<VerificationReport, CliError> {
    let file = ParamsFile::load(params_path)?;
    let config = resolve_config(config_path)?;
    if config_path.is_some() && config.layers != file.layers {
        return Err(CliError::Usage(format!(
            "parameter file has {} layers but the config specifies {}",
            file.layers, config.layers
        )));
    }
    let shots = shots.unwrap_or(config.shots_per_input);
    if shots == 0 {
        return Err(CliError::Usage("--shots must be positive".into()));
    }
    let params = file.params()?;
    let trace = TrainTrace::untrained(params)?;
    if let Some(recorded) = file.final_cost {
        if (recorded - trace.final_cost).abs() > 1e-9 {
            return Err(CliError::Usage(format!(
                "recorded cost {recorded} does not match recomputed cost {}",
                trace.final_cost
            )));
        }
    }
    let mut report = verify::verify_trace(
        &prepare_bell_stack(),
        &GameSpec::magic_square(),
        &trace,
        shots,
        seed.unwrap_or(config.seed),
    )?;
    report.iterations = file.iterations.unwrap_or(0);
    let dir = out_dir(out, &config);
    write_outputs(&dir, &[(REPORT_FILE, to_json(&report))])?;

    let tol = config.tolerances;
    let verdict = |ok: bool| if ok { "ok" } else { "below threshold" };
    let _ = writeln!(stdout, "final cost: {} ({})", report.final_cost, verdict(report.final_cost <= tol.converged_cost));
    let _ = writeln!(stdout, "game value: {}", report.game_value);
    let _ = writeln!(
        stdout,
        "sampled win rate: {} ({})",
        report.win_rates.overall,
        verdict(report.win_rates.overall >= tol.min_win_rate)
    );
    let _ = writeln!(stdout, "wrote {}", dir.join(REPORT_FILE).display());
    Ok(report)
}

pub fn cmd_classical(stdout: &mut dyn Write) -> Result<(), CliError> {
    let c = game::classical_value_bruteforce();
    let decimal = *c.value.numer() as f64 / *c.value.denom() as f64;
    let _ = writeln!(stdout, "classical value: {} ({decimal})", c.value);
    let _ = writeln!(stdout, "optimal strategy pairs: {} of {}", c.optimal_pairs, c.strategy_pairs);
    Ok(())
}

pub fn cmd_spectrum(stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = game::spectrum(&GameSpec::magic_square(), 1e-9);
    let _ = writeln!(stdout, "min eigenvalue: {}", s.min);
    let _ = writeln!(stdout, "max eigenvalue: {}", s.max);
    let _ = writeln!(stdout, "ground space dimension: {}", s.ground_dimension);
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 1;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    let result = match cli.command {
        Command::Train { config, out, seed } => cmd_train(config.as_deref(), out, seed, stdout),
        Command::Verify { params, config, shots, seed, out } => {
            cmd_verify(&params, config.as_deref(), shots, seed, out, stdout).map(|_| ())
        }
        Command::Classical => cmd_classical(stdout),
        Command::Spectrum => cmd_spectrum(stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
