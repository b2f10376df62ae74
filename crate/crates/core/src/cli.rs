//! Command-line driver behind the `olla` binary.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bounds::{
    max_distinct_arms, per_step_failure_budget, required_samples, sample_denominators, BoundsError,
    ExplorationParams,
};
use crate::harness::{
    self, apply_overrides, parse_override, parse_toml, ExperimentConfig, HarnessError,
    DEFAULT_EXPERIMENT,
};
use crate::synth::{run_synth, SynthConfig, SynthError};

/// Synthetic-bandit config used when `synth` gets no `--config`.
pub const DEFAULT_SYNTH: &str = include_str!("../config/synth.toml");

/// Prefix of every error line the binary prints.
pub const ERROR_PREFIX: &str = "olla-error";

#[derive(Debug, Parser)]
#[command(
    name = "olla",
    version,
    about = "Outer loop link adaptation as a structured bandit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-arm and total exploration sample counts.
    Samples(SamplesArgs),
    /// Seeded PAC trials on a synthetic bandit.
    Synth(RunArgs),
    /// Multi-UE link simulation of the configured policies.
    Sim(RunArgs),
    /// Comparison table and CDF plots of a finished simulation.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SamplesArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "big-l")]
    pub big_l: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config; the bundled one when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replaces the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dotted-path override, e.g. `exploration.big_l=4`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `sim`.
    pub dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Bounds(_) | CliError::Usage(_) => "usage",
            CliError::Harness(e) => e.kind(),
            CliError::Synth(SynthError::Io { .. }) | CliError::Output(_) => "io",
            CliError::Synth(_) => "config",
        }
    }

    /// One line: `olla-error: <kind>: <message>`.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("{ERROR_PREFIX}: {}: {msg}", self.kind())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Samples(a) => cmd_samples(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Sim(a) => cmd_sim(&a, out),
        Command::Report(a) => cmd_report(&a.dir, out),
    }
}

pub fn samples_table(params: &ExplorationParams) -> String {
    let (right, left) = sample_denominators(params);
    let n = required_samples(params);
    let k = max_distinct_arms(params.big_l());
    let mut s = String::new();
    let _ = writeln!(s, "beta                        {}", params.beta());
    let _ = writeln!(s, "epsilon                     {}", params.epsilon());
    let _ = writeln!(s, "delta                       {}", params.delta());
    let _ = writeln!(s, "L                           {}", params.big_l());
    let _ = writeln!(
        s,
        "delta1                      {:.6}",
        per_step_failure_budget(params)
    );
    let _ = writeln!(s, "KL(beta, beta - epsilon)    {right:.6}");
    let _ = writeln!(s, "KL(beta, beta + epsilon)    {left:.6}");
    let _ = writeln!(s, "samples per arm (N)         {n}");
    let _ = writeln!(s, "distinct arms (k)           {k}");
    let _ = writeln!(s, "worst-case total (N*k)      {}", n * u64::from(k));
    s
}

fn cmd_samples(a: &SamplesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ExplorationParams::new(a.beta, a.epsilon, a.delta, a.big_l)?;
    out.write_all(samples_table(&params).as_bytes())?;
    Ok(())
}

fn overrides(a: &RunArgs, seed_key: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut o = a
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = a.seed {
        o.push((seed_key.to_string(), seed.to_string()));
    }
    Ok(o)
}

fn read_config(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))
}

/// Experiment config from CLI arguments.
pub fn experiment_config(a: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let o = overrides(a, "master_seed")?;
    match &a.config {
        Some(path) => {
            read_config(path)?;
            Ok(ExperimentConfig::load(path, &o)?)
        }
        None => Ok(ExperimentConfig::from_toml_with_overrides(
            DEFAULT_EXPERIMENT,
            &o,
        )?),
    }
}

/// Synthetic-bandit config from CLI arguments.
pub fn synth_config(a: &RunArgs) -> Result<SynthConfig, CliError> {
    let o = overrides(a, "seed")?;
    let text = match &a.config {
        Some(path) => read_config(path)?,
        None => DEFAULT_SYNTH.to_string(),
    };
    let mut value = parse_toml(&text)?;
    apply_overrides(&mut value, &o)?;
    Ok(SynthConfig::from_value(value)?)
}

fn cmd_synth(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = synth_config(a)?;
    let report = run_synth(&config)?;
    out.write_all(report.summary().as_bytes())?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|source| SynthError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = dir.join("synth_outcomes.csv");
        report.write_outcomes(&path)?;
        writeln!(out, "outcomes                   {}", path.display())?;
    }
    Ok(())
}

fn cmd_sim(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = experiment_config(a)?;
    let (_, table, dir) = harness::run_to_dir(&config, a.out.as_deref())?;
    out.write_all(table.to_text().as_bytes())?;
    writeln!(out, "outputs in {}", dir.display())?;
    Ok(())
}

fn cmd_report(dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "report directory {} does not exist",
            dir.display()
        )));
    }
    let (_, table) = harness::render_report(dir)?;
    out.write_all(table.to_text().as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_prints_all_rows() {
        let p = ExplorationParams::new(0.9, 0.05, 0.05, 3).unwrap();
        let t = samples_table(&p);
        assert!(t.contains("samples per arm (N)         370"));
        assert!(t.contains("worst-case total (N*k)      1110"));
        assert_eq!(t.lines().count(), 10);
    }

    #[test]
    fn error_line_is_single_line() {
        let e = CliError::Usage("a\nb".into());
        assert_eq!(e.line(), "olla-error: usage: a b");
    }

    #[test]
    fn bundled_synth_parses() {
        let a = RunArgs {
            config: None,
            seed: Some(5),
            out: None,
            set: vec!["trials=3".into()],
        };
        let c = synth_config(&a).unwrap();
        assert_eq!((c.seed, c.trials), (5, 3));
    }
}
