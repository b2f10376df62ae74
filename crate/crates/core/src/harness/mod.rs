//! Seeded multi-UE experiments, metric aggregation and CSV persistence.
//!
//! Every (policy, UE) pair is simulated independently. A UE's channel and
//! ACK draws depend only on the master seed and the UE id, so all policies
//! face the same link; each policy's own randomness is derived from the
//! master seed, the UE id and the policy label.

mod config;
mod metrics;
mod svg;
mod traces;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    apply_overrides, parse_override, parse_toml, ExperimentConfig, ExplorationConfig, PolicyConfig,
    UeDistribution, DEFAULT_EXPERIMENT,
};
pub use metrics::{
    compute_cdf, summarize_comparison, ComparisonTable, MetricsReport, PolicySummary, UeMetrics,
    REPORT_COLUMNS,
};
pub use svg::render_cdf_svg;
pub use traces::{
    read_traces, read_ue_metrics, write_traces, write_ue_metrics, TRACE_COLUMNS, UE_METRICS_COLUMNS,
};

use crate::bounds::BoundsError;
use crate::linksim::{LinkError, McsTable, TransmissionRecord, UeLink, UeProfile};
use crate::policies::{build_policy, OllaPolicy};
use crate::seed::derive_seed;

pub const TRACES_FILE: &str = "traces.csv";
pub const UE_METRICS_FILE: &str = "ue_metrics.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const COMPARISON_FILE: &str = "comparison.txt";
pub const BLER_CDF_FILE: &str = "bler_cdf.svg";
pub const THROUGHPUT_CDF_FILE: &str = "throughput_cdf.svg";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("policy `{label}`: {reason}")]
    UnknownPolicy { label: String, reason: String },
    #[error(
        "policy `{label}` needs at least {minimum} subframes to finish exploring; duration is {duration}"
    )]
    DurationTooShort {
        label: String,
        minimum: u64,
        duration: u64,
    },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("no run outputs in {dir}: {reason}")]
    MissingOutputs { dir: String, reason: String },
    #[error("cannot build a CDF from no values")]
    EmptyCdf,
    #[error("cannot build a CDF over non-finite value {0}")]
    NonFinite(f64),
}

impl HarnessError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_)
            | HarnessError::UnknownPolicy { .. }
            | HarnessError::DurationTooShort { .. }
            | HarnessError::Bounds(_)
            | HarnessError::Link(LinkError::InvalidProfile(_))
            | HarnessError::Link(LinkError::InvalidTable(_)) => "config",
            HarnessError::Link(_) | HarnessError::Io { .. } | HarnessError::Csv { .. } => "io",
            HarnessError::MissingOutputs { .. } => "usage",
            HarnessError::EmptyCdf | HarnessError::NonFinite(_) => "data",
        }
    }
}

/// Transmission log of one UE under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct UeTrace {
    pub policy: String,
    pub ue_id: u32,
    pub records: Vec<TransmissionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub report: MetricsReport,
    /// Empty unless the config asks for traces.
    pub traces: Vec<UeTrace>,
}

/// Runs `policy` on one UE link for `duration` subframes.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ue(
    label: &str,
    profile: &UeProfile,
    target_bler: f64,
    policy: &mut dyn OllaPolicy,
    table: &McsTable,
    duration: u64,
    cqi_period: u64,
    keep_trace: bool,
) -> (UeMetrics, Vec<TransmissionRecord>) {
    let mut link = UeLink::new(profile.clone(), table, cqi_period);
    let mut m = UeMetrics {
        policy: label.to_string(),
        ue_id: profile.ue_id,
        target_bler,
        acks: 0,
        nacks: 0,
        bits: 0,
        offset_sum: 0,
        rate_sum: 0,
        exploration_samples: 0,
    };
    let mut trace = Vec::with_capacity(if keep_trace { duration as usize } else { 0 });
    for _ in 0..duration {
        let r = link.step(policy);
        if r.ack {
            m.acks += 1;
        } else {
            m.nacks += 1;
        }
        m.bits += u64::from(r.bits_delivered);
        m.offset_sum += i64::from(r.offset_applied);
        m.rate_sum += u64::from(table.rate(r.mcs_used));
        if keep_trace {
            trace.push(r);
        }
    }
    m.exploration_samples = policy.exploration_samples();
    (m, trace)
}

/// Simulates every (policy, UE) pair; output order is canonical
/// (config policy order, then UE id) regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun, HarnessError> {
    config.validate()?;
    let table = config.table()?;
    let profiles: Vec<UeProfile> = (0..config.num_ues).map(|u| config.ue_profile(u)).collect();
    let jobs: Vec<(&PolicyConfig, &UeProfile)> = config
        .policies
        .iter()
        .flat_map(|p| profiles.iter().map(move |u| (p, u)))
        .collect();

    let results: Vec<Result<(UeMetrics, Vec<TransmissionRecord>), HarnessError>> = jobs
        .par_iter()
        .map(|&(p, profile)| {
            let target = p.target_for(profile);
            let params = config.params_for(target)?;
            let seed = derive_seed(config.master_seed, profile.ue_id.into(), &p.label);
            let mut policy = build_policy(p.kind()?, params, &p.options(seed));
            Ok(simulate_ue(
                &p.label,
                profile,
                target,
                policy.as_mut(),
                &table,
                config.duration_subframes,
                config.cqi_period,
                config.write_traces,
            ))
        })
        .collect();

    let mut report = MetricsReport {
        policies: config.policies.iter().map(|p| p.label.clone()).collect(),
        ues: Vec::with_capacity(results.len()),
    };
    let mut traces = Vec::new();
    for r in results {
        let (m, records) = r?;
        if config.write_traces {
            traces.push(UeTrace {
                policy: m.policy.clone(),
                ue_id: m.ue_id,
                records,
            });
        }
        report.ues.push(m);
    }
    Ok(ExperimentRun { report, traces })
}

/// Writes the run's CSVs, comparison table and CDF plots into `dir`.
pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<ComparisonTable, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    if !run.traces.is_empty() {
        write_traces(
            &dir.join(TRACES_FILE),
            run.traces
                .iter()
                .flat_map(|t| t.records.iter().map(move |r| (t.policy.as_str(), r))),
        )?;
    }
    write_ue_metrics(&dir.join(UE_METRICS_FILE), &run.report.ues)?;
    render_outputs(&run.report, dir)
}

/// Runs the experiment and persists it under the config's output directory
/// (or `out` when given).
pub fn run_to_dir(
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<(ExperimentRun, ComparisonTable, PathBuf), HarnessError> {
    let dir = out.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);
    let run = run_experiment(config)?;
    let table = write_run(&run, &dir)?;
    Ok((run, table, dir))
}

/// Reads back the per-UE metrics a run left in `dir`.
pub fn load_report(dir: &Path) -> Result<MetricsReport, HarnessError> {
    let path = dir.join(UE_METRICS_FILE);
    if !path.is_file() {
        return Err(HarnessError::MissingOutputs {
            dir: dir.display().to_string(),
            reason: format!("{UE_METRICS_FILE} not found"),
        });
    }
    let ues = read_ue_metrics(&path)?;
    if ues.is_empty() {
        return Err(HarnessError::MissingOutputs {
            dir: dir.display().to_string(),
            reason: format!("{UE_METRICS_FILE} has no rows"),
        });
    }
    let mut policies: Vec<String> = Vec::new();
    for u in &ues {
        if !policies.contains(&u.policy) {
            policies.push(u.policy.clone());
        }
    }
    Ok(MetricsReport { policies, ues })
}

/// Re-renders the comparison table and CDF plots from a run directory.
pub fn render_report(dir: &Path) -> Result<(MetricsReport, ComparisonTable), HarnessError> {
    let report = load_report(dir)?;
    let table = render_outputs(&report, dir)?;
    Ok((report, table))
}

fn render_outputs(report: &MetricsReport, dir: &Path) -> Result<ComparisonTable, HarnessError> {
    let table = summarize_comparison(report);
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write(REPORT_FILE, table.to_csv())?;
    write(COMPARISON_FILE, table.to_text())?;

    let mut bler = Vec::new();
    let mut thr = Vec::new();
    for p in &report.policies {
        bler.push((p.clone(), report.bler_cdf(p)?));
        thr.push((p.clone(), report.throughput_cdf(p)?));
    }
    write(BLER_CDF_FILE, render_cdf_svg("BLER CDF", "BLER", &bler))?;
    write(
        THROUGHPUT_CDF_FILE,
        render_cdf_svg("Throughput CDF", "throughput (Mbps)", &thr),
    )?;
    Ok(table)
}
