use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Counters of one UE under one policy. Derived rates are computed on
/// demand so a report read back from CSV compares equal to the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeMetrics {
    pub policy: String,
    pub ue_id: u32,
    pub target_bler: f64,
    pub acks: u64,
    pub nacks: u64,
    pub bits: u64,
    pub offset_sum: i64,
    /// Sum of the table rate of every MCS used, delivered or not.
    pub rate_sum: u64,
    pub exploration_samples: u64,
}

impl UeMetrics {
    pub fn transmissions(&self) -> u64 {
        self.acks + self.nacks
    }

    /// `nacks / (acks + nacks)`; zero for an empty run.
    pub fn achieved_bler(&self) -> f64 {
        ratio(self.nacks as f64, self.transmissions())
    }

    /// Delivered bits per subframe, scaled to Mbps at 1000 subframes/s.
    pub fn throughput_mbps(&self) -> f64 {
        ratio(self.bits as f64, self.transmissions()) * 1e3 / 1e6
    }

    pub fn mean_offset(&self) -> f64 {
        ratio(self.offset_sum as f64, self.transmissions())
    }

    /// Average table rate of the MCS used, in bits per transmission.
    pub fn mean_rate_bits(&self) -> f64 {
        ratio(self.rate_sum as f64, self.transmissions())
    }

    pub fn within_target(&self) -> bool {
        self.achieved_bler() <= self.target_bler
    }
}

fn ratio(num: f64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Per-UE metrics of every policy of a run, in canonical (policy, UE) order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Policy labels in config order.
    pub policies: Vec<String>,
    pub ues: Vec<UeMetrics>,
}

impl MetricsReport {
    pub fn for_policy<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a UeMetrics> + 'a {
        self.ues.iter().filter(move |u| u.policy == label)
    }

    pub fn summary(&self, label: &str) -> Option<PolicySummary> {
        let rows: Vec<&UeMetrics> = self.for_policy(label).collect();
        if rows.is_empty() {
            return None;
        }
        let f = |g: fn(&UeMetrics) -> f64| mean(rows.iter().map(|u| g(u)));
        Some(PolicySummary {
            policy: label.to_string(),
            num_ues: rows.len(),
            avg_throughput_mbps: f(UeMetrics::throughput_mbps),
            avg_bler: f(UeMetrics::achieved_bler),
            avg_offset: f(UeMetrics::mean_offset),
            avg_exploration_samples: f(|u| u.exploration_samples as f64),
            avg_rate_bits: f(UeMetrics::mean_rate_bits),
            fraction_within_target: f(|u| f64::from(u8::from(u.within_target()))),
        })
    }

    pub fn bler_cdf(&self, label: &str) -> Result<Vec<(f64, f64)>, HarnessError> {
        compute_cdf(
            &self
                .for_policy(label)
                .map(UeMetrics::achieved_bler)
                .collect::<Vec<_>>(),
        )
    }

    pub fn throughput_cdf(&self, label: &str) -> Result<Vec<(f64, f64)>, HarnessError> {
        compute_cdf(
            &self
                .for_policy(label)
                .map(UeMetrics::throughput_mbps)
                .collect::<Vec<_>>(),
        )
    }
}

/// Per-policy averages over UEs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub num_ues: usize,
    pub avg_throughput_mbps: f64,
    pub avg_bler: f64,
    pub avg_offset: f64,
    pub avg_exploration_samples: f64,
    pub avg_rate_bits: f64,
    pub fraction_within_target: f64,
}

/// Empirical CDF at the sorted distinct sample points; tied values collapse
/// onto one point carrying the cumulative fraction after the tie.
pub fn compute_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptyCdf);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(HarnessError::NonFinite(*v));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.into_iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => points.push((v, frac)),
        }
    }
    Ok(points)
}

/// Table of per-policy averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<PolicySummary>,
}

pub const REPORT_COLUMNS: [&str; 5] = [
    "policy",
    "avg_throughput_mbps",
    "avg_bler",
    "avg_offset",
    "avg_exploration_samples",
];

pub fn summarize_comparison(report: &MetricsReport) -> ComparisonTable {
    ComparisonTable {
        rows: report
            .policies
            .iter()
            .filter_map(|p| report.summary(p))
            .collect(),
    }
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&PolicySummary> {
        self.rows.iter().find(|r| r.policy == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.policy,
                r.avg_throughput_mbps,
                r.avg_bler,
                r.avg_offset,
                r.avg_exploration_samples
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.policy.len())
            .chain([6])
            .max()
            .unwrap_or(6);
        let mut out = format!(
            "{:<width$}  {:>4}  {:>10}  {:>8}  {:>10}  {:>11}  {:>10}  {:>9}\n",
            "policy", "ues", "thr (Mbps)", "BLER", "offset", "explore", "rate (b)", "<= target"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>10.4}  {:>8.4}  {:>10.3}  {:>11.1}  {:>10.1}  {:>9.3}",
                r.policy,
                r.num_ues,
                r.avg_throughput_mbps,
                r.avg_bler,
                r.avg_offset,
                r.avg_exploration_samples,
                r.avg_rate_bits,
                r.fraction_within_target
            );
        }
        out
    }
}
