use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, UeMetrics};
use crate::linksim::TransmissionRecord;
use crate::policies::Phase;

pub const TRACE_COLUMNS: [&str; 9] = [
    "time_index",
    "ue_id",
    "policy",
    "cqi",
    "offset",
    "mcs",
    "ack",
    "bits",
    "phase",
];

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow<'a> {
    time_index: u64,
    ue_id: u32,
    policy: std::borrow::Cow<'a, str>,
    cqi: u8,
    offset: i32,
    mcs: u8,
    ack: u8,
    bits: u32,
    phase: Phase,
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn writer(path: &Path, columns: &[&str]) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    let file = File::create(path).map_err(io_error(path))?;
    // the header goes out explicitly so an empty stream still gets one
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    w.write_record(columns).map_err(csv_error(path))?;
    Ok(w)
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<(), HarnessError> {
    w.into_inner()
        .map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            source: e.into_error(),
        })?
        .flush()
        .map_err(io_error(path))
}

/// Streams `(policy, record)` pairs to a trace CSV; returns the row count.
pub fn write_traces<'a, I>(path: &Path, records: I) -> Result<u64, HarnessError>
where
    I: IntoIterator<Item = (&'a str, &'a TransmissionRecord)>,
{
    let mut w = writer(path, &TRACE_COLUMNS)?;
    let mut rows = 0;
    for (policy, r) in records {
        w.serialize(TraceRow {
            time_index: r.time_index,
            ue_id: r.ue_id,
            policy: policy.into(),
            cqi: r.cqi_reported,
            offset: r.offset_applied,
            mcs: r.mcs_used,
            ack: u8::from(r.ack),
            bits: r.bits_delivered,
            phase: r.policy_phase,
        })
        .map_err(csv_error(path))?;
        rows += 1;
    }
    finish(w, path)?;
    Ok(rows)
}

pub fn read_traces(path: &Path) -> Result<Vec<(String, TransmissionRecord)>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    check_header(&mut r, path, &TRACE_COLUMNS)?;
    let mut out = Vec::new();
    for row in r.deserialize::<TraceRow<'static>>() {
        let row = row.map_err(csv_error(path))?;
        let ack = match row.ack {
            0 => false,
            1 => true,
            other => {
                return Err(HarnessError::Config(format!(
                    "{}: ack value {other} is not 0/1",
                    path.display()
                )))
            }
        };
        out.push((
            row.policy.into_owned(),
            TransmissionRecord {
                time_index: row.time_index,
                ue_id: row.ue_id,
                cqi_reported: row.cqi,
                offset_applied: row.offset,
                mcs_used: row.mcs,
                ack,
                bits_delivered: row.bits,
                policy_phase: row.phase,
            },
        ));
    }
    Ok(out)
}

fn check_header<R: std::io::Read>(
    r: &mut csv::Reader<R>,
    path: &Path,
    expected: &[&str],
) -> Result<(), HarnessError> {
    let header = r.headers().map_err(csv_error(path))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(HarnessError::Config(format!(
            "{}: unexpected columns `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub const UE_METRICS_COLUMNS: [&str; 12] = [
    "policy",
    "ue_id",
    "target_bler",
    "acks",
    "nacks",
    "bits",
    "offset_sum",
    "rate_sum",
    "exploration_samples",
    "achieved_bler",
    "throughput_mbps",
    "mean_offset",
];

#[derive(Serialize, Deserialize)]
struct UeRow {
    policy: String,
    ue_id: u32,
    target_bler: f64,
    acks: u64,
    nacks: u64,
    bits: u64,
    offset_sum: i64,
    rate_sum: u64,
    exploration_samples: u64,
    // derived; written for readers of the file, ignored when loading
    achieved_bler: f64,
    throughput_mbps: f64,
    mean_offset: f64,
}

pub fn write_ue_metrics(path: &Path, ues: &[UeMetrics]) -> Result<(), HarnessError> {
    let mut w = writer(path, &UE_METRICS_COLUMNS)?;
    for u in ues {
        w.serialize(UeRow {
            policy: u.policy.clone(),
            ue_id: u.ue_id,
            target_bler: u.target_bler,
            acks: u.acks,
            nacks: u.nacks,
            bits: u.bits,
            offset_sum: u.offset_sum,
            rate_sum: u.rate_sum,
            exploration_samples: u.exploration_samples,
            achieved_bler: u.achieved_bler(),
            throughput_mbps: u.throughput_mbps(),
            mean_offset: u.mean_offset(),
        })
        .map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub fn read_ue_metrics(path: &Path) -> Result<Vec<UeMetrics>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    check_header(&mut r, path, &UE_METRICS_COLUMNS)?;
    r.deserialize::<UeRow>()
        .map(|row| {
            let u = row.map_err(csv_error(path))?;
            Ok(UeMetrics {
                policy: u.policy,
                ue_id: u.ue_id,
                target_bler: u.target_bler,
                acks: u.acks,
                nacks: u.nacks,
                bits: u.bits,
                offset_sum: u.offset_sum,
                rate_sum: u.rate_sum,
                exploration_samples: u.exploration_samples,
            })
        })
        .collect()
}
