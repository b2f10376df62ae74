use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bounds::ExplorationParams;
use crate::linksim::{McsTable, UeProfile};
use crate::policies::{PolicyKind, PolicyOptions};
use crate::seed::derive_seed;

/// Configuration bundled with the crate: 45 UEs, 5000 subframes, the four
/// schemes of the comparison.
pub const DEFAULT_EXPERIMENT: &str = include_str!("../../config/default.toml");

fn default_cqi_period() -> u64 {
    5
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("olla-out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub num_ues: u32,
    pub duration_subframes: u64,
    #[serde(default = "default_cqi_period")]
    pub cqi_period: u64,
    /// MCS table file; the bundled table when absent.
    #[serde(default)]
    pub mcs_table: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub write_traces: bool,
    pub exploration: ExplorationConfig,
    pub ue_profiles: UeDistribution,
    pub policies: Vec<PolicyConfig>,
}

/// Tolerance, failure budget and offset range shared by the PAC policies;
/// the target comes from each policy (or each UE).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub big_l: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeDistribution {
    /// Mean SINR drawn uniformly from `[lo, hi]` dB.
    pub mean_sinr_db: [f64; 2],
    /// CQI bias drawn uniformly from the integers in `[lo, hi]`.
    pub cqi_bias: [i32; 2],
    pub ar_coefficient: f64,
    pub sinr_std_db: f64,
    pub target_bler: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub label: String,
    pub kind: String,
    /// Overrides the per-UE target.
    #[serde(default)]
    pub target_bler: Option<f64>,
    #[serde(default)]
    pub switching_window: Option<usize>,
    #[serde(default)]
    pub nack_run: Option<u32>,
    #[serde(default)]
    pub ack_run: Option<u32>,
}

impl PolicyConfig {
    pub fn kind(&self) -> Result<PolicyKind, HarnessError> {
        self.kind
            .parse()
            .map_err(|reason| HarnessError::UnknownPolicy {
                label: self.label.clone(),
                reason,
            })
    }

    pub fn options(&self, seed: u64) -> PolicyOptions {
        let d = PolicyOptions::default();
        PolicyOptions {
            switching_window: self.switching_window,
            nack_run: self.nack_run.unwrap_or(d.nack_run),
            ack_run: self.ack_run.unwrap_or(d.ack_run),
            seed,
        }
    }

    pub fn target_for(&self, profile: &UeProfile) -> f64 {
        self.target_bler.unwrap_or(profile.target_bler)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        Self::from_value(parse_toml(text)?)
    }

    /// Parses `text` and applies `key=value` overrides before validation.
    pub fn from_toml_with_overrides(
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self, HarnessError> {
        let mut value = parse_toml(text)?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self, HarnessError> {
        let config: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(DEFAULT_EXPERIMENT).expect("bundled config is valid")
    }

    /// Loads a config file with optional `key=value` overrides; a relative
    /// `mcs_table` path is taken relative to the file.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_toml_with_overrides(&text, overrides)?;
        if let (Some(table), Some(dir)) = (&config.mcs_table, path.parent()) {
            if table.is_relative() {
                config.mcs_table = Some(dir.join(table));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.num_ues == 0 {
            return bad("num_ues must be positive".into());
        }
        if self.duration_subframes == 0 {
            return bad("duration_subframes must be positive".into());
        }
        if self.cqi_period == 0 {
            return bad("cqi_period must be positive".into());
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        let d = &self.ue_profiles;
        if d.mean_sinr_db[0] > d.mean_sinr_db[1] || d.cqi_bias[0] > d.cqi_bias[1] {
            return bad("ue_profiles ranges must be [lo, hi] with lo <= hi".into());
        }
        // bounds of the profile ranges are checked through two sample profiles
        for bias in d.cqi_bias {
            self.profile_template(bias).validate()?;
        }

        let mut labels = HashSet::new();
        for p in &self.policies {
            if !labels.insert(p.label.as_str()) {
                return bad(format!("duplicate policy label `{}`", p.label));
            }
            if p.label.is_empty() || p.label.contains([',', '"', '\n']) {
                return bad(format!("policy label `{}` is not CSV-safe", p.label));
            }
            let kind = p.kind()?;
            let target = p.target_bler.unwrap_or(d.target_bler);
            let params = self.params_for(target)?;
            let minimum = kind.minimum_duration(&params);
            if self.duration_subframes < minimum {
                return Err(HarnessError::DurationTooShort {
                    label: p.label.clone(),
                    minimum,
                    duration: self.duration_subframes,
                });
            }
            if p.nack_run == Some(0) || p.ack_run == Some(0) {
                return bad(format!("run thresholds of `{}` must be positive", p.label));
            }
        }
        Ok(())
    }

    pub fn params_for(&self, target_bler: f64) -> Result<ExplorationParams, HarnessError> {
        let e = &self.exploration;
        Ok(ExplorationParams::from_target_bler(
            target_bler,
            e.epsilon,
            e.delta,
            e.big_l,
        )?)
    }

    pub fn table(&self) -> Result<McsTable, HarnessError> {
        match &self.mcs_table {
            None => Ok(McsTable::default()),
            Some(p) => Ok(McsTable::load(p)?),
        }
    }

    fn profile_template(&self, cqi_bias: i32) -> UeProfile {
        let d = &self.ue_profiles;
        UeProfile {
            ue_id: 0,
            mean_sinr: d.mean_sinr_db[0],
            sinr_ar_coefficient: d.ar_coefficient,
            sinr_innovation_std: d.sinr_std_db,
            cqi_bias,
            target_bler: d.target_bler,
            seed: 0,
        }
    }

    /// Profile of UE `ue_id`; depends only on the master seed and the id, so
    /// every policy sees the same population.
    pub fn ue_profile(&self, ue_id: u32) -> UeProfile {
        let d = &self.ue_profiles;
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.master_seed, ue_id.into(), "profile"));
        let [lo, hi] = d.mean_sinr_db;
        let mean_sinr = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let [blo, bhi] = d.cqi_bias;
        let cqi_bias = rng.random_range(blo..=bhi);
        UeProfile {
            ue_id,
            mean_sinr,
            cqi_bias,
            seed: derive_seed(self.master_seed, ue_id.into(), "link"),
            ..self.profile_template(cqi_bias)
        }
    }
}

pub fn parse_toml(text: &str) -> Result<toml::Value, HarnessError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
    Ok(toml::Value::Table(table))
}

/// Parses `KEY=VALUE`.
pub fn parse_override(raw: &str) -> Result<(String, String), HarnessError> {
    match raw.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(HarnessError::Config(format!(
            "override `{raw}` is not of the form key=value"
        ))),
    }
}

fn override_value(raw: &str) -> toml::Value {
    // anything that is not a TOML literal is taken as a bare string
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies dotted-path overrides (`exploration.big_l=4`,
/// `policies.0.target_bler=0.12`) to a parsed config tree.
pub fn apply_overrides(
    root: &mut toml::Value,
    overrides: &[(String, String)],
) -> Result<(), HarnessError> {
    for (key, raw) in overrides {
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut *root;
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            node = match node {
                toml::Value::Table(t) => {
                    if last {
                        t.insert(part.to_string(), override_value(raw));
                        break;
                    }
                    t.entry(part.to_string())
                        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                }
                toml::Value::Array(items) => {
                    let idx: usize = part.parse().map_err(|_| {
                        HarnessError::Config(format!("`{part}` in `{key}` is not an index"))
                    })?;
                    let len = items.len();
                    let slot = items.get_mut(idx).ok_or_else(|| {
                        HarnessError::Config(format!("index {idx} in `{key}` out of range ({len})"))
                    })?;
                    if last {
                        *slot = override_value(raw);
                        break;
                    }
                    slot
                }
                _ => {
                    return Err(HarnessError::Config(format!(
                        "`{key}` descends into a non-table value"
                    )))
                }
            };
        }
    }
    Ok(())
}
