//! Monte-Carlo runs of the policies on synthetic Bernoulli bandits with
//! known per-offset success probabilities.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundsError, ExplorationParams};
use crate::policies::{build_policy, OllaPolicy, Phase, PolicyKind, PolicyOptions};
use crate::seed::derive_seed;

/// Slack on the ε-band edges so a true success exactly on `beta ± epsilon`
/// is not lost to rounding.
pub const BAND_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Bernoulli arms indexed by offset `-L..=L`; each arm draws from its own
/// stream, so two policies run on the same seed see the same outcome for
/// the n-th pull of an arm.
#[derive(Debug, Clone)]
pub struct SyntheticBandit {
    success: Vec<f64>,
    big_l: u32,
    streams: Vec<ChaCha8Rng>,
}

impl SyntheticBandit {
    /// `arm_success[0]` belongs to offset `-L`. Success must not increase
    /// with the offset.
    pub fn new(arm_success: &[f64], seed: u64) -> Result<Self, SynthError> {
        validate_arms(arm_success)?;
        let big_l = (arm_success.len() / 2) as u32;
        let streams = (0..arm_success.len())
            .map(|slot| ChaCha8Rng::seed_from_u64(derive_seed(seed, slot as u64, "arm")))
            .collect();
        Ok(Self {
            success: arm_success.to_vec(),
            big_l,
            streams,
        })
    }

    pub fn big_l(&self) -> u32 {
        self.big_l
    }

    pub fn success(&self, offset: i32) -> f64 {
        self.success[self.slot(offset)]
    }

    pub fn pull(&mut self, offset: i32) -> bool {
        let slot = self.slot(offset);
        self.streams[slot].random::<f64>() < self.success[slot]
    }

    fn slot(&self, offset: i32) -> usize {
        assert!(
            offset.unsigned_abs() <= self.big_l,
            "offset {offset} outside ±{}",
            self.big_l
        );
        (offset + self.big_l as i32) as usize
    }
}

fn validate_arms(arm_success: &[f64]) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::Config(m));
    if arm_success.is_empty() || arm_success.len().is_multiple_of(2) {
        return bad(format!(
            "need an odd number of arms (2L+1), got {}",
            arm_success.len()
        ));
    }
    if let Some(p) = arm_success.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return bad(format!("arm success {p} outside [0, 1]"));
    }
    if let Some(w) = arm_success.windows(2).find(|w| w[1] > w[0]) {
        return bad(format!(
            "arm success must not increase with the offset ({} then {})",
            w[0], w[1]
        ));
    }
    Ok(())
}

/// Whether `selected` is within `epsilon` of `beta`. When no arm lies in the
/// band at all, the arms closest to `beta` are accepted instead.
pub fn is_epsilon_optimal(arm_success: &[f64], selected: f64, beta: f64, epsilon: f64) -> bool {
    let in_band = |p: f64| (p - beta).abs() <= epsilon + BAND_SLACK;
    if arm_success.iter().any(|&p| in_band(p)) {
        in_band(selected)
    } else {
        let best = arm_success
            .iter()
            .map(|p| (p - beta).abs())
            .fold(f64::INFINITY, f64::min);
        (selected - beta).abs() <= best + BAND_SLACK
    }
}

fn default_trials() -> u32 {
    500
}

fn default_max_steps() -> u64 {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Success probability per offset, from `-L` to `L`.
    pub arm_success: Vec<f64>,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub policy: String,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub seed: u64,
    /// Fixed run length. Zero runs PAC policies until exploration ends
    /// (capped at `max_steps`); index policies need a positive value.
    #[serde(default)]
    pub steps: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// Trailing window used to pick the reported arm of index policies;
    /// zero means the whole run.
    #[serde(default)]
    pub tail_window: u64,
    #[serde(default)]
    pub switching_window: Option<usize>,
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let c: Self =
            toml::from_str(text).map_err(|e| SynthError::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_value(value: toml::Value) -> Result<Self, SynthError> {
        let c: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| SynthError::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn kind(&self) -> Result<PolicyKind, SynthError> {
        self.policy.parse().map_err(SynthError::Config)
    }

    pub fn big_l(&self) -> u32 {
        (self.arm_success.len() / 2) as u32
    }

    pub fn params(&self) -> Result<ExplorationParams, SynthError> {
        Ok(ExplorationParams::new(
            self.beta,
            self.epsilon,
            self.delta,
            self.big_l(),
        )?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        validate_arms(&self.arm_success)?;
        self.params()?;
        let kind = self.kind()?;
        if self.trials == 0 {
            return Err(SynthError::Config("trials must be positive".into()));
        }
        if !kind.is_pac() && self.steps == 0 {
            return Err(SynthError::Config(format!(
                "policy `{}` never stops exploring; set steps",
                self.policy
            )));
        }
        if self.tail_window > self.steps && self.steps > 0 {
            return Err(SynthError::Config(format!(
                "tail_window {} exceeds steps {}",
                self.tail_window, self.steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u32,
    pub selected_arm: i32,
    pub true_success: f64,
    pub epsilon_optimal: bool,
    pub exploration_samples: u64,
    pub steps: u64,
    /// Whether exploration ended within the run.
    pub finished: bool,
}

/// Plays `policy` on `bandit` for `steps` steps and returns the play count
/// of each arm over the last `tail` steps.
pub fn tail_play_counts(
    policy: &mut dyn OllaPolicy,
    bandit: &mut SyntheticBandit,
    steps: u64,
    tail: u64,
) -> Vec<u64> {
    let big_l = bandit.big_l();
    let mut counts = vec![0u64; 2 * big_l as usize + 1];
    let tail_start = steps.saturating_sub(tail);
    for t in 0..steps {
        let offset = policy.decide().offset;
        policy.observe(bandit.pull(offset));
        if t >= tail_start {
            counts[(offset + big_l as i32) as usize] += 1;
        }
    }
    counts
}

/// One seeded trial of the configured policy.
pub fn run_trial(config: &SynthConfig, trial: u32) -> Result<TrialOutcome, SynthError> {
    let kind = config.kind()?;
    let params = config.params()?;
    let options = PolicyOptions {
        switching_window: config.switching_window,
        seed: derive_seed(config.seed, trial.into(), "policy"),
        ..PolicyOptions::default()
    };
    let mut policy = build_policy(kind, params, &options);
    let mut bandit = SyntheticBandit::new(
        &config.arm_success,
        derive_seed(config.seed, trial.into(), "bandit"),
    )?;
    let big_l = config.big_l() as i32;

    let (selected_arm, steps) = if config.steps > 0 {
        let tail = if config.tail_window == 0 {
            config.steps
        } else {
            config.tail_window
        };
        let counts = tail_play_counts(policy.as_mut(), &mut bandit, config.steps, tail);
        let arm = policy
            .selected_arm()
            .unwrap_or_else(|| most_played(&counts) - big_l);
        (arm, config.steps)
    } else {
        let mut steps = 0;
        while policy.phase() == Phase::Exploring && steps < config.max_steps {
            let offset = policy.decide().offset;
            policy.observe(bandit.pull(offset));
            steps += 1;
        }
        let arm = policy
            .selected_arm()
            .unwrap_or_else(|| policy.decide().offset);
        (arm, steps)
    };

    let true_success = bandit.success(selected_arm);
    Ok(TrialOutcome {
        trial,
        selected_arm,
        true_success,
        epsilon_optimal: is_epsilon_optimal(
            &config.arm_success,
            true_success,
            config.beta,
            config.epsilon,
        ),
        exploration_samples: policy.exploration_samples(),
        steps,
        finished: policy.phase() != Phase::Exploring,
    })
}

/// First slot with the highest count.
fn most_played(counts: &[u64]) -> i32 {
    let max = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == max).unwrap_or(0) as i32
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub policy: String,
    pub outcomes: Vec<TrialOutcome>,
}

impl SynthReport {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn epsilon_optimal_frequency(&self) -> f64 {
        let hits = self.outcomes.iter().filter(|o| o.epsilon_optimal).count();
        hits as f64 / self.outcomes.len() as f64
    }

    pub fn mean_exploration_samples(&self) -> f64 {
        let total: u64 = self.outcomes.iter().map(|o| o.exploration_samples).sum();
        total as f64 / self.outcomes.len() as f64
    }

    pub fn total_exploration_samples(&self) -> u64 {
        self.outcomes.iter().map(|o| o.exploration_samples).sum()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "policy                     {}", self.policy);
        let _ = writeln!(s, "trials                     {}", self.trials());
        let _ = writeln!(
            s,
            "epsilon-optimal frequency  {:.4}",
            self.epsilon_optimal_frequency()
        );
        let _ = writeln!(
            s,
            "mean exploration samples   {:.1}",
            self.mean_exploration_samples()
        );
        let unfinished = self.outcomes.iter().filter(|o| !o.finished).count();
        if unfinished > 0 {
            let _ = writeln!(s, "unfinished trials          {unfinished}");
        }
        s
    }

    pub fn outcomes_csv(&self) -> String {
        let mut s = String::from(
            "trial,selected_arm,true_success,epsilon_optimal,exploration_samples,steps,finished\n",
        );
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                o.trial,
                o.selected_arm,
                o.true_success,
                u8::from(o.epsilon_optimal),
                o.exploration_samples,
                o.steps,
                u8::from(o.finished)
            );
        }
        s
    }

    pub fn write_outcomes(&self, path: &Path) -> Result<(), SynthError> {
        std::fs::write(path, self.outcomes_csv()).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// All trials of a config, in trial order.
pub fn run_synth(config: &SynthConfig) -> Result<SynthReport, SynthError> {
    config.validate()?;
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SynthReport {
        policy: config.policy.clone(),
        outcomes,
    })
}
