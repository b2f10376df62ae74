//! Online offset-selection policies.
//!
//! Every policy follows the same protocol: [`OllaPolicy::decide`] yields the
//! offset for the next transmission, then [`OllaPolicy::observe`] feeds back
//! the ACK/NACK of that transmission. Offsets are signed arm indices in
//! `-L..=L`; larger offsets mean higher rates and lower success probability.

mod clustering;
mod final_policy;
mod median_elimination;
mod pbs;
mod search;
mod switching;
mod thompson;
mod ucb;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use clustering::{ClusteringPolicy, NoOllaPolicy};
pub use final_policy::FinalPolicy;
pub use median_elimination::{median_elimination_round_samples, MedianEliminationPolicy};
pub use pbs::PbsPolicy;
pub use search::SearchInterval;
pub use switching::SwitchingController;
pub use thompson::ThompsonPolicy;
pub use ucb::UcbPolicy;

use crate::bounds::ExplorationParams;

/// Number of samples an arm needs before its Wald interval may eliminate it.
pub const WALD_MIN_SAMPLES: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploring,
    Switching,
    Fixed,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Exploring => "exploring",
            Phase::Switching => "switching",
            Phase::Fixed => "fixed",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exploring" => Ok(Phase::Exploring),
            "switching" => Ok(Phase::Switching),
            "fixed" => Ok(Phase::Fixed),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

/// ACK/NACK counts of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmStats {
    pub acks: u64,
    pub nacks: u64,
}

impl ArmStats {
    pub fn record(&mut self, ack: bool) {
        if ack {
            self.acks += 1;
        } else {
            self.nacks += 1;
        }
    }

    pub fn pulls(&self) -> u64 {
        self.acks + self.nacks
    }

    /// Empirical success rate, `None` before the first pull.
    pub fn beta_hat(&self) -> Option<f64> {
        let n = self.pulls();
        (n > 0).then(|| self.acks as f64 / n as f64)
    }

    /// Empirical block-error rate.
    pub fn alpha_hat(&self) -> Option<f64> {
        self.beta_hat().map(|b| 1.0 - b)
    }
}

/// Direction of a block elimination in a binary search over ordered arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Elimination {
    /// Every arm with offset `< bound` is discarded (the probed arm looked
    /// too conservative).
    Below { probed: i32, bound: i32 },
    /// Every arm with offset `> bound` is discarded (the probed arm looked
    /// too aggressive).
    Above { probed: i32, bound: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub offset: i32,
    pub phase: Phase,
    pub eliminated_below: Option<i32>,
    pub eliminated_above: Option<i32>,
}

impl PolicyDecision {
    pub fn plain(offset: i32, phase: Phase) -> Self {
        Self {
            offset,
            phase,
            eliminated_below: None,
            eliminated_above: None,
        }
    }

    fn with_marker(offset: i32, phase: Phase, marker: Option<Elimination>) -> Self {
        let mut d = Self::plain(offset, phase);
        if phase == Phase::Exploring {
            match marker {
                Some(Elimination::Below { bound, .. }) => d.eliminated_below = Some(bound),
                Some(Elimination::Above { bound, .. }) => d.eliminated_above = Some(bound),
                None => {}
            }
        }
        d
    }
}

/// Observable state of the binary-search policies.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyState {
    Exploring {
        low: i32,
        high: i32,
        current: i32,
        stats: ArmStats,
    },
    Switching {
        pair: (i32, i32),
        cum: ArmStats,
    },
    Fixed {
        arm: i32,
    },
}

pub trait OllaPolicy: Send {
    /// Offset for the next transmission.
    fn decide(&mut self) -> PolicyDecision;

    /// ACK/NACK of the transmission made at the last decided offset.
    fn observe(&mut self, ack: bool);

    fn phase(&self) -> Phase;

    /// Transmissions spent before the policy committed to an arm (or pair).
    fn exploration_samples(&self) -> u64;

    /// Arm the exploration settled on, once it has.
    fn selected_arm(&self) -> Option<i32> {
        None
    }

    /// Every block elimination so far, in order.
    fn eliminations(&self) -> &[Elimination] {
        &[]
    }
}

impl<P: OllaPolicy + ?Sized> OllaPolicy for Box<P> {
    fn decide(&mut self) -> PolicyDecision {
        (**self).decide()
    }
    fn observe(&mut self, ack: bool) {
        (**self).observe(ack)
    }
    fn phase(&self) -> Phase {
        (**self).phase()
    }
    fn exploration_samples(&self) -> u64 {
        (**self).exploration_samples()
    }
    fn selected_arm(&self) -> Option<i32> {
        (**self).selected_arm()
    }
    fn eliminations(&self) -> &[Elimination] {
        (**self).eliminations()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Pbs,
    Final,
    MedianElimination,
    Thompson,
    Ucb,
    Clustering,
    NoOlla,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Pbs,
        PolicyKind::Final,
        PolicyKind::MedianElimination,
        PolicyKind::Thompson,
        PolicyKind::Ucb,
        PolicyKind::Clustering,
        PolicyKind::NoOlla,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Pbs => "pbs",
            PolicyKind::Final => "final",
            PolicyKind::MedianElimination => "median_elimination",
            PolicyKind::Thompson => "thompson",
            PolicyKind::Ucb => "ucb",
            PolicyKind::Clustering => "clustering",
            PolicyKind::NoOlla => "no_olla",
        }
    }

    /// Whether the policy needs exploration parameters (target, tolerance,
    /// failure budget).
    pub fn is_pac(&self) -> bool {
        matches!(
            self,
            PolicyKind::Pbs | PolicyKind::Final | PolicyKind::MedianElimination
        )
    }

    /// Shortest run in which the policy can finish its exploration.
    pub fn minimum_duration(&self, params: &ExplorationParams) -> u64 {
        use crate::bounds::{max_distinct_arms, required_samples};
        match self {
            PolicyKind::Pbs | PolicyKind::Final => {
                if params.big_l() == 0 {
                    0
                } else {
                    required_samples(params) * u64::from(max_distinct_arms(params.big_l()))
                }
            }
            PolicyKind::MedianElimination => MedianEliminationPolicy::total_samples(params),
            PolicyKind::Ucb => params.num_arms() as u64,
            PolicyKind::Thompson | PolicyKind::Clustering | PolicyKind::NoOlla => 0,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = PolicyKind::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown policy `{s}` (known: {})", known.join(", "))
            })
    }
}

/// Tunables that only some policies read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOptions {
    /// Sliding window for the switching estimate; `None` keeps the
    /// cumulative average.
    pub switching_window: Option<usize>,
    pub nack_run: u32,
    pub ack_run: u32,
    pub seed: u64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            switching_window: None,
            nack_run: 5,
            ack_run: 50,
            seed: 0,
        }
    }
}

pub fn build_policy(
    kind: PolicyKind,
    params: ExplorationParams,
    options: &PolicyOptions,
) -> Box<dyn OllaPolicy> {
    let big_l = params.big_l();
    match kind {
        PolicyKind::Pbs => Box::new(PbsPolicy::new(params)),
        PolicyKind::Final => Box::new(FinalPolicy::with_window(params, options.switching_window)),
        PolicyKind::MedianElimination => Box::new(MedianEliminationPolicy::new(params)),
        PolicyKind::Thompson => Box::new(ThompsonPolicy::new(big_l, options.seed)),
        PolicyKind::Ucb => Box::new(UcbPolicy::new(big_l)),
        PolicyKind::Clustering => Box::new(ClusteringPolicy::new(
            big_l,
            options.nack_run,
            options.ack_run,
        )),
        PolicyKind::NoOlla => Box::new(NoOllaPolicy),
    }
}

#[inline]
pub(crate) fn arm_slot(offset: i32, big_l: u32) -> usize {
    (offset + big_l as i32) as usize
}

#[inline]
pub(crate) fn slot_offset(slot: usize, big_l: u32) -> i32 {
    slot as i32 - big_l as i32
}
