use super::{slot_offset, ArmStats, OllaPolicy, Phase, PolicyDecision};
use crate::bounds::ExplorationParams;

/// Per-arm sample count of one round, `ceil((4 / eps1^2) ln(3 / delta1))`.
pub fn median_elimination_round_samples(eps1: f64, delta1: f64) -> u64 {
    ((4.0 / (eps1 * eps1)) * (3.0 / delta1).ln()).ceil() as u64
}

/// Median elimination over unordered arms, kept as the sample-complexity
/// baseline.
///
/// Each round samples every surviving arm the round's count (arm by arm, in
/// offset order) and keeps the half whose estimates are at or below the
/// lower median. Ties are broken by offset so the surviving set always
/// shrinks. Tolerance and budget start at `epsilon / 4` and `delta / 2` and
/// tighten by `3/4` and `1/2` per round.
#[derive(Debug, Clone)]
pub struct MedianEliminationPolicy {
    survivors: Vec<i32>,
    stats: Vec<ArmStats>,
    cursor: usize,
    round_samples: u64,
    eps1: f64,
    delta1: f64,
    rounds: u32,
    samples: u64,
}

impl MedianEliminationPolicy {
    pub fn new(params: ExplorationParams) -> Self {
        let big_l = params.big_l();
        let survivors: Vec<i32> = (0..params.num_arms())
            .map(|s| slot_offset(s, big_l))
            .collect();
        let eps1 = params.epsilon() / 4.0;
        let delta1 = params.delta() / 2.0;
        Self {
            stats: vec![ArmStats::default(); survivors.len()],
            survivors,
            cursor: 0,
            round_samples: median_elimination_round_samples(eps1, delta1),
            eps1,
            delta1,
            rounds: 0,
            samples: 0,
        }
    }

    /// Total samples the full elimination will take; deterministic because
    /// the survivor count of each round is.
    pub fn total_samples(params: &ExplorationParams) -> u64 {
        let mut arms = params.num_arms() as u64;
        let (mut eps1, mut delta1) = (params.epsilon() / 4.0, params.delta() / 2.0);
        let mut total = 0;
        while arms > 1 {
            total += arms * median_elimination_round_samples(eps1, delta1);
            arms = arms.div_ceil(2);
            eps1 *= 0.75;
            delta1 /= 2.0;
        }
        total
    }

    pub fn survivors(&self) -> &[i32] {
        &self.survivors
    }

    pub fn rounds_completed(&self) -> u32 {
        self.rounds
    }

    pub fn current_round_samples(&self) -> u64 {
        self.round_samples
    }

    fn done(&self) -> bool {
        self.survivors.len() <= 1
    }

    fn finish_round(&mut self) {
        let mut ranked: Vec<(f64, i32)> = self
            .survivors
            .iter()
            .zip(&self.stats)
            .map(|(&arm, s)| (s.beta_hat().unwrap_or(0.0), arm))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let keep = ranked.len().div_ceil(2);
        let mut kept: Vec<i32> = ranked[..keep].iter().map(|&(_, arm)| arm).collect();
        kept.sort_unstable();

        self.survivors = kept;
        self.stats = vec![ArmStats::default(); self.survivors.len()];
        self.cursor = 0;
        self.rounds += 1;
        self.eps1 *= 0.75;
        self.delta1 /= 2.0;
        self.round_samples = median_elimination_round_samples(self.eps1, self.delta1);
    }
}

impl OllaPolicy for MedianEliminationPolicy {
    fn decide(&mut self) -> PolicyDecision {
        if self.done() {
            PolicyDecision::plain(self.survivors[0], Phase::Fixed)
        } else {
            PolicyDecision::plain(self.survivors[self.cursor], Phase::Exploring)
        }
    }

    fn observe(&mut self, ack: bool) {
        if self.done() {
            return;
        }
        let s = &mut self.stats[self.cursor];
        s.record(ack);
        self.samples += 1;
        if s.pulls() == self.round_samples {
            self.cursor += 1;
            if self.cursor == self.survivors.len() {
                self.finish_round();
            }
        }
    }

    fn phase(&self) -> Phase {
        if self.done() {
            Phase::Fixed
        } else {
            Phase::Exploring
        }
    }

    fn exploration_samples(&self) -> u64 {
        self.samples
    }

    fn selected_arm(&self) -> Option<i32> {
        self.done().then(|| self.survivors[0])
    }
}
