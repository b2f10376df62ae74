use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::{arm_slot, slot_offset, ArmStats, OllaPolicy, Phase, PolicyDecision};

/// Thompson sampling with a uniform prior: each step draws
/// `theta ~ Beta(S + 1, F + 1)` per arm and plays the largest draw.
#[derive(Debug, Clone)]
pub struct ThompsonPolicy {
    big_l: u32,
    stats: Vec<ArmStats>,
    rng: ChaCha8Rng,
    last: Option<i32>,
    samples: u64,
}

impl ThompsonPolicy {
    pub fn new(big_l: u32, seed: u64) -> Self {
        Self::with_arms(big_l, 2 * big_l as usize + 1, seed)
    }

    fn with_arms(big_l: u32, arms: usize, seed: u64) -> Self {
        Self {
            big_l,
            stats: vec![ArmStats::default(); arms],
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
            samples: 0,
        }
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

impl OllaPolicy for ThompsonPolicy {
    fn decide(&mut self) -> PolicyDecision {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (slot, s) in self.stats.iter().enumerate() {
            let beta = Beta::new(s.acks as f64 + 1.0, s.nacks as f64 + 1.0)
                .expect("shape parameters are at least one");
            let theta = beta.sample(&mut self.rng);
            if theta > best.0 {
                best = (theta, slot);
            }
        }
        let offset = slot_offset(best.1, self.big_l);
        self.last = Some(offset);
        PolicyDecision::plain(offset, Phase::Exploring)
    }

    fn observe(&mut self, ack: bool) {
        let offset = self.last.expect("observe follows decide");
        self.stats[arm_slot(offset, self.big_l)].record(ack);
        self.samples += 1;
    }

    fn phase(&self) -> Phase {
        Phase::Exploring
    }

    /// Every play of an index policy is exploratory.
    fn exploration_samples(&self) -> u64 {
        self.samples
    }
}
