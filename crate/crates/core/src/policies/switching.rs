use std::collections::VecDeque;

use super::ArmStats;

/// Alternates between two adjacent offsets so that the achieved success
/// rate tracks a target neither arm reaches alone.
///
/// While the running estimate is below the target the lower (more
/// reliable) offset is played, otherwise the higher one. The estimate only
/// covers transmissions made while switching; until the first of them the
/// exploration estimate of the entry arm, if any, steers the first pick.
#[derive(Debug, Clone)]
pub struct SwitchingController {
    lower: i32,
    upper: i32,
    target: f64,
    seed_estimate: Option<f64>,
    cum: ArmStats,
    window: Option<(usize, VecDeque<bool>, u64)>,
}

impl SwitchingController {
    pub fn new(pair: (i32, i32), target: f64, seed_estimate: Option<f64>) -> Self {
        Self::with_window(pair, target, seed_estimate, None)
    }

    pub fn with_window(
        pair: (i32, i32),
        target: f64,
        seed_estimate: Option<f64>,
        window: Option<usize>,
    ) -> Self {
        let (lower, upper) = (pair.0.min(pair.1), pair.0.max(pair.1));
        assert!(upper - lower <= 1, "switching pair must be adjacent");
        Self {
            lower,
            upper,
            target,
            seed_estimate,
            cum: ArmStats::default(),
            window: window
                .filter(|&w| w > 0)
                .map(|w| (w, VecDeque::with_capacity(w), 0)),
        }
    }

    pub fn pair(&self) -> (i32, i32) {
        (self.lower, self.upper)
    }

    /// Both members are the same arm (pair clamped at a range boundary).
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    /// Counts over the whole switching phase.
    pub fn cumulative(&self) -> ArmStats {
        self.cum
    }

    /// Estimate the controller currently acts on.
    pub fn estimate(&self) -> Option<f64> {
        match &self.window {
            Some((_, buf, acks)) if !buf.is_empty() => Some(*acks as f64 / buf.len() as f64),
            Some(_) => self.seed_estimate,
            None => self.cum.beta_hat().or(self.seed_estimate),
        }
    }

    pub fn next_offset(&self) -> i32 {
        match self.estimate() {
            Some(b) if b < self.target => self.lower,
            // ties and the no-information start favour the higher rate
            _ => self.upper,
        }
    }

    pub fn record(&mut self, ack: bool) {
        self.cum.record(ack);
        if let Some((cap, buf, acks)) = &mut self.window {
            if buf.len() == *cap && buf.pop_front() == Some(true) {
                *acks -= 1;
            }
            buf.push_back(ack);
            if ack {
                *acks += 1;
            }
        }
    }
}
