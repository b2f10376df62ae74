use super::{OllaPolicy, Phase, PolicyDecision};

/// Error-cluster heuristic: step the offset down after a run of NACKs and
/// up after a (much longer) run of ACKs.
#[derive(Debug, Clone)]
pub struct ClusteringPolicy {
    big_l: i32,
    nack_run_limit: u32,
    ack_run_limit: u32,
    offset: i32,
    nack_run: u32,
    ack_run: u32,
}

impl ClusteringPolicy {
    pub fn new(big_l: u32, nack_run_limit: u32, ack_run_limit: u32) -> Self {
        assert!(
            nack_run_limit >= 1 && ack_run_limit >= 1,
            "run thresholds must be positive"
        );
        Self {
            big_l: big_l as i32,
            nack_run_limit,
            ack_run_limit,
            offset: 0,
            nack_run: 0,
            ack_run: 0,
        }
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }
}

impl OllaPolicy for ClusteringPolicy {
    fn decide(&mut self) -> PolicyDecision {
        PolicyDecision::plain(self.offset, Phase::Fixed)
    }

    fn observe(&mut self, ack: bool) {
        if ack {
            self.nack_run = 0;
            self.ack_run += 1;
            if self.ack_run == self.ack_run_limit {
                self.offset = (self.offset + 1).min(self.big_l);
                self.ack_run = 0;
            }
        } else {
            self.ack_run = 0;
            self.nack_run += 1;
            if self.nack_run == self.nack_run_limit {
                self.offset = (self.offset - 1).max(-self.big_l);
                self.nack_run = 0;
            }
        }
    }

    fn phase(&self) -> Phase {
        Phase::Fixed
    }

    fn exploration_samples(&self) -> u64 {
        0
    }
}

/// Uses the CQI-derived rate as is.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoOllaPolicy;

impl OllaPolicy for NoOllaPolicy {
    fn decide(&mut self) -> PolicyDecision {
        PolicyDecision::plain(0, Phase::Fixed)
    }

    fn observe(&mut self, _ack: bool) {}

    fn phase(&self) -> Phase {
        Phase::Fixed
    }

    fn exploration_samples(&self) -> u64 {
        0
    }

    fn selected_arm(&self) -> Option<i32> {
        Some(0)
    }
}
