use super::{arm_slot, slot_offset, ArmStats, OllaPolicy, Phase, PolicyDecision};

/// UCB1: one initial play per arm, then the arm maximising
/// `x + sqrt(2 ln n / N)`. Ties go to the lowest offset.
#[derive(Debug, Clone)]
pub struct UcbPolicy {
    big_l: u32,
    stats: Vec<ArmStats>,
    total: u64,
    last: Option<i32>,
}

impl UcbPolicy {
    pub fn new(big_l: u32) -> Self {
        Self::with_arms(big_l, 2 * big_l as usize + 1)
    }

    fn with_arms(big_l: u32, arms: usize) -> Self {
        Self {
            big_l,
            stats: vec![ArmStats::default(); arms],
            total: 0,
            last: None,
        }
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    fn index(&self, s: &ArmStats) -> f64 {
        let n = s.pulls() as f64;
        s.acks as f64 / n + (2.0 * (self.total as f64).ln() / n).sqrt()
    }
}

impl OllaPolicy for UcbPolicy {
    fn decide(&mut self) -> PolicyDecision {
        let slot = match self.stats.iter().position(|s| s.pulls() == 0) {
            Some(unplayed) => unplayed,
            None => {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for (slot, s) in self.stats.iter().enumerate() {
                    let idx = self.index(s);
                    if idx > best.0 {
                        best = (idx, slot);
                    }
                }
                best.1
            }
        };
        let offset = slot_offset(slot, self.big_l);
        self.last = Some(offset);
        PolicyDecision::plain(offset, Phase::Exploring)
    }

    fn observe(&mut self, ack: bool) {
        let offset = self.last.expect("observe follows decide");
        self.stats[arm_slot(offset, self.big_l)].record(ack);
        self.total += 1;
    }

    fn phase(&self) -> Phase {
        Phase::Exploring
    }

    fn exploration_samples(&self) -> u64 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_then_tie_picks_lowest_offset() {
        let mut p = UcbPolicy::new(2);
        let sweep: Vec<i32> = (0..5)
            .map(|_| {
                let d = p.decide();
                p.observe(true);
                d.offset
            })
            .collect();
        assert_eq!(sweep, vec![-2, -1, 0, 1, 2]);
        assert_eq!(p.decide().offset, -2);
    }

    #[test]
    fn degenerate_rewards() {
        let mut p = UcbPolicy::with_arms(0, 2);
        let mut first = 0;
        for _ in 0..1000 {
            let slot = arm_slot(p.decide().offset, 0);
            p.observe(slot == 0);
            first += u32::from(slot == 0);
        }
        assert!(first >= 950, "{first}");
    }
}
