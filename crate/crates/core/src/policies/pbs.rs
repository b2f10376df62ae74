use super::{
    ArmStats, Elimination, OllaPolicy, Phase, PolicyDecision, PolicyState, SearchInterval,
};
use crate::bounds::{required_samples, ExplorationParams};

/// Binary search over the ordered offsets: probe the median survivor a fixed
/// number of times, then discard the half its estimate rules out.
#[derive(Debug, Clone)]
pub struct PbsPolicy {
    params: ExplorationParams,
    per_arm: u64,
    interval: SearchInterval,
    probe: Option<(i32, ArmStats)>,
    fixed: Option<i32>,
    samples: u64,
    log: Vec<Elimination>,
    pending: Option<Elimination>,
}

impl PbsPolicy {
    pub fn new(params: ExplorationParams) -> Self {
        let mut p = Self {
            per_arm: required_samples(&params),
            params,
            interval: SearchInterval::full(params.big_l()),
            probe: None,
            fixed: None,
            samples: 0,
            log: Vec::new(),
            pending: None,
        };
        p.advance();
        p
    }

    pub fn samples_per_arm(&self) -> u64 {
        self.per_arm
    }

    pub fn state(&self) -> PolicyState {
        match (&self.probe, self.fixed) {
            (Some((current, stats)), _) => PolicyState::Exploring {
                low: self.interval.low,
                high: self.interval.high,
                current: *current,
                stats: *stats,
            },
            (None, Some(arm)) => PolicyState::Fixed { arm },
            (None, None) => unreachable!("pbs is always probing or fixed"),
        }
    }

    /// Distinct arms probed so far.
    pub fn probed_arms(&self) -> usize {
        self.log.len() + usize::from(self.probe.is_some() && self.samples > 0)
    }

    fn advance(&mut self) {
        if self.interval.needs_probe() {
            self.probe = Some((self.interval.median(), ArmStats::default()));
        } else {
            self.probe = None;
            self.fixed = Some(self.interval.terminal_arm());
        }
    }

    fn eliminate(&mut self, e: Elimination) {
        self.log.push(e);
        self.pending = Some(e);
        self.advance();
    }
}

impl OllaPolicy for PbsPolicy {
    fn decide(&mut self) -> PolicyDecision {
        let marker = self.pending.take();
        match (&self.probe, self.fixed) {
            (Some((current, _)), _) => {
                PolicyDecision::with_marker(*current, Phase::Exploring, marker)
            }
            (None, Some(arm)) => PolicyDecision::plain(arm, Phase::Fixed),
            (None, None) => unreachable!(),
        }
    }

    fn observe(&mut self, ack: bool) {
        let Some((current, stats)) = &mut self.probe else {
            return;
        };
        stats.record(ack);
        self.samples += 1;
        if stats.pulls() < self.per_arm {
            return;
        }
        let current = *current;
        let beta_hat = stats.beta_hat().expect("probe has samples");
        let beta = self.params.beta();
        if beta_hat > beta {
            let e = self.interval.eliminate_below(current);
            self.eliminate(e);
        } else if beta_hat < beta {
            let e = self.interval.eliminate_above(current);
            self.eliminate(e);
        } else {
            // the probed arm sits exactly on target; nothing to discard
            self.probe = None;
            self.fixed = Some(current);
        }
    }

    fn phase(&self) -> Phase {
        if self.probe.is_some() {
            Phase::Exploring
        } else {
            Phase::Fixed
        }
    }

    fn exploration_samples(&self) -> u64 {
        self.samples
    }

    fn selected_arm(&self) -> Option<i32> {
        self.fixed
    }

    fn eliminations(&self) -> &[Elimination] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::max_distinct_arms;

    fn params(big_l: u32) -> ExplorationParams {
        ExplorationParams::new(0.9, 0.05, 0.05, big_l).unwrap()
    }

    #[test]
    fn single_arm_is_fixed_immediately() {
        let mut p = PbsPolicy::new(params(0));
        for _ in 0..100 {
            let d = p.decide();
            assert_eq!(d, PolicyDecision::plain(0, Phase::Fixed));
            p.observe(false);
        }
        assert_eq!(p.exploration_samples(), 0);
        assert!(p.eliminations().is_empty());
        assert_eq!(p.state(), PolicyState::Fixed { arm: 0 });
    }

    #[test]
    fn reliable_first_probe_moves_up_to_median_of_upper_half() {
        let mut p = PbsPolicy::new(params(3));
        let n = p.samples_per_arm();
        for _ in 0..n {
            assert_eq!(p.decide().offset, 0);
            p.observe(true);
        }
        let d = p.decide();
        assert_eq!(d.offset, 2);
        assert_eq!(d.eliminated_below, Some(1));
        // next decision carries no stale marker
        assert_eq!(p.decide().eliminated_below, None);
    }

    #[test]
    fn unreliable_probes_walk_down_to_bottom() {
        let mut p = PbsPolicy::new(params(3));
        let mut offsets = Vec::new();
        while p.phase() == Phase::Exploring {
            let d = p.decide();
            if offsets.last() != Some(&d.offset) {
                offsets.push(d.offset);
            }
            p.observe(false);
        }
        // 0 -> -2 -> single survivor -3, never probed
        assert_eq!(offsets, vec![0, -2]);
        assert_eq!(p.selected_arm(), Some(-3));
        assert!(offsets.len() as u32 <= max_distinct_arms(3));
    }

    #[test]
    fn empty_interval_settles_below() {
        // L = 1: probe 0 reliable -> {1}; never probed
        let mut p = PbsPolicy::new(params(1));
        let n = p.samples_per_arm();
        for _ in 0..n {
            p.decide();
            p.observe(true);
        }
        assert_eq!(p.selected_arm(), Some(1));

        // L = 2: probe 0 unreliable -> {-2, -1}; probe -2 unreliable -> empty
        let mut p = PbsPolicy::new(params(2));
        while p.phase() == Phase::Exploring {
            p.decide();
            p.observe(false);
        }
        assert_eq!(p.selected_arm(), Some(-2));
    }

    #[test]
    fn exploration_budget_respected() {
        for l in 1..6 {
            let mut p = PbsPolicy::new(params(l));
            let mut i = 0u64;
            while p.phase() == Phase::Exploring {
                p.decide();
                // alternate so estimates land on both sides
                p.observe(!i.is_multiple_of(7));
                i += 1;
            }
            let budget = u64::from(max_distinct_arms(l)) * p.samples_per_arm();
            assert!(p.exploration_samples() <= budget);
        }
    }
}
