use super::{
    ArmStats, Elimination, OllaPolicy, Phase, PolicyDecision, PolicyState, SearchInterval,
    SwitchingController, WALD_MIN_SAMPLES,
};
use crate::bounds::{per_step_failure_budget, required_samples, wald_interval, ExplorationParams};

#[derive(Debug, Clone)]
enum Stage {
    Exploring { current: i32, stats: ArmStats },
    Switching(SwitchingController),
    Fixed(i32),
}

/// Binary search with confidence-interval early elimination, followed by a
/// switching phase between two adjacent offsets.
///
/// Once the probed arm has [`WALD_MIN_SAMPLES`] samples, a Wald interval at
/// the per-step budget is checked after every sample: an upper bound below
/// `beta - epsilon` discards the arm and everything above it, a lower bound
/// above `beta + epsilon` discards the arm and everything below it. At the
/// full per-arm count the estimate either eliminates (strictly outside the
/// tolerance band) or starts switching with the neighbour on the side of
/// the target.
#[derive(Debug, Clone)]
pub struct FinalPolicy {
    params: ExplorationParams,
    per_arm: u64,
    delta1: f64,
    window: Option<usize>,
    interval: SearchInterval,
    stage: Stage,
    selected: Option<i32>,
    samples: u64,
    log: Vec<Elimination>,
    pending: Option<Elimination>,
}

impl FinalPolicy {
    pub fn new(params: ExplorationParams) -> Self {
        Self::with_window(params, None)
    }

    pub fn with_window(params: ExplorationParams, window: Option<usize>) -> Self {
        let interval = SearchInterval::full(params.big_l());
        let mut p = Self {
            per_arm: required_samples(&params),
            delta1: per_step_failure_budget(&params),
            params,
            window,
            interval,
            stage: Stage::Fixed(0),
            selected: None,
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
        match &self.stage {
            Stage::Exploring { current, stats } => PolicyState::Exploring {
                low: self.interval.low,
                high: self.interval.high,
                current: *current,
                stats: *stats,
            },
            Stage::Switching(c) => PolicyState::Switching {
                pair: c.pair(),
                cum: c.cumulative(),
            },
            Stage::Fixed(arm) => PolicyState::Fixed { arm: *arm },
        }
    }

    fn advance(&mut self) {
        if self.interval.needs_probe() {
            self.stage = Stage::Exploring {
                current: self.interval.median(),
                stats: ArmStats::default(),
            };
        } else if self.params.big_l() == 0 {
            self.selected = Some(0);
            self.stage = Stage::Fixed(0);
        } else {
            self.selected = Some(self.interval.terminal_arm());
            let pair = self.interval.terminal_pair();
            self.enter_switching(pair, None);
        }
    }

    fn enter_switching(&mut self, pair: (i32, i32), seed_estimate: Option<f64>) {
        let c =
            SwitchingController::with_window(pair, self.params.beta(), seed_estimate, self.window);
        self.stage = if c.is_degenerate() {
            Stage::Fixed(pair.0)
        } else {
            Stage::Switching(c)
        };
    }

    fn eliminate(&mut self, e: Elimination) {
        self.log.push(e);
        self.pending = Some(e);
        self.advance();
    }

    fn explore_step(&mut self, current: i32, stats: ArmStats) {
        let n = stats.pulls();
        let beta_hat = stats.beta_hat().expect("probe has samples");
        let beta = self.params.beta();
        let eps = self.params.epsilon();

        if n < self.per_arm {
            if n >= WALD_MIN_SAMPLES {
                let ci = wald_interval(beta_hat, n, self.delta1);
                if ci.upper < beta - eps {
                    let e = self.interval.eliminate_above(current);
                    self.eliminate(e);
                } else if ci.lower > beta + eps {
                    let e = self.interval.eliminate_below(current);
                    self.eliminate(e);
                }
            }
            return;
        }

        if beta_hat < beta - eps {
            let e = self.interval.eliminate_above(current);
            self.eliminate(e);
        } else if beta_hat > beta + eps {
            let e = self.interval.eliminate_below(current);
            self.eliminate(e);
        } else {
            self.selected = Some(current);
            let pair = if beta_hat < beta {
                self.interval.clamp_pair(current - 1, current)
            } else {
                self.interval.clamp_pair(current, current + 1)
            };
            self.enter_switching(pair, Some(beta_hat));
        }
    }
}

impl OllaPolicy for FinalPolicy {
    fn decide(&mut self) -> PolicyDecision {
        let marker = self.pending.take();
        match &self.stage {
            Stage::Exploring { current, .. } => {
                PolicyDecision::with_marker(*current, Phase::Exploring, marker)
            }
            Stage::Switching(c) => PolicyDecision::plain(c.next_offset(), Phase::Switching),
            Stage::Fixed(arm) => PolicyDecision::plain(*arm, Phase::Fixed),
        }
    }

    fn observe(&mut self, ack: bool) {
        match &mut self.stage {
            Stage::Exploring { current, stats } => {
                stats.record(ack);
                self.samples += 1;
                let (current, stats) = (*current, *stats);
                self.explore_step(current, stats);
            }
            Stage::Switching(c) => c.record(ack),
            Stage::Fixed(_) => {}
        }
    }

    fn phase(&self) -> Phase {
        match self.stage {
            Stage::Exploring { .. } => Phase::Exploring,
            Stage::Switching(_) => Phase::Switching,
            Stage::Fixed(_) => Phase::Fixed,
        }
    }

    fn exploration_samples(&self) -> u64 {
        self.samples
    }

    fn selected_arm(&self) -> Option<i32> {
        self.selected
    }

    fn eliminations(&self) -> &[Elimination] {
        &self.log
    }
}
