use super::Elimination;

/// Surviving offsets `low..=high` of a binary search over arms ordered by
/// decreasing success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchInterval {
    pub low: i32,
    pub high: i32,
    big_l: i32,
}

impl SearchInterval {
    pub fn full(big_l: u32) -> Self {
        let l = big_l as i32;
        Self {
            low: -l,
            high: l,
            big_l: l,
        }
    }

    /// More than one arm survives, so another probe is needed.
    pub fn needs_probe(&self) -> bool {
        self.high > self.low
    }

    /// Lower median of the surviving offsets.
    pub fn median(&self) -> i32 {
        (self.low + self.high).div_euclid(2)
    }

    /// The probed arm looked more reliable than the target: it and every
    /// arm below it go.
    pub fn eliminate_below(&mut self, probed: i32) -> Elimination {
        self.low = probed + 1;
        Elimination::Below {
            probed,
            bound: self.low,
        }
    }

    /// The probed arm looked less reliable than the target: it and every
    /// arm above it go.
    pub fn eliminate_above(&mut self, probed: i32) -> Elimination {
        self.high = probed - 1;
        Elimination::Above {
            probed,
            bound: self.high,
        }
    }

    /// Arm to settle on once no probe is needed.
    ///
    /// A single survivor is returned as is. An empty interval can only come
    /// from lowering `high` past `low`, so the arm just below `low` (the last
    /// one that looked reliable enough) is returned, clamped into range.
    pub fn terminal_arm(&self) -> i32 {
        debug_assert!(!self.needs_probe());
        if self.low == self.high {
            self.low
        } else {
            self.high.clamp(-self.big_l, self.big_l)
        }
    }

    /// Adjacent pair to switch between once no probe is needed: the lowest
    /// arm not yet shown to be too reliable and its lower neighbour. At the
    /// bottom boundary the pair collapses onto `-L`.
    pub fn terminal_pair(&self) -> (i32, i32) {
        debug_assert!(!self.needs_probe());
        let upper = self.low.clamp(-self.big_l, self.big_l);
        let lower = (upper - 1).max(-self.big_l);
        (lower, upper)
    }

    /// Clamp an adjacent pair into `[-L, L]`, collapsing it at the edges.
    pub fn clamp_pair(&self, lower: i32, upper: i32) -> (i32, i32) {
        if lower < -self.big_l {
            (-self.big_l, -self.big_l)
        } else if upper > self.big_l {
            (self.big_l, self.big_l)
        } else {
            (lower, upper)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_lower_middle() {
        let mut s = SearchInterval::full(3);
        assert_eq!(s.median(), 0);
        s.eliminate_below(0);
        assert_eq!((s.low, s.high), (1, 3));
        assert_eq!(s.median(), 2);
        s.low = -1;
        s.high = 0;
        assert_eq!(s.median(), -1);
    }

    #[test]
    fn terminal_single_survivor() {
        let mut s = SearchInterval::full(3);
        s.eliminate_below(0);
        s.eliminate_above(2);
        assert!(!s.needs_probe());
        assert_eq!(s.terminal_arm(), 1);
        assert_eq!(s.terminal_pair(), (0, 1));
    }

    #[test]
    fn terminal_empty_interval() {
        let mut s = SearchInterval::full(3);
        s.low = 1;
        s.high = 2;
        s.eliminate_above(1);
        assert_eq!((s.low, s.high), (1, 0));
        assert_eq!(s.terminal_arm(), 0);
        assert_eq!(s.terminal_pair(), (0, 1));
    }

    #[test]
    fn terminal_at_bottom_boundary() {
        let mut s = SearchInterval::full(1);
        s.eliminate_above(0);
        s.eliminate_above(-1);
        assert_eq!((s.low, s.high), (-1, -2));
        assert_eq!(s.terminal_arm(), -1);
        assert_eq!(s.terminal_pair(), (-1, -1));
    }

    #[test]
    fn pair_clamping() {
        let s = SearchInterval::full(2);
        assert_eq!(s.clamp_pair(-3, -2), (-2, -2));
        assert_eq!(s.clamp_pair(2, 3), (2, 2));
        assert_eq!(s.clamp_pair(0, 1), (0, 1));
    }
}
