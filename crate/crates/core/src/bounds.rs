//! Closed-form probability machinery for Bernoulli arms.
//!
//! Everything here is a pure function: KL divergence between Bernoulli
//! laws, the Chernoff-style binomial tail bounds built on it, the per-arm
//! sample count that makes a binary search over ordered arms
//! (epsilon, delta)-correct, Wald intervals for early elimination, and an
//! exact binomial tail used to check the bounds.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid exploration parameters: {0}")]
    InvalidParams(String),
    #[error("divergence is infinite: p = {p}, q = {q}")]
    InfiniteDivergence { p: f64, q: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Target success probability, tolerance, failure budget and the offset
/// half-width `big_l` (arms are the offsets `-big_l..=big_l`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams {
    beta: f64,
    epsilon: f64,
    delta: f64,
    big_l: u32,
}

impl ExplorationParams {
    pub fn new(beta: f64, epsilon: f64, delta: f64, big_l: u32) -> Result<Self, BoundsError> {
        let bad = |msg: String| Err(BoundsError::InvalidParams(msg));
        if !(beta > 0.0 && beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {beta}"));
        }
        if !(epsilon > 0.0 && epsilon < beta.min(1.0 - beta)) {
            return bad(format!(
                "epsilon must lie in (0, min(beta, 1 - beta)) = (0, {}), got {epsilon}",
                beta.min(1.0 - beta)
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {delta}"));
        }
        Ok(Self {
            beta,
            epsilon,
            delta,
            big_l,
        })
    }

    /// Builds parameters from a target block-error rate instead of a
    /// success probability.
    pub fn from_target_bler(
        target_bler: f64,
        epsilon: f64,
        delta: f64,
        big_l: u32,
    ) -> Result<Self, BoundsError> {
        Self::new(1.0 - target_bler, epsilon, delta, big_l)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn big_l(&self) -> u32 {
        self.big_l
    }

    pub fn num_arms(&self) -> usize {
        2 * self.big_l as usize + 1
    }

    pub fn target_bler(&self) -> f64 {
        1.0 - self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Coverage, `1 - delta1`.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P(S >= k)`
    Right,
    /// `P(S <= k)`
    Left,
}

/// `p ln(p/q) + (1-p) ln((1-p)/(1-q))` with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(BoundsError::Precondition(format!(
            "probabilities out of range: p = {p}, q = {q}"
        )));
    }
    if p == q {
        return Ok(0.0);
    }
    if q == 0.0 || q == 1.0 {
        return Err(BoundsError::InfiniteDivergence { p, q });
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    // rounding can push the sum a hair below zero when p ~ q
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

fn check_open_unit(name: &str, x: f64) -> Result<(), BoundsError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::Precondition(format!(
            "{name} must lie in (0, 1), got {x}"
        )))
    }
}

/// Upper bound on `P(S/n >= beta)` for `S ~ Binomial(n, beta_l)`, valid when
/// `beta > beta_l`.
pub fn right_tail_bound(n: u64, beta: f64, beta_l: f64) -> Result<f64, BoundsError> {
    check_open_unit("beta_l", beta_l)?;
    if beta <= beta_l {
        return Err(BoundsError::Precondition(format!(
            "right tail needs beta > beta_l, got beta = {beta}, beta_l = {beta_l}"
        )));
    }
    Ok((-(n as f64) * kl_bernoulli(beta, beta_l)?).exp())
}

/// Upper bound on `P(S/n <= beta)` for `S ~ Binomial(n, beta_l)`, valid when
/// `beta < beta_l`.
pub fn left_tail_bound(n: u64, beta: f64, beta_l: f64) -> Result<f64, BoundsError> {
    check_open_unit("beta_l", beta_l)?;
    if beta >= beta_l {
        return Err(BoundsError::Precondition(format!(
            "left tail needs beta < beta_l, got beta = {beta}, beta_l = {beta_l}"
        )));
    }
    Ok((-(n as f64) * kl_bernoulli(beta, beta_l)?).exp())
}

/// Number of arms a binary search over `2L + 1` ordered arms touches,
/// `ceil(log2(2L + 1))`.
pub fn max_distinct_arms(big_l: u32) -> u32 {
    let arms = 2 * u64::from(big_l) + 1;
    // exact integer ceil(log2(arms))
    64 - (arms - 1).leading_zeros()
}

/// Failure budget for a single elimination step, `delta / log2(2L + 1)`.
///
/// With `L = 0` there is one arm and one (trivial) step, so the whole budget
/// is returned.
pub fn per_step_failure_budget(params: &ExplorationParams) -> f64 {
    if params.big_l == 0 {
        return params.delta;
    }
    params.delta / (params.num_arms() as f64).log2()
}

/// The two KL denominators of the per-arm sample count: divergence from the
/// target to `beta - epsilon` and to `beta + epsilon`.
pub fn sample_denominators(params: &ExplorationParams) -> (f64, f64) {
    let b = params.beta;
    let e = params.epsilon;
    // invariants of ExplorationParams keep both q values in (0, 1)
    let below = kl_bernoulli(b, b - e).expect("beta - epsilon in (0, 1)");
    let above = kl_bernoulli(b, b + e).expect("beta + epsilon in (0, 1)");
    (below, above)
}

/// Per-arm sample count that bounds each wrong elimination by the per-step
/// budget:
/// `ceil(max(ln(log2(2L+1)/delta) / kl(b, b-e), ln(log2(2L+1)/delta) / kl(b, b+e)))`.
pub fn required_samples(params: &ExplorationParams) -> u64 {
    let numerator = (1.0 / per_step_failure_budget(params)).ln();
    let (below, above) = sample_denominators(params);
    let n = (numerator / below).max(numerator / above);
    // delta < 1 keeps the numerator positive for L >= 1; L = 0 still
    // needs at least one observation to say anything
    (n.ceil() as u64).max(1)
}

/// `z` with `P(Z > z) = tail` for a standard normal `Z`.
pub fn normal_upper_quantile(tail: f64) -> f64 {
    assert!(tail > 0.0 && tail < 1.0, "tail mass must lie in (0, 1)");
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * tail)
}

/// Wald interval `beta_hat +- z sqrt(beta_hat (1 - beta_hat) / n)` clamped to
/// `[0, 1]`, with `z` the upper quantile at tail mass `delta1`.
///
/// At `beta_hat` of 0 or 1 the interval has zero width.
pub fn wald_interval(beta_hat: f64, n: u64, delta1: f64) -> ConfidenceInterval {
    assert!(n >= 1, "wald interval needs at least one sample");
    assert!(
        delta1 > 0.0 && delta1 < 0.5,
        "per-step budget must lie in (0, 0.5)"
    );
    let z = normal_upper_quantile(delta1);
    let half = z * (beta_hat * (1.0 - beta_hat) / n as f64).sqrt();
    ConfidenceInterval {
        lower: (beta_hat - half).clamp(0.0, 1.0),
        upper: (beta_hat + half).clamp(0.0, 1.0),
        level: 1.0 - delta1,
    }
}

fn ln_binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    let ln_p = |x: f64, m: u64| if m == 0 { 0.0 } else { m as f64 * x.ln() };
    ln_binomial(n, k) + ln_p(p, k) + ln_p(1.0 - p, n - k)
}

/// Exact `P(S >= k)` or `P(S <= k)` for `S ~ Binomial(n, p)`, summed in log
/// space.
pub fn exact_binomial_tail(n: u64, p: f64, k: u64, side: Tail) -> f64 {
    assert!(k <= n, "k must not exceed n");
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    if p == 0.0 || p == 1.0 {
        let mass_at = if p == 0.0 { 0 } else { n };
        let hit = match side {
            Tail::Right => mass_at >= k,
            Tail::Left => mass_at <= k,
        };
        return if hit { 1.0 } else { 0.0 };
    }
    let range: Box<dyn Iterator<Item = u64>> = match side {
        Tail::Right => Box::new(k..=n),
        Tail::Left => Box::new(0..=k),
    };
    let logs: Vec<f64> = range.map(|i| ln_binomial_pmf(n, p, i)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}
