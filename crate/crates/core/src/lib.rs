//! Outer loop link adaptation as a multi-armed bandit over ordered rate
//! offsets.
//!
//! - [`bounds`]: KL tail bounds, per-arm sample counts, Wald intervals.
//! - [`policies`]: PAC binary search and its refinements plus the
//!   median-elimination, Thompson, UCB, error-cluster and no-OLLA baselines.
//! - [`linksim`]: per-UE SINR process, CQI reporting, MCS mapping and
//!   ACK/NACK generation.
//! - [`harness`]: experiment configs, seeded multi-UE runs, metrics and CSV
//!   persistence.
//! - [`synth`]: Monte-Carlo checks on synthetic Bernoulli bandits.

pub mod bounds;
pub mod cli;
pub mod harness;
pub mod linksim;
pub mod policies;
pub mod seed;
pub mod synth;
