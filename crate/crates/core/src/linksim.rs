//! Desk-scale link model for a single UE.
//!
//! The SINR (dB) follows a stationary AR(1) process. Every `cqi_period`
//! subframes the UE quantises it into a 4-bit CQI (optionally biased), the
//! base station maps the CQI onto one of 28 MCS indices, adds the policy's
//! offset, and the transmission succeeds with probability one minus the
//! logistic block-error curve of that MCS at the true SINR.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::{OllaPolicy, Phase};

pub const NUM_MCS: usize = 28;
pub const MAX_MCS: u8 = 27;
pub const MAX_CQI: u8 = 15;
/// Block-error rate a CQI report promises.
pub const CQI_BLER_TARGET: f64 = 0.1;

const DEFAULT_TABLE: &str = include_str!("../config/mcs_table.toml");

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("invalid MCS table: {0}")]
    InvalidTable(String),
    #[error("invalid UE profile: {0}")]
    InvalidProfile(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub mcs_index: u8,
    #[serde(default)]
    pub spectral_efficiency: f64,
    /// Bits carried by one transmission at this MCS.
    pub rate: u32,
    pub sinr_50pct: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsTable {
    #[serde(rename = "entry")]
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, LinkError> {
        let bad = |m: String| Err(LinkError::InvalidTable(m));
        if entries.len() != NUM_MCS {
            return bad(format!("expected {NUM_MCS} entries, got {}", entries.len()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.mcs_index as usize != i {
                return bad(format!("entry {i} has mcs_index {}", e.mcs_index));
            }
            if e.slope.is_nan() || e.slope <= 0.0 || !e.sinr_50pct.is_finite() {
                return bad(format!("entry {i} has a degenerate error curve"));
            }
        }
        for w in entries.windows(2) {
            if w[1].rate <= w[0].rate {
                return bad(format!(
                    "rate not strictly increasing at mcs {}",
                    w[1].mcs_index
                ));
            }
            if w[1].sinr_50pct <= w[0].sinr_50pct {
                return bad(format!(
                    "sinr_50pct not strictly increasing at mcs {}",
                    w[1].mcs_index
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, LinkError> {
        let raw: McsTable = toml::from_str(text).map_err(|source| LinkError::Parse {
            path: origin.to_string(),
            source,
        })?;
        Self::new(raw.entries)
    }

    pub fn load(path: &Path) -> Result<Self, LinkError> {
        let text = std::fs::read_to_string(path).map_err(|source| LinkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn rate(&self, mcs: u8) -> u32 {
        self.entries[mcs as usize].rate
    }

    /// Block-error probability of `mcs` at `sinr_db`; falls with SINR and
    /// rises with the MCS index.
    pub fn bler(&self, mcs: u8, sinr_db: f64) -> f64 {
        let e = &self.entries[mcs as usize];
        1.0 / (1.0 + (e.slope * (sinr_db - e.sinr_50pct)).exp())
    }
}

impl Default for McsTable {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_TABLE, "builtin mcs table").expect("bundled table is valid")
    }
}

/// MCS anchor of a CQI: `min(27, floor(cqi * 27 / 15))`.
pub fn cqi_anchor(cqi: u8) -> u8 {
    let c = u32::from(cqi.min(MAX_CQI));
    ((c * u32::from(MAX_MCS)) / u32::from(MAX_CQI)).min(u32::from(MAX_MCS)) as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeProfile {
    pub ue_id: u32,
    pub mean_sinr: f64,
    /// AR(1) coefficient per subframe, in `[0, 1)`.
    pub sinr_ar_coefficient: f64,
    /// Stationary standard deviation of the SINR process (dB); each
    /// innovation has variance `std^2 (1 - a^2)`.
    pub sinr_innovation_std: f64,
    /// CQI steps added to every report (positive = optimistic).
    pub cqi_bias: i32,
    pub target_bler: f64,
    pub seed: u64,
}

impl UeProfile {
    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: String| Err(LinkError::InvalidProfile(m));
        if !(self.target_bler > 0.0 && self.target_bler < 0.5) {
            return bad(format!("target_bler {} outside (0, 0.5)", self.target_bler));
        }
        if !(-5..=5).contains(&self.cqi_bias) {
            return bad(format!("cqi_bias {} outside [-5, 5]", self.cqi_bias));
        }
        if !(0.0..1.0).contains(&self.sinr_ar_coefficient) {
            return bad(format!(
                "AR coefficient {} outside [0, 1)",
                self.sinr_ar_coefficient
            ));
        }
        if self.sinr_innovation_std.is_nan() || self.sinr_innovation_std < 0.0 {
            return bad("negative SINR deviation".into());
        }
        Ok(())
    }

    fn innovation_std(&self) -> f64 {
        let a = self.sinr_ar_coefficient;
        self.sinr_innovation_std * (1.0 - a * a).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub current_sinr: f64,
    pub time_index: u64,
}

impl ChannelState {
    /// A state drawn from the stationary law of the profile.
    pub fn stationary<R: Rng + ?Sized>(profile: &UeProfile, rng: &mut R) -> Self {
        let sinr = profile.mean_sinr + profile.sinr_innovation_std * standard_normal(rng);
        Self {
            current_sinr: sinr,
            time_index: 0,
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// One AR(1) step: `s' = mean + a (s - mean) + w`, `w ~ N(0, std^2 (1 - a^2))`.
pub fn step_channel<R: Rng + ?Sized>(
    state: ChannelState,
    profile: &UeProfile,
    rng: &mut R,
) -> ChannelState {
    let a = profile.sinr_ar_coefficient;
    let innovation = profile.innovation_std() * standard_normal(rng);
    ChannelState {
        current_sinr: profile.mean_sinr + a * (state.current_sinr - profile.mean_sinr) + innovation,
        time_index: state.time_index + 1,
    }
}

/// Highest CQI whose anchor MCS meets the CQI error target at `sinr_db`, plus
/// the profile's bias, clamped to `0..=15`.
pub fn report_cqi(sinr_db: f64, profile: &UeProfile, table: &McsTable) -> u8 {
    let unbiased = (0..=MAX_CQI)
        .rev()
        .find(|&c| table.bler(cqi_anchor(c), sinr_db) <= CQI_BLER_TARGET)
        .unwrap_or(0);
    (i32::from(unbiased) + profile.cqi_bias).clamp(0, i32::from(MAX_CQI)) as u8
}

/// `clamp(anchor(cqi) + offset, 0, 27)`.
pub fn map_cqi_to_mcs(cqi: u8, offset: i32, _table: &McsTable) -> u8 {
    (i32::from(cqi_anchor(cqi)) + offset).clamp(0, i32::from(MAX_MCS)) as u8
}

/// Draws an ACK with probability `1 - bler(mcs, true_sinr)`.
pub fn transmit<R: Rng + ?Sized>(mcs: u8, true_sinr: f64, table: &McsTable, rng: &mut R) -> bool {
    rng.random::<f64>() >= table.bler(mcs, true_sinr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub time_index: u64,
    pub ue_id: u32,
    pub cqi_reported: u8,
    pub offset_applied: i32,
    pub mcs_used: u8,
    pub ack: bool,
    pub bits_delivered: u32,
    pub policy_phase: Phase,
}

/// Drives one UE's link under a policy.
///
/// The SINR trajectory and the uniform draws behind the ACKs come from two
/// streams seeded by the profile. Neither depends on the offsets played, so
/// every policy run on the same profile sees the same channel.
#[derive(Debug, Clone)]
pub struct UeLink<'a> {
    profile: UeProfile,
    table: &'a McsTable,
    cqi_period: u64,
    channel: ChannelState,
    channel_rng: ChaCha8Rng,
    ack_rng: ChaCha8Rng,
    last_cqi: u8,
}

impl<'a> UeLink<'a> {
    pub fn new(profile: UeProfile, table: &'a McsTable, cqi_period: u64) -> Self {
        assert!(cqi_period >= 1, "CQI period must be at least one subframe");
        let mut channel_rng = ChaCha8Rng::seed_from_u64(profile.seed);
        let ack_rng = ChaCha8Rng::seed_from_u64(profile.seed ^ 0xA5A5_5A5A_F00D_CAFE);
        let channel = ChannelState::stationary(&profile, &mut channel_rng);
        Self {
            profile,
            table,
            cqi_period,
            channel,
            channel_rng,
            ack_rng,
            last_cqi: 0,
        }
    }

    pub fn profile(&self) -> &UeProfile {
        &self.profile
    }

    pub fn channel(&self) -> ChannelState {
        self.channel
    }

    /// One subframe: refresh the CQI on report instants, transmit at the
    /// policy's offset, feed back the outcome, advance the channel.
    pub fn step<P: OllaPolicy + ?Sized>(&mut self, policy: &mut P) -> TransmissionRecord {
        let t = self.channel.time_index;
        if t.is_multiple_of(self.cqi_period) {
            self.last_cqi = report_cqi(self.channel.current_sinr, &self.profile, self.table);
        }
        let decision = policy.decide();
        let mcs = map_cqi_to_mcs(self.last_cqi, decision.offset, self.table);
        let ack = transmit(
            mcs,
            self.channel.current_sinr,
            self.table,
            &mut self.ack_rng,
        );
        policy.observe(ack);
        let record = TransmissionRecord {
            time_index: t,
            ue_id: self.profile.ue_id,
            cqi_reported: self.last_cqi,
            offset_applied: decision.offset,
            mcs_used: mcs,
            ack,
            bits_delivered: if ack { self.table.rate(mcs) } else { 0 },
            policy_phase: decision.phase,
        };
        self.channel = step_channel(self.channel, &self.profile, &mut self.channel_rng);
        record
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{NoOllaPolicy, PolicyDecision};

    fn profile() -> UeProfile {
        UeProfile {
            ue_id: 3,
            mean_sinr: 8.0,
            sinr_ar_coefficient: 0.9,
            sinr_innovation_std: 2.0,
            cqi_bias: 0,
            target_bler: 0.1,
            seed: 42,
        }
    }

    struct Pinned(i32);

    impl OllaPolicy for Pinned {
        fn decide(&mut self) -> PolicyDecision {
            PolicyDecision::plain(self.0, Phase::Fixed)
        }
        fn observe(&mut self, _ack: bool) {}
        fn phase(&self) -> Phase {
            Phase::Fixed
        }
        fn exploration_samples(&self) -> u64 {
            0
        }
    }

    #[test]
    fn default_table_is_valid() {
        let t = McsTable::default();
        assert_eq!(t.entries().len(), NUM_MCS);
        for s in [-20.0, -3.0, 0.0, 7.5, 30.0] {
            for m in 1..NUM_MCS as u8 {
                assert!(t.bler(m, s) >= t.bler(m - 1, s));
            }
        }
    }

    #[test]
    fn table_rejects_bad_shapes() {
        let t = McsTable::default();
        let mut e = t.entries().to_vec();
        e.pop();
        assert!(McsTable::new(e).is_err());
        let mut e = t.entries().to_vec();
        e[5].rate = e[4].rate;
        assert!(McsTable::new(e).is_err());
        let mut e = t.entries().to_vec();
        e[5].sinr_50pct = e[4].sinr_50pct - 1.0;
        assert!(McsTable::new(e).is_err());
    }

    #[test]
    fn bler_curve_shape() {
        let t = McsTable::default();
        let e = &t.entries()[10];
        assert!((t.bler(10, e.sinr_50pct) - 0.5).abs() < 1e-15);
        assert!(t.bler(10, 200.0) < 1e-60);
        assert!(t.bler(10, -200.0) > 1.0 - 1e-15);
    }

    #[test]
    fn cqi_clamps_and_bias() {
        let t = McsTable::default();
        let mut p = profile();
        assert_eq!(report_cqi(-100.0, &p, &t), 0);
        assert_eq!(report_cqi(100.0, &p, &t), 15);
        for s in [-10.0, -2.0, 3.3, 8.0, 12.1, 25.0] {
            p.cqi_bias = 0;
            let base = report_cqi(s, &p, &t);
            p.cqi_bias = -2;
            assert_eq!(report_cqi(s, &p, &t), base.saturating_sub(2));
            p.cqi_bias = 3;
            assert_eq!(report_cqi(s, &p, &t), (base + 3).min(15));
        }
    }

    #[test]
    fn cqi_meets_its_error_target() {
        let t = McsTable::default();
        let p = profile();
        for i in -100..250 {
            let s = f64::from(i) * 0.1;
            let c = report_cqi(s, &p, &t);
            if c > 0 {
                assert!(t.bler(cqi_anchor(c), s) <= CQI_BLER_TARGET);
            }
            if c < 15 {
                assert!(t.bler(cqi_anchor(c + 1), s) > CQI_BLER_TARGET);
            }
        }
    }

    #[test]
    fn mcs_mapping() {
        let t = McsTable::default();
        assert_eq!(map_cqi_to_mcs(0, -3, &t), 0);
        assert_eq!(map_cqi_to_mcs(15, 0, &t), 27);
        assert_eq!(map_cqi_to_mcs(15, 4, &t), 27);
        assert_eq!(cqi_anchor(1), 1);
        assert_eq!(cqi_anchor(7), 12);
        for c in 0..=15 {
            let mut prev = 0;
            for o in -8..=8 {
                let m = map_cqi_to_mcs(c, o, &t);
                assert!(m >= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn ar_limits() {
        let mut p = profile();
        p.sinr_ar_coefficient = 0.999_999_999;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = ChannelState {
            current_sinr: 3.0,
            time_index: 0,
        };
        for _ in 0..100 {
            s = step_channel(s, &p, &mut rng);
        }
        assert!((s.current_sinr - 3.0).abs() < 0.05);
        assert_eq!(s.time_index, 100);
    }

    #[test]
    fn independent_draws_without_memory() {
        let mut p = profile();
        p.sinr_ar_coefficient = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = ChannelState::stationary(&p, &mut rng);
        let n = 200_000;
        let (mut sum, mut sq, mut lag) = (0.0, 0.0, 0.0);
        let mut prev = s.current_sinr - p.mean_sinr;
        for _ in 0..n {
            s = step_channel(s, &p, &mut rng);
            let x = s.current_sinr - p.mean_sinr;
            sum += x;
            sq += x * x;
            lag += x * prev;
            prev = x;
        }
        let n = f64::from(n);
        assert!((sum / n).abs() < 0.02);
        assert!((sq / n - 4.0).abs() < 0.05);
        assert!((lag / sq).abs() < 0.01);
    }

    #[test]
    fn lag_one_autocorrelation_matches_coefficient() {
        let p = profile();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = ChannelState::stationary(&p, &mut rng);
        let (mut sq, mut lag) = (0.0, 0.0);
        let mut prev = s.current_sinr - p.mean_sinr;
        for _ in 0..1_000_000 {
            s = step_channel(s, &p, &mut rng);
            let x = s.current_sinr - p.mean_sinr;
            sq += x * x;
            lag += x * prev;
            prev = x;
        }
        let rho = lag / sq;
        assert!((rho - 0.9).abs() < 0.01, "rho = {rho}");
    }

    #[test]
    fn profile_validation() {
        let mut p = profile();
        assert!(p.validate().is_ok());
        p.cqi_bias = 6;
        assert!(p.validate().is_err());
        let mut p = profile();
        p.target_bler = 0.5;
        assert!(p.validate().is_err());
        let mut p = profile();
        p.sinr_ar_coefficient = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn link_is_deterministic_and_accounts_bits() {
        let t = McsTable::default();
        let run = || {
            let mut link = UeLink::new(profile(), &t, 5);
            let mut policy = NoOllaPolicy;
            (0..2000)
                .map(|_| link.step(&mut policy))
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        for r in &a {
            let expected = if r.ack { t.rate(r.mcs_used) } else { 0 };
            assert_eq!(r.bits_delivered, expected);
            assert_eq!(
                r.mcs_used,
                map_cqi_to_mcs(r.cqi_reported, r.offset_applied, &t)
            );
        }
        // CQI only changes on report instants
        for w in a.windows(2) {
            if w[1].time_index % 5 != 0 {
                assert_eq!(w[0].cqi_reported, w[1].cqi_reported);
            }
        }
    }

    #[test]
    fn pinned_offsets_give_monotone_success() {
        let t = McsTable::default();
        let n = 100_000;
        let mut prev: Option<f64> = None;
        for offset in -3..=3 {
            let mut link = UeLink::new(profile(), &t, 5);
            let mut policy = Pinned(offset);
            let acks = (0..n).filter(|_| link.step(&mut policy).ack).count();
            let beta = acks as f64 / n as f64;
            if let Some(p) = prev {
                let sigma = ((p * (1.0 - p) + beta * (1.0 - beta)) / n as f64).sqrt();
                assert!(p - beta > 3.0 * sigma, "offset {offset}: {p} vs {beta}");
            }
            prev = Some(beta);
        }
    }
}
