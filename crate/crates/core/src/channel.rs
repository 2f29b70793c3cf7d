//! Wireless airtime, lossy delivery with retransmission, and the wired
//! AP–RADIUS link.
//!
//! Loss probabilities and backoff values are calibration constants. They are
//! scenario-configurable and are not measurements of any particular radio.

use std::fmt;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("frame not delivered after {attempts} attempts")]
    DeliveryFailed { attempts: u32, elapsed: Duration },
    #[error("invalid channel profile: {0}")]
    InvalidProfile(&'static str),
}

/// Maximum transmission attempts per frame before the exchange is abandoned.
pub const DEFAULT_ATTEMPT_CAP: u32 = 10;
/// Per-frame PHY preamble, inter-frame spacing and MAC ACK, lumped.
pub const DEFAULT_PHY_MAC_OVERHEAD_US: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "2.4ghz")]
    Band2_4GHz,
    #[serde(rename = "5ghz")]
    Band5GHz,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Band2_4GHz, Band::Band5GHz];

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Band2_4GHz => "2.4ghz",
            Band::Band5GHz => "5ghz",
        }
    }

    /// Minimum basic rate configured on the band.
    pub fn default_rate_bps(self) -> u64 {
        match self {
            Band::Band2_4GHz => 1_000_000,
            Band::Band5GHz => 6_000_000,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandProfile {
    pub band: Band,
    pub data_rate_bps: u64,
    pub phy_mac_overhead_us: u64,
}

impl BandProfile {
    pub fn new(band: Band, data_rate_bps: u64, phy_mac_overhead_us: u64) -> Result<Self, ChannelError> {
        if data_rate_bps == 0 {
            return Err(ChannelError::InvalidProfile("data rate must be positive"));
        }
        Ok(BandProfile {
            band,
            data_rate_bps,
            phy_mac_overhead_us,
        })
    }

    pub fn default_for(band: Band) -> Self {
        BandProfile {
            band,
            data_rate_bps: band.default_rate_bps(),
            phy_mac_overhead_us: DEFAULT_PHY_MAC_OVERHEAD_US,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalSituation {
    /// Above -60 dBm.
    Excellent,
    /// -60 to -70 dBm.
    Good,
    /// Below -70 dBm.
    VeryWeak,
}

impl SignalSituation {
    pub const ALL: [SignalSituation; 3] = [
        SignalSituation::Excellent,
        SignalSituation::Good,
        SignalSituation::VeryWeak,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalSituation::Excellent => "excellent",
            SignalSituation::Good => "good",
            SignalSituation::VeryWeak => "very-weak",
        }
    }

    /// Fitted frame loss probability. Tuned so the simulator reproduces the
    /// measured latency orderings; not a measured value.
    pub fn default_loss(self) -> f64 {
        match self {
            SignalSituation::Excellent => 0.01,
            SignalSituation::Good => 0.10,
            SignalSituation::VeryWeak => 0.40,
        }
    }
}

impl fmt::Display for SignalSituation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Delay added before retry `n` (1-based): `initial * 2^(n-1)`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryBackoff {
    pub initial_us: u64,
    pub cap_us: u64,
}

impl Default for RetryBackoff {
    fn default() -> Self {
        RetryBackoff {
            initial_us: 500,
            cap_us: 8_000,
        }
    }
}

impl RetryBackoff {
    pub fn delay(&self, retry: u32) -> Duration {
        let shift = retry.saturating_sub(1).min(63);
        let us = self.initial_us.saturating_mul(1u64 << shift).min(self.cap_us);
        Duration::from_micros(us)
    }

    /// Total backoff accumulated over `retries` retries.
    pub fn total(&self, retries: u32) -> Duration {
        (1..=retries).map(|n| self.delay(n)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub situation: SignalSituation,
    pub frame_loss_probability: f64,
    pub backoff: RetryBackoff,
}

impl SignalProfile {
    pub fn new(
        situation: SignalSituation,
        frame_loss_probability: f64,
        backoff: RetryBackoff,
    ) -> Result<Self, ChannelError> {
        check_probability(frame_loss_probability)?;
        Ok(SignalProfile {
            situation,
            frame_loss_probability,
            backoff,
        })
    }

    pub fn default_for(situation: SignalSituation) -> Self {
        SignalProfile {
            situation,
            frame_loss_probability: situation.default_loss(),
            backoff: RetryBackoff::default(),
        }
    }
}

fn check_probability(p: f64) -> Result<(), ChannelError> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(ChannelError::InvalidProfile("loss probability must be in [0, 1)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WiredLink {
    pub one_way_latency_us: u64,
    pub loss: f64,
    /// Serialization rate; `None` means the serialization term is zero.
    pub bandwidth_bps: Option<u64>,
}

impl Default for WiredLink {
    fn default() -> Self {
        WiredLink {
            one_way_latency_us: 250,
            loss: 0.0,
            bandwidth_bps: None,
        }
    }
}

impl WiredLink {
    pub fn new(one_way_latency_us: u64, loss: f64, bandwidth_bps: Option<u64>) -> Result<Self, ChannelError> {
        check_probability(loss)?;
        if bandwidth_bps == Some(0) {
            return Err(ChannelError::InvalidProfile("wired bandwidth must be positive"));
        }
        Ok(WiredLink {
            one_way_latency_us,
            loss,
            bandwidth_bps,
        })
    }
}

/// `bits * 1e9 / rate`, rounded to the nearest nanosecond.
fn serialization_nanos(bytes: u64, rate_bps: u64) -> u64 {
    let num = u128::from(bytes) * 8 * 1_000_000_000;
    let rate = u128::from(rate_bps);
    ((num + rate / 2) / rate) as u64
}

/// Medium occupancy of one frame: fixed PHY/MAC overhead plus the payload at
/// the band's data rate.
pub fn frame_airtime(bytes: u64, profile: &BandProfile) -> Duration {
    Duration::from_micros(profile.phy_mac_overhead_us)
        + Duration::from_nanos(serialization_nanos(bytes, profile.data_rate_bps))
}

/// Number of consecutive failed Bernoulli(`loss`) trials before the first
/// success, capped at `cap`. Drawn by inverse transform from one uniform so
/// every call consumes exactly one random number.
pub fn sample_failures<R: Rng + ?Sized>(loss: f64, cap: u32, rng: &mut R) -> u32 {
    // 1 - [0, 1) keeps the log finite.
    let u: f64 = 1.0 - rng.random::<f64>();
    if loss <= 0.0 {
        return 0;
    }
    let failures = (u.ln() / loss.ln()).floor();
    if failures >= f64::from(cap) {
        cap
    } else {
        failures as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub elapsed: Duration,
    pub attempts: u32,
}

/// Sends one frame until it gets through or `attempt_cap` attempts fail.
pub fn transmit<R: Rng + ?Sized>(
    bytes: u64,
    band: &BandProfile,
    signal: &SignalProfile,
    attempt_cap: u32,
    rng: &mut R,
) -> Result<Transmission, ChannelError> {
    let airtime = frame_airtime(bytes, band);
    let cap = attempt_cap.max(1);
    let failures = sample_failures(signal.frame_loss_probability, cap, rng);
    if failures >= cap {
        return Err(ChannelError::DeliveryFailed {
            attempts: cap,
            elapsed: airtime * cap + signal.backoff.total(cap - 1),
        });
    }
    let attempts = failures + 1;
    Ok(Transmission {
        elapsed: airtime * attempts + signal.backoff.total(failures),
        attempts,
    })
}

/// One-way AP–RADIUS transit, plus the serialization term when a bandwidth is
/// configured.
pub fn wired_transit(bytes: u64, link: &WiredLink) -> Duration {
    let serialization = link
        .bandwidth_bps
        .map_or(0, |bw| serialization_nanos(bytes, bw));
    Duration::from_micros(link.one_way_latency_us) + Duration::from_nanos(serialization)
}
