//! Deterministic per-run timeline of one authentication and batch statistics.
//!
//! Every fragment of every flight is carried by two EAP messages: the one
//! holding the payload and the acknowledging message in the opposite
//! direction. Each message crosses the wireless hop (airtime, retries and
//! backoff are charged to the client), is forwarded by the AP (fixed
//! processing charged to the AP) and crosses the wired AP–RADIUS link
//! (charged to the server). Crypto operations are charged to the entity that
//! runs them.

use std::num::NonZeroU64;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    sample_failures, transmit, wired_transit, Band, BandProfile, ChannelError, SignalProfile,
    SignalSituation, WiredLink, DEFAULT_ATTEMPT_CAP,
};
use crate::handshake::{
    build_flights, count_eap_messages, fragment_flight, resumption_flights, ChainShape, EapMethod,
    Entity, Flight, HandshakeError, DEFAULT_FRAGMENT_SIZE, DEFAULT_ROUND_TRIP_LIMIT,
};
use crate::registry::{KemSpec, Registry, RegistryError, SignatureSpec};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_REPETITIONS: u32 = 100;
pub const DEFAULT_CLIENT_CPU_HZ: u64 = 2_100_000_000;
pub const DEFAULT_SERVER_CPU_HZ: u64 = 2_000_000_000;
pub const DEFAULT_AP_CPU_HZ: u64 = 2_000_000_000;
/// Forwarding and local processing per EAP message at the AP.
pub const DEFAULT_AP_PROCESSING_US: u64 = 50;
/// Scenario `kem` value that picks the level-matched KEM.
pub const AUTO_KEM: &str = "auto";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Handshake(#[from] HandshakeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("run index {index} out of range for {repetitions} repetitions")]
    RunIndexOutOfRange { index: u32, repetitions: u32 },
    #[error("authentication aborted: {reason}")]
    AuthAborted {
        reason: AbortReason,
        report: Box<AuthReport>,
    },
    #[error("all {runs} runs aborted")]
    AllRunsAborted { runs: u32 },
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AbortReason {
    #[error("frame not delivered after {attempts} attempts")]
    DeliveryFailed { attempts: u32 },
    #[error("{round_trips} EAP round trips exceed the limit of {limit}")]
    RoundTripLimitExceeded { round_trips: u64, limit: u64 },
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub id: String,
    pub method: EapMethod,
    /// Plain or `classical+pq` hybrid identifier.
    pub signature: String,
    /// KEM identifier, or [`AUTO_KEM`].
    pub kem: String,
    pub band: BandProfile,
    pub situation: SignalProfile,
    pub wired: WiredLink,
    pub shape: ChainShape,
    pub fragment_size: NonZeroU64,
    pub round_trip_limit: u64,
    pub attempt_cap: u32,
    pub client_cpu_hz: u64,
    pub ap_cpu_hz: u64,
    pub server_cpu_hz: u64,
    pub ap_processing_us: u64,
    pub resumption: bool,
    pub repetitions: u32,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with every default applied: EAP-TLS, 2.4 GHz, excellent
    /// signal, level-matched KEM.
    pub fn new(signature: &str) -> Self {
        Scenario {
            id: signature.to_string(),
            method: EapMethod::EapTls,
            signature: signature.to_string(),
            kem: AUTO_KEM.to_string(),
            band: BandProfile::default_for(Band::Band2_4GHz),
            situation: SignalProfile::default_for(SignalSituation::Excellent),
            wired: WiredLink::default(),
            shape: ChainShape::default(),
            fragment_size: DEFAULT_FRAGMENT_SIZE,
            round_trip_limit: DEFAULT_ROUND_TRIP_LIMIT,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
            client_cpu_hz: DEFAULT_CLIENT_CPU_HZ,
            ap_cpu_hz: DEFAULT_AP_CPU_HZ,
            server_cpu_hz: DEFAULT_SERVER_CPU_HZ,
            ap_processing_us: DEFAULT_AP_PROCESSING_US,
            resumption: false,
            repetitions: DEFAULT_REPETITIONS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_band(mut self, band: Band) -> Self {
        self.band = BandProfile::default_for(band);
        self
    }

    pub fn with_situation(mut self, situation: SignalSituation) -> Self {
        self.situation = SignalProfile::default_for(situation);
        self
    }

    pub fn with_method(mut self, method: EapMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_kem(mut self, kem: &str) -> Self {
        self.kem = kem.to_string();
        self
    }

    pub fn with_resumption(mut self, resumption: bool) -> Self {
        self.resumption = resumption;
        self
    }

    pub fn with_repetitions(mut self, repetitions: u32) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: &str| Err(SimError::InvalidScenario(format!("{}: {msg}", self.id)));
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1");
        }
        if self.client_cpu_hz == 0 || self.ap_cpu_hz == 0 || self.server_cpu_hz == 0 {
            return invalid("CPU rates must be positive");
        }
        if self.band.data_rate_bps == 0 {
            return invalid("data rate must be positive");
        }
        if self.attempt_cap == 0 {
            return invalid("attempt cap must be at least 1");
        }
        if !(0.0..1.0).contains(&self.situation.frame_loss_probability)
            || !(0.0..1.0).contains(&self.wired.loss)
        {
            return invalid("loss probabilities must be in [0, 1)");
        }
        Ok(())
    }

    /// Resolves the signature and KEM identifiers against `registry`.
    pub fn resolve(&self, registry: &Registry) -> Result<(SignatureSpec, KemSpec), SimError> {
        let sig = registry.lookup_signature(&self.signature)?;
        let kem = if self.kem.eq_ignore_ascii_case(AUTO_KEM) {
            registry.default_kem_for(&sig)?
        } else {
            registry.lookup_kem(&self.kem)?
        };
        Ok((sig, kem))
    }
}

/// CPU time for `cycles` at `cpu_hz`, rounded to the nearest nanosecond.
pub fn crypto_time(cycles: u64, cpu_hz: u64) -> Duration {
    let num = u128::from(cycles) * 1_000_000_000;
    let hz = u128::from(cpu_hz.max(1));
    Duration::from_nanos(((num + hz / 2) / hz) as u64)
}

/// Outcome of one authentication run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthReport {
    pub run_index: u32,
    pub total: Duration,
    pub client_time: Duration,
    pub ap_time: Duration,
    pub server_time: Duration,
    pub logical_eap_messages: u64,
    /// Wireless frames sent, retransmissions included.
    pub transmitted_frames: u64,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchStats {
    pub runs: u32,
    pub completed: u32,
    pub median: Duration,
    pub p95: Duration,
    pub client_median: Duration,
    pub ap_median: Duration,
    pub server_median: Duration,
    pub abort_rate: f64,
    pub logical_eap_messages: u64,
    pub median_frames: u64,
}

/// Nearest-rank percentile of an ascending slice; `q` in (0, 1].
pub fn nearest_rank<T: Copy>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn median_of<T: Copy + Ord>(mut values: Vec<T>) -> T {
    values.sort_unstable();
    nearest_rank(&values, 0.5).expect("non-empty sample")
}

/// A scenario resolved against a registry, ready to run.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    signature: SignatureSpec,
    kem: KemSpec,
    flights: Vec<Flight>,
    eap_messages: u64,
}

struct Timeline<'a> {
    scenario: &'a Scenario,
    rng: ChaCha8Rng,
    client: Duration,
    ap: Duration,
    server: Duration,
    clock: Duration,
    frames: u64,
    round_trips: u64,
}

impl Timeline<'_> {
    fn charge(&mut self, entity: Entity, elapsed: Duration) {
        match entity {
            Entity::Client => self.client += elapsed,
            Entity::AccessPoint => self.ap += elapsed,
            Entity::Server => self.server += elapsed,
        }
        self.clock += elapsed;
    }

    fn compute(&mut self, entity: Entity, cycles: u64) {
        let hz = match entity {
            Entity::Client => self.scenario.client_cpu_hz,
            Entity::AccessPoint => self.scenario.ap_cpu_hz,
            Entity::Server => self.scenario.server_cpu_hz,
        };
        self.charge(entity, crypto_time(cycles, hz));
    }

    fn deliver(&mut self, bytes: u64) -> Result<(), AbortReason> {
        let s = self.scenario;
        match transmit(bytes, &s.band, &s.situation, s.attempt_cap, &mut self.rng) {
            Ok(t) => {
                self.frames += u64::from(t.attempts);
                self.charge(Entity::Client, t.elapsed);
            }
            Err(ChannelError::DeliveryFailed { attempts, elapsed }) => {
                self.frames += u64::from(attempts);
                self.charge(Entity::Client, elapsed);
                return Err(AbortReason::DeliveryFailed { attempts });
            }
            Err(ChannelError::InvalidProfile(_)) => unreachable!("scenario validated"),
        }
        self.charge(Entity::AccessPoint, Duration::from_micros(s.ap_processing_us));

        let failures = sample_failures(s.wired.loss, s.attempt_cap, &mut self.rng);
        let hop = wired_transit(bytes, &s.wired);
        if failures >= s.attempt_cap {
            self.charge(Entity::Server, hop * s.attempt_cap);
            return Err(AbortReason::DeliveryFailed {
                attempts: s.attempt_cap,
            });
        }
        self.charge(Entity::Server, hop * (failures + 1));
        Ok(())
    }

    fn run_flight(&mut self, flight: &Flight) -> Result<(), AbortReason> {
        for op in flight.crypto_ops.iter().filter(|op| op.entity == flight.sender()) {
            self.compute(op.entity, op.cycles);
        }
        for fragment in fragment_flight(flight, self.scenario.fragment_size) {
            self.round_trips += 1;
            if self.round_trips > self.scenario.round_trip_limit {
                return Err(AbortReason::RoundTripLimitExceeded {
                    round_trips: self.round_trips,
                    limit: self.scenario.round_trip_limit,
                });
            }
            self.deliver(fragment.bytes)?;
            self.deliver(0)?;
        }
        for op in flight.crypto_ops.iter().filter(|op| op.entity != flight.sender()) {
            self.compute(op.entity, op.cycles);
        }
        Ok(())
    }
}

impl Simulation {
    pub fn new(scenario: &Scenario, registry: &Registry) -> Result<Self, SimError> {
        scenario.validate()?;
        let (signature, kem) = scenario.resolve(registry)?;
        let flights = if scenario.resumption {
            // Resumption still needs a valid full-handshake pairing.
            build_flights(scenario.method, &signature, &kem, &scenario.shape)?;
            resumption_flights(&kem, &scenario.shape)
        } else {
            build_flights(scenario.method, &signature, &kem, &scenario.shape)?
        };
        let eap_messages = count_eap_messages(&flights, scenario.fragment_size);
        Ok(Simulation {
            scenario: scenario.clone(),
            signature,
            kem,
            flights,
            eap_messages,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn signature(&self) -> &SignatureSpec {
        &self.signature
    }

    pub fn kem(&self) -> &KemSpec {
        &self.kem
    }

    pub fn flights(&self) -> &[Flight] {
        &self.flights
    }

    pub fn eap_messages(&self) -> u64 {
        self.eap_messages
    }

    /// Random stream for run `run_index`: ChaCha keyed by the scenario seed,
    /// stream selected by the run index, so runs are order-independent.
    fn rng_for(&self, run_index: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.seed);
        rng.set_stream(u64::from(run_index));
        rng
    }

    pub fn run(&self, run_index: u32) -> Result<AuthReport, SimError> {
        if run_index >= self.scenario.repetitions {
            return Err(SimError::RunIndexOutOfRange {
                index: run_index,
                repetitions: self.scenario.repetitions,
            });
        }
        let mut timeline = Timeline {
            scenario: &self.scenario,
            rng: self.rng_for(run_index),
            client: Duration::ZERO,
            ap: Duration::ZERO,
            server: Duration::ZERO,
            clock: Duration::ZERO,
            frames: 0,
            round_trips: 0,
        };
        let outcome = self
            .flights
            .iter()
            .try_for_each(|flight| timeline.run_flight(flight));
        let report = AuthReport {
            run_index,
            total: timeline.clock,
            client_time: timeline.client,
            ap_time: timeline.ap,
            server_time: timeline.server,
            logical_eap_messages: self.eap_messages,
            transmitted_frames: timeline.frames,
            aborted: outcome.is_err(),
        };
        match outcome {
            Ok(()) => Ok(report),
            Err(reason) => Err(SimError::AuthAborted {
                reason,
                report: Box::new(report),
            }),
        }
    }

    /// Every run, aborted ones included, in run-index order.
    pub fn run_all(&self) -> Vec<Result<AuthReport, SimError>> {
        (0..self.scenario.repetitions)
            .into_par_iter()
            .map(|i| self.run(i))
            .collect()
    }

    pub fn run_batch(&self) -> Result<BatchStats, SimError> {
        let runs = self.scenario.repetitions;
        let mut completed = Vec::with_capacity(runs as usize);
        for outcome in self.run_all() {
            match outcome {
                Ok(report) => completed.push(report),
                Err(SimError::AuthAborted { .. }) => {}
                Err(other) => return Err(other),
            }
        }
        if completed.is_empty() {
            return Err(SimError::AllRunsAborted { runs });
        }

        let mut totals: Vec<Duration> = completed.iter().map(|r| r.total).collect();
        totals.sort_unstable();
        let n = completed.len() as u32;
        Ok(BatchStats {
            runs,
            completed: n,
            median: nearest_rank(&totals, 0.5).expect("non-empty"),
            p95: nearest_rank(&totals, 0.95).expect("non-empty"),
            client_median: median_of(completed.iter().map(|r| r.client_time).collect()),
            ap_median: median_of(completed.iter().map(|r| r.ap_time).collect()),
            server_median: median_of(completed.iter().map(|r| r.server_time).collect()),
            abort_rate: f64::from(runs - n) / f64::from(runs),
            logical_eap_messages: self.eap_messages,
            median_frames: median_of(completed.iter().map(|r| r.transmitted_frames).collect()),
        })
    }
}

pub fn run_auth(scenario: &Scenario, registry: &Registry, run_index: u32) -> Result<AuthReport, SimError> {
    Simulation::new(scenario, registry)?.run(run_index)
}

pub fn run_batch(scenario: &Scenario, registry: &Registry) -> Result<BatchStats, SimError> {
    Simulation::new(scenario, registry)?.run_batch()
}

/// One row of a comparison matrix.
#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub scenario: Scenario,
    /// Resolved scheme names; the raw identifiers when resolution failed.
    pub signature: String,
    pub kem: String,
    pub stats: Result<BatchStats, SimError>,
}

/// Runs every scenario; a failing row does not stop the others. Rows keep
/// input order.
pub fn compare_matrix(scenarios: &[Scenario], registry: &Registry) -> Vec<MatrixRow> {
    scenarios
        .par_iter()
        .map(|scenario| match Simulation::new(scenario, registry) {
            Ok(sim) => MatrixRow {
                scenario: scenario.clone(),
                signature: sim.signature().name.clone(),
                kem: sim.kem().name.clone(),
                stats: sim.run_batch(),
            },
            Err(e) => MatrixRow {
                scenario: scenario.clone(),
                signature: scenario.signature.clone(),
                kem: scenario.kem.clone(),
                stats: Err(e),
            },
        })
        .collect()
}

/// The twelve certificate schemes evaluated, baseline first.
pub const EVALUATED_SIGNATURES: [&str; 12] = [
    "RSA-2048",
    "Falcon-512",
    "ML-DSA-44",
    "SLH-DSA-SHA2-128f",
    "SLH-DSA-SHA2-128s",
    "ML-DSA-65",
    "SLH-DSA-SHA2-192f",
    "SLH-DSA-SHA2-192s",
    "Falcon-1024",
    "ML-DSA-87",
    "SLH-DSA-SHA2-256f",
    "SLH-DSA-SHA2-256s",
];

/// Signatures x situations x bands with every other setting at its default.
pub fn default_matrix(repetitions: u32, seed: u64) -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    for sig in EVALUATED_SIGNATURES {
        for situation in SignalSituation::ALL {
            for band in Band::ALL {
                scenarios.push(
                    Scenario::new(sig)
                        .with_situation(situation)
                        .with_band(band)
                        .with_repetitions(repetitions)
                        .with_seed(seed)
                        .with_id(format!("{sig}/{band}/{situation}")),
                );
            }
        }
    }
    scenarios
}
