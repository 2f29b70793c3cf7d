//! TOML scenario files.
//!
//! Top-level scenario keys are defaults. `[[scenario]]` entries override them
//! one by one; a `[matrix]` table expands the defaults over the listed axes.
//! Without either, the top level itself is the single scenario.
//!
//! ```toml
//! signature = "ML-DSA-65"
//! situation = "good"
//!
//! [chain]
//! length = 2
//!
//! [bands."5ghz"]
//! data_rate_bps = 12000000
//!
//! [registry.signatures."Falcon-512"]
//! sign_cycles = 1200000
//!
//! [matrix]
//! bands = ["2.4ghz", "5ghz"]
//! situations = ["excellent", "good", "very-weak"]
//! ```
//!
//! Unknown keys are rejected. Resolved scenarios carry a concrete KEM name.

use std::collections::BTreeMap;
use std::num::NonZeroU64;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::channel::{Band, BandProfile, RetryBackoff, SignalProfile, SignalSituation, WiredLink};
use crate::handshake::{build_flights, ChainShape, EapMethod};
use crate::registry::{KemOverride, Registry, RegistryError, SignatureOverride};
use crate::sim::Scenario;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {}{message}", key.as_ref().map(|k| format!("`{k}`: ")).unwrap_or_default())]
    Parse {
        line: usize,
        key: Option<String>,
        message: String,
    },
    #[error("line {line}: {source}")]
    Registry { line: usize, source: RegistryError },
}

impl ScenarioError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ScenarioError::Io { .. } => None,
            ScenarioError::Parse { line, .. } | ScenarioError::Registry { line, .. } => Some(*line),
        }
    }
}

/// Resolved contents of one file: the registry with overrides applied and the
/// scenarios in file order.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub registry: Registry,
    pub scenarios: Vec<Scenario>,
}

/// Seeds above `i64::MAX` do not fit a TOML integer and are written as hex
/// strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Seed {
    Int(u64),
    Hex(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainKeys {
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cert_overhead: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    handshake_overhead: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WiredKeys {
    #[serde(skip_serializing_if = "Option::is_none")]
    one_way_latency_us: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth_bps: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandKeys {
    data_rate_bps: Option<u64>,
    phy_mac_overhead_us: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SituationKeys {
    frame_loss_probability: Option<f64>,
    backoff_initial_us: Option<u64>,
    backoff_cap_us: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryKeys {
    #[serde(default)]
    signatures: BTreeMap<Spanned<String>, SignatureOverride>,
    #[serde(default)]
    kems: BTreeMap<Spanned<String>, KemOverride>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixKeys {
    signatures: Option<Vec<Spanned<String>>>,
    methods: Option<Vec<EapMethod>>,
    bands: Option<Vec<Band>>,
    situations: Option<Vec<SignalSituation>>,
    resumption: Option<Vec<bool>>,
}

/// Declares a struct holding every per-scenario key plus `extra` fields.
/// serde cannot combine `flatten` with `deny_unknown_fields`, so the
/// top-level document repeats the keys instead of embedding them.
macro_rules! scenario_keys {
    ($name:ident { $($extra:tt)* }) => {
        #[derive(Debug, Clone, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            #[serde(skip_serializing_if = "Option::is_none")]
            id: Option<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            method: Option<EapMethod>,
            #[serde(skip_serializing_if = "Option::is_none")]
            signature: Option<Spanned<String>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            kem: Option<Spanned<String>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            band: Option<Band>,
            #[serde(skip_serializing_if = "Option::is_none")]
            data_rate_bps: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            phy_mac_overhead_us: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            situation: Option<SignalSituation>,
            #[serde(skip_serializing_if = "Option::is_none")]
            frame_loss_probability: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            backoff_initial_us: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            backoff_cap_us: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            fragment_size: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            round_trip_limit: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            attempt_cap: Option<u32>,
            #[serde(skip_serializing_if = "Option::is_none")]
            client_cpu_hz: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            ap_cpu_hz: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            server_cpu_hz: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            ap_processing_us: Option<u64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            resumption: Option<bool>,
            #[serde(skip_serializing_if = "Option::is_none")]
            repetitions: Option<u32>,
            #[serde(skip_serializing_if = "Option::is_none")]
            seed: Option<Seed>,
            #[serde(skip_serializing_if = "Option::is_none")]
            chain: Option<ChainKeys>,
            #[serde(skip_serializing_if = "Option::is_none")]
            wired: Option<WiredKeys>,
            $($extra)*
        }

        impl $name {
            fn keys(&self) -> ScenarioKeys {
                ScenarioKeys {
                    id: self.id.clone(),
                    method: self.method,
                    signature: self.signature.clone(),
                    kem: self.kem.clone(),
                    band: self.band,
                    data_rate_bps: self.data_rate_bps,
                    phy_mac_overhead_us: self.phy_mac_overhead_us,
                    situation: self.situation,
                    frame_loss_probability: self.frame_loss_probability,
                    backoff_initial_us: self.backoff_initial_us,
                    backoff_cap_us: self.backoff_cap_us,
                    fragment_size: self.fragment_size,
                    round_trip_limit: self.round_trip_limit,
                    attempt_cap: self.attempt_cap,
                    client_cpu_hz: self.client_cpu_hz,
                    ap_cpu_hz: self.ap_cpu_hz,
                    server_cpu_hz: self.server_cpu_hz,
                    ap_processing_us: self.ap_processing_us,
                    resumption: self.resumption,
                    repetitions: self.repetitions,
                    seed: self.seed.clone(),
                    chain: self.chain.clone(),
                    wired: self.wired.clone(),
                }
            }
        }
    };
}

scenario_keys!(ScenarioKeys {});

scenario_keys!(FileDoc {
    #[serde(default, skip_serializing)]
    bands: BTreeMap<Band, BandKeys>,
    #[serde(default, skip_serializing)]
    situations: BTreeMap<SignalSituation, SituationKeys>,
    #[serde(default, skip_serializing)]
    registry: RegistryKeys,
    #[serde(default, skip_serializing)]
    matrix: Option<Spanned<MatrixKeys>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    scenario: Vec<Spanned<ScenarioKeys>>,
});

impl ScenarioKeys {
    /// `self` with every unset key taken from `base`.
    fn over(self, base: &ScenarioKeys) -> ScenarioKeys {
        let chain = match (self.chain, &base.chain) {
            (Some(c), Some(b)) => Some(ChainKeys {
                length: c.length.or(b.length),
                cert_overhead: c.cert_overhead.or(b.cert_overhead),
                handshake_overhead: c.handshake_overhead.or(b.handshake_overhead),
            }),
            (c, b) => c.or_else(|| b.clone()),
        };
        let wired = match (self.wired, &base.wired) {
            (Some(w), Some(b)) => Some(WiredKeys {
                one_way_latency_us: w.one_way_latency_us.or(b.one_way_latency_us),
                loss: w.loss.or(b.loss),
                bandwidth_bps: w.bandwidth_bps.or(b.bandwidth_bps),
            }),
            (w, b) => w.or_else(|| b.clone()),
        };
        ScenarioKeys {
            id: self.id.or_else(|| base.id.clone()),
            method: self.method.or(base.method),
            signature: self.signature.or_else(|| base.signature.clone()),
            kem: self.kem.or_else(|| base.kem.clone()),
            band: self.band.or(base.band),
            data_rate_bps: self.data_rate_bps.or(base.data_rate_bps),
            phy_mac_overhead_us: self.phy_mac_overhead_us.or(base.phy_mac_overhead_us),
            situation: self.situation.or(base.situation),
            frame_loss_probability: self.frame_loss_probability.or(base.frame_loss_probability),
            backoff_initial_us: self.backoff_initial_us.or(base.backoff_initial_us),
            backoff_cap_us: self.backoff_cap_us.or(base.backoff_cap_us),
            fragment_size: self.fragment_size.or(base.fragment_size),
            round_trip_limit: self.round_trip_limit.or(base.round_trip_limit),
            attempt_cap: self.attempt_cap.or(base.attempt_cap),
            client_cpu_hz: self.client_cpu_hz.or(base.client_cpu_hz),
            ap_cpu_hz: self.ap_cpu_hz.or(base.ap_cpu_hz),
            server_cpu_hz: self.server_cpu_hz.or(base.server_cpu_hz),
            ap_processing_us: self.ap_processing_us.or(base.ap_processing_us),
            resumption: self.resumption.or(base.resumption),
            repetitions: self.repetitions.or(base.repetitions),
            seed: self.seed.or_else(|| base.seed.clone()),
            chain,
            wired,
        }
    }

    fn from_scenario(s: &Scenario) -> ScenarioKeys {
        let seed = match i64::try_from(s.seed) {
            Ok(_) => Seed::Int(s.seed),
            Err(_) => Seed::Hex(format!("{:#x}", s.seed)),
        };
        ScenarioKeys {
            id: Some(s.id.clone()),
            method: Some(s.method),
            signature: Some(Spanned::new(0..0, s.signature.clone())),
            kem: Some(Spanned::new(0..0, s.kem.clone())),
            band: Some(s.band.band),
            data_rate_bps: Some(s.band.data_rate_bps),
            phy_mac_overhead_us: Some(s.band.phy_mac_overhead_us),
            situation: Some(s.situation.situation),
            frame_loss_probability: Some(s.situation.frame_loss_probability),
            backoff_initial_us: Some(s.situation.backoff.initial_us),
            backoff_cap_us: Some(s.situation.backoff.cap_us),
            fragment_size: Some(s.fragment_size.get()),
            round_trip_limit: Some(s.round_trip_limit),
            attempt_cap: Some(s.attempt_cap),
            client_cpu_hz: Some(s.client_cpu_hz),
            ap_cpu_hz: Some(s.ap_cpu_hz),
            server_cpu_hz: Some(s.server_cpu_hz),
            ap_processing_us: Some(s.ap_processing_us),
            resumption: Some(s.resumption),
            repetitions: Some(s.repetitions),
            seed: Some(seed),
            chain: Some(ChainKeys {
                length: Some(s.shape.chain_length()),
                cert_overhead: Some(s.shape.cert_encoding_overhead()),
                handshake_overhead: Some(s.shape.handshake_overhead()),
            }),
            wired: Some(WiredKeys {
                one_way_latency_us: Some(s.wired.one_way_latency_us),
                loss: Some(s.wired.loss),
                bandwidth_bps: s.wired.bandwidth_bps,
            }),
        }
    }
}

/// Converts byte offsets into 1-based line numbers.
struct Lines<'a> {
    source: &'a str,
}

impl Lines<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.source.len());
        self.source[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn key_at(&self, span: &Range<usize>) -> Option<String> {
        let text = self.source.get(span.clone())?.trim().trim_matches('"');
        let key = text.split(['=', '\n']).next()?.trim();
        (!key.is_empty() && key.len() < 64).then(|| key.to_string())
    }
}

struct Resolver<'a> {
    lines: Lines<'a>,
    registry: Registry,
    bands: BTreeMap<Band, BandKeys>,
    situations: BTreeMap<SignalSituation, SituationKeys>,
}

impl Resolver<'_> {
    fn parse_err(&self, span: &Range<usize>, key: &str, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse {
            line: self.lines.line(span),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn build(&self, keys: &ScenarioKeys, at: &Range<usize>) -> Result<Scenario, ScenarioError> {
        let signature = keys
            .signature
            .as_ref()
            .ok_or_else(|| self.parse_err(at, "signature", "no signature given"))?;
        let sig_span = signature.span();
        let mut s = Scenario::new(signature.get_ref());
        if let Some(id) = &keys.id {
            s.id = id.clone();
        }
        if let Some(method) = keys.method {
            s.method = method;
        }

        let band = keys.band.unwrap_or(s.band.band);
        let band_keys = self.bands.get(&band).cloned().unwrap_or_default();
        let default_band = BandProfile::default_for(band);
        s.band = BandProfile::new(
            band,
            keys.data_rate_bps
                .or(band_keys.data_rate_bps)
                .unwrap_or(default_band.data_rate_bps),
            keys.phy_mac_overhead_us
                .or(band_keys.phy_mac_overhead_us)
                .unwrap_or(default_band.phy_mac_overhead_us),
        )
        .map_err(|e| self.parse_err(at, "data_rate_bps", e.to_string()))?;

        let situation = keys.situation.unwrap_or(s.situation.situation);
        let sit_keys = self.situations.get(&situation).cloned().unwrap_or_default();
        let default_backoff = RetryBackoff::default();
        s.situation = SignalProfile::new(
            situation,
            keys.frame_loss_probability
                .or(sit_keys.frame_loss_probability)
                .unwrap_or(situation.default_loss()),
            RetryBackoff {
                initial_us: keys
                    .backoff_initial_us
                    .or(sit_keys.backoff_initial_us)
                    .unwrap_or(default_backoff.initial_us),
                cap_us: keys
                    .backoff_cap_us
                    .or(sit_keys.backoff_cap_us)
                    .unwrap_or(default_backoff.cap_us),
            },
        )
        .map_err(|e| self.parse_err(at, "frame_loss_probability", e.to_string()))?;

        if let Some(chain) = &keys.chain {
            let d = ChainShape::default();
            s.shape = ChainShape::new(
                chain.length.unwrap_or(d.chain_length()),
                chain.cert_overhead.unwrap_or(d.cert_encoding_overhead()),
                chain.handshake_overhead.unwrap_or(d.handshake_overhead()),
            )
            .map_err(|e| self.parse_err(at, "chain.length", e.to_string()))?;
        }
        if let Some(wired) = &keys.wired {
            let d = WiredLink::default();
            s.wired = WiredLink::new(
                wired.one_way_latency_us.unwrap_or(d.one_way_latency_us),
                wired.loss.unwrap_or(d.loss),
                wired.bandwidth_bps.or(d.bandwidth_bps),
            )
            .map_err(|e| self.parse_err(at, "wired", e.to_string()))?;
        }
        if let Some(size) = keys.fragment_size {
            s.fragment_size = NonZeroU64::new(size)
                .ok_or_else(|| self.parse_err(at, "fragment_size", "must be positive"))?;
        }
        s.round_trip_limit = keys.round_trip_limit.unwrap_or(s.round_trip_limit);
        s.attempt_cap = keys.attempt_cap.unwrap_or(s.attempt_cap);
        s.client_cpu_hz = keys.client_cpu_hz.unwrap_or(s.client_cpu_hz);
        s.ap_cpu_hz = keys.ap_cpu_hz.unwrap_or(s.ap_cpu_hz);
        s.server_cpu_hz = keys.server_cpu_hz.unwrap_or(s.server_cpu_hz);
        s.ap_processing_us = keys.ap_processing_us.unwrap_or(s.ap_processing_us);
        s.resumption = keys.resumption.unwrap_or(s.resumption);
        s.repetitions = keys.repetitions.unwrap_or(s.repetitions);
        if let Some(seed) = &keys.seed {
            s.seed = match seed {
                Seed::Int(v) => *v,
                Seed::Hex(text) => {
                    let digits = text.trim_start_matches("0x").trim_start_matches("0X");
                    u64::from_str_radix(digits, 16)
                        .map_err(|_| self.parse_err(at, "seed", format!("`{text}` is not a hex seed")))?
                }
            };
        }

        let kem_span = keys.kem.as_ref().map(|k| k.span()).unwrap_or_else(|| sig_span.clone());
        if let Some(kem) = &keys.kem {
            s.kem = kem.get_ref().clone();
        }
        let sig = self.registry.lookup_signature(&s.signature).map_err(|source| {
            ScenarioError::Registry {
                line: self.lines.line(&sig_span),
                source,
            }
        })?;
        let kem = if s.kem.eq_ignore_ascii_case(crate::sim::AUTO_KEM) {
            self.registry.default_kem_for(&sig)
        } else {
            self.registry.lookup_kem(&s.kem)
        }
        .map_err(|source| ScenarioError::Registry {
            line: self.lines.line(&kem_span),
            source,
        })?;
        s.kem = kem.name.clone();
        build_flights(s.method, &sig, &kem, &s.shape)
            .map_err(|e| self.parse_err(&kem_span, "kem", e.to_string()))?;
        s.validate().map_err(|e| self.parse_err(at, "scenario", e.to_string()))?;
        Ok(s)
    }

    fn expand(
        &self,
        base: &ScenarioKeys,
        matrix: &MatrixKeys,
        at: &Range<usize>,
    ) -> Result<Vec<Scenario>, ScenarioError> {
        let signatures: Vec<Option<Spanned<String>>> = match &matrix.signatures {
            Some(list) => list.iter().cloned().map(Some).collect(),
            None => vec![None],
        };
        let methods: Vec<Option<EapMethod>> = axis(&matrix.methods);
        let bands: Vec<Option<Band>> = axis(&matrix.bands);
        let situations: Vec<Option<SignalSituation>> = axis(&matrix.situations);
        let resumption: Vec<Option<bool>> = axis(&matrix.resumption);
        for (name, empty) in [
            ("matrix.signatures", matrix.signatures.as_ref().is_some_and(Vec::is_empty)),
            ("matrix.methods", matrix.methods.as_ref().is_some_and(Vec::is_empty)),
            ("matrix.bands", matrix.bands.as_ref().is_some_and(Vec::is_empty)),
            ("matrix.situations", matrix.situations.as_ref().is_some_and(Vec::is_empty)),
            ("matrix.resumption", matrix.resumption.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return Err(self.parse_err(at, name, "axis must not be empty"));
            }
        }

        let mut out = Vec::new();
        for sig in &signatures {
            for method in &methods {
                for band in &bands {
                    for situation in &situations {
                        for resume in &resumption {
                            let cell = ScenarioKeys {
                                signature: sig.clone(),
                                method: *method,
                                band: *band,
                                situation: *situation,
                                resumption: *resume,
                                ..ScenarioKeys::default()
                            }
                            .over(base);
                            let mut s = self.build(&cell, at)?;
                            let mut id = vec![
                                s.signature.clone(),
                                s.band.band.to_string(),
                                s.situation.situation.to_string(),
                            ];
                            if matrix.methods.is_some() {
                                id.push(s.method.to_string());
                            }
                            if matrix.resumption.is_some() && s.resumption {
                                id.push("resumption".to_string());
                            }
                            s.id = id.join("/");
                            out.push(s);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn axis<T: Copy>(values: &Option<Vec<T>>) -> Vec<Option<T>> {
    match values {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    }
}

/// Parses and resolves scenario text against the built-in registry.
pub fn parse_scenario_str(source: &str) -> Result<ScenarioSet, ScenarioError> {
    let lines = Lines { source };
    let doc: FileDoc = toml::from_str(source).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        ScenarioError::Parse {
            line: lines.line(&span),
            key: lines.key_at(&span),
            message: e.message().trim().to_string(),
        }
    })?;

    let mut registry = Registry::builtin();
    for (name, patch) in &doc.registry.signatures {
        registry
            .override_signature(name.get_ref(), patch)
            .map_err(|source| ScenarioError::Registry {
                line: lines.line(&name.span()),
                source,
            })?;
    }
    for (name, patch) in &doc.registry.kems {
        registry
            .override_kem(name.get_ref(), patch)
            .map_err(|source| ScenarioError::Registry {
                line: lines.line(&name.span()),
                source,
            })?;
    }

    let base = doc.keys();
    let resolver = Resolver {
        lines,
        registry,
        bands: doc.bands.clone(),
        situations: doc.situations.clone(),
    };

    let mut scenarios = Vec::new();
    for entry in &doc.scenario {
        let keys = entry.get_ref().keys().over(&base);
        scenarios.push(resolver.build(&keys, &entry.span())?);
    }
    if let Some(matrix) = &doc.matrix {
        scenarios.extend(resolver.expand(&base, matrix.get_ref(), &matrix.span())?);
    }
    if doc.scenario.is_empty() && doc.matrix.is_none() {
        scenarios.push(resolver.build(&base, &(0..0))?);
    }

    Ok(ScenarioSet {
        registry: resolver.registry,
        scenarios,
    })
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioSet, ScenarioError> {
    let source = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&source)
}

/// Writes every scenario as a fully explicit `[[scenario]]` block.
pub fn emit_scenarios(scenarios: &[Scenario]) -> String {
    #[derive(Serialize)]
    struct Doc {
        scenario: Vec<ScenarioKeys>,
    }
    let doc = Doc {
        scenario: scenarios.iter().map(ScenarioKeys::from_scenario).collect(),
    };
    toml::to_string(&doc).expect("scenario keys serialize")
}

/// Commented reference listing every key with its default value.
pub fn reference_document() -> String {
    let s = Scenario::new("ML-DSA-65");
    let d = ScenarioKeys::from_scenario(&s);
    let mut out = String::from(
        "# Scenario file reference. Every key is optional except `signature`.\n\
         # Top-level keys are defaults for [[scenario]] entries and [matrix] cells.\n\n",
    );
    let mut body = toml::to_string(&ScenarioKeys {
        id: None,
        kem: Some(Spanned::new(0..0, crate::sim::AUTO_KEM.to_string())),
        ..d
    })
    .expect("scenario keys serialize");
    // Radio values follow `band` and `situation` unless set explicitly.
    const PROFILE_KEYS: [&str; 5] = [
        "data_rate_bps",
        "phy_mac_overhead_us",
        "frame_loss_probability",
        "backoff_initial_us",
        "backoff_cap_us",
    ];
    body = body
        .lines()
        .map(|line| {
            let key = line.split(" =").next().unwrap_or_default();
            if PROFILE_KEYS.contains(&key) {
                format!("# {line}  (default follows band/situation)\n")
            } else {
                format!("{line}\n")
            }
        })
        .collect();
    body.push_str(
        "\n# Per-band and per-situation profile overrides.\n\
         # [bands.\"2.4ghz\"] data_rate_bps, phy_mac_overhead_us\n\
         # [situations.very-weak] frame_loss_probability, backoff_initial_us, backoff_cap_us\n\
         \n# Registry overrides.\n\
         # [registry.signatures.\"Falcon-512\"] public_key_bytes, secret_key_bytes, signature_bytes, sign_cycles, verify_cycles\n\
         # [registry.kems.\"ML-KEM-768\"] public_key_bytes, secret_key_bytes, ciphertext_bytes, keygen_cycles, encaps_cycles, decaps_cycles\n\
         \n# Cartesian expansion of the top-level defaults.\n\
         # [matrix] signatures, methods, bands, situations, resumption (arrays)\n",
    );
    out.push_str(&body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let set = parse_scenario_str("signature = \"ML-DSA-65\"\n").unwrap();
        assert_eq!(set.scenarios.len(), 1);
        let s = &set.scenarios[0];
        assert_eq!(s.band.band, Band::Band2_4GHz);
        assert_eq!(s.situation.situation, SignalSituation::Excellent);
        assert_eq!(s.kem, "ML-KEM-768");
        assert_eq!(s.method, EapMethod::EapTls);
        assert_eq!(s.seed, crate::sim::DEFAULT_SEED);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_scenario_str("signature = \"ML-DSA-65\"\nbandwith = 5\n").unwrap_err();
        match err {
            ScenarioError::Parse { line, key, message } => {
                assert_eq!(line, 2);
                assert_eq!(key.as_deref(), Some("bandwith"));
                assert!(message.contains("bandwith"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_nested_key() {
        let err = parse_scenario_str("signature = \"ML-DSA-65\"\n[chain]\nlenght = 2\n").unwrap_err();
        assert_eq!(err.line(), Some(3));
    }

    #[test]
    fn unknown_algorithm_has_line() {
        let err = parse_scenario_str("seed = 1\nsignature = \"ML-DSA-99\"\n").unwrap_err();
        match err {
            ScenarioError::Registry { line, source } => {
                assert_eq!(line, 2);
                assert!(matches!(source, RegistryError::UnknownAlgorithm(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn matrix_expansion() {
        let text = "signature = \"Falcon-512\"\n[matrix]\nbands = [\"2.4ghz\", \"5ghz\"]\n\
                    situations = [\"excellent\", \"good\", \"very-weak\"]\n";
        let set = parse_scenario_str(text).unwrap();
        assert_eq!(set.scenarios.len(), 6);
        assert_eq!(set.scenarios[0].id, "Falcon-512/2.4ghz/excellent");
        assert_eq!(set.scenarios[5].id, "Falcon-512/5ghz/very-weak");
    }

    #[test]
    fn entries_inherit_top_level() {
        let text = "situation = \"good\"\nseed = 7\n[chain]\nlength = 2\n\
                    [[scenario]]\nsignature = \"RSA-2048\"\n\
                    [[scenario]]\nsignature = \"Falcon-512\"\nseed = 9\n[scenario.chain]\ncert_overhead = 400\n";
        let set = parse_scenario_str(text).unwrap();
        assert_eq!(set.scenarios.len(), 2);
        assert_eq!(set.scenarios[0].kem, "X25519");
        assert_eq!(set.scenarios[0].seed, 7);
        assert_eq!(set.scenarios[1].seed, 9);
        assert_eq!(set.scenarios[1].shape.chain_length(), 2);
        assert_eq!(set.scenarios[1].shape.cert_encoding_overhead(), 400);
        assert!(set.scenarios.iter().all(|s| s.situation.situation == SignalSituation::Good));
    }

    #[test]
    fn profile_and_registry_overrides() {
        let text = "signature = \"Falcon-512\"\nband = \"5ghz\"\n\
                    [bands.\"5ghz\"]\ndata_rate_bps = 12000000\n\
                    [registry.signatures.\"Falcon-512\"]\nsign_cycles = 5\n";
        let set = parse_scenario_str(text).unwrap();
        assert_eq!(set.scenarios[0].band.data_rate_bps, 12_000_000);
        assert_eq!(set.registry.lookup_signature("Falcon-512").unwrap().sign_cycles, 5);
    }

    #[test]
    fn missing_signature() {
        let err = parse_scenario_str("seed = 3\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { key: Some(ref k), .. } if k == "signature"));
    }

    #[test]
    fn big_seed_round_trips() {
        let s = vec![Scenario::new("Falcon-512").with_kem("ML-KEM-512").with_seed(u64::MAX)];
        let back = parse_scenario_str(&emit_scenarios(&s)).unwrap().scenarios;
        assert_eq!(back, s);
    }

    #[test]
    fn reference_parses() {
        let set = parse_scenario_str(&reference_document()).unwrap();
        assert_eq!(set.scenarios[0].kem, "ML-KEM-768");
    }
}
