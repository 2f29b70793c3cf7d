//! Two-threshold recommendation: few EAP messages and no more asymmetric
//! work than the RSA-2048 baseline.
//!
//! The cycle total is the sum of every signature and KEM operation run by
//! client and server during one full handshake. The baseline is the same
//! total for RSA-2048 with X25519 under identical method and chain shape.

use std::fmt;
use std::num::NonZeroU64;

use serde::Serialize;

use crate::handshake::{build_flights, count_eap_messages, total_crypto_cycles, ChainShape, EapMethod};
use crate::registry::{Registry, RSA_2048, X25519};
use crate::sim::{SimError, AUTO_KEM};

/// Exclusive upper bound on logical EAP messages.
pub const MESSAGE_LIMIT: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    TooManyMessages,
    CyclesExceedBaseline,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::TooManyMessages => "message count at or above 100",
            Reason::CyclesExceedBaseline => "cycle total exceeds RSA-2048 baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecommendationVerdict {
    pub algorithm: String,
    pub kem: String,
    pub eap_messages: u64,
    pub total_handshake_cycles: u64,
    pub baseline_cycles: u64,
    pub recommended: bool,
    pub reasons: Vec<Reason>,
}

fn handshake_cost(
    registry: &Registry,
    sig: &str,
    kem: &str,
    method: EapMethod,
    shape: &ChainShape,
    fragment_size: NonZeroU64,
) -> Result<(String, String, u64, u64), SimError> {
    let sig = registry.lookup_signature(sig)?;
    let kem = if kem.eq_ignore_ascii_case(AUTO_KEM) {
        registry.default_kem_for(&sig)?
    } else {
        registry.lookup_kem(kem)?
    };
    let flights = build_flights(method, &sig, &kem, shape)?;
    Ok((
        sig.name,
        kem.name,
        count_eap_messages(&flights, fragment_size),
        total_crypto_cycles(&flights),
    ))
}

pub fn classify_recommended(
    registry: &Registry,
    sig: &str,
    kem: &str,
    method: EapMethod,
    shape: &ChainShape,
    fragment_size: NonZeroU64,
) -> Result<RecommendationVerdict, SimError> {
    let (_, _, _, baseline_cycles) = handshake_cost(registry, RSA_2048, X25519, method, shape, fragment_size)?;
    let (algorithm, kem, eap_messages, cycles) = handshake_cost(registry, sig, kem, method, shape, fragment_size)?;
    let mut reasons = Vec::new();
    if eap_messages >= MESSAGE_LIMIT {
        reasons.push(Reason::TooManyMessages);
    }
    if cycles > baseline_cycles {
        reasons.push(Reason::CyclesExceedBaseline);
    }
    Ok(RecommendationVerdict {
        algorithm,
        kem,
        eap_messages,
        total_handshake_cycles: cycles,
        baseline_cycles,
        recommended: reasons.is_empty(),
        reasons,
    })
}
