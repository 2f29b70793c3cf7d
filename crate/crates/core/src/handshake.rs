//! EAP-TLS / EAP-TTLS message flights, their EAP fragmentation, resumption
//! flights and the per-session cache footprint.

use std::fmt;
use std::num::NonZeroU64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{KemSpec, SignatureSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HandshakeError {
    #[error("invalid chain shape: {0}")]
    InvalidShape(&'static str),
    #[error("incompatible configuration: {0}")]
    IncompatibleConfig(String),
    #[error("{round_trips} EAP round trips exceed the limit of {limit}")]
    RoundTripLimitExceeded { round_trips: u64, limit: u64 },
}

/// Default EAP fragment size in bytes.
pub const DEFAULT_FRAGMENT_SIZE: NonZeroU64 = NonZeroU64::new(1398).unwrap();
/// Default cap on EAP round trips per authentication.
pub const DEFAULT_ROUND_TRIP_LIMIT: u64 = 500;

/// EAP-Response/Identity payload (an outer identity such as `anonymous@realm`).
pub const IDENTITY_RESPONSE_BYTES: u64 = 16;
/// Inner EAP-TTLS authentication exchange carried instead of a client chain.
pub const TTLS_INNER_AUTH_BYTES: u64 = 200;
/// TLS record carrying the one-byte success indication ahead of EAP-Success.
pub const SERVER_FINISH_BYTES: u64 = 23;
/// pre_shared_key extension with one 32-byte identity and a SHA-256 binder.
pub const PSK_EXTENSION_BYTES: u64 = 79;
/// Fixed part of a stateful session-cache entry; the rest is the client's
/// public key and certificate signature.
pub const CACHE_BASE_BYTES: u64 = 654;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EapMethod {
    #[serde(rename = "eap-tls")]
    EapTls,
    #[serde(rename = "eap-ttls")]
    EapTtls,
}

impl EapMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EapMethod::EapTls => "eap-tls",
            EapMethod::EapTtls => "eap-ttls",
        }
    }
}

impl fmt::Display for EapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlightLabel {
    IdentityRequest,
    IdentityResponse,
    TlsStart,
    ClientHello,
    ServerFlight,
    ClientFlight,
    ServerFinish,
}

impl FlightLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FlightLabel::IdentityRequest => "IdentityRequest",
            FlightLabel::IdentityResponse => "IdentityResponse",
            FlightLabel::TlsStart => "TlsStart",
            FlightLabel::ClientHello => "ClientHello",
            FlightLabel::ServerFlight => "ServerFlight",
            FlightLabel::ClientFlight => "ClientFlight",
            FlightLabel::ServerFinish => "ServerFinish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

impl Direction {
    pub fn sender(self) -> Entity {
        match self {
            Direction::ClientToServer => Entity::Client,
            Direction::ServerToClient => Entity::Server,
        }
    }

    pub fn reversed(self) -> Direction {
        match self {
            Direction::ClientToServer => Direction::ServerToClient,
            Direction::ServerToClient => Direction::ClientToServer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entity {
    Client,
    AccessPoint,
    Server,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    KemKeygen,
    KemEncaps,
    KemDecaps,
    Sign,
    Verify,
}

impl OpKind {
    pub fn is_signature_op(self) -> bool {
        matches!(self, OpKind::Sign | OpKind::Verify)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CryptoOp {
    pub entity: Entity,
    pub kind: OpKind,
    pub cycles: u64,
}

/// One directional handshake payload. Operations owned by the sender run
/// before the flight departs; those owned by the receiver run on arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flight {
    pub label: FlightLabel,
    pub direction: Direction,
    pub payload_bytes: u64,
    pub crypto_ops: Vec<CryptoOp>,
}

impl Flight {
    fn new(label: FlightLabel, direction: Direction, payload_bytes: u64) -> Self {
        Flight {
            label,
            direction,
            payload_bytes,
            crypto_ops: Vec::new(),
        }
    }

    fn op(mut self, entity: Entity, kind: OpKind, cycles: u64, count: u64) -> Self {
        for _ in 0..count {
            self.crypto_ops.push(CryptoOp {
                entity,
                kind,
                cycles,
            });
        }
        self
    }

    pub fn sender(&self) -> Entity {
        self.direction.sender()
    }

    pub fn receiver(&self) -> Entity {
        self.direction.reversed().sender()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub flight_label: FlightLabel,
    pub index: u64,
    pub bytes: u64,
}

/// Certificate chain geometry per peer and the fixed per-flight handshake
/// overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawChainShape", into = "RawChainShape")]
pub struct ChainShape {
    chain_length: u64,
    cert_encoding_overhead: u64,
    handshake_overhead: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChainShape {
    length: u64,
    cert_overhead: u64,
    handshake_overhead: u64,
}

impl TryFrom<RawChainShape> for ChainShape {
    type Error = HandshakeError;

    fn try_from(raw: RawChainShape) -> Result<Self, Self::Error> {
        ChainShape::new(raw.length, raw.cert_overhead, raw.handshake_overhead)
    }
}

impl From<ChainShape> for RawChainShape {
    fn from(shape: ChainShape) -> Self {
        RawChainShape {
            length: shape.chain_length,
            cert_overhead: shape.cert_encoding_overhead,
            handshake_overhead: shape.handshake_overhead,
        }
    }
}

impl Default for ChainShape {
    /// Leaf-only chain, 600 bytes of X.509 encoding per certificate and 170
    /// bytes of hello headers, extensions and Finished per flight.
    fn default() -> Self {
        ChainShape {
            chain_length: 1,
            cert_encoding_overhead: 600,
            handshake_overhead: 170,
        }
    }
}

impl ChainShape {
    pub fn new(
        chain_length: u64,
        cert_encoding_overhead: u64,
        handshake_overhead: u64,
    ) -> Result<Self, HandshakeError> {
        if chain_length == 0 {
            return Err(HandshakeError::InvalidShape("chain length must be at least 1"));
        }
        Ok(ChainShape {
            chain_length,
            cert_encoding_overhead,
            handshake_overhead,
        })
    }

    pub fn chain_length(&self) -> u64 {
        self.chain_length
    }

    pub fn cert_encoding_overhead(&self) -> u64 {
        self.cert_encoding_overhead
    }

    pub fn handshake_overhead(&self) -> u64 {
        self.handshake_overhead
    }
}

/// Bytes of one peer's certificate chain. Every certificate carries a subject
/// public key and one issuer signature of the same scheme.
pub fn certificate_chain_bytes(sig: &SignatureSpec, shape: &ChainShape) -> u64 {
    shape.chain_length * (shape.cert_encoding_overhead + sig.public_key_bytes + sig.signature_bytes)
}

fn identity_round_trip() -> [Flight; 2] {
    [
        Flight::new(FlightLabel::IdentityRequest, Direction::ServerToClient, 0),
        Flight::new(
            FlightLabel::IdentityResponse,
            Direction::ClientToServer,
            IDENTITY_RESPONSE_BYTES,
        ),
    ]
}

/// Full-handshake flights in wire order.
///
/// The client sends its ClientHello after the server's EAP-TLS Start. A
/// post-quantum signature paired with a purely classical key exchange is
/// rejected.
pub fn build_flights(
    method: EapMethod,
    sig: &SignatureSpec,
    kem: &KemSpec,
    shape: &ChainShape,
) -> Result<Vec<Flight>, HandshakeError> {
    if kem.level.is_classical() && !sig.level.is_classical() {
        return Err(HandshakeError::IncompatibleConfig(format!(
            "post-quantum signature {} with classical key exchange {}",
            sig.name, kem.name
        )));
    }

    let overhead = shape.handshake_overhead;
    let chain = certificate_chain_bytes(sig, shape);
    let verifies = shape.chain_length + 1;

    let mut flights = Vec::with_capacity(7);
    flights.extend(identity_round_trip());
    flights.push(Flight::new(FlightLabel::TlsStart, Direction::ServerToClient, 0));
    flights.push(
        Flight::new(
            FlightLabel::ClientHello,
            Direction::ClientToServer,
            kem.public_key_bytes + overhead,
        )
        .op(Entity::Client, OpKind::KemKeygen, kem.keygen_cycles, 1),
    );
    flights.push(
        Flight::new(
            FlightLabel::ServerFlight,
            Direction::ServerToClient,
            kem.ciphertext_bytes + chain + sig.signature_bytes + overhead,
        )
        .op(Entity::Server, OpKind::KemEncaps, kem.encaps_cycles, 1)
        .op(Entity::Server, OpKind::Sign, sig.sign_cycles, 1)
        .op(Entity::Client, OpKind::KemDecaps, kem.decaps_cycles, 1)
        .op(Entity::Client, OpKind::Verify, sig.verify_cycles, verifies),
    );
    let client_flight = match method {
        EapMethod::EapTls => Flight::new(
            FlightLabel::ClientFlight,
            Direction::ClientToServer,
            chain + sig.signature_bytes + overhead,
        )
        .op(Entity::Client, OpKind::Sign, sig.sign_cycles, 1)
        .op(Entity::Server, OpKind::Verify, sig.verify_cycles, verifies),
        EapMethod::EapTtls => Flight::new(
            FlightLabel::ClientFlight,
            Direction::ClientToServer,
            TTLS_INNER_AUTH_BYTES + overhead,
        ),
    };
    flights.push(client_flight);
    flights.push(Flight::new(
        FlightLabel::ServerFinish,
        Direction::ServerToClient,
        SERVER_FINISH_BYTES,
    ));
    Ok(flights)
}

/// Abbreviated PSK handshake: a fresh key exchange, no certificates and no
/// signature operations.
pub fn resumption_flights(kem: &KemSpec, shape: &ChainShape) -> Vec<Flight> {
    let overhead = shape.handshake_overhead;
    let mut flights = Vec::with_capacity(7);
    flights.extend(identity_round_trip());
    flights.push(Flight::new(FlightLabel::TlsStart, Direction::ServerToClient, 0));
    flights.push(
        Flight::new(
            FlightLabel::ClientHello,
            Direction::ClientToServer,
            kem.public_key_bytes + PSK_EXTENSION_BYTES + overhead,
        )
        .op(Entity::Client, OpKind::KemKeygen, kem.keygen_cycles, 1),
    );
    flights.push(
        Flight::new(
            FlightLabel::ServerFlight,
            Direction::ServerToClient,
            kem.ciphertext_bytes + overhead,
        )
        .op(Entity::Server, OpKind::KemEncaps, kem.encaps_cycles, 1)
        .op(Entity::Client, OpKind::KemDecaps, kem.decaps_cycles, 1),
    );
    // Client Finished only.
    flights.push(Flight::new(
        FlightLabel::ClientFlight,
        Direction::ClientToServer,
        overhead,
    ));
    flights.push(Flight::new(
        FlightLabel::ServerFinish,
        Direction::ServerToClient,
        SERVER_FINISH_BYTES,
    ));
    flights
}

/// Number of EAP fragments a payload occupies. Empty payloads still need
/// one message.
pub fn fragment_count(payload_bytes: u64, fragment_size: NonZeroU64) -> u64 {
    payload_bytes.div_ceil(fragment_size.get()).max(1)
}

pub fn fragment_flight(flight: &Flight, fragment_size: NonZeroU64) -> Vec<Fragment> {
    let size = fragment_size.get();
    let count = fragment_count(flight.payload_bytes, fragment_size);
    (0..count)
        .map(|index| Fragment {
            flight_label: flight.label,
            index,
            bytes: (flight.payload_bytes - index * size).min(size),
        })
        .collect()
}

/// EAP round trips (one per fragment) over all flights.
pub fn count_round_trips(flights: &[Flight], fragment_size: NonZeroU64) -> u64 {
    flights
        .iter()
        .map(|f| fragment_count(f.payload_bytes, fragment_size))
        .sum()
}

/// Logical EAP messages: each fragment is a request plus its acknowledging
/// response. Retransmissions are not counted.
pub fn count_eap_messages(flights: &[Flight], fragment_size: NonZeroU64) -> u64 {
    2 * count_round_trips(flights, fragment_size)
}

pub fn check_round_trip_limit(
    flights: &[Flight],
    fragment_size: NonZeroU64,
    limit: u64,
) -> Result<u64, HandshakeError> {
    let round_trips = count_round_trips(flights, fragment_size);
    if round_trips > limit {
        return Err(HandshakeError::RoundTripLimitExceeded { round_trips, limit });
    }
    Ok(round_trips)
}

pub fn total_payload_bytes(flights: &[Flight]) -> u64 {
    flights.iter().map(|f| f.payload_bytes).sum()
}

/// Sum of every asymmetric operation executed by client and server.
pub fn total_crypto_cycles(flights: &[Flight]) -> u64 {
    flights
        .iter()
        .flat_map(|f| &f.crypto_ops)
        .map(|op| op.cycles)
        .sum()
}

/// Stateful session-cache entry size on the server.
pub fn session_cache_entry_bytes(client_sig: &SignatureSpec) -> u64 {
    CACHE_BASE_BYTES + client_sig.public_key_bytes + client_sig.signature_bytes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResumptionMode {
    Stateful,
    Stateless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SessionStorage {
    pub server_bytes: u64,
    pub client_bytes: u64,
}

/// Where the resumption state lives: the server cache for stateful
/// resumption, or a ticket of the same size held by the client.
pub fn resumption_storage(client_sig: &SignatureSpec, mode: ResumptionMode) -> SessionStorage {
    let entry = session_cache_entry_bytes(client_sig);
    match mode {
        ResumptionMode::Stateful => SessionStorage {
            server_bytes: entry,
            client_bytes: 0,
        },
        ResumptionMode::Stateless => SessionStorage {
            server_bytes: 0,
            client_bytes: entry,
        },
    }
}

/// Flight table as CSV: label, direction, payload bytes and fragment count.
pub fn flights_to_csv(flights: &[Flight], fragment_size: NonZeroU64) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["label", "direction", "bytes", "fragments"])
        .expect("in-memory write");
    for f in flights {
        let direction = match f.direction {
            Direction::ClientToServer => "client-to-server",
            Direction::ServerToClient => "server-to-client",
        };
        out.write_record([
            f.label.as_str(),
            direction,
            &f.payload_bytes.to_string(),
            &fragment_count(f.payload_bytes, fragment_size).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Per-fragment table as CSV: flight label, fragment index and bytes.
pub fn fragments_to_csv(flights: &[Flight], fragment_size: NonZeroU64) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["label", "index", "bytes"])
        .expect("in-memory write");
    for frag in flights.iter().flat_map(|f| fragment_flight(f, fragment_size)) {
        out.write_record([
            frag.flight_label.as_str(),
            &frag.index.to_string(),
            &frag.bytes.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Registry;

    fn nz(v: u64) -> NonZeroU64 {
        NonZeroU64::new(v).unwrap()
    }

    fn flight(bytes: u64) -> Flight {
        Flight::new(FlightLabel::ServerFlight, Direction::ServerToClient, bytes)
    }

    #[test]
    fn chain_bytes() {
        let r = Registry::builtin();
        let shape = ChainShape::new(1, 600, 170).unwrap();
        let mldsa44 = r.lookup_signature("ML-DSA-44").unwrap();
        assert_eq!(certificate_chain_bytes(&mldsa44, &shape), 4_332);

        let shape = ChainShape::new(2, 600, 170).unwrap();
        let slh = r.lookup_signature("SLH-DSA-SHA2-256f").unwrap();
        assert_eq!(certificate_chain_bytes(&slh, &shape), 101_040);
    }

    #[test]
    fn zero_length_chain_rejected() {
        assert!(matches!(
            ChainShape::new(0, 600, 170),
            Err(HandshakeError::InvalidShape(_))
        ));
        let parsed: Result<ChainShape, _> =
            toml::from_str("length = 0\ncert_overhead = 600\nhandshake_overhead = 170");
        assert!(parsed.is_err());
    }

    #[test]
    fn fragments_of_3000() {
        let frags = fragment_flight(&flight(3_000), nz(1_398));
        let bytes: Vec<u64> = frags.iter().map(|f| f.bytes).collect();
        assert_eq!(bytes, vec![1_398, 1_398, 204]);
        assert_eq!(frags[2].index, 2);
    }

    #[test]
    fn empty_and_exact_payloads() {
        let frags = fragment_flight(&flight(0), nz(1_398));
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].bytes, 0);
        assert_eq!(fragment_flight(&flight(1_398), nz(1_398)).len(), 1);
    }

    #[test]
    fn message_counts() {
        let flights = vec![flight(3_000), flight(10), flight(0), flight(1_398)];
        assert_eq!(count_eap_messages(&flights, nz(1_398)), 12);
        let empty = vec![flight(0); 5];
        assert_eq!(count_eap_messages(&empty, nz(1_398)), 10);
    }

    #[test]
    fn rsa_baseline_client_sign() {
        let r = Registry::builtin();
        let rsa = r.lookup_signature("RSA-2048").unwrap();
        let x25519 = r.lookup_kem("X25519").unwrap();
        let flights = build_flights(EapMethod::EapTls, &rsa, &x25519, &ChainShape::default()).unwrap();
        let client = flights
            .iter()
            .find(|f| f.label == FlightLabel::ClientFlight)
            .unwrap();
        let signs: Vec<_> = client
            .crypto_ops
            .iter()
            .filter(|op| op.kind == OpKind::Sign)
            .collect();
        assert_eq!(signs.len(), 1);
        assert_eq!(signs[0].entity, Entity::Client);
        assert_eq!(signs[0].cycles, 27_000_000);
    }

    #[test]
    fn ttls_has_no_client_sign() {
        let r = Registry::builtin();
        let sig = r.lookup_signature("ML-DSA-65").unwrap();
        let kem = r.lookup_kem("ML-KEM-768").unwrap();
        let flights = build_flights(EapMethod::EapTtls, &sig, &kem, &ChainShape::default()).unwrap();
        let client_signs = flights
            .iter()
            .flat_map(|f| &f.crypto_ops)
            .filter(|op| op.kind == OpKind::Sign && op.entity == Entity::Client)
            .count();
        assert_eq!(client_signs, 0);
    }

    #[test]
    fn falcon_server_flight_payload() {
        let r = Registry::builtin();
        let sig = r.lookup_signature("Falcon-512").unwrap();
        let kem = r.lookup_kem("ML-KEM-512").unwrap();
        let shape = ChainShape::default();
        let flights = build_flights(EapMethod::EapTls, &sig, &kem, &shape).unwrap();
        let server = flights
            .iter()
            .find(|f| f.label == FlightLabel::ServerFlight)
            .unwrap();
        assert_eq!(
            server.payload_bytes,
            768 + (600 + 897 + 666) + 666 + shape.handshake_overhead()
        );
    }

    #[test]
    fn directions_alternate() {
        let r = Registry::builtin();
        let sig = r.lookup_signature("ML-DSA-44").unwrap();
        let kem = r.lookup_kem("ML-KEM-512").unwrap();
        for method in [EapMethod::EapTls, EapMethod::EapTtls] {
            let flights = build_flights(method, &sig, &kem, &ChainShape::default()).unwrap();
            for pair in flights.windows(2) {
                assert_ne!(pair[0].direction, pair[1].direction);
            }
        }
        for pair in resumption_flights(&kem, &ChainShape::default()).windows(2) {
            assert_ne!(pair[0].direction, pair[1].direction);
        }
    }

    #[test]
    fn pq_signature_with_classical_kem_is_incompatible() {
        let r = Registry::builtin();
        let sig = r.lookup_signature("ML-DSA-65").unwrap();
        let kem = r.lookup_kem("X25519").unwrap();
        assert!(matches!(
            build_flights(EapMethod::EapTls, &sig, &kem, &ChainShape::default()),
            Err(HandshakeError::IncompatibleConfig(_))
        ));
    }

    #[test]
    fn resumption_key_share_and_no_signatures() {
        let r = Registry::builtin();
        let kem = r.lookup_kem("ML-KEM-1024").unwrap();
        let shape = ChainShape::default();
        let flights = resumption_flights(&kem, &shape);
        let hello = flights
            .iter()
            .find(|f| f.label == FlightLabel::ClientHello)
            .unwrap();
        assert_eq!(
            hello.payload_bytes,
            1_568 + PSK_EXTENSION_BYTES + shape.handshake_overhead()
        );
        assert!(flights
            .iter()
            .flat_map(|f| &f.crypto_ops)
            .all(|op| !op.kind.is_signature_op()));
    }

    #[test]
    fn cache_entries() {
        let r = Registry::builtin();
        let entry = |n: &str| session_cache_entry_bytes(&r.lookup_signature(n).unwrap());
        assert_eq!(entry("SLH-DSA-SHA2-256f"), 50_574);
        assert_eq!(entry("SLH-DSA-SHA2-192s"), 16_926);
        assert_eq!(entry("ML-DSA-44"), 4_386);
    }

    #[test]
    fn storage_modes() {
        let r = Registry::builtin();
        let sig = r.lookup_signature("Falcon-512").unwrap();
        let stateful = resumption_storage(&sig, ResumptionMode::Stateful);
        let stateless = resumption_storage(&sig, ResumptionMode::Stateless);
        assert_eq!(stateful.server_bytes, session_cache_entry_bytes(&sig));
        assert_eq!(stateless.server_bytes, 0);
        assert_eq!(stateless.client_bytes, stateful.server_bytes);
    }

    #[test]
    fn round_trip_limit() {
        let flights = vec![flight(1_398 * 10)];
        assert_eq!(check_round_trip_limit(&flights, nz(1_398), 10), Ok(10));
        assert_eq!(
            check_round_trip_limit(&flights, nz(1_398), 9),
            Err(HandshakeError::RoundTripLimitExceeded {
                round_trips: 10,
                limit: 9
            })
        );
    }

    #[test]
    fn flight_csv_shape() {
        let flights = vec![flight(3_000)];
        let csv = flights_to_csv(&flights, nz(1_398));
        assert_eq!(
            csv,
            "label,direction,bytes,fragments\nServerFlight,server-to-client,3000,3\n"
        );
        let frags = fragments_to_csv(&flights, nz(1_398));
        assert_eq!(frags.lines().count(), 4);
    }
}
