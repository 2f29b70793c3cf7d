//! Deterministic simulator and analysis toolkit for post-quantum
//! WPA-Enterprise authentication (EAP-TLS and EAP-TTLS over RADIUS and
//! Wi-Fi).

pub mod annoyance;
pub mod channel;
pub mod handshake;
pub mod registry;
pub mod sim;
pub mod scenario;
pub mod recommend;
pub mod report;
