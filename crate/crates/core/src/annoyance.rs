//! Quantum-annoyance threat model and deployment audit.
//!
//! Annoyance is ordinal: how many independent hard-problem instances a
//! quantum adversary must solve to keep gaining. Low annoyance means a
//! single break pays off broadly and is the most urgent to fix.

use std::fmt;

use serde::Serialize;

use crate::registry::{KemSpec, Registry, RegistryError, SignatureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AttackTarget {
    ClientCertificate,
    ServerCertificate,
    KeyShareSessionKey,
}

impl AttackTarget {
    pub const ALL: [AttackTarget; 3] = [
        AttackTarget::ClientCertificate,
        AttackTarget::ServerCertificate,
        AttackTarget::KeyShareSessionKey,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackTarget::ClientCertificate => "client certificate",
            AttackTarget::ServerCertificate => "server certificate",
            AttackTarget::KeyShareSessionKey => "key share/session key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AnnoyanceLevel {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Impact {
    pub confidentiality: bool,
    pub integrity: bool,
    pub availability: bool,
}

impl fmt::Display for Impact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |set: bool, c: char| if set { c } else { '-' };
        write!(
            f,
            "{}{}{}",
            mark(self.confidentiality, 'C'),
            mark(self.integrity, 'I'),
            mark(self.availability, 'A')
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AnnoyanceRating {
    pub target: AttackTarget,
    pub level: AnnoyanceLevel,
    pub impact: Impact,
}

pub fn rate_target(target: AttackTarget) -> AnnoyanceRating {
    let (level, impact) = match target {
        // One break per client, and it only lets the attacker join as that client.
        AttackTarget::ClientCertificate => (
            AnnoyanceLevel::Medium,
            Impact {
                confidentiality: false,
                integrity: true,
                availability: false,
            },
        ),
        // One break enables MITM and evil-twin attacks against everyone.
        AttackTarget::ServerCertificate => (
            AnnoyanceLevel::Low,
            Impact {
                confidentiality: true,
                integrity: true,
                availability: true,
            },
        ),
        // One break per session; keys are refreshed on every authentication.
        AttackTarget::KeyShareSessionKey => (
            AnnoyanceLevel::High,
            Impact {
                confidentiality: true,
                integrity: true,
                availability: false,
            },
        ),
    };
    AnnoyanceRating {
        target,
        level,
        impact,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Exposure {
    Exposed,
    Protected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub target: AttackTarget,
    pub scheme: String,
    pub exposure: Exposure,
    pub rating: AnnoyanceRating,
    /// Recorded key exchanges can be decrypted once a quantum computer exists.
    pub harvest_now_decrypt_later: bool,
}

/// Audit of one deployment. Exposed findings come first, most urgent (lowest
/// annoyance) first; protected findings follow in the same order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn exposed(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.exposure == Exposure::Exposed)
    }

    pub fn finding(&self, target: AttackTarget) -> Option<&Finding> {
        self.findings.iter().find(|f| f.target == target)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit report serializes")
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:<32} {:<10} {:<10} {:<6} HNDL",
            "target", "scheme", "status", "annoyance", "impact"
        )?;
        for finding in &self.findings {
            writeln!(
                f,
                "{:<24} {:<32} {:<10} {:<10} {:<6} {}",
                finding.target.as_str(),
                finding.scheme,
                format!("{:?}", finding.exposure).to_uppercase(),
                format!("{:?}", finding.rating.level),
                finding.rating.impact.to_string(),
                if finding.harvest_now_decrypt_later { "yes" } else { "-" }
            )?;
        }
        Ok(())
    }
}

/// Purely classical schemes are exposed; hybrids and post-quantum schemes
/// are protected.
pub fn audit(client_sig: &SignatureSpec, server_sig: &SignatureSpec, kem: &KemSpec) -> AuditReport {
    let mut findings: Vec<Finding> = AttackTarget::ALL
        .into_iter()
        .map(|target| {
            let (scheme, classical) = match target {
                AttackTarget::ClientCertificate => (&client_sig.name, client_sig.level.is_classical()),
                AttackTarget::ServerCertificate => (&server_sig.name, server_sig.level.is_classical()),
                AttackTarget::KeyShareSessionKey => (&kem.name, kem.level.is_classical()),
            };
            Finding {
                target,
                scheme: scheme.clone(),
                exposure: if classical {
                    Exposure::Exposed
                } else {
                    Exposure::Protected
                },
                rating: rate_target(target),
                harvest_now_decrypt_later: classical && target == AttackTarget::KeyShareSessionKey,
            }
        })
        .collect();
    findings.sort_by_key(|f| (f.exposure != Exposure::Exposed, f.rating.level));
    AuditReport { findings }
}

/// Resolves the three identifiers and audits the deployment.
pub fn evaluate_deployment(
    registry: &Registry,
    client_sig: &str,
    server_sig: &str,
    kem: &str,
) -> Result<AuditReport, RegistryError> {
    Ok(audit(
        &registry.lookup_signature(client_sig)?,
        &registry.lookup_signature(server_sig)?,
        &registry.lookup_kem(kem)?,
    ))
}
