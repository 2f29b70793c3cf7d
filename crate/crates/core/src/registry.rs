//! Scheme metadata for the signature schemes and KEMs under study.
//!
//! The registry stores sizes, cycle counts and NIST levels only; nothing here
//! signs, verifies or encapsulates. Hybrid schemes are built by a plain
//! concatenation combiner: every byte and cycle field is the sum of the
//! classical and post-quantum components.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("no KEM registered for security level {0}")]
    NoMatchingKem(SecurityLevel),
    #[error("invalid hybrid `{classical}` + `{pq}`: {reason}")]
    InvalidHybrid {
        classical: String,
        pq: String,
        reason: &'static str,
    },
    #[error("invalid registry entry `{name}`: {reason}")]
    InvalidEntry { name: String, reason: &'static str },
}

/// NIST post-quantum security category, or `Classical` for schemes with no
/// post-quantum security at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecurityLevel {
    L1,
    L2,
    L3,
    L5,
    Classical,
}

impl SecurityLevel {
    /// Numeric NIST category, `None` for classical schemes.
    pub fn category(self) -> Option<u8> {
        match self {
            SecurityLevel::L1 => Some(1),
            SecurityLevel::L2 => Some(2),
            SecurityLevel::L3 => Some(3),
            SecurityLevel::L5 => Some(5),
            SecurityLevel::Classical => None,
        }
    }

    pub fn is_classical(self) -> bool {
        self == SecurityLevel::Classical
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SecurityLevel::L1 => "L1",
            SecurityLevel::L2 => "L2",
            SecurityLevel::L3 => "L3",
            SecurityLevel::L5 => "L5",
            SecurityLevel::Classical => "Classical",
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureSpec {
    pub name: String,
    pub problem_type: String,
    pub public_key_bytes: u64,
    pub secret_key_bytes: u64,
    pub signature_bytes: u64,
    pub sign_cycles: u64,
    pub verify_cycles: u64,
    pub level: SecurityLevel,
    /// Set on concatenation hybrids.
    #[serde(default)]
    pub hybrid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KemSpec {
    pub name: String,
    pub problem_type: String,
    /// Key share sent by the initiator.
    pub public_key_bytes: u64,
    pub secret_key_bytes: u64,
    /// Key share returned by the responder. For ECDH this is the responder's
    /// public share.
    pub ciphertext_bytes: u64,
    pub keygen_cycles: u64,
    pub encaps_cycles: u64,
    pub decaps_cycles: u64,
    pub level: SecurityLevel,
    #[serde(default)]
    pub hybrid: bool,
}

impl SignatureSpec {
    fn validate(&self) -> Result<(), RegistryError> {
        let fields = [
            self.public_key_bytes,
            self.secret_key_bytes,
            self.signature_bytes,
            self.sign_cycles,
            self.verify_cycles,
        ];
        if fields.contains(&0) {
            return Err(RegistryError::InvalidEntry {
                name: self.name.clone(),
                reason: "byte and cycle counts must be positive",
            });
        }
        Ok(())
    }
}

impl KemSpec {
    fn validate(&self) -> Result<(), RegistryError> {
        let fields = [
            self.public_key_bytes,
            self.secret_key_bytes,
            self.ciphertext_bytes,
            self.keygen_cycles,
            self.encaps_cycles,
            self.decaps_cycles,
        ];
        if fields.contains(&0) {
            return Err(RegistryError::InvalidEntry {
                name: self.name.clone(),
                reason: "byte and cycle counts must be positive",
            });
        }
        Ok(())
    }
}

/// A classical/post-quantum pair and the scheme produced by concatenating them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridSpec<T> {
    pub classical: T,
    pub pq: T,
    pub combined: T,
}

fn check_hybrid_levels(
    classical: (&str, SecurityLevel),
    pq: (&str, SecurityLevel),
) -> Result<(), RegistryError> {
    let reason = match (classical.1.is_classical(), pq.1.is_classical()) {
        (true, false) => return Ok(()),
        (true, true) => "both components are classical",
        (false, false) => "both components are post-quantum",
        (false, true) => "components are in the wrong order",
    };
    Err(RegistryError::InvalidHybrid {
        classical: classical.0.to_string(),
        pq: pq.0.to_string(),
        reason,
    })
}

/// Concatenates a classical and a post-quantum signature scheme.
pub fn make_hybrid_signature(
    classical: &SignatureSpec,
    pq: &SignatureSpec,
) -> Result<SignatureSpec, RegistryError> {
    check_hybrid_levels(
        (&classical.name, classical.level),
        (&pq.name, pq.level),
    )?;
    Ok(SignatureSpec {
        name: format!("{}+{}", classical.name, pq.name),
        problem_type: format!("{} + {}", classical.problem_type, pq.problem_type),
        public_key_bytes: classical.public_key_bytes + pq.public_key_bytes,
        secret_key_bytes: classical.secret_key_bytes + pq.secret_key_bytes,
        signature_bytes: classical.signature_bytes + pq.signature_bytes,
        sign_cycles: classical.sign_cycles + pq.sign_cycles,
        verify_cycles: classical.verify_cycles + pq.verify_cycles,
        level: pq.level,
        hybrid: true,
    })
}

/// Concatenates a classical key exchange and a post-quantum KEM.
pub fn make_hybrid_kem(classical: &KemSpec, pq: &KemSpec) -> Result<KemSpec, RegistryError> {
    check_hybrid_levels(
        (&classical.name, classical.level),
        (&pq.name, pq.level),
    )?;
    Ok(KemSpec {
        name: format!("{}+{}", classical.name, pq.name),
        problem_type: format!("{} + {}", classical.problem_type, pq.problem_type),
        public_key_bytes: classical.public_key_bytes + pq.public_key_bytes,
        secret_key_bytes: classical.secret_key_bytes + pq.secret_key_bytes,
        ciphertext_bytes: classical.ciphertext_bytes + pq.ciphertext_bytes,
        keygen_cycles: classical.keygen_cycles + pq.keygen_cycles,
        encaps_cycles: classical.encaps_cycles + pq.encaps_cycles,
        decaps_cycles: classical.decaps_cycles + pq.decaps_cycles,
        level: pq.level,
        hybrid: true,
    })
}

/// Lower-cases and strips separators so that `slh-dsa-sha2-128f`,
/// `SLH-DSA-128f` and `SLH_DSA_SHA2_128F` compare equal.
pub fn canonical_name(name: &str) -> String {
    let squashed: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '+')
        .map(|c| c.to_ascii_lowercase())
        .collect();
    squashed.replace("slhdsasha2", "slhdsa")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NamedHybrid {
    name: String,
    classical: String,
    pq: String,
}

/// Partial update applied to a registered signature scheme.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureOverride {
    pub public_key_bytes: Option<u64>,
    pub secret_key_bytes: Option<u64>,
    pub signature_bytes: Option<u64>,
    pub sign_cycles: Option<u64>,
    pub verify_cycles: Option<u64>,
}

/// Partial update applied to a registered KEM.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KemOverride {
    pub public_key_bytes: Option<u64>,
    pub secret_key_bytes: Option<u64>,
    pub ciphertext_bytes: Option<u64>,
    pub keygen_cycles: Option<u64>,
    pub encaps_cycles: Option<u64>,
    pub decaps_cycles: Option<u64>,
}

/// Immutable-after-construction scheme table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    signatures: Vec<SignatureSpec>,
    kems: Vec<KemSpec>,
    hybrid_kems: Vec<NamedHybrid>,
    aliases: Vec<(String, String)>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn sig(
    name: &str,
    problem_type: &str,
    sizes: [u64; 3],
    cycles: [u64; 2],
    level: SecurityLevel,
) -> SignatureSpec {
    SignatureSpec {
        name: name.to_string(),
        problem_type: problem_type.to_string(),
        public_key_bytes: sizes[0],
        secret_key_bytes: sizes[1],
        signature_bytes: sizes[2],
        sign_cycles: cycles[0],
        verify_cycles: cycles[1],
        level,
        hybrid: false,
    }
}

fn kem(
    name: &str,
    problem_type: &str,
    sizes: [u64; 3],
    cycles: [u64; 3],
    level: SecurityLevel,
) -> KemSpec {
    KemSpec {
        name: name.to_string(),
        problem_type: problem_type.to_string(),
        public_key_bytes: sizes[0],
        secret_key_bytes: sizes[1],
        ciphertext_bytes: sizes[2],
        keygen_cycles: cycles[0],
        encaps_cycles: cycles[1],
        decaps_cycles: cycles[2],
        level,
        hybrid: false,
    }
}

pub const RSA_2048: &str = "RSA-2048";
pub const X25519: &str = "X25519";

/// Cycles charged per ECDH side (key generation, shared-secret derivation).
pub const X25519_CYCLES: u64 = 100_000;

impl Registry {
    /// The signature and KEM tables studied, plus the classical ECDSA/ECDH
    /// entries needed for the hybrid configurations.
    pub fn builtin() -> Self {
        use SecurityLevel::*;

        const NTRU: &str = "NTRU SIS";
        const MLWE_SIS: &str = "Module LWE / SIS";
        const HASH: &str = "Hash functions";
        const ECDLP: &str = "Elliptic-curve discrete logarithm";

        let signatures = vec![
            // Table value is "≳ 256" for both keys; 270 is a typical encoded
            // public key.
            sig(RSA_2048, "Integer factorization", [270, 256, 256], [27_000_000, 45_000], Classical),
            sig("Falcon-512", NTRU, [897, 1_281, 666], [1_009_764, 81_036], L1),
            // Printed as "205 308 0" in the source table; read as 2 053 080.
            sig("Falcon-1024", NTRU, [1_793, 2_305, 1_280], [2_053_080, 160_596], L5),
            sig("ML-DSA-44", MLWE_SIS, [1_312, 2_560, 2_420], [333_013, 118_412], L2),
            sig("ML-DSA-65", MLWE_SIS, [1_952, 4_032, 3_309], [529_106, 179_424], L3),
            sig("ML-DSA-87", MLWE_SIS, [2_592, 4_896, 4_627], [642_192, 279_936], L5),
            sig("SLH-DSA-SHA2-128f", HASH, [32, 64, 17_088], [33_651_546, 2_150_290], L1),
            sig("SLH-DSA-SHA2-192f", HASH, [48, 96, 35_664], [55_320_742, 3_492_210], L3),
            sig("SLH-DSA-SHA2-256f", HASH, [64, 128, 49_856], [109_104_452, 3_559_052], L5),
            sig("SLH-DSA-SHA2-128s", HASH, [32, 64, 7_856], [644_740_090, 861_478], L1),
            sig("SLH-DSA-SHA2-192s", HASH, [48, 96, 16_224], [1_246_378_060, 1_444_030], L3),
            sig("SLH-DSA-SHA2-256s", HASH, [64, 128, 29_792], [1_025_721_040, 1_986_974], L5),
            // Uncompressed points and maximum DER signatures. Cycle counts are
            // placeholders scaled x1/x2/x4 per curve step.
            sig("ECDSA-p256", ECDLP, [65, 32, 72], [300_000, 900_000], Classical),
            sig("ECDSA-p384", ECDLP, [97, 48, 104], [600_000, 1_800_000], Classical),
            sig("ECDSA-p521", ECDLP, [133, 66, 139], [1_200_000, 3_600_000], Classical),
        ];

        let kems = vec![
            // 64-byte share as tabulated (common encodings use 32).
            kem(X25519, "Discrete logarithm", [64, 32, 64], [X25519_CYCLES; 3], Classical),
            kem("ML-KEM-512", "Module LWE", [800, 1_632, 768], [122_684, 154_524, 187_960], L1),
            kem("ML-KEM-768", "Module LWE", [1_184, 2_400, 1_088], [199_408, 235_260, 274_900], L3),
            kem("ML-KEM-1024", "Module LWE", [1_568, 3_168, 1_568], [307_148, 346_648, 396_584], L5),
            kem("SecP384r1", "Elliptic-curve discrete logarithm", [97, 48, 97], [2 * X25519_CYCLES; 3], Classical),
        ];

        let hybrid_kems = [
            ("X25519MLKEM512", X25519, "ML-KEM-512"),
            ("X25519MLKEM768", X25519, "ML-KEM-768"),
            ("SecP384r1MLKEM1024", "SecP384r1", "ML-KEM-1024"),
        ]
        .into_iter()
        .map(|(name, classical, pq)| NamedHybrid {
            name: name.to_string(),
            classical: classical.to_string(),
            pq: pq.to_string(),
        })
        .collect();

        let aliases = [
            ("ECDHKE with X25519", X25519),
            ("ECDH", X25519),
            ("ECDHE", X25519),
            ("ECDHE-X25519", X25519),
            ("secp384r1", "SecP384r1"),
            ("Falcon512", "Falcon-512"),
            ("Falcon1024", "Falcon-1024"),
        ]
        .into_iter()
        .map(|(alias, target)| (canonical_name(alias), canonical_name(target)))
        .collect();

        Registry {
            signatures,
            kems,
            hybrid_kems,
            aliases,
        }
    }

    fn resolve_alias(&self, name: &str) -> String {
        let canonical = canonical_name(name);
        self.aliases
            .iter()
            .find(|(alias, _)| *alias == canonical)
            .map(|(_, target)| target.clone())
            .unwrap_or(canonical)
    }

    /// Registered base (non-hybrid) signature schemes in table order.
    pub fn signatures(&self) -> &[SignatureSpec] {
        &self.signatures
    }

    /// Registered base KEMs in table order.
    pub fn kems(&self) -> &[KemSpec] {
        &self.kems
    }

    /// Names of the pre-registered hybrid KEMs.
    pub fn hybrid_kem_names(&self) -> impl Iterator<Item = &str> {
        self.hybrid_kems.iter().map(|h| h.name.as_str())
    }

    fn base_signature(&self, name: &str) -> Result<&SignatureSpec, RegistryError> {
        let key = self.resolve_alias(name);
        self.signatures
            .iter()
            .find(|s| canonical_name(&s.name) == key)
            .ok_or_else(|| RegistryError::UnknownAlgorithm(name.trim().to_string()))
    }

    fn base_kem(&self, name: &str) -> Result<&KemSpec, RegistryError> {
        let key = self.resolve_alias(name);
        self.kems
            .iter()
            .find(|k| canonical_name(&k.name) == key)
            .ok_or_else(|| RegistryError::UnknownAlgorithm(name.trim().to_string()))
    }

    /// Looks up a signature scheme. `classical+pq` names build the hybrid.
    pub fn lookup_signature(&self, name: &str) -> Result<SignatureSpec, RegistryError> {
        if let Some((classical, pq)) = name.split_once('+') {
            let classical = self.base_signature(classical)?;
            let pq = self.base_signature(pq)?;
            return make_hybrid_signature(classical, pq);
        }
        self.base_signature(name).cloned()
    }

    /// Looks up a KEM, a pre-registered hybrid such as `X25519MLKEM768`, or a
    /// `classical+pq` composition.
    pub fn lookup_kem(&self, name: &str) -> Result<KemSpec, RegistryError> {
        if let Some((classical, pq)) = name.split_once('+') {
            let classical = self.base_kem(classical)?;
            let pq = self.base_kem(pq)?;
            return make_hybrid_kem(classical, pq);
        }
        let key = canonical_name(name);
        if let Some(named) = self
            .hybrid_kems
            .iter()
            .find(|h| canonical_name(&h.name) == key)
        {
            let mut combined = make_hybrid_kem(self.base_kem(&named.classical)?, self.base_kem(&named.pq)?)?;
            combined.name = named.name.clone();
            return Ok(combined);
        }
        self.base_kem(name).cloned()
    }

    /// ML-KEM parameter set matching a signature's level. Level 2 has no
    /// ML-KEM counterpart and maps to ML-KEM-512.
    pub fn kem_for_level(&self, level: SecurityLevel) -> Result<KemSpec, RegistryError> {
        let name = match level {
            SecurityLevel::L1 | SecurityLevel::L2 => "ML-KEM-512",
            SecurityLevel::L3 => "ML-KEM-768",
            SecurityLevel::L5 => "ML-KEM-1024",
            SecurityLevel::Classical => return Err(RegistryError::NoMatchingKem(level)),
        };
        self.lookup_kem(name)
    }

    /// Pre-registered hybrid KEM paired with hybrid signatures of `level`.
    pub fn hybrid_kem_for_level(&self, level: SecurityLevel) -> Result<KemSpec, RegistryError> {
        let name = match level {
            SecurityLevel::L1 | SecurityLevel::L2 => "X25519MLKEM512",
            SecurityLevel::L3 => "X25519MLKEM768",
            SecurityLevel::L5 => "SecP384r1MLKEM1024",
            SecurityLevel::Classical => return Err(RegistryError::NoMatchingKem(level)),
        };
        self.lookup_kem(name)
    }

    /// ECDSA curve combined with post-quantum signatures of `level` in the
    /// hybrid configurations.
    pub fn classical_partner_for(&self, level: SecurityLevel) -> Result<SignatureSpec, RegistryError> {
        let name = match level {
            SecurityLevel::L1 | SecurityLevel::L2 => "ECDSA-p256",
            SecurityLevel::L3 => "ECDSA-p384",
            SecurityLevel::L5 => "ECDSA-p521",
            SecurityLevel::Classical => return Err(RegistryError::NoMatchingKem(level)),
        };
        self.lookup_signature(name)
    }

    /// KEM used when a scenario asks for `auto`: X25519 for the classical
    /// baseline, the matching hybrid KEM for hybrid signatures, otherwise
    /// the level-matched ML-KEM.
    pub fn default_kem_for(&self, sig: &SignatureSpec) -> Result<KemSpec, RegistryError> {
        if sig.level.is_classical() {
            self.lookup_kem(X25519)
        } else if sig.hybrid {
            self.hybrid_kem_for_level(sig.level)
        } else {
            self.kem_for_level(sig.level)
        }
    }

    pub fn override_signature(
        &mut self,
        name: &str,
        patch: &SignatureOverride,
    ) -> Result<(), RegistryError> {
        let key = self.resolve_alias(name);
        let entry = self
            .signatures
            .iter_mut()
            .find(|s| canonical_name(&s.name) == key)
            .ok_or_else(|| RegistryError::UnknownAlgorithm(name.to_string()))?;
        let mut updated = entry.clone();
        let fields = [
            (&mut updated.public_key_bytes, patch.public_key_bytes),
            (&mut updated.secret_key_bytes, patch.secret_key_bytes),
            (&mut updated.signature_bytes, patch.signature_bytes),
            (&mut updated.sign_cycles, patch.sign_cycles),
            (&mut updated.verify_cycles, patch.verify_cycles),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        updated.validate()?;
        *entry = updated;
        Ok(())
    }

    pub fn override_kem(&mut self, name: &str, patch: &KemOverride) -> Result<(), RegistryError> {
        let key = self.resolve_alias(name);
        let entry = self
            .kems
            .iter_mut()
            .find(|k| canonical_name(&k.name) == key)
            .ok_or_else(|| RegistryError::UnknownAlgorithm(name.to_string()))?;
        let mut updated = entry.clone();
        let fields = [
            (&mut updated.public_key_bytes, patch.public_key_bytes),
            (&mut updated.secret_key_bytes, patch.secret_key_bytes),
            (&mut updated.ciphertext_bytes, patch.ciphertext_bytes),
            (&mut updated.keygen_cycles, patch.keygen_cycles),
            (&mut updated.encaps_cycles, patch.encaps_cycles),
            (&mut updated.decaps_cycles, patch.decaps_cycles),
        ];
        for (slot, value) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        updated.validate()?;
        *entry = updated;
        Ok(())
    }

    /// One CSV row per scheme: base signatures, base KEMs, then the
    /// pre-registered hybrid KEMs. Empty cells mark fields that do not apply.
    pub fn export_csv(&self) -> String {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(EXPORT_COLUMNS).expect("in-memory write");
        for s in &self.signatures {
            out.write_record([
                "signature",
                &s.name,
                &s.problem_type,
                &s.public_key_bytes.to_string(),
                &s.secret_key_bytes.to_string(),
                &s.signature_bytes.to_string(),
                "",
                &s.sign_cycles.to_string(),
                &s.verify_cycles.to_string(),
                "",
                "",
                "",
                s.level.as_str(),
            ])
            .expect("in-memory write");
        }
        let hybrids = self
            .hybrid_kems
            .iter()
            .filter_map(|h| self.lookup_kem(&h.name).ok());
        for k in self.kems.iter().cloned().chain(hybrids) {
            out.write_record([
                "kem",
                &k.name,
                &k.problem_type,
                &k.public_key_bytes.to_string(),
                &k.secret_key_bytes.to_string(),
                "",
                &k.ciphertext_bytes.to_string(),
                "",
                "",
                &k.keygen_cycles.to_string(),
                &k.encaps_cycles.to_string(),
                &k.decaps_cycles.to_string(),
                k.level.as_str(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(out.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

pub const EXPORT_COLUMNS: [&str; 13] = [
    "kind",
    "name",
    "problem_type",
    "public_key_bytes",
    "secret_key_bytes",
    "signature_bytes",
    "ciphertext_bytes",
    "sign_cycles",
    "verify_cycles",
    "keygen_cycles",
    "encaps_cycles",
    "decaps_cycles",
    "level",
];
