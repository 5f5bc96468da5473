//! Algorithm identifiers, parameter sizes and the nine security-level pairings.

use std::fmt;
use std::str::FromStr;

use crate::codec::Oid;
use crate::oids;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SecurityLevel {
    L1,
    L3,
    L5,
}

impl SecurityLevel {
    pub const ALL: [SecurityLevel; 3] = [SecurityLevel::L1, SecurityLevel::L3, SecurityLevel::L5];

    pub fn number(self) -> u8 {
        match self {
            SecurityLevel::L1 => 1,
            SecurityLevel::L3 => 3,
            SecurityLevel::L5 => 5,
        }
    }

    pub fn kem(self) -> KemAlgorithm {
        match self {
            SecurityLevel::L1 => KemAlgorithm::MlKem512,
            SecurityLevel::L3 => KemAlgorithm::MlKem768,
            SecurityLevel::L5 => KemAlgorithm::MlKem1024,
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Security Level {}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DsaFamily {
    MlDsa,
    SlhDsaSmall,
    SlhDsaFast,
}

impl DsaFamily {
    pub const ALL: [DsaFamily; 3] = [DsaFamily::MlDsa, DsaFamily::SlhDsaSmall, DsaFamily::SlhDsaFast];

    /// Short command-line name (`mldsa`, `slhdsa-s`, `slhdsa-f`).
    pub fn cli_name(self) -> &'static str {
        match self {
            DsaFamily::MlDsa => "mldsa",
            DsaFamily::SlhDsaSmall => "slhdsa-s",
            DsaFamily::SlhDsaFast => "slhdsa-f",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DsaFamily::MlDsa => "ML-DSA",
            DsaFamily::SlhDsaSmall => "SLH-DSA (small)",
            DsaFamily::SlhDsaFast => "SLH-DSA (fast)",
        }
    }
}

impl FromStr for DsaFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DsaFamily::ALL
            .into_iter()
            .find(|f| f.cli_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown DSA family {s:?} (expected mldsa, slhdsa-s or slhdsa-f)"))
    }
}

/// Signature algorithms. SLH-DSA uses the SHA2 instantiations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DsaAlgorithm {
    MlDsa44,
    MlDsa65,
    MlDsa87,
    SlhDsa128s,
    SlhDsa192s,
    SlhDsa256s,
    SlhDsa128f,
    SlhDsa192f,
    SlhDsa256f,
}

impl DsaAlgorithm {
    pub const ALL: [DsaAlgorithm; 9] = [
        DsaAlgorithm::MlDsa44,
        DsaAlgorithm::MlDsa65,
        DsaAlgorithm::MlDsa87,
        DsaAlgorithm::SlhDsa128s,
        DsaAlgorithm::SlhDsa192s,
        DsaAlgorithm::SlhDsa256s,
        DsaAlgorithm::SlhDsa128f,
        DsaAlgorithm::SlhDsa192f,
        DsaAlgorithm::SlhDsa256f,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DsaAlgorithm::MlDsa44 => "ML-DSA-44",
            DsaAlgorithm::MlDsa65 => "ML-DSA-65",
            DsaAlgorithm::MlDsa87 => "ML-DSA-87",
            DsaAlgorithm::SlhDsa128s => "SLH-DSA-128s",
            DsaAlgorithm::SlhDsa192s => "SLH-DSA-192s",
            DsaAlgorithm::SlhDsa256s => "SLH-DSA-256s",
            DsaAlgorithm::SlhDsa128f => "SLH-DSA-128f",
            DsaAlgorithm::SlhDsa192f => "SLH-DSA-192f",
            DsaAlgorithm::SlhDsa256f => "SLH-DSA-256f",
        }
    }

    pub fn level(self) -> SecurityLevel {
        use DsaAlgorithm::*;
        match self {
            MlDsa44 | SlhDsa128s | SlhDsa128f => SecurityLevel::L1,
            MlDsa65 | SlhDsa192s | SlhDsa192f => SecurityLevel::L3,
            MlDsa87 | SlhDsa256s | SlhDsa256f => SecurityLevel::L5,
        }
    }

    pub fn family(self) -> DsaFamily {
        use DsaAlgorithm::*;
        match self {
            MlDsa44 | MlDsa65 | MlDsa87 => DsaFamily::MlDsa,
            SlhDsa128s | SlhDsa192s | SlhDsa256s => DsaFamily::SlhDsaSmall,
            SlhDsa128f | SlhDsa192f | SlhDsa256f => DsaFamily::SlhDsaFast,
        }
    }

    /// (public key, private key, signature) sizes in bytes.
    pub fn sizes(self) -> (usize, usize, usize) {
        match self {
            DsaAlgorithm::MlDsa44 => (1312, 2560, 2420),
            DsaAlgorithm::MlDsa65 => (1952, 4032, 3309),
            DsaAlgorithm::MlDsa87 => (2592, 4896, 4627),
            DsaAlgorithm::SlhDsa128s => (32, 64, 7856),
            DsaAlgorithm::SlhDsa192s => (48, 96, 16224),
            DsaAlgorithm::SlhDsa256s => (64, 128, 29792),
            DsaAlgorithm::SlhDsa128f => (32, 64, 17088),
            DsaAlgorithm::SlhDsa192f => (48, 96, 35664),
            DsaAlgorithm::SlhDsa256f => (64, 128, 49856),
        }
    }

    pub fn public_key_len(self) -> usize {
        self.sizes().0
    }

    pub fn private_key_len(self) -> usize {
        self.sizes().1
    }

    pub fn signature_len(self) -> usize {
        self.sizes().2
    }

    pub fn oid(self) -> Oid {
        oids::dsa(self)
    }

    pub fn from_oid(oid: &Oid) -> Option<DsaAlgorithm> {
        DsaAlgorithm::ALL.into_iter().find(|a| a.oid() == *oid)
    }

    /// Eight-byte ASCII tag used in key files.
    pub fn file_tag(self) -> [u8; 8] {
        *match self {
            DsaAlgorithm::MlDsa44 => b"MLDSA44 ",
            DsaAlgorithm::MlDsa65 => b"MLDSA65 ",
            DsaAlgorithm::MlDsa87 => b"MLDSA87 ",
            DsaAlgorithm::SlhDsa128s => b"SLH128S ",
            DsaAlgorithm::SlhDsa192s => b"SLH192S ",
            DsaAlgorithm::SlhDsa256s => b"SLH256S ",
            DsaAlgorithm::SlhDsa128f => b"SLH128F ",
            DsaAlgorithm::SlhDsa192f => b"SLH192F ",
            DsaAlgorithm::SlhDsa256f => b"SLH256F ",
        }
    }
}

impl fmt::Display for DsaAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KemAlgorithm {
    MlKem512,
    MlKem768,
    MlKem1024,
}

impl KemAlgorithm {
    pub const ALL: [KemAlgorithm; 3] = [KemAlgorithm::MlKem512, KemAlgorithm::MlKem768, KemAlgorithm::MlKem1024];

    pub fn name(self) -> &'static str {
        match self {
            KemAlgorithm::MlKem512 => "ML-KEM-512",
            KemAlgorithm::MlKem768 => "ML-KEM-768",
            KemAlgorithm::MlKem1024 => "ML-KEM-1024",
        }
    }

    pub fn level(self) -> SecurityLevel {
        match self {
            KemAlgorithm::MlKem512 => SecurityLevel::L1,
            KemAlgorithm::MlKem768 => SecurityLevel::L3,
            KemAlgorithm::MlKem1024 => SecurityLevel::L5,
        }
    }

    /// (encapsulation key, decapsulation key, ciphertext) sizes in bytes.
    pub fn sizes(self) -> (usize, usize, usize) {
        match self {
            KemAlgorithm::MlKem512 => (800, 1632, 768),
            KemAlgorithm::MlKem768 => (1184, 2400, 1088),
            KemAlgorithm::MlKem1024 => (1568, 3168, 1568),
        }
    }

    pub fn public_key_len(self) -> usize {
        self.sizes().0
    }

    pub fn private_key_len(self) -> usize {
        self.sizes().1
    }

    pub fn ciphertext_len(self) -> usize {
        self.sizes().2
    }

    pub fn oid(self) -> Oid {
        oids::kem(self)
    }

    pub fn from_oid(oid: &Oid) -> Option<KemAlgorithm> {
        KemAlgorithm::ALL.into_iter().find(|a| a.oid() == *oid)
    }

    /// Ciphertext sizes differ across the three parameter sets.
    pub fn from_ciphertext_len(len: usize) -> Option<KemAlgorithm> {
        KemAlgorithm::ALL.into_iter().find(|a| a.ciphertext_len() == len)
    }

    pub fn file_tag(self) -> [u8; 8] {
        *match self {
            KemAlgorithm::MlKem512 => b"MLKEM512",
            KemAlgorithm::MlKem768 => b"MLKEM768",
            KemAlgorithm::MlKem1024 => b"MLKEM1K ",
        }
    }
}

impl fmt::Display for KemAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A DSA/KEM pairing at one security level. Only the nine pairings returned
/// by [`Suite::new`] can be constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Suite {
    level: SecurityLevel,
    family: DsaFamily,
}

impl Suite {
    pub fn new(level: SecurityLevel, family: DsaFamily) -> Suite {
        Suite { level, family }
    }

    /// All nine suites, family-major.
    pub fn all() -> impl Iterator<Item = Suite> {
        DsaFamily::ALL.into_iter().flat_map(|f| SecurityLevel::ALL.into_iter().map(move |l| Suite::new(l, f)))
    }

    pub fn level(self) -> SecurityLevel {
        self.level
    }

    pub fn family(self) -> DsaFamily {
        self.family
    }

    pub fn dsa(self) -> DsaAlgorithm {
        use DsaAlgorithm::*;
        use SecurityLevel::*;
        match (self.family, self.level) {
            (DsaFamily::MlDsa, L1) => MlDsa44,
            (DsaFamily::MlDsa, L3) => MlDsa65,
            (DsaFamily::MlDsa, L5) => MlDsa87,
            (DsaFamily::SlhDsaSmall, L1) => SlhDsa128s,
            (DsaFamily::SlhDsaSmall, L3) => SlhDsa192s,
            (DsaFamily::SlhDsaSmall, L5) => SlhDsa256s,
            (DsaFamily::SlhDsaFast, L1) => SlhDsa128f,
            (DsaFamily::SlhDsaFast, L3) => SlhDsa192f,
            (DsaFamily::SlhDsaFast, L5) => SlhDsa256f,
        }
    }

    pub fn kem(self) -> KemAlgorithm {
        self.level.kem()
    }

    /// Looks up the suite for an algorithm pair; `None` when the levels disagree.
    pub fn from_algorithms(dsa: DsaAlgorithm, kem: KemAlgorithm) -> Option<Suite> {
        (dsa.level() == kem.level()).then(|| Suite::new(dsa.level(), dsa.family()))
    }

    /// Command-line name such as `l3-mldsa`.
    pub fn cli_name(self) -> String {
        format!("l{}-{}", self.level.number(), self.family.cli_name())
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}", self.dsa(), self.kem())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let (level, family) = lower.split_once('-').ok_or_else(|| format!("suite {s:?} must look like l1-mldsa"))?;
        let level = match level {
            "l1" => SecurityLevel::L1,
            "l3" => SecurityLevel::L3,
            "l5" => SecurityLevel::L5,
            _ => return Err(format!("unknown security level in {s:?}")),
        };
        Ok(Suite::new(level, family.parse()?))
    }
}

/// Returns the pairing for a level and family.
pub fn suite_for(level: SecurityLevel, family: DsaFamily) -> Suite {
    Suite::new(level, family)
}
