//! Object identifiers.
//!
//! Identifiers with no registered value (the composite key combination, the
//! two dual-usage certificate extensions and the three handshake message
//! types) live under the documentation enterprise arc 1.3.6.1.4.1.32473.

use crate::codec::Oid;
use crate::suite::{DsaAlgorithm, KemAlgorithm};

pub const SHAKE256: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 2, 12]);

pub const ML_DSA_44: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 17]);
pub const ML_DSA_65: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 18]);
pub const ML_DSA_87: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 19]);
pub const SLH_DSA_SHA2_128S: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 20]);
pub const SLH_DSA_SHA2_128F: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 21]);
pub const SLH_DSA_SHA2_192S: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 22]);
pub const SLH_DSA_SHA2_192F: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 23]);
pub const SLH_DSA_SHA2_256S: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 24]);
pub const SLH_DSA_SHA2_256F: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 3, 25]);

pub const ML_KEM_512: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 4, 1]);
pub const ML_KEM_768: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 4, 2]);
pub const ML_KEM_1024: Oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 4, 3]);

pub const COMMON_NAME: Oid = Oid::from_static(&[2, 5, 4, 3]);
pub const SUBJECT_KEY_IDENTIFIER: Oid = Oid::from_static(&[2, 5, 29, 14]);
pub const KEY_USAGE: Oid = Oid::from_static(&[2, 5, 29, 15]);
pub const BASIC_CONSTRAINTS: Oid = Oid::from_static(&[2, 5, 29, 19]);
pub const AUTHORITY_KEY_IDENTIFIER: Oid = Oid::from_static(&[2, 5, 29, 35]);

pub const PKCS7_SIGNED_DATA: Oid = Oid::from_static(&[1, 2, 840, 113549, 1, 7, 2]);
pub const ATTR_MESSAGE_DIGEST: Oid = Oid::from_static(&[1, 2, 840, 113549, 1, 9, 4]);
pub const ATTR_SIGNING_TIME: Oid = Oid::from_static(&[1, 2, 840, 113549, 1, 9, 5]);

/// Composite DSA+KEM public key. Parameters: SEQUENCE { dsa OID, kem OID }.
pub const COMPOSITE_DSA_KEM: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 1, 1]);
/// Catalyst-style alternative public key extension (holds a KEM SPKI).
pub const EXT_ALT_PUBLIC_KEY: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 2, 1]);
/// Chameleon-style delta certificate extension.
pub const EXT_DELTA_CERTIFICATE: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 2, 2]);

pub const KEP_REQ: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 3, 1]);
pub const KEP_RESP: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 3, 2]);
pub const KEP_ACK: Oid = Oid::from_static(&[1, 3, 6, 1, 4, 1, 32473, 3, 3]);

pub fn dsa(alg: DsaAlgorithm) -> Oid {
    match alg {
        DsaAlgorithm::MlDsa44 => ML_DSA_44,
        DsaAlgorithm::MlDsa65 => ML_DSA_65,
        DsaAlgorithm::MlDsa87 => ML_DSA_87,
        DsaAlgorithm::SlhDsa128s => SLH_DSA_SHA2_128S,
        DsaAlgorithm::SlhDsa192s => SLH_DSA_SHA2_192S,
        DsaAlgorithm::SlhDsa256s => SLH_DSA_SHA2_256S,
        DsaAlgorithm::SlhDsa128f => SLH_DSA_SHA2_128F,
        DsaAlgorithm::SlhDsa192f => SLH_DSA_SHA2_192F,
        DsaAlgorithm::SlhDsa256f => SLH_DSA_SHA2_256F,
    }
}

pub fn kem(alg: KemAlgorithm) -> Oid {
    match alg {
        KemAlgorithm::MlKem512 => ML_KEM_512,
        KemAlgorithm::MlKem768 => ML_KEM_768,
        KemAlgorithm::MlKem1024 => ML_KEM_1024,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn private_arc_encodings_share_a_length() {
        let lens: Vec<usize> =
            [COMPOSITE_DSA_KEM, EXT_ALT_PUBLIC_KEY, EXT_DELTA_CERTIFICATE, KEP_REQ, KEP_RESP, KEP_ACK]
                .iter()
                .map(|o| o.to_der_content().len())
                .collect();
        assert!(lens.iter().all(|&l| l == 10), "{lens:?}");
    }

    #[test]
    fn algorithm_oids_share_a_length() {
        for a in DsaAlgorithm::ALL {
            assert_eq!(dsa(a).to_der_content().len(), 9);
            assert_eq!(DsaAlgorithm::from_oid(&dsa(a)), Some(a));
        }
        for k in KemAlgorithm::ALL {
            assert_eq!(kem(k).to_der_content().len(), 9);
            assert_eq!(KemAlgorithm::from_oid(&kem(k)), Some(k));
        }
    }
}
