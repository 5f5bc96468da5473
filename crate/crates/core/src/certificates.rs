//! Certificate issuance and validation for the five credential schemes.
//!
//! Every certificate is an X.509 v3-shaped structure with a single CommonName
//! in issuer and subject. The scheme is not stored explicitly; it follows from
//! the public key algorithm and the presence of one of the two dual-usage
//! extensions:
//!
//! | scheme    | SubjectPublicKeyInfo              | extra extension          |
//! |-----------|-----------------------------------|--------------------------|
//! | Composite | combination OID, `dsaPk ∥ kemPk`  | none                     |
//! | Catalyst  | DSA key                           | alt public key (KEM)     |
//! | Chameleon | DSA key                           | delta certificate (KEM)  |
//! | PureDsa   | DSA key                           | none                     |
//! | PureKem   | KEM key                           | none                     |
//!
//! The delta certificate is carried as a compact descriptor
//! `SEQUENCE { serial, subjectPublicKeyInfo, signature BIT STRING }`. The full
//! delta certificate is the outer certificate with its serial and key replaced
//! and all extensions dropped; the CA signs that reconstructed body.

use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand_core::CryptoRngCore;
use thiserror::Error;

use crate::codec::{self, DecodeError, Oid, Tag, Timestamp, Tlv};
use crate::crypto::{dsa_verify, shake256, CryptoError, DsaKeyPair, DsaPublicKey, KemPublicKey, Signature};
use crate::oids;
use crate::suite::{DsaAlgorithm, KemAlgorithm, Suite};

pub const PEM_LABEL: &str = "PQC CERTIFICATE";
/// Width of generated serial numbers, so certificate lengths do not depend on
/// the random value drawn.
pub const SERIAL_LEN: usize = 8;
pub const MAX_SERIAL_LEN: usize = 20;
pub const MAX_NAME_LEN: usize = 64;
pub const DEFAULT_CA_NAME: &str = "PQC Demo Root CA";

const KEY_ID_LEN: usize = 20;
const KU_DIGITAL_SIGNATURE: usize = 0;
const KU_KEY_ENCIPHERMENT: usize = 2;
const KU_KEY_CERT_SIGN: usize = 5;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("{0} public key required by this scheme is missing")]
    MissingKey(&'static str),
    #[error("{0} public key is not allowed by this scheme")]
    UnexpectedKey(&'static str),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("key algorithm does not match the CA suite: {0}")]
    SuiteMismatch(String),
    #[error("malformed certificate: {0}")]
    Malformed(#[from] DecodeError),
    #[error("certificate encoding is not canonical")]
    NonCanonical,
    #[error("CA signature does not verify")]
    BadCaSignature,
    #[error("certificate expired at {not_after} (now {now})")]
    Expired { not_after: Timestamp, now: Timestamp },
    #[error("certificate not valid before {not_before} (now {now})")]
    NotYetValid { not_before: Timestamp, now: Timestamp },
    #[error("malformed extension: {0}")]
    MalformedExtension(String),
    #[error("unknown certificate scheme: {0}")]
    UnknownScheme(String),
    #[error("certificate set carries no signature key")]
    NoSigningKey,
    #[error("signer certificate not found in certificate set")]
    SignerNotFound,
    #[error("conflicting certificates: {0}")]
    Conflict(String),
    #[error("certificate differs from the one presented earlier in the handshake")]
    Substituted,
    #[error("PEM armor: {0}")]
    Pem(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertScheme {
    Composite,
    Catalyst,
    Chameleon,
    PureDsa,
    PureKem,
}

impl CertScheme {
    pub const ALL: [CertScheme; 5] =
        [CertScheme::Composite, CertScheme::Catalyst, CertScheme::Chameleon, CertScheme::PureDsa, CertScheme::PureKem];
    pub const DUAL_USAGE: [CertScheme; 3] = [CertScheme::Composite, CertScheme::Catalyst, CertScheme::Chameleon];

    pub fn name(self) -> &'static str {
        match self {
            CertScheme::Composite => "composite",
            CertScheme::Catalyst => "catalyst",
            CertScheme::Chameleon => "chameleon",
            CertScheme::PureDsa => "pure-dsa",
            CertScheme::PureKem => "pure-kem",
        }
    }

    pub fn carries_dsa(self) -> bool {
        self != CertScheme::PureKem
    }

    pub fn carries_kem(self) -> bool {
        self != CertScheme::PureDsa
    }

    pub fn is_dual_usage(self) -> bool {
        matches!(self, CertScheme::Composite | CertScheme::Catalyst | CertScheme::Chameleon)
    }
}

impl fmt::Display for CertScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CertScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CertScheme::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            format!("unknown scheme {s:?} (expected composite, catalyst, chameleon, pure-dsa or pure-kem)")
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertTemplate {
    pub subject_common_name: String,
    pub issuer_common_name: String,
    /// Unsigned big-endian magnitude, 1..=20 bytes, no leading zero.
    pub serial: Vec<u8>,
    pub not_before: Timestamp,
    pub not_after: Timestamp,
}

impl CertTemplate {
    pub fn validate(&self) -> Result<(), CertError> {
        for (what, name) in [("subject", &self.subject_common_name), ("issuer", &self.issuer_common_name)] {
            if name.is_empty() {
                return Err(CertError::InvalidTemplate(format!("{what} common name is empty")));
            }
            if name.len() > MAX_NAME_LEN {
                return Err(CertError::InvalidTemplate(format!("{what} common name exceeds {MAX_NAME_LEN} bytes")));
            }
        }
        check_serial(&self.serial)?;
        if self.not_before >= self.not_after {
            return Err(CertError::InvalidTemplate("not_before must precede not_after".into()));
        }
        for t in [self.not_before, self.not_after] {
            if t.to_generalized_time().is_none() {
                return Err(CertError::InvalidTemplate(format!("{t} is outside the GeneralizedTime range")));
            }
        }
        Ok(())
    }
}

fn check_serial(serial: &[u8]) -> Result<(), CertError> {
    match serial {
        [] => Err(CertError::InvalidTemplate("serial is empty".into())),
        [0, ..] => Err(CertError::InvalidTemplate("serial must be positive without leading zero bytes".into())),
        s if s.len() > MAX_SERIAL_LEN => {
            Err(CertError::InvalidTemplate(format!("serial exceeds {MAX_SERIAL_LEN} bytes")))
        }
        _ => Ok(()),
    }
}

/// Fresh fixed-width serial: top bit clear (no sign octet) and the next bit
/// set (no leading zero byte).
pub fn random_serial(rng: &mut impl CryptoRngCore) -> Vec<u8> {
    let mut serial = vec![0u8; SERIAL_LEN];
    rng.fill_bytes(&mut serial);
    serial[0] = (serial[0] & 0x3f) | 0x40;
    serial
}

/// Keys taken from a validated certificate (or certificate set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedKeys {
    pub subject: String,
    pub dsa_public: Option<DsaPublicKey>,
    pub kem_public: Option<KemPublicKey>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum SubjectKey {
    Dsa(DsaPublicKey),
    Kem(KemPublicKey),
    Composite(DsaPublicKey, KemPublicKey),
}

impl SubjectKey {
    fn to_spki(&self) -> Tlv {
        match self {
            SubjectKey::Dsa(k) => spki(Tlv::sequence(vec![Tlv::oid(&k.algorithm().oid())]), k.as_bytes()),
            SubjectKey::Kem(k) => kem_spki(k),
            SubjectKey::Composite(d, k) => {
                let alg = Tlv::sequence(vec![
                    Tlv::oid(&oids::COMPOSITE_DSA_KEM),
                    Tlv::sequence(vec![Tlv::oid(&d.algorithm().oid()), Tlv::oid(&k.algorithm().oid())]),
                ]);
                spki(alg, &[d.as_bytes(), k.as_bytes()].concat())
            }
        }
    }

    /// Bytes hashed into the subject key identifier.
    fn key_bytes(&self) -> Vec<u8> {
        match self {
            SubjectKey::Dsa(k) => k.as_bytes().to_vec(),
            SubjectKey::Kem(k) => k.as_bytes().to_vec(),
            SubjectKey::Composite(d, k) => [d.as_bytes(), k.as_bytes()].concat(),
        }
    }

    fn key_usage(&self, is_ca: bool) -> Vec<usize> {
        match self {
            SubjectKey::Dsa(_) if is_ca => vec![KU_DIGITAL_SIGNATURE, KU_KEY_CERT_SIGN],
            SubjectKey::Dsa(_) => vec![KU_DIGITAL_SIGNATURE],
            SubjectKey::Kem(_) => vec![KU_KEY_ENCIPHERMENT],
            SubjectKey::Composite(..) => vec![KU_DIGITAL_SIGNATURE, KU_KEY_ENCIPHERMENT],
        }
    }
}

fn spki(algorithm: Tlv, key: &[u8]) -> Tlv {
    Tlv::sequence(vec![algorithm, Tlv::bit_string(key)])
}

fn kem_spki(k: &KemPublicKey) -> Tlv {
    spki(Tlv::sequence(vec![Tlv::oid(&k.algorithm().oid())]), k.as_bytes())
}

fn parse_spki(tlv: &Tlv) -> Result<SubjectKey, CertError> {
    let mut r = tlv.reader(Tag::SEQUENCE)?;
    let alg = r.next("SPKI algorithm")?;
    let key = r.next("SPKI key")?.as_bit_string()?;
    r.finish("SPKI key")?;

    let mut a = alg.reader(Tag::SEQUENCE)?;
    let oid = a.next("algorithm OID")?.as_oid()?;
    if oid == oids::COMPOSITE_DSA_KEM {
        let mut p = a.next("composite parameters")?.reader(Tag::SEQUENCE)?;
        let dsa_oid = p.next("composite DSA OID")?.as_oid()?;
        let kem_oid = p.next("composite KEM OID")?.as_oid()?;
        p.finish("composite KEM OID")?;
        a.finish("composite parameters")?;
        let dsa = DsaAlgorithm::from_oid(&dsa_oid)
            .ok_or_else(|| CertError::UnknownScheme(format!("composite DSA {dsa_oid}")))?;
        let kem = KemAlgorithm::from_oid(&kem_oid)
            .ok_or_else(|| CertError::UnknownScheme(format!("composite KEM {kem_oid}")))?;
        if key.len() != dsa.public_key_len() + kem.public_key_len() {
            return Err(DecodeError::InvalidValue("composite public key length").into());
        }
        let (d, k) = key.split_at(dsa.public_key_len());
        return Ok(SubjectKey::Composite(DsaPublicKey::new(dsa, d.to_vec())?, KemPublicKey::new(kem, k.to_vec())?));
    }
    a.finish("algorithm OID")?;
    if let Some(dsa) = DsaAlgorithm::from_oid(&oid) {
        Ok(SubjectKey::Dsa(DsaPublicKey::new(dsa, key.to_vec())?))
    } else if let Some(kem) = KemAlgorithm::from_oid(&oid) {
        Ok(SubjectKey::Kem(KemPublicKey::new(kem, key.to_vec())?))
    } else {
        Err(CertError::UnknownScheme(format!("public key algorithm {oid}")))
    }
}

fn parse_kem_spki(tlv: &Tlv) -> Result<KemPublicKey, CertError> {
    match parse_spki(tlv) {
        Ok(SubjectKey::Kem(k)) => Ok(k),
        Ok(_) => Err(CertError::MalformedExtension("embedded key is not a KEM key".into())),
        Err(e) => Err(CertError::MalformedExtension(format!("embedded key: {e}"))),
    }
}

fn name(cn: &str) -> Tlv {
    Tlv::sequence(vec![Tlv::set(vec![Tlv::sequence(vec![Tlv::oid(&oids::COMMON_NAME), Tlv::utf8(cn)])])])
}

fn parse_name(tlv: &Tlv) -> Result<String, CertError> {
    let mut r = tlv.reader(Tag::SEQUENCE)?;
    let mut rdn = r.next("relative distinguished name")?.reader(Tag::SET)?;
    r.finish("relative distinguished name")?;
    let mut atv = rdn.next("attribute")?.reader(Tag::SEQUENCE)?;
    rdn.finish("attribute")?;
    if atv.next("attribute type")?.as_oid()? != oids::COMMON_NAME {
        return Err(DecodeError::InvalidValue("name attribute (only CommonName is supported)").into());
    }
    let cn = atv.next("attribute value")?.as_utf8()?.to_owned();
    atv.finish("attribute value")?;
    Ok(cn)
}

fn algorithm_identifier(alg: DsaAlgorithm) -> Tlv {
    Tlv::sequence(vec![Tlv::oid(&alg.oid())])
}

fn parse_signature_algorithm(tlv: &Tlv) -> Result<DsaAlgorithm, CertError> {
    let mut r = tlv.reader(Tag::SEQUENCE)?;
    let oid = r.next("signature algorithm")?.as_oid()?;
    r.finish("signature algorithm")?;
    DsaAlgorithm::from_oid(&oid).ok_or_else(|| CertError::UnknownScheme(format!("signature algorithm {oid}")))
}

fn extension(oid: &Oid, value: Tlv) -> Tlv {
    Tlv::sequence(vec![Tlv::oid(oid), Tlv::octet_string(value.to_der())])
}

fn key_identifier(bytes: &[u8]) -> Vec<u8> {
    shake256(bytes, KEY_ID_LEN)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Delta {
    serial: Vec<u8>,
    kem: KemPublicKey,
    signature: Signature,
}

/// Everything covered by the CA signature.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Body {
    serial: Vec<u8>,
    signature_algorithm: DsaAlgorithm,
    issuer: String,
    not_before: Timestamp,
    not_after: Timestamp,
    subject: String,
    key: SubjectKey,
    subject_key_id: Vec<u8>,
    authority_key_id: Vec<u8>,
    is_ca: bool,
    alt_key: Option<KemPublicKey>,
    delta: Option<Delta>,
}

impl Body {
    fn to_tlv(&self) -> Tlv {
        let mut exts = vec![
            extension(&oids::SUBJECT_KEY_IDENTIFIER, Tlv::octet_string(self.subject_key_id.clone())),
            extension(
                &oids::AUTHORITY_KEY_IDENTIFIER,
                Tlv::sequence(vec![Tlv::primitive(Tag::context_primitive(0), self.authority_key_id.clone())]),
            ),
            extension(&oids::KEY_USAGE, Tlv::named_bits(&self.key_usage())),
        ];
        if self.is_ca {
            exts.push(extension(&oids::BASIC_CONSTRAINTS, Tlv::sequence(vec![Tlv::boolean(true)])));
        }
        if let Some(alt) = &self.alt_key {
            exts.push(extension(&oids::EXT_ALT_PUBLIC_KEY, kem_spki(alt)));
        }
        if let Some(d) = &self.delta {
            let desc = Tlv::sequence(vec![
                Tlv::unsigned_integer(&d.serial),
                kem_spki(&d.kem),
                Tlv::bit_string(d.signature.as_bytes()),
            ]);
            exts.push(extension(&oids::EXT_DELTA_CERTIFICATE, desc));
        }
        let mut fields = self.common_fields(&self.serial, self.key.to_spki());
        fields.push(Tlv::explicit(3, Tlv::sequence(exts)));
        Tlv::sequence(fields)
    }

    fn common_fields(&self, serial: &[u8], spki: Tlv) -> Vec<Tlv> {
        vec![
            Tlv::explicit(0, Tlv::integer_u64(2)),
            Tlv::unsigned_integer(serial),
            algorithm_identifier(self.signature_algorithm),
            name(&self.issuer),
            Tlv::sequence(vec![Tlv::generalized_time(self.not_before), Tlv::generalized_time(self.not_after)]),
            name(&self.subject),
            spki,
        ]
    }

    /// To-be-signed bytes of the delta certificate: the outer body with the
    /// delta serial and KEM key substituted and no extensions.
    fn delta_tbs(&self, serial: &[u8], kem: &KemPublicKey) -> Vec<u8> {
        Tlv::sequence(self.common_fields(serial, kem_spki(kem))).to_der()
    }

    fn key_usage(&self) -> Vec<usize> {
        let mut bits = self.key.key_usage(self.is_ca);
        if self.alt_key.is_some() || self.delta.is_some() {
            bits.push(KU_KEY_ENCIPHERMENT);
        }
        bits
    }

    fn scheme(&self) -> CertScheme {
        match (&self.key, &self.alt_key, &self.delta) {
            (SubjectKey::Composite(..), _, _) => CertScheme::Composite,
            (SubjectKey::Kem(_), _, _) => CertScheme::PureKem,
            (SubjectKey::Dsa(_), Some(_), _) => CertScheme::Catalyst,
            (SubjectKey::Dsa(_), None, Some(_)) => CertScheme::Chameleon,
            (SubjectKey::Dsa(_), None, None) => CertScheme::PureDsa,
        }
    }

    fn dsa_public(&self) -> Option<&DsaPublicKey> {
        match &self.key {
            SubjectKey::Dsa(k) | SubjectKey::Composite(k, _) => Some(k),
            SubjectKey::Kem(_) => None,
        }
    }

    fn kem_public(&self) -> Option<&KemPublicKey> {
        match &self.key {
            SubjectKey::Kem(k) | SubjectKey::Composite(_, k) => Some(k),
            SubjectKey::Dsa(_) => self.alt_key.as_ref().or(self.delta.as_ref().map(|d| &d.kem)),
        }
    }

    fn parse(tlv: &Tlv) -> Result<Body, CertError> {
        let mut r = tlv.reader(Tag::SEQUENCE)?;
        if r.next("version")?.explicit_inner(0)?.as_u64()? != 2 {
            return Err(DecodeError::InvalidValue("version").into());
        }
        let serial = r.next("serial")?.as_unsigned_bytes()?.to_vec();
        if serial.is_empty() || serial.len() > MAX_SERIAL_LEN {
            return Err(DecodeError::InvalidValue("serial").into());
        }
        let signature_algorithm = parse_signature_algorithm(r.next("signature algorithm")?)?;
        let issuer = parse_name(r.next("issuer")?)?;
        let mut v = r.next("validity")?.reader(Tag::SEQUENCE)?;
        let not_before = v.next("notBefore")?.as_time()?;
        let not_after = v.next("notAfter")?.as_time()?;
        v.finish("notAfter")?;
        let subject = parse_name(r.next("subject")?)?;
        let key = parse_spki(r.next("subjectPublicKeyInfo")?)?;
        let exts = r.next("extensions")?.explicit_inner(3)?;
        r.finish("extensions")?;

        let mut body = Body {
            serial,
            signature_algorithm,
            issuer,
            not_before,
            not_after,
            subject,
            key,
            subject_key_id: Vec::new(),
            authority_key_id: Vec::new(),
            is_ca: false,
            alt_key: None,
            delta: None,
        };
        let mut seen_aki = false;
        for ext in exts.children()? {
            let mut e = ext.reader(Tag::SEQUENCE)?;
            let oid = e.next("extension id")?.as_oid()?;
            let value = e.next("extension value")?.as_octets()?;
            e.finish("extension value")?;
            let bad = |what: &str| CertError::MalformedExtension(format!("{oid}: {what}"));
            let value = codec::decode(value).map_err(|err| bad(&err.to_string()))?;
            if oid == oids::KEY_USAGE {
                // Recomputed from the key shape; the canonical re-encoding
                // check rejects any other value.
            } else if oid == oids::SUBJECT_KEY_IDENTIFIER {
                body.subject_key_id = value.as_octets().map_err(|e| bad(&e.to_string()))?.to_vec();
            } else if oid == oids::AUTHORITY_KEY_IDENTIFIER {
                let mut a = value.reader(Tag::SEQUENCE).map_err(|e| bad(&e.to_string()))?;
                let id = a.next("key identifier").map_err(|e| bad(&e.to_string()))?;
                id.expect_tag(Tag::context_primitive(0)).map_err(|e| bad(&e.to_string()))?;
                body.authority_key_id = id.value().map_err(|e| bad(&e.to_string()))?.to_vec();
                seen_aki = true;
            } else if oid == oids::BASIC_CONSTRAINTS {
                let mut b = value.reader(Tag::SEQUENCE).map_err(|e| bad(&e.to_string()))?;
                body.is_ca = b.next("cA").and_then(Tlv::as_bool).map_err(|e| bad(&e.to_string()))?;
            } else if oid == oids::EXT_ALT_PUBLIC_KEY {
                body.alt_key = Some(parse_kem_spki(&value)?);
            } else if oid == oids::EXT_DELTA_CERTIFICATE {
                body.delta = Some(parse_delta(&value, signature_algorithm)?);
            } else {
                return Err(CertError::MalformedExtension(format!("unsupported extension {oid}")));
            }
        }
        if !seen_aki {
            return Err(CertError::MalformedExtension("authority key identifier missing".into()));
        }
        if body.alt_key.is_some() && body.delta.is_some() {
            return Err(CertError::MalformedExtension("both alt-public-key and delta certificate present".into()));
        }
        if !matches!(body.key, SubjectKey::Dsa(_)) && (body.alt_key.is_some() || body.delta.is_some()) {
            return Err(CertError::MalformedExtension("dual-usage extension on a non-DSA certificate".into()));
        }
        Ok(body)
    }
}

fn parse_delta(value: &Tlv, signature_algorithm: DsaAlgorithm) -> Result<Delta, CertError> {
    let bad = |e: DecodeError| CertError::MalformedExtension(format!("delta certificate: {e}"));
    let mut r = value.reader(Tag::SEQUENCE).map_err(bad)?;
    let serial = r.next("delta serial").and_then(Tlv::as_unsigned_bytes).map_err(bad)?.to_vec();
    if serial.is_empty() || serial.len() > MAX_SERIAL_LEN {
        return Err(bad(DecodeError::InvalidValue("delta serial")));
    }
    let kem = parse_kem_spki(r.next("delta key").map_err(bad)?)?;
    let sig = r.next("delta signature").and_then(Tlv::as_bit_string).map_err(bad)?;
    r.finish("delta signature").map_err(bad)?;
    let signature = Signature::new(signature_algorithm, sig.to_vec())
        .map_err(|e| CertError::MalformedExtension(format!("delta signature: {e}")))?;
    Ok(Delta { serial, kem, signature })
}

/// Serial of the delta certificate, derived from the outer serial so that it
/// has the same width but a different value.
fn delta_serial(outer: &[u8]) -> Vec<u8> {
    let mut s = shake256(&[b"delta:".as_slice(), outer].concat(), outer.len());
    s[0] = (s[0] & 0x3f) | 0x40;
    s
}

#[derive(Clone, PartialEq, Eq)]
pub struct Certificate {
    body: Body,
    tbs: Vec<u8>,
    ca_signature: Signature,
    encoded: Vec<u8>,
}

impl Certificate {
    fn assemble(body: Body, ca: &DsaKeyPair) -> Result<Certificate, CertError> {
        let tbs_tlv = body.to_tlv();
        let tbs = tbs_tlv.to_der();
        let ca_signature = ca.sign(&tbs)?;
        let encoded = Tlv::sequence(vec![
            tbs_tlv,
            algorithm_identifier(body.signature_algorithm),
            Tlv::bit_string(ca_signature.as_bytes()),
        ])
        .to_der();
        Ok(Certificate { body, tbs, ca_signature, encoded })
    }

    pub fn from_der(bytes: &[u8]) -> Result<Certificate, CertError> {
        let tlv = codec::decode(bytes)?;
        let mut r = tlv.reader(Tag::SEQUENCE)?;
        let tbs_tlv = r.next("tbsCertificate")?;
        let outer_alg = parse_signature_algorithm(r.next("signatureAlgorithm")?)?;
        let sig = r.next("signatureValue")?.as_bit_string()?;
        r.finish("signatureValue")?;
        let body = Body::parse(tbs_tlv)?;
        if outer_alg != body.signature_algorithm {
            return Err(DecodeError::InvalidValue("signature algorithm differs from the inner one").into());
        }
        let tbs = tbs_tlv.to_der();
        if body.to_tlv().to_der() != tbs {
            return Err(CertError::NonCanonical);
        }
        let ca_signature = Signature::new(outer_alg, sig.to_vec())?;
        Ok(Certificate { body, tbs, ca_signature, encoded: bytes.to_vec() })
    }

    pub fn to_der(&self) -> &[u8] {
        &self.encoded
    }

    pub fn encoded_length(&self) -> usize {
        self.encoded.len()
    }

    pub fn to_pem(&self) -> String {
        let b64 = BASE64.encode(&self.encoded);
        let mut out = format!("-----BEGIN {PEM_LABEL}-----\n");
        for line in b64.as_bytes().chunks(64) {
            out.push_str(std::str::from_utf8(line).expect("base64 is ASCII"));
            out.push('\n');
        }
        out.push_str(&format!("-----END {PEM_LABEL}-----\n"));
        out
    }

    pub fn from_pem(text: &str) -> Result<Certificate, CertError> {
        let begin = format!("-----BEGIN {PEM_LABEL}-----");
        let end = format!("-----END {PEM_LABEL}-----");
        let start = text.find(&begin).ok_or_else(|| CertError::Pem("BEGIN line not found".into()))? + begin.len();
        let stop = text[start..].find(&end).ok_or_else(|| CertError::Pem("END line not found".into()))? + start;
        let b64: String = text[start..stop].chars().filter(|c| !c.is_ascii_whitespace()).collect();
        let der = BASE64.decode(b64).map_err(|e| CertError::Pem(e.to_string()))?;
        Certificate::from_der(&der)
    }

    /// Every certificate in a file of concatenated PEM blocks, in order.
    pub fn from_pem_bundle(text: &str) -> Result<Vec<Certificate>, CertError> {
        let end = format!("-----END {PEM_LABEL}-----");
        let mut certs = Vec::new();
        let mut rest = text;
        while let Some(stop) = rest.find(&end) {
            certs.push(Certificate::from_pem(&rest[..stop + end.len()])?);
            rest = &rest[stop + end.len()..];
        }
        if certs.is_empty() {
            return Err(CertError::Pem("no certificate found".into()));
        }
        Ok(certs)
    }

    /// Accepts either PEM armor or raw DER.
    pub fn from_file_bytes(bytes: &[u8]) -> Result<Certificate, CertError> {
        match std::str::from_utf8(bytes) {
            Ok(text) if text.contains("-----BEGIN") => Certificate::from_pem(text),
            _ => Certificate::from_der(bytes),
        }
    }

    pub fn scheme(&self) -> CertScheme {
        self.body.scheme()
    }

    pub fn serial(&self) -> &[u8] {
        &self.body.serial
    }

    pub fn subject(&self) -> &str {
        &self.body.subject
    }

    pub fn issuer(&self) -> &str {
        &self.body.issuer
    }

    pub fn not_before(&self) -> Timestamp {
        self.body.not_before
    }

    pub fn not_after(&self) -> Timestamp {
        self.body.not_after
    }

    pub fn is_ca(&self) -> bool {
        self.body.is_ca
    }

    pub fn signature_algorithm(&self) -> DsaAlgorithm {
        self.body.signature_algorithm
    }

    pub fn ca_signature(&self) -> &Signature {
        &self.ca_signature
    }

    pub fn tbs(&self) -> &[u8] {
        &self.tbs
    }

    pub fn dsa_public(&self) -> Option<&DsaPublicKey> {
        self.body.dsa_public()
    }

    pub fn kem_public(&self) -> Option<&KemPublicKey> {
        self.body.kem_public()
    }

    pub fn delta_serial(&self) -> Option<&[u8]> {
        self.body.delta.as_ref().map(|d| d.serial.as_slice())
    }

    /// Keys carried by the certificate, without any validation.
    pub fn keys(&self) -> ExtractedKeys {
        ExtractedKeys {
            subject: self.body.subject.clone(),
            dsa_public: self.dsa_public().cloned(),
            kem_public: self.kem_public().cloned(),
        }
    }

    /// Checks the CA signature (both signatures for a chameleon certificate)
    /// and the validity window, then returns the carried keys.
    pub fn validate(&self, ca_public: &DsaPublicKey, now: Timestamp) -> Result<ExtractedKeys, CertError> {
        if ca_public.algorithm() != self.body.signature_algorithm {
            return Err(CertError::BadCaSignature);
        }
        dsa_verify(ca_public, &self.tbs, &self.ca_signature).map_err(|_| CertError::BadCaSignature)?;
        if let Some(d) = &self.body.delta {
            let delta_tbs = self.body.delta_tbs(&d.serial, &d.kem);
            dsa_verify(ca_public, &delta_tbs, &d.signature).map_err(|_| CertError::BadCaSignature)?;
        }
        if now < self.body.not_before {
            return Err(CertError::NotYetValid { not_before: self.body.not_before, now });
        }
        if now > self.body.not_after {
            return Err(CertError::Expired { not_after: self.body.not_after, now });
        }
        Ok(self.keys())
    }

    pub fn dump(&self) -> String {
        codec::decode(&self.encoded).map(|t| codec::dump(&t)).unwrap_or_default()
    }
}

impl fmt::Debug for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Certificate")
            .field("scheme", &self.scheme())
            .field("subject", &self.body.subject)
            .field("serial", &hex::encode(&self.body.serial))
            .field("len", &self.encoded.len())
            .finish()
    }
}

/// A single-level certificate authority with a self-signed PureDsa certificate.
#[derive(Clone, Debug)]
pub struct CaContext {
    keys: DsaKeyPair,
    certificate: Certificate,
    suite: Suite,
}

impl CaContext {
    pub fn generate(
        suite: Suite,
        common_name: &str,
        not_before: Timestamp,
        not_after: Timestamp,
        rng: &mut impl CryptoRngCore,
    ) -> Result<CaContext, CertError> {
        let keys = DsaKeyPair::generate(suite.dsa(), rng)?;
        CaContext::self_signed(suite, keys, common_name, random_serial(rng), not_before, not_after)
    }

    pub fn self_signed(
        suite: Suite,
        keys: DsaKeyPair,
        common_name: &str,
        serial: Vec<u8>,
        not_before: Timestamp,
        not_after: Timestamp,
    ) -> Result<CaContext, CertError> {
        if keys.algorithm() != suite.dsa() {
            return Err(CertError::SuiteMismatch(format!(
                "CA key is {}, suite needs {}",
                keys.algorithm(),
                suite.dsa()
            )));
        }
        let template = CertTemplate {
            subject_common_name: common_name.to_owned(),
            issuer_common_name: common_name.to_owned(),
            serial,
            not_before,
            not_after,
        };
        template.validate()?;
        let key_id = key_identifier(keys.public().as_bytes());
        let body = Body {
            serial: template.serial,
            signature_algorithm: suite.dsa(),
            issuer: template.issuer_common_name,
            not_before,
            not_after,
            subject: template.subject_common_name,
            key: SubjectKey::Dsa(keys.public().clone()),
            subject_key_id: key_id.clone(),
            authority_key_id: key_id,
            is_ca: true,
            alt_key: None,
            delta: None,
        };
        let certificate = Certificate::assemble(body, &keys)?;
        Ok(CaContext { keys, certificate, suite })
    }

    /// Rebuilds a CA from stored key and certificate.
    pub fn from_parts(keys: DsaKeyPair, certificate: Certificate) -> Result<CaContext, CertError> {
        if !certificate.is_ca() || certificate.dsa_public() != Some(keys.public()) {
            return Err(CertError::Conflict("certificate is not a CA certificate for this key".into()));
        }
        let alg = keys.algorithm();
        let suite = Suite::new(alg.level(), alg.family());
        Ok(CaContext { keys, certificate, suite })
    }

    pub fn suite(&self) -> Suite {
        self.suite
    }

    pub fn public(&self) -> &DsaPublicKey {
        self.keys.public()
    }

    pub fn keys(&self) -> &DsaKeyPair {
        &self.keys
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn name(&self) -> &str {
        self.certificate.subject()
    }

    /// Template with this CA as issuer.
    pub fn template(
        &self,
        subject: &str,
        serial: Vec<u8>,
        not_before: Timestamp,
        not_after: Timestamp,
    ) -> CertTemplate {
        CertTemplate {
            subject_common_name: subject.to_owned(),
            issuer_common_name: self.name().to_owned(),
            serial,
            not_before,
            not_after,
        }
    }

    pub fn issue(
        &self,
        template: &CertTemplate,
        scheme: CertScheme,
        dsa_pk: Option<&DsaPublicKey>,
        kem_pk: Option<&KemPublicKey>,
    ) -> Result<Certificate, CertError> {
        template.validate()?;
        if template.issuer_common_name != self.name() {
            return Err(CertError::InvalidTemplate(format!(
                "issuer {:?} is not this CA ({:?})",
                template.issuer_common_name,
                self.name()
            )));
        }
        let dsa = match (scheme.carries_dsa(), dsa_pk) {
            (true, None) => return Err(CertError::MissingKey("DSA")),
            (false, Some(_)) => return Err(CertError::UnexpectedKey("DSA")),
            (_, k) => k.cloned(),
        };
        let kem = match (scheme.carries_kem(), kem_pk) {
            (true, None) => return Err(CertError::MissingKey("KEM")),
            (false, Some(_)) => return Err(CertError::UnexpectedKey("KEM")),
            (_, k) => k.cloned(),
        };
        if let Some(d) = &dsa {
            if d.algorithm() != self.suite.dsa() {
                return Err(CertError::SuiteMismatch(format!("{} key for a {} CA", d.algorithm(), self.suite)));
            }
        }
        if let Some(k) = &kem {
            if k.algorithm() != self.suite.kem() {
                return Err(CertError::SuiteMismatch(format!("{} key for a {} CA", k.algorithm(), self.suite)));
            }
        }

        let key = match (scheme, dsa, kem.clone()) {
            (CertScheme::Composite, Some(d), Some(k)) => SubjectKey::Composite(d, k),
            (CertScheme::PureKem, None, Some(k)) => SubjectKey::Kem(k),
            (_, Some(d), _) => SubjectKey::Dsa(d),
            _ => unreachable!("key presence checked above"),
        };
        let mut body = Body {
            serial: template.serial.clone(),
            signature_algorithm: self.suite.dsa(),
            issuer: template.issuer_common_name.clone(),
            not_before: template.not_before,
            not_after: template.not_after,
            subject: template.subject_common_name.clone(),
            subject_key_id: key_identifier(&key.key_bytes()),
            key,
            authority_key_id: key_identifier(self.keys.public().as_bytes()),
            is_ca: false,
            alt_key: None,
            delta: None,
        };
        match (scheme, kem) {
            (CertScheme::Catalyst, Some(k)) => body.alt_key = Some(k),
            (CertScheme::Chameleon, Some(k)) => {
                let serial = delta_serial(&body.serial);
                let signature = self.keys.sign(&body.delta_tbs(&serial, &k))?;
                body.delta = Some(Delta { serial, kem: k, signature });
            }
            _ => {}
        }
        Certificate::assemble(body, &self.keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{count_verifications, KemKeyPair};
    use crate::suite::{DsaFamily, SecurityLevel};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const T0: Timestamp = Timestamp(1_767_225_600); // 2026-01-01
    const T1: Timestamp = Timestamp(1_798_761_600); // 2027-01-01

    struct Fixture {
        ca: CaContext,
        dsa: DsaKeyPair,
        kem: KemKeyPair,
    }

    fn fixture(level: SecurityLevel) -> Fixture {
        let mut rng = ChaCha20Rng::seed_from_u64(level.number() as u64);
        let suite = Suite::new(level, DsaFamily::MlDsa);
        let ca = CaContext::generate(suite, DEFAULT_CA_NAME, T0, T1, &mut rng).unwrap();
        let dsa = DsaKeyPair::generate(suite.dsa(), &mut rng).unwrap();
        let kem = KemKeyPair::generate(suite.kem(), &mut rng).unwrap();
        Fixture { ca, dsa, kem }
    }

    impl Fixture {
        fn issue(&self, scheme: CertScheme) -> Certificate {
            let t = self.ca.template("Alice", vec![0x41; SERIAL_LEN], T0, T1);
            let dsa = scheme.carries_dsa().then(|| self.dsa.public());
            let kem = scheme.carries_kem().then(|| self.kem.public());
            self.ca.issue(&t, scheme, dsa, kem).unwrap()
        }
    }

    #[test]
    fn every_scheme_round_trips_and_validates() {
        let f = fixture(SecurityLevel::L1);
        for scheme in CertScheme::ALL {
            let cert = f.issue(scheme);
            assert_eq!(cert.scheme(), scheme);
            let back = Certificate::from_der(cert.to_der()).unwrap();
            assert_eq!(back.to_der(), cert.to_der());
            assert_eq!(back, cert);
            let keys = back.validate(f.ca.public(), T0.plus_seconds(10)).unwrap();
            assert_eq!(keys.dsa_public.is_some(), scheme.carries_dsa());
            assert_eq!(keys.kem_public.is_some(), scheme.carries_kem());
            if let Some(k) = keys.kem_public {
                assert_eq!(&k, f.kem.public());
            }
        }
    }

    #[test]
    fn ca_certificate_is_self_signed() {
        let f = fixture(SecurityLevel::L1);
        let ca = f.ca.certificate();
        assert!(ca.is_ca());
        assert_eq!(ca.scheme(), CertScheme::PureDsa);
        ca.validate(f.ca.public(), T0).unwrap();
    }

    #[test]
    fn composite_overhead_is_small() {
        let f = fixture(SecurityLevel::L1);
        let len = f.issue(CertScheme::Composite).encoded_length();
        let material = 1312 + 800 + 2420;
        assert!(len > material && len - material < 300, "{len}");
    }

    #[test]
    fn scheme_length_ordering() {
        for level in SecurityLevel::ALL {
            let f = fixture(level);
            let len = |s| f.issue(s).encoded_length();
            let (comp, cat, cham) = (len(CertScheme::Composite), len(CertScheme::Catalyst), len(CertScheme::Chameleon));
            let pure = len(CertScheme::PureDsa) + len(CertScheme::PureKem);
            assert!(comp < cat && cat < cham && cham < pure, "{level}: {comp} {cat} {cham} {pure}");
            assert!(len(CertScheme::PureDsa) < comp);
        }
    }

    #[test]
    fn catalyst_gap_is_level_independent() {
        let gaps: Vec<usize> = SecurityLevel::ALL
            .into_iter()
            .map(|l| {
                let f = fixture(l);
                f.issue(CertScheme::Catalyst).encoded_length() - f.issue(CertScheme::Composite).encoded_length()
            })
            .collect();
        assert!(gaps[0] > 0 && gaps[0] <= 64);
        assert!(gaps.iter().all(|&g| g == gaps[0]), "{gaps:?}");
    }

    #[test]
    fn chameleon_needs_two_ca_signatures() {
        let f = fixture(SecurityLevel::L1);
        let cert = f.issue(CertScheme::Chameleon);
        let (res, n) = count_verifications(|| cert.validate(f.ca.public(), T0));
        res.unwrap();
        assert_eq!(n, 2);
        let (res, n) = count_verifications(|| f.issue(CertScheme::Composite).validate(f.ca.public(), T0));
        res.unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn tampered_delta_signature_rejected() {
        let f = fixture(SecurityLevel::L1);
        let cert = f.issue(CertScheme::Chameleon);
        let sig = cert.body.delta.as_ref().unwrap().signature.as_bytes().to_vec();
        let pos = cert.to_der().windows(sig.len()).position(|w| w == sig.as_slice()).unwrap();
        let mut der = cert.to_der().to_vec();
        der[pos + 100] ^= 0x01;
        let bad = Certificate::from_der(&der).unwrap();
        assert!(matches!(bad.validate(f.ca.public(), T0), Err(CertError::BadCaSignature)));
    }

    #[test]
    fn forged_delta_rejected_even_with_valid_outer_signature() {
        // The CA signs a body whose delta signature is garbage: the outer
        // signature is fine, so only the delta check can catch it.
        let f = fixture(SecurityLevel::L1);
        let mut body = f.issue(CertScheme::Chameleon).body.clone();
        let d = body.delta.as_mut().unwrap();
        let mut sig = d.signature.as_bytes().to_vec();
        sig[0] ^= 0xff;
        d.signature = Signature::new(d.signature.algorithm(), sig).unwrap();
        let cert = Certificate::assemble(body, f.ca.keys()).unwrap();
        assert!(matches!(cert.validate(f.ca.public(), T0), Err(CertError::BadCaSignature)));
    }

    #[test]
    fn validity_window() {
        let f = fixture(SecurityLevel::L1);
        let cert = f.issue(CertScheme::Composite);
        assert!(matches!(cert.validate(f.ca.public(), T1.plus_seconds(1)), Err(CertError::Expired { .. })));
        assert!(matches!(cert.validate(f.ca.public(), T0.plus_seconds(-1)), Err(CertError::NotYetValid { .. })));
        cert.validate(f.ca.public(), T1).unwrap();
    }

    #[test]
    fn wrong_ca_rejected() {
        let f = fixture(SecurityLevel::L1);
        let other = fixture(SecurityLevel::L1);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let stranger = CaContext::generate(f.ca.suite(), DEFAULT_CA_NAME, T0, T1, &mut rng).unwrap();
        let cert = f.issue(CertScheme::Catalyst);
        assert!(matches!(cert.validate(stranger.public(), T0), Err(CertError::BadCaSignature)));
        let l3 = fixture(SecurityLevel::L3);
        assert!(matches!(cert.validate(l3.ca.public(), T0), Err(CertError::BadCaSignature)));
        drop(other);
    }

    #[test]
    fn key_presence_preconditions() {
        let f = fixture(SecurityLevel::L1);
        let t = f.ca.template("Alice", vec![1], T0, T1);
        let issue = |s, d: Option<&DsaPublicKey>, k: Option<&KemPublicKey>| f.ca.issue(&t, s, d, k);
        assert!(matches!(
            issue(CertScheme::PureDsa, Some(f.dsa.public()), Some(f.kem.public())),
            Err(CertError::UnexpectedKey("KEM"))
        ));
        assert!(matches!(
            issue(CertScheme::PureKem, Some(f.dsa.public()), Some(f.kem.public())),
            Err(CertError::UnexpectedKey("DSA"))
        ));
        assert!(matches!(issue(CertScheme::Composite, Some(f.dsa.public()), None), Err(CertError::MissingKey("KEM"))));
        assert!(matches!(issue(CertScheme::Catalyst, None, Some(f.kem.public())), Err(CertError::MissingKey("DSA"))));
    }

    #[test]
    fn template_invariants() {
        let f = fixture(SecurityLevel::L1);
        let mut t = f.ca.template("", vec![1], T0, T1);
        assert!(matches!(t.validate(), Err(CertError::InvalidTemplate(_))));
        t.subject_common_name = "Alice".into();
        t.not_after = T0;
        assert!(matches!(t.validate(), Err(CertError::InvalidTemplate(_))));
        t.not_after = T1;
        t.serial = vec![0, 1];
        assert!(matches!(t.validate(), Err(CertError::InvalidTemplate(_))));
        t.serial = vec![1; 21];
        assert!(matches!(t.validate(), Err(CertError::InvalidTemplate(_))));
        t.serial = vec![0x80];
        t.validate().unwrap();
        t.issuer_common_name = "Someone Else".into();
        assert!(matches!(
            f.ca.issue(&t, CertScheme::PureDsa, Some(f.dsa.public()), None),
            Err(CertError::InvalidTemplate(_))
        ));
    }

    #[test]
    fn suite_mismatch_rejected() {
        let f = fixture(SecurityLevel::L1);
        let l3 = fixture(SecurityLevel::L3);
        let t = f.ca.template("Alice", vec![1], T0, T1);
        assert!(matches!(
            f.ca.issue(&t, CertScheme::PureKem, None, Some(l3.kem.public())),
            Err(CertError::SuiteMismatch(_))
        ));
    }

    #[test]
    fn random_serials_are_fixed_width() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = random_serial(&mut rng);
            check_serial(&s).unwrap();
            assert_eq!(Tlv::unsigned_integer(&s).encoded_len(), 2 + SERIAL_LEN);
        }
    }

    #[test]
    fn pem_round_trip() {
        let f = fixture(SecurityLevel::L1);
        let cert = f.issue(CertScheme::Chameleon);
        let pem = cert.to_pem();
        assert!(pem.starts_with("-----BEGIN PQC CERTIFICATE-----\n"));
        assert!(pem.lines().all(|l| l.len() <= 64));
        assert_eq!(Certificate::from_file_bytes(pem.as_bytes()).unwrap(), cert);
        assert_eq!(Certificate::from_file_bytes(cert.to_der()).unwrap(), cert);
        assert!(matches!(Certificate::from_pem("nothing here"), Err(CertError::Pem(_))));
    }

    #[test]
    fn pem_bundle_keeps_order() {
        let f = fixture(SecurityLevel::L1);
        let a = f.issue(CertScheme::PureDsa);
        let b = f.issue(CertScheme::PureKem);
        let text = format!("{}{}", a.to_pem(), b.to_pem());
        assert_eq!(Certificate::from_pem_bundle(&text).unwrap(), vec![a.clone(), b]);
        assert_eq!(Certificate::from_pem_bundle(&a.to_pem()).unwrap(), vec![a]);
        assert!(matches!(Certificate::from_pem_bundle(""), Err(CertError::Pem(_))));
    }

    #[test]
    fn unknown_key_algorithm_is_unknown_scheme() {
        let f = fixture(SecurityLevel::L1);
        let cert = f.issue(CertScheme::PureDsa);
        let mut der = cert.to_der().to_vec();
        // The subject key OID is the second ML-DSA-44 OID occurrence (after the
        // signature algorithm); turn its last arc into an unassigned one.
        let oid = oids::ML_DSA_44.to_der_content();
        let hits: Vec<usize> =
            der.windows(oid.len()).enumerate().filter(|(_, w)| *w == oid.as_slice()).map(|(i, _)| i).collect();
        der[hits[1] + oid.len() - 1] = 0x7f;
        assert!(matches!(Certificate::from_der(&der), Err(CertError::UnknownScheme(_))));
    }

    #[test]
    fn key_byte_tamper_fails_validation() {
        let f = fixture(SecurityLevel::L1);
        for scheme in CertScheme::ALL {
            let cert = f.issue(scheme);
            let kem = f.kem.public().as_bytes();
            let dsa = f.dsa.public().as_bytes();
            for needle in [dsa, kem] {
                let Some(pos) = cert.to_der().windows(needle.len()).position(|w| w == needle) else { continue };
                let mut der = cert.to_der().to_vec();
                der[pos + 7] ^= 0x80;
                let bad = Certificate::from_der(&der).unwrap();
                assert!(matches!(bad.validate(f.ca.public(), T0), Err(CertError::BadCaSignature)), "{scheme}");
            }
        }
    }
}
