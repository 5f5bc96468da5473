//! The three handshake messages (kepReq, kepResp, kepAck) as PKCS#7 SignedData.
//!
//! ```text
//! ContentInfo ::= SEQUENCE { signedData OID, [0] EXPLICIT SignedData }
//! SignedData  ::= SEQUENCE {
//!     version INTEGER (1), digestAlgorithms SET { SEQUENCE { shake256 } },
//!     contentInfo SEQUENCE { messageType OID, [0] EXPLICIT Message },
//!     certificates [0] IMPLICIT SEQUENCE OF Certificate,
//!     signerInfos SET { SignerInfo } }
//! Message     ::= NULL                                    -- kepReq
//!               | SEQUENCE { peerId OCTET STRING (8), ciphertext OCTET STRING }
//! SignerInfo  ::= SEQUENCE {
//!     version INTEGER (1), issuerAndSerialNumber SEQUENCE { Name, INTEGER },
//!     digestAlgorithm, signedAttrs [0] IMPLICIT SET OF Attribute,
//!     signatureAlgorithm, signature OCTET STRING }
//! ```
//!
//! The message digest is SHAKE-256 (32 bytes) over the encoded inner
//! contentInfo; the signature covers the signed attributes encoded as a SET.

use std::fmt;

use thiserror::Error;

use crate::certificates::{CertError, Certificate, ExtractedKeys};
use crate::codec::{self, DecodeError, Tag, Timestamp, Tlv};
use crate::crypto::{
    dsa_verify, hashed_id8, shake256, CryptoError, DsaKeyPair, DsaPublicKey, KemCiphertext, Signature,
};
use crate::oids;
use crate::suite::{DsaAlgorithm, KemAlgorithm};

pub const DIGEST_LEN: usize = 32;
pub const MESSAGE_ID_LEN: usize = 8;
pub const DEFAULT_FRESHNESS_WINDOW: i64 = 300;

pub type MessageId = [u8; MESSAGE_ID_LEN];

#[derive(Debug, Error)]
pub enum MessageError {
    #[error("malformed message: {0}")]
    Malformed(#[from] DecodeError),
    #[error("message encoding is not canonical")]
    NonCanonical,
    #[error("unknown message type {0}")]
    UnknownMessageType(String),
    #[error("content does not match message type: {0}")]
    ContentMismatch(&'static str),
    #[error("signing key has no certificate in the certificate list")]
    SignerNotInCertificates,
    #[error("certificate list is empty")]
    NoCertificates,
    #[error("certificate invalid: {0}")]
    CertInvalid(#[from] CertError),
    #[error("message digest does not match content")]
    DigestMismatch,
    #[error("message signature does not verify")]
    BadSignature,
    #[error("signing time {signing_time} outside {window}s window around {now}")]
    StaleTimestamp { signing_time: Timestamp, now: Timestamp, window: i64 },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MessageType {
    KepReq,
    KepResp,
    KepAck,
}

impl MessageType {
    pub const ALL: [MessageType; 3] = [MessageType::KepReq, MessageType::KepResp, MessageType::KepAck];

    pub fn oid(self) -> codec::Oid {
        match self {
            MessageType::KepReq => oids::KEP_REQ,
            MessageType::KepResp => oids::KEP_RESP,
            MessageType::KepAck => oids::KEP_ACK,
        }
    }

    pub fn from_oid(oid: &codec::Oid) -> Option<MessageType> {
        MessageType::ALL.into_iter().find(|t| t.oid() == *oid)
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageType::KepReq => "kepReq",
            MessageType::KepResp => "kepResp",
            MessageType::KepAck => "kepAck",
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContentInfo {
    pub message_type: MessageType,
    pub payload: Option<KemCiphertext>,
    pub peer_message_id: Option<MessageId>,
}

impl ContentInfo {
    pub fn request() -> ContentInfo {
        ContentInfo { message_type: MessageType::KepReq, payload: None, peer_message_id: None }
    }

    pub fn response(request_id: MessageId, ciphertext: KemCiphertext) -> ContentInfo {
        ContentInfo { message_type: MessageType::KepResp, payload: Some(ciphertext), peer_message_id: Some(request_id) }
    }

    pub fn ack(response_id: MessageId, ciphertext: KemCiphertext) -> ContentInfo {
        ContentInfo { message_type: MessageType::KepAck, payload: Some(ciphertext), peer_message_id: Some(response_id) }
    }

    fn check(&self) -> Result<(), MessageError> {
        match (self.message_type, &self.payload, &self.peer_message_id) {
            (MessageType::KepReq, None, None) => Ok(()),
            (MessageType::KepReq, _, _) => Err(MessageError::ContentMismatch("kepReq carries no payload or peer id")),
            (_, Some(_), Some(_)) => Ok(()),
            (_, None, _) => Err(MessageError::ContentMismatch("kepResp/kepAck need a KEM ciphertext")),
            (_, _, None) => Err(MessageError::ContentMismatch("kepResp/kepAck need a peer message id")),
        }
    }

    fn to_tlv(&self) -> Tlv {
        let message = match (&self.peer_message_id, &self.payload) {
            (Some(id), Some(ct)) => {
                Tlv::sequence(vec![Tlv::octet_string(id.to_vec()), Tlv::octet_string(ct.as_bytes())])
            }
            _ => Tlv::null(),
        };
        Tlv::sequence(vec![Tlv::oid(&self.message_type.oid()), Tlv::explicit(0, message)])
    }

    fn parse(tlv: &Tlv) -> Result<ContentInfo, MessageError> {
        let mut r = tlv.reader(Tag::SEQUENCE)?;
        let oid = r.next("message type")?.as_oid()?;
        let message_type =
            MessageType::from_oid(&oid).ok_or_else(|| MessageError::UnknownMessageType(oid.to_string()))?;
        let message = r.next("message")?.explicit_inner(0)?;
        r.finish("message")?;
        let content = if message.tag() == Tag::NULL {
            message.as_null()?;
            ContentInfo { message_type, payload: None, peer_message_id: None }
        } else {
            let mut m = message.reader(Tag::SEQUENCE)?;
            let id: MessageId = m
                .next("peer message id")?
                .as_octets()?
                .try_into()
                .map_err(|_| DecodeError::InvalidValue("peer message id"))?;
            let ct = m.next("ciphertext")?.as_octets()?;
            m.finish("ciphertext")?;
            let alg = KemAlgorithm::from_ciphertext_len(ct.len())
                .ok_or(DecodeError::InvalidValue("KEM ciphertext length"))?;
            ContentInfo {
                message_type,
                payload: Some(KemCiphertext::new(alg, ct.to_vec())?),
                peer_message_id: Some(id),
            }
        };
        content.check()?;
        Ok(content)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignedAttributes {
    pub signing_time: Timestamp,
    pub message_digest: [u8; DIGEST_LEN],
}

impl SignedAttributes {
    fn attributes(&self) -> Vec<Tlv> {
        vec![
            Tlv::sequence(vec![
                Tlv::oid(&oids::ATTR_SIGNING_TIME),
                Tlv::set(vec![Tlv::generalized_time(self.signing_time)]),
            ]),
            Tlv::sequence(vec![
                Tlv::oid(&oids::ATTR_MESSAGE_DIGEST),
                Tlv::set(vec![Tlv::octet_string(self.message_digest.to_vec())]),
            ]),
        ]
    }

    /// The bytes that get signed.
    fn to_set_der(self) -> Vec<u8> {
        Tlv::set(self.attributes()).to_der()
    }

    /// Same content with the `[0] IMPLICIT` tag used inside SignerInfo.
    fn to_implicit(self) -> Tlv {
        match Tlv::set(self.attributes()).into_content() {
            codec::Content::Constructed(children) => Tlv::constructed(Tag::context(0), children),
            codec::Content::Primitive(_) => unreachable!("SET is constructed"),
        }
    }

    fn parse(tlv: &Tlv) -> Result<SignedAttributes, MessageError> {
        let mut signing_time = None;
        let mut message_digest = None;
        for attr in tlv.expect_tag(Tag::context(0))?.children()? {
            let mut a = attr.reader(Tag::SEQUENCE)?;
            let oid = a.next("attribute type")?.as_oid()?;
            let mut values = a.next("attribute values")?.reader(Tag::SET)?;
            a.finish("attribute values")?;
            let value = values.next("attribute value")?;
            values.finish("attribute value")?;
            if oid == oids::ATTR_SIGNING_TIME && signing_time.is_none() {
                signing_time = Some(value.as_time()?);
            } else if oid == oids::ATTR_MESSAGE_DIGEST && message_digest.is_none() {
                let d: [u8; DIGEST_LEN] =
                    value.as_octets()?.try_into().map_err(|_| DecodeError::InvalidValue("message digest"))?;
                message_digest = Some(d);
            } else {
                return Err(DecodeError::InvalidValue("signed attribute (unexpected or repeated)").into());
            }
        }
        Ok(SignedAttributes {
            signing_time: signing_time.ok_or(DecodeError::MissingElement("signingTime attribute"))?,
            message_digest: message_digest.ok_or(DecodeError::MissingElement("messageDigest attribute"))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignerInfo {
    pub issuer: String,
    pub serial: Vec<u8>,
    pub signed_attributes: SignedAttributes,
    pub signature: Signature,
}

fn name(cn: &str) -> Tlv {
    Tlv::sequence(vec![Tlv::set(vec![Tlv::sequence(vec![Tlv::oid(&oids::COMMON_NAME), Tlv::utf8(cn)])])])
}

fn parse_name(tlv: &Tlv) -> Result<String, MessageError> {
    let mut r = tlv.reader(Tag::SEQUENCE)?;
    let mut rdn = r.next("relative distinguished name")?.reader(Tag::SET)?;
    r.finish("relative distinguished name")?;
    let mut atv = rdn.next("attribute")?.reader(Tag::SEQUENCE)?;
    rdn.finish("attribute")?;
    if atv.next("attribute type")?.as_oid()? != oids::COMMON_NAME {
        return Err(DecodeError::InvalidValue("issuer name").into());
    }
    let cn = atv.next("attribute value")?.as_utf8()?.to_owned();
    atv.finish("attribute value")?;
    Ok(cn)
}

fn digest_algorithm() -> Tlv {
    Tlv::sequence(vec![Tlv::oid(&oids::SHAKE256)])
}

fn expect_digest_algorithm(tlv: &Tlv) -> Result<(), MessageError> {
    let mut r = tlv.reader(Tag::SEQUENCE)?;
    if r.next("digest algorithm")?.as_oid()? != oids::SHAKE256 {
        return Err(DecodeError::InvalidValue("digest algorithm (only SHAKE-256 is supported)").into());
    }
    r.finish("digest algorithm")?;
    Ok(())
}

impl SignerInfo {
    fn to_tlv(&self) -> Tlv {
        Tlv::sequence(vec![
            Tlv::integer_u64(1),
            Tlv::sequence(vec![name(&self.issuer), Tlv::unsigned_integer(&self.serial)]),
            digest_algorithm(),
            self.signed_attributes.to_implicit(),
            Tlv::sequence(vec![Tlv::oid(&self.signature.algorithm().oid())]),
            Tlv::octet_string(self.signature.as_bytes()),
        ])
    }

    fn parse(tlv: &Tlv) -> Result<SignerInfo, MessageError> {
        let mut r = tlv.reader(Tag::SEQUENCE)?;
        if r.next("signer version")?.as_u64()? != 1 {
            return Err(DecodeError::InvalidValue("signer version").into());
        }
        let mut ias = r.next("issuerAndSerialNumber")?.reader(Tag::SEQUENCE)?;
        let issuer = parse_name(ias.next("issuer")?)?;
        let serial = ias.next("serial")?.as_unsigned_bytes()?.to_vec();
        ias.finish("serial")?;
        expect_digest_algorithm(r.next("digest algorithm")?)?;
        let signed_attributes = SignedAttributes::parse(r.next("signed attributes")?)?;
        let mut alg = r.next("signature algorithm")?.reader(Tag::SEQUENCE)?;
        let oid = alg.next("signature algorithm")?.as_oid()?;
        alg.finish("signature algorithm")?;
        let alg = DsaAlgorithm::from_oid(&oid).ok_or(DecodeError::InvalidValue("signature algorithm"))?;
        let signature = Signature::new(alg, r.next("signature")?.as_octets()?.to_vec())
            .map_err(|_| DecodeError::InvalidValue("signature length"))?;
        r.finish("signature")?;
        Ok(SignerInfo { issuer, serial, signed_attributes, signature })
    }
}

/// Result of a successful [`SignedData::verify`].
#[derive(Clone, Debug)]
pub struct Verified {
    pub message_type: MessageType,
    pub content: ContentInfo,
    pub peer_keys: ExtractedKeys,
    pub signing_time: Timestamp,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SignedData {
    content: ContentInfo,
    certificates: Vec<Certificate>,
    signer_info: SignerInfo,
    content_der: Vec<u8>,
    encoded: Vec<u8>,
}

fn assemble(content: &Tlv, certificates: &[Certificate], signer_info: &SignerInfo) -> Result<Vec<u8>, MessageError> {
    let certs = certificates.iter().map(|c| codec::decode(c.to_der())).collect::<Result<Vec<_>, _>>()?;
    let signed_data = Tlv::sequence(vec![
        Tlv::integer_u64(1),
        Tlv::set(vec![digest_algorithm()]),
        content.clone(),
        Tlv::constructed(Tag::context(0), certs),
        Tlv::set(vec![signer_info.to_tlv()]),
    ]);
    Ok(Tlv::sequence(vec![Tlv::oid(&oids::PKCS7_SIGNED_DATA), Tlv::explicit(0, signed_data)]).to_der())
}

impl SignedData {
    /// Builds and signs a message. Signing is deterministic, so identical
    /// inputs give identical bytes.
    pub fn build(
        content: ContentInfo,
        certificates: Vec<Certificate>,
        signer: &DsaKeyPair,
        signing_time: Timestamp,
    ) -> Result<SignedData, MessageError> {
        content.check()?;
        if certificates.is_empty() {
            return Err(MessageError::NoCertificates);
        }
        if signing_time.to_generalized_time().is_none() {
            return Err(DecodeError::InvalidValue("signing time").into());
        }
        let signer_cert = certificates
            .iter()
            .find(|c| !c.is_ca() && c.dsa_public() == Some(signer.public()))
            .ok_or(MessageError::SignerNotInCertificates)?;
        let (issuer, serial) = (signer_cert.issuer().to_owned(), signer_cert.serial().to_vec());
        SignedData::build_raw(content, certificates, signer, issuer, serial, signing_time)
    }

    /// Signs without tying the signer to a listed certificate.
    pub(crate) fn build_raw(
        content: ContentInfo,
        certificates: Vec<Certificate>,
        signer: &DsaKeyPair,
        issuer: String,
        serial: Vec<u8>,
        signing_time: Timestamp,
    ) -> Result<SignedData, MessageError> {
        let content_tlv = content.to_tlv();
        let content_der = content_tlv.to_der();
        let message_digest: [u8; DIGEST_LEN] = shake256(&content_der, DIGEST_LEN).try_into().expect("digest length");
        let signed_attributes = SignedAttributes { signing_time, message_digest };
        let signature = signer.sign(&signed_attributes.to_set_der())?;
        let signer_info = SignerInfo { issuer, serial, signed_attributes, signature };
        let encoded = assemble(&content_tlv, &certificates, &signer_info)?;
        Ok(SignedData { content, certificates, signer_info, content_der, encoded })
    }

    pub fn from_der(bytes: &[u8]) -> Result<SignedData, MessageError> {
        let tlv = codec::decode(bytes)?;
        let mut outer = tlv.reader(Tag::SEQUENCE)?;
        if outer.next("content type")?.as_oid()? != oids::PKCS7_SIGNED_DATA {
            return Err(DecodeError::InvalidValue("content type (expected signedData)").into());
        }
        let sd = outer.next("signedData")?.explicit_inner(0)?;
        outer.finish("signedData")?;

        let mut r = sd.reader(Tag::SEQUENCE)?;
        if r.next("version")?.as_u64()? != 1 {
            return Err(DecodeError::InvalidValue("SignedData version").into());
        }
        let mut algs = r.next("digestAlgorithms")?.reader(Tag::SET)?;
        expect_digest_algorithm(algs.next("digest algorithm")?)?;
        algs.finish("digest algorithm")?;
        let content_tlv = r.next("contentInfo")?;
        let content = ContentInfo::parse(content_tlv)?;
        let certs_tlv = r.next("certificates")?;
        let certificates = certs_tlv
            .expect_tag(Tag::context(0))?
            .children()?
            .iter()
            .map(|c| Certificate::from_der(&c.to_der()))
            .collect::<Result<Vec<_>, _>>()?;
        if certificates.is_empty() {
            return Err(MessageError::NoCertificates);
        }
        let mut signers = r.next("signerInfos")?.reader(Tag::SET)?;
        let signer_info = SignerInfo::parse(signers.next("signerInfo")?)?;
        signers.finish("signerInfo")?;
        r.finish("signerInfos")?;

        let content_der = content_tlv.to_der();
        if assemble(&content.to_tlv(), &certificates, &signer_info)? != bytes {
            return Err(MessageError::NonCanonical);
        }
        Ok(SignedData { content, certificates, signer_info, content_der, encoded: bytes.to_vec() })
    }

    pub fn message_type(&self) -> MessageType {
        self.content.message_type
    }

    pub fn content(&self) -> &ContentInfo {
        &self.content
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certificates
    }

    pub fn signer_info(&self) -> &SignerInfo {
        &self.signer_info
    }

    pub fn signing_time(&self) -> Timestamp {
        self.signer_info.signed_attributes.signing_time
    }

    pub fn to_der(&self) -> &[u8] {
        &self.encoded
    }

    pub fn encoded_length(&self) -> usize {
        self.encoded.len()
    }

    /// HashedId8 of the encoded message.
    pub fn message_id(&self) -> MessageId {
        hashed_id8(&self.encoded)
    }

    /// Validates every end-entity certificate and merges their keys. A CA
    /// certificate in the list is skipped if it carries `ca_public`.
    pub fn validate_certificates(&self, ca_public: &DsaPublicKey, now: Timestamp) -> Result<ExtractedKeys, CertError> {
        let mut merged: Option<ExtractedKeys> = None;
        let mut signer_found = false;
        for cert in &self.certificates {
            if cert.is_ca() {
                if cert.dsa_public() == Some(ca_public) && cert.subject() == cert.issuer() {
                    continue;
                }
                return Err(CertError::Conflict("CA certificate does not belong to the trusted CA".into()));
            }
            let keys = cert.validate(ca_public, now)?;
            if cert.issuer() == self.signer_info.issuer && cert.serial() == self.signer_info.serial.as_slice() {
                if keys.dsa_public.is_none() {
                    return Err(CertError::NoSigningKey);
                }
                signer_found = true;
            }
            merged = Some(match merged {
                None => keys,
                Some(mut m) => {
                    if m.subject != keys.subject {
                        return Err(CertError::Conflict(format!("subjects {:?} and {:?}", m.subject, keys.subject)));
                    }
                    if keys.dsa_public.is_some() {
                        if m.dsa_public.is_some() {
                            return Err(CertError::Conflict("two DSA keys".into()));
                        }
                        m.dsa_public = keys.dsa_public;
                    }
                    if keys.kem_public.is_some() {
                        if m.kem_public.is_some() {
                            return Err(CertError::Conflict("two KEM keys".into()));
                        }
                        m.kem_public = keys.kem_public;
                    }
                    m
                }
            });
        }
        let merged = merged.ok_or(CertError::Conflict("no end-entity certificate".into()))?;
        if merged.dsa_public.is_none() {
            return Err(CertError::NoSigningKey);
        }
        if !signer_found {
            return Err(CertError::SignerNotFound);
        }
        Ok(merged)
    }

    /// Full verification: certificates, then digest, then signature, then
    /// freshness.
    pub fn verify(
        &self,
        ca_public: &DsaPublicKey,
        now: Timestamp,
        freshness_window: i64,
    ) -> Result<Verified, MessageError> {
        let keys = self.validate_certificates(ca_public, now)?;
        self.verify_with_keys(keys, now, freshness_window)
    }

    /// Verification against already-trusted keys; certificates are not
    /// examined.
    pub fn verify_with_keys(
        &self,
        keys: ExtractedKeys,
        now: Timestamp,
        freshness_window: i64,
    ) -> Result<Verified, MessageError> {
        let attrs = &self.signer_info.signed_attributes;
        if shake256(&self.content_der, DIGEST_LEN) != attrs.message_digest {
            return Err(MessageError::DigestMismatch);
        }
        let dsa = keys.dsa_public.as_ref().ok_or(CertError::NoSigningKey)?;
        dsa_verify(dsa, &attrs.to_set_der(), &self.signer_info.signature).map_err(|_| MessageError::BadSignature)?;
        let skew = now.seconds().saturating_sub(attrs.signing_time.seconds()).saturating_abs();
        if skew > freshness_window {
            return Err(MessageError::StaleTimestamp {
                signing_time: attrs.signing_time,
                now,
                window: freshness_window,
            });
        }
        Ok(Verified {
            message_type: self.content.message_type,
            content: self.content.clone(),
            peer_keys: keys,
            signing_time: attrs.signing_time,
        })
    }

    /// Human-readable field listing.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let si = &self.signer_info;
        out.push_str(&format!("messageType:    {}\n", self.message_type()));
        out.push_str(&format!("length:         {} bytes\n", self.encoded_length()));
        out.push_str(&format!("messageId:      {}\n", hex::encode(self.message_id())));
        if let Some(id) = &self.content.peer_message_id {
            let label = if self.message_type() == MessageType::KepResp { "requestId:" } else { "responseId:" };
            out.push_str(&format!("{label:<16}{}\n", hex::encode(id)));
        }
        if let Some(ct) = &self.content.payload {
            out.push_str(&format!("ciphertext:     {} ({} bytes)\n", ct.algorithm(), ct.as_bytes().len()));
        }
        for (i, c) in self.certificates.iter().enumerate() {
            out.push_str(&format!(
                "certificate[{i}]: {} subject={:?} serial={} ({} bytes)\n",
                if c.is_ca() { "ca".to_string() } else { c.scheme().to_string() },
                c.subject(),
                hex::encode(c.serial()),
                c.encoded_length()
            ));
        }
        out.push_str(&format!("signer:         issuer={:?} serial={}\n", si.issuer, hex::encode(&si.serial)));
        out.push_str(&format!("signingTime:    {}\n", si.signed_attributes.signing_time));
        out.push_str(&format!("messageDigest:  {}\n", hex::encode(si.signed_attributes.message_digest)));
        out.push_str(&format!(
            "signature:      {} ({} bytes)\n",
            si.signature.algorithm(),
            si.signature.as_bytes().len()
        ));
        out
    }
}

impl fmt::Debug for SignedData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignedData")
            .field("type", &self.message_type())
            .field("certificates", &self.certificates.len())
            .field("len", &self.encoded.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{random_serial, CaContext, CertScheme, DEFAULT_CA_NAME};
    use crate::crypto::{count_verifications, KemKeyPair};
    use crate::suite::{DsaFamily, SecurityLevel, Suite};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const T0: Timestamp = Timestamp(1_767_225_600);
    const T1: Timestamp = Timestamp(1_798_761_600);
    const NOW: Timestamp = Timestamp(1_780_000_000);

    struct Party {
        ca: CaContext,
        dsa: DsaKeyPair,
        kem: KemKeyPair,
        rng: ChaCha20Rng,
    }

    fn party(level: SecurityLevel) -> Party {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let suite = Suite::new(level, DsaFamily::MlDsa);
        let ca = CaContext::generate(suite, DEFAULT_CA_NAME, T0, T1, &mut rng).unwrap();
        let dsa = DsaKeyPair::generate(suite.dsa(), &mut rng).unwrap();
        let kem = KemKeyPair::generate(suite.kem(), &mut rng).unwrap();
        Party { ca, dsa, kem, rng }
    }

    impl Party {
        fn cert(&mut self, scheme: CertScheme, subject: &str) -> Certificate {
            let t = self.ca.template(subject, random_serial(&mut self.rng), T0, T1);
            let d = scheme.carries_dsa().then(|| self.dsa.public());
            let k = scheme.carries_kem().then(|| self.kem.public());
            self.ca.issue(&t, scheme, d, k).unwrap()
        }

        fn ciphertext(&mut self) -> KemCiphertext {
            self.kem.public().encapsulate(&mut self.rng).unwrap().0
        }
    }

    #[test]
    fn request_round_trip() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        let back = SignedData::from_der(msg.to_der()).unwrap();
        assert_eq!(back, msg);
        let v = back.verify(p.ca.public(), NOW, DEFAULT_FRESHNESS_WINDOW).unwrap();
        assert_eq!(v.message_type, MessageType::KepReq);
        assert!(v.content.payload.is_none() && v.content.peer_message_id.is_none());
        assert_eq!(v.peer_keys.kem_public.as_ref(), Some(p.kem.public()));
    }

    #[test]
    fn build_is_deterministic() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Catalyst, "Alice");
        let ct = p.ciphertext();
        let a = SignedData::build(ContentInfo::response([7; 8], ct.clone()), vec![cert.clone()], &p.dsa, NOW).unwrap();
        let b = SignedData::build(ContentInfo::response([7; 8], ct), vec![cert], &p.dsa, NOW).unwrap();
        assert_eq!(a.to_der(), b.to_der());
        assert_eq!(a.message_id(), b.message_id());
    }

    #[test]
    fn content_preconditions() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let ct = p.ciphertext();
        let no_payload =
            ContentInfo { message_type: MessageType::KepResp, payload: None, peer_message_id: Some([0; 8]) };
        assert!(matches!(
            SignedData::build(no_payload, vec![cert.clone()], &p.dsa, NOW),
            Err(MessageError::ContentMismatch(_))
        ));
        let req_with_payload =
            ContentInfo { message_type: MessageType::KepReq, payload: Some(ct), peer_message_id: None };
        assert!(matches!(
            SignedData::build(req_with_payload, vec![cert], &p.dsa, NOW),
            Err(MessageError::ContentMismatch(_))
        ));
        assert!(matches!(
            SignedData::build(ContentInfo::request(), vec![], &p.dsa, NOW),
            Err(MessageError::NoCertificates)
        ));
        let kem_only = p.cert(CertScheme::PureKem, "Alice");
        assert!(matches!(
            SignedData::build(ContentInfo::request(), vec![kem_only], &p.dsa, NOW),
            Err(MessageError::SignerNotInCertificates)
        ));
    }

    #[test]
    fn freshness_window() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        msg.verify(p.ca.public(), NOW.plus_seconds(300), 300).unwrap();
        assert!(matches!(
            msg.verify(p.ca.public(), NOW.plus_seconds(301), 300),
            Err(MessageError::StaleTimestamp { .. })
        ));
        assert!(matches!(
            msg.verify(p.ca.public(), NOW.plus_seconds(-301), 300),
            Err(MessageError::StaleTimestamp { .. })
        ));
    }

    fn flip_in(msg: &SignedData, needle: &[u8], offset: usize) -> Vec<u8> {
        let pos = msg.to_der().windows(needle.len()).position(|w| w == needle).expect("needle present");
        let mut der = msg.to_der().to_vec();
        der[pos + offset] ^= 0x01;
        der
    }

    #[test]
    fn payload_tamper_is_digest_mismatch() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let ct = p.ciphertext();
        let msg = SignedData::build(ContentInfo::ack([1; 8], ct.clone()), vec![cert], &p.dsa, NOW).unwrap();
        let bad = SignedData::from_der(&flip_in(&msg, ct.as_bytes(), 5)).unwrap();
        assert!(matches!(bad.verify(p.ca.public(), NOW, 300), Err(MessageError::DigestMismatch)));
        let bad = SignedData::from_der(&flip_in(&msg, &[1; 8], 3)).unwrap();
        assert!(matches!(bad.verify(p.ca.public(), NOW, 300), Err(MessageError::DigestMismatch)));
    }

    #[test]
    fn signature_tamper_is_bad_signature() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        let sig = msg.signer_info().signature.as_bytes().to_vec();
        let bad = SignedData::from_der(&flip_in(&msg, &sig, 1000)).unwrap();
        assert!(matches!(bad.verify(p.ca.public(), NOW, 300), Err(MessageError::BadSignature)));
    }

    #[test]
    fn signing_time_tamper_is_bad_signature() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        let gt = NOW.to_generalized_time().unwrap();
        // Last seconds digit, flipped to another digit.
        let bad = SignedData::from_der(&flip_in(&msg, gt.as_bytes(), 13)).unwrap();
        assert!(matches!(bad.verify(p.ca.public(), NOW, 300), Err(MessageError::BadSignature)));
    }

    #[test]
    fn certificate_tamper_is_cert_invalid() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Chameleon, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert.clone()], &p.dsa, NOW).unwrap();
        let bad = SignedData::from_der(&flip_in(&msg, cert.ca_signature().as_bytes(), 9)).unwrap();
        assert!(matches!(
            bad.verify(p.ca.public(), NOW, 300),
            Err(MessageError::CertInvalid(CertError::BadCaSignature))
        ));
    }

    #[test]
    fn unknown_message_type_rejected() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        let oid = oids::KEP_REQ.to_der_content();
        let pos = msg.to_der().windows(oid.len()).position(|w| w == oid.as_slice()).unwrap();
        let mut der = msg.to_der().to_vec();
        der[pos + oid.len() - 1] = 9;
        assert!(matches!(SignedData::from_der(&der), Err(MessageError::UnknownMessageType(_))));
    }

    #[test]
    fn message_id_is_hash_suffix() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        assert_eq!(msg.message_id().as_slice(), &shake256(msg.to_der(), 32)[24..]);
    }

    #[test]
    fn compared_mode_carries_two_certificates() {
        let mut p = party(SecurityLevel::L1);
        let certs = vec![p.cert(CertScheme::PureDsa, "Alice"), p.cert(CertScheme::PureKem, "Alice")];
        let msg = SignedData::build(ContentInfo::request(), certs, &p.dsa, NOW).unwrap();
        let (v, n) = count_verifications(|| msg.verify(p.ca.public(), NOW, 300));
        let v = v.unwrap();
        assert_eq!(n, 3);
        assert!(v.peer_keys.dsa_public.is_some() && v.peer_keys.kem_public.is_some());

        let composite = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![composite], &p.dsa, NOW).unwrap();
        let (v, n) = count_verifications(|| msg.verify(p.ca.public(), NOW, 300));
        v.unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn mixed_subjects_rejected() {
        let mut p = party(SecurityLevel::L1);
        let certs = vec![p.cert(CertScheme::PureDsa, "Alice"), p.cert(CertScheme::PureKem, "Mallory")];
        let msg = SignedData::build(ContentInfo::request(), certs, &p.dsa, NOW).unwrap();
        assert!(matches!(msg.verify(p.ca.public(), NOW, 300), Err(MessageError::CertInvalid(CertError::Conflict(_)))));
    }

    #[test]
    fn attached_ca_certificate_is_skipped() {
        let mut p = party(SecurityLevel::L1);
        let certs = vec![p.cert(CertScheme::Composite, "Alice"), p.ca.certificate().clone()];
        let msg = SignedData::build(ContentInfo::request(), certs, &p.dsa, NOW).unwrap();
        let (v, n) = count_verifications(|| msg.verify(p.ca.public(), NOW, 300));
        v.unwrap();
        assert_eq!(n, 2);
        let other = party(SecurityLevel::L1);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let stranger = CaContext::generate(other.ca.suite(), "Other CA", T0, T1, &mut rng).unwrap();
        let certs = vec![p.cert(CertScheme::Composite, "Alice"), stranger.certificate().clone()];
        let msg = SignedData::build(ContentInfo::request(), certs, &p.dsa, NOW).unwrap();
        assert!(matches!(msg.verify(p.ca.public(), NOW, 300), Err(MessageError::CertInvalid(CertError::Conflict(_)))));
    }

    #[test]
    fn response_minus_request_is_ciphertext_plus_constant() {
        let mut deltas = Vec::new();
        for level in SecurityLevel::ALL {
            let mut p = party(level);
            let cert = p.cert(CertScheme::Composite, "Alice");
            let req = SignedData::build(ContentInfo::request(), vec![cert.clone()], &p.dsa, NOW).unwrap();
            let ct = p.ciphertext();
            let resp = SignedData::build(ContentInfo::response([0; 8], ct), vec![cert], &p.dsa, NOW).unwrap();
            deltas.push(resp.encoded_length() - req.encoded_length() - level.kem().ciphertext_len());
        }
        assert!(deltas.iter().all(|&d| d == deltas[0] && d <= 32), "{deltas:?}");
    }

    #[test]
    fn trailing_and_truncated_input_rejected() {
        let mut p = party(SecurityLevel::L1);
        let cert = p.cert(CertScheme::Composite, "Alice");
        let msg = SignedData::build(ContentInfo::request(), vec![cert], &p.dsa, NOW).unwrap();
        let mut der = msg.to_der().to_vec();
        der.push(0);
        assert!(matches!(SignedData::from_der(&der), Err(MessageError::Malformed(DecodeError::TrailingBytes(1)))));
        assert!(matches!(SignedData::from_der(&msg.to_der()[..100]), Err(MessageError::Malformed(_))));
    }
}
