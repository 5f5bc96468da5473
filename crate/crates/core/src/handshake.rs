//! Initiator and responder state machines for the three-message handshake.
//!
//! ```text
//! Alice (initiator)                         Bob (responder)
//!   R1 = kepReq { certs_A }, s1      ->
//!                                           verify R1, (c_B, r_B) = Encaps(V_A)
//!                                    <-     R2 = kepResp { h1, c_B, certs_B }, s2
//!   verify R2, check h1, r_B = Decaps(c_B)
//!   (c_A, r_A) = Encaps(V_B)
//!   R3 = kepAck { h2, c_A, certs_A }, s3 ->
//!                                           look up h2, verify s3, r_A = Decaps(c_A)
//!   k = r_A ^ r_B                           k = r_A ^ r_B
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use rand_core::CryptoRngCore;
use thiserror::Error;

use crate::certificates::{random_serial, CaContext, CertError, CertScheme, Certificate, ExtractedKeys};
use crate::codec::Timestamp;
use crate::crypto::{
    hashed_id8, shake256, CryptoError, DsaKeyPair, DsaPublicKey, KemKeyPair, SharedSecret, SHARED_SECRET_LEN,
};
use crate::kep_messages::{ContentInfo, MessageError, MessageId, MessageType, SignedData, DEFAULT_FRESHNESS_WINDOW};
use crate::suite::Suite;

pub const DEFAULT_TABLE_CAPACITY: usize = 65_536;
pub const DEFAULT_SESSION_EXPIRY: i64 = 600;

#[derive(Debug, Error)]
pub enum HandshakeError {
    #[error(transparent)]
    Message(#[from] MessageError),
    #[error("expected {expected}, received {found}")]
    UnexpectedMessage { expected: MessageType, found: MessageType },
    #[error("response does not answer our request")]
    MismatchedRequestId,
    #[error("no pending session for this response id")]
    UnknownResponseId,
    #[error("operation not allowed in state {0:?}")]
    InvalidState(InitiatorState),
    #[error("credential does not match suite: {0}")]
    SuiteMismatch(String),
    #[error("invalid credential: {0}")]
    InvalidCredential(String),
    #[error("peer presented no KEM public key")]
    MissingKemKey,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl HandshakeError {
    /// The certificate-level cause, if any.
    pub fn cert_error(&self) -> Option<&CertError> {
        match self {
            HandshakeError::Message(MessageError::CertInvalid(e)) => Some(e),
            _ => None,
        }
    }
}

impl From<CertError> for HandshakeError {
    fn from(e: CertError) -> Self {
        HandshakeError::Message(MessageError::CertInvalid(e))
    }
}

/// The 32-byte session key `k`.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey([u8; SHARED_SECRET_LEN]);

impl SessionKey {
    pub fn from_bytes(bytes: [u8; SHARED_SECRET_LEN]) -> SessionKey {
        SessionKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SHARED_SECRET_LEN] {
        &self.0
    }

    /// Hex of HashedId8(k); safe to print and compare out of band.
    pub fn fingerprint(&self) -> String {
        hex::encode(hashed_id8(&self.0))
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey({})", self.fingerprint())
    }
}

/// `k = r_A XOR r_B`.
pub fn derive_session_key(r_a: &SharedSecret, r_b: &SharedSecret) -> SessionKey {
    let mut k = [0u8; SHARED_SECRET_LEN];
    for (i, b) in k.iter_mut().enumerate() {
        *b = r_a.as_bytes()[i] ^ r_b.as_bytes()[i];
    }
    SessionKey(k)
}

/// Slice variant of [`derive_session_key`] for callers holding raw bytes.
pub fn derive_session_key_from_slices(r_a: &[u8], r_b: &[u8]) -> Result<SessionKey, CryptoError> {
    let a: [u8; SHARED_SECRET_LEN] = r_a.try_into().map_err(|_| CryptoError::Length {
        what: "r_A",
        expected: SHARED_SECRET_LEN,
        actual: r_a.len(),
    })?;
    let b: [u8; SHARED_SECRET_LEN] = r_b.try_into().map_err(|_| CryptoError::Length {
        what: "r_B",
        expected: SHARED_SECRET_LEN,
        actual: r_b.len(),
    })?;
    Ok(derive_session_key(&SharedSecret::from_bytes(a), &SharedSecret::from_bytes(b)))
}

/// Key derivation hook: `(r_A, r_B) -> k`. Only XOR ships.
pub type Kdf = fn(&SharedSecret, &SharedSecret) -> SessionKey;

#[derive(Clone, Debug)]
pub struct HandshakeConfig {
    /// Maximum |now - signingTime| in seconds.
    pub freshness_window: i64,
    /// Appended to every outgoing certificate list when set.
    pub attach_ca_certificate: Option<Certificate>,
    pub kdf: Kdf,
}

impl Default for HandshakeConfig {
    fn default() -> Self {
        HandshakeConfig {
            freshness_window: DEFAULT_FRESHNESS_WINDOW,
            attach_ca_certificate: None,
            kdf: derive_session_key,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CredentialMode {
    DualUsage(CertScheme),
    /// Compared method: a pure DSA certificate plus a pure KEM certificate.
    Pure,
}

impl CredentialMode {
    pub const ALL: [CredentialMode; 4] = [
        CredentialMode::DualUsage(CertScheme::Composite),
        CredentialMode::DualUsage(CertScheme::Catalyst),
        CredentialMode::DualUsage(CertScheme::Chameleon),
        CredentialMode::Pure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CredentialMode::DualUsage(s) => s.name(),
            CredentialMode::Pure => "compared",
        }
    }
}

impl fmt::Display for CredentialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CredentialMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CredentialMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method {s:?} (expected composite, catalyst, chameleon or compared)"))
    }
}

/// A party's keys and the certificate(s) binding them.
#[derive(Clone, Debug)]
pub struct Credential {
    mode: CredentialMode,
    dsa_keys: DsaKeyPair,
    kem_keys: KemKeyPair,
    certificates: Vec<Certificate>,
}

impl Credential {
    pub fn new(
        mode: CredentialMode,
        dsa_keys: DsaKeyPair,
        kem_keys: KemKeyPair,
        certificates: Vec<Certificate>,
    ) -> Result<Credential, HandshakeError> {
        let bad = |m: &str| Err(HandshakeError::InvalidCredential(m.to_owned()));
        match mode {
            CredentialMode::DualUsage(scheme) => {
                if !scheme.is_dual_usage() {
                    return bad("dual-usage mode needs a composite, catalyst or chameleon scheme");
                }
                match certificates.as_slice() {
                    [c] if c.scheme() == scheme => {}
                    _ => return bad("dual-usage mode needs exactly one certificate of the chosen scheme"),
                }
            }
            CredentialMode::Pure => match certificates.as_slice() {
                [d, k] if d.scheme() == CertScheme::PureDsa && k.scheme() == CertScheme::PureKem => {
                    if d.subject() != k.subject() {
                        return bad("pure certificates name different subjects");
                    }
                }
                _ => return bad("pure mode needs a pure DSA certificate followed by a pure KEM certificate"),
            },
        }
        if certificates.iter().filter_map(Certificate::dsa_public).any(|k| k != dsa_keys.public()) {
            return bad("certificate DSA key does not match the key pair");
        }
        if certificates.iter().filter_map(Certificate::kem_public).any(|k| k != kem_keys.public()) {
            return bad("certificate KEM key does not match the key pair");
        }
        Ok(Credential { mode, dsa_keys, kem_keys, certificates })
    }

    /// Generates fresh key pairs and has `ca` issue the certificate(s).
    pub fn issue(
        ca: &CaContext,
        mode: CredentialMode,
        subject: &str,
        not_before: Timestamp,
        not_after: Timestamp,
        rng: &mut impl CryptoRngCore,
    ) -> Result<Credential, HandshakeError> {
        let suite = ca.suite();
        let dsa = DsaKeyPair::generate(suite.dsa(), rng)?;
        let kem = KemKeyPair::generate(suite.kem(), rng)?;
        let mut issue = |scheme: CertScheme| {
            let t = ca.template(subject, random_serial(rng), not_before, not_after);
            let d = scheme.carries_dsa().then(|| dsa.public());
            let k = scheme.carries_kem().then(|| kem.public());
            ca.issue(&t, scheme, d, k)
        };
        let certificates = match mode {
            CredentialMode::DualUsage(scheme) => vec![issue(scheme)?],
            CredentialMode::Pure => vec![issue(CertScheme::PureDsa)?, issue(CertScheme::PureKem)?],
        };
        Credential::new(mode, dsa, kem, certificates)
    }

    pub fn mode(&self) -> CredentialMode {
        self.mode
    }

    pub fn dsa_keys(&self) -> &DsaKeyPair {
        &self.dsa_keys
    }

    pub fn kem_keys(&self) -> &KemKeyPair {
        &self.kem_keys
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certificates
    }

    pub fn subject(&self) -> &str {
        self.certificates[0].subject()
    }

    /// Certificates sent with a message. In pure mode the ack only carries the
    /// DSA certificate because the responder already holds the KEM key.
    pub fn certificates_for(&self, message: MessageType) -> &[Certificate] {
        match (self.mode, message) {
            (CredentialMode::Pure, MessageType::KepAck) => &self.certificates[..1],
            _ => &self.certificates,
        }
    }

    fn check_suite(&self, suite: Suite) -> Result<(), HandshakeError> {
        if self.dsa_keys.algorithm() != suite.dsa() || self.kem_keys.algorithm() != suite.kem() {
            return Err(HandshakeError::SuiteMismatch(format!(
                "credential holds {} + {}, suite is {}",
                self.dsa_keys.algorithm(),
                self.kem_keys.algorithm(),
                suite
            )));
        }
        Ok(())
    }

    fn outgoing(&self, message: MessageType, config: &HandshakeConfig) -> Vec<Certificate> {
        let mut certs = self.certificates_for(message).to_vec();
        certs.extend(config.attach_ca_certificate.iter().cloned());
        certs
    }
}

fn check_peer_suite(keys: &ExtractedKeys, suite: Suite) -> Result<(), HandshakeError> {
    let kem = keys.kem_public.as_ref().ok_or(HandshakeError::MissingKemKey)?;
    let dsa = keys.dsa_public.as_ref().ok_or(CertError::NoSigningKey)?;
    if dsa.algorithm() != suite.dsa() || kem.algorithm() != suite.kem() {
        return Err(HandshakeError::SuiteMismatch(format!(
            "peer holds {} + {}, suite is {}",
            dsa.algorithm(),
            kem.algorithm(),
            suite
        )));
    }
    Ok(())
}

fn expect_type(msg: &SignedData, expected: MessageType) -> Result<(), HandshakeError> {
    if msg.message_type() != expected {
        return Err(HandshakeError::UnexpectedMessage { expected, found: msg.message_type() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitiatorState {
    Started,
    Completed,
    Failed,
}

/// Alice's side. Single-owner; not shared across threads.
#[derive(Debug)]
pub struct InitiatorSession {
    credential: Arc<Credential>,
    suite: Suite,
    ca_public: DsaPublicKey,
    config: HandshakeConfig,
    sent_request: SignedData,
    state: InitiatorState,
    result: Option<SessionKey>,
}

impl InitiatorSession {
    /// Builds R1.
    pub fn start(
        credential: Arc<Credential>,
        suite: Suite,
        ca_public: DsaPublicKey,
        config: HandshakeConfig,
        now: Timestamp,
    ) -> Result<(InitiatorSession, SignedData), HandshakeError> {
        credential.check_suite(suite)?;
        let r1 = SignedData::build(
            ContentInfo::request(),
            credential.outgoing(MessageType::KepReq, &config),
            credential.dsa_keys(),
            now,
        )?;
        let session = InitiatorSession {
            credential,
            suite,
            ca_public,
            config,
            sent_request: r1.clone(),
            state: InitiatorState::Started,
            result: None,
        };
        Ok((session, r1))
    }

    pub fn state(&self) -> InitiatorState {
        self.state
    }

    pub fn session_key(&self) -> Option<&SessionKey> {
        self.result.as_ref()
    }

    pub fn sent_request(&self) -> &SignedData {
        &self.sent_request
    }

    pub fn request_id(&self) -> MessageId {
        self.sent_request.message_id()
    }

    /// Processes R2 and returns R3 plus the session key. Any failure moves the
    /// session to `Failed`.
    pub fn on_response(
        &mut self,
        r2: &[u8],
        now: Timestamp,
        rng: &mut impl CryptoRngCore,
    ) -> Result<(SignedData, SessionKey), HandshakeError> {
        if self.state != InitiatorState::Started {
            return Err(HandshakeError::InvalidState(self.state));
        }
        match self.process_response(r2, now, rng) {
            Ok((r3, key)) => {
                self.state = InitiatorState::Completed;
                self.result = Some(key.clone());
                Ok((r3, key))
            }
            Err(e) => {
                self.state = InitiatorState::Failed;
                Err(e)
            }
        }
    }

    fn process_response(
        &self,
        r2: &[u8],
        now: Timestamp,
        rng: &mut impl CryptoRngCore,
    ) -> Result<(SignedData, SessionKey), HandshakeError> {
        let r2 = SignedData::from_der(r2)?;
        expect_type(&r2, MessageType::KepResp)?;
        let verified = r2.verify(&self.ca_public, now, self.config.freshness_window)?;
        if verified.content.peer_message_id != Some(self.request_id()) {
            return Err(HandshakeError::MismatchedRequestId);
        }
        check_peer_suite(&verified.peer_keys, self.suite)?;
        let c_b = verified.content.payload.as_ref().expect("kepResp carries a payload");
        let r_b = self.credential.kem_keys().decapsulate(c_b)?;
        let v_b = verified.peer_keys.kem_public.as_ref().expect("checked by check_peer_suite");
        let (c_a, r_a) = v_b.encapsulate(rng)?;
        let r3 = SignedData::build(
            ContentInfo::ack(r2.message_id(), c_a),
            self.credential.outgoing(MessageType::KepAck, &self.config),
            self.credential.dsa_keys(),
            now,
        )?;
        Ok((r3, (self.config.kdf)(&r_a, &r_b)))
    }
}

/// Bob's per-handshake state between R2 and R3.
#[derive(Clone, Debug)]
pub struct ResponderSession {
    pub request_id: MessageId,
    pub response_id: MessageId,
    pub peer_keys: ExtractedKeys,
    /// SHAKE-256 of each certificate presented in R1.
    pub peer_certificates: Vec<[u8; 32]>,
    pub local_secret: SharedSecret,
    pub created_at: Timestamp,
}

struct TableInner {
    entries: HashMap<MessageId, (u64, ResponderSession)>,
    order: BTreeMap<u64, MessageId>,
    next_seq: u64,
}

/// Pending responder sessions keyed by response id (h2). Entries expire after
/// `expiry` seconds; inserting at capacity evicts the oldest entry.
pub struct SessionTable {
    inner: Mutex<TableInner>,
    capacity: usize,
    expiry: i64,
}

impl fmt::Debug for SessionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionTable")
            .field("len", &self.len())
            .field("capacity", &self.capacity)
            .field("expiry", &self.expiry)
            .finish()
    }
}

impl Default for SessionTable {
    fn default() -> Self {
        SessionTable::new(DEFAULT_TABLE_CAPACITY, DEFAULT_SESSION_EXPIRY)
    }
}

impl SessionTable {
    pub fn new(capacity: usize, expiry: i64) -> SessionTable {
        assert!(capacity > 0, "session table capacity must be positive");
        SessionTable {
            inner: Mutex::new(TableInner { entries: HashMap::new(), order: BTreeMap::new(), next_seq: 0 }),
            capacity,
            expiry,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn expiry(&self) -> i64 {
        self.expiry
    }

    pub fn len(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, TableInner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn expired(&self, s: &ResponderSession, now: Timestamp) -> bool {
        now.seconds() - s.created_at.seconds() > self.expiry
    }

    pub fn insert(&self, session: ResponderSession, now: Timestamp) {
        let mut t = self.lock();
        while let Some((&seq, &id)) = t.order.first_key_value() {
            let stale = t.entries.get(&id).is_some_and(|(_, s)| self.expired(s, now));
            if !stale && t.entries.len() < self.capacity {
                break;
            }
            t.order.remove(&seq);
            t.entries.remove(&id);
        }
        let seq = t.next_seq;
        t.next_seq += 1;
        if let Some((old, _)) = t.entries.insert(session.response_id, (seq, session.clone())) {
            t.order.remove(&old);
        }
        t.order.insert(seq, session.response_id);
    }

    /// Copy of a live entry.
    pub fn get(&self, id: &MessageId, now: Timestamp) -> Option<ResponderSession> {
        let t = self.lock();
        t.entries.get(id).filter(|(_, s)| !self.expired(s, now)).map(|(_, s)| s.clone())
    }

    /// Removes and returns an entry. Exactly one concurrent caller wins.
    pub fn take(&self, id: &MessageId) -> Option<ResponderSession> {
        let mut t = self.lock();
        let (seq, s) = t.entries.remove(id)?;
        t.order.remove(&seq);
        Some(s)
    }

    pub fn contains(&self, id: &MessageId) -> bool {
        self.lock().entries.contains_key(id)
    }
}

fn certificate_digests(certs: &[Certificate]) -> Vec<[u8; 32]> {
    certs.iter().map(|c| shake256(c.to_der(), 32).try_into().expect("32-byte digest")).collect()
}

/// Bob's side. Shareable across threads; per-handshake state lives in the
/// session table.
#[derive(Debug)]
pub struct Responder {
    credential: Arc<Credential>,
    suite: Suite,
    ca_public: DsaPublicKey,
    config: HandshakeConfig,
    table: Arc<SessionTable>,
}

impl Responder {
    pub fn new(
        credential: Arc<Credential>,
        suite: Suite,
        ca_public: DsaPublicKey,
        config: HandshakeConfig,
        table: Arc<SessionTable>,
    ) -> Result<Responder, HandshakeError> {
        credential.check_suite(suite)?;
        Ok(Responder { credential, suite, ca_public, config, table })
    }

    pub fn table(&self) -> &SessionTable {
        &self.table
    }

    pub fn credential(&self) -> &Credential {
        &self.credential
    }

    /// Processes R1 and returns R2. On error nothing is stored.
    pub fn on_request(
        &self,
        r1: &[u8],
        now: Timestamp,
        rng: &mut impl CryptoRngCore,
    ) -> Result<SignedData, HandshakeError> {
        let r1 = SignedData::from_der(r1)?;
        expect_type(&r1, MessageType::KepReq)?;
        let verified = r1.verify(&self.ca_public, now, self.config.freshness_window)?;
        check_peer_suite(&verified.peer_keys, self.suite)?;
        let v_a = verified.peer_keys.kem_public.as_ref().expect("checked by check_peer_suite");
        let (c_b, r_b) = v_a.encapsulate(rng)?;
        let request_id = r1.message_id();
        let r2 = SignedData::build(
            ContentInfo::response(request_id, c_b),
            self.credential.outgoing(MessageType::KepResp, &self.config),
            self.credential.dsa_keys(),
            now,
        )?;
        self.table.insert(
            ResponderSession {
                request_id,
                response_id: r2.message_id(),
                peer_keys: verified.peer_keys,
                peer_certificates: certificate_digests(r1.certificates()),
                local_secret: r_b,
                created_at: now,
            },
            now,
        );
        Ok(r2)
    }

    /// Processes R3 and returns the session key. The table entry is consumed
    /// only on success.
    pub fn on_ack(&self, r3: &[u8], now: Timestamp) -> Result<SessionKey, HandshakeError> {
        let r3 = SignedData::from_der(r3)?;
        expect_type(&r3, MessageType::KepAck)?;
        let h2 = r3.content().peer_message_id.expect("kepAck carries a peer id");
        let session = self.table.get(&h2, now).ok_or(HandshakeError::UnknownResponseId)?;
        let verified = r3.verify_with_keys(session.peer_keys.clone(), now, self.config.freshness_window)?;
        // The signature was checked against the keys stored from R1, so the
        // certificates in R3 must be ones Alice already presented.
        for digest in certificate_digests(r3.certificates()) {
            if !session.peer_certificates.contains(&digest) {
                return Err(CertError::Substituted.into());
            }
        }
        let c_a = verified.content.payload.as_ref().expect("kepAck carries a payload");
        let r_a = self.credential.kem_keys().decapsulate(c_a)?;
        self.table.take(&h2).ok_or(HandshakeError::UnknownResponseId)?;
        Ok((self.config.kdf)(&r_a, &session.local_secret))
    }
}
