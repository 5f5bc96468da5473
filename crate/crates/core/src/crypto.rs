//! Signature, KEM, hash and AEAD primitives behind a narrow provider seam.
//!
//! All post-quantum operations go through the [`PqcBackend`] trait. The bundled
//! backend wraps the pure-Rust FIPS 203/204/205 implementations; a certified
//! implementation can be installed once at start-up with [`install_backend`].

use std::cell::Cell;
use std::fmt;
use std::sync::OnceLock;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce};
use rand_core::CryptoRngCore;
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;
use thiserror::Error;

use crate::suite::{DsaAlgorithm, KemAlgorithm};

pub const SHARED_SECRET_LEN: usize = 32;
pub const AEAD_KEY_LEN: usize = 32;
pub const AEAD_NONCE_LEN: usize = 12;
pub const AEAD_TAG_LEN: usize = 16;
/// Length of a key-file algorithm tag.
pub const FILE_TAG_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("random number generator failure: {0}")]
    Rng(&'static str),
    #[error("{what} has length {actual}, expected {expected}")]
    Length { what: &'static str, expected: usize, actual: usize },
    #[error("algorithm mismatch: {0}")]
    AlgorithmMismatch(String),
    #[error("malformed key: {0}")]
    MalformedKey(&'static str),
    #[error("signature rejected")]
    BadSignature,
    #[error("AEAD authentication failed")]
    AeadFailure,
    #[error("unknown key file tag {0:?}")]
    UnknownFileTag(String),
    #[error("backend error: {0}")]
    Backend(&'static str),
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), CryptoError> {
    if expected == actual {
        Ok(())
    } else {
        Err(CryptoError::Length { what, expected, actual })
    }
}

/// The provider seam. Byte strings are the standardized encodings.
pub trait PqcBackend: Send + Sync {
    /// Returns `(private, public)`.
    fn dsa_keygen(&self, alg: DsaAlgorithm, rng: &mut dyn CryptoRngCore) -> Result<(Vec<u8>, Vec<u8>), CryptoError>;
    /// Deterministic signature with an empty context string.
    fn dsa_sign(&self, alg: DsaAlgorithm, private: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError>;
    fn dsa_verify(&self, alg: DsaAlgorithm, public: &[u8], message: &[u8], signature: &[u8]) -> bool;
    /// Returns `(decapsulation key, encapsulation key)`.
    fn kem_keygen(&self, alg: KemAlgorithm, rng: &mut dyn CryptoRngCore) -> Result<(Vec<u8>, Vec<u8>), CryptoError>;
    /// Returns `(ciphertext, shared secret)`.
    fn kem_encapsulate(
        &self,
        alg: KemAlgorithm,
        public: &[u8],
        rng: &mut dyn CryptoRngCore,
    ) -> Result<(Vec<u8>, [u8; SHARED_SECRET_LEN]), CryptoError>;
    fn kem_decapsulate(
        &self,
        alg: KemAlgorithm,
        private: &[u8],
        ciphertext: &[u8],
    ) -> Result<[u8; SHARED_SECRET_LEN], CryptoError>;
}

static BACKEND: OnceLock<Box<dyn PqcBackend>> = OnceLock::new();

/// Installs a replacement backend. Fails if a backend is already in use.
pub fn install_backend(backend: Box<dyn PqcBackend>) -> Result<(), Box<dyn PqcBackend>> {
    BACKEND.set(backend)
}

pub fn backend() -> &'static dyn PqcBackend {
    BACKEND.get_or_init(|| Box::new(BundledBackend)).as_ref()
}

thread_local! {
    static VERIFICATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of signature verifications performed on this thread so far.
pub fn verification_count() -> u64 {
    VERIFICATIONS.with(Cell::get)
}

/// Runs `f` and returns its result with the number of signature
/// verifications it performed on the current thread.
pub fn count_verifications<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = verification_count();
    let out = f();
    (out, verification_count() - before)
}

/// Never consulted by unhedged SLH-DSA signing, which is deterministic.
struct ZeroRng;

impl rand_core::RngCore for ZeroRng {
    fn next_u32(&mut self) -> u32 {
        0
    }
    fn next_u64(&mut self) -> u64 {
        0
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        dest.fill(0);
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        dest.fill(0);
        Ok(())
    }
}

impl rand_core::CryptoRng for ZeroRng {}

/// Pure-Rust FIPS 203/204/205 implementations. SLH-DSA uses the SHA2
/// instantiations.
pub struct BundledBackend;

macro_rules! ml_dsa {
    ($m:ident, $op:ident, $($args:expr),*) => {
        ml_dsa!(@$op fips204::$m, $($args),*)
    };
    (@keygen $m:path, $rng:expr) => {{
        use $m as p;
        use fips204::traits::SerDes;
        let (pk, sk) = p::try_keygen_with_rng($rng).map_err(CryptoError::Rng)?;
        Ok((sk.into_bytes().to_vec(), pk.into_bytes().to_vec()))
    }};
    (@sign $m:path, $sk:expr, $msg:expr) => {{
        use $m as p;
        use fips204::traits::{SerDes, Signer};
        let arr: [u8; p::SK_LEN] = $sk.try_into().map_err(|_| CryptoError::MalformedKey("ML-DSA private key length"))?;
        let sk = p::PrivateKey::try_from_bytes(arr).map_err(CryptoError::MalformedKey)?;
        sk.try_sign_with_seed(&[0u8; 32], $msg, b"").map(|s| s.to_vec()).map_err(CryptoError::Backend)
    }};
    (@verify $m:path, $pk:expr, $msg:expr, $sig:expr) => {{
        use $m as p;
        use fips204::traits::{SerDes, Verifier};
        let (Ok(pk_arr), Ok(sig)) = (<[u8; p::PK_LEN]>::try_from($pk), <[u8; p::SIG_LEN]>::try_from($sig)) else {
            return false;
        };
        match p::PublicKey::try_from_bytes(pk_arr) {
            Ok(pk) => pk.verify($msg, &sig, b""),
            Err(_) => false,
        }
    }};
}

macro_rules! slh_dsa {
    ($m:ident, $op:ident, $($args:expr),*) => {
        slh_dsa!(@$op fips205::$m, $($args),*)
    };
    (@keygen $m:path, $rng:expr) => {{
        use $m as p;
        use fips205::traits::SerDes;
        let (pk, sk) = p::try_keygen_with_rng($rng).map_err(CryptoError::Rng)?;
        Ok((sk.into_bytes().to_vec(), pk.into_bytes().to_vec()))
    }};
    (@sign $m:path, $sk:expr, $msg:expr) => {{
        use $m as p;
        use fips205::traits::{SerDes, Signer};
        let arr: [u8; p::SK_LEN] = $sk.try_into().map_err(|_| CryptoError::MalformedKey("SLH-DSA private key length"))?;
        let sk = p::PrivateKey::try_from_bytes(&arr).map_err(CryptoError::MalformedKey)?;
        sk.try_sign_with_rng(&mut ZeroRng, $msg, b"", false).map(|s| s.to_vec()).map_err(CryptoError::Backend)
    }};
    (@verify $m:path, $pk:expr, $msg:expr, $sig:expr) => {{
        use $m as p;
        use fips205::traits::{SerDes, Verifier};
        let (Ok(pk_arr), Ok(sig)) = (<[u8; p::PK_LEN]>::try_from($pk), <[u8; p::SIG_LEN]>::try_from($sig)) else {
            return false;
        };
        match p::PublicKey::try_from_bytes(&pk_arr) {
            Ok(pk) => pk.verify($msg, &sig, b""),
            Err(_) => false,
        }
    }};
}

macro_rules! dispatch_dsa {
    ($alg:expr, $op:ident, $($args:expr),*) => {
        match $alg {
            DsaAlgorithm::MlDsa44 => ml_dsa!(ml_dsa_44, $op, $($args),*),
            DsaAlgorithm::MlDsa65 => ml_dsa!(ml_dsa_65, $op, $($args),*),
            DsaAlgorithm::MlDsa87 => ml_dsa!(ml_dsa_87, $op, $($args),*),
            DsaAlgorithm::SlhDsa128s => slh_dsa!(slh_dsa_sha2_128s, $op, $($args),*),
            DsaAlgorithm::SlhDsa192s => slh_dsa!(slh_dsa_sha2_192s, $op, $($args),*),
            DsaAlgorithm::SlhDsa256s => slh_dsa!(slh_dsa_sha2_256s, $op, $($args),*),
            DsaAlgorithm::SlhDsa128f => slh_dsa!(slh_dsa_sha2_128f, $op, $($args),*),
            DsaAlgorithm::SlhDsa192f => slh_dsa!(slh_dsa_sha2_192f, $op, $($args),*),
            DsaAlgorithm::SlhDsa256f => slh_dsa!(slh_dsa_sha2_256f, $op, $($args),*),
        }
    };
}

macro_rules! ml_kem {
    ($m:ident, keygen, $rng:expr) => {{
        use fips203::traits::{KeyGen, SerDes};
        use fips203::$m as p;
        let (ek, dk) = p::KG::try_keygen_with_rng($rng).map_err(CryptoError::Rng)?;
        Ok((dk.into_bytes().to_vec(), ek.into_bytes().to_vec()))
    }};
    ($m:ident, encaps, $pk:expr, $rng:expr) => {{
        use fips203::traits::{Encaps, SerDes};
        use fips203::$m as p;
        let arr: [u8; p::EK_LEN] =
            $pk.try_into().map_err(|_| CryptoError::MalformedKey("ML-KEM encapsulation key length"))?;
        let ek = p::EncapsKey::try_from_bytes(arr).map_err(CryptoError::MalformedKey)?;
        let (ss, ct) = ek.try_encaps_with_rng($rng).map_err(CryptoError::Rng)?;
        Ok((ct.into_bytes().to_vec(), ss.into_bytes()))
    }};
    ($m:ident, decaps, $sk:expr, $ct:expr) => {{
        use fips203::traits::{Decaps, SerDes};
        use fips203::$m as p;
        let arr: [u8; p::DK_LEN] =
            $sk.try_into().map_err(|_| CryptoError::MalformedKey("ML-KEM decapsulation key length"))?;
        let dk = p::DecapsKey::try_from_bytes(arr).map_err(CryptoError::MalformedKey)?;
        let ct_arr: [u8; p::CT_LEN] = $ct.try_into().map_err(|_| CryptoError::Length {
            what: "ML-KEM ciphertext",
            expected: p::CT_LEN,
            actual: $ct.len(),
        })?;
        let ct = p::CipherText::try_from_bytes(ct_arr).map_err(CryptoError::Backend)?;
        let ss = dk.try_decaps(&ct).map_err(CryptoError::Backend)?;
        Ok(ss.into_bytes())
    }};
}

macro_rules! dispatch_kem {
    ($alg:expr, $op:ident, $($args:expr),*) => {
        match $alg {
            KemAlgorithm::MlKem512 => ml_kem!(ml_kem_512, $op, $($args),*),
            KemAlgorithm::MlKem768 => ml_kem!(ml_kem_768, $op, $($args),*),
            KemAlgorithm::MlKem1024 => ml_kem!(ml_kem_1024, $op, $($args),*),
        }
    };
}

impl PqcBackend for BundledBackend {
    fn dsa_keygen(&self, alg: DsaAlgorithm, rng: &mut dyn CryptoRngCore) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        let mut rng = rng;
        dispatch_dsa!(alg, keygen, &mut rng)
    }

    fn dsa_sign(&self, alg: DsaAlgorithm, private: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError> {
        dispatch_dsa!(alg, sign, private, message)
    }

    fn dsa_verify(&self, alg: DsaAlgorithm, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        dispatch_dsa!(alg, verify, public, message, signature)
    }

    fn kem_keygen(&self, alg: KemAlgorithm, rng: &mut dyn CryptoRngCore) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        let mut rng = rng;
        dispatch_kem!(alg, keygen, &mut rng)
    }

    fn kem_encapsulate(
        &self,
        alg: KemAlgorithm,
        public: &[u8],
        rng: &mut dyn CryptoRngCore,
    ) -> Result<(Vec<u8>, [u8; SHARED_SECRET_LEN]), CryptoError> {
        let mut rng = rng;
        dispatch_kem!(alg, encaps, public, &mut rng)
    }

    fn kem_decapsulate(
        &self,
        alg: KemAlgorithm,
        private: &[u8],
        ciphertext: &[u8],
    ) -> Result<[u8; SHARED_SECRET_LEN], CryptoError> {
        dispatch_kem!(alg, decaps, private, ciphertext)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DsaPublicKey {
    algorithm: DsaAlgorithm,
    bytes: Vec<u8>,
}

impl DsaPublicKey {
    pub fn new(algorithm: DsaAlgorithm, bytes: Vec<u8>) -> Result<DsaPublicKey, CryptoError> {
        check_len("DSA public key", algorithm.public_key_len(), bytes.len())?;
        Ok(DsaPublicKey { algorithm, bytes })
    }

    pub fn algorithm(&self) -> DsaAlgorithm {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for DsaPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DsaPublicKey({}, {})", self.algorithm, hex::encode(hashed_id8(&self.bytes)))
    }
}

#[derive(Clone)]
pub struct DsaKeyPair {
    public: DsaPublicKey,
    private: Vec<u8>,
}

impl DsaKeyPair {
    pub fn generate(algorithm: DsaAlgorithm, rng: &mut impl CryptoRngCore) -> Result<DsaKeyPair, CryptoError> {
        let (private, public) = backend().dsa_keygen(algorithm, rng)?;
        DsaKeyPair::from_parts(algorithm, private, public)
    }

    pub fn from_parts(algorithm: DsaAlgorithm, private: Vec<u8>, public: Vec<u8>) -> Result<DsaKeyPair, CryptoError> {
        check_len("DSA private key", algorithm.private_key_len(), private.len())?;
        Ok(DsaKeyPair { public: DsaPublicKey::new(algorithm, public)?, private })
    }

    pub fn algorithm(&self) -> DsaAlgorithm {
        self.public.algorithm
    }

    pub fn public(&self) -> &DsaPublicKey {
        &self.public
    }

    pub fn private_bytes(&self) -> &[u8] {
        &self.private
    }

    pub fn sign(&self, message: &[u8]) -> Result<Signature, CryptoError> {
        let bytes = backend().dsa_sign(self.algorithm(), &self.private, message)?;
        Signature::new(self.algorithm(), bytes)
    }

    /// `tag ∥ private ∥ public`.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = self.algorithm().file_tag().to_vec();
        out.extend_from_slice(&self.private);
        out.extend_from_slice(&self.public.bytes);
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<DsaKeyPair, CryptoError> {
        let (tag, body) = split_tag(bytes)?;
        let alg = DsaAlgorithm::ALL
            .into_iter()
            .find(|a| a.file_tag() == tag)
            .ok_or_else(|| CryptoError::UnknownFileTag(String::from_utf8_lossy(&tag).into_owned()))?;
        let sk_len = alg.private_key_len();
        check_len("DSA key file body", sk_len + alg.public_key_len(), body.len())?;
        DsaKeyPair::from_parts(alg, body[..sk_len].to_vec(), body[sk_len..].to_vec())
    }
}

impl fmt::Debug for DsaKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DsaKeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

fn split_tag(bytes: &[u8]) -> Result<([u8; FILE_TAG_LEN], &[u8]), CryptoError> {
    if bytes.len() < FILE_TAG_LEN {
        return Err(CryptoError::Length { what: "key file", expected: FILE_TAG_LEN, actual: bytes.len() });
    }
    let (tag, body) = bytes.split_at(FILE_TAG_LEN);
    Ok((tag.try_into().expect("split at tag length"), body))
}

#[derive(Clone, PartialEq, Eq)]
pub struct Signature {
    algorithm: DsaAlgorithm,
    bytes: Vec<u8>,
}

impl Signature {
    pub fn new(algorithm: DsaAlgorithm, bytes: Vec<u8>) -> Result<Signature, CryptoError> {
        check_len("signature", algorithm.signature_len(), bytes.len())?;
        Ok(Signature { algorithm, bytes })
    }

    pub fn algorithm(&self) -> DsaAlgorithm {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}, {} bytes)", self.algorithm, self.bytes.len())
    }
}

/// Verifies `signature` over `message`. Counts toward [`verification_count`]
/// only when the backend is actually invoked.
pub fn dsa_verify(public: &DsaPublicKey, message: &[u8], signature: &Signature) -> Result<(), CryptoError> {
    if signature.algorithm != public.algorithm {
        return Err(CryptoError::AlgorithmMismatch(format!(
            "{} signature for a {} key",
            signature.algorithm, public.algorithm
        )));
    }
    VERIFICATIONS.with(|c| c.set(c.get() + 1));
    if backend().dsa_verify(public.algorithm, &public.bytes, message, &signature.bytes) {
        Ok(())
    } else {
        Err(CryptoError::BadSignature)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KemPublicKey {
    algorithm: KemAlgorithm,
    bytes: Vec<u8>,
}

impl KemPublicKey {
    pub fn new(algorithm: KemAlgorithm, bytes: Vec<u8>) -> Result<KemPublicKey, CryptoError> {
        check_len("KEM public key", algorithm.public_key_len(), bytes.len())?;
        Ok(KemPublicKey { algorithm, bytes })
    }

    pub fn algorithm(&self) -> KemAlgorithm {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Encapsulates a fresh shared secret against this key.
    pub fn encapsulate(&self, rng: &mut impl CryptoRngCore) -> Result<(KemCiphertext, SharedSecret), CryptoError> {
        let (ct, ss) = backend().kem_encapsulate(self.algorithm, &self.bytes, rng)?;
        Ok((KemCiphertext::new(self.algorithm, ct)?, SharedSecret(ss)))
    }
}

impl fmt::Debug for KemPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KemPublicKey({}, {})", self.algorithm, hex::encode(hashed_id8(&self.bytes)))
    }
}

#[derive(Clone)]
pub struct KemKeyPair {
    public: KemPublicKey,
    private: Vec<u8>,
}

impl KemKeyPair {
    pub fn generate(algorithm: KemAlgorithm, rng: &mut impl CryptoRngCore) -> Result<KemKeyPair, CryptoError> {
        let (private, public) = backend().kem_keygen(algorithm, rng)?;
        KemKeyPair::from_parts(algorithm, private, public)
    }

    pub fn from_parts(algorithm: KemAlgorithm, private: Vec<u8>, public: Vec<u8>) -> Result<KemKeyPair, CryptoError> {
        check_len("KEM private key", algorithm.private_key_len(), private.len())?;
        Ok(KemKeyPair { public: KemPublicKey::new(algorithm, public)?, private })
    }

    pub fn algorithm(&self) -> KemAlgorithm {
        self.public.algorithm
    }

    pub fn public(&self) -> &KemPublicKey {
        &self.public
    }

    pub fn private_bytes(&self) -> &[u8] {
        &self.private
    }

    /// ML-KEM implicit rejection: a well-formed but wrong ciphertext yields an
    /// unrelated secret rather than an error.
    pub fn decapsulate(&self, ciphertext: &KemCiphertext) -> Result<SharedSecret, CryptoError> {
        if ciphertext.algorithm != self.algorithm() {
            return Err(CryptoError::AlgorithmMismatch(format!(
                "{} ciphertext for a {} key",
                ciphertext.algorithm,
                self.algorithm()
            )));
        }
        backend().kem_decapsulate(self.algorithm(), &self.private, &ciphertext.bytes).map(SharedSecret)
    }

    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = self.algorithm().file_tag().to_vec();
        out.extend_from_slice(&self.private);
        out.extend_from_slice(&self.public.bytes);
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<KemKeyPair, CryptoError> {
        let (tag, body) = split_tag(bytes)?;
        let alg = KemAlgorithm::ALL
            .into_iter()
            .find(|a| a.file_tag() == tag)
            .ok_or_else(|| CryptoError::UnknownFileTag(String::from_utf8_lossy(&tag).into_owned()))?;
        let sk_len = alg.private_key_len();
        check_len("KEM key file body", sk_len + alg.public_key_len(), body.len())?;
        KemKeyPair::from_parts(alg, body[..sk_len].to_vec(), body[sk_len..].to_vec())
    }
}

impl fmt::Debug for KemKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KemKeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct KemCiphertext {
    algorithm: KemAlgorithm,
    bytes: Vec<u8>,
}

impl KemCiphertext {
    pub fn new(algorithm: KemAlgorithm, bytes: Vec<u8>) -> Result<KemCiphertext, CryptoError> {
        check_len("KEM ciphertext", algorithm.ciphertext_len(), bytes.len())?;
        Ok(KemCiphertext { algorithm, bytes })
    }

    pub fn algorithm(&self) -> KemAlgorithm {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Debug for KemCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KemCiphertext({}, {} bytes)", self.algorithm, self.bytes.len())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret([u8; SHARED_SECRET_LEN]);

impl SharedSecret {
    pub fn from_bytes(bytes: [u8; SHARED_SECRET_LEN]) -> SharedSecret {
        SharedSecret(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SHARED_SECRET_LEN] {
        &self.0
    }
}

impl fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

pub fn shake256(data: &[u8], out_len: usize) -> Vec<u8> {
    let mut hasher = Shake256::default();
    hasher.update(data);
    let mut out = vec![0u8; out_len];
    hasher.finalize_xof().read(&mut out);
    out
}

/// Last eight bytes of the 32-byte SHAKE-256 output.
pub fn hashed_id8(data: &[u8]) -> [u8; 8] {
    let digest = shake256(data, 32);
    digest[24..].try_into().expect("32-byte digest")
}

/// AES-256-GCM encryption; output is `ciphertext ∥ 16-byte tag`.
pub fn aead_seal(key: &[u8; AEAD_KEY_LEN], nonce: &[u8; AEAD_NONCE_LEN], plaintext: &[u8]) -> Vec<u8> {
    let cipher = Aes256Gcm::new_from_slice(key).expect("32-byte key");
    cipher.encrypt(&Nonce::from(*nonce), plaintext).expect("AES-GCM encryption of in-memory buffer")
}

pub fn aead_open(
    key: &[u8; AEAD_KEY_LEN],
    nonce: &[u8; AEAD_NONCE_LEN],
    ciphertext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    let cipher = Aes256Gcm::new_from_slice(key).expect("32-byte key");
    cipher.decrypt(&Nonce::from(*nonce), ciphertext).map_err(|_| CryptoError::AeadFailure)
}
