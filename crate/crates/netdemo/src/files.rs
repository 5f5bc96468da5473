//! On-disk credentials: `<prefix>.dsa.key`, `<prefix>.kem.key`, PEM
//! certificate bundles, and CA directories (`<prefix>.key` + `<prefix>.crt`).

use std::fs;
use std::path::{Path, PathBuf};

use pqkex::certificates::{CaContext, CertError, Certificate};
use pqkex::crypto::{CryptoError, DsaKeyPair, KemKeyPair};
use pqkex::handshake::{Credential, CredentialMode, HandshakeError};
use pqkex::Timestamp;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Key { path: PathBuf, source: CryptoError },
    #[error("{path}: {source}")]
    Cert { path: PathBuf, source: CertError },
    #[error("credential: {0}")]
    Credential(#[from] HandshakeError),
    #[error("CA: {0}")]
    Ca(CertError),
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn dsa_key_path(prefix: &Path) -> PathBuf {
    with_ext(prefix, ".dsa.key")
}

pub fn kem_key_path(prefix: &Path) -> PathBuf {
    with_ext(prefix, ".kem.key")
}

pub fn ca_key_path(prefix: &Path) -> PathBuf {
    with_ext(prefix, ".key")
}

pub fn ca_cert_path(prefix: &Path) -> PathBuf {
    with_ext(prefix, ".crt")
}

pub fn read(path: &Path) -> Result<Vec<u8>, FileError> {
    fs::read(path).map_err(|source| FileError::Io { path: path.to_owned(), source })
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    fs::write(path, bytes).map_err(|source| FileError::Io { path: path.to_owned(), source })
}

pub fn write_key_pair(prefix: &Path, dsa: &DsaKeyPair, kem: &KemKeyPair) -> Result<[PathBuf; 2], FileError> {
    let paths = [dsa_key_path(prefix), kem_key_path(prefix)];
    write(&paths[0], &dsa.to_file_bytes())?;
    write(&paths[1], &kem.to_file_bytes())?;
    Ok(paths)
}

pub fn read_dsa_key(path: &Path) -> Result<DsaKeyPair, FileError> {
    DsaKeyPair::from_file_bytes(&read(path)?).map_err(|source| FileError::Key { path: path.to_owned(), source })
}

pub fn read_key_pair(prefix: &Path) -> Result<(DsaKeyPair, KemKeyPair), FileError> {
    let dsa = read_dsa_key(&dsa_key_path(prefix))?;
    let kem_path = kem_key_path(prefix);
    let kem =
        KemKeyPair::from_file_bytes(&read(&kem_path)?).map_err(|source| FileError::Key { path: kem_path, source })?;
    Ok((dsa, kem))
}

/// One or more certificates: a PEM bundle or a single DER certificate.
pub fn read_certificates(path: &Path) -> Result<Vec<Certificate>, FileError> {
    let bytes = read(path)?;
    let cert_err = |source| FileError::Cert { path: path.to_owned(), source };
    match std::str::from_utf8(&bytes) {
        Ok(text) if text.contains("-----BEGIN") => Certificate::from_pem_bundle(text).map_err(cert_err),
        _ => Certificate::from_der(&bytes).map(|c| vec![c]).map_err(cert_err),
    }
}

pub fn write_certificates(path: &Path, certs: &[Certificate]) -> Result<(), FileError> {
    let text: String = certs.iter().map(Certificate::to_pem).collect();
    write(path, text.as_bytes())
}

/// Reads the CA certificate alone; accepts a prefix or the `.crt` path itself.
pub fn read_ca_certificate(path: &Path) -> Result<Certificate, FileError> {
    let path = if path.exists() { path.to_owned() } else { ca_cert_path(path) };
    let mut certs = read_certificates(&path)?;
    Ok(certs.remove(0))
}

pub fn read_ca(prefix: &Path) -> Result<CaContext, FileError> {
    let keys = read_dsa_key(&ca_key_path(prefix))?;
    let cert = read_ca_certificate(&ca_cert_path(prefix))?;
    CaContext::from_parts(keys, cert).map_err(FileError::Ca)
}

pub fn write_ca(prefix: &Path, ca: &CaContext) -> Result<[PathBuf; 2], FileError> {
    let paths = [ca_key_path(prefix), ca_cert_path(prefix)];
    write(&paths[0], &ca.keys().to_file_bytes())?;
    write_certificates(&paths[1], std::slice::from_ref(ca.certificate()))?;
    Ok(paths)
}

/// Loads keys and certificates and checks them against the CA at `now`.
pub fn load_credential(
    mode: CredentialMode,
    keys: &Path,
    certs: &Path,
    ca: &Certificate,
    now: Timestamp,
) -> Result<Credential, FileError> {
    let (dsa, kem) = read_key_pair(keys)?;
    let certificates = read_certificates(certs)?;
    let ca_public = ca.dsa_public().ok_or(FileError::Ca(CertError::NoSigningKey))?;
    for c in &certificates {
        c.validate(ca_public, now).map_err(|source| FileError::Cert { path: certs.to_owned(), source })?;
    }
    Ok(Credential::new(mode, dsa, kem, certificates)?)
}
