pub mod benchmark;
pub mod certificates;
pub mod codec;
pub mod crypto;
pub mod handshake;
pub mod kep_messages;
pub mod oids;
pub mod suite;

pub use codec::Timestamp;
pub use suite::{suite_for, DsaAlgorithm, DsaFamily, KemAlgorithm, SecurityLevel, Suite};
