//! AEAD chat envelopes keyed by the handshake session key.

use pqkex::crypto::{aead_open, aead_seal, AEAD_NONCE_LEN};
use pqkex::handshake::SessionKey;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChatError {
    #[error("envelope shorter than its sequence number")]
    Truncated,
    #[error("sequence {got} not above last accepted {last}")]
    Replay { got: u64, last: u64 },
    #[error("message failed authentication")]
    Authentication,
    #[error("message is not UTF-8")]
    NotUtf8,
    #[error("sequence space exhausted")]
    Exhausted,
}

/// Sending direction; the byte leads every nonce so the two directions never
/// share one under the same key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    InitiatorToResponder = 0x01,
    ResponderToInitiator = 0x02,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::InitiatorToResponder => Direction::ResponderToInitiator,
            Direction::ResponderToInitiator => Direction::InitiatorToResponder,
        }
    }
}

pub fn nonce(direction: Direction, sequence: u64) -> [u8; AEAD_NONCE_LEN] {
    let mut n = [0u8; AEAD_NONCE_LEN];
    n[0] = direction as u8;
    n[4..].copy_from_slice(&sequence.to_be_bytes());
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatEnvelope {
    pub sequence: u64,
    pub ciphertext: Vec<u8>,
}

impl ChatEnvelope {
    /// `sequence (u64 BE) ∥ ciphertext`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.sequence.to_be_bytes().to_vec();
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<ChatEnvelope, ChatError> {
        if bytes.len() < 8 {
            return Err(ChatError::Truncated);
        }
        let (seq, ct) = bytes.split_at(8);
        Ok(ChatEnvelope { sequence: u64::from_be_bytes(seq.try_into().unwrap()), ciphertext: ct.to_vec() })
    }
}

pub struct ChatSender {
    key: [u8; 32],
    direction: Direction,
    next: u64,
}

impl ChatSender {
    pub fn new(key: &SessionKey, direction: Direction) -> ChatSender {
        ChatSender { key: *key.as_bytes(), direction, next: 0 }
    }

    pub fn seal(&mut self, text: &str) -> Result<ChatEnvelope, ChatError> {
        let sequence = self.next;
        self.next = self.next.checked_add(1).ok_or(ChatError::Exhausted)?;
        let ciphertext = aead_seal(&self.key, &nonce(self.direction, sequence), text.as_bytes());
        Ok(ChatEnvelope { sequence, ciphertext })
    }
}

pub struct ChatReceiver {
    key: [u8; 32],
    direction: Direction,
    last: Option<u64>,
}

impl ChatReceiver {
    /// `direction` is the peer's sending direction.
    pub fn new(key: &SessionKey, direction: Direction) -> ChatReceiver {
        ChatReceiver { key: *key.as_bytes(), direction, last: None }
    }

    pub fn open(&mut self, envelope: &ChatEnvelope) -> Result<String, ChatError> {
        if let Some(last) = self.last {
            if envelope.sequence <= last {
                return Err(ChatError::Replay { got: envelope.sequence, last });
            }
        }
        let plain = aead_open(&self.key, &nonce(self.direction, envelope.sequence), &envelope.ciphertext)
            .map_err(|_| ChatError::Authentication)?;
        self.last = Some(envelope.sequence);
        String::from_utf8(plain).map_err(|_| ChatError::NotUtf8)
    }
}

/// Both halves for one side of a session.
pub fn channel(key: &SessionKey, local: Direction) -> (ChatSender, ChatReceiver) {
    (ChatSender::new(key, local), ChatReceiver::new(key, local.reverse()))
}
