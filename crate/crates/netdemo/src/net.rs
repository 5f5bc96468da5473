//! TCP transport: three handshake frames, then AEAD chat frames.

use std::fs::{File, OpenOptions};
use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use pqkex::crypto::DsaPublicKey;
use pqkex::handshake::{
    Credential, HandshakeConfig, HandshakeError, InitiatorSession, Responder, SessionKey, SessionTable,
};
use pqkex::kep_messages::SignedData;
use pqkex::{Suite, Timestamp};
use rand_core::OsRng;
use thiserror::Error;

use crate::chat::{channel, ChatEnvelope, ChatError, ChatReceiver, ChatSender, Direction};
use crate::frame::{read_frame, write_frame, Frame, FrameError, FrameKind};

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum NetError {
    #[error("frame: {0}")]
    Frame(#[from] FrameError),
    #[error("handshake: {0}")]
    Handshake(#[from] HandshakeError),
    #[error("chat: {0}")]
    Chat(#[from] ChatError),
    #[error("expected a {expected:?} frame, got {got:?}")]
    UnexpectedFrame { expected: FrameKind, got: FrameKind },
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("connection closed by peer during the handshake")]
    ClosedDuringHandshake,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl NetError {
    fn from_read(e: FrameError) -> NetError {
        match e {
            FrameError::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                NetError::Timeout
            }
            other => NetError::Frame(other),
        }
    }
}

/// Appends every frame seen on a connection, in order, as raw wire bytes.
#[derive(Clone, Debug)]
pub struct Transcript(Arc<Mutex<File>>);

impl Transcript {
    pub fn create(path: &Path) -> io::Result<Transcript> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Transcript(Arc::new(Mutex::new(file))))
    }

    fn record(&self, bytes: &[u8]) {
        use std::io::Write;
        let mut f = self.0.lock().unwrap_or_else(|p| p.into_inner());
        let _ = f.write_all(bytes);
    }
}

#[derive(Clone, Debug)]
pub struct PeerConfig {
    pub suite: Suite,
    pub credential: Arc<Credential>,
    pub ca_public: DsaPublicKey,
    pub handshake: HandshakeConfig,
    pub handshake_timeout: Duration,
    pub transcript: Option<Transcript>,
}

impl PeerConfig {
    pub fn new(suite: Suite, credential: Arc<Credential>, ca_public: DsaPublicKey) -> PeerConfig {
        PeerConfig {
            suite,
            credential,
            ca_public,
            handshake: HandshakeConfig::default(),
            handshake_timeout: DEFAULT_HANDSHAKE_TIMEOUT,
            transcript: None,
        }
    }
}

struct Wire {
    stream: TcpStream,
    transcript: Option<Transcript>,
}

impl Wire {
    fn send(&mut self, kind: FrameKind, body: Vec<u8>) -> Result<(), NetError> {
        let bytes = write_frame(&mut self.stream, &Frame::new(kind, body))?;
        if let Some(t) = &self.transcript {
            t.record(&bytes);
        }
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, FrameError> {
        let frame = read_frame(&mut self.stream)?;
        if let Some(t) = &self.transcript {
            t.record(&frame.encode()?);
        }
        Ok(frame)
    }

    fn recv_handshake(&mut self) -> Result<Vec<u8>, NetError> {
        match self.recv() {
            Ok(Frame { kind: FrameKind::Handshake, body }) => Ok(body),
            Ok(f) => Err(NetError::UnexpectedFrame { expected: FrameKind::Handshake, got: f.kind }),
            Err(FrameError::Closed) => Err(NetError::ClosedDuringHandshake),
            Err(e) => Err(NetError::from_read(e)),
        }
    }
}

/// An established session.
pub struct Session {
    key: SessionKey,
    peer_subject: String,
    writer: SessionWriter,
    reader: SessionReader,
}

pub struct SessionWriter {
    wire: Wire,
    sender: ChatSender,
}

pub struct SessionReader {
    wire: Wire,
    receiver: ChatReceiver,
}

impl Session {
    fn new(wire: Wire, key: SessionKey, local: Direction, peer_subject: String) -> Result<Session, NetError> {
        wire.stream.set_read_timeout(None)?;
        let (sender, receiver) = channel(&key, local);
        let reader_wire = Wire { stream: wire.stream.try_clone()?, transcript: wire.transcript.clone() };
        Ok(Session {
            key,
            peer_subject,
            writer: SessionWriter { wire, sender },
            reader: SessionReader { wire: reader_wire, receiver },
        })
    }

    pub fn key(&self) -> &SessionKey {
        &self.key
    }

    /// 16 hex characters identifying the session key.
    pub fn fingerprint(&self) -> String {
        self.key.fingerprint()
    }

    pub fn peer_subject(&self) -> &str {
        &self.peer_subject
    }

    pub fn send(&mut self, text: &str) -> Result<(), NetError> {
        self.writer.send(text)
    }

    pub fn recv(&mut self) -> Result<Option<String>, NetError> {
        self.reader.recv()
    }

    pub fn split(self) -> (SessionWriter, SessionReader) {
        (self.writer, self.reader)
    }
}

impl SessionWriter {
    pub fn send(&mut self, text: &str) -> Result<(), NetError> {
        let env = self.sender.seal(text)?;
        self.wire.send(FrameKind::Chat, env.encode())
    }

    /// Sends a raw chat envelope body. For replay tests.
    pub fn send_raw(&mut self, body: Vec<u8>) -> Result<(), NetError> {
        self.wire.send(FrameKind::Chat, body)
    }

    /// Half-closes the connection so the peer sees end of stream.
    pub fn finish(&self) -> Result<(), NetError> {
        self.wire.stream.shutdown(Shutdown::Write)?;
        Ok(())
    }
}

impl SessionReader {
    /// Next chat message, or `None` once the peer closes. A replayed, reordered
    /// or forged envelope is an error; the caller must drop the session.
    pub fn recv(&mut self) -> Result<Option<String>, NetError> {
        match self.wire.recv() {
            Ok(Frame { kind: FrameKind::Chat, body }) => Ok(Some(self.receiver.open(&ChatEnvelope::decode(&body)?)?)),
            Ok(f) => Err(NetError::UnexpectedFrame { expected: FrameKind::Chat, got: f.kind }),
            Err(FrameError::Closed) => Ok(None),
            Err(e) => Err(NetError::from_read(e)),
        }
    }

    pub fn close(&self) {
        let _ = self.wire.stream.shutdown(Shutdown::Both);
    }
}

/// Runs the initiator side over an open stream.
pub fn initiate(stream: TcpStream, cfg: &PeerConfig) -> Result<Session, NetError> {
    stream.set_read_timeout(Some(cfg.handshake_timeout))?;
    let mut wire = Wire { stream, transcript: cfg.transcript.clone() };
    let (mut session, r1) = InitiatorSession::start(
        cfg.credential.clone(),
        cfg.suite,
        cfg.ca_public.clone(),
        cfg.handshake.clone(),
        Timestamp::now(),
    )?;
    wire.send(FrameKind::Handshake, r1.to_der().to_vec())?;
    let r2 = wire.recv_handshake()?;
    let (r3, key) = session.on_response(&r2, Timestamp::now(), &mut OsRng)?;
    wire.send(FrameKind::Handshake, r3.to_der().to_vec())?;
    let peer = subject_of(&r2);
    Session::new(wire, key, Direction::InitiatorToResponder, peer)
}

pub fn connect(addr: impl ToSocketAddrs, cfg: &PeerConfig) -> Result<Session, NetError> {
    initiate(TcpStream::connect(addr)?, cfg)
}

/// Runs the responder side over an accepted stream. On failure the stream is
/// dropped without sending anything.
pub fn respond(stream: TcpStream, responder: &Responder, cfg: &PeerConfig) -> Result<Session, NetError> {
    stream.set_read_timeout(Some(cfg.handshake_timeout))?;
    let mut wire = Wire { stream, transcript: cfg.transcript.clone() };
    let r1 = wire.recv_handshake()?;
    let r2 = responder.on_request(&r1, Timestamp::now(), &mut OsRng)?;
    wire.send(FrameKind::Handshake, r2.to_der().to_vec())?;
    let r3 = wire.recv_handshake()?;
    let key = responder.on_ack(&r3, Timestamp::now())?;
    let peer = subject_of(&r1);
    Session::new(wire, key, Direction::ResponderToInitiator, peer)
}

fn subject_of(message: &[u8]) -> String {
    SignedData::from_der(message)
        .ok()
        .and_then(|m| m.certificates().iter().find(|c| !c.is_ca()).map(|c| c.subject().to_owned()))
        .unwrap_or_default()
}

pub fn responder_for(cfg: &PeerConfig, table: Arc<SessionTable>) -> Result<Responder, NetError> {
    Ok(Responder::new(cfg.credential.clone(), cfg.suite, cfg.ca_public.clone(), cfg.handshake.clone(), table)?)
}

/// Accepts connections and runs `on_session` on its own thread for each one,
/// handshake included. Stops after `limit` connections when given, waiting for
/// their threads to finish.
pub fn serve<F>(
    listener: TcpListener,
    responder: Arc<Responder>,
    cfg: PeerConfig,
    limit: Option<usize>,
    on_session: F,
) -> Result<(), NetError>
where
    F: Fn(SocketAddr, Result<Session, NetError>) + Send + Sync + 'static,
{
    let on_session = Arc::new(on_session);
    let mut handles = Vec::new();
    let mut accepted = 0;
    while limit.is_none_or(|l| accepted < l) {
        let (stream, addr) = listener.accept()?;
        accepted += 1;
        let (responder, cfg, on_session) = (responder.clone(), cfg.clone(), on_session.clone());
        handles.push(thread::spawn(move || on_session(addr, respond(stream, &responder, &cfg))));
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}
