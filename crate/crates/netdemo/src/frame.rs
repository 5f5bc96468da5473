//! Length-prefixed frames: `len (u32 BE) ∥ kind ∥ body`, with `len = 1 + body`.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAX_FRAME_LEN: usize = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame of {0} bytes exceeds the {MAX_FRAME_LEN}-byte limit")]
    Oversize(usize),
    #[error("zero-length frame")]
    Empty,
    #[error("unknown frame kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Handshake = 0x01,
    Chat = 0x02,
}

impl FrameKind {
    pub fn from_byte(b: u8) -> Result<FrameKind, FrameError> {
        match b {
            0x01 => Ok(FrameKind::Handshake),
            0x02 => Ok(FrameKind::Chat),
            other => Err(FrameError::UnknownKind(other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameKind, body: Vec<u8>) -> Frame {
        Frame { kind, body }
    }

    /// Wire bytes of the frame.
    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        let len = 1 + self.body.len();
        if len > MAX_FRAME_LEN {
            return Err(FrameError::Oversize(len));
        }
        let mut out = Vec::with_capacity(4 + len);
        out.extend_from_slice(&(len as u32).to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.body);
        Ok(out)
    }

    /// Parses one frame from the front of `bytes`, returning it and the bytes used.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
        let mut cursor = io::Cursor::new(bytes);
        let frame = read_frame(&mut cursor)?;
        Ok((frame, cursor.position() as usize))
    }
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<Vec<u8>, FrameError> {
    let bytes = frame.encode()?;
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(bytes)
}

/// Reads one frame. A clean EOF before the first length byte is `Closed`.
pub fn read_frame(r: &mut impl Read) -> Result<Frame, FrameError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Err(FrameError::Closed),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len == 0 {
        return Err(FrameError::Empty);
    }
    if len > MAX_FRAME_LEN {
        return Err(FrameError::Oversize(len));
    }
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let kind = FrameKind::from_byte(kind[0])?;
    let mut body = vec![0u8; len - 1];
    r.read_exact(&mut body)?;
    Ok(Frame { kind, body })
}

/// Splits a transcript file back into frames.
pub fn parse_transcript(mut bytes: &[u8]) -> Result<Vec<Frame>, FrameError> {
    let mut frames = Vec::new();
    while !bytes.is_empty() {
        let (f, used) = Frame::decode_prefix(bytes)?;
        frames.push(f);
        bytes = &bytes[used..];
    }
    Ok(frames)
}
