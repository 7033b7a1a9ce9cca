//! Binary framing for the master/worker exchange.
//!
//! ```text
//! frame     = magic u32 | msg_type u8 | epoch u32 | payload_len u64 | payload
//! REGISTER  = worker_id u32
//! UPDATE    = worker_id u32 | vector_len u64 | delta f64 * vector_len
//!             | cross_term f64 | delta_sqnorm f64 | label_term f64
//! BROADCAST = gamma f64 | vector_len u64 | shared f64 * vector_len
//! SHUTDOWN  = (empty)
//! ```
//!
//! All integers and floats are little-endian. Anything that does not match
//! this layout exactly is rejected with a [`ProtocolError`].

use std::io::{self, Read, Write};

use thiserror::Error;

use super::WorkerUpdate;

pub const MAGIC: u32 = 0x5343_4431;
pub const HEADER_LEN: usize = 4 + 1 + 4 + 8;
/// Upper bound on a payload we are willing to buffer.
pub const MAX_PAYLOAD: u64 = 1 << 32;

const MSG_REGISTER: u8 = 1;
const MSG_UPDATE: u8 = 2;
const MSG_BROADCAST: u8 = 3;
const MSG_SHUTDOWN: u8 = 4;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("bad magic 0x{0:08x}")]
    BadMagic(u32),

    #[error("unknown message type {0}")]
    UnknownType(u8),

    #[error("payload of {0} bytes exceeds limit")]
    PayloadTooLarge(u64),

    #[error("malformed {kind} payload: {msg}")]
    Malformed { kind: &'static str, msg: String },

    #[error("expected {expected}, received {got}")]
    Unexpected { expected: &'static str, got: &'static str },

    #[error("epoch mismatch: expected {expected}, received {got}")]
    EpochMismatch { expected: u32, got: u32 },

    #[error("worker {0} is not part of this run")]
    UnknownWorker(u32),

    #[error("duplicate message from worker {0}")]
    DuplicateWorker(u32),

    #[error("no update from worker {0}")]
    MissingWorker(u32),

    #[error("vector length {got}, expected {expected}")]
    VectorLength { expected: usize, got: usize },

    #[error("peer disconnected: {0}")]
    Disconnected(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

/// A decoded frame body.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Register { worker_id: u32 },
    Update(WorkerUpdate),
    Broadcast { gamma: f64, shared: Vec<f64> },
    Shutdown,
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Register { .. } => "REGISTER",
            Message::Update(_) => "UPDATE",
            Message::Broadcast { .. } => "BROADCAST",
            Message::Shutdown => "SHUTDOWN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub epoch: u32,
    pub message: Message,
}

fn put_vec(buf: &mut Vec<u8>, v: &[f64]) {
    buf.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

/// Serializes a frame. For `UPDATE` the header epoch is taken from `epoch`,
/// not from the update itself.
pub fn encode(epoch: u32, message: &Message) -> Vec<u8> {
    let mut payload = Vec::new();
    let msg_type = match message {
        Message::Register { worker_id } => {
            payload.extend_from_slice(&worker_id.to_le_bytes());
            MSG_REGISTER
        }
        Message::Update(u) => {
            payload.extend_from_slice(&u.worker_id.to_le_bytes());
            put_vec(&mut payload, &u.delta_shared);
            for x in [u.cross_term, u.delta_sqnorm, u.label_term] {
                payload.extend_from_slice(&x.to_le_bytes());
            }
            MSG_UPDATE
        }
        Message::Broadcast { gamma, shared } => {
            payload.extend_from_slice(&gamma.to_le_bytes());
            put_vec(&mut payload, shared);
            MSG_BROADCAST
        }
        Message::Shutdown => MSG_SHUTDOWN,
    };
    let mut frame = Vec::with_capacity(HEADER_LEN + payload.len());
    frame.extend_from_slice(&MAGIC.to_le_bytes());
    frame.push(msg_type);
    frame.extend_from_slice(&epoch.to_le_bytes());
    frame.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    frame.extend_from_slice(&payload);
    frame
}

/// Cursor over a payload that reports short reads as malformed.
struct Payload<'a> {
    kind: &'static str,
    bytes: &'a [u8],
}

impl<'a> Payload<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ProtocolError> {
        if self.bytes.len() < N {
            return Err(ProtocolError::Malformed { kind: self.kind, msg: "payload truncated".into() });
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32, ProtocolError> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, ProtocolError> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, ProtocolError> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn vec(&mut self, trailing: usize) -> Result<Vec<f64>, ProtocolError> {
        let len = self.u64()?;
        let want = (self.bytes.len() as u64).checked_sub(trailing as u64);
        if want != Some(len.saturating_mul(8)) {
            return Err(ProtocolError::Malformed {
                kind: self.kind,
                msg: format!("vector_len {len} does not match payload size"),
            });
        }
        (0..len).map(|_| self.f64()).collect()
    }

    fn finish(self) -> Result<(), ProtocolError> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Malformed { kind: self.kind, msg: format!("{} trailing bytes", self.bytes.len()) })
        }
    }
}

fn decode_payload(msg_type: u8, epoch: u32, bytes: &[u8]) -> Result<Message, ProtocolError> {
    let message = match msg_type {
        MSG_REGISTER => {
            let mut p = Payload { kind: "REGISTER", bytes };
            let worker_id = p.u32()?;
            p.finish()?;
            Message::Register { worker_id }
        }
        MSG_UPDATE => {
            let mut p = Payload { kind: "UPDATE", bytes };
            let worker_id = p.u32()?;
            let delta_shared = p.vec(24)?;
            let (cross_term, delta_sqnorm, label_term) = (p.f64()?, p.f64()?, p.f64()?);
            p.finish()?;
            if !(delta_sqnorm >= 0.0) {
                return Err(ProtocolError::Malformed {
                    kind: "UPDATE",
                    msg: format!("negative delta_sqnorm {delta_sqnorm}"),
                });
            }
            Message::Update(WorkerUpdate { epoch, worker_id, delta_shared, cross_term, delta_sqnorm, label_term })
        }
        MSG_BROADCAST => {
            let mut p = Payload { kind: "BROADCAST", bytes };
            let gamma = p.f64()?;
            let shared = p.vec(0)?;
            p.finish()?;
            Message::Broadcast { gamma, shared }
        }
        MSG_SHUTDOWN => {
            Payload { kind: "SHUTDOWN", bytes }.finish()?;
            Message::Shutdown
        }
        other => return Err(ProtocolError::UnknownType(other)),
    };
    Ok(message)
}

/// Reads exactly one frame. A clean end of stream before the first header
/// byte is reported as [`ProtocolError::Disconnected`].
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Frame, ProtocolError> {
    let mut header = [0u8; HEADER_LEN];
    reader.read_exact(&mut header).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ProtocolError::Disconnected("connection closed".into()),
        _ => ProtocolError::Io(e),
    })?;
    let magic = u32::from_le_bytes(header[0..4].try_into().unwrap());
    if magic != MAGIC {
        return Err(ProtocolError::BadMagic(magic));
    }
    let msg_type = header[4];
    if !(MSG_REGISTER..=MSG_SHUTDOWN).contains(&msg_type) {
        return Err(ProtocolError::UnknownType(msg_type));
    }
    let epoch = u32::from_le_bytes(header[5..9].try_into().unwrap());
    let len = u64::from_le_bytes(header[9..17].try_into().unwrap());
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::PayloadTooLarge(len));
    }
    let mut payload = vec![0u8; len as usize];
    reader.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => {
            ProtocolError::Malformed { kind: "frame", msg: "stream ended inside payload".into() }
        }
        _ => ProtocolError::Io(e),
    })?;
    Ok(Frame { epoch, message: decode_payload(msg_type, epoch, &payload)? })
}

/// Decodes a complete frame held in memory; trailing bytes are an error.
pub fn decode(bytes: &[u8]) -> Result<Frame, ProtocolError> {
    let mut cursor = bytes;
    let frame = read_frame(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(ProtocolError::Malformed { kind: "frame", msg: format!("{} bytes after frame", cursor.len()) });
    }
    Ok(frame)
}

pub fn write_frame<W: Write>(writer: &mut W, epoch: u32, message: &Message) -> Result<(), ProtocolError> {
    writer.write_all(&encode(epoch, message))?;
    writer.flush()?;
    Ok(())
}
