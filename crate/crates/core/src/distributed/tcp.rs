//! TCP transport speaking the framed protocol in [`super::wire`].
//!
//! Workers connect and identify themselves with a REGISTER frame; the master
//! keeps one stream per worker id. Epoch 0 REGISTER, then per round UPDATE
//! from every worker followed by one BROADCAST to all, and a final SHUTDOWN.

use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;

use super::transport::{validate_round, Broadcast, MasterTransport, WorkerTransport};
use super::wire::{encode, read_frame, write_frame, Message, ProtocolError};
use super::WorkerUpdate;

struct Conn {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Conn {
    fn new(stream: TcpStream) -> Result<Self, ProtocolError> {
        stream.set_nodelay(true)?;
        Ok(Conn { reader: BufReader::new(stream.try_clone()?), writer: BufWriter::new(stream) })
    }
}

/// Master side: one connection per registered worker.
pub struct TcpMaster {
    conns: Vec<Conn>,
}

impl TcpMaster {
    /// Accepts connections on `listener` until `k` distinct workers have
    /// registered with ids `0..k`.
    pub fn accept(listener: &TcpListener, k: usize) -> Result<Self, ProtocolError> {
        let mut slots: Vec<Option<Conn>> = (0..k).map(|_| None).collect();
        for _ in 0..k {
            let (stream, peer) = listener.accept()?;
            let mut conn = Conn::new(stream)?;
            let frame = read_frame(&mut conn.reader)?;
            let Message::Register { worker_id } = frame.message else {
                return Err(ProtocolError::Unexpected { expected: "REGISTER", got: frame.message.kind() });
            };
            let slot = slots.get_mut(worker_id as usize).ok_or(ProtocolError::UnknownWorker(worker_id))?;
            if slot.is_some() {
                return Err(ProtocolError::DuplicateWorker(worker_id));
            }
            log::debug!("worker {worker_id} registered from {peer}");
            *slot = Some(conn);
        }
        Ok(TcpMaster { conns: slots.into_iter().map(Option::unwrap).collect() })
    }

    fn send_all(&mut self, bytes: &[u8]) -> Result<(), ProtocolError> {
        for (id, conn) in self.conns.iter_mut().enumerate() {
            conn.writer
                .write_all(bytes)
                .and_then(|_| conn.writer.flush())
                .map_err(|e| ProtocolError::Disconnected(format!("worker {id}: {e}")))?;
        }
        Ok(())
    }
}

impl MasterTransport for TcpMaster {
    fn k(&self) -> usize {
        self.conns.len()
    }

    fn gather_updates(&mut self, epoch: u32) -> Result<Vec<WorkerUpdate>, ProtocolError> {
        let mut out = Vec::with_capacity(self.conns.len());
        for (id, conn) in self.conns.iter_mut().enumerate() {
            let frame = read_frame(&mut conn.reader)?;
            let Message::Update(update) = frame.message else {
                return Err(ProtocolError::Unexpected { expected: "UPDATE", got: frame.message.kind() });
            };
            if update.worker_id as usize != id {
                return Err(ProtocolError::UnknownWorker(update.worker_id));
            }
            out.push(update);
        }
        let len = out.first().map_or(0, |u| u.delta_shared.len());
        validate_round(out, self.k(), epoch, len)
    }

    fn broadcast_state(&mut self, epoch: u32, shared: &[f64], gamma: f64) -> Result<(), ProtocolError> {
        // Serialized once so every worker receives identical bytes.
        let bytes = encode(epoch, &Message::Broadcast { gamma, shared: shared.to_vec() });
        self.send_all(&bytes)
    }

    fn shutdown(&mut self) -> Result<(), ProtocolError> {
        let bytes = encode(0, &Message::Shutdown);
        for conn in &mut self.conns {
            let _ = conn.writer.write_all(&bytes).and_then(|_| conn.writer.flush());
        }
        Ok(())
    }
}

/// Worker side of a TCP link.
pub struct TcpWorker {
    worker_id: u32,
    conn: Conn,
}

impl TcpWorker {
    /// Connects to the master and registers as `worker_id`.
    pub fn connect(addr: impl ToSocketAddrs, worker_id: u32) -> Result<Self, ProtocolError> {
        let mut conn = Conn::new(TcpStream::connect(addr)?)?;
        write_frame(&mut conn.writer, 0, &Message::Register { worker_id })?;
        Ok(TcpWorker { worker_id, conn })
    }

    pub fn worker_id(&self) -> u32 {
        self.worker_id
    }
}

impl WorkerTransport for TcpWorker {
    fn send_update(&mut self, update: &WorkerUpdate) -> Result<(), ProtocolError> {
        write_frame(&mut self.conn.writer, update.epoch, &Message::Update(update.clone()))
    }

    fn recv_broadcast(&mut self) -> Result<Option<Broadcast>, ProtocolError> {
        let frame = read_frame(&mut self.conn.reader)?;
        match frame.message {
            Message::Broadcast { gamma, shared } => {
                Ok(Some(Broadcast { epoch: frame.epoch, gamma, shared: Arc::new(shared) }))
            }
            Message::Shutdown => Ok(None),
            other => Err(ProtocolError::Unexpected { expected: "BROADCAST", got: other.kind() }),
        }
    }
}
