//! Master/worker message passing.
//!
//! The master gathers exactly one [`WorkerUpdate`] per worker per epoch and
//! broadcasts the aggregated shared vector and step size back. Both calls
//! are barriers. Two implementations share these traits: channels between
//! threads ([`inproc_links`]) and TCP ([`super::tcp`]).

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;

use super::wire::ProtocolError;
use super::WorkerUpdate;

/// What workers receive after each aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub epoch: u32,
    pub gamma: f64,
    pub shared: Arc<Vec<f64>>,
}

pub trait MasterTransport {
    fn k(&self) -> usize;

    /// Blocks until every worker has sent its update for `epoch`. Returns
    /// them ordered by worker id.
    fn gather_updates(&mut self, epoch: u32) -> Result<Vec<WorkerUpdate>, ProtocolError>;

    /// Sends the same `(shared, gamma)` to every worker.
    fn broadcast_state(&mut self, epoch: u32, shared: &[f64], gamma: f64) -> Result<(), ProtocolError>;

    /// Tells every worker to stop.
    fn shutdown(&mut self) -> Result<(), ProtocolError>;
}

pub trait WorkerTransport {
    fn send_update(&mut self, update: &WorkerUpdate) -> Result<(), ProtocolError>;

    /// Next broadcast, or `None` once the master has shut the run down.
    fn recv_broadcast(&mut self) -> Result<Option<Broadcast>, ProtocolError>;
}

/// Checks that `updates` holds exactly one update per worker `0..k` for
/// `epoch`, each with a shared-vector delta of `len` entries, and sorts
/// them by worker id.
pub fn validate_round(
    mut updates: Vec<WorkerUpdate>,
    k: usize,
    epoch: u32,
    len: usize,
) -> Result<Vec<WorkerUpdate>, ProtocolError> {
    let mut seen = vec![false; k];
    for u in &updates {
        if u.epoch != epoch {
            return Err(ProtocolError::EpochMismatch { expected: epoch, got: u.epoch });
        }
        let id = u.worker_id as usize;
        if id >= k {
            return Err(ProtocolError::UnknownWorker(u.worker_id));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(ProtocolError::DuplicateWorker(u.worker_id));
        }
        if u.delta_shared.len() != len {
            return Err(ProtocolError::VectorLength { expected: len, got: u.delta_shared.len() });
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ProtocolError::MissingWorker(missing as u32));
    }
    updates.sort_by_key(|u| u.worker_id);
    Ok(updates)
}

enum Control {
    State(Broadcast),
    Shutdown,
}

/// Master end of the in-process transport.
pub struct InProcMaster {
    updates: Vec<Receiver<WorkerUpdate>>,
    control: Vec<Sender<Control>>,
}

/// Worker end of the in-process transport.
pub struct InProcWorker {
    updates: Sender<WorkerUpdate>,
    control: Receiver<Control>,
}

/// Connected master and worker endpoints for `k` workers, one channel pair
/// per worker so a vanished worker is detected rather than waited on.
pub fn inproc_links(k: usize) -> (InProcMaster, Vec<InProcWorker>) {
    let mut master = InProcMaster { updates: Vec::new(), control: Vec::new() };
    let mut workers = Vec::new();
    for _ in 0..k {
        let (utx, urx) = channel();
        let (ctx, crx) = channel();
        master.updates.push(urx);
        master.control.push(ctx);
        workers.push(InProcWorker { updates: utx, control: crx });
    }
    (master, workers)
}

impl MasterTransport for InProcMaster {
    fn k(&self) -> usize {
        self.updates.len()
    }

    fn gather_updates(&mut self, epoch: u32) -> Result<Vec<WorkerUpdate>, ProtocolError> {
        let mut out = Vec::with_capacity(self.updates.len());
        for (id, rx) in self.updates.iter().enumerate() {
            let update = rx.recv().map_err(|_| ProtocolError::Disconnected(format!("worker {id} hung up")))?;
            if update.worker_id as usize != id {
                return Err(ProtocolError::UnknownWorker(update.worker_id));
            }
            out.push(update);
        }
        let len = out.first().map_or(0, |u| u.delta_shared.len());
        validate_round(out, self.k(), epoch, len)
    }

    fn broadcast_state(&mut self, epoch: u32, shared: &[f64], gamma: f64) -> Result<(), ProtocolError> {
        let msg = Broadcast { epoch, gamma, shared: Arc::new(shared.to_vec()) };
        for (id, tx) in self.control.iter().enumerate() {
            tx.send(Control::State(msg.clone()))
                .map_err(|_| ProtocolError::Disconnected(format!("worker {id} hung up")))?;
        }
        Ok(())
    }

    fn shutdown(&mut self) -> Result<(), ProtocolError> {
        for tx in &self.control {
            // A worker that already exited needs no shutdown notice.
            let _ = tx.send(Control::Shutdown);
        }
        Ok(())
    }
}

impl WorkerTransport for InProcWorker {
    fn send_update(&mut self, update: &WorkerUpdate) -> Result<(), ProtocolError> {
        self.updates.send(update.clone()).map_err(|_| ProtocolError::Disconnected("master hung up".into()))
    }

    fn recv_broadcast(&mut self) -> Result<Option<Broadcast>, ProtocolError> {
        match self.control.recv() {
            Ok(Control::State(b)) => Ok(Some(b)),
            Ok(Control::Shutdown) => Ok(None),
            Err(_) => Err(ProtocolError::Disconnected("master hung up".into())),
        }
    }
}
