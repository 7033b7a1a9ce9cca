use std::net::TcpListener;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Instant;

use crate::data::{make_partition, Partition};
use crate::metrics::{is_check_epoch, EpochMetrics};
use crate::objective::{certify, Form, Model, RidgeProblem};
use crate::parallel::{AsyncConfig, Engine};
use crate::{Error, Real, Result};

use super::aggregate::MasterState;
use super::tcp::{TcpMaster, TcpWorker};
use super::transport::{inproc_links, MasterTransport, WorkerTransport};
use super::worker::WorkerState;
use super::{AggregationMode, ProtocolError, RoundRecord};

const PARTITION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistributedConfig {
    pub k: usize,
    pub n_epochs: usize,
    pub seed: u64,
    pub form: Form,
    pub mode: AggregationMode,
    /// Local solver every worker runs.
    pub engine: Engine,
    pub gap_check_every: usize,
}

impl DistributedConfig {
    /// Sequential local solver, certification every round.
    pub fn new(form: Form, k: usize, mode: AggregationMode, n_epochs: usize, seed: u64) -> Self {
        DistributedConfig { k, n_epochs, seed, form, mode, engine: Engine::Sequential, gap_check_every: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::arg("distributed run needs at least one worker"));
        }
        if u32::try_from(self.k).is_err() || u32::try_from(self.n_epochs).is_err() {
            return Err(Error::arg("worker or epoch count does not fit the wire format"));
        }
        if let Engine::Async { variant, n_workers, n_lanes } = self.engine {
            let mut c = AsyncConfig::new(variant, self.form, n_workers, 0, self.seed);
            c.n_lanes = n_lanes;
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    InProcess,
    /// Workers are threads of this process talking TCP over 127.0.0.1.
    TcpLoopback,
}

/// The coordinate split every participant of a run derives from its seed.
pub fn partition_for<T: Real>(p: &RidgeProblem<T>, form: Form, k: usize, seed: u64) -> Result<Partition> {
    make_partition(p.n_coords(form), k, seed ^ PARTITION_SALT)
}

/// What the master knows at the end of a run.
#[derive(Debug, Clone)]
pub struct MasterOutcome<T> {
    pub state: MasterState<T>,
    /// Global weights, when workers reported them.
    pub weights: Option<Vec<T>>,
    pub records: Vec<RoundRecord>,
}

struct Probes<'a, T> {
    rx: Vec<Receiver<Vec<T>>>,
    partition: &'a Partition,
}

impl<T: Real> Probes<'_, T> {
    fn collect(&self, count: usize) -> Result<Vec<T>> {
        let mut weights = vec![T::ZERO; count];
        for (id, rx) in self.rx.iter().enumerate() {
            let slice = rx.recv().map_err(|_| ProtocolError::Disconnected(format!("worker {id} hung up")))?;
            for (&c, v) in self.partition.block(id).iter().zip(slice) {
                weights[c] = v;
            }
        }
        Ok(weights)
    }
}

fn master_loop<T: Real, M: MasterTransport>(
    p: &RidgeProblem<T>,
    link: &mut M,
    config: &DistributedConfig,
    probes: Option<&Probes<'_, T>>,
) -> Result<MasterOutcome<T>> {
    config.validate()?;
    if link.k() != config.k {
        return Err(Error::arg(format!("transport has {} workers, config expects {}", link.k(), config.k)));
    }
    let count = p.n_coords(config.form);
    let mut state = MasterState::new(p, config.form);
    let mut weights = None;
    let mut certify_round = |state: &MasterState<T>| -> Result<_> {
        match probes {
            Some(probes) => {
                let w = probes.collect(count)?;
                let cert = certify(p, config.form, &w)?;
                weights = Some(w);
                Ok(cert)
            }
            None => state.tracked_certificate(p),
        }
    };

    let shared_f64 = |state: &MasterState<T>| state.shared.iter().map(|v| v.to_f64()).collect::<Vec<_>>();
    let start = Instant::now();
    link.broadcast_state(0, &shared_f64(&state), 0.0)?;
    let mut elapsed = start.elapsed().as_secs_f64();
    let mut records = vec![EpochMetrics::new(0, elapsed, certify_round(&state)?)];

    for epoch in 1..=config.n_epochs {
        let t0 = Instant::now();
        let updates = link.gather_updates(epoch as u32)?;
        let t1 = Instant::now();
        let gamma = state.aggregate(p, &updates, config.mode)?;
        let shared = shared_f64(&state);
        let t2 = Instant::now();
        link.broadcast_state(epoch as u32, &shared, gamma)?;
        let t3 = Instant::now();
        elapsed += (t3 - t0).as_secs_f64();
        if is_check_epoch(epoch, config.gap_check_every, config.n_epochs) {
            let mut row = EpochMetrics::new(epoch, elapsed, certify_round(&state)?);
            row.gamma = Some(gamma);
            row.t_compute_s = (t1 - t0).as_secs_f64();
            row.t_transfer_s = (t2 - t1).as_secs_f64();
            row.t_comm_s = (t3 - t2).as_secs_f64();
            log::debug!("round {epoch}: gamma {gamma:.6} gap {:.3e}", row.duality_gap);
            records.push(row);
        }
    }
    link.shutdown()?;
    Ok(MasterOutcome { state, weights, records })
}

fn worker_loop<T: Real, W: WorkerTransport>(
    p: &RidgeProblem<T>,
    link: &mut W,
    state: &mut WorkerState<T>,
    config: &DistributedConfig,
    probe: Option<&Sender<Vec<T>>>,
) -> Result<()> {
    let mut expected = 0u32;
    while let Some(b) = link.recv_broadcast()? {
        if b.epoch != expected {
            return Err(ProtocolError::EpochMismatch { expected, got: b.epoch }.into());
        }
        state.apply_broadcast(&b)?;
        if let Some(tx) = probe {
            if is_check_epoch(b.epoch as usize, config.gap_check_every, config.n_epochs) {
                tx.send(state.owned_weights()).map_err(|_| ProtocolError::Disconnected("master hung up".into()))?;
            }
        }
        if (b.epoch as usize) < config.n_epochs {
            expected = b.epoch + 1;
            let update = state.worker_epoch(p, &config.engine, config.seed, expected)?;
            link.send_update(&update)?;
        } else {
            expected = b.epoch;
        }
    }
    Ok(())
}

/// Master side of a run whose workers live elsewhere. Gaps are computed from
/// the shared vector and the scalars tracked through aggregation.
pub fn run_master<T: Real, M: MasterTransport>(
    p: &RidgeProblem<T>,
    link: &mut M,
    config: &DistributedConfig,
) -> Result<MasterOutcome<T>> {
    master_loop(p, link, config, None)
}

/// Worker side of a run: serves rounds until the master shuts down.
pub fn run_worker<T: Real, W: WorkerTransport>(
    p: &RidgeProblem<T>,
    link: &mut W,
    worker_id: u32,
    config: &DistributedConfig,
) -> Result<()> {
    config.validate()?;
    let partition = partition_for(p, config.form, config.k, config.seed)?;
    if worker_id as usize >= config.k {
        return Err(Error::arg(format!("worker id {worker_id} out of range for {} workers", config.k)));
    }
    let mut state = WorkerState::new(p, config.form, worker_id, partition.block(worker_id as usize).to_vec())?;
    worker_loop(p, link, &mut state, config, None)
}

type Connect<'a, W> = Box<dyn FnOnce() -> Result<W> + Send + 'a>;

fn drive<'a, T: Real, M: MasterTransport, W: WorkerTransport + Send>(
    p: &'a RidgeProblem<T>,
    config: &'a DistributedConfig,
    partition: &Partition,
    master: impl FnOnce() -> Result<M>,
    links: Vec<Connect<'a, W>>,
) -> Result<(Model<T>, Vec<RoundRecord>)> {
    let mut states = Vec::with_capacity(config.k);
    for id in 0..config.k {
        states.push(WorkerState::new(p, config.form, id as u32, partition.block(id).to_vec())?);
    }
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..config.k).map(|_| channel()).unzip();
    let probes = Probes { rx: rxs, partition };

    let (master_result, worker_results) = std::thread::scope(|s| {
        let handles: Vec<_> = states
            .into_iter()
            .zip(links)
            .zip(txs)
            .map(|((mut state, connect), tx)| {
                s.spawn(move || -> Result<()> {
                    let mut link = connect()?;
                    worker_loop(p, &mut link, &mut state, config, Some(&tx))
                })
            })
            .collect();
        // The master link is dropped before joining so blocked workers see
        // the hang-up when the master fails.
        let master_result = master().and_then(|mut link| master_loop(p, &mut link, config, Some(&probes)));
        let worker_results: Vec<Result<()>> = handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::arg("worker thread panicked"))))
            .collect();
        (master_result, worker_results)
    });

    let worker_error = worker_results.into_iter().find_map(|r| r.err());
    let outcome = match (master_result, worker_error) {
        (Ok(outcome), None) => outcome,
        (Err(Error::Protocol(ProtocolError::Disconnected(_))), Some(e)) => return Err(e),
        (Err(e), _) | (Ok(_), Some(e)) => return Err(e),
    };
    let weights = outcome.weights.unwrap_or_else(|| vec![T::ZERO; p.n_coords(config.form)]);
    let model = Model { form: config.form, weights, shared: outcome.state.shared };
    Ok((model, outcome.records))
}

/// Runs a full distributed training with all workers as threads of this
/// process. Gaps are certified from the assembled global weights.
pub fn run_distributed<T: Real>(
    p: &RidgeProblem<T>,
    config: &DistributedConfig,
    transport: TransportKind,
) -> Result<(Model<T>, Vec<RoundRecord>)> {
    config.validate()?;
    let partition = partition_for(p, config.form, config.k, config.seed)?;
    match transport {
        TransportKind::InProcess => {
            let (master, workers) = inproc_links(config.k);
            let links = workers.into_iter().map(|w| Box::new(move || Ok(w)) as Connect<'_, _>).collect();
            drive(p, config, &partition, || Ok(master), links)
        }
        TransportKind::TcpLoopback => {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let links = (0..config.k as u32)
                .map(|id| Box::new(move || Ok(TcpWorker::connect(addr, id)?)) as Connect<'_, _>)
                .collect();
            drive(p, config, &partition, || Ok(TcpMaster::accept(&listener, config.k)?), links)
        }
    }
}
