use crate::objective::{Form, Model, RidgeProblem};
use crate::parallel::Engine;
use crate::solver::EpochPlan;
use crate::{Error, Real, Result};

use super::transport::Broadcast;
use super::WorkerUpdate;

/// One worker's view of the run.
///
/// `model` spans every coordinate so the engines can run on it unchanged,
/// but only the worker's own coordinates are ever nonzero. Its shared vector
/// is the local copy, reset to the master's value at every broadcast.
#[derive(Debug, Clone)]
pub struct WorkerState<T> {
    pub worker_id: u32,
    pub coords: Vec<usize>,
    pub model: Model<T>,
    base: Vec<T>,
    pending: Option<Vec<f64>>,
}

impl<T: Real> WorkerState<T> {
    /// Zero-initialized worker owning `coords`.
    pub fn new(p: &RidgeProblem<T>, form: Form, worker_id: u32, coords: Vec<usize>) -> Result<Self> {
        let count = p.n_coords(form);
        if coords.iter().any(|&c| c >= count) {
            return Err(Error::arg(format!("worker {worker_id} owns a coordinate out of range")));
        }
        Ok(WorkerState { worker_id, coords, model: Model::zeros(p, form), base: Vec::new(), pending: None })
    }

    /// Current weights of the owned coordinates, in `coords` order.
    pub fn owned_weights(&self) -> Vec<T> {
        self.coords.iter().map(|&c| self.model.weights[c]).collect()
    }

    /// Runs one local epoch over the owned coordinates and reports the
    /// change. The aggregation scalars are taken at the round's base point.
    pub fn worker_epoch(
        &mut self,
        p: &RidgeProblem<T>,
        engine: &Engine,
        seed: u64,
        epoch: u32,
    ) -> Result<WorkerUpdate> {
        if self.pending.is_some() {
            return Err(Error::arg("previous update has not been resolved by a broadcast"));
        }
        let base = self.owned_weights();
        let base_shared = self.model.shared.clone();
        let plan = EpochPlan::over(&self.coords, seed, epoch as u64, self.worker_id as u64);
        engine.run_epoch(p, &mut self.model, &plan)?;

        let labels = p.labels();
        let mut delta = Vec::with_capacity(self.coords.len());
        let (mut cross, mut sqnorm, mut label_term) = (0.0, 0.0, 0.0);
        for (&c, b) in self.coords.iter().zip(&base) {
            let d = self.model.weights[c].to_f64() - b.to_f64();
            cross += b.to_f64() * d;
            sqnorm += d * d;
            if self.model.form == Form::Dual {
                label_term += d * labels[c].to_f64();
            }
            delta.push(d);
        }
        let delta_shared =
            self.model.shared.iter().zip(&base_shared).map(|(new, old)| new.to_f64() - old.to_f64()).collect();
        self.base = base;
        self.pending = Some(delta);
        Ok(WorkerUpdate {
            epoch,
            worker_id: self.worker_id,
            delta_shared,
            cross_term: cross,
            delta_sqnorm: sqnorm,
            label_term,
        })
    }

    /// Adopts the master's shared vector and scales the pending local change
    /// by the broadcast step.
    pub fn apply_broadcast(&mut self, b: &Broadcast) -> Result<()> {
        if b.shared.len() != self.model.shared.len() {
            return Err(
                super::ProtocolError::VectorLength { expected: self.model.shared.len(), got: b.shared.len() }.into()
            );
        }
        if let Some(delta) = self.pending.take() {
            for ((&c, base), d) in self.coords.iter().zip(&self.base).zip(delta) {
                self.model.weights[c] = T::from_f64(base.to_f64() + b.gamma * d);
            }
        }
        for (dst, &src) in self.model.shared.iter_mut().zip(b.shared.iter()) {
            *dst = T::from_f64(src);
        }
        Ok(())
    }
}
