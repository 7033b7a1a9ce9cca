//! Per-epoch convergence records shared by every engine.

use crate::objective::Certificate;

/// One row of a convergence trace.
///
/// Phase timings: for single-node engines the whole epoch counts as
/// compute. For distributed rounds `t_compute_s` is the time the master
/// waits for worker updates, `t_transfer_s` the aggregation on the master
/// and `t_comm_s` the broadcast back to the workers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub elapsed_s: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub duality_gap: f64,
    pub gamma: Option<f64>,
    pub t_compute_s: f64,
    pub t_transfer_s: f64,
    pub t_comm_s: f64,
}

impl EpochMetrics {
    pub fn new(epoch: usize, elapsed_s: f64, cert: Certificate) -> Self {
        EpochMetrics {
            epoch,
            elapsed_s,
            primal_obj: cert.primal_obj,
            dual_obj: cert.dual_obj,
            duality_gap: cert.gap,
            gamma: None,
            t_compute_s: 0.0,
            t_transfer_s: 0.0,
            t_comm_s: 0.0,
        }
    }
}

/// Whether epoch `epoch` of `n_epochs` should be certified when checking
/// every `every` epochs. The starting point and the final epoch always are.
pub fn is_check_epoch(epoch: usize, every: usize, n_epochs: usize) -> bool {
    epoch == 0 || epoch == n_epochs || epoch.is_multiple_of(every)
}

/// First epoch whose recorded gap is at or below `target`.
pub fn epochs_to_gap(trace: &[EpochMetrics], target: f64) -> Option<usize> {
    trace.iter().find(|m| m.duality_gap <= target).map(|m| m.epoch)
}
