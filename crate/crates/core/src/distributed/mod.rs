//! Synchronous distributed coordinate descent.
//!
//! Coordinates (features for the primal, examples for the dual) are split
//! across `K` workers. Each round every worker runs one local epoch over its
//! own coordinates against the last broadcast shared vector and sends the
//! resulting change of the shared vector together with three scalars. The
//! master sums the changes, picks a step `gamma` (either `1/K` or the exact
//! line-search minimizer along the summed direction), applies it and
//! broadcasts the new shared vector; workers scale their local change by the
//! same `gamma` so their weights stay consistent with it.

mod aggregate;
mod driver;
pub mod tcp;
pub mod transport;
pub mod wire;
mod worker;

pub use aggregate::{optimal_gamma_dual, optimal_gamma_primal, MasterState};
pub use driver::{
    partition_for, run_distributed, run_master, run_worker, DistributedConfig, MasterOutcome, TransportKind,
};
pub use transport::{inproc_links, Broadcast, InProcMaster, InProcWorker, MasterTransport, WorkerTransport};
pub use wire::ProtocolError;
pub use worker::WorkerState;

use crate::metrics::EpochMetrics;
use crate::Error;

/// What a worker reports after one local epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerUpdate {
    pub epoch: u32,
    pub worker_id: u32,
    /// Change of the shared vector caused by the local epoch.
    pub delta_shared: Vec<f64>,
    /// `<base weights, delta weights>` over the worker's coordinates.
    pub cross_term: f64,
    /// `||delta weights||^2`.
    pub delta_sqnorm: f64,
    /// `<delta alpha, y>` for the dual, 0 for the primal.
    pub label_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationMode {
    /// `gamma = 1/K`.
    Average,
    /// `gamma` minimizes the objective along the aggregated direction.
    Adaptive,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "average" | "avg" => Ok(AggregationMode::Average),
            "adaptive" => Ok(AggregationMode::Adaptive),
            other => Err(Error::Argument(format!("unknown aggregation mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AggregationMode::Average => "average",
            AggregationMode::Adaptive => "adaptive",
        })
    }
}

/// Per-round record. `gamma` is set for every round after the initial
/// point, and the phase timings follow the distributed mapping described on
/// [`EpochMetrics`].
pub type RoundRecord = EpochMetrics;
