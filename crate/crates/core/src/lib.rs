//! Ridge regression by stochastic coordinate descent.
//!
//! The crate provides exact coordinate-wise solvers for the primal and the
//! dual form of ridge regression, asynchronous multi-threaded engines built
//! on the same update rules, and a synchronous distributed layer that splits
//! coordinates across workers and aggregates their updates on a master node,
//! either by averaging or with the exact line-search step along the
//! aggregated direction.
//!
//! Module map:
//!
//! * [`data`]: sparse matrices, LIBSVM ingestion, partitioning and
//!   synthetic problems.
//! * [`objective`]: problem instance, models, objectives and duality gaps.
//! * [`solver`]: sequential coordinate descent, the reference engine.
//! * [`parallel`]: asynchronous engines (atomic, wild, two-level).
//! * [`distributed`]: workers, master aggregation and transports.

pub mod data;
pub mod distributed;
mod error;
pub mod metrics;
pub mod objective;
pub mod parallel;
mod real;
pub mod solver;

pub use error::{Error, Result};
pub use real::Real;

pub use data::{Dataset, Partition, SparseMatrix, StorageOrder};
pub use metrics::EpochMetrics;
pub use objective::{Form, Model, RidgeProblem};
