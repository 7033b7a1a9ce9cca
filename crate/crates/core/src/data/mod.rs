//! Training data: sparse storage, file ingestion, coordinate partitioning
//! and synthetic problem generation.

mod libsvm;
mod partition;
mod sparse;
mod synthetic;

pub use libsvm::{parse_libsvm, parse_libsvm_str, to_libsvm_string};
pub use partition::{make_partition, Partition};
pub use sparse::{Axis, SparseMatrix, StorageOrder};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::{Error, Real, Result};

/// A design matrix together with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub matrix: SparseMatrix<T>,
    pub labels: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(matrix: SparseMatrix<T>, labels: Vec<T>) -> Result<Self> {
        if labels.len() != matrix.n_rows() {
            return Err(Error::arg(format!("{} labels for {} rows", labels.len(), matrix.n_rows())));
        }
        Ok(Dataset { matrix, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Converts values and labels to another precision.
    pub fn cast<U: Real>(&self) -> Dataset<U> {
        Dataset { matrix: self.matrix.cast(), labels: self.labels.iter().map(|v| U::from_f64(v.to_f64())).collect() }
    }
}
