use crate::data::{Axis, Dataset, SparseMatrix, StorageOrder};
use crate::{Error, Real, Result};

/// Which side of the ridge regression problem a solver works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    /// Minimize over feature weights `beta`; shared vector `w = A beta`.
    Primal,
    /// Maximize over example weights `alpha`; shared vector `w = A^T alpha`.
    Dual,
}

impl std::str::FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primal" => Ok(Form::Primal),
            "dual" => Ok(Form::Dual),
            other => Err(Error::arg(format!("unknown form {other:?}"))),
        }
    }
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Form::Primal => "primal",
            Form::Dual => "dual",
        })
    }
}

/// An immutable ridge regression instance.
///
/// Holds the data matrix in both layouts: column-major for primal updates
/// (which walk a feature column) and row-major for dual updates (which walk
/// an example row), plus the squared norms of every column and row.
#[derive(Debug, Clone)]
pub struct RidgeProblem<T> {
    by_col: SparseMatrix<T>,
    by_row: SparseMatrix<T>,
    labels: Vec<T>,
    lambda: f64,
    col_sqnorms: Vec<f64>,
    row_sqnorms: Vec<f64>,
}

impl<T: Real> RidgeProblem<T> {
    pub fn new(data: Dataset<T>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
        }
        if data.n_rows() == 0 || data.n_cols() == 0 {
            return Err(Error::arg(format!(
                "problem needs at least one row and column, got {}x{}",
                data.n_rows(),
                data.n_cols()
            )));
        }
        let by_col = data.matrix.to_order(StorageOrder::Csc);
        let by_row = data.matrix.to_order(StorageOrder::Csr);
        let col_sqnorms = by_col.squared_norms(Axis::Cols);
        let row_sqnorms = by_row.squared_norms(Axis::Rows);
        Ok(RidgeProblem { by_col, by_row, labels: data.labels, lambda, col_sqnorms, row_sqnorms })
    }

    /// Number of examples `N`.
    pub fn n(&self) -> usize {
        self.by_row.n_rows()
    }

    /// Number of features `M`.
    pub fn m(&self) -> usize {
        self.by_row.n_cols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    /// Column-major view of `A`.
    pub fn by_col(&self) -> &SparseMatrix<T> {
        &self.by_col
    }

    /// Row-major view of `A`.
    pub fn by_row(&self) -> &SparseMatrix<T> {
        &self.by_row
    }

    /// Number of coordinates a solver of `form` iterates over.
    pub fn n_coords(&self, form: Form) -> usize {
        match form {
            Form::Primal => self.m(),
            Form::Dual => self.n(),
        }
    }

    /// Length of the shared vector for `form`.
    pub fn shared_len(&self, form: Form) -> usize {
        match form {
            Form::Primal => self.n(),
            Form::Dual => self.m(),
        }
    }

    /// The sparse vector a coordinate update walks: column `a_m` for the
    /// primal, row `a_n` for the dual.
    #[inline]
    pub fn coordinate_vector(&self, form: Form, coord: usize) -> (&[usize], &[T]) {
        match form {
            Form::Primal => self.by_col.outer(coord),
            Form::Dual => self.by_row.outer(coord),
        }
    }

    /// Squared norms of all coordinate vectors for `form`.
    pub fn coordinate_sqnorms(&self, form: Form) -> &[f64] {
        match form {
            Form::Primal => &self.col_sqnorms,
            Form::Dual => &self.row_sqnorms,
        }
    }

    pub fn data(&self) -> Dataset<T> {
        Dataset { matrix: self.by_row.clone(), labels: self.labels.clone() }
    }
}
