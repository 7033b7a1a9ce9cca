use crate::{Error, Real, Result};

/// Compressed storage layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StorageOrder {
    /// Compressed sparse row: one outer slot per row.
    Csr,
    /// Compressed sparse column: one outer slot per column.
    Csc,
}

impl StorageOrder {
    pub fn flipped(self) -> Self {
        match self {
            StorageOrder::Csr => StorageOrder::Csc,
            StorageOrder::Csc => StorageOrder::Csr,
        }
    }
}

/// Which direction to reduce over in [`SparseMatrix::squared_norms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// A sparse matrix in CSR or CSC layout.
///
/// The outer dimension is rows for [`StorageOrder::Csr`] and columns for
/// [`StorageOrder::Csc`]. Inner indices are strictly increasing inside each
/// outer slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    order: StorageOrder,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    /// Builds a matrix from raw compressed arrays, checking every structural
    /// invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        order: StorageOrder,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let (outer, inner) = match order {
            StorageOrder::Csr => (n_rows, n_cols),
            StorageOrder::Csc => (n_cols, n_rows),
        };
        if offsets.len() != outer + 1 {
            return Err(Error::Matrix(format!("expected {} offsets, got {}", outer + 1, offsets.len())));
        }
        if offsets[0] != 0 {
            return Err(Error::Matrix("first offset must be 0".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::Matrix(format!("{} indices but {} values", indices.len(), values.len())));
        }
        if offsets[outer] != indices.len() {
            return Err(Error::Matrix(format!(
                "final offset {} does not match {} stored entries",
                offsets[outer],
                indices.len()
            )));
        }
        for slot in 0..outer {
            let (lo, hi) = (offsets[slot], offsets[slot + 1]);
            if lo > hi {
                return Err(Error::Matrix(format!("offsets decrease at slot {slot}")));
            }
            let idx = &indices[lo..hi];
            if idx.iter().any(|&i| i >= inner) {
                return Err(Error::Matrix(format!("index out of range in slot {slot}")));
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Matrix(format!("indices not strictly increasing in slot {slot}")));
            }
        }
        Ok(SparseMatrix { n_rows, n_cols, order, offsets, indices, values })
    }

    /// Empty matrix with the given shape.
    pub fn zeros(n_rows: usize, n_cols: usize, order: StorageOrder) -> Self {
        let outer = match order {
            StorageOrder::Csr => n_rows,
            StorageOrder::Csc => n_cols,
        };
        SparseMatrix { n_rows, n_cols, order, offsets: vec![0; outer + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are rejected; explicit zeros are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        order: StorageOrder,
        triplets: &[(usize, usize, T)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets
            .iter()
            .map(|&(r, c, v)| match order {
                StorageOrder::Csr => (r, c, v),
                StorageOrder::Csc => (c, r, v),
            })
            .collect();
        let outer = match order {
            StorageOrder::Csr => n_rows,
            StorageOrder::Csc => n_cols,
        };
        if let Some(&(o, _, _)) = entries.iter().find(|e| e.0 >= outer) {
            return Err(Error::Matrix(format!("outer index {o} out of range")));
        }
        entries.sort_by_key(|&(o, i, _)| (o, i));
        let mut offsets = vec![0usize; outer + 1];
        for &(o, _, _) in &entries {
            offsets[o + 1] += 1;
        }
        for slot in 0..outer {
            offsets[slot + 1] += offsets[slot];
        }
        let indices = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Self::new(n_rows, n_cols, order, offsets, indices, values)
    }

    /// Builds a matrix from a dense row-major array, skipping zeros.
    pub fn from_dense(rows: &[Vec<T>], n_cols: usize, order: StorageOrder) -> Result<Self> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Matrix(format!("row {r} has {} entries", row.len())));
            }
            for (c, &v) in row.iter().enumerate() {
                if v != T::ZERO {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, order, &triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn order(&self) -> StorageOrder {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of outer slots (rows for CSR, columns for CSC).
    pub fn outer_len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Inner indices and values of one outer slot.
    #[inline]
    pub fn outer(&self, slot: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.offsets[slot], self.offsets[slot + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let (slot, inner) = match self.order {
            StorageOrder::Csr => (row, col),
            StorageOrder::Csc => (col, row),
        };
        let (idx, vals) = self.outer(slot);
        match idx.binary_search(&inner) {
            Ok(p) => vals[p],
            Err(_) => T::ZERO,
        }
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.outer_len()).flat_map(move |slot| {
            let (idx, vals) = self.outer(slot);
            idx.iter().zip(vals).map(move |(&i, &v)| match self.order {
                StorageOrder::Csr => (slot, i, v),
                StorageOrder::Csc => (i, slot, v),
            })
        })
    }

    /// Same matrix, other storage order. Every entry `(i, j, v)` is kept.
    pub fn flip_storage(&self) -> Self {
        let inner = match self.order {
            StorageOrder::Csr => self.n_cols,
            StorageOrder::Csc => self.n_rows,
        };
        let mut offsets = vec![0usize; inner + 1];
        for &i in &self.indices {
            offsets[i + 1] += 1;
        }
        for k in 0..inner {
            offsets[k + 1] += offsets[k];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![T::ZERO; self.nnz()];
        // Walking outer slots in order keeps the new inner indices sorted.
        for slot in 0..self.outer_len() {
            let (idx, vals) = self.outer(slot);
            for (&i, &v) in idx.iter().zip(vals) {
                let pos = cursor[i];
                indices[pos] = slot;
                values[pos] = v;
                cursor[i] += 1;
            }
        }
        SparseMatrix { n_rows: self.n_rows, n_cols: self.n_cols, order: self.order.flipped(), offsets, indices, values }
    }

    /// Converts to the requested storage order, cloning if already there.
    pub fn to_order(&self, order: StorageOrder) -> Self {
        if self.order == order {
            self.clone()
        } else {
            self.flip_storage()
        }
    }

    /// The transposed matrix `A^T`. Reuses the compressed arrays: the CSR
    /// arrays of `A` are the CSC arrays of `A^T`.
    pub fn transpose(self) -> Self {
        SparseMatrix { n_rows: self.n_cols, n_cols: self.n_rows, order: self.order.flipped(), ..self }
    }

    /// Per-row or per-column sums of squared values, in `f64`.
    pub fn squared_norms(&self, axis: Axis) -> Vec<f64> {
        let along_outer =
            matches!((self.order, axis), (StorageOrder::Csr, Axis::Rows) | (StorageOrder::Csc, Axis::Cols));
        if along_outer {
            (0..self.outer_len()).map(|slot| self.outer(slot).1.iter().map(|v| v.to_f64() * v.to_f64()).sum()).collect()
        } else {
            let len = match axis {
                Axis::Rows => self.n_rows,
                Axis::Cols => self.n_cols,
            };
            let mut out = vec![0.0; len];
            for (&i, v) in self.indices.iter().zip(&self.values) {
                out[i] += v.to_f64() * v.to_f64();
            }
            out
        }
    }

    /// `A x` accumulated in `f64`.
    pub fn mul_vec<X: Real>(&self, x: &[X]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "mul_vec length mismatch");
        let mut out = vec![0.0; self.n_rows];
        self.accumulate(x, &mut out, false);
        out
    }

    /// `A^T x` accumulated in `f64`.
    pub fn tmul_vec<X: Real>(&self, x: &[X]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows, "tmul_vec length mismatch");
        let mut out = vec![0.0; self.n_cols];
        self.accumulate(x, &mut out, true);
        out
    }

    fn accumulate<X: Real>(&self, x: &[X], out: &mut [f64], transposed: bool) {
        // Gather when the outer slots index `out`, scatter otherwise.
        let gather = matches!((self.order, transposed), (StorageOrder::Csr, false) | (StorageOrder::Csc, true));
        for slot in 0..self.outer_len() {
            let (idx, vals) = self.outer(slot);
            if gather {
                out[slot] = idx.iter().zip(vals).map(|(&i, v)| v.to_f64() * x[i].to_f64()).sum();
            } else {
                let xs = x[slot].to_f64();
                if xs != 0.0 {
                    for (&i, v) in idx.iter().zip(vals) {
                        out[i] += v.to_f64() * xs;
                    }
                }
            }
        }
    }

    /// Dense row-major copy; intended for small test oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v.to_f64();
        }
        out
    }

    /// Converts the stored values to another precision.
    pub fn cast<U: Real>(&self) -> SparseMatrix<U> {
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            order: self.order,
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    /// Keeps only the listed outer slots, in the given order, and renumbers
    /// them `0..keep.len()`.
    pub fn select_outer(&self, keep: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(keep.len() + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &slot in keep {
            let (idx, vals) = self.outer(slot);
            indices.extend_from_slice(idx);
            values.extend_from_slice(vals);
            offsets.push(indices.len());
        }
        let (n_rows, n_cols) = match self.order {
            StorageOrder::Csr => (keep.len(), self.n_cols),
            StorageOrder::Csc => (self.n_rows, keep.len()),
        };
        SparseMatrix { n_rows, n_cols, order: self.order, offsets, indices, values }
    }
}
