use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, SparseMatrix, StorageOrder};
use crate::{Error, Real, Result};

/// Parameters of a planted sparse regression problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Probability that any given entry is stored.
    pub density: f64,
    pub noise_std: f64,
    pub seed: u64,
}

/// Draws a sparse matrix with i.i.d. Bernoulli(`density`) support and
/// standard normal values, a standard normal planted weight vector, and
/// labels `y = A beta + noise`.
///
/// Returns the dataset and the planted weights.
pub fn generate_synthetic<T: Real>(spec: &SyntheticSpec) -> Result<(Dataset<T>, Vec<f64>)> {
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::arg(format!("density {} not in (0, 1]", spec.density)));
    }
    if !(spec.noise_std >= 0.0) {
        return Err(Error::arg(format!("noise_std {} is negative", spec.noise_std)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let planted: Vec<f64> = (0..spec.n_cols).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut offsets = Vec::with_capacity(spec.n_rows + 1);
    offsets.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let mut dot = 0.0;
        for col in 0..spec.n_cols {
            if spec.density >= 1.0 || rng.random::<f64>() < spec.density {
                let v = T::from_f64(StandardNormal.sample(&mut rng));
                dot += v.to_f64() * planted[col];
                indices.push(col);
                values.push(v);
            }
        }
        offsets.push(indices.len());
        let noise: f64 = if spec.noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.noise_std * z
        } else {
            0.0
        };
        labels.push(T::from_f64(dot + noise));
    }
    let matrix = SparseMatrix::new(spec.n_rows, spec.n_cols, StorageOrder::Csr, offsets, indices, values)?;
    Ok((Dataset::new(matrix, labels)?, planted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, m: usize, density: f64, noise_std: f64) -> SyntheticSpec {
        SyntheticSpec { n_rows: n, n_cols: m, density, noise_std, seed: 42 }
    }

    #[test]
    fn noiseless_dense_labels_are_exact() {
        let (d, planted) = generate_synthetic::<f64>(&spec(30, 8, 1.0, 0.0)).unwrap();
        assert_eq!(d.matrix.nnz(), 240);
        let ab = d.matrix.mul_vec(&planted);
        for (y, v) in d.labels.iter().zip(&ab) {
            assert!((y - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn deterministic_from_seed() {
        let a = generate_synthetic::<f32>(&spec(40, 10, 0.3, 0.1)).unwrap();
        let b = generate_synthetic::<f32>(&spec(40, 10, 0.3, 0.1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_concentrates() {
        // nnz ~ Binomial(10000, 0.1): mean 1000, sd 30; the 20% band is > 6 sd.
        let (d, _) = generate_synthetic::<f64>(&spec(200, 50, 0.1, 0.0)).unwrap();
        let nnz = d.matrix.nnz() as f64;
        assert!((nnz - 1000.0).abs() <= 200.0, "nnz = {nnz}");
    }

    #[test]
    fn rejects_bad_density() {
        assert!(generate_synthetic::<f64>(&spec(2, 2, 0.0, 0.0)).is_err());
        assert!(generate_synthetic::<f64>(&spec(2, 2, 1.5, 0.0)).is_err());
    }
}
