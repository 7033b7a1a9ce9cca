use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The coordinate order for one epoch.
///
/// A seeded Fisher-Yates shuffle whose random stream is derived from
/// `(seed, stream, epoch)`, so any epoch can be regenerated on its own.
/// `stream` separates independent consumers of the same seed (distributed
/// workers use their worker id); the sequential solver uses stream 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochPlan {
    pub permutation: Vec<usize>,
    pub seed: u64,
    pub epoch: u64,
    pub stream: u64,
}

impl EpochPlan {
    /// Shuffles `0..count`.
    pub fn full(count: usize, seed: u64, epoch: u64) -> Self {
        let coords: Vec<usize> = (0..count).collect();
        Self::over(&coords, seed, epoch, 0)
    }

    /// Shuffles the given coordinates.
    pub fn over(coords: &[usize], seed: u64, epoch: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((stream << 32) ^ epoch);
        let mut permutation = coords.to_vec();
        permutation.shuffle(&mut rng);
        EpochPlan { permutation, seed, epoch, stream }
    }
}
