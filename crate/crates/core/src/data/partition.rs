use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Assignment of coordinates (features for the primal, examples for the
/// dual) to `k` workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    owner: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from an explicit owner per coordinate.
    pub fn from_assignment(k: usize, owner: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("partition needs at least one worker"));
        }
        let mut blocks = vec![Vec::new(); k];
        for (coord, &w) in owner.iter().enumerate() {
            if w >= k {
                return Err(Error::arg(format!("coordinate {coord} assigned to worker {w} of {k}")));
            }
            blocks[w].push(coord);
        }
        Ok(Partition { owner, blocks })
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, coord: usize) -> usize {
        self.owner[coord]
    }

    /// Coordinates owned by `worker`, in increasing order.
    pub fn block(&self, worker: usize) -> &[usize] {
        &self.blocks[worker]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Random balanced partition: a seeded permutation of `0..count` cut into
/// `k` contiguous blocks whose sizes differ by at most one.
pub fn make_partition(count: usize, k: usize, seed: u64) -> Result<Partition> {
    if k == 0 {
        return Err(Error::arg("partition needs at least one worker"));
    }
    let mut perm: Vec<usize> = (0..count).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut owner = vec![0usize; count];
    let (base, extra) = (count / k, count % k);
    let mut start = 0;
    for w in 0..k {
        let size = base + usize::from(w < extra);
        for &c in &perm[start..start + size] {
            owner[c] = w;
        }
        start += size;
    }
    Partition::from_assignment(k, owner)
}
