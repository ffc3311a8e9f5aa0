//! Synthetic key streams.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::RngCore;

use crate::{rng_from_seed, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GenKind {
    Uniform,
    Sorted,
    Reverse,
    Permutation,
    TreeInstance,
}

impl GenKind {
    pub const ALL: [GenKind; 5] = [
        GenKind::Uniform,
        GenKind::Sorted,
        GenKind::Reverse,
        GenKind::Permutation,
        GenKind::TreeInstance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Uniform => "uniform",
            GenKind::Sorted => "sorted",
            GenKind::Reverse => "reverse",
            GenKind::Permutation => "permutation",
            GenKind::TreeInstance => "tree_instance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

/// Shape of the tree instance. `None` picks the defaults:
/// `batch = ceil(n^0.1)` and `pauses = min(100, n)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeParams {
    pub batch: Option<usize>,
    pub pauses: Option<usize>,
}

/// Bits of a tree-instance key below its band number.
pub const BAND_SHIFT: u32 = 40;

pub fn band_of(key: u64) -> u64 {
    key >> BAND_SHIFT
}

pub fn gen_stream(kind: GenKind, n: usize, seed: u64, tree: TreeParams) -> Result<Vec<u64>> {
    let mut rng = rng_from_seed(seed);
    Ok(match kind {
        GenKind::Uniform => (0..n).map(|_| rng.next_u64()).collect(),
        GenKind::Sorted => (0..n as u64).collect(),
        GenKind::Reverse => (0..n as u64).rev().collect(),
        GenKind::Permutation => {
            let mut v: Vec<u64> = (0..n as u64).collect();
            v.shuffle(&mut rng);
            v
        }
        GenKind::TreeInstance => tree_instance(n, &mut rng, tree)?,
    })
}

fn default_batch(n: usize) -> usize {
    (libm::ceil(libm::pow(n.max(1) as f64, 0.1)) as usize).max(1)
}

struct Tree<'a> {
    batch: usize,
    pauses: usize,
    depth: u64,
    rng: &'a mut Rng,
    out: Vec<u64>,
    n: usize,
}

impl Tree<'_> {
    fn key(&mut self, band: u64) -> u64 {
        (band << BAND_SHIFT) | (self.rng.next_u64() >> (64 - BAND_SHIFT))
    }

    /// Inserts `batch` keys of `band`; at each of `pauses` random points a
    /// subtree of the next band runs first.
    fn node(&mut self, band: u64) {
        let mut at: Vec<usize> = if band < self.depth {
            (0..self.pauses)
                .map(|_| (self.rng.next_u64() % (self.batch as u64 + 1)) as usize)
                .collect()
        } else {
            Vec::new()
        };
        at.sort_unstable();
        let mut next = 0;
        for pos in 0..=self.batch {
            while next < at.len() && at[next] == pos {
                next += 1;
                self.node(band + 1);
                if self.out.len() >= self.n {
                    return;
                }
            }
            if pos < self.batch {
                let k = self.key(band);
                self.out.push(k);
                if self.out.len() >= self.n {
                    return;
                }
            }
        }
    }
}

/// Keys of band `b` all lie in `[b 2^40, (b+1) 2^40)`. Band `b` is visited
/// only while band `b-1` is paused, so deeper bands hold more keys and
/// larger ranks.
fn tree_instance(n: usize, rng: &mut Rng, p: TreeParams) -> Result<Vec<u64>> {
    let batch = p.batch.unwrap_or_else(|| default_batch(n));
    let pauses = p.pauses.unwrap_or(100).min(n);
    if batch == 0 {
        return Err(Error::InvalidParameter("tree batch must be positive"));
    }
    // Largest depth whose tree fits in n; whole trees repeat to fill n.
    let mut depth = 0u64;
    let mut size = batch as u128;
    while pauses > 0 && depth < 60 {
        let next = batch as u128 + pauses as u128 * size;
        if next > n as u128 {
            break;
        }
        size = next;
        depth += 1;
    }
    let mut t = Tree {
        batch,
        pauses,
        depth,
        rng,
        out: Vec::with_capacity(n),
        n,
    };
    while t.out.len() < n {
        t.node(0);
    }
    Ok(t.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_kinds() {
        assert_eq!(gen_stream(GenKind::Sorted, 5, 0, TreeParams::default()).unwrap(), [0, 1, 2, 3, 4]);
        assert_eq!(gen_stream(GenKind::Reverse, 3, 0, TreeParams::default()).unwrap(), [2, 1, 0]);
        let a = gen_stream(GenKind::Uniform, 100, 9, TreeParams::default()).unwrap();
        let b = gen_stream(GenKind::Uniform, 100, 9, TreeParams::default()).unwrap();
        assert_eq!(a, b);
        let mut p = gen_stream(GenKind::Permutation, 50, 1, TreeParams::default()).unwrap();
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<u64>>());
    }

    #[test]
    fn tree_instance_shape() {
        let v = gen_stream(GenKind::TreeInstance, 100_000, 3, TreeParams::default()).unwrap();
        assert_eq!(v.len(), 100_000);
        let mut bands: Vec<u64> = v.iter().map(|k| band_of(*k)).collect();
        bands.sort_unstable();
        bands.dedup();
        assert_eq!(bands, [0, 1, 2]);
    }
}
