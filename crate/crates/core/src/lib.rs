//! Relative-error streaming quantile sketch.
//!
//! The sketch answers rank queries with error proportional to the rank of
//! the query. It is built from three layers: [`compactor::ElasticCompactor`]
//! (a resizable sorted block array), [`hierarchy::Hierarchy`] (a sampler
//! feeding a chain of compactors and a buffer), and
//! [`sketch::RelativeSketch`], which routes keys to per-scale
//! [`subsketch::SubSketch`]es whose space is set online by
//! [`allocator::Allocator`].
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod allocator;
pub mod compactor;
mod error;
pub mod eval;
pub mod frac;
pub mod hierarchy;
pub mod params;
pub mod sketch;
pub mod subsketch;

pub use error::{Error, Result};
pub use params::{Mode, Params};
pub use sketch::{RelativeSketch, SketchConfig};

/// Seedable generator used for every coin flip in the crate.
pub type Rng = rand_pcg::Pcg64Mcg;

pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// `2^-e` as a float, flushing to zero once it underflows.
pub(crate) fn pow2_neg(e: u64) -> f64 {
    if e > 1100 {
        0.0
    } else {
        libm::exp2(-(e as f64))
    }
}
