//! Sharded execution of Monte Carlo replicates.
//!
//! Replicates are grouped into fixed-size blocks and block `b` always draws
//! from `stream.child(b)`. Shards only decide which worker runs which blocks,
//! so the output is bit-identical for any shard count and for sequential vs
//! parallel execution.

use std::ops::Range;

use crate::rng::RngStream;

/// Replicates per random block.
pub const BLOCK: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exec {
    shards: usize,
    parallel: bool,
}

impl Default for Exec {
    fn default() -> Self {
        Self::parallel(default_shards())
    }
}

fn default_shards() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl Exec {
    pub fn sequential() -> Self {
        Self {
            shards: 1,
            parallel: false,
        }
    }

    /// Parallel over `shards` workers; falls back to in-order execution when
    /// the crate is built without the `parallel` feature.
    pub fn parallel(shards: usize) -> Self {
        Self {
            shards: shards.max(1),
            parallel: cfg!(feature = "parallel"),
        }
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel && self.shards > 1
    }

    /// Run `body` once per replicate, returning results in replicate order.
    ///
    /// `body` receives the replicate index and the block's stream; replicates
    /// inside a block share the stream sequentially.
    pub fn replicate<T, F>(&self, stream: &RngStream, reps: usize, body: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut RngStream) -> T + Sync,
    {
        self.run_blocks(stream, reps, |range, rng| range.map(|i| body(i, rng)).collect::<Vec<T>>())
            .into_iter()
            .flatten()
            .collect()
    }

    /// Run `body` once per block of replicate indices; results come back in
    /// block order.
    pub fn run_blocks<T, F>(&self, stream: &RngStream, reps: usize, body: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>, &mut RngStream) -> T + Sync,
    {
        let blocks = reps.div_ceil(BLOCK);
        self.map_indices(blocks, |b| {
            let mut rng = stream.child(b as u64);
            let lo = b * BLOCK;
            body(lo..(lo + BLOCK).min(reps), &mut rng)
        })
    }

    /// Evaluate `f(0..count)` across shards, preserving index order.
    pub fn map_indices<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        if !self.is_parallel() || count <= 1 {
            return (0..count).map(f).collect();
        }
        self.map_parallel(count, f)
    }

    #[cfg(feature = "parallel")]
    fn map_parallel<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        use rayon::prelude::*;
        let per_shard = count.div_ceil(self.shards);
        let chunks: Vec<Vec<T>> = (0..self.shards)
            .into_par_iter()
            .map(|s| {
                let lo = (s * per_shard).min(count);
                let hi = (lo + per_shard).min(count);
                (lo..hi).map(&f).collect()
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn map_parallel<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..count).map(f).collect()
    }
}
