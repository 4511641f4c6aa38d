//! Coordinate-block partitioning: each worker owns one contiguous block.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Disjoint contiguous blocks covering `0..d`, one per worker. Sizes differ
/// by at most one; the remainder goes to the earliest blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    d: usize,
    bounds: Vec<usize>, // length W+1, bounds[0] = 0, bounds[W] = d
}

pub fn partition_blocks(d: usize, workers: usize) -> Result<BlockPartition> {
    if d == 0 || workers == 0 {
        return Err(Error::Config(format!(
            "need d >= 1 and workers >= 1, got d={d}, workers={workers}"
        )));
    }
    if workers > d {
        return Err(Error::Config(format!(
            "cannot assign {workers} workers to {d} coordinates"
        )));
    }
    let base = d / workers;
    let rem = d % workers;
    let mut bounds = Vec::with_capacity(workers + 1);
    let mut at = 0;
    bounds.push(0);
    for i in 0..workers {
        at += base + usize::from(i < rem);
        bounds.push(at);
    }
    debug_assert_eq!(at, d);
    Ok(BlockPartition { d, bounds })
}

impl BlockPartition {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_blocks(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_blocks()).map(|i| self.block(i))
    }

    /// Block index owning coordinate `c`.
    pub fn owner(&self, c: usize) -> usize {
        debug_assert!(c < self.d);
        match self.bounds.binary_search(&c) {
            Ok(i) if i == self.num_blocks() => i - 1,
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }
}
