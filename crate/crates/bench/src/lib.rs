//! Fixtures shared by the benchmarks.

use divcore::engine::{LabeledPoint, PointId};
use divcore::synthetic;
use divcore::Vector;

pub const BENCH_DIM: usize = 64;

/// `n` labeled points from one stream, ids `0..n`.
pub fn labeled(n: usize, seed: u64) -> Vec<LabeledPoint> {
    synthetic::clustered(n, BENCH_DIM, 10, seed)
        .into_iter()
        .enumerate()
        .map(|(i, v)| LabeledPoint::new(PointId(i as u64), 0, i as u64, v))
        .collect()
}

pub fn dataset(n: usize, seed: u64) -> Vec<Vector> {
    synthetic::clustered(n, BENCH_DIM, 10, seed)
}
