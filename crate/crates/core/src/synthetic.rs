//! Seeded synthetic embedding datasets for tests, benches and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::vecspace::Vector;

/// Uniformly distributed directions on the unit sphere in `dim` dimensions.
pub fn unit_sphere(n: usize, dim: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let raw: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break Vector::new(raw.into_iter().map(|x| x / norm).collect()).expect("normalized");
            }
        })
        .collect()
}

/// Nonnegative clustered vectors, loosely shaped like pooled CNN features:
/// `|center + noise|` around `clusters` random centers.
pub fn clustered(n: usize, dim: usize, clusters: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..clusters.max(1))
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..2.0)).collect())
        .collect();
    (0..n)
        .map(|_| loop {
            let c = &centers[rng.gen_range(0..centers.len())];
            let raw: Vec<f64> = c.iter().map(|&m| (m + 0.5 * rng.sample::<f64, _>(StandardNormal)).abs()).collect();
            if let Ok(v) = Vector::new(raw) {
                break v;
            }
        })
        .collect()
}
