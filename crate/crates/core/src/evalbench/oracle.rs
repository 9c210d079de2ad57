//! Offline baselines for the max-min objective.

use itertools::Itertools;
use rayon::prelude::*;

use super::EvalError;
use crate::vecspace::{cosine_distance, Vector};

/// Largest pool the exhaustive oracle will enumerate.
pub const EXHAUSTIVE_MAX_POINTS: usize = 20;

/// A chosen subset (indices into the input, ascending for the exhaustive
/// oracle, selection order for greedy) and its diversity.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub indices: Vec<usize>,
    pub diversity: f64,
}

fn check_k(k: usize, n: usize) -> Result<(), EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::InvalidSubsetSize { k, n });
    }
    Ok(())
}

fn pairwise<P: AsRef<Vector>>(points: &[P]) -> Result<Vec<Vec<f64>>, EvalError> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = cosine_distance(points[i].as_ref(), points[j].as_ref())?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Enumerates every size-`k` subset; ties keep the lexicographically
/// smallest index set.
pub fn exhaustive_max_min<P: AsRef<Vector>>(points: &[P], k: usize) -> Result<Subset, EvalError> {
    let n = points.len();
    if n > EXHAUSTIVE_MAX_POINTS {
        return Err(EvalError::ExhaustiveTooLarge { n });
    }
    check_k(k, n)?;
    let d = pairwise(points)?;
    let mut best = Subset { indices: Vec::new(), diversity: f64::NEG_INFINITY };
    for combo in (0..n).combinations(k) {
        let mut min = f64::INFINITY;
        'scan: for (a, &i) in combo.iter().enumerate() {
            for &j in &combo[a + 1..] {
                min = min.min(d[i][j]);
                if min <= best.diversity {
                    break 'scan;
                }
            }
        }
        if min > best.diversity {
            best = Subset { indices: combo, diversity: min };
        }
    }
    Ok(best)
}

/// Farthest-first traversal: seed with the farthest pair, then keep adding
/// the point whose distance to the chosen set is largest.
pub fn gmm_greedy<P: AsRef<Vector> + Sync>(points: &[P], k: usize) -> Result<Subset, EvalError> {
    let n = points.len();
    check_k(k, n)?;
    let dist = |i: usize, j: usize| cosine_distance(points[i].as_ref(), points[j].as_ref());

    // (distance, i, j): larger distance wins, then smaller pair.
    let pick = |a: (f64, usize, usize), b: (f64, usize, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
            b
        } else {
            a
        }
    };
    let (_, s0, s1) = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, i, i + 1);
            for j in i + 1..n {
                best = pick(best, (dist(i, j)?, i, j));
            }
            Ok(best)
        })
        .try_reduce(|| (f64::NEG_INFINITY, usize::MAX, usize::MAX), |a, b| Ok(pick(a, b)))
        .map_err(EvalError::Vector)?;

    let mut chosen = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    let mut indices = Vec::with_capacity(k);
    for s in [s0, s1] {
        chosen[s] = true;
        indices.push(s);
    }
    for i in 0..n {
        if !chosen[i] {
            nearest[i] = dist(i, s0)?.min(dist(i, s1)?);
        }
    }
    while indices.len() < k {
        let mut next = usize::MAX;
        let mut next_d = f64::NEG_INFINITY;
        for i in (0..n).filter(|&i| !chosen[i]) {
            if nearest[i] > next_d {
                next = i;
                next_d = nearest[i];
            }
        }
        chosen[next] = true;
        indices.push(next);
        for i in 0..n {
            if !chosen[i] {
                nearest[i] = nearest[i].min(dist(i, next)?);
            }
        }
    }
    let subset: Vec<&Vector> = indices.iter().map(|&i| points[i].as_ref()).collect();
    let diversity = crate::engine::diversity(&subset)?;
    Ok(Subset { indices, diversity })
}

/// Reference over achieved, so `>= 1` when the reference is optimal.
/// A zero achieved diversity yields infinity.
pub fn alpha_ratio(reference_diversity: f64, achieved_diversity: f64) -> f64 {
    if achieved_diversity <= 0.0 {
        log::warn!("achieved diversity is {achieved_diversity}: degenerate core-set (duplicates survived)");
        return f64::INFINITY;
    }
    reference_diversity / achieved_diversity
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(degs: &[f64]) -> Vec<Vector> {
        degs.iter().map(|&d| Vector::from_angle_degrees(d)).collect()
    }

    #[test]
    fn exhaustive_examples() {
        let pts = circle(&[0.0, 10.0, 90.0, 180.0]);
        let s = exhaustive_max_min(&pts, 2).unwrap();
        assert_eq!(s.indices, vec![0, 3]);
        assert_eq!(s.diversity, 2.0);

        let s = exhaustive_max_min(&pts, 3).unwrap();
        assert_eq!(s.indices, vec![0, 2, 3]);
        assert!((s.diversity - 1.0).abs() < 1e-12);

        let s = exhaustive_max_min(&pts, 4).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2, 3]);
        assert_eq!(s.diversity, crate::engine::diversity(&pts).unwrap());
    }

    #[test]
    fn exhaustive_guard() {
        let pts: Vec<_> = (0..21).map(|i| Vector::from_angle_degrees(i as f64)).collect();
        assert!(matches!(exhaustive_max_min(&pts, 2), Err(EvalError::ExhaustiveTooLarge { n: 21 })));
        assert!(matches!(
            exhaustive_max_min(&pts[..5], 6),
            Err(EvalError::InvalidSubsetSize { k: 6, n: 5 })
        ));
        assert!(exhaustive_max_min(&pts[..5], 1).is_err());
    }

    #[test]
    fn greedy_trace() {
        let pts = circle(&[0.0, 10.0, 90.0, 180.0]);
        let s = gmm_greedy(&pts, 3).unwrap();
        assert_eq!(s.indices, vec![0, 3, 2]);
        assert!((s.diversity - 1.0).abs() < 1e-12);
        assert!(matches!(gmm_greedy(&pts, 5), Err(EvalError::InvalidSubsetSize { .. })));
    }

    #[test]
    fn greedy_half_approximation_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let pts: Vec<_> = (0..15)
                .map(|_| Vector::new((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
                .collect();
            let opt = exhaustive_max_min(&pts, 4).unwrap().diversity;
            let greedy = gmm_greedy(&pts, 4).unwrap().diversity;
            // Holds for these instances; not guaranteed in general because
            // cosine distance violates the triangle inequality.
            assert!(greedy >= 0.5 * opt, "{greedy} < {opt}/2");
            assert!(greedy <= opt + 1e-12);
            assert_eq!(gmm_greedy(&pts, 2).unwrap().diversity, exhaustive_max_min(&pts, 2).unwrap().diversity);
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_ratio(1.3, 1.3), 1.0);
        assert_eq!(alpha_ratio(2.0, 1.0), 2.0);
        assert_eq!(alpha_ratio(2.0, 0.0), f64::INFINITY);
    }
}
