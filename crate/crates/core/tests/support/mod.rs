//! Brute-force reference implementations, written independently of the
//! library code paths they check.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Sorts every stored point by (distance, position) and counts the first
/// `k` whose label differs from `y`.
pub fn knn_score(points: &[Vec<f64>], labels: &[usize], k: usize, v: &[f64], y: usize) -> usize {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (sq_dist(p, v), i)).collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all[..k].iter().filter(|(_, i)| labels[*i] != y).count()
}

/// p-value numerators by direct recount.
pub fn p_value_counts(calibration_scores: &[usize], test_scores: &[usize]) -> Vec<usize> {
    test_scores
        .iter()
        .map(|&s| calibration_scores.iter().filter(|&&a| a >= s).count())
        .collect()
}

/// Tries every distinct p-value (and zero) as a threshold, smallest first,
/// returning the first that leaves no multi-label set.
pub fn select_epsilon_scan(vectors: &[Vec<f64>]) -> f64 {
    let mut candidates: Vec<f64> = vectors.iter().flatten().copied().collect();
    candidates.push(0.0);
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    for c in candidates {
        if vectors.iter().all(|p| p.iter().filter(|&&x| x > c).count() <= 1) {
            return c;
        }
    }
    1.0
}

/// Exhaustive O(n^3) enumeration of batch-hard triplets.
pub fn mine_exhaustive(points: &[Vec<f64>], labels: &[usize]) -> Vec<(usize, usize, usize)> {
    let n = points.len();
    let d = |i: usize, j: usize| sq_dist(&points[i], &points[j]).sqrt();
    let mut out = Vec::new();
    for a in 0..n {
        for p in 0..n {
            if p == a || labels[p] != labels[a] {
                continue;
            }
            // p must be the first position attaining the largest distance.
            let hardest = (0..n)
                .filter(|&q| q != a && labels[q] == labels[a])
                .all(|q| d(a, q) < d(a, p) || (d(a, q) == d(a, p) && q >= p));
            if !hardest {
                continue;
            }
            for neg in 0..n {
                if labels[neg] != labels[a] && d(a, neg) < d(a, p) {
                    out.push((a, p, neg));
                }
            }
        }
    }
    out.sort();
    out
}

/// Random point: continuous, or on a small integer grid to force ties.
pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, grid: bool) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            if grid {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}
