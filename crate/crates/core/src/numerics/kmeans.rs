//! Lloyd's k-means with k-means++ seeding.

use super::{Matrix, NumericsError, SeededRng};
use crate::scalar::Scalar;

const MAX_LLOYD_ITERS: usize = 100;

/// Clustering result. `objective_history` records the sum of squared
/// distances to assigned centroids after each assignment pass.
#[derive(Debug, Clone)]
pub struct KmeansOutcome<S: Scalar> {
    pub assignments: Vec<usize>,
    pub centroids: Matrix<S>,
    pub objective_history: Vec<S>,
    pub iterations: usize,
}

fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(S::zero(), |acc, v| acc + v)
}

/// Nearest centroid; ties break toward the lowest centroid index.
fn nearest<S: Scalar>(point: &[S], centroids: &Matrix<S>) -> (usize, S) {
    let mut best = 0;
    let mut best_d = sq_dist(point, centroids.row(0));
    for c in 1..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (best, best_d)
}

/// k-means over the rows of `points`. Deterministic given `seed`; every
/// returned cluster is non-empty.
pub fn kmeans<S: Scalar>(
    points: &Matrix<S>,
    k: usize,
    seed: u64,
) -> Result<KmeansOutcome<S>, NumericsError> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(NumericsError::KOutOfRange { k, items: n });
    }
    let mut rng = SeededRng::new(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);

    let mut assignments = vec![usize::MAX; n];
    let mut objective_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..MAX_LLOYD_ITERS {
        iterations += 1;

        // Assignment pass.
        let mut changed = false;
        let mut objective = S::zero();
        for i in 0..n {
            let (c, d) = nearest(points.row(i), &centroids);
            objective += d;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        objective_history.push(objective);
        if !changed {
            break;
        }

        // Update pass.
        let dim = points.cols();
        let mut sums = Matrix::<S>::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for j in 0..dim {
                let v = sums.get(c, j) + points.get(i, j);
                sums.set(c, j, v);
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed the empty cluster from the point farthest from its
                // assigned centroid.
                let far = farthest_point(points, &assignments, &centroids);
                centroids.set_row(c, points.row(far));
                assignments[far] = c;
            } else {
                let inv = S::from_f64_lossy(1.0 / counts[c] as f64);
                for j in 0..dim {
                    centroids.set(c, j, sums.get(c, j) * inv);
                }
            }
        }
    }

    Ok(KmeansOutcome {
        assignments,
        centroids,
        objective_history,
        iterations,
    })
}

fn plus_plus_init<S: Scalar>(points: &Matrix<S>, k: usize, rng: &mut SeededRng) -> Matrix<S> {
    let n = points.rows();
    let dim = points.cols();
    let mut centroids = Matrix::zeros(k, dim);
    let first = rng.next_index(n);
    centroids.set_row(0, points.row(first));

    let mut dists: Vec<S> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().map(|d| d.to_f64_lossy()).sum();
        let pick = if total <= 0.0 {
            // All remaining points coincide with a centroid; any choice works.
            rng.next_index(n)
        } else {
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (i, d) in dists.iter().enumerate() {
                target -= d.to_f64_lossy();
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.set_row(c, points.row(pick));
        for i in 0..n {
            let d = sq_dist(points.row(i), centroids.row(c));
            if d < dists[i] {
                dists[i] = d;
            }
        }
    }
    centroids
}

fn farthest_point<S: Scalar>(
    points: &Matrix<S>,
    assignments: &[usize],
    centroids: &Matrix<S>,
) -> usize {
    let mut best = 0;
    let mut best_d = S::neg_infinity();
    for i in 0..points.rows() {
        let d = sq_dist(points.row(i), centroids.row(assignments[i]));
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    best
}
