//! Seeded K-means (k-means++ init, Lloyd iterations, Euclidean distance).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hash::splitmix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Independent k-means++ restarts; the lowest objective wins.
    pub n_init: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iter: 100,
            n_init: 10,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `k` centroids; empty clusters hold the zero vector.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub sizes: Vec<usize>,
    pub objective: f64,
    /// Objective after each assignment step of the winning run.
    pub history: Vec<f64>,
    pub converged: bool,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn objective(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        sizes[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    for (s, &n) in sums.iter_mut().zip(&sizes) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    (sums, sizes)
}

pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<Clustering> {
    if points.is_empty() {
        return Err(Error::InvalidInput("k-means needs at least one point".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points have mixed dimensions".into()));
    }

    // With no more distinct points than clusters, each distinct point is its
    // own cluster and the rest stay empty.
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    let mut group_of = Vec::with_capacity(points.len());
    for p in points {
        let g = match distinct.iter().position(|d| *d == p) {
            Some(g) => g,
            None => {
                distinct.push(p);
                distinct.len() - 1
            }
        };
        group_of.push(g);
        if distinct.len() > config.k {
            break;
        }
    }
    if distinct.len() <= config.k {
        let (centroids, sizes) = means(points, &group_of, config.k, dim);
        return Ok(Clustering {
            centroids,
            assignments: group_of,
            sizes,
            objective: 0.0,
            history: vec![0.0],
            converged: true,
        });
    }

    let mut best: Option<Clustering> = None;
    let mut state = config.seed;
    for _ in 0..config.n_init.max(1) {
        let run = lloyd(points, config, splitmix64(&mut state));
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one run"))
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &points[pick]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], config: &KMeansConfig, seed: u64) -> Clustering {
    let k = config.k;
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iter {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        history.push(objective(points, &centroids, &next));
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;

        let mut sizes = vec![0usize; k];
        assignments.iter().for_each(|&a| sizes[a] += 1);
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            // farthest point from its own centroid, taken from a cluster that can spare it
            let far = (0..points.len())
                .filter(|&i| sizes[assignments[i]] > 1)
                .map(|i| (i, squared_distance(&points[i], &centroids[assignments[i]])))
                .fold(None::<(usize, f64)>, |acc, (i, d)| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                sizes[assignments[i]] -= 1;
                assignments[i] = empty;
                sizes[empty] = 1;
            }
        }
        let (means, sizes) = means(points, &assignments, k, dim);
        for (c, (m, n)) in centroids.iter_mut().zip(means.into_iter().zip(sizes)) {
            if n > 0 {
                *c = m;
            }
        }
    }

    let (means, sizes) = means(points, &assignments, k, dim);
    if converged {
        centroids = means;
    }
    let objective = objective(points, &centroids, &assignments);
    Clustering {
        centroids,
        assignments,
        sizes,
        objective,
        history,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![vec![1.0, 2.0]; 6];
        let c = kmeans(&pts, &KMeansConfig::new(4, 0)).unwrap();
        assert_eq!(c.sizes, vec![6, 0, 0, 0]);
        assert_eq!(c.centroids[0], vec![1.0, 2.0]);
        assert_eq!(c.centroids[1], vec![0.0, 0.0]);
    }

    #[test]
    fn fewer_points_than_k_are_singletons() {
        let pts = vec![vec![0.0], vec![5.0]];
        let c = kmeans(&pts, &KMeansConfig::new(4, 3)).unwrap();
        assert_eq!(c.sizes, vec![1, 1, 0, 0]);
        assert_eq!(c.assignments, vec![0, 1]);
    }

    #[test]
    fn separates_obvious_groups() {
        let mut pts = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.01;
            pts.push(vec![0.0 + e, 0.0]);
            pts.push(vec![10.0 + e, 10.0]);
        }
        let c = kmeans(&pts, &KMeansConfig::new(2, 9)).unwrap();
        assert!(c.converged);
        assert_eq!(c.sizes.iter().sum::<usize>(), 20);
        assert_eq!(c.sizes, vec![10, 10]);
        for pair in c.assignments.chunks(2) {
            assert_ne!(pair[0], pair[1]);
        }
    }

    #[test]
    fn objective_history_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let pts: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
                .collect();
            let c = kmeans(&pts, &KMeansConfig::new(4, seed)).unwrap();
            for w in c.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", c.history);
            }
            assert!(c.sizes.iter().all(|&s| s > 0));
        }
    }

    #[test]
    fn same_seed_same_result() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 11) as f64, (i % 5) as f64]).collect();
        let a = kmeans(&pts, &KMeansConfig::new(3, 42)).unwrap();
        let b = kmeans(&pts, &KMeansConfig::new(3, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kmeans(&[], &KMeansConfig::new(2, 0)).is_err());
        assert!(kmeans(&[vec![1.0]], &KMeansConfig::new(0, 0)).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], &KMeansConfig::new(1, 0)).is_err());
    }
}
