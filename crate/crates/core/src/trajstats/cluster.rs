use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Structure, Trajectory, Vec3};

pub const MAX_ITERATIONS: usize = 300;
/// Largest number of frames the silhouette is computed over.
pub const SILHOUETTE_SAMPLE: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Structure>,
    /// Within-cluster sum of squared distances (Å²).
    pub inertia: f64,
    /// Mean silhouette; 0 when k = 1.
    pub silhouette: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = dist2(x, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

// k-means++: first centre uniform, then proportional to squared distance.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // Fewer distinct points than k: take unused indices in order.
            (0..points.len()).find(|i| !chosen.contains(i)).expect("k <= F")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[next]));
        }
    }
    chosen.iter().map(|i| points[*i].clone()).collect()
}

fn means(points: &[Vec<f64>], assignments: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, a) in points.iter().zip(assignments) {
        counts[*a] += 1;
        sums[*a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, n), o)| if n == 0 { o.clone() } else { s.into_iter().map(|x| x / n as f64).collect() })
        .collect()
}

pub(crate) fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> Result<(Vec<usize>, Vec<Vec<f64>>, Vec<f64>, usize)> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!("k = {k} must be in 1..={}", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let pairs: Vec<(usize, f64)> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let next: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        history.push(pairs.iter().map(|p| p.1).sum());
        let stable = next == assignments;
        assignments = next;
        centroids = means(points, &assignments, &centroids);
        if stable {
            break;
        }
    }
    Ok((assignments, centroids, history, iterations))
}

fn flatten_all(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.frames().iter().map(|f| f.flatten()).collect()
}

fn sample_indices(n: usize, seed: u64) -> Vec<usize> {
    if n <= SILHOUETTE_SAMPLE {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5111_0E77);
    let mut idx = sample(&mut rng, n, SILHOUETTE_SAMPLE).into_vec();
    idx.sort_unstable();
    idx
}

// Pairwise distances between sampled points, reused across k.
struct SampleDistances {
    idx: Vec<usize>,
    d: Vec<f64>,
}

impl SampleDistances {
    fn new(points: &[Vec<f64>], seed: u64) -> SampleDistances {
        let idx = sample_indices(points.len(), seed);
        let m = idx.len();
        let mut d = vec![0.0; m * m];
        for a in 0..m {
            for b in a + 1..m {
                let v = dist2(&points[idx[a]], &points[idx[b]]).sqrt();
                d[a * m + b] = v;
                d[b * m + a] = v;
            }
        }
        SampleDistances { idx, d }
    }

    fn silhouette(&self, assignments: &[usize], k: usize) -> f64 {
        if k < 2 {
            return 0.0;
        }
        let m = self.idx.len();
        let labels: Vec<usize> = self.idx.iter().map(|i| assignments[*i]).collect();
        let mut total = 0.0;
        for a in 0..m {
            let mut sums = vec![0.0; k];
            let mut counts = vec![0usize; k];
            for b in 0..m {
                if a != b {
                    sums[labels[b]] += self.d[a * m + b];
                    counts[labels[b]] += 1;
                }
            }
            let own = labels[a];
            if counts[own] == 0 {
                continue;
            }
            let intra = sums[own] / counts[own] as f64;
            let other = (0..k)
                .filter(|c| *c != own && counts[*c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if other.is_finite() {
                let denom = intra.max(other);
                if denom > 0.0 {
                    total += (other - intra) / denom;
                }
            }
        }
        total / m as f64
    }
}

/// Mean silhouette over all frames (no subsampling).
pub fn silhouette(traj: &Trajectory, assignments: &[usize]) -> f64 {
    let points = flatten_all(traj);
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let m = points.len();
    let mut d = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            d[a * m + b] = dist2(&points[a], &points[b]).sqrt();
        }
    }
    SampleDistances { idx: (0..m).collect(), d }.silhouette(assignments, k)
}

fn result(traj: &Trajectory, k: usize, fit: (Vec<usize>, Vec<Vec<f64>>, Vec<f64>, usize), silhouette: f64) -> Result<ClusterResult> {
    let (assignments, centroids, inertia_history, iterations) = fit;
    let points = flatten_all(traj);
    let inertia = points.iter().zip(&assignments).map(|(p, a)| dist2(p, &centroids[*a])).sum();
    let centroids = centroids
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let mut s = traj.frames()[0].with_positions(m.chunks(3).map(|x| Vec3::new(x[0], x[1], x[2])).collect())?;
            s.energy = None;
            s.time_fs = None;
            s.label = Some(format!("cluster {c} of {k}"));
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(ClusterResult { k, assignments, centroids, inertia, silhouette, inertia_history, iterations })
}

/// Lloyd's algorithm on the flattened coordinates of pre-aligned frames,
/// seeded by k-means++ from `seed`.
pub fn kmeans(traj: &Trajectory, k: usize, seed: u64) -> Result<ClusterResult> {
    let points = flatten_all(traj);
    let fit = lloyd(&points, k, seed)?;
    let sil = SampleDistances::new(&points, seed).silhouette(&fit.0, k);
    result(traj, k, fit, sil)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// Mean silhouette for each k tried.
    pub silhouettes: Vec<(usize, f64)>,
}

/// The k in `range` with the largest mean silhouette (smaller k on ties).
pub fn select_k(traj: &Trajectory, range: std::ops::RangeInclusive<usize>, seed: u64) -> Result<KSelection> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 2 || hi < lo || hi > traj.len() {
        return Err(Error::InvalidArgument(format!("k range {lo}..={hi} must lie within 2..={}", traj.len())));
    }
    let points = flatten_all(traj);
    let distances = SampleDistances::new(&points, seed);
    let mut silhouettes = Vec::new();
    let mut best = (lo, f64::NEG_INFINITY);
    for k in range {
        let (assignments, ..) = lloyd(&points, k, seed)?;
        let s = distances.silhouette(&assignments, k);
        silhouettes.push((k, s));
        if s > best.1 {
            best = (k, s);
        }
    }
    Ok(KSelection { k: best.0, silhouettes })
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::element::Element;

    // Two-atom frames drawn around `centers`; returns frames and labels.
    pub(crate) fn blobs(centers: &[[f64; 6]], per: usize, spread: f64, seed: u64) -> (Trajectory, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut frames = Vec::new();
        let mut labels = Vec::new();
        for i in 0..per * centers.len() {
            let c = &centers[i % centers.len()];
            let x: Vec<f64> = c.iter().map(|v| v + noise.sample(&mut rng)).collect();
            frames.push(
                Structure::from_atoms([
                    (Element::CA, Vec3::new(x[0], x[1], x[2])),
                    (Element::O, Vec3::new(x[3], x[4], x[5])),
                ])
                .unwrap(),
            );
            labels.push(i % centers.len());
        }
        (Trajectory::new(frames, 1.0).unwrap(), labels)
    }

    // Same partition up to renaming.
    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.iter().zip(b).all(|(x, y)| a.iter().zip(b).all(|(p, q)| (x == p) == (y == q)))
    }

    // Direct silhouette oracle.
    fn oracle_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
        let n = points.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut per: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
            for j in 0..n {
                if i != j {
                    let e = per.entry(labels[j]).or_default();
                    e.0 += dist2(&points[i], &points[j]).sqrt();
                    e.1 += 1;
                }
            }
            let a = per[&labels[i]].0 / per[&labels[i]].1 as f64;
            let b = per.iter().filter(|(c, _)| **c != labels[i]).map(|(_, (s, n))| s / *n as f64).fold(f64::INFINITY, f64::min);
            total += (b - a) / a.max(b);
        }
        total / n as f64
    }

    const TWO: [[f64; 6]; 2] = [[0.0; 6], [10.0, 0.0, 0.0, 10.0, 2.0, 0.0]];

    #[test]
    fn two_blobs() {
        let (t, labels) = blobs(&TWO, 60, 0.3, 1);
        let r = kmeans(&t, 2, 7).unwrap();
        assert!(same_partition(&r.assignments, &labels));
        assert!(r.silhouette > 0.9);
        let points = flatten_all(&t);
        assert!((r.silhouette - oracle_silhouette(&points, &r.assignments)).abs() < 1e-12);
        assert!((silhouette(&t, &r.assignments) - r.silhouette).abs() < 1e-12);
        assert_eq!(select_k(&t, 2..=6, 3).unwrap().k, 2);
    }

    #[test]
    fn three_blobs() {
        let centers = [[0.0; 6], [10.0, 0.0, 0.0, 10.0, 2.0, 0.0], [0.0, 10.0, 0.0, 0.0, 10.0, -5.0]];
        let (t, labels) = blobs(&centers, 40, 0.3, 2);
        let sel = select_k(&t, 2..=6, 1).unwrap();
        assert_eq!(sel.k, 3);
        assert_eq!(sel.silhouettes.len(), 5);
        let r = kmeans(&t, 3, 1).unwrap();
        assert!(same_partition(&r.assignments, &labels));
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let (t, _) = blobs(&TWO, 20, 0.5, 3);
        let r = kmeans(&t, 1, 0).unwrap();
        let pca = crate::trajstats::pca(&t).unwrap();
        assert!(crate::geom::rmsd(&r.centroids[0], &pca.mean).unwrap() < 1e-12);
        let total_var: f64 = pca.eigenvalues.iter().sum();
        assert!((r.inertia - total_var * 39.0).abs() < 1e-9 * r.inertia);
        assert_eq!(r.silhouette, 0.0);
    }

    #[test]
    fn lloyd_invariants() {
        for seed in 0..20 {
            let (t, _) = blobs(&[[0.0; 6], [1.0, 0.0, 0.0, 1.0, 0.5, 0.0], [0.0, 1.0, 0.5, 0.0, 0.0, 1.0]], 30, 0.6, seed);
            let k = 2 + (seed as usize % 4);
            let r = kmeans(&t, k, seed).unwrap();
            assert!(r.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", r.inertia_history);
            let points = flatten_all(&t);
            // Fixed point: every frame sits with its nearest centroid.
            let cents: Vec<Vec<f64>> = r.centroids.iter().map(|c| c.flatten()).collect();
            for (p, a) in points.iter().zip(&r.assignments) {
                assert_eq!(nearest(p, &cents).0, *a);
            }
            // Centroids are the means of their members.
            for (c, cent) in cents.iter().enumerate() {
                let members: Vec<&Vec<f64>> = points.iter().zip(&r.assignments).filter(|(_, a)| **a == c).map(|(p, _)| p).collect();
                if members.is_empty() {
                    continue;
                }
                for d in 0..6 {
                    let m = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                    assert!((m - cent[d]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn errors_and_duplicates() {
        let (t, _) = blobs(&TWO, 2, 0.1, 4);
        assert!(kmeans(&t, 5, 0).is_err());
        assert!(kmeans(&t, 0, 0).is_err());
        assert!(select_k(&t, 1..=3, 0).is_err());
        assert!(select_k(&t, 2..=5, 0).is_err());
        let s = t.frames()[0].clone();
        let same = Trajectory::new(vec![s; 4], 1.0).unwrap();
        let r = kmeans(&same, 3, 0).unwrap();
        assert_eq!(r.inertia, 0.0);
    }

    #[test]
    fn deterministic() {
        let (t, _) = blobs(&TWO, 30, 2.0, 5);
        assert_eq!(kmeans(&t, 3, 11).unwrap(), kmeans(&t, 3, 11).unwrap());
    }
}
