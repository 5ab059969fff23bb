//! Seeded k-means and k-median clustering, applied separately to each class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, DistNorm};
use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterAlgo {
    KMeans,
    KMedian,
}

impl ClusterAlgo {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterAlgo::KMeans => "kmeans",
            ClusterAlgo::KMedian => "kmedian",
        }
    }

    fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ClusterAlgo::KMeans => {
                let d = DistNorm::L2.distance(a, b);
                d * d
            }
            ClusterAlgo::KMedian => DistNorm::L1.distance(a, b),
        }
    }
}

impl std::str::FromStr for ClusterAlgo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(ClusterAlgo::KMeans),
            "kmedian" | "kmedians" => Ok(ClusterAlgo::KMedian),
            _ => Err(Error::InvalidArgument(format!("unknown clustering algorithm {s:?}"))),
        }
    }
}

/// Result of clustering one set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Cluster id of each input point.
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Clustering objective after each assignment step (sum of squared L2
    /// distances for k-means, sum of L1 distances for k-median).
    pub history: Vec<f64>,
}

fn nearest(algo: ClusterAlgo, p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = algo.dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centers(algo: ClusterAlgo, points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut dmin: Vec<f64> = points.iter().map(|p| algo.dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dmin.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in dmin.iter().enumerate() {
                if d > 0.0 && r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            while dmin[idx] == 0.0 {
                idx -= 1;
            }
            idx
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            dmin[i] = dmin[i].min(algo.dist(p, &points[pick]));
        }
    }
    centers
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

fn update_center(algo: ClusterAlgo, points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = points[members[0]].len();
    (0..d)
        .map(|k| match algo {
            ClusterAlgo::KMeans => members.iter().map(|&i| points[i][k]).sum::<f64>() / members.len() as f64,
            ClusterAlgo::KMedian => {
                let mut vals: Vec<f64> = members.iter().map(|&i| points[i][k]).collect();
                median(&mut vals)
            }
        })
        .collect()
}

/// Alternate assignment and centre updates from a k-means++ style seeding.
pub fn cluster_points(algo: ClusterAlgo, points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {n}, got k = {k}")));
    }
    if k == n {
        return Ok(Partition {
            assignments: (0..n).collect(),
            centers: points.to_vec(),
            history: vec![0.0],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(algo, points, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..MAX_ITER {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, dist) = nearest(algo, p, &centers);
            objective += dist;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        // reseed empty clusters with the point farthest from its centre
        for c in 0..k {
            if assignments.contains(&c) {
                continue;
            }
            let mut far = 0;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                let owner = assignments[i];
                let size = assignments.iter().filter(|&&a| a == owner).count();
                let dist = algo.dist(p, &centers[owner]);
                if size > 1 && dist > far_d {
                    far = i;
                    far_d = dist;
                }
            }
            objective -= far_d.max(0.0);
            assignments[far] = c;
            centers[c] = points[far].clone();
            changed = true;
        }
        history.push(objective);
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == c).collect();
            *center = update_center(algo, points, &members);
        }
        if !changed {
            break;
        }
    }
    Ok(Partition {
        assignments,
        centers,
        history,
    })
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition> {
    cluster_points(ClusterAlgo::KMeans, points, k, seed)
}

pub fn kmedian(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Partition> {
    cluster_points(ClusterAlgo::KMedian, points, k, seed)
}

/// Clusters of a whole dataset; every cluster holds instances of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster id of each instance.
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Label (+1 / -1) of each cluster.
    pub class_of: Vec<f64>,
}

impl Clustering {
    /// One cluster per class.
    pub fn by_class(ds: &Dataset) -> Clustering {
        let mut class_of = Vec::new();
        let mut ids = [usize::MAX; 2];
        let mut assignments = vec![0; ds.n()];
        for i in 0..ds.n() {
            let slot = usize::from(ds.y[i] < 0.0);
            if ids[slot] == usize::MAX {
                ids[slot] = class_of.len();
                class_of.push(ds.y[i]);
            }
            assignments[i] = ids[slot];
        }
        Clustering::from_assignments(ds, assignments, class_of)
    }

    /// Each instance on its own.
    pub fn singletons(ds: &Dataset) -> Clustering {
        Clustering::from_assignments(ds, (0..ds.n()).collect(), ds.y.clone())
    }

    fn from_assignments(ds: &Dataset, assignments: Vec<usize>, class_of: Vec<f64>) -> Clustering {
        let centers = (0..class_of.len())
            .map(|c| {
                let members: Vec<usize> = (0..ds.n()).filter(|&i| assignments[i] == c).collect();
                update_center(ClusterAlgo::KMeans, &ds.x, &members)
            })
            .collect();
        Clustering {
            assignments,
            centers,
            class_of,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.class_of.len()
    }

    /// Members of each cluster in instance order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Number of clusters for a class of `size` points.
pub fn clusters_for(size: usize, fraction: f64) -> usize {
    ((fraction * size as f64).round() as usize).clamp(1, size.max(1))
}

/// Cluster each class with `max(1, round(fraction * class size))` clusters.
/// Clusters of class +1 come first.
pub fn cluster_per_class(ds: &Dataset, fraction: f64, algo: ClusterAlgo, seed: u64) -> Result<Clustering> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("cluster fraction must be in (0, 1], got {fraction}")));
    }
    let mut assignments = vec![0; ds.n()];
    let mut centers = Vec::new();
    let mut class_of = Vec::new();
    for (offset, label) in [1.0, -1.0].into_iter().enumerate() {
        let idx = ds.class_indices(label);
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| ds.x[i].clone()).collect();
        let k = clusters_for(idx.len(), fraction);
        let part = cluster_points(algo, &pts, k, seed.wrapping_add(offset as u64))?;
        let base = class_of.len();
        for (j, &i) in idx.iter().enumerate() {
            assignments[i] = base + part.assignments[j];
        }
        for center in part.centers {
            centers.push(center);
            class_of.push(label);
        }
    }
    Ok(Clustering {
        assignments,
        centers,
        class_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..6 {
            let t = i as f64 * 0.1;
            pts.push(vec![t, -t]);
            pts.push(vec![100.0 + t, 50.0 - t]);
        }
        pts
    }

    #[test]
    fn saturation_and_single_cluster() {
        let pts = blobs();
        let p = kmeans(&pts, pts.len(), 3).unwrap();
        assert_eq!(p.assignments, (0..pts.len()).collect::<Vec<_>>());
        let one = kmeans(&pts, 1, 3).unwrap();
        let mean0 = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        assert!((one.centers[0][0] - mean0).abs() < 1e-12);
        let med = kmedian(&pts, 1, 3).unwrap();
        assert!((med.centers[0][0] - 50.25).abs() < 1e-12);
    }

    #[test]
    fn separated_blobs() {
        let pts = blobs();
        for algo in [ClusterAlgo::KMeans, ClusterAlgo::KMedian] {
            for seed in 0..5 {
                let p = cluster_points(algo, &pts, 2, seed).unwrap();
                for i in (0..pts.len()).step_by(2) {
                    assert_eq!(p.assignments[i], p.assignments[0]);
                    assert_eq!(p.assignments[i + 1], p.assignments[1]);
                }
                assert_ne!(p.assignments[0], p.assignments[1]);
            }
        }
    }

    #[test]
    fn median_resists_outlier() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![1000.0]];
        let med = kmedian(&pts, 1, 0).unwrap();
        let mean = kmeans(&pts, 1, 0).unwrap();
        assert_eq!(med.centers[0][0], 2.0);
        assert!(mean.centers[0][0] > 100.0);
    }

    #[test]
    fn per_class_counts() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..100 {
            x.push(vec![i as f64, (i * 7 % 13) as f64]);
            y.push(if i < 60 { 1.0 } else { -1.0 });
        }
        let ds = Dataset::new(x, y, "t").unwrap();
        let c = cluster_per_class(&ds, 0.1, ClusterAlgo::KMeans, 0).unwrap();
        assert_eq!(c.class_of.iter().filter(|&&l| l == 1.0).count(), 6);
        assert_eq!(c.class_of.iter().filter(|&&l| l == -1.0).count(), 4);
        for (i, &a) in c.assignments.iter().enumerate() {
            assert_eq!(c.class_of[a], ds.y[i]);
        }
        let tiny = cluster_per_class(&ds, 1e-9, ClusterAlgo::KMedian, 0).unwrap();
        assert_eq!(tiny.n_clusters(), 2);
        let full = cluster_per_class(&ds, 1.0, ClusterAlgo::KMeans, 0).unwrap();
        assert_eq!(full.n_clusters(), 100);
    }
}
