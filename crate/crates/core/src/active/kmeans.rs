use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct Clustering {
    pub labels: Vec<usize>,
    /// One centroid per row.
    pub centroids: DMatrix<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols()).map(|d| (points[(i, d)] - centroids[(c, d)]).powi(2)).sum()
}

fn distinct_rows(points: &DMatrix<f64>) -> usize {
    let mut seen = HashSet::new();
    for i in 0..points.nrows() {
        let key: Vec<u64> = points.row(i).iter().map(|v| v.to_bits()).collect();
        seen.insert(key);
    }
    seen.len()
}

/// Index of the nearest centroid (lowest index on ties) and its squared
/// distance.
fn nearest(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = sq_dist(points, i, centroids, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// `k` is reduced to the number of distinct points when there are fewer.
/// A cluster that empties is re-seeded with the point farthest from its
/// current centroid.
pub fn kmeans<R: Rng + ?Sized>(points: &DMatrix<f64>, k: usize, max_iter: usize, rng: &mut R) -> Result<Clustering> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("k-means on no points".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k-means needs k >= 1".into()));
    }
    let k = k.min(distinct_rows(points));
    let m = points.ncols();

    let mut centroids = DMatrix::zeros(k, m);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        let pick = pick.expect("fewer distinct points than centroids");
        centroids.row_mut(c).copy_from(&points.row(pick));
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(points, i, &centroids, c));
        }
    }

    let mut labels: Vec<usize> = (0..n).map(|i| nearest(points, i, &centroids).0).collect();
    for _ in 0..max_iter {
        let mut sums = DMatrix::<f64>::zeros(k, m);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for d in 0..m {
                sums[(l, d)] += points[(i, d)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..m {
                    centroids[(c, d)] = sums[(c, d)] / counts[c] as f64;
                }
            } else {
                let far = (0..n)
                    .map(|i| (sq_dist(points, i, &centroids, labels[i]), i))
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map(|(_, i)| i)
                    .expect("points are non-empty");
                centroids.row_mut(c).copy_from(&points.row(far));
                labels[far] = c;
            }
        }
        let next: Vec<usize> = (0..n).map(|i| nearest(points, i, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(Clustering { labels, centroids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand_distr::StandardNormal;

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 2.0, 3.0, -1.0, 0.5, 3.0, -0.5]);
        let cl = kmeans(&pts, 1, 100, &mut substream(1, 0)).unwrap();
        assert_eq!(cl.k(), 1);
        assert!((cl.centroids[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((cl.centroids[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_equal_to_distinct_points() {
        let pts = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 5.0, 1.0, -3.0, 4.0]);
        let cl = kmeans(&pts, 3, 100, &mut substream(2, 0)).unwrap();
        let mut labels = cl.labels.clone();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn k_reduced_to_distinct_count() {
        let pts = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 2.0, 2.0]);
        let cl = kmeans(&pts, 3, 100, &mut substream(3, 0)).unwrap();
        assert_eq!(cl.k(), 2);
        assert_eq!(cl.labels[0], cl.labels[1]);
        assert_ne!(cl.labels[0], cl.labels[2]);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        for seed in 0..20 {
            let mut rng = substream(seed, 0);
            let per = 50;
            let pts =
                DMatrix::from_fn(3 * per, 2, |i, d| centers[i / per][d] + 0.1 * rng.sample::<f64, _>(StandardNormal));
            let cl = kmeans(&pts, 3, 100, &mut substream(seed, 1)).unwrap();
            // purity: majority label share within each true blob
            let mut pure = 0;
            for blob in 0..3 {
                let mut counts = [0usize; 3];
                for i in blob * per..(blob + 1) * per {
                    counts[cl.labels[i]] += 1;
                }
                pure += counts.iter().max().unwrap();
            }
            let purity = pure as f64 / (3 * per) as f64;
            assert!(purity >= 0.95, "seed {seed}: purity {purity}");
        }
    }

    #[test]
    fn rejects_degenerate_calls() {
        assert!(kmeans(&DMatrix::zeros(0, 2), 1, 10, &mut substream(0, 0)).is_err());
        assert!(kmeans(&DMatrix::zeros(3, 2), 0, 10, &mut substream(0, 0)).is_err());
    }
}
