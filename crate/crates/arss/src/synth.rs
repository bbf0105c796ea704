//! Seeded synthetic data for tests and benchmarks.

use arss_core::Matrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// Standard normal `L×N` matrix.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, l: usize, n: usize) -> Matrix {
    Matrix::from_fn(l, n, |_, _| StandardNormal.sample(rng))
}

/// `per_cluster` isotropic Gaussian samples around each center, cluster by
/// cluster. Labels are cluster indices.
pub fn gaussian_clusters<R: Rng + ?Sized>(
    rng: &mut R,
    centers: &[Vec<f64>],
    per_cluster: usize,
    sigma: f64,
) -> (Matrix, Vec<i32>) {
    let l = centers[0].len();
    let n = centers.len() * per_cluster;
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut x = Matrix::zeros(l, n);
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        assert_eq!(center.len(), l, "centers must share a dimension");
        for s in 0..per_cluster {
            let col = x.col_mut(c * per_cluster + s);
            for (v, &m) in col.iter_mut().zip(center) {
                *v = m + noise.sample(rng);
            }
            labels.push(c as i32);
        }
    }
    (x, labels)
}

/// `count` points evenly spaced on a circle of `radius` in the first two
/// coordinates of an `l`-dimensional space.
pub fn ring_centers(count: usize, radius: f64, l: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|c| {
            let t = 2.0 * std::f64::consts::PI * c as f64 / count as f64;
            let mut v = vec![0.0; l.max(2)];
            v[0] = radius * t.cos();
            v[1] = radius * t.sin();
            v
        })
        .collect()
}

/// Replaces `⌈fraction·N⌉` random columns with gross outliers whose entries
/// are `±magnitude` times the feature's value range. Returns the sorted
/// outlier columns.
pub fn plant_outliers<R: Rng + ?Sized>(rng: &mut R, x: &mut Matrix, fraction: f64, magnitude: f64) -> Vec<usize> {
    let (l, n) = x.shape();
    let ranges: Vec<f64> = (0..l)
        .map(|i| {
            let row = (0..n).map(|j| x[(i, j)]);
            row.clone().fold(f64::NEG_INFINITY, f64::max) - row.fold(f64::INFINITY, f64::min)
        })
        .collect();
    let count = (((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut cols = index::sample(rng, n, count).into_vec();
    cols.sort_unstable();
    for &j in &cols {
        for (v, r) in x.col_mut(j).iter_mut().zip(&ranges) {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            *v = sign * magnitude * r;
        }
    }
    cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clusters_have_labels_in_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, labels) = gaussian_clusters(&mut rng, &ring_centers(3, 10.0, 2), 4, 0.1);
        assert_eq!(x.shape(), (2, 12));
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert!((x[(0, 0)] - 10.0).abs() < 1.0);
    }

    #[test]
    fn outliers_are_large() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = gaussian_matrix(&mut rng, 3, 40);
        let cols = plant_outliers(&mut rng, &mut x, 0.05, 20.0);
        assert_eq!(cols.len(), 2);
        for &j in &cols {
            assert!(x.col(j).iter().all(|v| v.abs() > 20.0));
        }
    }
}
