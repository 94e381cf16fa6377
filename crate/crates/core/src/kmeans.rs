//! Seeded Lloyd's k-means for picking initial grasp positions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::pointcloud::mean;

const MAX_LLOYD_ITERS: usize = 300;

/// k-means++ seeding followed by Lloyd iterations. Centroids are returned
/// sorted lexicographically so their order does not depend on the seeding.
pub fn kmeans(points: &[Vec3], k: usize, seed: u64) -> Result<Vec<Vec3>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints { needed: k, got: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = match lloyd(points, seed_plus_plus(points, k, &mut rng)) {
        Ok(c) => c,
        Err(Error::EmptyCluster) => lloyd(points, seed_plus_plus(points, k, &mut rng))?,
        Err(e) => return Err(e),
    };
    centers.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    Ok(centers)
}

fn seed_plus_plus(points: &[Vec3], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        let c = points[next];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - c).norm_squared());
        }
    }
    centers
}

fn assign(points: &[Vec3], centers: &[Vec3]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let d = (p - c).norm_squared();
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

fn lloyd(points: &[Vec3], mut centers: Vec<Vec3>) -> Result<Vec<Vec3>> {
    let k = centers.len();
    let mut labels = assign(points, &centers);
    for _ in 0..MAX_LLOYD_ITERS {
        let mut members: Vec<Vec<Vec3>> = vec![Vec::new(); k];
        for (p, &l) in points.iter().zip(&labels) {
            members[l].push(*p);
        }
        for (c, m) in centers.iter_mut().zip(&members) {
            if !m.is_empty() {
                *c = mean(m);
            }
        }
        let next = assign(points, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::EmptyCluster);
    }
    Ok(centers)
}

/// Initial grasp translation: one of the sorted k-means centroids. With
/// `pick == None` the centroid nearest the whole-cloud centroid is used.
pub fn init_translation_kmeans(points: &[Vec3], k: usize, seed: u64, pick: Option<usize>) -> Result<Vec3> {
    let centers = kmeans(points, k, seed)?;
    match pick {
        Some(i) => centers
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("pick {i} out of range for k = {k}"))),
        None => {
            let c = mean(points);
            Ok(*centers
                .iter()
                .min_by(|a, b| (*a - c).norm_squared().total_cmp(&(*b - c).norm_squared()))
                .unwrap())
        }
    }
}
