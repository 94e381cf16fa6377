//! Point-cloud containers, normal estimation and resampling.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidTransform, Vec3};
use crate::kdtree::KdTree;

/// Positions with optional normals, as read from disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, normals: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_oriented(self) -> Result<OrientedPointCloud> {
        match self.normals {
            Some(normals) => OrientedPointCloud::new(self.points, normals),
            None => Err(Error::MissingNormals),
        }
    }

    /// Keeps points whose coordinate along `axis` lies in `[lo, hi]`.
    pub fn crop_axis(&self, axis: usize, lo: f64, hi: f64) -> PointCloud {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| (lo..=hi).contains(&self.points[i][axis]))
            .collect();
        PointCloud {
            points: keep.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| keep.iter().map(|&i| n[i]).collect()),
        }
    }
}

/// Points with unit normals. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPointCloud {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
    labels: Option<Vec<u32>>,
}

impl OrientedPointCloud {
    /// Normals are re-normalised; zero or non-finite normals are rejected.
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if points.len() != normals.len() {
            return Err(Error::InvalidCloud(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidCloud(format!("point {i} is not finite")));
        }
        let mut unit = Vec::with_capacity(normals.len());
        for (i, n) in normals.into_iter().enumerate() {
            let len = n.norm();
            if !len.is_finite() || len < 1e-12 {
                return Err(Error::InvalidCloud(format!("normal {i} has zero length")));
            }
            unit.push(n / len);
        }
        Ok(Self { points, normals: unit, labels: None })
    }

    /// Builds from parts already known to be valid unit normals.
    pub(crate) fn from_parts_unchecked(points: Vec<Vec3>, normals: Vec<Vec3>) -> Self {
        debug_assert_eq!(points.len(), normals.len());
        Self { points, normals, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::InvalidCloud("label count mismatch".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, &Vec3)> {
        self.points.iter().zip(self.normals.iter())
    }

    pub fn centroid(&self) -> Vec3 {
        mean(&self.points)
    }

    pub fn to_point_cloud(&self) -> PointCloud {
        PointCloud {
            points: self.points.clone(),
            normals: Some(self.normals.clone()),
        }
    }

    /// Subset by index list, preserving order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        })
    }

    /// `p ↦ Rp + t`, `n ↦ Rn`.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply_point(p)).collect(),
            normals: self.normals.iter().map(|n| t.apply_vector(n)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Maps every point/normal pair through `f`.
    pub(crate) fn map(&self, mut f: impl FnMut(&Vec3, &Vec3) -> (Vec3, Vec3)) -> Self {
        let (points, normals) = self.iter().map(|(p, n)| f(p, n)).unzip();
        Self { points, normals, labels: self.labels.clone() }
    }
}

pub fn apply_transform(t: &RigidTransform, cloud: &OrientedPointCloud) -> OrientedPointCloud {
    cloud.transformed(t)
}

/// Arithmetic mean of positions.
pub fn centroid(points: &[Vec3]) -> Result<Vec3> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(mean(points))
}

pub(crate) fn mean(points: &[Vec3]) -> Vec3 {
    let sum = points.iter().fold(Vec3::zeros(), |acc, p| acc + p);
    sum / points.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalEstimationParams {
    pub k_neighbors: usize,
    /// Reference for outward orientation; the cloud centroid when absent.
    pub orientation_reference: Option<[f64; 3]>,
}

impl Default for NormalEstimationParams {
    fn default() -> Self {
        Self { k_neighbors: 30, orientation_reference: None }
    }
}

/// Local plane fit: each normal is the smallest-eigenvalue eigenvector of the
/// covariance of the point's `k` nearest neighbours (itself included).
/// Signs are arbitrary; run [`orient_normals_outward`] afterwards.
pub fn estimate_normals(points: &[Vec3], params: &NormalEstimationParams) -> Result<OrientedPointCloud> {
    let k = params.k_neighbors;
    if k < 3 {
        return Err(Error::InvalidParameter("k_neighbors must be at least 3".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints { needed: k, got: points.len() });
    }
    let tree = KdTree::new(points);
    let mut normals = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let nbrs = tree.knn(p, k);
        let local: Vec<Vec3> = nbrs.iter().map(|n| points[n.index]).collect();
        let c = mean(&local);
        let mut cov = Mat3::zeros();
        for q in &local {
            let d = q - c;
            cov += d * d.transpose();
        }
        cov /= local.len() as f64;
        let scale = local.iter().map(|q| (q - c).norm_squared()).fold(0.0, f64::max);
        if scale <= f64::EPSILON * (1.0 + c.norm_squared()) {
            return Err(Error::DegenerateNeighborhood { index: i });
        }
        let eig = SymmetricEigen::new(cov);
        let idx = eig.eigenvalues.imin();
        normals.push(eig.eigenvectors.column(idx).normalize());
    }
    Ok(OrientedPointCloud::from_parts_unchecked(points.to_vec(), normals))
}

/// Flips normals so `n · (p − reference) ≥ 0`; `reference` defaults to the
/// centroid. A point at the reference keeps its normal.
pub fn orient_normals_outward(cloud: &OrientedPointCloud, reference: Option<Vec3>) -> OrientedPointCloud {
    let c = reference.unwrap_or_else(|| cloud.centroid());
    cloud.map(|p, n| if n.dot(&(p - c)) < 0.0 { (*p, -n) } else { (*p, *n) })
}

/// One representative per occupied voxel: mean position and normalised mean
/// normal, ordered by voxel index.
pub fn voxel_downsample(cloud: &OrientedPointCloud, voxel_size: f64) -> Result<OrientedPointCloud> {
    if !(voxel_size > 0.0) {
        return Err(Error::InvalidParameter("voxel_size must be positive".into()));
    }
    let mut voxels: BTreeMap<[i64; 3], Vec<usize>> = BTreeMap::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let key = [
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        ];
        voxels.entry(key).or_default().push(i);
    }
    let mut points = Vec::with_capacity(voxels.len());
    let mut normals = Vec::with_capacity(voxels.len());
    let mut labels = cloud.labels().map(|_| Vec::with_capacity(voxels.len()));
    for members in voxels.values() {
        let pos: Vec<Vec3> = members.iter().map(|&i| cloud.points()[i]).collect();
        let m = mean(&pos);
        let nsum = members.iter().fold(Vec3::zeros(), |acc, &i| acc + cloud.normals()[i]);
        let n = if nsum.norm() > 1e-6 * members.len() as f64 {
            nsum.normalize()
        } else {
            let closest = members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    (cloud.points()[a] - m)
                        .norm_squared()
                        .total_cmp(&(cloud.points()[b] - m).norm_squared())
                })
                .unwrap();
            cloud.normals()[closest]
        };
        points.push(m);
        normals.push(n);
        if let (Some(out), Some(src)) = (labels.as_mut(), cloud.labels()) {
            out.push(src[members[0]]);
        }
    }
    let mut out = OrientedPointCloud::from_parts_unchecked(points, normals);
    out.labels = labels;
    Ok(out)
}
