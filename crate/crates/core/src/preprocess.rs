//! Tabletop scene to planner-ready object cloud.
//!
//! Stages: fit the support plane, rotate it onto the approach axis at height
//! zero, drop it and split the rest into proximity clusters, clean the target
//! cluster, then express it in an anchor / heading frame.

use std::collections::VecDeque;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{from_array, rodrigues, rotation_between, to_array, Mat3, RigidTransform, TransformRecord, Vec3};
use crate::kdtree::KdTree;
use crate::pointcloud::{estimate_normals, mean, orient_normals_outward, NormalEstimationParams, OrientedPointCloud, PointCloud};

/// `{x : normal·x = offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl PlaneModel {
    pub fn normal(&self) -> Vec3 {
        from_array(self.normal)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal().dot(p) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessParams {
    pub plane_inlier_threshold: f64,
    pub plane_ransac_iters: usize,
    pub cluster_radius: f64,
    pub min_cluster_size: usize,
    pub outlier_k: usize,
    pub outlier_std_ratio: f64,
    pub seed: u64,
    /// Neighbourhood for normals when the scene carries none.
    pub normal_k: usize,
    /// Optional `(axis, lo, hi)` crop applied before anything else.
    pub crop: Option<(usize, f64, f64)>,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            plane_inlier_threshold: 0.005,
            plane_ransac_iters: 500,
            cluster_radius: 0.015,
            min_cluster_size: 50,
            outlier_k: 20,
            outlier_std_ratio: 2.0,
            seed: 0,
            normal_k: 20,
            crop: None,
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.plane_inlier_threshold > 0.0
            && self.plane_ransac_iters > 0
            && self.cluster_radius > 0.0
            && self.min_cluster_size > 0
            && self.outlier_k > 0
            && self.outlier_std_ratio > 0.0
            && self.normal_k >= 3;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("preprocess thresholds must be positive".into()))
        }
    }
}

/// Origin and yaw reference of the planning frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectFrameSpec {
    pub anchor: [f64; 3],
    pub heading_point: [f64; 3],
}

/// A cluster together with the indices it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub cloud: PointCloud,
    pub indices: Vec<usize>,
}

impl Cluster {
    fn subset(&self, keep: &[usize]) -> Cluster {
        Cluster {
            cloud: select(&self.cloud, keep),
            indices: keep.iter().map(|&i| self.indices[i]).collect(),
        }
    }
}

fn select(cloud: &PointCloud, keep: &[usize]) -> PointCloud {
    PointCloud {
        points: keep.iter().map(|&i| cloud.points[i]).collect(),
        normals: cloud.normals.as_ref().map(|n| keep.iter().map(|&i| n[i]).collect()),
    }
}

pub fn transform_cloud(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| t.apply_point(p)).collect(),
        normals: cloud.normals.as_ref().map(|n| n.iter().map(|v| t.apply_vector(v)).collect()),
    }
}

/// Least-squares plane through `points` (smallest-variance direction).
fn fit_plane_lsq(points: &[Vec3]) -> (Vec3, f64) {
    let c = mean(points);
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let i = eig.eigenvalues.imin();
    let n = eig.eigenvectors.column(i).into_owned().normalize();
    (n, n.dot(&c))
}

/// Robust support-plane fit: seeded RANSAC over point triples, then a
/// least-squares refit on the inliers. The normal is oriented towards the
/// side holding most off-plane points (the objects).
pub fn fit_dominant_plane(points: &[Vec3], params: &PreprocessParams) -> Result<(PlaneModel, Vec<usize>)> {
    params.validate()?;
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    let thr = params.plane_inlier_threshold;
    let count = |n: &Vec3, off: f64| points.iter().filter(|p| (n.dot(p) - off).abs() <= thr).count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(usize, Vec3, f64)> = None;
    for _ in 0..params.plane_ransac_iters {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let k = rng.random_range(0..points.len());
        let cross = (points[j] - points[i]).cross(&(points[k] - points[i]));
        let scale = (points[j] - points[i]).norm() * (points[k] - points[i]).norm();
        if !(cross.norm() > 1e-9 * scale) {
            continue;
        }
        let n = cross.normalize();
        let off = n.dot(&points[i]);
        let c = count(&n, off);
        if best.is_none_or(|b| c > b.0) {
            best = Some((c, n, off));
        }
    }
    let (_, n, off) = match best {
        Some(b) => b,
        None => {
            // All sampled triples collinear; retry exhaustively on a small set.
            exhaustive_triple(points).ok_or(Error::InvalidCloud("points are collinear".into()))?
        }
    };
    let inliers: Vec<usize> = (0..points.len()).filter(|&i| (n.dot(&points[i]) - off).abs() <= thr).collect();
    let inlier_pts: Vec<Vec3> = inliers.iter().map(|&i| points[i]).collect();
    let (mut n, mut off) = if inlier_pts.len() >= 3 { fit_plane_lsq(&inlier_pts) } else { (n, off) };
    let side: f64 = points
        .iter()
        .map(|p| n.dot(p) - off)
        .filter(|d| d.abs() > thr)
        .map(f64::signum)
        .sum();
    if side < 0.0 || (side == 0.0 && n.z < 0.0) {
        n = -n;
        off = -off;
    }
    let inliers: Vec<usize> = (0..points.len()).filter(|&i| (n.dot(&points[i]) - off).abs() <= thr).collect();
    Ok((PlaneModel { normal: to_array(&n), offset: off }, inliers))
}

fn exhaustive_triple(points: &[Vec3]) -> Option<(usize, Vec3, f64)> {
    let a = points[0];
    let b = points.iter().find(|p| (*p - a).norm() > 0.0)?;
    let c = points.iter().find(|p| (b - a).cross(&(*p - a)).norm() > 1e-12 * (b - a).norm().powi(2))?;
    let n = (b - a).cross(&(c - a)).normalize();
    Some((0, n, n.dot(&a)))
}

/// Rotates the plane normal onto `approach` and shifts the plane to height 0.
pub fn align_to_approach_axis(cloud: &PointCloud, plane: &PlaneModel, approach: &Vec3) -> (PointCloud, RigidTransform) {
    let a = approach.normalize();
    let r = rotation_between(&plane.normal(), &a);
    let t = RigidTransform::new(r, -plane.offset * a);
    (transform_cloud(cloud, &t), t)
}

/// Single-linkage clusters of the off-plane points, largest first.
pub fn remove_plane_and_cluster(cloud: &PointCloud, plane: &PlaneModel, params: &PreprocessParams) -> Result<Vec<Cluster>> {
    params.validate()?;
    let keep: Vec<usize> = (0..cloud.len())
        .filter(|&i| plane.signed_distance(&cloud.points[i]).abs() > params.plane_inlier_threshold)
        .collect();
    if keep.is_empty() {
        return Err(Error::NoClusters);
    }
    let rest = Cluster { cloud: select(cloud, &keep), indices: keep };
    let mut clusters: Vec<Cluster> = connected_components(&rest.cloud.points, params.cluster_radius)
        .into_iter()
        .filter(|c| c.len() >= params.min_cluster_size)
        .map(|c| rest.subset(&c))
        .collect();
    if clusters.is_empty() {
        return Err(Error::NoClusters);
    }
    let key = |c: &Cluster| {
        let m = mean(&c.cloud.points);
        (c.cloud.len(), m)
    };
    clusters.sort_by(|a, b| {
        let (na, ma) = key(a);
        let (nb, mb) = key(b);
        nb.cmp(&na)
            .then(ma.x.total_cmp(&mb.x))
            .then(ma.y.total_cmp(&mb.y))
            .then(ma.z.total_cmp(&mb.z))
    });
    Ok(clusters)
}

/// Index sets of the radius-graph components, each sorted.
fn connected_components(points: &[Vec3], radius: f64) -> Vec<Vec<usize>> {
    let tree = KdTree::new(points);
    let mut label = vec![usize::MAX; points.len()];
    let mut out = Vec::new();
    for seed in 0..points.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![seed];
        label[seed] = id;
        let mut queue = VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            for j in tree.within_radius(&points[i], radius) {
                if label[j] == usize::MAX {
                    label[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Statistical outlier removal followed by the largest connected component.
pub fn denoise_cluster(cluster: &Cluster, params: &PreprocessParams) -> Result<Cluster> {
    params.validate()?;
    let pts = &cluster.cloud.points;
    let too_small = |n: usize| Error::ClusterTooSmall { remaining: n, required: params.min_cluster_size };
    if pts.len() <= params.outlier_k {
        return Err(too_small(pts.len()));
    }
    let tree = KdTree::new(pts);
    let mean_d: Vec<f64> = pts
        .iter()
        .map(|p| {
            let nn = tree.knn(p, params.outlier_k + 1);
            nn.iter().skip(1).map(|n| n.dist_sq.sqrt()).sum::<f64>() / params.outlier_k as f64
        })
        .collect();
    let mu = mean_d.iter().sum::<f64>() / mean_d.len() as f64;
    let sd = (mean_d.iter().map(|d| (d - mu).powi(2)).sum::<f64>() / mean_d.len() as f64).sqrt();
    let limit = mu + params.outlier_std_ratio * sd;
    let kept: Vec<usize> = (0..pts.len()).filter(|&i| mean_d[i] <= limit).collect();
    let stage = cluster.subset(&kept);

    let comps = connected_components(&stage.cloud.points, params.cluster_radius);
    let largest = comps
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default();
    let out = stage.subset(&largest);
    if out.cloud.len() < params.min_cluster_size {
        return Err(too_small(out.cloud.len()));
    }
    Ok(out)
}

/// Default frame: anchor at the cluster centroid dropped onto the table
/// (height 0 along `approach`), heading along `+x`.
pub fn default_frame(cloud: &PointCloud, approach: &Vec3) -> ObjectFrameSpec {
    let a = approach.normalize();
    let c = mean(&cloud.points);
    let anchor = c - c.dot(&a) * a;
    ObjectFrameSpec { anchor: to_array(&anchor), heading_point: to_array(&(anchor + Vec3::x())) }
}

/// Moves the anchor to the origin and yaws about `approach` so the heading
/// direction, projected onto the table, points along `+x`.
pub fn to_planning_frame(cloud: &PointCloud, frame: &ObjectFrameSpec, approach: &Vec3) -> Result<(PointCloud, RigidTransform)> {
    let a = approach.normalize();
    let anchor = from_array(frame.anchor);
    let h = from_array(frame.heading_point) - anchor;
    let hp = h - h.dot(&a) * a;
    let x = Vec3::x() - a.x * a;
    if h.norm() == 0.0 || hp.norm() <= 1e-9 * h.norm() || x.norm() < 1e-9 {
        return Err(Error::DegenerateHeading);
    }
    let (hp, x) = (hp.normalize(), x.normalize());
    let yaw = hp.cross(&x).dot(&a).atan2(hp.dot(&x));
    let r = rodrigues(&(a * yaw));
    let t = RigidTransform::new(r, -(r * anchor));
    Ok((transform_cloud(cloud, &t), t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSidecar {
    pub plane: PlaneModel,
    pub plane_inliers: usize,
    pub cluster_sizes: Vec<usize>,
    pub target_cluster: usize,
    pub denoised_points: usize,
    pub frame: ObjectFrameSpec,
    pub align_transform: TransformRecord,
    pub frame_transform: TransformRecord,
    /// Scene-to-planning-frame transform.
    pub total_transform: TransformRecord,
    pub params: PreprocessParams,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub object: OrientedPointCloud,
    /// Scene indices of the object points.
    pub indices: Vec<usize>,
    pub sidecar: PreprocessSidecar,
}

/// Full pipeline on a merged scene. `frame` is given in the aligned
/// (table-at-zero) frame; when absent [`default_frame`] is used. Scenes
/// without normals get estimated ones, oriented away from the object
/// centroid.
pub fn preprocess_scene(
    scene: &PointCloud,
    params: &PreprocessParams,
    approach: &Vec3,
    target: usize,
    frame: Option<ObjectFrameSpec>,
) -> Result<PreprocessOutput> {
    params.validate()?;
    let cropped;
    let (scene, base): (&PointCloud, Vec<usize>) = match params.crop {
        Some((axis, lo, hi)) if axis < 3 => {
            let keep: Vec<usize> = (0..scene.len()).filter(|&i| (lo..=hi).contains(&scene.points[i][axis])).collect();
            cropped = select(scene, &keep);
            (&cropped, keep)
        }
        Some(_) => return Err(Error::InvalidParameter("crop axis must be 0, 1 or 2".into())),
        None => (scene, (0..scene.len()).collect()),
    };
    if scene.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (plane, inliers) = fit_dominant_plane(&scene.points, params)?;
    let (aligned, align) = align_to_approach_axis(scene, &plane, approach);
    let a = approach.normalize();
    let table = PlaneModel { normal: to_array(&a), offset: 0.0 };
    let clusters = remove_plane_and_cluster(&aligned, &table, params)?;
    let chosen = clusters
        .get(target)
        .ok_or_else(|| Error::InvalidParameter(format!("cluster {target} of {}", clusters.len())))?;
    let clean = denoise_cluster(chosen, params)?;
    let frame = frame.unwrap_or_else(|| default_frame(&clean.cloud, &a));
    let (framed, to_frame) = to_planning_frame(&clean.cloud, &frame, &a)?;
    let object = match framed.normals.clone() {
        Some(n) => OrientedPointCloud::new(framed.points.clone(), n)?,
        None => {
            let est = estimate_normals(
                &framed.points,
                &NormalEstimationParams { k_neighbors: params.normal_k.min(framed.len() - 1), orientation_reference: None },
            )?;
            orient_normals_outward(&est, None)
        }
    };
    let total = to_frame.compose(&align);
    Ok(PreprocessOutput {
        object,
        indices: clean.indices.iter().map(|&i| base[i]).collect(),
        sidecar: PreprocessSidecar {
            plane,
            plane_inliers: inliers.len(),
            cluster_sizes: clusters.iter().map(|c| c.cloud.len()).collect(),
            target_cluster: target,
            denoised_points: clean.cloud.len(),
            frame,
            align_transform: (&align).into(),
            frame_transform: (&to_frame).into(),
            total_transform: (&total).into(),
            params: params.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_angle;

    fn grid_plane(n: usize, z: f64) -> Vec<Vec3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(Vec3::new(i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5, z));
            }
        }
        v
    }

    #[test]
    fn plane_with_outliers() {
        let mut pts = grid_plane(32, 0.0);
        pts.truncate(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            pts.push(Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.01..0.3)));
        }
        let params = PreprocessParams { plane_inlier_threshold: 0.002, ..Default::default() };
        let (plane, inliers) = fit_dominant_plane(&pts, &params).unwrap();
        assert!(plane.normal().dot(&Vec3::z()).acos() < 1f64.to_radians());
        assert!(inliers.len() >= 990);
    }

    #[test]
    fn coplanar_and_minimal() {
        let pts = grid_plane(10, 0.3);
        let (plane, inliers) = fit_dominant_plane(&pts, &PreprocessParams::default()).unwrap();
        assert_eq!(inliers.len(), pts.len());
        assert!((plane.offset.abs() - 0.3).abs() < 1e-12);
        let tri = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)];
        let (plane, inliers) = fit_dominant_plane(&tri, &PreprocessParams::default()).unwrap();
        assert_eq!(inliers.len(), 3);
        for p in &tri {
            assert!(plane.signed_distance(p).abs() < 1e-12);
        }
        let line = [Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()];
        assert!(fit_dominant_plane(&line, &PreprocessParams::default()).is_err());
        assert!(fit_dominant_plane(&tri[..2], &PreprocessParams::default()).is_err());
    }

    #[test]
    fn alignment_cases() {
        let cloud = PointCloud::new(grid_plane(10, 0.2));
        let plane = PlaneModel { normal: [0.0, 0.0, 1.0], offset: 0.2 };
        let (out, t) = align_to_approach_axis(&cloud, &plane, &Vec3::z());
        assert_eq!(t.rotation, nalgebra::Rotation3::identity());
        assert!(out.points.iter().all(|p| p.z.abs() < 1e-12));

        let tilt = rodrigues(&Vec3::new(30f64.to_radians(), 0.0, 0.0));
        let tilted = transform_cloud(&cloud, &RigidTransform::new(tilt, Vec3::new(0.0, 0.0, 0.1)));
        let (plane, _) = fit_dominant_plane(&tilted.points, &PreprocessParams::default()).unwrap();
        let (out, t) = align_to_approach_axis(&tilted, &plane, &Vec3::z());
        let (refit, _) = fit_dominant_plane(&out.points, &PreprocessParams::default()).unwrap();
        assert!(refit.normal().cross(&Vec3::z()).norm() < 1e-9);
        assert!(out.points.iter().all(|p| p.z.abs() < 1e-9));
        // isometry
        for i in (0..tilted.len()).step_by(7) {
            for j in (0..tilted.len()).step_by(11) {
                let d0 = (tilted.points[i] - tilted.points[j]).norm();
                let d1 = (t.apply_point(&tilted.points[i]) - t.apply_point(&tilted.points[j])).norm();
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
        let flipped = PlaneModel { normal: [0.0, 0.0, -1.0], offset: 0.0 };
        let (_, t) = align_to_approach_axis(&cloud, &flipped, &Vec3::z());
        assert!((rotation_angle(&t.rotation) - std::f64::consts::PI).abs() < 1e-12);
        assert!((t.rotation * Vec3::z()).z.abs() < 1e-12 || (t.rotation * -Vec3::z() - Vec3::z()).norm() < 1e-12);
    }

    fn blob(center: Vec3, n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| center + Vec3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)))
            .collect()
    }

    #[test]
    fn clusters_two_objects() {
        let mut pts = grid_plane(40, 0.0);
        let table = pts.len();
        pts.extend(blob(Vec3::new(-0.05, 0.0, 0.05), 600, 1));
        pts.extend(blob(Vec3::new(0.05, 0.0, 0.05), 400, 2));
        let cloud = PointCloud::new(pts);
        let plane = PlaneModel { normal: [0.0, 0.0, 1.0], offset: 0.0 };
        let clusters = remove_plane_and_cluster(&cloud, &plane, &PreprocessParams { cluster_radius: 0.02, ..Default::default() }).unwrap();
        assert_eq!(clusters.len(), 2);
        assert!(clusters[0].cloud.len() >= clusters[1].cloud.len());
        let first: Vec<usize> = clusters[0].indices.iter().filter(|&&i| (table..table + 600).contains(&i)).copied().collect();
        assert!(first.len() as f64 >= 0.95 * 600.0);

        let empty = PointCloud::new(grid_plane(10, 0.0));
        assert!(matches!(remove_plane_and_cluster(&empty, &plane, &PreprocessParams::default()), Err(Error::NoClusters)));
    }

    #[test]
    fn denoising() {
        let params = PreprocessParams::default();
        let pts = crate::synthetic::generate_synthetic_object(crate::synthetic::ShapeKind::Box, &[0.04, 0.04, 0.1], 3000, 0.0, 4)
            .unwrap()
            .points()
            .to_vec();
        let n = pts.len();
        let clean = Cluster { cloud: PointCloud::new(pts.clone()), indices: (0..n).collect() };
        // A 2σ cut on the mean neighbour distance trims the upper tail of a
        // random surface sampling: about 3% at the defaults, under 1% at 3σ.
        let kept = denoise_cluster(&clean, &params).unwrap().cloud.len();
        assert!(kept as f64 >= 0.96 * n as f64, "{kept} of {n}");
        let loose = PreprocessParams { outlier_std_ratio: 3.0, ..params.clone() };
        let kept = denoise_cluster(&clean, &loose).unwrap().cloud.len();
        assert!(kept as f64 >= 0.99 * n as f64, "{kept} of {n}");

        let mut noisy = pts.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
            noisy.push(dir * rng.random_range(0.06..0.15));
        }
        let cl = Cluster { cloud: PointCloud::new(noisy), indices: (0..n + 100).collect() };
        let out = denoise_cluster(&cl, &params).unwrap();
        assert!(out.indices.iter().all(|&i| i < n));

        // exactly min_cluster_size points, one of them an outlier
        let mut small = blob(Vec3::zeros(), params.min_cluster_size - 1, 5);
        small.push(Vec3::new(1.0, 1.0, 1.0));
        let cl = Cluster { cloud: PointCloud::new(small), indices: (0..params.min_cluster_size).collect() };
        assert!(matches!(denoise_cluster(&cl, &params), Err(Error::ClusterTooSmall { .. })));
    }

    #[test]
    fn planning_frame() {
        let cloud = PointCloud::new(blob(Vec3::new(0.3, 0.2, 0.05), 200, 6));
        let c = mean(&cloud.points);
        let frame = ObjectFrameSpec { anchor: to_array(&c), heading_point: to_array(&(c + Vec3::x())) };
        let (out, t) = to_planning_frame(&cloud, &frame, &Vec3::z()).unwrap();
        assert!(rotation_angle(&t.rotation) < 1e-12);
        assert!(mean(&out.points).norm() < 1e-12);

        let frame = ObjectFrameSpec { anchor: to_array(&c), heading_point: to_array(&(c + Vec3::y())) };
        let (out, t) = to_planning_frame(&cloud, &frame, &Vec3::z()).unwrap();
        assert!((t.rotation * Vec3::y() - Vec3::x()).norm() < 1e-12);
        let back = transform_cloud(&out, &t.inverse());
        for (a, b) in back.points.iter().zip(&cloud.points) {
            assert!((a - b).norm() < 1e-12);
        }
        let vertical = ObjectFrameSpec { anchor: to_array(&c), heading_point: to_array(&(c + Vec3::z())) };
        assert!(matches!(to_planning_frame(&cloud, &vertical, &Vec3::z()), Err(Error::DegenerateHeading)));
    }
}
