//! Scalar grasp-quality measures over a correspondence set.
//!
//! All errors are squared-residual sums except `e_com`, which is a distance
//! in meters.

use serde::{Deserialize, Serialize};

use crate::correspondence::CorrespondenceSet;
use crate::geometry::{rodrigues, Vec3};
use crate::gripper::GripperSurface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityWeights {
    /// Normal-misalignment scale in `E_geom`.
    pub alpha: f64,
    /// Approach-misalignment weight in the rotation objective.
    pub beta: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.85 }
    }
}

/// `E_p = Σ ((p − q)·n^q)²`.
pub fn surface_distance_error(set: &CorrespondenceSet) -> f64 {
    set.iter()
        .map(|(_, pair)| {
            let r = (pair.p - pair.q).dot(&pair.n_q);
            r * r
        })
        .fold(0.0, |acc, x| acc + x)
}

/// `E_n(ω) = Σ ((R(ω) n^p)·n^q + 1)²` with `R` the exact rotation.
pub fn normal_alignment_error(set: &CorrespondenceSet, omega: &Vec3) -> f64 {
    let r = rodrigues(omega);
    set.iter()
        .map(|(_, pair)| {
            let e = (r * pair.n_p).dot(&pair.n_q) + 1.0;
            e * e
        })
        .fold(0.0, |acc, x| acc + x)
}

/// `E_a(ω) = N · ((R(ω) n_z)·n_app − 1)²`; the summand does not depend on
/// the pair index so the sum over `N` pairs is a multiplication.
pub fn approach_alignment_error(z_axis: &Vec3, approach: &Vec3, omega: &Vec3, n: usize) -> f64 {
    let e = (rodrigues(omega) * z_axis).dot(approach) - 1.0;
    n as f64 * e * e
}

/// Rotation objective `E_na = E_n + β² E_a`.
pub fn rotation_error(set: &CorrespondenceSet, z_axis: &Vec3, approach: &Vec3, omega: &Vec3, beta: f64) -> f64 {
    normal_alignment_error(set, omega) + beta * beta * approach_alignment_error(z_axis, approach, omega, set.len())
}

/// `E_geom = E_p + α² E_n` at the current pose.
pub fn geom_error(set: &CorrespondenceSet, weights: &QualityWeights) -> f64 {
    surface_distance_error(set) + weights.alpha * weights.alpha * normal_alignment_error(set, &Vec3::zeros())
}

/// `‖centroid(object) − centroid(both pads)‖`.
pub fn com_error(object_centroid: &Vec3, posed: &GripperSurface) -> f64 {
    (object_centroid - posed.centroid()).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub e_p: f64,
    pub e_n: f64,
    pub e_a: f64,
    pub e_na: f64,
    pub e_geom: f64,
    #[serde(rename = "e_com_m")]
    pub e_com: f64,
    pub n1: usize,
    pub n2: usize,
}

impl QualityReport {
    pub fn evaluate(
        set: &CorrespondenceSet,
        z_axis: &Vec3,
        approach: &Vec3,
        weights: &QualityWeights,
        object_centroid: &Vec3,
        posed: &GripperSurface,
    ) -> Self {
        let zero = Vec3::zeros();
        let e_p = surface_distance_error(set);
        let e_n = normal_alignment_error(set, &zero);
        let e_a = approach_alignment_error(z_axis, approach, &zero, set.len());
        Self {
            e_p,
            e_n,
            e_a,
            e_na: e_n + weights.beta * weights.beta * e_a,
            e_geom: e_p + weights.alpha * weights.alpha * e_n,
            e_com: com_error(object_centroid, posed),
            n1: set.pairs[0].len(),
            n2: set.pairs[1].len(),
        }
    }
}
