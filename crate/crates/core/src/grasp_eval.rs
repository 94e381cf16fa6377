//! Everything downstream of planning that can be checked without physics:
//! pre-grasp pose, aperture bias, lift success criteria, close probing and a
//! geometric feasibility report.

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::correspondence::{match_unchecked, MatchParams, ObjectModel};
use crate::geometry::{RigidTransform, Vec3};
use crate::gripper::{GripperSpec, GripperSurface};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutionParams {
    /// Pre-grasp standoff along the hand axis.
    pub gamma: f64,
    /// Extra closing applied to the planned displacement.
    pub aperture_bias: f64,
    pub push_down_limit: f64,
    pub lift_height: f64,
    pub eta_pos: f64,
    /// Radians.
    pub eta_ori: f64,
    /// Close-probe threshold `ξ`.
    pub close_probe_threshold: f64,
    /// Close-probe wait `δt`, seconds.
    pub probe_wait: f64,
    /// Thickness of each finger behind its pad, for the penetration check.
    pub finger_depth: f64,
    pub penetration_tolerance: f64,
    /// Radians.
    pub antipodal_angle: f64,
}

impl Default for ExecutionParams {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            aperture_bias: 0.0,
            push_down_limit: 0.01,
            lift_height: 0.30,
            eta_pos: 0.06,
            eta_ori: 30f64.to_radians(),
            close_probe_threshold: 0.003,
            probe_wait: 1.0,
            finger_depth: 0.01,
            penetration_tolerance: 0.0005,
            antipodal_angle: 30f64.to_radians(),
        }
    }
}

impl ExecutionParams {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.gamma > 0.0
            && self.eta_pos > 0.0
            && self.eta_ori > 0.0
            && self.eta_ori < std::f64::consts::PI
            && self.aperture_bias >= 0.0
            && self.finger_depth > 0.0
            && self.penetration_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter("invalid execution parameters".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub e_pos: f64,
    /// Radians.
    pub e_ori: f64,
}

/// `p_pre = t − γ R n_z`, keeping the grasp orientation.
pub fn pre_grasp_pose(rotation: &Rotation3<f64>, translation: &Vec3, n_z: &Vec3, gamma: f64) -> RigidTransform {
    RigidTransform::new(*rotation, translation - gamma * (rotation * n_z))
}

/// Closes the planned displacement further by `bias`, never below `d_min`.
pub fn apply_aperture_bias(delta_d: f64, bias: f64, aperture: f64, spec: &GripperSpec) -> f64 {
    (delta_d - bias).max(spec.d_min_m - aperture)
}

/// `2 acos |w|` of the relative rotation between two quaternions
/// `[w, x, y, z]`; inputs need not be normalized.
pub fn orientation_error(q_initial: [f64; 4], q_lifted: [f64; 4]) -> f64 {
    let a = UnitQuaternion::from_quaternion(Quaternion::new(q_initial[0], q_initial[1], q_initial[2], q_initial[3]));
    let b = UnitQuaternion::from_quaternion(Quaternion::new(q_lifted[0], q_lifted[1], q_lifted[2], q_lifted[3]));
    let rel = b * a.inverse();
    2.0 * rel.w.abs().min(1.0).acos()
}

/// Position error against the lift target and relative orientation change.
pub fn pose_error(initial: &RigidTransform, lifted: &RigidTransform, lift_height: f64) -> PoseError {
    let target = initial.translation + Vec3::new(0.0, 0.0, lift_height);
    let q = |r: &Rotation3<f64>| {
        let u = UnitQuaternion::from_rotation_matrix(r);
        [u.w, u.i, u.j, u.k]
    };
    PoseError {
        e_pos: (target - lifted.translation).norm(),
        e_ori: orientation_error(q(&initial.rotation), q(&lifted.rotation)),
    }
}

/// Both errors strictly below their thresholds.
pub fn success(err: &PoseError, params: &ExecutionParams) -> Outcome {
    Outcome::from_bool(err.e_pos < params.eta_pos && err.e_ori < params.eta_ori)
}

/// Aperture after the probing close strictly above `ξ`.
pub fn close_probe_success(aperture: f64, params: &ExecutionParams) -> Outcome {
    Outcome::from_bool(aperture > params.close_probe_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub aperture: f64,
    pub penetration: bool,
    pub max_penetration_m: f64,
    pub penetrating_points: usize,
    pub pairs: usize,
    pub antipodal_fraction: f64,
    pub contained_points: usize,
    pub containment: bool,
}

/// Pad frame recovered from a posed surface built on the canonical grid.
struct PadFrame {
    center: Vec3,
    width_axis: Vec3,
    finger_axis: Vec3,
    height_axis: Vec3,
    half_gap: f64,
}

impl PadFrame {
    fn from_surface(surface: &GripperSurface) -> Self {
        let [c1, c2] = surface.pad_centers();
        let pad = surface.fingers[0].points();
        let n = (pad.len() as f64).sqrt().round() as usize;
        let width_axis = (pad[n - 1] - pad[0]).normalize();
        let height_axis = (pad[n * (n - 1)] - pad[0]).normalize();
        Self {
            center: (c1 + c2) / 2.0,
            width_axis,
            finger_axis: (c2 - c1).normalize(),
            height_axis,
            half_gap: (c2 - c1).norm() / 2.0,
        }
    }

    fn local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.center;
        Vec3::new(d.dot(&self.width_axis), d.dot(&self.finger_axis), d.dot(&self.height_axis))
    }
}

/// Penetration of the finger bodies, antipodality of the contact pairs and
/// whether any object material sits between the pads.
pub fn geometric_feasibility(
    posed: &GripperSurface,
    object: &ObjectModel,
    spec: &GripperSpec,
    matching: &MatchParams,
    params: &ExecutionParams,
) -> FeasibilityReport {
    let frame = PadFrame::from_surface(posed);
    let (hw, hh) = (spec.finger_width_m / 2.0, spec.finger_height_m / 2.0);
    let mut max_pen: f64 = 0.0;
    let mut penetrating = 0;
    let mut contained = 0;
    for p in object.cloud().points() {
        let l = frame.local(p);
        if l.x.abs() > hw || l.z.abs() > hh {
            continue;
        }
        let beyond = l.y.abs() - frame.half_gap;
        if beyond < 0.0 {
            contained += 1;
        } else if beyond <= params.finger_depth {
            max_pen = max_pen.max(beyond);
            if beyond > params.penetration_tolerance {
                penetrating += 1;
            }
        }
    }
    let loose = MatchParams { max_normal_angle: std::f64::consts::PI, min_pairs_per_finger: 0, ..*matching };
    let set = match_unchecked(posed, object, &loose);
    let antipodal = set
        .iter()
        .filter(|(_, pair)| crate::correspondence::antipodal_angle(&pair.n_p, &pair.n_q) <= params.antipodal_angle)
        .count();
    FeasibilityReport {
        aperture: 2.0 * frame.half_gap,
        penetration: penetrating > 0,
        max_penetration_m: max_pen,
        penetrating_points: penetrating,
        pairs: set.len(),
        antipodal_fraction: if set.is_empty() { 0.0 } else { antipodal as f64 / set.len() as f64 },
        contained_points: contained,
        containment: contained > 0,
    }
}
