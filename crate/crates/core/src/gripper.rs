//! Parallel-jaw gripper geometry: pad surfaces, specs and pose state.
//!
//! Gripper frame: the finger axis `v` is `+y` (pointing from finger 1 to
//! finger 2), the approach / hand z-axis is `+z`, and the frame origin sits
//! midway between the pads. Each pad is a planar `W × H` grid spanning `x`
//! (width) and `z` (height).

use std::fmt;

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};
use crate::pointcloud::{mean, OrientedPointCloud};

/// Finger index. `First` sits on the `−v` side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Finger {
    First,
    Second,
}

impl Finger {
    pub const BOTH: [Finger; 2] = [Finger::First, Finger::Second];

    pub fn index(self) -> usize {
        match self {
            Finger::First => 0,
            Finger::Second => 1,
        }
    }

    /// `(−1)^j` with `j ∈ {1, 2}`.
    pub fn sign(self) -> f64 {
        match self {
            Finger::First => -1.0,
            Finger::Second => 1.0,
        }
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finger::First => write!(f, "finger 1"),
            Finger::Second => write!(f, "finger 2"),
        }
    }
}

pub const FINGER_AXIS: Vec3 = Vec3::new(0.0, 1.0, 0.0);
pub const HAND_Z_AXIS: Vec3 = Vec3::new(0.0, 0.0, 1.0);

fn default_pad_resolution() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperSpec {
    pub name: String,
    pub finger_width_m: f64,
    pub finger_height_m: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    #[serde(default = "default_pad_resolution")]
    pub pad_resolution: usize,
}

impl GripperSpec {
    pub fn franka_hand() -> Self {
        Self::preset_dims("franka_hand", 0.018, 0.018, 0.011, 0.091)
    }

    pub fn robotiq_hande() -> Self {
        Self::preset_dims("robotiq_hande", 0.020, 0.021, 0.0, 0.050)
    }

    pub fn umi() -> Self {
        Self::preset_dims("umi", 0.119, 0.026, 0.0, 0.080)
    }

    fn preset_dims(name: &str, w: f64, h: f64, d_min: f64, d_max: f64) -> Self {
        Self {
            name: name.to_string(),
            finger_width_m: w,
            finger_height_m: h,
            d_min_m: d_min,
            d_max_m: d_max,
            pad_resolution: default_pad_resolution(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "franka_hand" | "franka" => Some(Self::franka_hand()),
            "robotiq_hande" | "robotiq" => Some(Self::robotiq_hande()),
            "umi" => Some(Self::umi()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.finger_width_m > 0.0 && self.finger_height_m > 0.0) {
            return Err(Error::InvalidParameter("finger dimensions must be positive".into()));
        }
        if !(0.0 <= self.d_min_m && self.d_min_m < self.d_max_m) {
            return Err(Error::InvalidParameter("need 0 <= d_min < d_max".into()));
        }
        if self.pad_resolution < 2 {
            return Err(Error::InvalidParameter("pad_resolution must be >= 2".into()));
        }
        Ok(())
    }

    pub fn contains_aperture(&self, d: f64) -> bool {
        (self.d_min_m..=self.d_max_m).contains(&d)
    }

    pub fn clamp_aperture(&self, d: f64) -> f64 {
        d.clamp(self.d_min_m, self.d_max_m)
    }
}

/// Both finger pads as oriented clouds. Finger 1 normals point along `+v`,
/// finger 2 along `−v` (the inner faces look at each other).
#[derive(Debug, Clone, PartialEq)]
pub struct GripperSurface {
    pub fingers: [OrientedPointCloud; 2],
}

impl GripperSurface {
    pub fn finger(&self, f: Finger) -> &OrientedPointCloud {
        &self.fingers[f.index()]
    }

    pub fn point_count(&self) -> usize {
        self.fingers[0].len() + self.fingers[1].len()
    }

    /// Centroid of the union of both pads.
    pub fn centroid(&self) -> Vec3 {
        let all: Vec<Vec3> = self.fingers.iter().flat_map(|f| f.points().iter().copied()).collect();
        mean(&all)
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            fingers: [self.fingers[0].transformed(t), self.fingers[1].transformed(t)],
        }
    }

    /// Pad centres per finger.
    pub fn pad_centers(&self) -> [Vec3; 2] {
        [self.fingers[0].centroid(), self.fingers[1].centroid()]
    }
}

/// Pads for `spec` at aperture `d0`, in the gripper frame.
pub fn build_canonical_surface(spec: &GripperSpec, d0: f64) -> Result<GripperSurface> {
    spec.validate()?;
    if !spec.contains_aperture(d0) {
        return Err(Error::InvalidParameter(format!(
            "aperture {d0} outside [{}, {}]",
            spec.d_min_m, spec.d_max_m
        )));
    }
    let n = spec.pad_resolution;
    let step = |extent: f64, k: usize| -extent / 2.0 + extent * k as f64 / (n - 1) as f64;
    let mut grid = Vec::with_capacity(n * n);
    for iz in 0..n {
        for ix in 0..n {
            grid.push((step(spec.finger_width_m, ix), step(spec.finger_height_m, iz)));
        }
    }
    let pad = |finger: Finger| {
        let offset = finger.sign() * d0 / 2.0;
        let points = grid.iter().map(|&(x, z)| Vec3::new(x, offset, z)).collect();
        let normal = -finger.sign() * FINGER_AXIS;
        OrientedPointCloud::from_parts_unchecked(points, vec![normal; n * n])
    };
    Ok(GripperSurface {
        fingers: [pad(Finger::First), pad(Finger::Second)],
    })
}

/// Gripper transform: finger-`j` points map to
/// `R p + t + ½ (−1)^j R v δd`, normals to `R n`. `δd > 0` opens.
pub fn transform_finger_surface(
    surface: &GripperSurface,
    rotation: &Rotation3<f64>,
    translation: &Vec3,
    delta_d: f64,
    finger_axis: &Vec3,
) -> GripperSurface {
    let rv = rotation * finger_axis;
    let finger = |f: Finger| {
        let shift = translation + 0.5 * f.sign() * delta_d * rv;
        surface.fingers[f.index()].map(|p, n| (rotation * p + shift, rotation * n))
    };
    GripperSurface {
        fingers: [finger(Finger::First), finger(Finger::Second)],
    }
}

/// Full decision state of the gripper in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperState {
    pub rotation: Rotation3<f64>,
    /// Gripper-frame origin (midpoint between the pads).
    pub translation: Vec3,
    pub aperture: f64,
    /// Unit finger axis `v` in the world frame.
    pub finger_axis: Vec3,
    /// Unit hand z-axis `n_z` in the world frame.
    pub z_axis: Vec3,
    /// Desired approach direction `n_app`.
    pub approach: Vec3,
}

impl GripperState {
    pub fn new(rotation: Rotation3<f64>, translation: Vec3, aperture: f64, approach: Vec3) -> Self {
        Self {
            rotation,
            translation,
            aperture,
            finger_axis: rotation * FINGER_AXIS,
            z_axis: rotation * HAND_Z_AXIS,
            approach: approach.normalize(),
        }
    }

    pub fn pose(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.translation)
    }
}

/// Pads for `spec` posed at `(R, t)` with aperture `d`.
pub fn posed_surface(spec: &GripperSpec, rotation: &Rotation3<f64>, translation: &Vec3, aperture: f64) -> Result<GripperSurface> {
    let canonical = build_canonical_surface(spec, spec.d_max_m)?;
    Ok(transform_finger_surface(
        &canonical,
        rotation,
        translation,
        aperture - spec.d_max_m,
        &FINGER_AXIS,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rodrigues;

    #[test]
    fn franka_pads() {
        let spec = GripperSpec::franka_hand();
        let s = build_canonical_surface(&spec, 0.091).unwrap();
        let [c1, c2] = s.pad_centers();
        assert!(((c2 - c1).norm() - 0.091).abs() < 1e-12);
        let xs: Vec<f64> = s.fingers[0].points().iter().map(|p| p.x).collect();
        let width = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((width - 0.018).abs() < 1e-12);
        assert!(s.centroid().amax() < 1e-12);
        assert!(s.fingers[0].normals().iter().all(|n| *n == FINGER_AXIS));
        assert!(s.fingers[1].normals().iter().all(|n| *n == -FINGER_AXIS));
    }

    #[test]
    fn resolution_two_gives_corners() {
        let mut spec = GripperSpec::franka_hand();
        spec.pad_resolution = 2;
        let s = build_canonical_surface(&spec, 0.05).unwrap();
        assert_eq!(s.fingers[0].len(), 4);
        assert!(s.fingers[0].points().iter().all(|p| p.x.abs() == 0.009 && p.z.abs() == 0.009));
    }

    #[test]
    fn out_of_range_aperture() {
        assert!(build_canonical_surface(&GripperSpec::franka_hand(), 0.2).is_err());
        assert!(build_canonical_surface(&GripperSpec::franka_hand(), 0.005).is_err());
    }

    #[test]
    fn deterministic_build() {
        let a = build_canonical_surface(&GripperSpec::umi(), 0.04).unwrap();
        let b = build_canonical_surface(&GripperSpec::umi(), 0.04).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closing_moves_fingers_inward() {
        let s = build_canonical_surface(&GripperSpec::franka_hand(), 0.091).unwrap();
        let r = Rotation3::identity();
        let same = transform_finger_surface(&s, &r, &Vec3::zeros(), 0.0, &FINGER_AXIS);
        assert_eq!(same, s);
        let closed = transform_finger_surface(&s, &r, &Vec3::zeros(), -0.01, &FINGER_AXIS);
        let [a0, b0] = s.pad_centers();
        let [a1, b1] = closed.pad_centers();
        assert!(((a1 - a0) - Vec3::new(0.0, 0.005, 0.0)).amax() < 1e-15);
        assert!(((b1 - b0) - Vec3::new(0.0, -0.005, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn aperture_change_and_rotation_isometry() {
        let s = build_canonical_surface(&GripperSpec::franka_hand(), 0.06).unwrap();
        let r = rodrigues(&Vec3::new(0.4, -0.2, 1.1));
        let t = Vec3::new(0.1, -0.3, 0.2);
        for dd in [-0.02, 0.0, 0.013] {
            let out = transform_finger_surface(&s, &r, &t, dd, &FINGER_AXIS);
            let [a, b] = out.pad_centers();
            let gap = (b - a).dot(&(r * FINGER_AXIS));
            assert!((gap - (0.06 + dd)).abs() < 1e-12);
            if dd == 0.0 {
                assert_eq!(out, s.transformed(&RigidTransform::new(r, t)));
            }
        }
    }
}
