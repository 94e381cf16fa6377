//! Rotation and rigid-motion kernels shared by every solver.
//!
//! Rotations are parameterised by axis-angle vectors `ω` (axis times angle in
//! radians). [`rodrigues`] is the exact exponential map; [`small_rotation`] is
//! its first-order approximation and is only ever used to derive
//! least-squares coefficients, never applied to geometry.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this angle `rodrigues` returns the identity.
pub const RODRIGUES_EPS: f64 = 1e-12;

/// Axis-angle rotation vector `ω`, `‖ω‖` in radians.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisAngle(pub [f64; 3]);

impl AxisAngle {
    pub const ZERO: AxisAngle = AxisAngle([0.0; 3]);

    pub fn from_vec(w: Vec3) -> Self {
        AxisAngle([w.x, w.y, w.z])
    }

    pub fn vec(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn angle(&self) -> f64 {
        self.vec().norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_vec(self.vec() * s)
    }
}

/// Cross-product matrix: `skew(ω) * x == ω × x`.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// First-order rotation `I + [ω]×`. Not orthonormal.
pub fn small_rotation(w: &Vec3) -> Mat3 {
    Mat3::identity() + skew(w)
}

/// `R = I + sinθ [u]× + (1 − cosθ)[u]×²` with `u = ω/‖ω‖`, `θ = ‖ω‖`.
pub fn rodrigues(w: &Vec3) -> Rotation3<f64> {
    let theta = w.norm();
    if theta < RODRIGUES_EPS {
        return Rotation3::identity();
    }
    let k = skew(&(w / theta));
    let m = Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
    Rotation3::from_matrix_unchecked(m)
}

/// Rotation angle in `[0, π]` from the trace.
pub fn rotation_angle(r: &Rotation3<f64>) -> f64 {
    ((r.matrix().trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
}

pub fn rotation_to_rows(r: &Rotation3<f64>) -> [[f64; 3]; 3] {
    let m = r.matrix();
    [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ]
}

/// Rebuilds a rotation from row-major entries, re-orthonormalising to absorb
/// rounding from text round-trips.
pub fn rotation_from_rows(rows: &[[f64; 3]; 3]) -> Rotation3<f64> {
    let m = Mat3::from_row_slice(&[
        rows[0][0], rows[0][1], rows[0][2], //
        rows[1][0], rows[1][1], rows[1][2], //
        rows[2][0], rows[2][1], rows[2][2],
    ]);
    let r = Rotation3::from_matrix_unchecked(m);
    let mut r = r;
    r.renormalize();
    r
}

pub fn to_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn from_array(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Shortest-arc rotation taking unit `from` onto unit `to`. Antiparallel
/// inputs rotate by π about an axis perpendicular to `from`, picked from the
/// coordinate axis least aligned with it.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Rotation3<f64> {
    let a = from.normalize();
    let b = to.normalize();
    let axis = a.cross(&b);
    let s = axis.norm();
    let c = a.dot(&b);
    if s < 1e-12 {
        if c > 0.0 {
            return Rotation3::identity();
        }
        let helper = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vec3::x()
        } else if a.y.abs() <= a.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let perp = a.cross(&helper).normalize();
        return rodrigues(&(perp * std::f64::consts::PI));
    }
    rodrigues(&(axis / s * s.atan2(c)))
}

/// Rigid motion `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Rotation3<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vec3::zeros())
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Rotation3::identity(), t)
    }

    /// Rotation by `rotation` about the fixed point `center`.
    pub fn about_center(rotation: Rotation3<f64>, center: &Vec3) -> Self {
        Self::new(rotation, center - rotation * center)
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_inv = self.rotation.inverse();
        RigidTransform::new(r_inv, -(r_inv * self.translation))
    }
}

/// Row-major serialisable mirror of [`RigidTransform`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformRecord {
    fn from(t: &RigidTransform) -> Self {
        Self {
            rotation: rotation_to_rows(&t.rotation),
            translation: to_array(&t.translation),
        }
    }
}

impl From<&TransformRecord> for RigidTransform {
    fn from(r: &TransformRecord) -> Self {
        RigidTransform::new(rotation_from_rows(&r.rotation), from_array(r.translation))
    }
}
