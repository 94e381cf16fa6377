//! Stage 1: rotation update for contact-normal and approach alignment.
//!
//! Linearising `R(ω) ≈ I + [ω]×` turns each normal term
//! `(R n^p)·n^q + 1` into `ω·(n^p × n^q) + n^p·n^q + 1`, and the approach
//! term likewise, giving an `(N+1) × 3` least-squares system in `ω`. The
//! solution is mapped back through Rodrigues and applied about the gripper
//! origin, so rotation never drags the pads sideways.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::correspondence::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, Mat3, Vec3};
use crate::gripper::{GripperState, GripperSurface};
use crate::quality::{rotation_error, QualityWeights};

/// Ridge used when the unregularised normal equations are singular.
pub const FALLBACK_RIDGE: f64 = 1e-9;
/// Maximum number of step halvings before a step is rejected outright.
pub const MAX_HALVINGS: u32 = 8;

/// Row-major `A` (M × 3) and `b` (M).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub rows: Vec<[f64; 3]>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `½‖Aω − b‖²`.
    pub fn objective(&self, w: &Vec3) -> f64 {
        0.5 * self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| {
                let r = a[0] * w.x + a[1] * w.y + a[2] * w.z - b;
                r * r
            })
            .sum::<f64>()
    }

    fn normal_matrix(&self) -> (Mat3, Vec3) {
        let mut ata = Mat3::zeros();
        let mut atb = Vec3::zeros();
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            let a = Vec3::new(a[0], a[1], a[2]);
            ata += a * a.transpose();
            atb += a * *b;
        }
        (ata, atb)
    }
}

/// Rows `(n^p × n^q, −(n^p·n^q + 1))` per pair plus one approach row
/// `(β n_z × n_app, −β(n_z·n_app − 1))`.
pub fn assemble_rotation_system(set: &CorrespondenceSet, z_axis: &Vec3, approach: &Vec3, beta: f64) -> LinearSystem {
    let mut rows = Vec::with_capacity(set.len() + 1);
    let mut rhs = Vec::with_capacity(set.len() + 1);
    for (_, pair) in set.iter() {
        let a = pair.n_p.cross(&pair.n_q);
        rows.push([a.x, a.y, a.z]);
        rhs.push(-(pair.n_p.dot(&pair.n_q) + 1.0));
    }
    let a = beta * z_axis.cross(approach);
    rows.push([a.x, a.y, a.z]);
    rhs.push(-beta * (z_axis.dot(approach) - 1.0));
    LinearSystem { rows, rhs }
}

/// `ω = (AᵀA + ridge·I)⁻¹ Aᵀb`. With `ridge == 0` a rank-deficient `AᵀA`
/// is reported as [`Error::SingularSystem`].
pub fn solve_normal_equations(sys: &LinearSystem, ridge: f64) -> Result<Vec3> {
    let (ata, atb) = sys.normal_matrix();
    if ridge <= 0.0 {
        let eig = SymmetricEigen::new(ata);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::SingularSystem);
        }
    }
    let m = ata + Mat3::identity() * ridge.max(0.0);
    let chol = Cholesky::new(m).ok_or(Error::SingularSystem)?;
    Ok(chol.solve(&atb))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotOptOutcome {
    /// Applied rotation vector.
    pub omega: Vec3,
    /// Raw least-squares solution before the descent guard.
    pub proposed: Vec3,
    pub halvings: u32,
    /// The guard gave up and no rotation was applied.
    pub rejected: bool,
    pub ridge: f64,
    pub e_na_before: f64,
    pub e_na_after: f64,
}

impl RotOptOutcome {
    pub fn guard_triggered(&self) -> bool {
        self.halvings > 0 || self.rejected
    }
}

/// One rotation update. Rotates the pads, the finger side of the pairs,
/// `v` and `n_z` about the gripper origin `state.translation`.
pub fn rot_opt_step(
    state: &mut GripperState,
    surface: &mut GripperSurface,
    set: &mut CorrespondenceSet,
    weights: &QualityWeights,
) -> Result<RotOptOutcome> {
    let sys = assemble_rotation_system(set, &state.z_axis, &state.approach, weights.beta);
    let (proposed, ridge) = match solve_normal_equations(&sys, 0.0) {
        Ok(w) => (w, 0.0),
        Err(Error::SingularSystem) => (solve_normal_equations(&sys, FALLBACK_RIDGE)?, FALLBACK_RIDGE),
        Err(e) => return Err(e),
    };

    let energy = |w: &Vec3| rotation_error(set, &state.z_axis, &state.approach, w, weights.beta);
    let before = energy(&Vec3::zeros());
    let mut omega = proposed;
    let mut after = energy(&omega);
    let mut halvings = 0;
    while after > before && halvings < MAX_HALVINGS {
        omega *= 0.5;
        halvings += 1;
        after = energy(&omega);
    }
    let rejected = after > before;
    if rejected {
        omega = Vec3::zeros();
        after = before;
    }

    if omega != Vec3::zeros() {
        let r = rodrigues(&omega);
        let c = state.translation;
        let rotate = |p: &Vec3, n: &Vec3| (r * (p - c) + c, r * n);
        for finger in &mut surface.fingers {
            *finger = finger.map(rotate);
        }
        set.map_finger_side(|_, p, n| rotate(p, n));
        state.rotation = r * state.rotation;
        state.finger_axis = r * state.finger_axis;
        state.z_axis = r * state.z_axis;
    }

    Ok(RotOptOutcome {
        omega,
        proposed,
        halvings,
        rejected,
        ridge,
        e_na_before: before,
        e_na_after: after,
    })
}
