//! Stage 3: closed-form aperture update.
//!
//! Opening by `δd` moves finger `j` by `½(−1)^j v δd`, so each point-to-plane
//! residual becomes `b − a δd` with `a = ½(−1)^{j−1} v·n^q` and
//! `b = (p − q)·n^q`. The 1-D least-squares optimum `Σab / Σa²` is then
//! clamped so the aperture stays inside the gripper's range.

use crate::correspondence::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::gripper::{transform_finger_surface, GripperSpec, GripperState, GripperSurface};

/// `(a, b)` per pair, finger 1 first.
pub fn aperture_coefficients(set: &CorrespondenceSet, state: &GripperState) -> Vec<(f64, f64)> {
    set.iter()
        .map(|(finger, pair)| {
            let a = -0.5 * finger.sign() * state.finger_axis.dot(&pair.n_q);
            let b = (pair.p - pair.q).dot(&pair.n_q);
            (a, b)
        })
        .collect()
}

/// Unconstrained optimum `δd̂`.
pub fn unconstrained_displacement(set: &CorrespondenceSet, state: &GripperState) -> Result<f64> {
    let (num, den) = aperture_coefficients(set, state)
        .into_iter()
        .fold((0.0, 0.0), |(n, d), (a, b)| (n + a * b, d + a * a));
    if den == 0.0 {
        return Err(Error::DegenerateAperture);
    }
    Ok(num / den)
}

/// Clamps `δd̂` so that `d + δd ∈ [d_min, d_max]`.
pub fn clamp_displacement(delta_hat: f64, aperture: f64, spec: &GripperSpec) -> f64 {
    if delta_hat + aperture < spec.d_min_m {
        spec.d_min_m - aperture
    } else if delta_hat + aperture > spec.d_max_m {
        spec.d_max_m - aperture
    } else {
        delta_hat
    }
}

/// Returns the applied displacement `δd*`.
pub fn finger_opt_step(
    state: &mut GripperState,
    surface: &mut GripperSurface,
    set: &mut CorrespondenceSet,
    spec: &GripperSpec,
) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyCorrespondence);
    }
    let delta = clamp_displacement(unconstrained_displacement(set, state)?, state.aperture, spec);
    let identity = nalgebra::Rotation3::identity();
    let zero = crate::geometry::Vec3::zeros();
    *surface = transform_finger_surface(surface, &identity, &zero, delta, &state.finger_axis);
    let v = state.finger_axis;
    set.map_finger_side(|f, p, n| (p + 0.5 * f.sign() * delta * v, *n));
    state.aperture += delta;
    Ok(delta)
}
