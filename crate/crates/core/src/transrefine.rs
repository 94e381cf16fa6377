//! Stage 2: translate the pads so the matched finger points and matched
//! object points share a centroid. Closed form, uniform weights.

use crate::correspondence::CorrespondenceSet;
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};
use crate::gripper::{GripperState, GripperSurface};

/// Returns the applied translation `t^c = c^o − c^f`.
pub fn trans_refine_step(
    state: &mut GripperState,
    surface: &mut GripperSurface,
    set: &mut CorrespondenceSet,
) -> Result<Vec3> {
    let c_f = set.finger_centroid().ok_or(Error::EmptyCorrespondence)?;
    let c_o = set.object_centroid().ok_or(Error::EmptyCorrespondence)?;
    let t_c = c_o - c_f;
    *surface = surface.transformed(&RigidTransform::from_translation(t_c));
    set.map_finger_side(|_, p, n| (p + t_c, *n));
    state.translation += t_c;
    Ok(t_c)
}
