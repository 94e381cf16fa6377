//! Joint surface fitting: one linearized least-squares over all seven pose
//! parameters per iteration, with no centroid-alignment stage.
//!
//! Unknowns are `x = (ω, t, δd)`, with `ω` applied about the gripper origin
//! `c`. Each pair contributes a point-to-plane row
//! `[(p − c) × n^q, n^q, ½ s v·n^q] x = −(p − q)·n^q`, an `α`-weighted normal
//! row and, optionally, one `β`-weighted approach row.

use nalgebra::{DMatrix, DVector};
use web_time::Instant;

use crate::correspondence::{match_surfaces, CorrespondenceSet, ObjectModel};
use crate::error::{Error, Result};
use crate::geometry::{rodrigues, to_array, Vec3};
use crate::gripper::{GripperSpec, GripperState};
use crate::planner::{Method, PlanConfig, PlanContext, PlanResult, Termination, TraceEntry};
use crate::pointcloud::OrientedPointCloud;

/// Relative singular-value cutoff for the pseudo-inverse.
const PINV_RCOND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStep {
    pub omega: Vec3,
    pub translation: Vec3,
    pub delta_d: f64,
}

/// Stacked `(A, b)` of the joint system.
pub fn assemble_joint_system(
    set: &CorrespondenceSet,
    state: &GripperState,
    alpha: f64,
    beta: Option<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = set.len();
    let m = 2 * n + usize::from(beta.is_some());
    let mut a = DMatrix::zeros(m, 7);
    let mut b = DVector::zeros(m);
    let c = state.translation;
    for (i, (finger, pair)) in set.iter().enumerate() {
        let lever = (pair.p - c).cross(&pair.n_q);
        for k in 0..3 {
            a[(i, k)] = lever[k];
            a[(i, 3 + k)] = pair.n_q[k];
        }
        a[(i, 6)] = 0.5 * finger.sign() * state.finger_axis.dot(&pair.n_q);
        b[i] = -(pair.p - pair.q).dot(&pair.n_q);

        let r = n + i;
        let nc = pair.n_p.cross(&pair.n_q);
        for k in 0..3 {
            a[(r, k)] = alpha * nc[k];
        }
        b[r] = -alpha * (pair.n_p.dot(&pair.n_q) + 1.0);
    }
    if let Some(beta) = beta {
        let r = 2 * n;
        let zc = state.z_axis.cross(&state.approach);
        for k in 0..3 {
            a[(r, k)] = beta * zc[k];
        }
        b[r] = -beta * (state.z_axis.dot(&state.approach) - 1.0);
    }
    (a, b)
}

/// Minimum-norm least-squares step.
pub fn solve_joint_step(a: DMatrix<f64>, b: &DVector<f64>) -> Result<JointStep> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::SingularSystem);
    }
    let x = svd.solve(b, PINV_RCOND * smax).map_err(|_| Error::SingularSystem)?;
    Ok(JointStep {
        omega: Vec3::new(x[0], x[1], x[2]),
        translation: Vec3::new(x[3], x[4], x[5]),
        delta_d: x[6],
    })
}

/// Applies a step; the aperture change is clamped to the gripper range.
fn apply(state: &mut GripperState, step: &JointStep, spec: &GripperSpec) -> f64 {
    let r = rodrigues(&step.omega);
    state.rotation = r * state.rotation;
    state.finger_axis = r * state.finger_axis;
    state.z_axis = r * state.z_axis;
    state.translation += step.translation;
    let dd = crate::fingeropt::clamp_displacement(step.delta_d, state.aperture, spec);
    state.aperture += dd;
    dd
}

pub fn visf_plan(object: &OrientedPointCloud, spec: &GripperSpec, config: &PlanConfig) -> Result<PlanResult> {
    let started = Instant::now();
    let model = ObjectModel::new(object.clone());
    let mut result = visf_plan_with_model(&model, spec, config)?;
    result.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

pub fn visf_plan_with_model(object: &ObjectModel, spec: &GripperSpec, config: &PlanConfig) -> Result<PlanResult> {
    let started = Instant::now();
    let ctx = PlanContext::new(object, spec, config)?;
    let mut state = ctx.initial_state()?;
    let initial_quality = Some(ctx.evaluate(&state));
    let beta = config.visf_approach_term.then_some(config.weights.beta);

    let mut set = match match_surfaces(&ctx.surface_for(&state), object, &config.matching) {
        Ok(s) => s,
        Err(Error::OneSidedCorrespondence { .. }) => {
            return Ok(ctx.finish(Method::Visf, &state, 0, 0, Vec::new(), initial_quality, Termination::CorrespondenceFailure, 0, started));
        }
        Err(e) => return Err(e),
    };
    let mut e = ctx.loop_objective(&set);
    let mut e_prev = f64::INFINITY;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut termination = Termination::Converged;

    while e_prev - e >= config.delta_e {
        if trace.len() >= config.max_iters {
            termination = Termination::MaxIters;
            break;
        }
        if !trace.is_empty() {
            set = match match_surfaces(&ctx.surface_for(&state), object, &config.matching) {
                Ok(s) => s,
                Err(Error::OneSidedCorrespondence { .. }) => {
                    termination = Termination::CorrespondenceFailure;
                    break;
                }
                Err(err) => return Err(err),
            };
        }
        let (n1, n2) = (set.pairs[0].len(), set.pairs[1].len());
        e_prev = ctx.loop_objective(&set);
        let (a, b) = assemble_joint_system(&set, &state, config.weights.alpha, beta);
        let step = match solve_joint_step(a, &b) {
            Ok(s) => s,
            Err(Error::SingularSystem) => {
                termination = Termination::Degenerate;
                break;
            }
            Err(err) => return Err(err),
        };
        let dd = apply(&mut state, &step, spec);
        // Same pairs, finger side re-posed: the objective of this step.
        let surface = ctx.surface_for(&state);
        for (finger, pairs) in crate::gripper::Finger::BOTH.iter().zip(set.pairs.iter_mut()) {
            let cloud = surface.finger(*finger);
            for pair in pairs.iter_mut() {
                pair.p = cloud.points()[pair.finger_index];
                pair.n_p = cloud.normals()[pair.finger_index];
            }
        }
        e = ctx.loop_objective(&set);
        trace.push(TraceEntry {
            iter: trace.len() + 1,
            e_before: e_prev,
            e_after: e,
            omega: to_array(&step.omega),
            t_c: to_array(&step.translation),
            delta_d: dd,
            n1,
            n2,
            halvings: 0,
            note: None,
        });
    }

    let iterations = trace.len();
    Ok(ctx.finish(Method::Visf, &state, iterations, iterations, trace, initial_quality, termination, 0, started))
}
