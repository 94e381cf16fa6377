//! The alternating planner: rotation, translation, aperture.
//!
//! Each outer iteration re-matches the posed pads against the object, then
//! runs [`rot_opt_step`], [`trans_refine_step`] and [`finger_opt_step`] on
//! that correspondence set. The loop stops once an iteration improves the
//! loop objective by less than `delta_e` (or after `max_iters`).

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::correspondence::{match_surfaces, match_unchecked, CorrespondenceSet, MatchParams, ObjectModel};
use crate::error::{Error, Result};
use crate::fingeropt::finger_opt_step;
use crate::geometry::{from_array, rotation_from_rows, rotation_to_rows, to_array, Vec3};
use crate::gripper::{build_canonical_surface, transform_finger_surface, GripperSpec, GripperState, GripperSurface};
use crate::kmeans::init_translation_kmeans;
use crate::pointcloud::OrientedPointCloud;
use crate::quality::{geom_error, surface_distance_error, QualityReport, QualityWeights};
use crate::rotopt::rot_opt_step;
use crate::transrefine::trans_refine_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T0Mode {
    Kmeans,
    Explicit,
}

/// Quantity the outer loop monitors for convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LoopObjective {
    #[default]
    Geom,
    PointToPlane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub weights: QualityWeights,
    #[serde(rename = "match")]
    pub matching: MatchParams,
    pub delta_e: f64,
    pub max_iters: usize,
    /// Initial aperture; the gripper's maximum opening when absent.
    pub d0: Option<f64>,
    /// Finger axis of the canonical pads.
    pub v0: [f64; 3],
    /// Hand z-axis of the canonical pads.
    pub n_z0: [f64; 3],
    /// Desired approach direction.
    pub n_app: [f64; 3],
    /// Initial rotation, row-major.
    pub r0: [[f64; 3]; 3],
    pub t0_mode: T0Mode,
    pub kmeans_k: usize,
    pub kmeans_seed: u64,
    /// Index into the sorted centroids; nearest-to-centroid when absent.
    pub kmeans_pick: Option<usize>,
    pub explicit_t0: [f64; 3],
    pub loop_objective: LoopObjective,
    /// Keep the approach term in the joint baseline solve.
    pub visf_approach_term: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            weights: QualityWeights::default(),
            matching: MatchParams::default(),
            delta_e: 1e-4,
            max_iters: 100,
            d0: None,
            v0: [0.0, 1.0, 0.0],
            n_z0: [0.0, 0.0, 1.0],
            n_app: [0.0, 0.0, 1.0],
            r0: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            t0_mode: T0Mode::Kmeans,
            kmeans_k: 1,
            kmeans_seed: 0,
            kmeans_pick: None,
            explicit_t0: [0.0; 3],
            loop_objective: LoopObjective::Geom,
            visf_approach_term: true,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_e > 0.0) {
            return Err(Error::InvalidParameter("delta_e must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.kmeans_k == 0 {
            return Err(Error::InvalidParameter("kmeans_k must be >= 1".into()));
        }
        if !(self.weights.alpha >= 0.0 && self.weights.beta >= 0.0) {
            return Err(Error::InvalidParameter("weights must be non-negative".into()));
        }
        self.matching.validate()?;
        let v = from_array(self.v0);
        let z = from_array(self.n_z0);
        if (v.norm() - 1.0).abs() > 1e-9 || (z.norm() - 1.0).abs() > 1e-9 || v.dot(&z).abs() > 1e-9 {
            return Err(Error::InvalidParameter("v0 and n_z0 must be orthonormal".into()));
        }
        if from_array(self.n_app).norm() < 1e-12 {
            return Err(Error::InvalidParameter("n_app must be non-zero".into()));
        }
        Ok(())
    }

    pub fn initial_rotation(&self) -> Rotation3<f64> {
        rotation_from_rows(&self.r0)
    }

    pub fn set_initial_rotation(&mut self, r: &Rotation3<f64>) {
        self.r0 = rotation_to_rows(r);
    }

    /// Basis taking the standard pad frame (`v = +y`, `n_z = +z`) onto `(v0, n_z0)`.
    fn pad_basis(&self) -> Rotation3<f64> {
        let v = from_array(self.v0);
        let z = from_array(self.n_z0);
        let x = v.cross(&z);
        Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[x, v, z]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    CorrespondenceFailure,
    Degenerate,
}

impl Termination {
    pub fn is_failure(self) -> bool {
        matches!(self, Termination::CorrespondenceFailure | Termination::Degenerate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Disf,
    Visf,
    Cmaes,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Disf, Method::Visf, Method::Cmaes];

    pub fn name(self) -> &'static str {
        match self {
            Method::Disf => "disf",
            Method::Visf => "visf",
            Method::Cmaes => "cmaes",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disf" => Ok(Method::Disf),
            "visf" => Ok(Method::Visf),
            "cmaes" | "cma-es" | "cma_es" => Ok(Method::Cmaes),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub e_before: f64,
    pub e_after: f64,
    pub omega: [f64; 3],
    pub t_c: [f64; 3],
    pub delta_d: f64,
    pub n1: usize,
    pub n2: usize,
    /// Step halvings of the rotation descent guard.
    #[serde(default)]
    pub halvings: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub const TRACE_CSV_HEADER: &str = "iter,e_before,e_after,wx,wy,wz,tcx,tcy,tcz,dd,n1,n2";

impl TraceEntry {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            self.iter,
            self.e_before,
            self.e_after,
            self.omega[0],
            self.omega[1],
            self.omega[2],
            self.t_c[0],
            self.t_c[1],
            self.t_c[2],
            self.delta_d,
            self.n1,
            self.n2
        )
    }
}

pub fn trace_to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for t in trace {
        out.push_str(&t.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub method: Method,
    /// `R*`, row-major.
    pub rotation: [[f64; 3]; 3],
    /// `t*`: gripper origin in the object frame.
    pub translation: [f64; 3],
    /// `δd*`, accumulated aperture change from `d0`.
    pub delta_d: f64,
    pub d0: f64,
    pub aperture: f64,
    pub finger_axis: [f64; 3],
    pub z_axis: [f64; 3],
    pub approach: [f64; 3],
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
    pub initial_quality: Option<QualityReport>,
    pub quality: Option<QualityReport>,
    pub wall_time_ms: f64,
    pub termination: Termination,
    pub guard_events: usize,
    pub match_params: MatchParams,
}

impl PlanResult {
    pub fn rotation(&self) -> Rotation3<f64> {
        rotation_from_rows(&self.rotation)
    }

    pub fn translation(&self) -> Vec3 {
        from_array(self.translation)
    }
}

/// Shared planning context: object index, pads and configuration.
#[derive(Debug, Clone)]
pub struct PlanContext<'a> {
    pub object: &'a ObjectModel,
    pub spec: &'a GripperSpec,
    pub config: &'a PlanConfig,
    /// Pads at `d0` in the gripper frame, before `R0`.
    pub canonical: GripperSurface,
    pub d0: f64,
    v0: Vec3,
    n_z0: Vec3,
}

impl<'a> PlanContext<'a> {
    pub fn new(object: &'a ObjectModel, spec: &'a GripperSpec, config: &'a PlanConfig) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        let d0 = config.d0.unwrap_or(spec.d_max_m);
        let basis = config.pad_basis();
        let canonical = build_canonical_surface(spec, d0)?.transformed(&crate::geometry::RigidTransform::new(basis, Vec3::zeros()));
        Ok(Self {
            object,
            spec,
            config,
            canonical,
            d0,
            v0: from_array(config.v0),
            n_z0: from_array(config.n_z0),
        })
    }

    pub fn initial_translation(&self) -> Result<Vec3> {
        match self.config.t0_mode {
            T0Mode::Explicit => Ok(from_array(self.config.explicit_t0)),
            T0Mode::Kmeans => init_translation_kmeans(
                self.object.cloud().points(),
                self.config.kmeans_k,
                self.config.kmeans_seed,
                self.config.kmeans_pick,
            ),
        }
    }

    pub fn state_at(&self, rotation: Rotation3<f64>, translation: Vec3, aperture: f64) -> GripperState {
        GripperState {
            rotation,
            translation,
            aperture,
            finger_axis: rotation * self.v0,
            z_axis: rotation * self.n_z0,
            approach: from_array(self.config.n_app).normalize(),
        }
    }

    pub fn initial_state(&self) -> Result<GripperState> {
        Ok(self.state_at(self.config.initial_rotation(), self.initial_translation()?, self.d0))
    }

    /// Pads posed at `state`, built from the pristine canonical surface.
    pub fn surface_for(&self, state: &GripperState) -> GripperSurface {
        transform_finger_surface(&self.canonical, &state.rotation, &state.translation, state.aperture - self.d0, &self.v0)
    }

    pub fn loop_objective(&self, set: &CorrespondenceSet) -> f64 {
        match self.config.loop_objective {
            LoopObjective::Geom => geom_error(set, &self.config.weights),
            LoopObjective::PointToPlane => surface_distance_error(set),
        }
    }

    pub fn report(&self, state: &GripperState, surface: &GripperSurface, set: &CorrespondenceSet) -> QualityReport {
        QualityReport::evaluate(set, &state.z_axis, &state.approach, &self.config.weights, &self.object.centroid(), surface)
    }

    /// Quality at a pose with a fresh (unfiltered-count) correspondence set.
    pub fn evaluate(&self, state: &GripperState) -> QualityReport {
        let surface = self.surface_for(state);
        let set = match_unchecked(&surface, self.object, &self.config.matching);
        self.report(state, &surface, &set)
    }

    pub(crate) fn finish(
        &self,
        method: Method,
        state: &GripperState,
        iterations: usize,
        evaluations: usize,
        trace: Vec<TraceEntry>,
        initial_quality: Option<QualityReport>,
        termination: Termination,
        guard_events: usize,
        started: Instant,
    ) -> PlanResult {
        let quality = Some(self.evaluate(state));
        PlanResult {
            method,
            rotation: rotation_to_rows(&state.rotation),
            translation: to_array(&state.translation),
            delta_d: state.aperture - self.d0,
            d0: self.d0,
            aperture: state.aperture,
            finger_axis: to_array(&state.finger_axis),
            z_axis: to_array(&state.z_axis),
            approach: to_array(&state.approach),
            iterations,
            evaluations,
            trace,
            initial_quality,
            quality,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            termination,
            guard_events,
            match_params: self.config.matching,
        }
    }
}

/// Runs the alternating planner on an oriented object cloud.
pub fn plan(object: &OrientedPointCloud, spec: &GripperSpec, config: &PlanConfig) -> Result<PlanResult> {
    let started = Instant::now();
    let model = ObjectModel::new(object.clone());
    let mut result = plan_with_model(&model, spec, config)?;
    result.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

pub fn plan_with_model(object: &ObjectModel, spec: &GripperSpec, config: &PlanConfig) -> Result<PlanResult> {
    let started = Instant::now();
    let ctx = PlanContext::new(object, spec, config)?;
    let mut state = ctx.initial_state()?;
    let mut surface = ctx.surface_for(&state);
    let initial_quality = Some(ctx.evaluate(&state));

    let mut set = match match_surfaces(&surface, object, &config.matching) {
        Ok(s) => s,
        Err(Error::OneSidedCorrespondence { .. }) => {
            return Ok(ctx.finish(Method::Disf, &state, 0, 0, Vec::new(), initial_quality, Termination::CorrespondenceFailure, 0, started));
        }
        Err(e) => return Err(e),
    };
    let mut e = ctx.loop_objective(&set);
    let mut e_prev = f64::INFINITY;
    let mut trace = Vec::new();
    let mut guard_events = 0;
    let mut termination = Termination::Converged;

    while e_prev - e >= config.delta_e {
        if trace.len() >= config.max_iters {
            termination = Termination::MaxIters;
            break;
        }
        if !trace.is_empty() {
            set = match match_surfaces(&surface, object, &config.matching) {
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

        let rot = match rot_opt_step(&mut state, &mut surface, &mut set, &config.weights) {
            Ok(r) => r,
            Err(Error::SingularSystem) => {
                termination = Termination::Degenerate;
                break;
            }
            Err(err) => return Err(err),
        };
        if rot.guard_triggered() {
            guard_events += 1;
        }
        let t_c = trans_refine_step(&mut state, &mut surface, &mut set)?;
        let mut note = None;
        let delta_d = match finger_opt_step(&mut state, &mut surface, &mut set, spec) {
            Ok(d) => d,
            Err(Error::DegenerateAperture) => {
                note = Some("degenerate aperture update; kept aperture".to_string());
                0.0
            }
            Err(err) => return Err(err),
        };
        e = ctx.loop_objective(&set);
        trace.push(TraceEntry {
            iter: trace.len() + 1,
            e_before: e_prev,
            e_after: e,
            omega: to_array(&rot.omega),
            t_c: to_array(&t_c),
            delta_d,
            n1,
            n2,
            halvings: rot.halvings,
            note,
        });
    }

    let iterations = trace.len();
    Ok(ctx.finish(Method::Disf, &state, iterations, iterations, trace, initial_quality, termination, guard_events, started))
}
