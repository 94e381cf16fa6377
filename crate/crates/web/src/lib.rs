//! Browser bindings: generate an object once, then plan on it, probe the
//! quality of hand-placed poses and compare the three methods.
//!
//! Every call takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use disf_core::baselines::{run_method, CmaParams};
use disf_core::planner::{PlanContext, T0Mode, TraceEntry};
use disf_core::{
    generate_synthetic_object, GripperSpec, GripperSurface, Method, ObjectModel, PlanConfig, QualityReport, ShapeKind,
    Termination, Vec3,
};

/// Points sent to the page for drawing.
const MAX_DRAW_POINTS: usize = 1500;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SceneRequest {
    pub shape: String,
    pub dims: Option<Vec<f64>>,
    pub points: usize,
    pub noise: f64,
    pub seed: u64,
    pub gripper: String,
}

impl Default for SceneRequest {
    fn default() -> Self {
        Self { shape: "t_block".into(), dims: None, points: 2000, noise: 0.0, seed: 0, gripper: "franka_hand".into() }
    }
}

/// Initial or probed pose, relative to the object's bounding-box centre.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(default)]
pub struct PoseRequest {
    pub offset: [f64; 3],
    pub yaw_deg: f64,
    /// Aperture for probes; planning always starts fully open.
    pub aperture: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct PlanRequest {
    pub method: String,
    pub pose: PoseRequest,
    pub cma_evals: usize,
}

impl Default for PlanRequest {
    fn default() -> Self {
        Self { method: "disf".into(), pose: PoseRequest::default(), cma_evals: 2000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneView {
    pub points: Vec<[f64; 3]>,
    pub centroid: [f64; 3],
    pub bbox_centre: [f64; 3],
    pub point_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Pads {
    pub finger1: Vec<[f64; 3]>,
    pub finger2: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanView {
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    pub wall_ms: f64,
    pub aperture: f64,
    pub initial: Option<QualityReport>,
    pub quality: Option<QualityReport>,
    pub start_pads: Pads,
    pub final_pads: Pads,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeView {
    pub quality: QualityReport,
    pub pads: Pads,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub method: Method,
    pub termination: Termination,
    pub e_geom: f64,
    pub e_com_m: f64,
    pub wall_ms: f64,
}

fn pads(surface: &GripperSurface) -> Pads {
    let pts = |i: usize| surface.fingers[i].points().iter().map(|p| [p.x, p.y, p.z]).collect();
    Pads { finger1: pts(0), finger2: pts(1) }
}

/// An indexed object plus the gripper it is planned for.
pub struct Demo {
    model: ObjectModel,
    spec: GripperSpec,
    bbox_centre: Vec3,
}

impl Demo {
    pub fn new(req: &SceneRequest) -> Result<Self, String> {
        let kind: ShapeKind = req.shape.parse().map_err(|e| format!("{e}"))?;
        let dims = req.dims.clone().unwrap_or_else(|| kind.default_dims());
        let cloud = generate_synthetic_object(kind, &dims, req.points, req.noise, req.seed).map_err(|e| e.to_string())?;
        let spec = GripperSpec::preset(&req.gripper).ok_or_else(|| format!("unknown gripper '{}'", req.gripper))?;
        let pts = cloud.points();
        let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Ok(Self { model: ObjectModel::new(cloud), spec, bbox_centre: (lo + hi) / 2.0 })
    }

    pub fn view(&self) -> SceneView {
        let cloud = self.model.cloud();
        let stride = cloud.len().div_ceil(MAX_DRAW_POINTS).max(1);
        let c = cloud.centroid();
        SceneView {
            points: cloud.points().iter().step_by(stride).map(|p| [p.x, p.y, p.z]).collect(),
            centroid: [c.x, c.y, c.z],
            bbox_centre: [self.bbox_centre.x, self.bbox_centre.y, self.bbox_centre.z],
            point_count: cloud.len(),
        }
    }

    fn config(&self, pose: &PoseRequest) -> PlanConfig {
        let mut config = PlanConfig {
            t0_mode: T0Mode::Explicit,
            explicit_t0: (self.bbox_centre + Vec3::from(pose.offset)).into(),
            ..Default::default()
        };
        let yaw = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), pose.yaw_deg.to_radians());
        config.set_initial_rotation(&yaw);
        config
    }

    pub fn plan(&self, req: &PlanRequest) -> Result<PlanView, String> {
        let method: Method = req.method.parse().map_err(|e| format!("{e}"))?;
        let config = self.config(&req.pose);
        let cma = CmaParams { max_evals: req.cma_evals, ..Default::default() };
        let result = run_method(method, &self.model, &self.spec, &config, &cma).map_err(|e| e.to_string())?;
        let ctx = PlanContext::new(&self.model, &self.spec, &config).map_err(|e| e.to_string())?;
        let start = ctx.initial_state().map_err(|e| e.to_string())?;
        let end = ctx.state_at(result.rotation(), result.translation(), result.aperture);
        Ok(PlanView {
            method,
            termination: result.termination,
            iterations: result.iterations,
            wall_ms: result.wall_time_ms,
            aperture: result.aperture,
            initial: result.initial_quality,
            quality: result.quality,
            start_pads: pads(&ctx.surface_for(&start)),
            final_pads: pads(&ctx.surface_for(&end)),
            trace: result.trace,
        })
    }

    pub fn probe(&self, pose: &PoseRequest) -> Result<ProbeView, String> {
        let config = self.config(pose);
        let ctx = PlanContext::new(&self.model, &self.spec, &config).map_err(|e| e.to_string())?;
        let aperture = self.spec.clamp_aperture(pose.aperture.unwrap_or(ctx.d0));
        let state = ctx.state_at(config.initial_rotation(), self.bbox_centre + Vec3::from(pose.offset), aperture);
        Ok(ProbeView { quality: ctx.evaluate(&state), pads: pads(&ctx.surface_for(&state)) })
    }

    pub fn compare(&self, pose: &PoseRequest, cma_evals: usize) -> Vec<CompareRow> {
        Method::ALL
            .iter()
            .filter_map(|&method| {
                let req = PlanRequest { method: method.name().into(), pose: *pose, cma_evals };
                let r = self.plan(&req).ok()?;
                let q = r.quality?;
                Some(CompareRow { method, termination: r.termination, e_geom: q.e_geom, e_com_m: q.e_com, wall_ms: r.wall_ms })
            })
            .collect()
    }
}

fn parse<T: for<'de> Deserialize<'de> + Default>(json: &str) -> Result<T, JsValue> {
    if json.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(json).map_err(|e| JsValue::from_str(&format!("bad request: {e}")))
}

fn out<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub struct Scene {
    inner: Demo,
}

#[wasm_bindgen]
impl Scene {
    /// `{"shape", "dims", "points", "noise", "seed", "gripper"}`, all optional.
    #[wasm_bindgen(constructor)]
    pub fn new(request: &str) -> Result<Scene, JsValue> {
        let req: SceneRequest = parse(request)?;
        Demo::new(&req).map(|inner| Scene { inner }).map_err(|e| JsValue::from_str(&e))
    }

    pub fn view(&self) -> Result<String, JsValue> {
        out(&self.inner.view())
    }

    /// `{"method", "pose": {"offset", "yaw_deg"}, "cma_evals"}`.
    pub fn plan(&self, request: &str) -> Result<String, JsValue> {
        let req: PlanRequest = parse(request)?;
        out(&self.inner.plan(&req).map_err(|e| JsValue::from_str(&e))?)
    }

    /// `{"offset", "yaw_deg", "aperture"}`.
    pub fn probe(&self, request: &str) -> Result<String, JsValue> {
        let pose: PoseRequest = parse(request)?;
        out(&self.inner.probe(&pose).map_err(|e| JsValue::from_str(&e))?)
    }

    /// Same start pose for all three methods.
    pub fn compare(&self, request: &str) -> Result<String, JsValue> {
        let req: PlanRequest = parse(request)?;
        out(&self.inner.compare(&req.pose, req.cma_evals))
    }
}
