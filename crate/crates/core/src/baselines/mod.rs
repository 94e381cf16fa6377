//! Comparison planners: joint least-squares fitting and CMA-ES search.
//!
//! Both reuse [`PlanContext`](crate::planner::PlanContext) for posing,
//! correspondence and metrics, so their numbers are directly comparable with
//! the alternating planner.

pub mod cmaes;
pub mod visf;

pub use cmaes::{cmaes_plan, minimize, CmaOutcome, CmaParams};
pub use visf::{visf_plan, visf_plan_with_model};

use crate::correspondence::ObjectModel;
use crate::error::Result;
use crate::gripper::GripperSpec;
use crate::planner::{plan_with_model, Method, PlanConfig, PlanResult};

/// Runs `method` against an indexed object.
pub fn run_method(
    method: Method,
    object: &ObjectModel,
    spec: &GripperSpec,
    config: &PlanConfig,
    cma: &CmaParams,
) -> Result<PlanResult> {
    match method {
        Method::Disf => plan_with_model(object, spec, config),
        Method::Visf => visf_plan_with_model(object, spec, config),
        Method::Cmaes => cmaes::cmaes_plan_with_model(object, spec, config, cma),
    }
}
