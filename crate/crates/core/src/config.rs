//! Toolkit-wide JSON configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::CmaParams;
use crate::error::{Error, Result};
use crate::grasp_eval::ExecutionParams;
use crate::gripper::GripperSpec;
use crate::planner::{Method, PlanConfig};
use crate::preprocess::PreprocessParams;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Either a preset name (`"franka_hand"`, `"robotiq_hande"`, `"umi"`) or a
/// full specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GripperChoice {
    Preset(String),
    Custom(GripperSpec),
}

impl Default for GripperChoice {
    fn default() -> Self {
        GripperChoice::Preset("franka_hand".into())
    }
}

impl GripperChoice {
    pub fn resolve(&self) -> Result<GripperSpec> {
        let spec = match self {
            GripperChoice::Preset(name) => {
                GripperSpec::preset(name).ok_or_else(|| Error::InvalidParameter(format!("unknown gripper preset '{name}'")))?
            }
            GripperChoice::Custom(spec) => spec.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolkitConfig {
    pub gripper: GripperChoice,
    pub method: Method,
    pub plan: PlanConfig,
    pub cmaes: CmaParams,
    pub preprocess: PreprocessParams,
    pub execution: ExecutionParams,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self {
            gripper: GripperChoice::default(),
            method: Method::Disf,
            plan: PlanConfig::default(),
            cmaes: CmaParams::default(),
            preprocess: PreprocessParams::default(),
            execution: ExecutionParams::default(),
        }
    }
}

impl ToolkitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ToolkitConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.gripper.resolve()?;
        self.plan.validate()?;
        self.cmaes.validate()?;
        self.preprocess.validate()?;
        self.execution.validate()
    }

    /// Sets every seed from one value.
    pub fn set_seed(&mut self, seed: u64) {
        self.plan.kmeans_seed = seed;
        self.cmaes.seed = seed;
        self.preprocess.seed = seed;
    }
}
