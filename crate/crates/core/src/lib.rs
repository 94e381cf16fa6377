//! Grasp-pose optimization over oriented point clouds.
//!
//! The planner fits the two contact pads of a parallel-jaw gripper to an
//! object surface by alternating three closed-form stages: a linearized
//! rotation solve, a centroid-aligning translation and an aperture update.
//! Joint least-squares and CMA-ES baselines, synthetic objects, tabletop
//! preprocessing and geometric execution checks live alongside it.

pub mod baselines;
pub mod bench;
pub mod config;
pub mod correspondence;
pub mod error;
pub mod fingeropt;
pub mod geometry;
pub mod grasp_eval;
pub mod gripper;
pub mod io;
pub mod kdtree;
pub mod kmeans;
pub mod planner;
pub mod pointcloud;
pub mod preprocess;
pub mod quality;
pub mod rotopt;
pub mod synthetic;
pub mod transrefine;

pub use correspondence::{match_surfaces, CorrespondenceSet, MatchParams, ObjectModel};
pub use error::{Error, Result};
pub use geometry::{rodrigues, RigidTransform, Vec3};
pub use gripper::{build_canonical_surface, transform_finger_surface, GripperSpec, GripperState, GripperSurface};
pub use planner::{plan, plan_with_model, Method, PlanConfig, PlanResult, Termination};
pub use pointcloud::{OrientedPointCloud, PointCloud};
pub use quality::{QualityReport, QualityWeights};
pub use synthetic::{generate_synthetic_object, ShapeKind};
