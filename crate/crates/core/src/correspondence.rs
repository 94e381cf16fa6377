//! Finger-to-object correspondence matching.
//!
//! Every posed finger point queries its nearest object point. A pair is kept
//! when it is close enough and antipodal enough: `‖p − q‖ ≤ max_distance` and
//! `∠(n^p, −n^q) ≤ max_normal_angle`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::gripper::{Finger, GripperSurface};
use crate::kdtree::KdTree;
use crate::pointcloud::{mean, OrientedPointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    pub max_distance: f64,
    /// Radians.
    pub max_normal_angle: f64,
    pub min_pairs_per_finger: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            max_distance: 0.03,
            max_normal_angle: 60f64.to_radians(),
            min_pairs_per_finger: 3,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_distance > 0.0) {
            return Err(Error::InvalidParameter("max_distance must be positive".into()));
        }
        if !(self.max_normal_angle > 0.0 && self.max_normal_angle <= std::f64::consts::PI) {
            return Err(Error::InvalidParameter("max_normal_angle must lie in (0, pi]".into()));
        }
        if self.min_pairs_per_finger == 0 {
            return Err(Error::InvalidParameter("min_pairs_per_finger must be >= 1".into()));
        }
        Ok(())
    }

    /// Whether a candidate pair passes both filters.
    pub fn accepts(&self, p: &Vec3, n_p: &Vec3, q: &Vec3, n_q: &Vec3) -> bool {
        (p - q).norm() <= self.max_distance && antipodal_angle(n_p, n_q) <= self.max_normal_angle
    }
}

/// `∠(a, −b)` in radians.
pub fn antipodal_angle(a: &Vec3, b: &Vec3) -> f64 {
    (-a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

/// Object surface with its search index, built once per plan.
#[derive(Debug, Clone)]
pub struct ObjectModel {
    cloud: OrientedPointCloud,
    tree: KdTree,
    centroid: Vec3,
}

impl ObjectModel {
    pub fn new(cloud: OrientedPointCloud) -> Self {
        let tree = KdTree::new(cloud.points());
        let centroid = cloud.centroid();
        Self { cloud, tree, centroid }
    }

    pub fn cloud(&self) -> &OrientedPointCloud {
        &self.cloud
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }
}

/// One finger point `(p, n^p)` matched to an object point `(q, n^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub finger_index: usize,
    pub object_index: usize,
    pub p: Vec3,
    pub n_p: Vec3,
    pub q: Vec3,
    pub n_q: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    pub pairs: [Vec<Pair>; 2],
}

impl CorrespondenceSet {
    pub fn finger(&self, f: Finger) -> &[Pair] {
        &self.pairs[f.index()]
    }

    pub fn count(&self, f: Finger) -> usize {
        self.pairs[f.index()].len()
    }

    /// Total `N = N₁ + N₂`.
    pub fn len(&self) -> usize {
        self.pairs[0].len() + self.pairs[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Finger, &Pair)> {
        Finger::BOTH
            .into_iter()
            .flat_map(move |f| self.pairs[f.index()].iter().map(move |p| (f, p)))
    }

    /// Centroid of the matched finger points.
    pub fn finger_centroid(&self) -> Option<Vec3> {
        (!self.is_empty()).then(|| mean(&self.iter().map(|(_, p)| p.p).collect::<Vec<_>>()))
    }

    /// Centroid of the matched object points.
    pub fn object_centroid(&self) -> Option<Vec3> {
        (!self.is_empty()).then(|| mean(&self.iter().map(|(_, p)| p.q).collect::<Vec<_>>()))
    }

    /// Moves the finger side of every pair; the object side is fixed.
    pub fn map_finger_side(&mut self, mut f: impl FnMut(Finger, &Vec3, &Vec3) -> (Vec3, Vec3)) {
        for finger in Finger::BOTH {
            for pair in &mut self.pairs[finger.index()] {
                let (p, n) = f(finger, &pair.p, &pair.n_p);
                pair.p = p;
                pair.n_p = n;
            }
        }
    }
}

/// Nearest-neighbour matching with distance and antipodal filters.
pub fn match_surfaces(surface: &GripperSurface, object: &ObjectModel, params: &MatchParams) -> Result<CorrespondenceSet> {
    let set = match_unchecked(surface, object, params);
    for f in Finger::BOTH {
        if set.count(f) < params.min_pairs_per_finger {
            return Err(Error::OneSidedCorrespondence {
                finger: f,
                found: set.count(f),
                required: params.min_pairs_per_finger,
            });
        }
    }
    Ok(set)
}

/// As [`match_surfaces`] without the minimum-count check.
pub fn match_unchecked(surface: &GripperSurface, object: &ObjectModel, params: &MatchParams) -> CorrespondenceSet {
    let cos_limit = params.max_normal_angle.cos();
    let mut set = CorrespondenceSet::default();
    for f in Finger::BOTH {
        let pads = surface.finger(f);
        for (i, (p, n_p)) in pads.iter().enumerate() {
            let Some(nn) = object.tree.nearest(p) else { continue };
            if nn.dist_sq.sqrt() > params.max_distance {
                continue;
            }
            let q = object.cloud.points()[nn.index];
            let n_q = object.cloud.normals()[nn.index];
            // Cheap cosine test first, exact angle test on the boundary band.
            let c = -n_p.dot(&n_q);
            if c < cos_limit - 1e-12 || (c < cos_limit + 1e-12 && antipodal_angle(n_p, &n_q) > params.max_normal_angle) {
                continue;
            }
            set.pairs[f.index()].push(Pair {
                finger_index: i,
                object_index: nn.index,
                p: *p,
                n_p: *n_p,
                q,
                n_q,
            });
        }
    }
    set
}
