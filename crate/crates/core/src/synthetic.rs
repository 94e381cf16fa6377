//! Synthetic test objects built as unions of boxes and upright cylinders.
//!
//! Surfaces are sampled uniformly by area. A sample on one primitive is
//! rejected when it lies inside another (shared or buried faces), which keeps
//! the density uniform over the outer surface of the union.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::pointcloud::OrientedPointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    Cylinder,
    TBlock,
    LBlock,
    StemGlass,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Box,
        ShapeKind::Cylinder,
        ShapeKind::TBlock,
        ShapeKind::LBlock,
        ShapeKind::StemGlass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Box => "box",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::TBlock => "t_block",
            ShapeKind::LBlock => "l_block",
            ShapeKind::StemGlass => "stem_glass",
        }
    }

    /// Number of entries `dims` must have.
    pub fn dim_count(self) -> usize {
        match self {
            ShapeKind::Box | ShapeKind::TBlock | ShapeKind::LBlock => 3,
            ShapeKind::Cylinder | ShapeKind::StemGlass => 2,
        }
    }

    /// Dimensions used when none are given.
    pub fn default_dims(self) -> Vec<f64> {
        match self {
            ShapeKind::Box => vec![0.04, 0.04, 0.1],
            ShapeKind::Cylinder => vec![0.05, 0.1],
            ShapeKind::TBlock => vec![0.09, 0.04, 0.09],
            ShapeKind::LBlock => vec![0.09, 0.04, 0.09],
            ShapeKind::StemGlass => vec![0.07, 0.15],
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown object kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Primitive {
    Cuboid { center: Vec3, half: Vec3 },
    /// Upright cylinder on `[z0, z1]`.
    Cylinder { x: f64, y: f64, z0: f64, z1: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Face {
    /// Cuboid face: axis and side (±1).
    Side { axis: usize, sign: f64 },
    Mantle,
    Cap { sign: f64 },
}

impl Primitive {
    fn faces(&self) -> Vec<(Face, f64)> {
        match *self {
            Primitive::Cuboid { half, .. } => {
                let mut out = Vec::with_capacity(6);
                for axis in 0..3 {
                    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                    let area = 4.0 * half[u] * half[w];
                    out.push((Face::Side { axis, sign: -1.0 }, area));
                    out.push((Face::Side { axis, sign: 1.0 }, area));
                }
                out
            }
            Primitive::Cylinder { z0, z1, radius, .. } => {
                let disk = std::f64::consts::PI * radius * radius;
                vec![
                    (Face::Mantle, TAU * radius * (z1 - z0)),
                    (Face::Cap { sign: -1.0 }, disk),
                    (Face::Cap { sign: 1.0 }, disk),
                ]
            }
        }
    }

    fn sample(&self, face: Face, rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
        match (*self, face) {
            (Primitive::Cuboid { center, half }, Face::Side { axis, sign }) => {
                let mut p = Vec3::zeros();
                for k in 0..3 {
                    p[k] = if k == axis { sign * half[k] } else { rng.random_range(-half[k]..=half[k]) };
                }
                let mut n = Vec3::zeros();
                n[axis] = sign;
                (center + p, n)
            }
            (Primitive::Cylinder { x, y, z0, z1, radius }, Face::Mantle) => {
                let a = rng.random_range(0.0..TAU);
                let n = Vec3::new(a.cos(), a.sin(), 0.0);
                (Vec3::new(x + radius * n.x, y + radius * n.y, rng.random_range(z0..=z1)), n)
            }
            (Primitive::Cylinder { x, y, z0, z1, radius }, Face::Cap { sign }) => {
                let a = rng.random_range(0.0..TAU);
                let r = radius * rng.random::<f64>().sqrt();
                let z = if sign > 0.0 { z1 } else { z0 };
                (Vec3::new(x + r * a.cos(), y + r * a.sin(), z), Vec3::new(0.0, 0.0, sign))
            }
            _ => unreachable!("face does not belong to primitive"),
        }
    }

    fn contains(&self, p: &Vec3) -> bool {
        match *self {
            Primitive::Cuboid { center, half } => (0..3).all(|k| (p[k] - center[k]).abs() < half[k]),
            Primitive::Cylinder { x, y, z0, z1, radius } => {
                p.z > z0 && p.z < z1 && (p.x - x).powi(2) + (p.y - y).powi(2) < radius * radius
            }
        }
    }
}

fn cuboid(lo: [f64; 3], hi: [f64; 3]) -> Primitive {
    let lo = Vec3::from(lo);
    let hi = Vec3::from(hi);
    Primitive::Cuboid { center: (lo + hi) / 2.0, half: (hi - lo) / 2.0 }
}

fn primitives(kind: ShapeKind, d: &[f64]) -> Vec<Primitive> {
    match kind {
        ShapeKind::Box => vec![cuboid([-d[0] / 2.0, -d[1] / 2.0, -d[2] / 2.0], [d[0] / 2.0, d[1] / 2.0, d[2] / 2.0])],
        ShapeKind::Cylinder => vec![Primitive::Cylinder { x: 0.0, y: 0.0, z0: -d[1] / 2.0, z1: d[1] / 2.0, radius: d[0] / 2.0 }],
        // T profile in the xz-plane, extruded along y; crossbar on top.
        ShapeKind::TBlock => {
            let (w, t, h) = (d[0] / 2.0, d[1] / 2.0, d[2] / 2.0);
            let bar = d[2] / 3.0;
            let stem = d[0] / 6.0;
            vec![
                cuboid([-w, -t, h - bar], [w, t, h]),
                cuboid([-stem, -t, -h], [stem, t, h - bar]),
            ]
        }
        // L profile: upright on the -x side, foot along the bottom.
        ShapeKind::LBlock => {
            let (w, t, h) = (d[0] / 2.0, d[1] / 2.0, d[2] / 2.0);
            let foot = d[2] / 3.0;
            let upright = d[0] / 3.0;
            vec![
                cuboid([-w, -t, -h], [w, t, -h + foot]),
                cuboid([-w, -t, -h + foot], [-w + upright, t, h]),
            ]
        }
        // Foot disk, thin stem, wide bowl.
        ShapeKind::StemGlass => {
            let (r, h) = (d[0] / 2.0, d[1]);
            let z = |f: f64| -h / 2.0 + f * h;
            vec![
                Primitive::Cylinder { x: 0.0, y: 0.0, z0: z(0.0), z1: z(0.05), radius: 0.75 * r },
                Primitive::Cylinder { x: 0.0, y: 0.0, z0: z(0.05), z1: z(0.5), radius: 0.12 * r },
                Primitive::Cylinder { x: 0.0, y: 0.0, z0: z(0.5), z1: z(1.0), radius: r },
            ]
        }
    }
}

/// Samples `points` surface points of `kind` with outward normals.
///
/// The solid's bounding box is centred on the origin; positions are perturbed
/// by isotropic Gaussian noise of standard deviation `noise_sigma` while the
/// normals keep their analytic values.
pub fn generate_synthetic_object(
    kind: ShapeKind,
    dims: &[f64],
    points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<OrientedPointCloud> {
    if dims.len() != kind.dim_count() {
        return Err(Error::InvalidParameter(format!(
            "{kind} takes {} dimensions, got {}",
            kind.dim_count(),
            dims.len()
        )));
    }
    if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidParameter("dimensions must be positive".into()));
    }
    if points == 0 {
        return Err(Error::InvalidParameter("point count must be positive".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
    }

    let prims = primitives(kind, dims);
    let faces: Vec<(usize, Face, f64)> = prims
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.faces().into_iter().map(move |(f, a)| (i, f, a)))
        .collect();
    let total: f64 = faces.iter().map(|f| f.2).sum();
    let eps = 1e-9 * dims.iter().cloned().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut pts = Vec::with_capacity(points);
    let mut nrm = Vec::with_capacity(points);
    while pts.len() < points {
        let mut target = rng.random::<f64>() * total;
        let mut chosen = faces.len() - 1;
        for (k, f) in faces.iter().enumerate() {
            if target < f.2 {
                chosen = k;
                break;
            }
            target -= f.2;
        }
        let (owner, face, _) = faces[chosen];
        let (p, n) = prims[owner].sample(face, &mut rng);
        let probe = p + eps * n;
        if prims.iter().enumerate().any(|(i, q)| i != owner && q.contains(&probe)) {
            continue;
        }
        let p = if noise_sigma > 0.0 {
            p + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng))
        } else {
            p
        };
        pts.push(p);
        nrm.push(n);
    }
    OrientedPointCloud::new(pts, nrm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_normals_and_centroid() {
        let c = generate_synthetic_object(ShapeKind::Box, &[0.04, 0.04, 0.1], 3000, 0.0, 7).unwrap();
        assert_eq!(c.len(), 3000);
        for (p, n) in c.iter() {
            let axis_aligned = (0..3).filter(|&k| (n[k].abs() - 1.0).abs() < 1e-12).count() == 1;
            assert!(axis_aligned);
            assert!(n.dot(p) > 0.0);
        }
        assert!(c.centroid().norm() < 0.002);
    }

    #[test]
    fn same_seed_same_cloud() {
        for kind in ShapeKind::ALL {
            let dims = kind.default_dims();
            let a = generate_synthetic_object(kind, &dims, 500, 0.0, 3).unwrap();
            let b = generate_synthetic_object(kind, &dims, 500, 0.0, 3).unwrap();
            assert_eq!(a.points(), b.points());
            assert_eq!(a.normals(), b.normals());
        }
    }

    #[test]
    fn t_block_centroid_toward_crossbar() {
        let d = [0.09, 0.04, 0.09];
        let c = generate_synthetic_object(ShapeKind::TBlock, &d, 20000, 0.0, 1).unwrap();
        // analytic surface centroid height of the union, by face areas
        let (w, t, h) = (0.045, 0.02, 0.045);
        let bar = 0.03;
        let stem = 0.015;
        let z_bar = h - bar / 2.0;
        let z_stem = (-h + h - bar) / 2.0;
        // crossbar: top, ±y faces, ±x faces, bottom minus the stem footprint
        let bar_area = 2.0 * w * 2.0 * t + 2.0 * (2.0 * w * bar) + 2.0 * (2.0 * t * bar);
        let bar_bottom = (2.0 * w - 2.0 * stem) * 2.0 * t;
        let stem_h = 2.0 * h - bar;
        let stem_area = 2.0 * (2.0 * stem * stem_h) + 2.0 * (2.0 * t * stem_h);
        let stem_bottom = 2.0 * stem * 2.0 * t;
        let moment = (bar_area - 2.0 * w * 2.0 * t) * z_bar
            + 2.0 * w * 2.0 * t * h
            + bar_bottom * (h - bar)
            + stem_area * z_stem
            + stem_bottom * -h;
        let area = bar_area + bar_bottom + stem_area + stem_bottom;
        let expected = moment / area;
        assert!(expected > 0.0);
        assert!((c.centroid().z - expected).abs() < 1.5e-3, "{} vs {expected}", c.centroid().z);
        assert!(c.centroid().x.abs() < 1e-3);
    }

    #[test]
    fn no_buried_samples() {
        for kind in [ShapeKind::TBlock, ShapeKind::LBlock, ShapeKind::StemGlass] {
            let dims = kind.default_dims();
            let prims = primitives(kind, &dims);
            let c = generate_synthetic_object(kind, &dims, 2000, 0.0, 5).unwrap();
            for (p, n) in c.iter() {
                let probe = p + 1e-6 * n;
                assert!(!prims.iter().any(|q| q.contains(&probe)), "{kind}: {p:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(generate_synthetic_object(ShapeKind::Box, &[0.1, 0.1], 10, 0.0, 0).is_err());
        assert!(generate_synthetic_object(ShapeKind::Cylinder, &[0.1, -1.0], 10, 0.0, 0).is_err());
        assert!("unknown".parse::<ShapeKind>().is_err());
        assert_eq!("stem_glass".parse::<ShapeKind>().unwrap(), ShapeKind::StemGlass);
    }
}
