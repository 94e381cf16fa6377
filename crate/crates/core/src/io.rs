//! ASCII PLY and XYZ point-cloud files. Units are meters.
//!
//! Writers emit the shortest decimal that parses back to the same `f64`, so
//! save/load round-trips are bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(CloudFormat::Ply),
            "xyz" | "txt" | "xyzn" => Some(CloudFormat::Xyz),
            _ => None,
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: Option<CloudFormat>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let format = format
        .or_else(|| CloudFormat::from_path(path))
        .unwrap_or(CloudFormat::Ply);
    match format {
        CloudFormat::Ply => parse_ply(&text),
        CloudFormat::Xyz => parse_xyz(&text),
    }
}

pub fn save_cloud(path: impl AsRef<Path>, cloud: &PointCloud, format: Option<CloudFormat>) -> Result<()> {
    let path = path.as_ref();
    let format = format
        .or_else(|| CloudFormat::from_path(path))
        .unwrap_or(CloudFormat::Ply);
    let text = match format {
        CloudFormat::Ply => write_ply(cloud),
        CloudFormat::Xyz => write_xyz(cloud),
    };
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        Some((n, other)) => return Err(parse_err(n, format!("expected 'ply' magic, found '{other}'"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut saw_format = false;
    loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing end_header"))?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(parse_err(n, format!("unsupported format line '{line}' (only ascii)")));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok.next().ok_or_else(|| parse_err(n, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(n, format!("bad element count in '{line}'")))?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(n, "property before any element"))?;
                let ty = tok.next().ok_or_else(|| parse_err(n, "property without type"))?;
                if ty == "list" {
                    el.has_list = true;
                    el.properties.push(String::new());
                } else {
                    let name = tok.next().ok_or_else(|| parse_err(n, "property without name"))?;
                    el.properties.push(name.to_string());
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(n, format!("unknown header keyword '{other}'"))),
        }
    }
    if !saw_format {
        return Err(parse_err(0, "header has no format line"));
    }
    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(0, "no vertex element"))?;
    let vertex = &elements[vertex_pos];
    if vertex.has_list {
        return Err(parse_err(0, "list properties on vertex are not supported"));
    }
    let col = |name: &str| vertex.properties.iter().position(|p| p == name);
    let (xi, yi, zi) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(0, "vertex element lacks x/y/z")),
    };
    let normal_cols = match (col("nx"), col("ny"), col("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    // Skip elements declared before the vertices.
    for el in &elements[..vertex_pos] {
        for _ in 0..el.count {
            lines.next().ok_or_else(|| parse_err(0, format!("truncated element '{}'", el.name)))?;
        }
    }
    let mut points = Vec::with_capacity(vertex.count);
    let mut normals = normal_cols.map(|_| Vec::with_capacity(vertex.count));
    for _ in 0..vertex.count {
        let (n, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "file ends before all vertices were read"))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(n, format!("bad number: {e}")))?;
        if values.len() != vertex.properties.len() {
            return Err(parse_err(
                n,
                format!("expected {} values, found {}", vertex.properties.len(), values.len()),
            ));
        }
        points.push(Vec3::new(values[xi], values[yi], values[zi]));
        if let (Some(out), Some((a, b, c))) = (normals.as_mut(), normal_cols) {
            out.push(Vec3::new(values[a], values[b], values[c]));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud { points, normals })
}

pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(n, format!("bad number: {e}")))?;
        if values.len() != 3 && values.len() != 6 {
            return Err(parse_err(n, format!("expected 3 or 6 values, found {}", values.len())));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(parse_err(n, "inconsistent column count"));
        }
        points.push(Vec3::new(values[0], values[1], values[2]));
        if values.len() == 6 {
            normals.push(Vec3::new(values[3], values[4], values[5]));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud {
        points,
        normals: (width == Some(6)).then_some(normals),
    })
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.normals.is_some() {
        out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    out.push_str("end_header\n");
    write_rows(&mut out, cloud);
    out
}

pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut out = String::new();
    write_rows(&mut out, cloud);
    out
}

fn write_rows(out: &mut String, cloud: &PointCloud) {
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", p.x, p.y, p.z);
        if let Some(n) = &cloud.normals {
            let _ = write!(out, " {} {} {}", n[i].x, n[i].y, n[i].z);
        }
        out.push('\n');
    }
}
