//! Batch runs over object sets: per-run rows, CSV output and summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_method, CmaParams};
use crate::correspondence::ObjectModel;
use crate::gripper::GripperSpec;
use crate::planner::{Method, PlanConfig, PlanResult};
use crate::pointcloud::OrientedPointCloud;

pub const BENCH_CSV_HEADER: &str = "object,method,e_geom,e_com_m,iterations,wall_ms,termination";

/// One `<name> <path>` manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub line: usize,
    pub name: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestError {
    pub line: usize,
    pub message: String,
}

/// Parses a manifest; blank lines and `#` comments are skipped. Every bad
/// line is reported, good lines are still returned.
pub fn parse_manifest(text: &str) -> (Vec<ManifestEntry>, Vec<ManifestError>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields.as_slice() {
            [name, path] => entries.push(ManifestEntry { line, name: name.to_string(), path: path.to_string() }),
            _ => errors.push(ManifestError {
                line,
                message: format!("expected '<name> <path>', got {} field(s)", fields.len()),
            }),
        }
    }
    (entries, errors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub object: String,
    pub method: Method,
    pub repeat: usize,
    pub e_geom: f64,
    pub e_com_m: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchRow {
    fn from_result(object: &str, method: Method, repeat: usize, r: &crate::Result<PlanResult>) -> Self {
        match r {
            Ok(p) => {
                let q = p.quality.unwrap_or_else(|| unreachable!("plans always carry a final report"));
                BenchRow {
                    object: object.to_string(),
                    method,
                    repeat,
                    e_geom: q.e_geom,
                    e_com_m: q.e_com,
                    iterations: p.iterations,
                    wall_ms: p.wall_time_ms,
                    termination: serde_json::to_value(p.termination)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    error: None,
                }
            }
            Err(e) => BenchRow {
                object: object.to_string(),
                method,
                repeat,
                e_geom: f64::NAN,
                e_com_m: f64::NAN,
                iterations: 0,
                wall_ms: f64::NAN,
                termination: "error".into(),
                error: Some(e.to_string()),
            },
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{},{}",
            self.object,
            self.method.name(),
            self.e_geom,
            self.e_com_m,
            self.iterations,
            self.wall_ms,
            self.termination
        )
    }

    pub fn failed(&self) -> bool {
        self.error.is_some() || self.termination == "correspondence_failure" || self.termination == "degenerate"
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub runs: usize,
    pub failures: usize,
    pub median_wall_ms: f64,
    pub mean_wall_ms: f64,
    pub median_e_geom: f64,
    pub mean_e_geom: f64,
    pub median_e_com_m: f64,
    pub mean_e_com_m: f64,
    pub mean_iterations: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn mean(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl MetricSummary {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a BenchRow>) -> Self {
        let rows: Vec<&BenchRow> = rows.into_iter().collect();
        let col = |f: fn(&BenchRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
        let wall = col(|r| r.wall_ms);
        let geom = col(|r| r.e_geom);
        let com = col(|r| r.e_com_m);
        MetricSummary {
            runs: rows.len(),
            failures: rows.iter().filter(|r| r.failed()).count(),
            median_wall_ms: median(&wall),
            mean_wall_ms: mean(&wall),
            median_e_geom: median(&geom),
            mean_e_geom: mean(&geom),
            median_e_com_m: median(&com),
            mean_e_com_m: mean(&com),
            mean_iterations: mean(&col(|r| r.iterations as f64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub version: String,
    pub repeats: usize,
    pub per_method: BTreeMap<String, MetricSummary>,
    /// Keyed `object/method`.
    pub per_object: BTreeMap<String, MetricSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BENCH_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Configuration for repeat `r`: every seed offset by `r`.
pub fn repeat_config(config: &PlanConfig, cma: &CmaParams, r: usize) -> (PlanConfig, CmaParams) {
    let mut c = config.clone();
    c.kmeans_seed = c.kmeans_seed.wrapping_add(r as u64);
    let mut m = cma.clone();
    m.seed = m.seed.wrapping_add(r as u64);
    (c, m)
}

/// Runs every method on every object `repeats` times. Rows are ordered by
/// object, then method, then repeat; a failing run is recorded and the batch
/// continues.
pub fn plan_batch(
    objects: &[(String, OrientedPointCloud)],
    spec: &GripperSpec,
    config: &PlanConfig,
    cma: &CmaParams,
    methods: &[Method],
    repeats: usize,
) -> BenchReport {
    let mut rows = Vec::new();
    for (name, cloud) in objects {
        let model = ObjectModel::new(cloud.clone());
        for &method in methods {
            for r in 0..repeats {
                let (c, m) = repeat_config(config, cma, r);
                let result = run_method(method, &model, spec, &c, &m);
                rows.push(BenchRow::from_result(name, method, r, &result));
            }
        }
    }
    let mut per_method = BTreeMap::new();
    for &method in methods {
        per_method.insert(method.name().to_string(), MetricSummary::from_rows(rows.iter().filter(|r| r.method == method)));
    }
    let mut per_object = BTreeMap::new();
    for (name, _) in objects {
        for &method in methods {
            per_object.insert(
                format!("{name}/{}", method.name()),
                MetricSummary::from_rows(rows.iter().filter(|r| &r.object == name && r.method == method)),
            );
        }
    }
    BenchReport {
        rows,
        summary: BenchSummary { version: crate::config::TOOLKIT_VERSION.to_string(), repeats, per_method, per_object },
    }
}
