//! File formats: environments, plans and scalar fields as JSON, and
//! plot-ready layer tables as CSV.
//!
//! Environment document:
//!
//! ```text
//! {
//!   "header": { "width", "height", "seed", "params",
//!               "distribution_fit"?, "obstacle_fit"? },
//!   "distribution": [f64; width*height],   // 9 significant digits
//!   "hotspot":      [0|1; width*height],
//!   "obstacle":     [0|1; width*height]
//! }
//! ```
//!
//! All arrays are row-major (`index = y * width + x`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env_gen::{EnvGenParams, EnvironmentBundle, MapFit};
use crate::error::{Error, Result};
use crate::estimate::EstimatedField;
use crate::grid::{BinaryGrid, Coord, Dims, ScalarField};
use crate::metrics::MetricsRecord;
use crate::preprocess::PreprocessReport;
use crate::raster::{Plan, Segment};

/// Rounds to 9 significant digits.
pub fn round_sig9(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvHeader {
    width: usize,
    height: usize,
    seed: u64,
    params: EnvGenParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distribution_fit: Option<MapFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obstacle_fit: Option<MapFit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvDocument {
    header: EnvHeader,
    distribution: Vec<f64>,
    hotspot: Vec<u8>,
    obstacle: Vec<u8>,
}

fn finite_fit(fit: MapFit) -> Option<MapFit> {
    fit.sigma.is_finite().then_some(fit)
}

pub fn environment_to_json(env: &EnvironmentBundle) -> String {
    let dims = env.dims();
    let doc = EnvDocument {
        header: EnvHeader {
            width: dims.width,
            height: dims.height,
            seed: env.params.seed,
            params: env.params,
            distribution_fit: finite_fit(env.distribution_fit),
            obstacle_fit: env.obstacle_fit.and_then(finite_fit),
        },
        distribution: env.distribution.values().iter().map(|&v| round_sig9(v)).collect(),
        hotspot: env.hotspot_map.values(),
        obstacle: env.obstacle_map.values(),
    };
    let mut s = serde_json::to_string(&doc).expect("environment serializes");
    s.push('\n');
    s
}

pub fn environment_from_json(text: &str) -> Result<EnvironmentBundle> {
    const WHAT: &str = "environment file";
    let doc: EnvDocument = serde_json::from_str(text).map_err(|e| Error::format(WHAT, e))?;
    let h = &doc.header;
    let dims = Dims::new(h.width, h.height).map_err(|e| Error::format(WHAT, e))?;
    let check = |name: &str, n: usize| {
        if n == dims.len() {
            Ok(())
        } else {
            Err(Error::format(WHAT, format!("`{name}` has {n} values, expected {}", dims.len())))
        }
    };
    check("distribution", doc.distribution.len())?;
    check("hotspot", doc.hotspot.len())?;
    check("obstacle", doc.obstacle.len())?;
    let distribution =
        ScalarField::new(dims.width, dims.height, doc.distribution).map_err(|e| Error::format(WHAT, e))?;
    let hotspot =
        BinaryGrid::from_values(dims.width, dims.height, &doc.hotspot).map_err(|e| Error::format(WHAT, e))?;
    let obstacle =
        BinaryGrid::from_values(dims.width, dims.height, &doc.obstacle).map_err(|e| Error::format(WHAT, e))?;
    let mut params = h.params;
    params.width = dims.width;
    params.height = dims.height;
    params.seed = h.seed;
    let mut env = EnvironmentBundle::from_parts(distribution, hotspot, obstacle, params)?;
    if let Some(fit) = h.distribution_fit {
        env.distribution_fit = fit;
    }
    env.obstacle_fit = h.obstacle_fit;
    Ok(env)
}

pub fn save_environment(env: &EnvironmentBundle, path: &Path) -> Result<()> {
    fs::write(path, environment_to_json(env))?;
    Ok(())
}

pub fn load_environment(path: &Path) -> Result<EnvironmentBundle> {
    environment_from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub length: f64,
    pub sample_count: usize,
    pub cell_count: usize,
    #[serde(default)]
    pub preprocess: Option<PreprocessReport>,
}

/// A plan together with the size of the map it was made for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    pub width: usize,
    pub height: usize,
    pub spacing: usize,
    pub path: Vec<Coord>,
    pub samples: Vec<Coord>,
    pub segments: Vec<Segment>,
    pub cell_order: Vec<usize>,
    pub summary: PlanSummary,
}

impl PlanDocument {
    pub fn new(plan: &Plan, dims: Dims) -> Self {
        PlanDocument {
            width: dims.width,
            height: dims.height,
            spacing: plan.spacing,
            path: plan.path.clone(),
            samples: plan.samples.clone(),
            segments: plan.segments.clone(),
            cell_order: plan.cell_order.clone(),
            summary: PlanSummary {
                length: plan.path_length(),
                sample_count: plan.samples.len(),
                cell_count: plan.cell_count,
                preprocess: plan.preprocess,
            },
        }
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.width, self.height)
    }

    pub fn to_plan(&self) -> Plan {
        Plan {
            path: self.path.clone(),
            samples: self.samples.clone(),
            segments: self.segments.clone(),
            cell_order: self.cell_order.clone(),
            spacing: self.spacing,
            cell_count: self.summary.cell_count,
            preprocess: self.summary.preprocess,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        const WHAT: &str = "plan file";
        let doc: PlanDocument = serde_json::from_str(text).map_err(|e| Error::format(WHAT, e))?;
        let dims = doc.dims().map_err(|e| Error::format(WHAT, e))?;
        if let Some(c) = doc.path.iter().chain(&doc.samples).find(|&&c| !dims.contains(c)) {
            return Err(Error::format(WHAT, format!("coordinate {c} lies outside the map")));
        }
        if let Some(s) = doc.segments.iter().find(|s| s.start > s.end || s.end > doc.path.len()) {
            return Err(Error::format(WHAT, format!("segment {}..{} is out of range", s.start, s.end)));
        }
        Ok(doc)
    }
}

pub fn save_plan(plan: &Plan, dims: Dims, path: &Path) -> Result<()> {
    fs::write(path, PlanDocument::new(plan, dims).to_json())?;
    Ok(())
}

pub fn load_plan(path: &Path) -> Result<PlanDocument> {
    PlanDocument::from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldDocument {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

pub fn field_to_json(field: &ScalarField) -> String {
    let d = field.dims();
    let doc = FieldDocument {
        width: d.width,
        height: d.height,
        values: field.values().to_vec(),
    };
    let mut s = serde_json::to_string(&doc).expect("field serializes");
    s.push('\n');
    s
}

pub fn field_from_json(text: &str) -> Result<ScalarField> {
    const WHAT: &str = "field file";
    let doc: FieldDocument = serde_json::from_str(text).map_err(|e| Error::format(WHAT, e))?;
    if doc.values.len() != doc.width * doc.height {
        return Err(Error::format(WHAT, "value count does not match width × height"));
    }
    ScalarField::new(doc.width, doc.height, doc.values).map_err(|e| Error::format(WHAT, e))
}

pub fn save_field(field: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, field_to_json(field))?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    field_from_json(&fs::read_to_string(path)?)
}

/// Header plus one data row.
pub fn metrics_csv(m: &MetricsRecord) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "null".to_string(), |x| x.to_string());
    format!(
        "rmse,hmr,path_length,sample_count,hotspot_count\n{},{},{},{},{}\n",
        opt(m.rmse),
        opt(m.hmr),
        m.path_length,
        m.sample_count,
        m.hotspot_count
    )
}

/// One plot layer: a named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: &'static str,
    pub csv: String,
}

fn raster_layer<T: ToString>(name: &'static str, column: &str, dims: Dims, value: impl Fn(Coord) -> T) -> Layer {
    let mut csv = format!("x,y,{column}\n");
    for c in dims.coords() {
        csv.push_str(&format!("{},{},{}\n", c.x, c.y, value(c).to_string()));
    }
    Layer { name, csv }
}

fn point_layer(name: &'static str, points: &[Coord]) -> Layer {
    let mut csv = String::from("index,x,y\n");
    for (i, c) in points.iter().enumerate() {
        csv.push_str(&format!("{i},{},{}\n", c.x, c.y));
    }
    Layer { name, csv }
}

/// Plot data for an environment and, optionally, a plan and a
/// reconstruction. Layers: `distribution`, `obstacles`, then `path` and
/// `samples` with a plan, then `error` (|true − estimate|, `null` on
/// obstacles) with an estimate.
pub fn render_layers(
    env: &EnvironmentBundle,
    plan: Option<&PlanDocument>,
    estimate: Option<&ScalarField>,
) -> Result<Vec<Layer>> {
    let dims = env.dims();
    let mut layers = vec![
        raster_layer("distribution", "value", dims, |c| env.distribution.get(c)),
        raster_layer("obstacles", "obstacle", dims, |c| u8::from(env.obstacle_map.get(c))),
    ];
    if let Some(p) = plan {
        dims.ensure_same(p.dims()?)?;
        layers.push(point_layer("path", &p.path));
        layers.push(point_layer("samples", &p.samples));
    }
    if let Some(est) = estimate {
        dims.ensure_same(est.dims())?;
        layers.push(raster_layer("error", "error", dims, |c| {
            if env.obstacle_map.get(c) {
                "null".to_string()
            } else {
                (env.distribution.get(c) - est.get(c)).abs().to_string()
            }
        }));
    }
    Ok(layers)
}

/// Writes each layer to `<dir>/<name>.csv`, creating `dir` if needed.
pub fn write_layers(layers: &[Layer], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for l in layers {
        fs::write(dir.join(format!("{}.csv", l.name)), &l.csv)?;
    }
    Ok(())
}

/// Estimates only; the method tags are not persisted.
pub fn save_estimate(est: &EstimatedField, path: &Path) -> Result<()> {
    save_field(&est.field, path)
}
