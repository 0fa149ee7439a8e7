//! Accuracy and effort metrics for a plan on one environment.
//!
//! Accuracy metrics ignore masked cells: obstacles, plus free cells the
//! robot cannot reach from its start. Undefined metrics are `None`, never
//! zero.

use serde::{Deserialize, Serialize};

use crate::env_gen::EnvironmentBundle;
use crate::error::{Error, Result};
use crate::estimate::{interpolate, EstimatedField, SampleSet};
use crate::grid::{connected_components, reachable_from, BinaryGrid, Connectivity, Coord, ScalarField};
use crate::raster::Plan;
use crate::search::path_length;

/// Root-mean-square difference over unmasked cells, or `None` if every
/// cell is masked.
pub fn rmse(truth: &ScalarField, estimate: &ScalarField, mask: &BinaryGrid) -> Result<Option<f64>> {
    truth.dims().ensure_same(estimate.dims())?;
    truth.dims().ensure_same(mask.dims())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((&t, &e), &m) in truth.values().iter().zip(estimate.values()).zip(mask.cells()) {
        if !m {
            let d = t - e;
            sum += d * d;
            count += 1;
        }
    }
    Ok((count > 0).then(|| (sum / count as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotOutcome {
    /// Missed / total, or `None` when there are no hotspots.
    pub hmr: Option<f64>,
    pub hotspot_count: usize,
    pub missed: usize,
}

/// Fraction of hotspots (8-connected components of unmasked hotspot cells)
/// that contain no sample.
pub fn hotspot_miss_rate(
    hotspot_map: &BinaryGrid,
    samples: &[Coord],
    mask: &BinaryGrid,
) -> Result<HotspotOutcome> {
    let visible = hotspot_map.and_not(mask)?;
    let labels = connected_components(&visible, Connectivity::Eight);
    let mut hit = vec![false; labels.count()];
    for &s in samples {
        labels.dims().check(s)?;
        let l = labels.label(s);
        if l > 0 {
            hit[l as usize - 1] = true;
        }
    }
    let total = labels.count();
    let missed = hit.iter().filter(|&&h| !h).count();
    Ok(HotspotOutcome {
        hmr: (total > 0).then(|| missed as f64 / total as f64),
        hotspot_count: total,
        missed,
    })
}

/// All four metrics for one (environment, plan) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub rmse: Option<f64>,
    pub hmr: Option<f64>,
    pub path_length: f64,
    pub sample_count: usize,
    pub hotspot_count: usize,
}

/// Obstacles plus free cells not reachable from the plan's start.
pub fn evaluation_mask(env: &EnvironmentBundle, plan: &Plan) -> BinaryGrid {
    match plan.start() {
        Some(start) => reachable_from(&env.obstacle_map, start).not(),
        None => env.obstacle_map.clone(),
    }
}

/// Samples the true distribution along the plan, rebuilds it, and scores
/// the result. Also returns the reconstruction when there was anything to
/// reconstruct from.
pub fn evaluate_with_estimate(
    env: &EnvironmentBundle,
    plan: &Plan,
) -> Result<(MetricsRecord, Option<EstimatedField>)> {
    let dims = env.dims();
    if let Some(c) = plan.path.iter().find(|&&c| !dims.contains(c)) {
        return Err(Error::OutOfBounds {
            coord: *c,
            width: dims.width,
            height: dims.height,
        });
    }
    let mask = evaluation_mask(env, plan);
    let samples = SampleSet::measure(&env.distribution, &plan.samples)?;
    let estimate = if samples.is_empty() {
        None
    } else {
        Some(interpolate(&samples, dims)?)
    };
    let rmse = match &estimate {
        Some(e) => rmse(&env.distribution, &e.field, &mask)?,
        None => None,
    };
    let hotspots = hotspot_miss_rate(&env.hotspot_map, samples.coords(), &mask)?;
    let record = MetricsRecord {
        rmse,
        hmr: hotspots.hmr,
        path_length: path_length(&plan.path),
        sample_count: samples.len(),
        hotspot_count: hotspots.hotspot_count,
    };
    Ok((record, estimate))
}

pub fn evaluate(env: &EnvironmentBundle, plan: &Plan) -> Result<MetricsRecord> {
    evaluate_with_estimate(env, plan).map(|(m, _)| m)
}
