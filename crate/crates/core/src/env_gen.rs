//! Randomized environments: a smooth analyte distribution, its binary
//! hotspot map, and a binary obstacle map.
//!
//! Each map runs the same pipeline on its own random substream:
//!
//! 1. seed every pixel with `s ~ U[0, 1)`;
//! 2. scale exponentially, `y = 10^(-s / h)` for heterogeneity `h`;
//! 3. Gaussian-smooth with the standard deviation whose thresholded result
//!    covers the requested fraction of the map;
//! 4. min-max rescale to `[0, 1]` and threshold at `ε`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Dims, OccupancyGrid, ScalarField};
use crate::rng::{self, STREAM_DISTRIBUTION, STREAM_OBSTACLES};

/// Threshold applied to the rescaled smooth field.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// A fitted map whose density is further than this from the target is
/// flagged as best-effort.
pub const DENSITY_TOLERANCE: f64 = 0.02;
/// Evenly spaced sigma values probed before refining.
pub const SCAN_STEPS: usize = 60;
/// Bisection steps used to refine a bracketed crossing.
pub const BISECTION_STEPS: usize = 40;
/// Kernel half-width in standard deviations.
pub const TRUNCATE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvGenParams {
    pub width: usize,
    pub height: usize,
    /// Target fraction of the map covered by hotspots, in (0, 1).
    pub dist_density: f64,
    pub dist_heterogeneity: f64,
    /// Target fraction covered by obstacles, in [0, 1); 0 means none.
    pub obs_density: f64,
    pub obs_heterogeneity: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub seed: u64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl EnvGenParams {
    /// A `size`×`size` map with no obstacles.
    pub fn square(size: usize, dist_density: f64, dist_heterogeneity: f64, seed: u64) -> Self {
        EnvGenParams {
            width: size,
            height: size,
            dist_density,
            dist_heterogeneity,
            obs_density: 0.0,
            obs_heterogeneity: 0.1,
            threshold: DEFAULT_THRESHOLD,
            seed,
        }
    }

    pub fn with_obstacles(mut self, density: f64, heterogeneity: f64) -> Self {
        self.obs_density = density;
        self.obs_heterogeneity = heterogeneity;
        self
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.width, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        if !(self.dist_density > 0.0 && self.dist_density < 1.0) {
            return Err(Error::param("dist_density", "must lie strictly between 0 and 1"));
        }
        if !(self.obs_density >= 0.0 && self.obs_density < 1.0) {
            return Err(Error::param("obs_density", "must lie in [0, 1)"));
        }
        if !(self.dist_heterogeneity > 0.0 && self.dist_heterogeneity.is_finite()) {
            return Err(Error::param("dist_heterogeneity", "must be positive"));
        }
        if !(self.obs_heterogeneity > 0.0 && self.obs_heterogeneity.is_finite()) {
            return Err(Error::param("obs_heterogeneity", "must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param("threshold", "must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

/// Independent uniform `[0, 1)` values, one per pixel in row-major order.
pub fn seed_field<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> ScalarField {
    let values = (0..dims.len()).map(|_| rng.gen::<f64>()).collect();
    ScalarField::from_raw(dims, values)
}

/// Pointwise `10^(-s / h)`.
pub fn heterogeneity_scale(field: &ScalarField, heterogeneity: f64) -> Result<ScalarField> {
    if !(heterogeneity > 0.0 && heterogeneity.is_finite()) {
        return Err(Error::param("heterogeneity", format!("must be positive, got {heterogeneity}")));
    }
    Ok(field.map(|s| 10f64.powf(-s / heterogeneity)))
}

/// Mirror index for `reflect` boundaries (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (TRUNCATE * sigma + 0.5) as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Dense `n×n` operator for a 1-D reflected convolution, so the kernel can
/// be wider than the axis it runs along.
fn axis_operator(weights: &[f64], n: usize) -> Vec<f64> {
    let radius = (weights.len() / 2) as isize;
    let mut op = vec![0.0; n * n];
    for i in 0..n {
        for (k, &w) in weights.iter().enumerate() {
            let j = reflect(i as isize + k as isize - radius, n);
            op[i * n + j] += w;
        }
    }
    op
}

/// Separable Gaussian blur with standard deviation `sigma` and reflected
/// borders. `sigma == 0` returns the input unchanged.
pub fn gaussian_smooth(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let dims = field.dims();
    let (w, h) = (dims.width, dims.height);
    let weights = kernel(sigma);
    let ox = axis_operator(&weights, w);
    let oy = axis_operator(&weights, h);
    let src = field.values();

    let mut rows = vec![0.0; dims.len()];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let op = &ox[x * w..(x + 1) * w];
            rows[y * w + x] = op.iter().zip(line).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; dims.len()];
    for y in 0..h {
        let op = &oy[y * h..(y + 1) * h];
        for (j, &wt) in op.iter().enumerate() {
            if wt == 0.0 {
                continue;
            }
            let line = &rows[j * w..(j + 1) * w];
            for x in 0..w {
                out[y * w + x] += wt * line[x];
            }
        }
    }
    Ok(ScalarField::from_raw(dims, out))
}

/// Min-max rescale to `[0, 1]`; a constant field maps to 0.5 everywhere.
pub fn rescale_unit(field: &ScalarField) -> ScalarField {
    let (lo, hi) = (field.min(), field.max());
    if hi - lo <= 0.0 {
        return ScalarField::filled(field.dims(), 0.5);
    }
    let span = hi - lo;
    field.map(|v| (v - lo) / span)
}

/// Outcome of fitting a smoothing width to a target density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFit {
    /// Smoothed field rescaled to `[0, 1]`.
    pub field: ScalarField,
    pub sigma: f64,
    pub density: f64,
    /// False when the target could not be met within [`DENSITY_TOLERANCE`].
    pub converged: bool,
}

/// Summary of a [`DensityFit`] without the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapFit {
    pub sigma: f64,
    pub density: f64,
    pub converged: bool,
}

impl From<&DensityFit> for MapFit {
    fn from(f: &DensityFit) -> Self {
        MapFit {
            sigma: f.sigma,
            density: f.density,
            converged: f.converged,
        }
    }
}

fn evaluate_sigma(raw: &ScalarField, sigma: f64, threshold: f64) -> Result<(ScalarField, f64)> {
    let field = rescale_unit(&gaussian_smooth(raw, sigma)?);
    let density = field.threshold(threshold).density();
    Ok((field, density))
}

/// Finds the smoothing width in `[0, max(width, height)]` whose rescaled,
/// thresholded field covers a fraction of the map closest to `target`.
///
/// Density is not monotone in sigma for these fields, so the range is first
/// scanned on an even grid; the first bracketed crossing of the target is
/// then refined by bisection. Ties go to the smaller sigma.
pub fn solve_density_sigma(raw: &ScalarField, target: f64, threshold: f64) -> Result<DensityFit> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("density", format!("must lie in (0, 1), got {target}")));
    }
    let dims = raw.dims();
    let sigma_max = dims.width.max(dims.height) as f64;
    // No finer resolution is possible than one cell.
    let resolution = 0.5 / dims.len() as f64;

    let mut best: Option<(f64, f64, ScalarField)> = None;
    let consider = |best: &mut Option<(f64, f64, ScalarField)>, sigma: f64, density: f64, field| {
        let better = match best {
            None => true,
            Some((s, d, _)) => {
                let (e, eb) = ((density - target).abs(), (*d - target).abs());
                e < eb || (e == eb && sigma < *s)
            }
        };
        if better {
            *best = Some((sigma, density, field));
        }
    };

    let mut scan = Vec::with_capacity(SCAN_STEPS + 1);
    for k in 0..=SCAN_STEPS {
        let sigma = sigma_max * k as f64 / SCAN_STEPS as f64;
        let (field, density) = evaluate_sigma(raw, sigma, threshold)?;
        scan.push((sigma, density));
        consider(&mut best, sigma, density, field);
    }

    let bracket = scan
        .windows(2)
        .find(|w| (w[0].1 - target) * (w[1].1 - target) < 0.0);
    if let Some(w) = bracket {
        let (mut lo, mut lo_density) = w[0];
        let mut hi = w[1].0;
        for _ in 0..BISECTION_STEPS {
            if best.as_ref().is_some_and(|b| (b.1 - target).abs() <= resolution) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (field, density) = evaluate_sigma(raw, mid, threshold)?;
            consider(&mut best, mid, density, field);
            if (density - target) * (lo_density - target) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                lo_density = density;
            }
        }
    }

    let (sigma, density, field) = best.expect("scan evaluates at least one sigma");
    Ok(DensityFit {
        field,
        sigma,
        density,
        converged: (density - target).abs() <= DENSITY_TOLERANCE,
    })
}

/// Builds one binary map plus its smooth field from a dedicated substream.
pub fn generate_map(
    dims: Dims,
    density: f64,
    heterogeneity: f64,
    threshold: f64,
    stream_parts: &[u64],
) -> Result<DensityFit> {
    let mut rng = rng::stream(stream_parts);
    let seeds = seed_field(dims, &mut rng);
    let scaled = heterogeneity_scale(&seeds, heterogeneity)?;
    solve_density_sigma(&scaled, density, threshold)
}

/// One randomized environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentBundle {
    /// Smooth analyte distribution in `[0, 1]`.
    pub distribution: ScalarField,
    /// `distribution > threshold`.
    pub hotspot_map: BinaryGrid,
    pub obstacle_map: OccupancyGrid,
    pub params: EnvGenParams,
    pub distribution_fit: MapFit,
    /// `None` when the obstacle density is zero.
    pub obstacle_fit: Option<MapFit>,
}

impl EnvironmentBundle {
    pub fn dims(&self) -> Dims {
        self.obstacle_map.dims()
    }

    /// Assembles a bundle from existing maps, checking shapes and the
    /// hotspot/threshold relation.
    pub fn from_parts(
        distribution: ScalarField,
        hotspot_map: BinaryGrid,
        obstacle_map: OccupancyGrid,
        params: EnvGenParams,
    ) -> Result<Self> {
        let dims = obstacle_map.dims();
        dims.ensure_same(distribution.dims())?;
        dims.ensure_same(hotspot_map.dims())?;
        Ok(EnvironmentBundle {
            distribution_fit: MapFit {
                sigma: f64::NAN,
                density: hotspot_map.density(),
                converged: true,
            },
            obstacle_fit: None,
            distribution,
            hotspot_map,
            obstacle_map,
            params,
        })
    }
}

/// Runs the full pipeline for both maps. Deterministic in `params`.
pub fn generate_environment(params: &EnvGenParams) -> Result<EnvironmentBundle> {
    params.validate()?;
    let dims = params.dims()?;

    let dist = generate_map(
        dims,
        params.dist_density,
        params.dist_heterogeneity,
        params.threshold,
        &[params.seed, STREAM_DISTRIBUTION],
    )?;
    let hotspot_map = dist.field.threshold(params.threshold);

    let (obstacle_map, obstacle_fit) = if params.obs_density == 0.0 {
        (BinaryGrid::from_fn(dims, |_| false), None)
    } else {
        let fit = generate_map(
            dims,
            params.obs_density,
            params.obs_heterogeneity,
            params.threshold,
            &[params.seed, STREAM_OBSTACLES],
        )?;
        (fit.field.threshold(params.threshold), Some(MapFit::from(&fit)))
    };

    Ok(EnvironmentBundle {
        distribution_fit: MapFit::from(&dist),
        distribution: dist.field,
        hotspot_map,
        obstacle_map,
        params: *params,
        obstacle_fit,
    })
}
