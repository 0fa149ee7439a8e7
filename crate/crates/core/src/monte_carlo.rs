//! Seeded Monte-Carlo trials and parameter sweeps.
//!
//! A trial generates one environment, plans over it and scores the plan.
//! Its seed is `derive_seed(&[master_seed, arm_id, trial_index, attempt])`,
//! where `arm_id` indexes the environment arm only. Sweeping spacing or
//! toggling preprocessing therefore reuses the same environments, which
//! keeps comparisons between those arms paired.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env_gen::{generate_environment, EnvGenParams, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsRecord};
use crate::raster::{plan, PlanConfig};
use crate::rng::{derive_seed, stream, STREAM_PARAMS};

/// Regeneration attempts allowed after the first when an environment has
/// no free space.
pub const MAX_RETRIES: u64 = 5;

/// An environment parameter: either fixed, or drawn uniformly per trial
/// from `[lo, hi]`. In TOML this is `0.3` or `[0.1, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Fixed(f64),
    Uniform([f64; 2]),
}

impl ParamSpec {
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            ParamSpec::Fixed(v) => v,
            ParamSpec::Uniform([lo, hi]) => {
                // Always consume one draw so later parameters don't shift.
                let u: f64 = rng.gen();
                lo + u * (hi - lo)
            }
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            ParamSpec::Fixed(v) => (v, v),
            ParamSpec::Uniform([lo, hi]) => (lo, hi),
        }
    }

    fn validate(self, name: &'static str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param(name, format!("bad range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

impl std::fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamSpec::Fixed(v) => write!(f, "{v}"),
            ParamSpec::Uniform([lo, hi]) => write!(f, "{lo}..{hi}"),
        }
    }
}

impl From<f64> for ParamSpec {
    fn from(v: f64) -> Self {
        ParamSpec::Fixed(v)
    }
}

/// The distribution and obstacle parameters of one family of environments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentArm {
    pub dist_density: ParamSpec,
    pub dist_heterogeneity: ParamSpec,
    #[serde(default = "no_obstacles")]
    pub obs_density: ParamSpec,
    #[serde(default = "default_obs_heterogeneity")]
    pub obs_heterogeneity: ParamSpec,
}

fn no_obstacles() -> ParamSpec {
    ParamSpec::Fixed(0.0)
}

fn default_obs_heterogeneity() -> ParamSpec {
    ParamSpec::Fixed(0.1)
}

impl EnvironmentArm {
    pub fn fixed(dist_density: f64, dist_heterogeneity: f64, obs_density: f64, obs_heterogeneity: f64) -> Self {
        EnvironmentArm {
            dist_density: dist_density.into(),
            dist_heterogeneity: dist_heterogeneity.into(),
            obs_density: obs_density.into(),
            obs_heterogeneity: obs_heterogeneity.into(),
        }
    }

    /// Concrete parameters for one environment. Uniform parameters are drawn
    /// from the trial's parameter substream in field order.
    pub fn draw(&self, width: usize, height: usize, threshold: f64, seed: u64) -> EnvGenParams {
        let mut rng = stream(&[seed, STREAM_PARAMS]);
        EnvGenParams {
            width,
            height,
            dist_density: self.dist_density.draw(&mut rng),
            dist_heterogeneity: self.dist_heterogeneity.draw(&mut rng),
            obs_density: self.obs_density.draw(&mut rng),
            obs_heterogeneity: self.obs_heterogeneity.draw(&mut rng),
            threshold,
            seed,
        }
    }

    fn validate(&self, width: usize, height: usize, threshold: f64) -> Result<()> {
        self.dist_density.validate("dist_density")?;
        self.dist_heterogeneity.validate("dist_heterogeneity")?;
        self.obs_density.validate("obs_density")?;
        self.obs_heterogeneity.validate("obs_heterogeneity")?;
        for pick in [0, 1] {
            let end = |p: ParamSpec| if pick == 0 { p.bounds().0 } else { p.bounds().1 };
            EnvGenParams {
                width,
                height,
                dist_density: end(self.dist_density),
                dist_heterogeneity: end(self.dist_heterogeneity),
                obs_density: end(self.obs_density),
                obs_heterogeneity: end(self.obs_heterogeneity),
                threshold,
                seed: 0,
            }
            .validate()?;
        }
        Ok(())
    }
}

/// Everything needed to run one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub arm: EnvironmentArm,
    /// Index of `arm` within its sweep; part of the seed.
    pub arm_id: u64,
    pub width: usize,
    pub height: usize,
    pub threshold: f64,
    pub plan: PlanConfig,
    pub trial_index: u64,
    pub master_seed: u64,
}

impl TrialConfig {
    pub fn new(arm: EnvironmentArm, plan: PlanConfig, trial_index: u64, master_seed: u64) -> Self {
        TrialConfig {
            arm,
            arm_id: 0,
            width: 30,
            height: 30,
            threshold: DEFAULT_THRESHOLD,
            plan,
            trial_index,
            master_seed,
        }
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn seed(&self, attempt: u64) -> u64 {
        derive_seed(&[self.master_seed, self.arm_id, self.trial_index, attempt])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub record: MetricsRecord,
    /// Parameters of the environment actually scored.
    pub params: EnvGenParams,
    /// How many environments were discarded for having no free space.
    pub regenerated: u64,
}

/// Generates, plans and evaluates one environment.
pub fn run_trial(config: &TrialConfig) -> Result<TrialOutcome> {
    for attempt in 0..=MAX_RETRIES {
        let params = config
            .arm
            .draw(config.width, config.height, config.threshold, config.seed(attempt));
        let env = generate_environment(&params)?;
        match plan(&env, &config.plan) {
            Ok(p) => {
                return Ok(TrialOutcome {
                    record: evaluate(&env, &p)?,
                    params,
                    regenerated: attempt,
                })
            }
            Err(Error::NoFreeSpace) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoFreeSpace)
}

/// Summary of one metric over the trials where it was defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1 denominator); needs two values.
    pub std: Option<f64>,
    pub stderr: Option<f64>,
    pub n_valid: usize,
}

impl MetricStats {
    /// Order-independent: values are sorted before any summation.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return MetricStats {
                mean: None,
                std: None,
                stderr: None,
                n_valid: 0,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let (std, stderr) = if n > 1 {
            let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
            let std = (ss / (n - 1) as f64).sqrt();
            (Some(std), Some(std / (n as f64).sqrt()))
        } else {
            (None, None)
        };
        MetricStats {
            mean: Some(mean),
            std,
            stderr,
            n_valid: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    /// Records aggregated.
    pub n: usize,
    pub rmse: MetricStats,
    pub hmr: MetricStats,
    pub path_length: MetricStats,
    pub sample_count: MetricStats,
}

pub fn aggregate(records: &[MetricsRecord]) -> AggregateStats {
    AggregateStats {
        n: records.len(),
        rmse: MetricStats::from_values(records.iter().filter_map(|r| r.rmse)),
        hmr: MetricStats::from_values(records.iter().filter_map(|r| r.hmr)),
        path_length: MetricStats::from_values(records.iter().map(|r| r.path_length)),
        sample_count: MetricStats::from_values(records.iter().map(|r| r.sample_count as f64)),
    }
}

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    SampleSpacing,
    DistDensity,
    DistHeterogeneity,
    ObsDensity,
    ObsHeterogeneity,
}

/// A parameter sweep, read from TOML. Keys match the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_parameter")]
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Sample spacing when it is not the swept parameter.
    #[serde(default = "default_spacing")]
    pub spacing: usize,
    pub environments: Vec<EnvironmentArm>,
    #[serde(default = "default_preprocess")]
    pub preprocess: Vec<bool>,
}

fn default_parameter() -> SweptParameter {
    SweptParameter::SampleSpacing
}
fn default_size() -> usize {
    30
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_spacing() -> usize {
    1
}
fn default_preprocess() -> Vec<bool> {
    vec![false]
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::format("sweep config", e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::param("values", "must not be empty"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.environments.is_empty() {
            return Err(Error::param("environments", "must list at least one arm"));
        }
        if self.preprocess.is_empty() {
            return Err(Error::param("preprocess", "must list at least one arm"));
        }
        if self.spacing == 0 {
            return Err(Error::param("spacing", "must be at least 1"));
        }
        for key in self.arms()? {
            key.environment
                .validate(self.width, self.height, self.threshold)?;
        }
        Ok(())
    }

    /// All arms in output order: value, then environment, then
    /// preprocessing.
    pub fn arms(&self) -> Result<Vec<ArmKey>> {
        let mut out = Vec::new();
        for &value in &self.values {
            for (env_id, arm) in self.environments.iter().enumerate() {
                let mut arm = *arm;
                let mut spacing = self.spacing;
                match self.parameter {
                    SweptParameter::SampleSpacing => {
                        if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                            return Err(Error::param("values", format!("spacing {value} is not a positive integer")));
                        }
                        spacing = value as usize;
                    }
                    SweptParameter::DistDensity => arm.dist_density = value.into(),
                    SweptParameter::DistHeterogeneity => arm.dist_heterogeneity = value.into(),
                    SweptParameter::ObsDensity => arm.obs_density = value.into(),
                    SweptParameter::ObsHeterogeneity => arm.obs_heterogeneity = value.into(),
                }
                for &preprocess in &self.preprocess {
                    out.push(ArmKey {
                        spacing,
                        environment: arm,
                        env_id: env_id as u64,
                        preprocess,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Identifies one row of the sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmKey {
    pub spacing: usize,
    pub environment: EnvironmentArm,
    pub env_id: u64,
    pub preprocess: bool,
}

impl ArmKey {
    fn trial(&self, sweep: &SweepConfig, trial_index: u64, master_seed: u64) -> TrialConfig {
        TrialConfig {
            arm: self.environment,
            arm_id: self.env_id,
            width: sweep.width,
            height: sweep.height,
            threshold: sweep.threshold,
            plan: PlanConfig::new(self.spacing).with_preprocess(self.preprocess),
            trial_index,
            master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub key: ArmKey,
    pub trial: u64,
    pub result: std::result::Result<TrialOutcome, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub key: ArmKey,
    pub stats: AggregateStats,
    /// Trials that completed.
    pub n_valid: usize,
    pub rmse_undefined: usize,
    pub hmr_undefined: usize,
    pub regenerated: u64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRow>,
}

/// Runs every arm of `sweep`. `jobs` = 0 uses all cores. Results do not
/// depend on `jobs`: each trial is a pure function of its seed and rows are
/// assembled by index.
pub fn run_sweep(sweep: &SweepConfig, master_seed: u64, jobs: usize) -> Result<SweepResult> {
    sweep.validate()?;
    let arms = sweep.arms()?;
    let tasks: Vec<(usize, u64)> = (0..arms.len())
        .flat_map(|a| (0..sweep.trials as u64).map(move |t| (a, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    let trials: Vec<TrialRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(a, t)| TrialRow {
                key: arms[a],
                trial: t,
                result: run_trial(&arms[a].trial(sweep, t, master_seed)).map_err(|e| e.to_string()),
            })
            .collect()
    });

    let rows = arms
        .iter()
        .zip(trials.chunks(sweep.trials))
        .map(|(key, chunk)| {
            let ok: Vec<&TrialOutcome> = chunk.iter().filter_map(|t| t.result.as_ref().ok()).collect();
            let records: Vec<MetricsRecord> = ok.iter().map(|o| o.record).collect();
            SweepRow {
                key: *key,
                stats: aggregate(&records),
                n_valid: ok.len(),
                rmse_undefined: records.iter().filter(|r| r.rmse.is_none()).count(),
                hmr_undefined: records.iter().filter(|r| r.hmr.is_none()).count(),
                regenerated: ok.iter().map(|o| o.regenerated).sum(),
                failed: chunk.len() - ok.len(),
            }
        })
        .collect();
    Ok(SweepResult { rows, trials })
}

pub const SWEEP_HEADER: [&str; 24] = [
    "spacing",
    "dist_density",
    "dist_heterogeneity",
    "obs_density",
    "obs_heterogeneity",
    "preprocess",
    "n",
    "n_valid",
    "rmse_mean",
    "rmse_std",
    "rmse_stderr",
    "hmr_mean",
    "hmr_std",
    "hmr_stderr",
    "path_length_mean",
    "path_length_std",
    "path_length_stderr",
    "sample_count_mean",
    "sample_count_std",
    "sample_count_stderr",
    "rmse_undefined",
    "hmr_undefined",
    "regenerated",
    "failed",
];

pub const TRIAL_HEADER: [&str; 22] = [
    "spacing",
    "dist_density",
    "dist_heterogeneity",
    "obs_density",
    "obs_heterogeneity",
    "preprocess",
    "trial",
    "seed",
    "width",
    "height",
    "threshold",
    "env_dist_density",
    "env_dist_heterogeneity",
    "env_obs_density",
    "env_obs_heterogeneity",
    "regenerated",
    "rmse",
    "hmr",
    "path_length",
    "sample_count",
    "hotspot_count",
    "error",
];

/// Undefined values are written as `null`.
fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| x.to_string())
}

fn key_fields(key: &ArmKey) -> [String; 6] {
    let e = &key.environment;
    [
        key.spacing.to_string(),
        e.dist_density.to_string(),
        e.dist_heterogeneity.to_string(),
        e.obs_density.to_string(),
        e.obs_heterogeneity.to_string(),
        key.preprocess.to_string(),
    ]
}

fn write_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

impl SweepResult {
    /// One row per arm.
    pub fn summary_csv(&self) -> String {
        write_csv(
            SWEEP_HEADER,
            self.rows.iter().map(|r| {
                let mut f = key_fields(&r.key).to_vec();
                f.push((r.n_valid + r.failed).to_string());
                f.push(r.n_valid.to_string());
                for m in [&r.stats.rmse, &r.stats.hmr, &r.stats.path_length, &r.stats.sample_count] {
                    f.extend([opt(m.mean), opt(m.std), opt(m.stderr)]);
                }
                f.extend([
                    r.rmse_undefined.to_string(),
                    r.hmr_undefined.to_string(),
                    r.regenerated.to_string(),
                    r.failed.to_string(),
                ]);
                f
            }),
        )
    }

    /// One row per trial, with the concrete environment parameters so any
    /// row can be regenerated on its own.
    pub fn trials_csv(&self) -> String {
        write_csv(
            TRIAL_HEADER,
            self.trials.iter().map(|t| {
                let mut f = key_fields(&t.key).to_vec();
                f.push(t.trial.to_string());
                match &t.result {
                    Ok(o) => {
                        let p = &o.params;
                        f.extend([
                            p.seed.to_string(),
                            p.width.to_string(),
                            p.height.to_string(),
                            p.threshold.to_string(),
                            p.dist_density.to_string(),
                            p.dist_heterogeneity.to_string(),
                            p.obs_density.to_string(),
                            p.obs_heterogeneity.to_string(),
                            o.regenerated.to_string(),
                            opt(o.record.rmse),
                            opt(o.record.hmr),
                            o.record.path_length.to_string(),
                            o.record.sample_count.to_string(),
                            o.record.hotspot_count.to_string(),
                            String::new(),
                        ]);
                    }
                    Err(e) => {
                        f.extend(std::iter::repeat("null".to_string()).take(14));
                        f.push(e.clone());
                    }
                }
                f
            }),
        )
    }
}

/// Human-readable digest, one line per arm.
pub fn describe(result: &SweepResult) -> String {
    let mut s = String::new();
    for r in &result.rows {
        let k = &r.key;
        let _ = writeln!(
            s,
            "spacing={} env={} preprocess={} n={} rmse={} hmr={} length={}",
            k.spacing,
            k.env_id,
            k.preprocess,
            r.n_valid,
            opt(r.stats.rmse.mean),
            opt(r.stats.hmr.mean),
            opt(r.stats.path_length.mean),
        );
    }
    s
}
