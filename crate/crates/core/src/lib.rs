//! Boustrophedon coverage planning for sampling spatial distributions on
//! occupancy grids, with the environment generator and evaluation harness
//! used to measure it.

pub mod decompose;
pub mod env_gen;
pub mod error;
pub mod estimate;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod monte_carlo;
pub mod preprocess;
pub mod raster;
pub mod rng;
pub mod search;

pub use decompose::{decompose, Cell, CellSet, Corner};
pub use env_gen::{generate_environment, EnvGenParams, EnvironmentBundle};
pub use error::{Error, Result};
pub use estimate::{interpolate, EstimatedField, SampleSet};
pub use grid::{BinaryGrid, Connectivity, Coord, Dims, OccupancyGrid, ScalarField};
pub use metrics::{evaluate, MetricsRecord};
pub use monte_carlo::{aggregate, run_sweep, run_trial, AggregateStats, SweepConfig, TrialConfig};
pub use raster::{plan, plan_grid, Plan, PlanConfig};
pub use search::{shortest_path, PathCost};
