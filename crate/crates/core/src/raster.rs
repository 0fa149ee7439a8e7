//! Sampling plans: lawnmower rastering inside each cell, greedy travel
//! between cells, and measurement sampling at a fixed spacing.
//!
//! Inside a cell the robot runs vertical strokes between the ceiling and
//! floor, shifting sideways along the boundary it just reached by
//! `spacing` columns (or by whatever width remains). Samples are taken
//! every `spacing` path steps within a cell, starting with the entry
//! corner; nothing is sampled while travelling between cells.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, Cell, CellSet, Corner};
use crate::env_gen::EnvironmentBundle;
use crate::error::{Error, Result};
use crate::grid::{Connectivity, Coord, OccupancyGrid};
use crate::preprocess::{self, PreprocessReport};
use crate::search::{self, DistanceField, PathCost};

/// Planner settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Raster pitch and sampling cadence, in grid cells.
    pub sample_spacing: usize,
    /// Start coordinate; `None` picks the first free cell in row-major order.
    pub start: Option<Coord>,
    /// Erase obstacles thinner than the spacing before decomposing.
    pub preprocess: bool,
}

impl PlanConfig {
    pub fn new(sample_spacing: usize) -> Self {
        PlanConfig {
            sample_spacing,
            start: None,
            preprocess: false,
        }
    }

    pub fn with_preprocess(mut self, on: bool) -> Self {
        self.preprocess = on;
        self
    }

    pub fn with_start(mut self, start: Coord) -> Self {
        self.start = Some(start);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sample_spacing == 0 {
            return Err(Error::param("sample_spacing", "must be at least 1"));
        }
        Ok(())
    }
}

/// The part of a plan spent rastering one cell; `start..=end` indexes
/// [`Plan::path`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub cell: usize,
    pub start: usize,
    pub end: usize,
}

/// A complete sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Every consecutive pair is a king move between free cells.
    pub path: Vec<Coord>,
    /// Distinct sample coordinates in the order they are taken.
    pub samples: Vec<Coord>,
    pub segments: Vec<Segment>,
    pub cell_order: Vec<usize>,
    pub spacing: usize,
    pub cell_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PreprocessReport>,
}

impl Plan {
    pub fn path_length(&self) -> f64 {
        path_length(self)
    }

    pub fn start(&self) -> Option<Coord> {
        self.path.first().copied()
    }
}

/// Travel cost of the whole plan (1 per cardinal step, √2 per diagonal).
pub fn path_length(plan: &Plan) -> f64 {
    search::path_length(&plan.path)
}

/// Path, samples and exit point produced by rastering one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterSegment {
    pub path: Vec<Coord>,
    pub samples: Vec<Coord>,
    pub exit: Coord,
    /// Stroke columns in travel order.
    pub strokes: Vec<usize>,
}

/// Evenly pitched stroke columns from the entry side, always ending on the
/// far edge column.
fn stroke_columns(cell: &Cell, from_left: bool, spacing: usize) -> Vec<usize> {
    let width = cell.width();
    let mut offsets: Vec<usize> = (0..width).step_by(spacing).collect();
    if offsets.last() != Some(&(width - 1)) {
        offsets.push(width - 1);
    }
    offsets
        .into_iter()
        .map(|o| if from_left { cell.x_left + o } else { cell.x_right() - o })
        .collect()
}

fn vertical(path: &mut Vec<Coord>, x: usize, to: usize) {
    let from = path.last().expect("path never empty").y;
    if to > from {
        path.extend((from + 1..=to).map(|y| Coord::new(x, y)));
    } else {
        path.extend((to..from).rev().map(|y| Coord::new(x, y)));
    }
}

/// Moves from the current position into the adjacent column `next`,
/// finishing on row `target`, without leaving the cell.
fn step_to_column(cell: &Cell, path: &mut Vec<Coord>, next: usize, target: usize) {
    let here = *path.last().expect("path never empty");
    let (top, bottom) = (cell.ceiling_at(here.x), cell.floor_at(here.x));
    let (r1, r2) = if (top..=bottom).contains(&target) {
        match here.y.cmp(&target) {
            std::cmp::Ordering::Equal => (target, target),
            std::cmp::Ordering::Greater => (target + 1, target),
            std::cmp::Ordering::Less => (target - 1, target),
        }
    } else if target < top {
        (top, top - 1)
    } else {
        (bottom, bottom + 1)
    };
    vertical(path, here.x, r1);
    path.push(Coord::new(next, r2));
    vertical(path, next, target);
}

fn trace_strokes(cell: &Cell, entry: Corner, strokes: &[usize]) -> Vec<Coord> {
    let mut path = vec![cell.corner(entry)];
    let mut on_top = entry.is_top();
    for (k, &col) in strokes.iter().enumerate() {
        if k > 0 {
            let here = path.last().unwrap().x;
            let cols: Vec<usize> = if col > here {
                (here + 1..=col).collect()
            } else {
                (col..here).rev().collect()
            };
            for c in cols {
                let target = if on_top { cell.ceiling_at(c) } else { cell.floor_at(c) };
                step_to_column(cell, &mut path, c, target);
            }
        }
        let end = if on_top { cell.floor_at(col) } else { cell.ceiling_at(col) };
        vertical(&mut path, col, end);
        on_top = !on_top;
    }
    path
}

/// First cell coordinate (column-major) whose Chebyshev distance to `path`
/// exceeds `spacing`.
fn uncovered(cell: &Cell, path: &[Coord], spacing: usize) -> Option<Coord> {
    let top = *cell.ceiling.iter().min().unwrap();
    let bottom = *cell.floor.iter().max().unwrap();
    let (w, h) = (cell.width(), bottom - top + 1);
    let idx = |c: Coord| (c.y - top) * w + (c.x - cell.x_left);
    let mut dist = vec![usize::MAX; w * h];
    let mut queue = VecDeque::new();
    for &c in path {
        if dist[idx(c)] == usize::MAX {
            dist[idx(c)] = 0;
            queue.push_back(c);
        }
    }
    // Breadth-first search with king moves on an open box yields
    // Chebyshev distance.
    while let Some(c) = queue.pop_front() {
        let d = dist[idx(c)];
        if d >= spacing {
            continue;
        }
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (Some(x), Some(y)) = (c.x.checked_add_signed(dx), c.y.checked_add_signed(dy)) else {
                    continue;
                };
                if x < cell.x_left || x > cell.x_right() || y < top || y > bottom {
                    continue;
                }
                let n = Coord::new(x, y);
                if dist[idx(n)] == usize::MAX {
                    dist[idx(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
    }
    cell.coords().find(|&c| dist[idx(c)] > spacing)
}

/// Rasters `cell` starting from the corner at `entry`.
///
/// Strokes are pitched `spacing` columns apart with a final stroke on the far
/// edge. If the cell's outline would leave a coordinate further than
/// `spacing` (Chebyshev) from the route, an extra stroke is added through
/// that coordinate's column.
pub fn raster_cell(cell: &Cell, entry: Coord, spacing: usize) -> Result<RasterSegment> {
    if spacing == 0 {
        return Err(Error::param("spacing", "must be at least 1"));
    }
    let corner = cell.corner_at(entry)?;
    let from_left = corner.is_left();
    let mut strokes = stroke_columns(cell, from_left, spacing);
    let path = loop {
        let path = trace_strokes(cell, corner, &strokes);
        match uncovered(cell, &path, spacing) {
            None => break path,
            Some(c) => {
                strokes.push(c.x);
                strokes.sort_unstable();
                if !from_left {
                    strokes.reverse();
                }
            }
        }
    };

    let mut seen = HashSet::new();
    let samples = path
        .iter()
        .step_by(spacing)
        .copied()
        .filter(|c| seen.insert(*c))
        .collect();
    Ok(RasterSegment {
        exit: *path.last().unwrap(),
        path,
        samples,
        strokes,
    })
}

/// Where to raster next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellChoice {
    pub cell: usize,
    pub corner: Corner,
    pub coord: Coord,
    pub cost: PathCost,
}

fn choose(field: &DistanceField, cells: &CellSet, pending: &[usize]) -> Option<CellChoice> {
    let mut best: Option<CellChoice> = None;
    let mut ids = pending.to_vec();
    ids.sort_unstable();
    for id in ids {
        let cell = cells.get(id);
        for corner in Corner::ALL {
            let coord = cell.corner(corner);
            let Some(cost) = field.cost(coord) else { continue };
            if best.map_or(true, |b| cost < b.cost) {
                best = Some(CellChoice { cell: id, corner, coord, cost });
            }
        }
    }
    best
}

/// The pending cell corner with the cheapest obstacle-aware route from
/// `position`. Ties go to the lowest cell id, then corner order TL, BL, TR,
/// BR. `None` when no pending cell is reachable.
pub fn next_cell(
    grid: &OccupancyGrid,
    position: Coord,
    cells: &CellSet,
    pending: &[usize],
) -> Result<Option<CellChoice>> {
    let field = DistanceField::compute(grid, position, Connectivity::Eight)?;
    Ok(choose(&field, cells, pending))
}

fn auto_start(grid: &OccupancyGrid) -> Result<Coord> {
    grid.clear_coords().next().ok_or(Error::NoFreeSpace)
}

/// Path with sample positions given as path indices.
pub(crate) struct RawPlan {
    pub path: Vec<Coord>,
    pub sample_indices: Vec<usize>,
    pub segments: Vec<Segment>,
    pub cell_order: Vec<usize>,
    pub cell_count: usize,
}

pub(crate) fn plan_raw(grid: &OccupancyGrid, start: Coord, spacing: usize) -> Result<RawPlan> {
    let cells = decompose(grid);
    let mut pending: Vec<usize> = (0..cells.len()).collect();
    let mut path = vec![start];
    let mut sample_indices = Vec::new();
    let mut segments = Vec::new();
    let mut cell_order = Vec::new();

    loop {
        let position = *path.last().unwrap();
        let field = DistanceField::compute(grid, position, Connectivity::Eight)?;
        let Some(choice) = choose(&field, &cells, &pending) else { break };
        let leg = field.path_to(choice.coord).expect("chosen corner is reachable");
        path.extend_from_slice(&leg[1..]);

        let seg_start = path.len() - 1;
        let segment = raster_cell(cells.get(choice.cell), choice.coord, spacing)?;
        path.extend_from_slice(&segment.path[1..]);
        sample_indices.extend((seg_start..path.len()).step_by(spacing));
        segments.push(Segment {
            cell: choice.cell,
            start: seg_start,
            end: path.len() - 1,
        });
        cell_order.push(choice.cell);
        pending.retain(|&id| id != choice.cell);
    }

    Ok(RawPlan {
        path,
        sample_indices,
        segments,
        cell_order,
        cell_count: cells.len(),
    })
}

fn unique_coords(coords: impl IntoIterator<Item = Coord>) -> Vec<Coord> {
    let mut seen = HashSet::new();
    coords.into_iter().filter(|c| seen.insert(*c)).collect()
}

/// Plans coverage of `grid` (1 = obstacle).
pub fn plan_grid(grid: &OccupancyGrid, config: &PlanConfig) -> Result<Plan> {
    config.validate()?;
    let start = match config.start {
        Some(s) => {
            grid.dims().check(s)?;
            if grid.get(s) {
                return Err(Error::Blocked(s));
            }
            s
        }
        None => auto_start(grid)?,
    };
    let spacing = config.sample_spacing;

    if !config.preprocess {
        let raw = plan_raw(grid, start, spacing)?;
        let samples = unique_coords(raw.sample_indices.iter().map(|&i| raw.path[i]));
        return Ok(Plan {
            path: raw.path,
            samples,
            segments: raw.segments,
            cell_order: raw.cell_order,
            spacing,
            cell_count: raw.cell_count,
            preprocess: None,
        });
    }

    let pre = preprocess::remove_thin_obstacles(grid, spacing)?;
    let raw = plan_raw(&pre.planning_grid, start, spacing)?;
    let corrected = preprocess::correct_path(&raw.path, grid)?;

    let samples = unique_coords(
        raw.sample_indices
            .iter()
            .filter_map(|&i| corrected.relocate(i, raw.path[i])),
    );
    let segments = raw
        .segments
        .iter()
        .map(|s| Segment {
            cell: s.cell,
            start: corrected.map_index(s.start),
            end: corrected.map_index(s.end),
        })
        .collect();
    let report = PreprocessReport {
        removed_component_count: pre.removed_component_count,
        removed_area: pre.removed_mask.count_set(),
        detours: corrected.detours.len(),
        skipped_runs: corrected.skipped_runs,
        truncated: corrected.truncated,
        planned_length: search::path_length(&raw.path),
    };
    Ok(Plan {
        path: corrected.path,
        samples,
        segments,
        cell_order: raw.cell_order,
        spacing,
        cell_count: raw.cell_count,
        preprocess: Some(report),
    })
}

/// Plans coverage of the environment's obstacle map.
pub fn plan(env: &EnvironmentBundle, config: &PlanConfig) -> Result<Plan> {
    plan_grid(&env.obstacle_map, config)
}

/// Lawnmower rastering of the whole map as a single region, without
/// decomposition: run down (or up) until blocked, shift right by `spacing`
/// along the current row, reverse. Stops when a shift is blocked.
pub fn naive_raster(grid: &OccupancyGrid, spacing: usize) -> Result<Vec<Coord>> {
    if spacing == 0 {
        return Err(Error::param("spacing", "must be at least 1"));
    }
    let start = auto_start(grid)?;
    let mut path = vec![start];
    let mut down = true;
    loop {
        let mut here = *path.last().unwrap();
        loop {
            let next = if down {
                Coord::new(here.x, here.y + 1)
            } else if here.y > 0 {
                Coord::new(here.x, here.y - 1)
            } else {
                break;
            };
            if grid.get(next) {
                break;
            }
            path.push(next);
            here = next;
        }
        let mut shifted = 0;
        while shifted < spacing && grid.is_free(Coord::new(here.x + 1, here.y)) {
            here = Coord::new(here.x + 1, here.y);
            path.push(here);
            shifted += 1;
        }
        if shifted == 0 {
            return Ok(path);
        }
        down = !down;
    }
}
