//! Thin-obstacle preprocessing.
//!
//! Obstacles narrower than the path width are erased before decomposition
//! so they do not shatter the free space into slivers. The planned route is
//! afterwards replayed against the real map, and every stretch that runs
//! through an erased obstacle is replaced by a shortest detour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{connected_components, BinaryGrid, Connectivity, Coord, OccupancyGrid};
use crate::search::shortest_path;

/// Smaller side of the component's bounding box.
pub fn obstacle_width(component: &[Coord]) -> usize {
    assert!(!component.is_empty(), "component must be nonempty");
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    for c in component {
        x0 = x0.min(c.x);
        x1 = x1.max(c.x);
        y0 = y0.min(c.y);
        y1 = y1.max(c.y);
    }
    (x1 - x0 + 1).min(y1 - y0 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessResult {
    /// The input map with thin obstacles erased.
    pub planning_grid: OccupancyGrid,
    /// Exactly the erased obstacle cells.
    pub removed_mask: BinaryGrid,
    pub removed_component_count: usize,
}

/// Erases every 8-connected obstacle component whose
/// [`obstacle_width`] is below `path_width`.
pub fn remove_thin_obstacles(grid: &OccupancyGrid, path_width: usize) -> Result<PreprocessResult> {
    if path_width == 0 {
        return Err(Error::param("path_width", "must be at least 1"));
    }
    let labels = connected_components(grid, Connectivity::Eight);
    let mut planning_grid = grid.clone();
    let mut removed_mask = BinaryGrid::from_fn(grid.dims(), |_| false);
    let mut removed_component_count = 0;
    for component in labels.components() {
        if obstacle_width(&component) < path_width {
            removed_component_count += 1;
            for c in component {
                planning_grid.set(c, false);
                removed_mask.set(c, true);
            }
        }
    }
    Ok(PreprocessResult {
        planning_grid,
        removed_mask,
        removed_component_count,
    })
}

/// One replaced stretch of the raw path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detour {
    /// Raw indices `first..=last` that were replaced; includes any legal
    /// coordinates skipped because they could not be reached.
    pub raw: (usize, usize),
    /// Corrected indices `first..=last`, endpoints included.
    pub span: (usize, usize),
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedPath {
    pub path: Vec<Coord>,
    /// Corrected index for each raw coordinate that was kept.
    pub index_map: Vec<Option<usize>>,
    pub detours: Vec<Detour>,
    /// Detours that had to skip ahead past unreachable legal coordinates.
    pub skipped_runs: usize,
    /// True when a trailing run could not be rejoined and was cut off.
    pub truncated: bool,
}

impl CorrectedPath {
    /// Corrected index of the first kept raw coordinate at or after `raw`,
    /// falling back to the end of the path.
    pub fn map_index(&self, raw: usize) -> usize {
        self.index_map[raw.min(self.index_map.len() - 1)..]
            .iter()
            .find_map(|&i| i)
            .unwrap_or(self.path.len() - 1)
    }

    /// Where a sample planned at raw index `raw` (coordinate `at`) ends up:
    /// unchanged if the coordinate was kept, the closest coordinate of the
    /// covering detour if it fell on an erased obstacle, or `None` if it was
    /// skipped.
    pub fn relocate(&self, raw: usize, at: Coord) -> Option<Coord> {
        if let Some(i) = self.index_map[raw] {
            return Some(self.path[i]);
        }
        let detour = self.detours.iter().find(|d| (d.raw.0..=d.raw.1).contains(&raw))?;
        if detour.skipped {
            return None;
        }
        self.path[detour.span.0..=detour.span.1]
            .iter()
            .copied()
            .min_by_key(|c| c.distance_sq(at))
    }
}

/// Replaces every run of `raw_path` that crosses an obstacle of
/// `original` with a shortest detour on `original` from the last legal
/// coordinate before the run to the first reachable legal one after it.
pub fn correct_path(raw_path: &[Coord], original: &OccupancyGrid) -> Result<CorrectedPath> {
    let mut path: Vec<Coord> = Vec::with_capacity(raw_path.len());
    let mut index_map = vec![None; raw_path.len()];
    let mut detours = Vec::new();
    let mut skipped_runs = 0;
    let mut truncated = false;

    let mut i = 0;
    while i < raw_path.len() {
        let c = raw_path[i];
        original.dims().check(c)?;
        if original.is_free(c) {
            // Raw steps are king moves, and every detour rejoins at a raw
            // coordinate, so legal coordinates always extend the path.
            path.push(c);
            index_map[i] = Some(path.len() - 1);
            i += 1;
            continue;
        }

        let run_start = i;
        while i < raw_path.len() && original.get(raw_path[i]) {
            i += 1;
        }
        let Some(&from) = path.last() else {
            // Nothing legal yet to detour from.
            continue;
        };
        let mut joined = false;
        let mut j = i;
        while j < raw_path.len() {
            if original.is_free(raw_path[j]) {
                if let Some(route) = shortest_path(original, from, raw_path[j], Connectivity::Eight)? {
                    let span_start = path.len() - 1;
                    path.extend_from_slice(&route.coords[1..]);
                    index_map[j] = Some(path.len() - 1);
                    let skipped = j != i;
                    skipped_runs += skipped as usize;
                    detours.push(Detour {
                        raw: (run_start, j - 1),
                        span: (span_start, path.len() - 1),
                        skipped,
                    });
                    joined = true;
                    break;
                }
            }
            j += 1;
        }
        if !joined {
            truncated = true;
            detours.push(Detour {
                raw: (run_start, raw_path.len() - 1),
                span: (path.len() - 1, path.len() - 1),
                skipped: true,
            });
            break;
        }
        i = j + 1;
    }

    Ok(CorrectedPath {
        path,
        index_map,
        detours,
        skipped_runs,
        truncated,
    })
}

/// Summary of preprocessing carried in a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub removed_component_count: usize,
    pub removed_area: usize,
    pub detours: usize,
    pub skipped_runs: usize,
    pub truncated: bool,
    /// Length of the route on the preprocessed map, before detours.
    pub planned_length: f64,
}
