//! Obstacle-aware shortest paths on occupancy grids.
//!
//! Moves cost 1 (cardinal) or √2 (diagonal). Costs are kept as exact
//! `(straight, diagonal)` step counts so comparisons and tie-breaks never
//! depend on floating-point summation order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::grid::{offset, Connectivity, Coord, Dims, OccupancyGrid};

/// Exact cost `straight + diagonal * √2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost {
        straight: 0,
        diagonal: 0,
    };

    pub fn new(straight: u32, diagonal: u32) -> Self {
        PathCost { straight, diagonal }
    }

    /// Cost of a single move between adjacent coordinates.
    pub fn step(a: Coord, b: Coord) -> Self {
        if a.x != b.x && a.y != b.y {
            PathCost::new(0, 1)
        } else {
            PathCost::new(1, 0)
        }
    }

    /// Cost of the cheapest unobstructed route between two coordinates.
    pub fn octile(a: Coord, b: Coord, connectivity: Connectivity) -> Self {
        let dx = a.x.abs_diff(b.x) as u32;
        let dy = a.y.abs_diff(b.y) as u32;
        match connectivity {
            Connectivity::Four => PathCost::new(dx + dy, 0),
            Connectivity::Eight => PathCost::new(dx.max(dy) - dx.min(dy), dx.min(dy)),
        }
    }

    pub fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }
}

impl Add for PathCost {
    type Output = PathCost;

    fn add(self, rhs: PathCost) -> PathCost {
        PathCost::new(self.straight + rhs.straight, self.diagonal + rhs.diagonal)
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare ds against dd·√2 without rounding; equality only when both
        // differences vanish because √2 is irrational.
        let ds = self.straight as i64 - other.straight as i64;
        let dd = other.diagonal as i64 - self.diagonal as i64;
        match (ds.signum(), dd.signum()) {
            (0, 0) => Ordering::Equal,
            (s, d) if s >= 0 && d <= 0 => Ordering::Greater,
            (s, d) if s <= 0 && d >= 0 => Ordering::Less,
            (1, 1) => (ds * ds).cmp(&(2 * dd * dd)),
            _ => (2 * dd * dd).cmp(&(ds * ds)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact cost of walking `path`; consecutive coordinates must be adjacent.
pub fn path_cost(path: &[Coord]) -> PathCost {
    path.windows(2)
        .map(|w| PathCost::step(w[0], w[1]))
        .fold(PathCost::ZERO, Add::add)
}

/// Length of `path` with unit cardinal and √2 diagonal steps.
pub fn path_length(path: &[Coord]) -> f64 {
    path_cost(path).value()
}

/// A route between two free cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    pub coords: Vec<Coord>,
    pub cost: PathCost,
}

fn check_free(grid: &OccupancyGrid, c: Coord) -> Result<()> {
    grid.dims().check(c)?;
    if grid.get(c) {
        Err(Error::Blocked(c))
    } else {
        Ok(())
    }
}

/// Cheapest route from `start` to `goal` through free cells, or `None` when
/// the goal cannot be reached. A* with the octile heuristic.
pub fn shortest_path(
    grid: &OccupancyGrid,
    start: Coord,
    goal: Coord,
    connectivity: Connectivity,
) -> Result<Option<GridPath>> {
    check_free(grid, start)?;
    check_free(grid, goal)?;
    let dims = grid.dims();
    let goal_idx = dims.index(goal);
    let mut best = vec![None::<PathCost>; dims.len()];
    let mut parent = vec![usize::MAX; dims.len()];
    let mut closed = vec![false; dims.len()];
    let mut open = BinaryHeap::new();

    let s = dims.index(start);
    best[s] = Some(PathCost::ZERO);
    open.push(Reverse((PathCost::octile(start, goal, connectivity), PathCost::ZERO, s)));

    while let Some(Reverse((_, g, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == goal_idx {
            let coords = trace(dims, &parent, s, i);
            return Ok(Some(GridPath { coords, cost: g }));
        }
        let c = dims.coord(i);
        for &d in connectivity.offsets() {
            let Some(n) = offset(dims, c, d) else { continue };
            let j = dims.index(n);
            if grid.get(n) || closed[j] {
                continue;
            }
            let ng = g + PathCost::step(c, n);
            if best[j].map_or(true, |b| ng < b) {
                best[j] = Some(ng);
                parent[j] = i;
                open.push(Reverse((ng + PathCost::octile(n, goal, connectivity), ng, j)));
            }
        }
    }
    Ok(None)
}

fn trace(dims: Dims, parent: &[usize], start: usize, mut i: usize) -> Vec<Coord> {
    let mut out = vec![dims.coord(i)];
    while i != start {
        i = parent[i];
        out.push(dims.coord(i));
    }
    out.reverse();
    out
}

/// Single-source shortest-path tree (Dijkstra) over the free cells.
#[derive(Debug, Clone)]
pub struct DistanceField {
    dims: Dims,
    source: usize,
    cost: Vec<Option<PathCost>>,
    parent: Vec<usize>,
}

impl DistanceField {
    pub fn compute(grid: &OccupancyGrid, source: Coord, connectivity: Connectivity) -> Result<Self> {
        check_free(grid, source)?;
        let dims = grid.dims();
        let mut cost = vec![None::<PathCost>; dims.len()];
        let mut parent = vec![usize::MAX; dims.len()];
        let mut done = vec![false; dims.len()];
        let mut heap = BinaryHeap::new();
        let s = dims.index(source);
        cost[s] = Some(PathCost::ZERO);
        heap.push(Reverse((PathCost::ZERO, s)));
        while let Some(Reverse((g, i))) = heap.pop() {
            if done[i] {
                continue;
            }
            done[i] = true;
            let c = dims.coord(i);
            for &d in connectivity.offsets() {
                let Some(n) = offset(dims, c, d) else { continue };
                let j = dims.index(n);
                if grid.get(n) || done[j] {
                    continue;
                }
                let ng = g + PathCost::step(c, n);
                if cost[j].map_or(true, |b| ng < b) {
                    cost[j] = Some(ng);
                    parent[j] = i;
                    heap.push(Reverse((ng, j)));
                }
            }
        }
        Ok(DistanceField {
            dims,
            source: s,
            cost,
            parent,
        })
    }

    pub fn cost(&self, c: Coord) -> Option<PathCost> {
        self.dims
            .contains(c)
            .then(|| self.cost[self.dims.index(c)])
            .flatten()
    }

    pub fn path_to(&self, goal: Coord) -> Option<Vec<Coord>> {
        self.cost(goal)?;
        Some(trace(self.dims, &self.parent, self.source, self.dims.index(goal)))
    }
}
