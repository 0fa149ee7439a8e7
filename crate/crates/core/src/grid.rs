//! Grid types shared by every planner stage.
//!
//! Coordinates put the origin at the top-left corner: `x` is the column and
//! `y` is the row, so "north" means `y - 1`. All grids are stored row-major.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid location; `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Coord {
    pub x: usize,
    pub y: usize,
}

impl Coord {
    pub const fn new(x: usize, y: usize) -> Self {
        Coord { x, y }
    }

    /// Chebyshev (king-move) distance.
    pub fn chebyshev(self, other: Coord) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn distance_sq(self, other: Coord) -> usize {
        let dx = self.x.abs_diff(other.x);
        let dy = self.y.abs_diff(other.y);
        dx * dx + dy * dy
    }

    /// True when `other` is one king move away.
    pub fn is_adjacent(self, other: Coord) -> bool {
        self.chebyshev(other) == 1
    }

    /// Row-major ordering key.
    pub fn scan_key(self) -> (usize, usize) {
        (self.y, self.x)
    }
}

impl From<[usize; 2]> for Coord {
    fn from([x, y]: [usize; 2]) -> Self {
        Coord { x, y }
    }
}

impl From<Coord> for [usize; 2] {
    fn from(c: Coord) -> Self {
        [c.x, c.y]
    }
}

impl From<(usize, usize)> for Coord {
    fn from((x, y): (usize, usize)) -> Self {
        Coord { x, y }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Width and height of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Dims { width, height })
    }

    pub fn len(self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn contains(self, c: Coord) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn index(self, c: Coord) -> usize {
        c.y * self.width + c.x
    }

    pub fn coord(self, index: usize) -> Coord {
        Coord::new(index % self.width, index / self.width)
    }

    pub fn check(self, c: Coord) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                coord: c,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// All coordinates in row-major order.
    pub fn coords(self) -> impl Iterator<Item = Coord> {
        let w = self.width;
        (0..self.len()).map(move |i| Coord::new(i % w, i / w))
    }

    fn as_tuple(self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn ensure_same(self, other: Dims) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.as_tuple(),
                found: other.as_tuple(),
            })
        }
    }
}

/// Which neighbours count as adjacent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_count(n: u8) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::param("connectivity", format!("expected 4 or 8, got {n}"))),
        }
    }

    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &OFFSETS[..4],
            Connectivity::Eight => &OFFSETS,
        }
    }
}

// N, E, S, W, NE, SE, SW, NW
const OFFSETS: [(isize, isize); 8] = [
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, 0),
    (1, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
];

#[inline]
pub(crate) fn offset(dims: Dims, c: Coord, (dx, dy): (isize, isize)) -> Option<Coord> {
    let x = c.x.checked_add_signed(dx)?;
    let y = c.y.checked_add_signed(dy)?;
    let n = Coord::new(x, y);
    dims.contains(n).then_some(n)
}

/// In-bounds neighbours of `c` in the order N, E, S, W, then NE, SE, SW, NW.
pub fn neighbors(dims: Dims, c: Coord, connectivity: Connectivity) -> Result<Vec<Coord>> {
    dims.check(c)?;
    Ok(connectivity
        .offsets()
        .iter()
        .filter_map(|&d| offset(dims, c, d))
        .collect())
}

/// A binary grid. As an occupancy grid, `true` (1) is an obstacle and
/// `false` (0) is traversable; as a mask, `true` marks membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    dims: Dims,
    cells: Vec<bool>,
}

pub type OccupancyGrid = BinaryGrid;

impl BinaryGrid {
    /// An all-zero grid.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let dims = Dims::new(width, height)?;
        Ok(BinaryGrid {
            dims,
            cells: vec![false; dims.len()],
        })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(Coord) -> bool) -> Self {
        let cells = dims.coords().map(&mut f).collect();
        BinaryGrid { dims, cells }
    }

    pub fn from_bools(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        let dims = Dims::new(width, height)?;
        if cells.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "{width}x{height} grid needs {} cells, got {}",
                dims.len(),
                cells.len()
            )));
        }
        Ok(BinaryGrid { dims, cells })
    }

    /// Builds a grid from row-major 0/1 values; anything else is rejected.
    pub fn from_values(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        let cells = values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidGrid(format!("cell value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(width, height, cells)
    }

    /// Parses a picture such as `"..#\n.#.\n"`: `#` or `1` is set, `.` or
    /// `0` is clear. Blank lines and surrounding whitespace are ignored.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::InvalidGrid(format!("row {y} has a different width")));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    '#' | '1' => true,
                    '.' | '0' => false,
                    other => {
                        return Err(Error::InvalidGrid(format!("unexpected character {other:?}")))
                    }
                });
            }
        }
        Self::from_bools(width, height, cells)
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.dims.width + 1) * self.dims.height);
        for row in self.cells.chunks(self.dims.width) {
            out.extend(row.iter().map(|&b| if b { '#' } else { '.' }));
            out.push('\n');
        }
        out
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    /// Value at `c`; out-of-bounds coordinates read as set.
    #[inline]
    pub fn get(&self, c: Coord) -> bool {
        !self.dims.contains(c) || self.cells[self.dims.index(c)]
    }

    /// True when `c` is in bounds and clear.
    #[inline]
    pub fn is_free(&self, c: Coord) -> bool {
        !self.get(c)
    }

    pub fn set(&mut self, c: Coord, value: bool) {
        let i = self.dims.index(c);
        self.cells[i] = value;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn values(&self) -> Vec<u8> {
        self.cells.iter().map(|&b| b as u8).collect()
    }

    pub fn count_set(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn count_clear(&self) -> usize {
        self.cells.len() - self.count_set()
    }

    /// Fraction of set cells.
    pub fn density(&self) -> f64 {
        self.count_set() as f64 / self.cells.len() as f64
    }

    pub fn set_coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.dims.coords().filter(|&c| self.get(c))
    }

    pub fn clear_coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.dims.coords().filter(|&c| !self.get(c))
    }

    pub fn and_not(&self, other: &BinaryGrid) -> Result<BinaryGrid> {
        self.dims.ensure_same(other.dims)?;
        Ok(BinaryGrid {
            dims: self.dims,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a && !b).collect(),
        })
    }

    pub fn or(&self, other: &BinaryGrid) -> Result<BinaryGrid> {
        self.dims.ensure_same(other.dims)?;
        Ok(BinaryGrid {
            dims: self.dims,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect(),
        })
    }

    pub fn not(&self) -> BinaryGrid {
        BinaryGrid {
            dims: self.dims,
            cells: self.cells.iter().map(|&b| !b).collect(),
        }
    }
}

/// A real-valued grid. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: Dims,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let dims = Dims::new(width, height)?;
        if values.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "{width}x{height} field needs {} values, got {}",
                dims.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("value at index {i} is not finite")));
        }
        Ok(ScalarField { dims, values })
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        ScalarField {
            dims,
            values: vec![value; dims.len()],
        }
    }

    pub fn from_fn(dims: Dims, f: impl FnMut(Coord) -> f64) -> Self {
        ScalarField {
            dims,
            values: dims.coords().map(f).collect(),
        }
    }

    pub(crate) fn from_raw(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.len());
        ScalarField { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    #[inline]
    pub fn get(&self, c: Coord) -> f64 {
        self.values[self.dims.index(c)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            dims: self.dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Cells strictly above `level`.
    pub fn threshold(&self, level: f64) -> BinaryGrid {
        BinaryGrid {
            dims: self.dims,
            cells: self.values.iter().map(|&v| v > level).collect(),
        }
    }
}

/// Connected-component labels; 0 is background and components are numbered
/// densely from 1 in the order their first cell appears in a row-major scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    dims: Dims,
    labels: Vec<u32>,
    count: usize,
}

impl LabelGrid {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn label(&self, c: Coord) -> u32 {
        self.labels[self.dims.index(c)]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of components.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Cells of every component, indexed by `label - 1`.
    pub fn components(&self) -> Vec<Vec<Coord>> {
        let mut out = vec![Vec::new(); self.count];
        for (i, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].push(self.dims.coord(i));
            }
        }
        out
    }
}

/// Labels the set cells of `mask` by flood fill.
pub fn connected_components(mask: &BinaryGrid, connectivity: Connectivity) -> LabelGrid {
    let dims = mask.dims();
    let mut labels = vec![0u32; dims.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..dims.len() {
        if !mask.cells[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(dims.coord(start));
        while let Some(c) = queue.pop_front() {
            for &d in connectivity.offsets() {
                if let Some(n) = offset(dims, c, d) {
                    let i = dims.index(n);
                    if mask.cells[i] && labels[i] == 0 {
                        labels[i] = next;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    LabelGrid {
        dims,
        labels,
        count: next as usize,
    }
}

/// Free cells reachable from `start` by king moves.
pub fn reachable_from(grid: &OccupancyGrid, start: Coord) -> BinaryGrid {
    let dims = grid.dims();
    let mut seen = BinaryGrid::from_fn(dims, |_| false);
    if grid.get(start) {
        return seen;
    }
    seen.set(start, true);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for &d in Connectivity::Eight.offsets() {
            if let Some(n) = offset(dims, c, d) {
                if grid.is_free(n) && !seen.get(n) {
                    seen.set(n, true);
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}
