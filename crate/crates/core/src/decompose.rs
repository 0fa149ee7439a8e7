//! Boustrophedon cellular decomposition.
//!
//! The grid is swept left to right one column at a time. Each column is cut
//! into maximal free intervals, and intervals of neighbouring columns are
//! linked when they share at least one row. A cell carries on into the next
//! column only while the link is one-to-one; any change in connectivity
//! closes the cells involved and opens fresh ones:
//!
//! * IN: an interval splits around a new obstacle, or a free interval
//!   appears with no free neighbour to its left;
//! * OUT: intervals merge past the end of an obstacle, or an interval runs
//!   into an obstacle and disappears.
//!
//! Every resulting cell has exactly one free interval per column, so it can
//! be rastered with vertical strokes without touching an obstacle.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{Coord, Dims, OccupancyGrid};

/// A maximal vertical run of free cells; `top <= bottom`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeInterval {
    pub column: usize,
    pub top: usize,
    pub bottom: usize,
}

impl FreeInterval {
    pub fn len(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &FreeInterval) -> bool {
        self.top <= other.bottom && other.top <= self.bottom
    }
}

/// Maximal free intervals of `column`, top to bottom.
pub fn slice_free_intervals(grid: &OccupancyGrid, column: usize) -> Result<Vec<FreeInterval>> {
    grid.dims().check(Coord::new(column, 0))?;
    let mut out = Vec::new();
    let mut start = None;
    for y in 0..grid.height() {
        let free = grid.is_free(Coord::new(column, y));
        match (free, start) {
            (true, None) => start = Some(y),
            (false, Some(top)) => {
                out.push(FreeInterval { column, top, bottom: y - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(top) = start {
        out.push(FreeInterval {
            column,
            top,
            bottom: grid.height() - 1,
        });
    }
    Ok(out)
}

/// An obstacle-free, vertically convex region described by its per-column
/// ceiling (top free row) and floor (bottom free row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub id: usize,
    pub x_left: usize,
    pub ceiling: Vec<usize>,
    pub floor: Vec<usize>,
}

/// The four corners of a cell, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    TopLeft,
    BottomLeft,
    TopRight,
    BottomRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::TopLeft,
        Corner::BottomLeft,
        Corner::TopRight,
        Corner::BottomRight,
    ];

    pub fn is_left(self) -> bool {
        matches!(self, Corner::TopLeft | Corner::BottomLeft)
    }

    pub fn is_top(self) -> bool {
        matches!(self, Corner::TopLeft | Corner::TopRight)
    }
}

impl Cell {
    pub fn x_right(&self) -> usize {
        self.x_left + self.ceiling.len() - 1
    }

    pub fn width(&self) -> usize {
        self.ceiling.len()
    }

    pub fn columns(&self) -> std::ops::RangeInclusive<usize> {
        self.x_left..=self.x_right()
    }

    /// Top free row at column `x`.
    pub fn ceiling_at(&self, x: usize) -> usize {
        self.ceiling[x - self.x_left]
    }

    /// Bottom free row at column `x`.
    pub fn floor_at(&self, x: usize) -> usize {
        self.floor[x - self.x_left]
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.columns().contains(&c.x) && (self.ceiling_at(c.x)..=self.floor_at(c.x)).contains(&c.y)
    }

    pub fn area(&self) -> usize {
        self.ceiling.iter().zip(&self.floor).map(|(t, b)| b - t + 1).sum()
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.columns()
            .flat_map(move |x| (self.ceiling_at(x)..=self.floor_at(x)).map(move |y| Coord::new(x, y)))
    }

    pub fn corner(&self, corner: Corner) -> Coord {
        let x = if corner.is_left() { self.x_left } else { self.x_right() };
        let y = if corner.is_top() { self.ceiling_at(x) } else { self.floor_at(x) };
        Coord::new(x, y)
    }

    /// The first corner (in [`Corner::ALL`] order) located at `c`.
    pub fn corner_at(&self, c: Coord) -> Result<Corner> {
        Corner::ALL
            .into_iter()
            .find(|&k| self.corner(k) == c)
            .ok_or(Error::NotACorner { cell: self.id, coord: c })
    }

    fn push(&mut self, interval: FreeInterval) {
        debug_assert_eq!(interval.column, self.x_left + self.ceiling.len());
        self.ceiling.push(interval.top);
        self.floor.push(interval.bottom);
    }

    fn open(id: usize, interval: FreeInterval) -> Self {
        Cell {
            id,
            x_left: interval.column,
            ceiling: vec![interval.top],
            floor: vec![interval.bottom],
        }
    }
}

/// Top-left, bottom-left, top-right and bottom-right corners.
pub fn cell_corners(cell: &Cell) -> [Coord; 4] {
    Corner::ALL.map(|k| cell.corner(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    In,
    Out,
}

/// A connectivity change found while moving from `column - 1` to `column`.
/// A split into `k` intervals or a merge of `k` intervals counts as `k - 1`
/// events; an interval appearing or vanishing counts as one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepEvent {
    pub column: usize,
    pub row: usize,
    pub kind: EventKind,
}

/// Decomposition result: cells in creation order (ids equal indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    pub dims: Dims,
    pub cells: Vec<Cell>,
    pub events: Vec<SweepEvent>,
}

impl CellSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, id: usize) -> &Cell {
        &self.cells[id]
    }

    /// Cell id for every free coordinate; `None` for obstacles.
    pub fn membership(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.dims.len()];
        for cell in &self.cells {
            for c in cell.coords() {
                out[self.dims.index(c)] = Some(cell.id);
            }
        }
        out
    }

    /// Plain-text listing used for golden files:
    ///
    /// ```text
    /// cells <count> <width> <height>
    /// cell <id> <x_left> <x_right>
    /// <x> <ceiling> <floor>      (one line per column)
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "cells {} {} {}", self.cells.len(), self.dims.width, self.dims.height);
        for cell in &self.cells {
            let _ = writeln!(out, "cell {} {} {}", cell.id, cell.x_left, cell.x_right());
            for x in cell.columns() {
                let _ = writeln!(out, "{} {} {}", x, cell.ceiling_at(x), cell.floor_at(x));
            }
        }
        out
    }
}

/// Sweeps `grid` and partitions its free space into cells.
pub fn decompose(grid: &OccupancyGrid) -> CellSet {
    let dims = grid.dims();
    let mut cells: Vec<Cell> = Vec::new();
    let mut events = Vec::new();
    // (cell id, interval in the previous column), top to bottom.
    let mut open: Vec<(usize, FreeInterval)> = Vec::new();

    for x in 0..dims.width {
        let next = slice_free_intervals(grid, x).expect("column in bounds");
        let links: Vec<Vec<usize>> = open
            .iter()
            .map(|(_, p)| (0..next.len()).filter(|&j| p.overlaps(&next[j])).collect())
            .collect();
        let mut next_degree = vec![0usize; next.len()];
        for l in &links {
            for &j in l {
                next_degree[j] += 1;
            }
        }

        for (i, l) in links.iter().enumerate() {
            match l.len() {
                0 => events.push(SweepEvent { column: x, row: open[i].1.top, kind: EventKind::Out }),
                1 => {}
                _ => {
                    for pair in l.windows(2) {
                        events.push(SweepEvent {
                            column: x,
                            row: next[pair[0]].bottom + 1,
                            kind: EventKind::In,
                        });
                    }
                }
            }
        }
        for (j, &d) in next_degree.iter().enumerate() {
            match d {
                0 => events.push(SweepEvent { column: x, row: next[j].top, kind: EventKind::In }),
                1 => {}
                _ => {
                    let prevs: Vec<&FreeInterval> = open
                        .iter()
                        .zip(&links)
                        .filter(|(_, l)| l.contains(&j))
                        .map(|((_, p), _)| p)
                        .collect();
                    for pair in prevs.windows(2) {
                        events.push(SweepEvent {
                            column: x,
                            row: pair[0].bottom + 1,
                            kind: EventKind::Out,
                        });
                    }
                }
            }
        }

        let mut now_open = Vec::with_capacity(next.len());
        for (j, interval) in next.iter().enumerate() {
            let continued = (next_degree[j] == 1)
                .then(|| links.iter().position(|l| l.contains(&j)))
                .flatten()
                .filter(|&i| links[i].len() == 1);
            let id = match continued {
                Some(i) => {
                    let id = open[i].0;
                    cells[id].push(*interval);
                    id
                }
                None => {
                    let id = cells.len();
                    cells.push(Cell::open(id, *interval));
                    id
                }
            };
            now_open.push((id, *interval));
        }
        open = now_open;
    }

    CellSet { dims, cells, events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BinaryGrid;

    fn grid(s: &str) -> OccupancyGrid {
        BinaryGrid::from_ascii(s).unwrap()
    }

    #[test]
    fn full_column_is_one_interval() {
        let g = BinaryGrid::empty(1, 5).unwrap();
        let iv = slice_free_intervals(&g, 0).unwrap();
        assert_eq!(iv, vec![FreeInterval { column: 0, top: 0, bottom: 4 }]);
    }

    #[test]
    fn obstacle_splits_column() {
        let g = grid(".\n.\n#\n.\n.");
        let iv = slice_free_intervals(&g, 0).unwrap();
        assert_eq!(iv.iter().map(|i| (i.top, i.bottom)).collect::<Vec<_>>(), vec![(0, 1), (3, 4)]);
    }

    #[test]
    fn slice_column_out_of_bounds() {
        let g = BinaryGrid::empty(2, 2).unwrap();
        assert!(slice_free_intervals(&g, 2).is_err());
    }

    #[test]
    fn empty_grid_is_one_cell() {
        let g = BinaryGrid::empty(6, 4).unwrap();
        let cs = decompose(&g);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs.cells[0].area(), 24);
        assert!(cs.events.iter().all(|e| e.column == 0));
    }

    #[test]
    fn fully_blocked_grid_has_no_cells() {
        let g = BinaryGrid::empty(3, 3).unwrap().not();
        assert!(decompose(&g).is_empty());
    }

    #[test]
    fn centered_block_gives_four_cells() {
        let g = grid(
            ".........\n\
             .........\n\
             .........\n\
             ...###...\n\
             ...###...\n\
             ...###...\n\
             .........\n\
             .........\n\
             .........",
        );
        let cs = decompose(&g);
        assert_eq!(cs.len(), 4);
        let spans: Vec<_> = cs.cells.iter().map(|c| (c.x_left, c.x_right())).collect();
        assert_eq!(spans, vec![(0, 2), (3, 5), (3, 5), (6, 8)]);
        assert_eq!(cs.cells[1].ceiling, vec![0, 0, 0]);
        assert_eq!(cs.cells[1].floor, vec![2, 2, 2]);
        assert_eq!(cs.cells[2].ceiling, vec![6, 6, 6]);
        let ins = cs.events.iter().filter(|e| e.kind == EventKind::In && e.column > 0).count();
        let outs = cs.events.iter().filter(|e| e.kind == EventKind::Out).count();
        assert_eq!((ins, outs), (1, 1));
    }

    #[test]
    fn uncovered_in_event_opens_one_cell_per_new_interval() {
        // The pocket at rows 2..3 appears inside an obstacle.
        let g = grid(
            "......\n\
             .####.\n\
             .#....\n\
             .#....\n\
             .####.\n\
             ......",
        );
        let cs = decompose(&g);
        let pocket = cs.cells.iter().find(|c| c.x_left == 2 && c.ceiling[0] == 2).unwrap();
        assert_eq!(pocket.floor[0], 3);
        let at_col2: Vec<_> = cs.events.iter().filter(|e| e.column == 2).collect();
        assert_eq!(at_col2.len(), 1);
        assert_eq!(at_col2[0].kind, EventKind::In);
    }

    #[test]
    fn corners_of_rectangle() {
        let cell = Cell {
            id: 0,
            x_left: 2,
            ceiling: vec![3; 4],
            floor: vec![7; 4],
        };
        assert_eq!(
            cell_corners(&cell),
            [Coord::new(2, 3), Coord::new(2, 7), Coord::new(5, 3), Coord::new(5, 7)]
        );
        assert_eq!(cell.corner_at(Coord::new(5, 3)).unwrap(), Corner::TopRight);
        assert!(cell.corner_at(Coord::new(3, 3)).is_err());
    }

    #[test]
    fn one_column_cell_corners_share_x() {
        let cell = Cell { id: 4, x_left: 6, ceiling: vec![1], floor: vec![3] };
        let [tl, bl, tr, br] = cell_corners(&cell);
        assert!(tl.x == bl.x && bl.x == tr.x && tr.x == br.x);
        assert_eq!((tl, br), (Coord::new(6, 1), Coord::new(6, 3)));
    }

    #[test]
    fn staircase_corners_follow_boundary_arrays() {
        let g = grid(
            "#....\n\
             ##...\n\
             ###..\n\
             .....",
        );
        let cs = decompose(&g);
        let cell = cs.cells.iter().find(|c| c.x_right() == 4).unwrap();
        for (corner, c) in Corner::ALL.into_iter().zip(cell_corners(cell)) {
            let expect_y = if corner.is_top() { cell.ceiling_at(c.x) } else { cell.floor_at(c.x) };
            assert_eq!(c.y, expect_y);
            assert!(g.is_free(c));
        }
    }

    #[test]
    fn dump_format() {
        let g = grid("..\n#.");
        let text = decompose(&g).dump();
        assert_eq!(text, "cells 1 2 2\ncell 0 0 1\n0 0 0\n1 0 1\n");
    }
}
