use boustro::decompose::{decompose, slice_free_intervals};
use boustro::env_gen::{generate_environment, EnvGenParams};
use boustro::grid::{reachable_from, BinaryGrid, Coord, Dims};
use boustro::raster::{naive_raster, plan_grid, PlanConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spiral() -> BinaryGrid {
    BinaryGrid::from_ascii(include_str!("fixtures/spiral.txt")).unwrap()
}

fn random_map(seed: u64, w: usize, h: usize) -> BinaryGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.gen_range(0.05..0.45);
    BinaryGrid::from_fn(Dims::new(w, h).unwrap(), |_| rng.gen_bool(p))
}

/// Counts how many cells claim each coordinate and checks the count is one
/// on free space and zero on obstacles.
fn assert_partition(grid: &BinaryGrid) {
    let cells = decompose(grid);
    let dims = grid.dims();
    let mut hits = vec![0usize; dims.len()];
    for cell in &cells.cells {
        for x in cell.columns() {
            for y in cell.ceiling_at(x)..=cell.floor_at(x) {
                hits[dims.index(Coord::new(x, y))] += 1;
            }
        }
    }
    for c in dims.coords() {
        let want = usize::from(grid.is_free(c));
        assert_eq!(hits[dims.index(c)], want, "{c} in\n{}", grid.to_ascii());
    }
}

/// Each cell's column slice must be one free interval with obstacles or
/// the border directly above and below.
fn assert_cells_are_maximal_slices(grid: &BinaryGrid) {
    for cell in &decompose(grid).cells {
        for x in cell.columns() {
            let (top, bottom) = (cell.ceiling_at(x), cell.floor_at(x));
            let intervals = slice_free_intervals(grid, x).unwrap();
            assert!(
                intervals.iter().any(|iv| iv.top == top && iv.bottom == bottom),
                "cell {} column {x} rows {top}..={bottom}",
                cell.id
            );
        }
    }
}

#[test]
fn random_maps_partition_free_space() {
    for seed in 0..200 {
        let grid = random_map(seed, 20, 20);
        assert_partition(&grid);
        assert_cells_are_maximal_slices(&grid);
    }
}

#[test]
fn generated_maps_partition_free_space() {
    for seed in 0..40 {
        let params = EnvGenParams::square(20, 0.3, 0.1, seed).with_obstacles(0.2, if seed % 2 == 0 { 0.1 } else { 0.75 });
        let env = generate_environment(&params).unwrap();
        assert_partition(&env.obstacle_map);
    }
}

#[test]
fn obstacle_free_and_blocked_extremes() {
    let empty = BinaryGrid::empty(13, 7).unwrap();
    assert_eq!(decompose(&empty).len(), 1);
    let full = BinaryGrid::from_fn(Dims::new(4, 4).unwrap(), |_| true);
    assert_eq!(decompose(&full).len(), 0);
}

#[test]
fn centered_rectangle_gives_four_cells() {
    for (w, h, x0, x1, y0, y1) in [(9, 9, 3, 5, 3, 5), (20, 12, 6, 12, 4, 7), (30, 30, 10, 19, 12, 17)] {
        let grid = BinaryGrid::from_fn(Dims::new(w, h).unwrap(), |c| (x0..=x1).contains(&c.x) && (y0..=y1).contains(&c.y));
        let cells = decompose(&grid);
        assert_eq!(cells.len(), 4, "{w}x{h}");
        assert_partition(&grid);
    }
}

#[test]
fn spiral_is_covered_only_with_decomposition() {
    let grid = spiral();
    let free = grid.count_clear();
    assert_eq!(reachable_from(&grid, Coord::new(0, 0)).count_set(), free);

    let plan = plan_grid(&grid, &PlanConfig::new(1)).unwrap();
    let visited: std::collections::HashSet<Coord> = plan.path.iter().copied().collect();
    assert!(grid.clear_coords().all(|c| visited.contains(&c)));
    assert_eq!(plan.samples.len(), free);

    let naive: std::collections::HashSet<Coord> = naive_raster(&grid, 1).unwrap().into_iter().collect();
    assert!(naive.len() < free / 2, "naive covered {} of {free}", naive.len());
}
