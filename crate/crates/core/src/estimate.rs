//! Distribution reconstruction from point samples.
//!
//! Samples are Delaunay-triangulated; grid points inside a triangle get the
//! barycentric blend of its corners, and everything outside the hull takes
//! the value of the nearest sample. Grid points are treated as the integer
//! coordinates themselves, so containment tests are exact.

use std::collections::HashSet;

use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::grid::{Coord, Dims, ScalarField};

/// Exact measurements at distinct locations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    coords: Vec<Coord>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(coords: Vec<Coord>, values: Vec<f64>) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(Error::param("samples", "coordinate and value counts differ"));
        }
        let mut seen = HashSet::with_capacity(coords.len());
        if let Some(c) = coords.iter().find(|c| !seen.insert(**c)) {
            return Err(Error::param("samples", format!("duplicate coordinate {c}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("samples", "values must be finite"));
        }
        Ok(SampleSet { coords, values })
    }

    /// Reads `truth` at each coordinate; repeated coordinates keep their
    /// first occurrence.
    pub fn measure(truth: &ScalarField, coords: &[Coord]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(coords.len());
        let mut kept = Vec::with_capacity(coords.len());
        for &c in coords {
            truth.dims().check(c)?;
            if seen.insert(c) {
                kept.push(c);
            }
        }
        let values = kept.iter().map(|&c| truth.get(c)).collect();
        Ok(SampleSet { coords: kept, values })
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Delaunay triangles as index triples into `coords`, or `None` when fewer
/// than three points are given or they are all collinear.
///
/// Points are inserted in lexicographic `(x, y)` order so co-circular ties
/// always resolve the same way.
pub fn triangulate(coords: &[Coord]) -> Option<Vec<[usize; 3]>> {
    if coords.len() < 3 {
        return None;
    }
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by_key(|&i| (coords[i].x, coords[i].y));
    let mut tri: DelaunayTriangulation<Vertex> = DelaunayTriangulation::new();
    for i in order {
        let c = coords[i];
        tri.insert(Vertex {
            position: Point2::new(c.x as f64, c.y as f64),
            index: i,
        })
        .expect("grid coordinates are finite");
    }
    let triangles: Vec<[usize; 3]> = tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.data().index))
        .collect();
    (!triangles.is_empty()).then_some(triangles)
}

/// Twice the signed area of `(a, b, c)`.
fn orient(a: Coord, b: Coord, c: Coord) -> i64 {
    let (ax, ay) = (a.x as i64, a.y as i64);
    let (bx, by) = (b.x as i64, b.y as i64);
    let (cx, cy) = (c.x as i64, c.y as i64);
    (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
}

/// How a grid point's estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    /// The point was sampled.
    Sample,
    /// Barycentric blend inside the sample hull.
    InteriorLinear,
    /// Nearest sample, outside the hull.
    ExteriorNearest,
    /// Nearest sample because no triangulation exists.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedField {
    pub field: ScalarField,
    pub methods: Vec<EstimateMethod>,
}

impl EstimatedField {
    pub fn method(&self, c: Coord) -> EstimateMethod {
        self.methods[self.field.dims().index(c)]
    }
}

/// Reconstructs a full field over `dims` from `samples`.
pub fn interpolate(samples: &SampleSet, dims: Dims) -> Result<EstimatedField> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    for &c in samples.coords() {
        dims.check(c)?;
    }
    let coords = samples.coords();
    let values = samples.values();
    let mut out = vec![f64::NAN; dims.len()];
    let mut methods = vec![EstimateMethod::Fallback; dims.len()];
    let mut assigned = vec![false; dims.len()];

    let triangles = triangulate(coords);
    if let Some(triangles) = &triangles {
        for t in triangles {
            let [a, b, c] = t.map(|i| coords[i]);
            let area = orient(a, b, c);
            if area == 0 {
                continue;
            }
            let x0 = a.x.min(b.x).min(c.x);
            let x1 = a.x.max(b.x).max(c.x);
            let y0 = a.y.min(b.y).min(c.y);
            let y1 = a.y.max(b.y).max(c.y);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = Coord::new(x, y);
                    let i = dims.index(p);
                    if assigned[i] {
                        continue;
                    }
                    let wa = orient(p, b, c);
                    let wb = orient(a, p, c);
                    let wc = orient(a, b, p);
                    let inside = if area > 0 {
                        wa >= 0 && wb >= 0 && wc >= 0
                    } else {
                        wa <= 0 && wb <= 0 && wc <= 0
                    };
                    if !inside {
                        continue;
                    }
                    let [va, vb, vc] = t.map(|k| values[k]);
                    out[i] = (wa as f64 * va + wb as f64 * vb + wc as f64 * vc) / area as f64;
                    methods[i] = EstimateMethod::InteriorLinear;
                    assigned[i] = true;
                }
            }
        }
    }

    let mut by_scan: Vec<usize> = (0..coords.len()).collect();
    by_scan.sort_by_key(|&k| coords[k].scan_key());
    let outside = if triangles.is_some() {
        EstimateMethod::ExteriorNearest
    } else {
        EstimateMethod::Fallback
    };
    for i in 0..dims.len() {
        if assigned[i] {
            continue;
        }
        let p = dims.coord(i);
        let mut best = by_scan[0];
        let mut best_d = coords[best].distance_sq(p);
        for &k in &by_scan[1..] {
            let d = coords[k].distance_sq(p);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        out[i] = values[best];
        methods[i] = outside;
    }

    for (&c, &v) in coords.iter().zip(values) {
        let i = dims.index(c);
        out[i] = v;
        methods[i] = EstimateMethod::Sample;
    }

    Ok(EstimatedField {
        field: ScalarField::new(dims.width, dims.height, out)?,
        methods,
    })
}
