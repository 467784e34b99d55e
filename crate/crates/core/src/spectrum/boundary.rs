use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{cell_corners, CornerEval, RegionGrid};

/// Stand-in for `±inf` log-radii when interpolating crossings.
const CLAMP: f64 = 1.0e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub closed: bool,
    pub vertices: Vec<Complex64>,
}

impl BoundaryComponent {
    fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let n = self.vertices.len();
        let wrap = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..wrap).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolyline {
    pub components: Vec<BoundaryComponent>,
}

impl BoundaryPolyline {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.components.iter().flat_map(|c| c.vertices.iter().copied())
    }

    /// Euclidean distance from `z` to the nearest polyline point.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for comp in &self.components {
            if comp.vertices.len() == 1 {
                best = best.min((z - comp.vertices[0]).norm());
            }
            for (a, b) in comp.segments() {
                best = best.min(point_segment(z, a, b));
            }
        }
        best
    }
}

fn point_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * ab.conj()).re / len2;
    (z - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Lattice edge a crossing lies on, tagged with the field it belongs to.
type EdgeKey = (usize, (u32, u32), (u32, u32));

struct Segment {
    ends: [(EdgeKey, Complex64); 2],
}

/// Marching squares on `u = ln R⁺` and `v = ln R⁻` at level 0, per residue
/// component and over every leaf.
///
/// The `u` curve is traced only in cells with some corner at `v ≥ 0` (the
/// `R⁺ = 1` curve bounds the spectrum only where `R⁻ ≥ 1`); the `v` curve only
/// in cells with a corner where both `u, v ≥ 0`. For thin spectra, where
/// `u = -v` along the curve, this traces the curve once. Components are
/// ordered by their leftmost vertex.
pub fn extract_boundary(grid: &RegionGrid) -> BoundaryPolyline {
    let mut segments = Vec::new();
    for cell in grid.cells() {
        let corners = cell_corners(cell.ix, cell.iy, grid.span(cell.depth));
        for j in 0..grid.components() {
            let ev: [&CornerEval; 4] = corners.map(|(x, y)| grid.corner(x, y, j));
            let vs = ev[0].v.map(|_| ev.map(|e| e.v.unwrap_or(f64::NEG_INFINITY)));
            let us = ev.map(|e| e.u);
            match vs {
                None => march(grid, corners, us, 2 * j, &mut segments),
                Some(vs) => {
                    if vs.iter().any(|v| *v >= 0.0) {
                        march(grid, corners, us, 2 * j, &mut segments);
                    }
                    if (0..4).any(|k| us[k] >= 0.0 && vs[k] >= 0.0) {
                        march(grid, corners, vs, 2 * j + 1, &mut segments);
                    }
                }
            }
        }
    }
    let mut components = chain(&segments);
    components.sort_by(|a, b| {
        let key = |c: &BoundaryComponent| leftmost(&c.vertices);
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    BoundaryPolyline { components }
}

fn leftmost(vs: &[Complex64]) -> (f64, f64) {
    vs.iter().fold((f64::INFINITY, f64::INFINITY), |acc, z| {
        if z.re < acc.0 || (z.re == acc.0 && z.im < acc.1) {
            (z.re, z.im)
        } else {
            acc
        }
    })
}

fn march(
    grid: &RegionGrid,
    corners: [(u32, u32); 4],
    values: [f64; 4],
    field: usize,
    out: &mut Vec<Segment>,
) {
    let vals = values.map(|v| if v.is_nan() { -CLAMP } else { v.clamp(-CLAMP, CLAMP) });
    let pos = vals.map(|v| v >= 0.0);
    if pos.iter().all(|p| *p) || pos.iter().all(|p| !*p) {
        return;
    }
    // Edge k joins corner k and corner k + 1 (bottom, right, top, left).
    let crossing = |k: usize| -> (EdgeKey, Complex64) {
        let (i, j) = (k, (k + 1) % 4);
        let (a, b, va, vb) = if corners[i] <= corners[j] {
            (corners[i], corners[j], vals[i], vals[j])
        } else {
            (corners[j], corners[i], vals[j], vals[i])
        };
        let t = va / (va - vb);
        let (za, zb) = (grid.lattice_point(a.0, a.1), grid.lattice_point(b.0, b.1));
        ((field, a, b), za + (zb - za) * t)
    };
    let cut: Vec<usize> = (0..4).filter(|&k| pos[k] != pos[(k + 1) % 4]).collect();
    if cut.len() == 2 {
        out.push(Segment {
            ends: [crossing(cut[0]), crossing(cut[1])],
        });
        return;
    }
    // Saddle: isolate the two corners whose sign differs from the centre.
    let centre = vals.iter().sum::<f64>() / 4.0 >= 0.0;
    for (k, &p) in pos.iter().enumerate() {
        if p != centre {
            out.push(Segment {
                ends: [crossing((k + 3) % 4), crossing(k)],
            });
        }
    }
}

fn chain(segments: &[Segment]) -> Vec<BoundaryComponent> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        for (key, _) in &s.ends {
            at.entry(*key).or_default().push(i);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start: usize, from_end: usize, used: &mut Vec<bool>| -> BoundaryComponent {
        used[start] = true;
        let first_key = segments[start].ends[from_end].0;
        let mut vertices = vec![segments[start].ends[from_end].1, segments[start].ends[1 - from_end].1];
        let mut key = segments[start].ends[1 - from_end].0;
        let mut closed = false;
        while let Some(&next) = at[&key].iter().find(|&&s| !used[s]) {
            used[next] = true;
            let e = if segments[next].ends[0].0 == key { 1 } else { 0 };
            let (k, z) = segments[next].ends[e];
            if k == first_key {
                closed = true;
                break;
            }
            vertices.push(z);
            key = k;
        }
        BoundaryComponent { closed, vertices }
    };

    for i in 0..segments.len() {
        if used[i] {
            continue;
        }
        if let Some(e) = (0..2).find(|&e| at[&segments[i].ends[e].0].len() == 1) {
            out.push(walk(i, e, &mut used));
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            out.push(walk(i, 0, &mut used));
        }
    }
    out
}
