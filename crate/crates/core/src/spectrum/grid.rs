use std::collections::HashMap;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_eps, default_eps, label, margin, Label};
use crate::error::{Error, Result};
use crate::operator::ShiftModel;
use crate::radii::RadiiEvaluator;

pub const MAX_RESOLUTION: usize = 4096;
pub const MAX_DEPTH: u32 = 8;
pub const DEFAULT_MAX_CELLS: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Outside,
    Boundary,
    Inside,
}

impl CellClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CellClass::Outside => "outside",
            CellClass::Boundary => "boundary",
            CellClass::Inside => "inside",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "outside" => Some(CellClass::Outside),
            "boundary" => Some(CellClass::Boundary),
            "inside" => Some(CellClass::Inside),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanParams {
    /// `[x0, x1, y0, y1]`; `None` selects [`default_box`].
    pub bbox: Option<[f64; 4]>,
    pub nx: usize,
    pub ny: usize,
    pub max_depth: u32,
    pub k_max: usize,
    pub eps: f64,
    /// Cap on the total number of cells visited, base cells included.
    pub max_cells: usize,
}

impl ScanParams {
    pub fn new(nx: usize, ny: usize, max_depth: u32, k_max: usize) -> Self {
        Self {
            bbox: None,
            nx,
            ny,
            max_depth,
            k_max,
            eps: default_eps(k_max),
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn with_box(mut self, bbox: [f64; 4]) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_max_cells(mut self, max_cells: usize) -> Self {
        self.max_cells = max_cells;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n == 0 || n > MAX_RESOLUTION {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [1, {MAX_RESOLUTION}], got {n}"
                )));
            }
        }
        if self.max_depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "max_depth must be <= {MAX_DEPTH}, got {}",
                self.max_depth
            )));
        }
        check_eps(self.eps)?;
        if let Some(b) = self.bbox {
            check_box(b)?;
        }
        Ok(())
    }
}

fn check_box(b: [f64; 4]) -> Result<()> {
    if b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3] {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "box must satisfy x0 < x1 and y0 < y1, got {b:?}"
        )))
    }
}

/// Leaf cell. `(ix, iy)` is its lower-left corner on the finest lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub ix: u32,
    pub iy: u32,
    pub depth: u32,
    pub class: CellClass,
    /// Radii at the cell centre, taken from the component that is deepest
    /// inside there.
    pub r_plus: f64,
    pub r_minus: Option<f64>,
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct CornerEval {
    pub u: f64,
    /// `None` when the component's shift is not invertible.
    pub v: Option<f64>,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionGrid {
    bbox: [f64; 4],
    nx: usize,
    ny: usize,
    max_depth: u32,
    k_max: usize,
    eps: f64,
    step: usize,
    components: usize,
    cells: Vec<Cell>,
    corner_index: HashMap<(u32, u32), usize>,
    /// `components` entries per lattice point.
    corner_data: Vec<CornerEval>,
}

impl RegionGrid {
    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of residue components scanned (1 for a 1-shift).
    pub fn components(&self) -> usize {
        self.components
    }

    /// Leaves, ordered row-major by base cell and then in Z order inside it.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Finest lattice dimensions `(nx·2^D, ny·2^D)`.
    pub fn lattice_size(&self) -> (u32, u32) {
        let s = 1u32 << self.max_depth;
        (self.nx as u32 * s, self.ny as u32 * s)
    }

    pub fn span(&self, depth: u32) -> u32 {
        1 << (self.max_depth - depth)
    }

    pub fn lattice_point(&self, ix: u32, iy: u32) -> Complex64 {
        let (nx, ny) = self.lattice_size();
        lattice_point(self.bbox, nx, ny, ix as f64, iy as f64)
    }

    pub fn cell_center(&self, cell: &Cell) -> Complex64 {
        let (nx, ny) = self.lattice_size();
        let h = self.span(cell.depth) as f64 / 2.0;
        lattice_point(self.bbox, nx, ny, cell.ix as f64 + h, cell.iy as f64 + h)
    }

    pub fn cell_width(&self, depth: u32) -> f64 {
        (self.bbox[1] - self.bbox[0]) / self.nx as f64 / (1u32 << depth) as f64
    }

    pub fn cell_height(&self, depth: u32) -> f64 {
        (self.bbox[3] - self.bbox[2]) / self.ny as f64 / (1u32 << depth) as f64
    }

    pub fn cell_diagonal(&self, depth: u32) -> f64 {
        self.cell_width(depth).hypot(self.cell_height(depth))
    }

    pub fn finest_diagonal(&self) -> f64 {
        self.cell_diagonal(self.max_depth)
    }

    pub fn cell_area(&self, depth: u32) -> f64 {
        self.cell_width(depth) * self.cell_height(depth)
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }

    pub fn area(&self, class: CellClass) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.class == class)
            .map(|c| self.cell_area(c.depth))
            .sum()
    }

    /// Inside area plus half the boundary area.
    pub fn area_estimate(&self) -> f64 {
        self.area(CellClass::Inside) + 0.5 * self.area(CellClass::Boundary)
    }

    /// One class per base cell, row-major from the bottom row: uniform
    /// leaves keep their class, anything mixed is a boundary.
    pub fn base_classes(&self) -> Vec<CellClass> {
        let mut out: Vec<Option<CellClass>> = vec![None; self.nx * self.ny];
        for cell in &self.cells {
            let slot = &mut out[self.base_index(cell.ix, cell.iy)];
            *slot = match *slot {
                None => Some(cell.class),
                Some(c) if c == cell.class => Some(c),
                Some(_) => Some(CellClass::Boundary),
            };
        }
        out.into_iter().map(|c| c.unwrap_or(CellClass::Outside)).collect()
    }

    fn base_index(&self, ix: u32, iy: u32) -> usize {
        let d = self.max_depth;
        (iy >> d) as usize * self.nx + (ix >> d) as usize
    }

    pub(crate) fn corner(&self, ix: u32, iy: u32, component: usize) -> &CornerEval {
        let k = self.corner_index[&(ix, iy)];
        &self.corner_data[k * self.components + component]
    }
}

fn lattice_point(b: [f64; 4], nx: u32, ny: u32, ix: f64, iy: f64) -> Complex64 {
    Complex64::new(
        b[0] + (b[1] - b[0]) * ix / nx as f64,
        b[2] + (b[3] - b[2]) * iy / ny as f64,
    )
}

pub(crate) fn cell_corners(ix: u32, iy: u32, s: u32) -> [(u32, u32); 4] {
    [(ix, iy), (ix + s, iy), (ix + s, iy + s), (ix, iy + s)]
}

fn morton(x: u32, y: u32) -> u64 {
    let mut m = 0u64;
    for b in 0..16 {
        m |= (((x >> b) & 1) as u64) << (2 * b);
        m |= (((y >> b) & 1) as u64) << (2 * b + 1);
    }
    m
}

/// Centre = mean of the distinct diagonal values `c`; half-width
/// `1.1 (‖S‖ + sup |d - c|)`, or 1 when that vanishes.
pub fn default_box(model: &ShiftModel) -> [f64; 4] {
    let (c, h) = enclosure(model);
    let h = if h > 0.0 { 1.1 * h } else { 1.0 };
    [c.re - h, c.re + h, c.im - h, c.im + h]
}

/// Disk `|λ - c| ≤ r` containing the spectrum.
fn enclosure(model: &ShiftModel) -> (Complex64, f64) {
    let ds = model.diagonals().distinct_support();
    let c = ds.iter().sum::<Complex64>() / ds.len().max(1) as f64;
    let spread = ds.iter().map(|d| (d - c).norm()).fold(0.0, f64::max);
    (c, model.weight_sup() + spread)
}

fn corner_eval(eval: &RadiiEvaluator, lambda: Complex64, eps: f64) -> CornerEval {
    let (p, m) = eval.both(lambda);
    let v = eval.shift_invertible().then_some(m.value);
    CornerEval {
        u: p.value.ln(),
        v: v.map(f64::ln),
        label: label(p.value, v, eps),
    }
}

/// Adaptive scan. Base cells are classified from their corners; cells whose
/// corners disagree (for some residue component) are bisected down to
/// `max_depth`. A leaf is inside when all its corners are inside for some
/// component, boundary when some component sees mixed corners, outside
/// otherwise. Models with step `n > 1` go through [`decompose_union`].
pub fn scan(model: &ShiftModel, params: &ScanParams) -> Result<RegionGrid> {
    if model.step() > 1 {
        return decompose_union(model, params);
    }
    scan_components(model, vec![model.clone()], params)
}

/// Scan of `S_n + D` as the union over its `n` residue 1-shifts.
pub fn decompose_union(model: &ShiftModel, params: &ScanParams) -> Result<RegionGrid> {
    let parts = model.residue_submodels()?;
    scan_components(model, parts, params)
}

fn scan_components(model: &ShiftModel, parts: Vec<ShiftModel>, params: &ScanParams) -> Result<RegionGrid> {
    params.validate()?;
    let evals = parts
        .iter()
        .map(|m| RadiiEvaluator::new(m, params.k_max))
        .collect::<Result<Vec<_>>>()?;
    let bbox = params.bbox.unwrap_or_else(|| default_box(model));
    check_box(bbox)?;
    let (c, r) = enclosure(model);
    if c.re - r < bbox[0] || c.re + r > bbox[1] || c.im - r < bbox[2] || c.im + r > bbox[3] {
        warn!("scan box {bbox:?} does not contain the enclosing disk |λ - {c}| <= {r}");
    }

    let n = evals.len();
    let depth_max = params.max_depth;
    let mut grid = RegionGrid {
        bbox,
        nx: params.nx,
        ny: params.ny,
        max_depth: depth_max,
        k_max: params.k_max,
        eps: params.eps,
        step: model.step(),
        components: n,
        cells: Vec::new(),
        corner_index: HashMap::new(),
        corner_data: Vec::new(),
    };
    let (lx, ly) = grid.lattice_size();
    let s0 = 1u32 << depth_max;

    let mut active: Vec<(u32, u32)> = (0..params.ny as u32)
        .flat_map(|j| (0..params.nx as u32).map(move |i| (i * s0, j * s0)))
        .collect();
    let mut visited = active.len();
    if visited > params.max_cells {
        return Err(Error::BudgetExceeded {
            cells: visited,
            cap: params.max_cells,
        });
    }
    let mut leaves: Vec<(u32, u32, u32, CellClass)> = Vec::new();

    for depth in 0..=depth_max {
        let s = grid.span(depth);
        let mut need: Vec<(u32, u32)> = active
            .iter()
            .flat_map(|&(ix, iy)| cell_corners(ix, iy, s))
            .filter(|k| !grid.corner_index.contains_key(k))
            .collect();
        need.sort_unstable();
        need.dedup();
        let fresh: Vec<Vec<CornerEval>> = need
            .par_iter()
            .map(|&(ix, iy)| {
                let lam = lattice_point(bbox, lx, ly, ix as f64, iy as f64);
                evals.iter().map(|e| corner_eval(e, lam, params.eps)).collect()
            })
            .collect();
        for (key, evs) in need.into_iter().zip(fresh) {
            grid.corner_index.insert(key, grid.corner_data.len() / n);
            grid.corner_data.extend(evs);
        }

        let mut next = Vec::new();
        for (ix, iy) in active {
            let corners = cell_corners(ix, iy, s);
            let mut inside = false;
            let mut mixed = false;
            for j in 0..n {
                let labels = corners.map(|(x, y)| grid.corner(x, y, j).label);
                if labels.iter().all(|l| *l == labels[0]) {
                    inside |= labels[0] == Label::Inside;
                } else {
                    mixed = true;
                }
            }
            if mixed && !inside && depth < depth_max {
                let h = s / 2;
                next.extend([(ix, iy), (ix + h, iy), (ix, iy + h), (ix + h, iy + h)]);
            } else {
                let class = if inside {
                    CellClass::Inside
                } else if mixed {
                    CellClass::Boundary
                } else {
                    CellClass::Outside
                };
                leaves.push((ix, iy, depth, class));
            }
        }
        visited += next.len();
        if visited > params.max_cells {
            return Err(Error::BudgetExceeded {
                cells: visited,
                cap: params.max_cells,
            });
        }
        active = next;
    }

    let mask = s0 - 1;
    leaves.sort_unstable_by_key(|&(ix, iy, _, _)| (grid.base_index(ix, iy), morton(ix & mask, iy & mask)));
    let cells: Vec<Cell> = leaves
        .par_iter()
        .map(|&(ix, iy, depth, class)| {
            let h = (1u32 << (depth_max - depth)) as f64 / 2.0;
            let lam = lattice_point(bbox, lx, ly, ix as f64 + h, iy as f64 + h);
            let mut best: Option<(f64, f64, Option<f64>)> = None;
            for e in &evals {
                let (p, m) = e.both(lam);
                let rm = e.shift_invertible().then_some(m.value);
                let depth_in = rm.map_or(p.value, |m| m.min(p.value));
                if best.is_none_or(|(b, _, _)| depth_in > b) {
                    best = Some((depth_in, p.value, rm));
                }
            }
            let (_, r_plus, r_minus) = best.expect("at least one component");
            Cell {
                ix,
                iy,
                depth,
                class,
                r_plus,
                r_minus,
                margin: margin(r_plus, r_minus),
            }
        })
        .collect();
    grid.cells = cells;
    Ok(grid)
}
