//! Finite-section cross-checks: `N × N` truncations of `T`, their
//! eigenvalues and the smallest singular value of `A - λ`.
//!
//! Zero-boundary sections of a shift are nilpotent-like and spectrally
//! misleading; circulant sections of periodic models put every eigenvalue on
//! the spectral curve. [`compare`] reports both.

mod eigen;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eigen::eigenvalues_dense;

use crate::error::{Error, Result};
use crate::operator::ShiftModel;
use crate::sequence::lcm;
use crate::spectrum::{CellClass, RegionGrid};

/// Largest dense dimension accepted.
pub const MAX_DIMENSION: usize = 2048;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Zero,
    Circulant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedMatrix {
    pub boundary: Boundary,
    /// Operator index of the first basis vector.
    pub offset: i64,
    pub entries: DMatrix<Complex64>,
}

impl TruncatedMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `‖A*A - AA*‖_F`; zero exactly for normal matrices.
    pub fn commutator_norm(&self) -> f64 {
        let a = &self.entries;
        let ah = a.adjoint();
        (&ah * a - a * &ah).norm()
    }
}

/// Common period of weights and diagonals, if both are purely periodic.
fn joint_period(model: &ShiftModel) -> Option<usize> {
    Some(lcm(model.weights().period()?, model.diagonals().period()?))
}

/// Rows and columns cover operator indices `a .. a + N`:
/// `A[i+1][i] = w_{a+i}`, `A[i][i] = d_{a+i}`, and the circulant section
/// closes the cycle with `A[0][N-1] = w_{a+N-1}`.
pub fn truncate(model: &ShiftModel, n: usize, boundary: Boundary, offset: i64) -> Result<TruncatedMatrix> {
    model.require_unit_step()?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("truncation needs N >= 2, got {n}")));
    }
    if n > MAX_DIMENSION {
        return Err(Error::DimensionTooLarge { n, cap: MAX_DIMENSION });
    }
    if boundary == Boundary::Circulant {
        if let Some(p) = joint_period(model) {
            if !n.is_multiple_of(p) {
                return Err(Error::PeriodMismatch { n, period: p });
            }
        }
    }
    let mut a = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        let idx = offset + i as i64;
        a[(i, i)] = model.diagonals().eval(idx);
        if i + 1 < n {
            a[(i + 1, i)] = model.weights().eval(idx);
        }
    }
    if boundary == Boundary::Circulant {
        a[(0, n - 1)] = model.weights().eval(offset + n as i64 - 1);
    }
    Ok(TruncatedMatrix {
        boundary,
        offset,
        entries: a,
    })
}

/// All `N` eigenvalues, sorted by `(re, im)`.
pub fn eigenvalues(mat: &TruncatedMatrix) -> Result<Vec<Complex64>> {
    eigenvalues_dense(&mat.entries)
}

/// Smallest singular value of `A - λ` by inverse iteration on
/// `((A - λ)*(A - λ))⁻¹`; exactly 0 when the LU factorization is singular.
pub fn sigma_min(mat: &TruncatedMatrix, lambda: Complex64) -> f64 {
    let n = mat.dim();
    let b = &mat.entries - DMatrix::from_diagonal_element(n, n, lambda);
    let lu = b.clone().lu();
    let lu_h = b.adjoint().lu();
    let mut x = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(1.0, 0.25 * (i % 7) as f64));
    x /= Complex64::new(x.norm(), 0.0);
    let mut estimate = f64::INFINITY;
    for _ in 0..200 {
        let Some(y) = lu_h.solve(&x) else { return 0.0 };
        let Some(z) = lu.solve(&y) else { return 0.0 };
        // ‖B⁻*x‖² = x* (B*B)⁻¹ x
        let rq = y.norm_squared();
        let next = if rq > 0.0 { 1.0 / rq.sqrt() } else { f64::INFINITY };
        let zn = z.norm();
        if zn == 0.0 || !zn.is_finite() {
            return if zn.is_finite() { next } else { 0.0 };
        }
        x = z / Complex64::new(zn, 0.0);
        let done = (estimate - next).abs() <= 1e-13 * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaGrid {
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    /// Row-major from the bottom row, sampled at cell centres.
    pub values: Vec<f64>,
}

impl SigmaGrid {
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let b = self.bbox;
        Complex64::new(
            b[0] + (b[1] - b[0]) * (i as f64 + 0.5) / self.nx as f64,
            b[2] + (b[3] - b[2]) * (j as f64 + 0.5) / self.ny as f64,
        )
    }
}

pub fn sigma_min_grid(
    model: &ShiftModel,
    n: usize,
    boundary: Boundary,
    offset: i64,
    bbox: [f64; 4],
    nx: usize,
    ny: usize,
) -> Result<SigmaGrid> {
    let mat = truncate(model, n, boundary, offset)?;
    let mut grid = SigmaGrid {
        bbox,
        nx,
        ny,
        values: Vec::new(),
    };
    grid.values = (0..nx * ny)
        .into_par_iter()
        .map(|k| sigma_min(&mat, grid.point(k % nx, k / nx)))
        .collect();
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub n: usize,
    pub boundary: Boundary,
    pub offset: i64,
    /// Coverage radius; `None` means two base-cell diagonals.
    pub delta: Option<f64>,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            n: 128,
            boundary: Boundary::Circulant,
            offset: 0,
            delta: None,
        }
    }
}

/// Eigenvalues of the section, one block per residue component.
pub fn model_eigenvalues(model: &ShiftModel, n: usize, boundary: Boundary, offset: i64) -> Result<Vec<Complex64>> {
    let parts = model.residue_submodels()?;
    let mats = parts
        .iter()
        .map(|m| truncate(m, n, boundary, offset))
        .collect::<Result<Vec<_>>>()?;
    let blocks = mats.par_iter().map(eigenvalues).collect::<Result<Vec<_>>>()?;
    let mut all: Vec<Complex64> = blocks.into_iter().flatten().collect();
    all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n: usize,
    pub boundary: Boundary,
    pub eigenvalue_count: usize,
    /// Max over eigenvalues of the distance to the nearest inside or
    /// boundary leaf.
    #[serde(with = "crate::extreal")]
    pub max_eigenvalue_distance: f64,
    /// Same, in units of the base-cell diagonal.
    #[serde(with = "crate::extreal")]
    pub max_eigenvalue_distance_cells: f64,
    pub delta: f64,
    /// Fraction of inside/boundary leaves whose centre lies within `delta`
    /// of an eigenvalue.
    pub coverage: f64,
    /// Zero-boundary eigenvalues farther than two base cells from the scanned
    /// region: finite-section pollution, expected rather than a failure.
    pub known_discrepancies: Vec<Complex64>,
}

fn rect_distance(z: Complex64, r: [f64; 4]) -> f64 {
    let dx = (r[0] - z.re).max(z.re - r[1]).max(0.0);
    let dy = (r[2] - z.im).max(z.im - r[3]).max(0.0);
    dx.hypot(dy)
}

fn region_distance(grid: &RegionGrid, z: Complex64) -> f64 {
    grid.cells()
        .iter()
        .filter(|c| c.class != CellClass::Outside)
        .map(|c| {
            let lo = grid.lattice_point(c.ix, c.iy);
            let s = grid.span(c.depth);
            let hi = grid.lattice_point(c.ix + s, c.iy + s);
            rect_distance(z, [lo.re, hi.re, lo.im, hi.im])
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn compare(model: &ShiftModel, grid: &RegionGrid, params: &OracleParams) -> Result<CompareReport> {
    let eig = model_eigenvalues(model, params.n, params.boundary, params.offset)?;
    let cell = grid.cell_diagonal(0);
    let delta = params.delta.unwrap_or(2.0 * cell);
    let dist: Vec<f64> = eig.par_iter().map(|z| region_distance(grid, *z)).collect();
    let max_dist = dist.iter().copied().fold(0.0, f64::max);

    let region: Vec<Complex64> = grid
        .cells()
        .iter()
        .filter(|c| c.class != CellClass::Outside)
        .map(|c| grid.cell_center(c))
        .collect();
    let covered = region
        .par_iter()
        .filter(|c| eig.iter().any(|z| (*z - **c).norm() <= delta))
        .count();
    let coverage = if region.is_empty() {
        0.0
    } else {
        covered as f64 / region.len() as f64
    };

    let zero_eig = if params.boundary == Boundary::Zero {
        eig.clone()
    } else {
        model_eigenvalues(model, params.n, Boundary::Zero, params.offset)?
    };
    let known_discrepancies = zero_eig
        .into_iter()
        .filter(|z| region_distance(grid, *z) > 2.0 * cell)
        .collect();

    Ok(CompareReport {
        n: params.n,
        boundary: params.boundary,
        eigenvalue_count: eig.len(),
        max_eigenvalue_distance: max_dist,
        max_eigenvalue_distance_cells: max_dist / cell,
        delta,
        coverage,
        known_discrepancies,
    })
}
