//! Renderers for scan grids, boundaries and eigenvalue lists. Everything is
//! rendered to bytes first so that a failed job writes nothing.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::extreal::{format_text, parse_text};
use crate::spectrum::{BoundaryPolyline, CellClass, RegionGrid};

pub const CSV_HEADER: &str = "re,im,class,r_plus,r_minus,margin";

/// One leaf per row in grid order, sampled at the cell centre. `r_minus` is
/// empty when `S` is not invertible.
pub fn grid_csv(grid: &RegionGrid) -> String {
    let mut out = String::with_capacity(96 * (grid.cells().len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for cell in grid.cells() {
        let z = grid.cell_center(cell);
        let rm = cell.r_minus.map(format_text).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_text(z.re),
            format_text(z.im),
            cell.class.as_str(),
            format_text(cell.r_plus),
            rm,
            format_text(cell.margin)
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub re: f64,
    pub im: f64,
    pub class: CellClass,
    pub r_plus: f64,
    pub r_minus: Option<f64>,
    pub margin: f64,
}

pub fn read_grid_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected CSV header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("line {}: expected 6 fields, got {}", n + 2, f.len()));
            }
            let num = |s: &str| parse_text(s).ok_or_else(|| format!("line {}: bad number {s:?}", n + 2));
            Ok(CsvRow {
                re: num(f[0])?,
                im: num(f[1])?,
                class: CellClass::parse(f[2]).ok_or_else(|| format!("line {}: bad class {:?}", n + 2, f[2]))?,
                r_plus: num(f[3])?,
                r_minus: if f[4].is_empty() { None } else { Some(num(f[4])?) },
                margin: num(f[5])?,
            })
        })
        .collect()
}

fn ext(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format_text(v))
    }
}

pub fn grid_json(grid: &RegionGrid) -> String {
    let cells: Vec<Value> = grid
        .cells()
        .iter()
        .map(|c| {
            let z = grid.cell_center(c);
            json!({
                "re": z.re,
                "im": z.im,
                "depth": c.depth,
                "class": c.class,
                "r_plus": ext(c.r_plus),
                "r_minus": c.r_minus.map(ext),
                "margin": ext(c.margin),
            })
        })
        .collect();
    let doc = json!({
        "box": grid.bbox(),
        "nx": grid.nx(),
        "ny": grid.ny(),
        "max_depth": grid.max_depth(),
        "k_max": grid.k_max(),
        "eps": grid.eps(),
        "step": grid.step(),
        "counts": {
            "inside": grid.count(CellClass::Inside),
            "boundary": grid.count(CellClass::Boundary),
            "outside": grid.count(CellClass::Outside),
        },
        "area_estimate": grid.area_estimate(),
        "cells": cells,
    });
    to_json(&doc)
}

/// Binary greymap at base resolution, top row = largest imaginary part.
pub fn grid_pgm(grid: &RegionGrid) -> Vec<u8> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let classes = grid.base_classes();
    let mut out = format!("P5 {nx} {ny} 255\n").into_bytes();
    for row in (0..ny).rev() {
        out.extend(classes[row * nx..(row + 1) * nx].iter().map(|c| match c {
            CellClass::Outside => 0u8,
            CellClass::Boundary => 128,
            CellClass::Inside => 255,
        }));
    }
    out
}

pub fn boundary_json(b: &BoundaryPolyline) -> String {
    to_json(b)
}

pub fn boundary_csv(b: &BoundaryPolyline) -> String {
    let mut out = String::from("component,closed,re,im\n");
    for (k, comp) in b.components.iter().enumerate() {
        for v in &comp.vertices {
            out.push_str(&format!("{k},{},{},{}\n", comp.closed, format_text(v.re), format_text(v.im)));
        }
    }
    out
}

pub fn eigen_csv(eig: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for z in eig {
        out.push_str(&format!("{},{}\n", format_text(z.re), format_text(z.im)));
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}
