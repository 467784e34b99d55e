use num_complex::Complex64;
use shiftspec::cli::emit::{grid_csv, read_grid_csv};
use shiftspec::oracle::{self, Boundary};
use shiftspec::series::{self, Prechecks};
use shiftspec::spectrum::{self, CellClass, ScanParams};
use shiftspec::{RadiiEvaluator, SequenceSpec, ShiftModel};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn periodic(v: &[f64]) -> SequenceSpec {
    SequenceSpec::periodic(v.iter().map(|&x| c(x, 0.0)).collect()).unwrap()
}

/// Deterministic points spread over a disk of radius `r` around `z0`.
fn spiral(z0: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) / n as f64;
            z0 + Complex64::from_polar(r * t.sqrt(), 2.399963229728653 * k as f64)
        })
        .collect()
}

#[test]
fn zero_diagonal_spectrum_sits_in_the_radius_annulus() {
    let models = [
        ShiftModel::new(periodic(&[1.0, 4.0]), SequenceSpec::constant(0.0).unwrap(), 1).unwrap(),
        ShiftModel::new(SequenceSpec::step(1.0, 2.0).unwrap(), SequenceSpec::constant(0.0).unwrap(), 1).unwrap(),
        ShiftModel::new(periodic(&[0.5, 1.0, 3.0]), SequenceSpec::constant(0.0).unwrap(), 1).unwrap(),
    ];
    for m in &models {
        let b = m.spectral_radius_bounds(64).unwrap();
        let inner = b.inner_lower.unwrap();
        let eval = RadiiEvaluator::new(m, 64).unwrap();
        for z in spiral(c(0.0, 0.0), 1.5 * b.r_upper, 200) {
            let r = spectrum::classify(&eval, z, 1e-9);
            if r.in_spectrum {
                assert!(z.norm() <= b.r_upper * (1.0 + 1e-9), "{z} outside r(S) = {}", b.r_upper);
                assert!(z.norm() >= inner * (1.0 - 1e-9), "{z} inside inner radius {inner}");
            }
            // Rotation invariance of a zero-diagonal spectrum.
            let rot = spectrum::classify(&eval, z * Complex64::from_polar(1.0, 0.7), 1e-9);
            assert_eq!(r.in_spectrum, rot.in_spectrum, "{z}");
        }
    }
}

#[test]
fn resolvent_witnesses_off_the_spectrum() {
    let models = [
        ShiftModel::constant(2.0, 1.0).unwrap(),
        ShiftModel::new(SequenceSpec::constant(1.0).unwrap(), periodic(&[1.0, -1.0]), 1).unwrap(),
        ShiftModel::new(SequenceSpec::step(1.0, 2.0).unwrap(), SequenceSpec::constant(0.0).unwrap(), 1).unwrap(),
    ];
    for m in &models {
        let eval = RadiiEvaluator::new(m, 64).unwrap();
        let mut found = 0;
        for z in spiral(c(0.0, 0.0), 4.0, 400) {
            let r = spectrum::classify(&eval, z, 0.0);
            if r.in_spectrum || r.margin <= 0.1 {
                continue;
            }
            let pre = Prechecks::evaluate(&eval, z);
            let dir = pre.direction().expect("resolvent point has a convergent side");
            let len = series::series_length_for(pre.rate(dir), 1e-10).unwrap().max(8);
            let s = series::build(m, z, dir, len, None).unwrap();
            let res = series::residual_identity(&s, m, &s.probe_indices()).unwrap();
            assert!(res <= 1e-6, "{z}: residual {res}");
            found += 1;
            if found == 20 {
                break;
            }
        }
        assert_eq!(found, 20);
    }
}

#[test]
fn spectrum_witnesses_have_small_section_singular_values() {
    // For 1 < |λ| < 2 the adjoint of T - λ has a kernel vector decaying on
    // both sides, so centred zero-boundary sections are nearly singular.
    let m = ShiftModel::new(SequenceSpec::step(1.0, 2.0).unwrap(), SequenceSpec::constant(0.0).unwrap(), 1).unwrap();
    let eval = RadiiEvaluator::new(&m, 64).unwrap();
    let sec = oracle::truncate(&m, 256, Boundary::Zero, -128).unwrap();
    let mut inside = 0;
    for z in spiral(c(0.0, 0.0), 3.0, 300) {
        let r = spectrum::classify(&eval, z, 0.0);
        if r.margin <= 0.1 {
            continue;
        }
        let s = oracle::sigma_min(&sec, z);
        if r.in_spectrum {
            inside += 1;
            assert!(s < 1e-8, "{z}: σ_min = {s}");
        } else if z.norm() > 2.0 {
            assert!(s >= z.norm() - 2.0 - 1e-9, "{z}: σ_min = {s}");
        }
        if inside == 20 {
            break;
        }
    }
    assert_eq!(inside, 20);
}

#[test]
fn csv_round_trip_reproduces_classification() {
    let m = ShiftModel::new(periodic(&[1.0, 4.0]), SequenceSpec::constant(0.0).unwrap(), 2).unwrap();
    let g = spectrum::decompose_union(&m, &ScanParams::new(20, 20, 2, 64)).unwrap();
    let rows = read_grid_csv(&grid_csv(&g)).unwrap();
    assert_eq!(rows.len(), g.cells().len());
    for (row, cell) in rows.iter().zip(g.cells()) {
        assert_eq!(row.class, cell.class);
        assert_eq!(row.margin.to_bits(), cell.margin.to_bits());
        let z = g.cell_center(cell);
        assert_eq!((row.re.to_bits(), row.im.to_bits()), (z.re.to_bits(), z.im.to_bits()));
    }
    assert!(rows.iter().any(|r| r.class == CellClass::Boundary));
}
