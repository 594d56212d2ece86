use std::f64::consts::PI;

use ccm_core::cma::{direct_solve, isolated_modes};
use ccm_core::mom::{
    assemble_array, assemble_mutual, assemble_self, delta_gap, gap_current, ArrayLayout,
    WireDipole, ETA0,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn half_wave(segments: usize) -> WireDipole {
    WireDipole::new(0.5, 1.0 / 200.0, 0.0, segments).unwrap()
}

fn input_impedance(d: &WireDipole) -> Complex64 {
    let (r, x) = assemble_self(d).unwrap();
    let v: Vec<Complex64> = delta_gap(d).iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let i = direct_solve(&r, &x, &v).unwrap();
    Complex64::new(1.0, 0.0) / gap_current(d, &i)
}

/// Induced-EMF input impedance of a center-fed dipole carrying the ideal
/// sinusoidal current, with the field evaluated on the wire surface.
fn induced_emf(length: f64, radius: f64) -> Complex64 {
    let k = 2.0 * PI;
    let h = length / 2.0;
    let j = Complex64::new(0.0, 1.0);
    let green = |d: f64| (-j * k * d).exp() / d;
    // E_z on the surface for unit peak current
    let field = |z: f64| {
        let r1 = ((z - h).powi(2) + radius * radius).sqrt();
        let r2 = ((z + h).powi(2) + radius * radius).sqrt();
        let r0 = (z * z + radius * radius).sqrt();
        -j * (ETA0 / (4.0 * PI)) * (green(r1) + green(r2) - 2.0 * (k * h).cos() * green(r0))
    };
    let current = |z: f64| (k * (h - z.abs())).sin();
    let n = 20_000;
    let dz = length / n as f64;
    // composite Simpson over [−h, h]
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let z = -h + i as f64 * dz;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += field(z) * current(z) * w;
    }
    let integral = acc * dz / 3.0;
    -integral / current(0.0).powi(2)
}

#[test]
fn half_wave_input_impedance() {
    let z = input_impedance(&half_wave(31));
    assert!((60.0..=90.0).contains(&z.re), "R_in = {}", z.re);
    assert!((20.0..=60.0).contains(&z.im), "X_in = {}", z.im);
}

#[test]
fn input_impedance_tracks_induced_emf() {
    let d = half_wave(31);
    let emf = induced_emf(0.5, d.radius());
    assert!((emf.re - 73.1).abs() < 1.0, "induced EMF R = {}", emf.re);
    let z = input_impedance(&d);
    assert!((z - emf).norm() / emf.norm() < 0.2, "{z} vs {emf}");
}

#[test]
fn input_impedance_converges_with_mesh() {
    let coarse = input_impedance(&half_wave(31));
    let fine = input_impedance(&half_wave(61));
    assert!((coarse - fine).norm() / fine.norm() < 0.03);
}

#[test]
fn dominant_eigenvalue_converges_with_mesh() {
    let lambda1 = |segments| {
        let (r, x) = assemble_self(&half_wave(segments)).unwrap();
        isolated_modes(&r, &x, 1).unwrap().lambdas()[0]
    };
    let (coarse, fine) = (lambda1(31), lambda1(61));
    assert!((coarse - fine).abs() / fine.abs() < 0.02, "{coarse} vs {fine}");
}

#[test]
fn radiation_blocks_are_semidefinite() {
    for (length, segments) in [(0.3, 19), (0.5, 31), (0.7, 43), (0.5, 61), (1.2, 75)] {
        let (r, x) = assemble_self(&WireDipole::new(length, 0.005, 0.0, segments).unwrap()).unwrap();
        assert_eq!(r.n(), segments - 1);
        assert_eq!(r.as_matrix(), &r.as_matrix().transpose());
        assert_eq!(x.as_matrix(), &x.as_matrix().transpose());
        assert!(r.min_eigenvalue().unwrap() >= -1e-10 * r.frobenius_norm());
    }
    let layout = ArrayLayout::uniform(half_wave(15), 5, 0.4).unwrap();
    let (r, _) = assemble_array(&layout).unwrap().full().unwrap();
    assert!(r.min_eigenvalue().unwrap() >= -1e-10 * r.frobenius_norm());
}

fn self_scale(d: &WireDipole) -> f64 {
    let (r, x) = assemble_self(d).unwrap();
    r.as_matrix().amax().max(x.as_matrix().amax())
}

#[test]
fn mutual_coupling_decays_with_distance() {
    let a = half_wave(31);
    let scale = self_scale(&a);
    let ratios: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&d| {
            let m = assemble_mutual(&a, &a.at(d)).unwrap();
            m.r.amax().max(m.x.amax()) / scale
        })
        .collect();
    assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
    assert!(ratios[2] < 1e-3, "{ratios:?}");
}

fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax())
}

#[test]
fn mutual_transpose_reciprocity() {
    let a = WireDipole::new(0.5, 0.005, 0.0, 31).unwrap();
    let b = WireDipole::new(0.3, 0.005, 0.3, 19).unwrap();
    let ab = assemble_mutual(&a, &b).unwrap();
    let ba = assemble_mutual(&b, &a).unwrap();
    assert_eq!((ab.r.nrows(), ab.r.ncols()), (30, 18));
    assert!(max_rel(&ab.r, &ba.r.transpose()) <= 1e-12);
    assert!(max_rel(&ab.x, &ba.x.transpose()) <= 1e-12);
}

#[test]
fn mutual_translation_and_reflection_invariance() {
    let a = WireDipole::new(0.5, 0.005, 0.0, 31).unwrap();
    let b = WireDipole::new(0.7, 0.005, 0.3, 43).unwrap();
    let base = assemble_mutual(&a, &b).unwrap();
    let mirrored = assemble_mutual(&a.at(-0.0), &b.at(-0.3)).unwrap();
    let moved = assemble_mutual(&a.at(7.25), &b.at(7.55)).unwrap();
    for other in [mirrored, moved] {
        assert!(max_rel(&base.r, &other.r) <= 1e-12);
        assert!(max_rel(&base.x, &other.x) <= 1e-12);
    }
}

#[test]
fn identical_elements_share_self_blocks() {
    let d = half_wave(31);
    let blocks = assemble_array(&ArrayLayout::new(vec![d.at(0.0), d.at(0.3)]).unwrap()).unwrap();
    assert_eq!(blocks.self_block(0), blocks.self_block(1));
    assert_eq!(blocks.sizes(), vec![30, 30]);
}

#[test]
fn uniform_array_is_block_toeplitz() {
    let blocks = assemble_array(&ArrayLayout::uniform(half_wave(15), 5, 0.4).unwrap()).unwrap();
    for i in 0..5 {
        for j in (i + 1)..5 {
            let reference = blocks.block(0, j - i);
            let this = blocks.block(i, j);
            assert!(max_rel(&reference.r, &this.r) <= 1e-10, "R ({i},{j})");
            assert!(max_rel(&reference.x, &this.x) <= 1e-10, "X ({i},{j})");
        }
    }
}

#[test]
fn assembly_depends_on_electrical_size_only() {
    // 1 GHz: λ ≈ 0.2998 m
    let wavelength = 299_792_458.0 / 1e9;
    let a = WireDipole::from_physical(0.5 * wavelength, 0.005 * wavelength, 0.0, 31, wavelength).unwrap();
    let b = WireDipole::from_physical(0.3 * wavelength, 0.005 * wavelength, 0.3 * wavelength, 19, wavelength).unwrap();
    let a0 = WireDipole::new(0.5, 0.005, 0.0, 31).unwrap();
    let b0 = WireDipole::new(0.3, 0.005, 0.3, 19).unwrap();
    let (r, x) = assemble_self(&a).unwrap();
    let (r0, x0) = assemble_self(&a0).unwrap();
    assert!(max_rel(r.as_matrix(), r0.as_matrix()) <= 1e-12);
    assert!(max_rel(x.as_matrix(), x0.as_matrix()) <= 1e-12);
    let m = assemble_mutual(&a, &b).unwrap();
    let m0 = assemble_mutual(&a0, &b0).unwrap();
    assert!(max_rel(&m.r, &m0.r) <= 1e-12);
    assert!(max_rel(&m.x, &m0.x) <= 1e-12);
}
