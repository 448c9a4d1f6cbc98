//! Flow residuals, areas and energies against closed forms.

use std::f64::consts::PI;

use symplab::flows::*;
use symplab::grid::{CircleGrid, GridFunction, LineGrid, PeriodicScheme};
use symplab::loopspace::reparametrize;
use symplab::samples::{rng, SyntheticField};
use symplab::symplectization::{loop_area_with, sigma_shift, Loop};

/// Modified Bessel function `I_n` from its power series.
fn bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (0..n).fold(1.0, |acc, k| acc * half / (k + 1) as f64);
    let mut sum = term;
    for k in 1..60 {
        term *= half * half / (k as f64 * (k + n) as f64);
        sum += term;
    }
    sum
}

fn bessel_loop(m: usize, alpha: f64, beta: f64) -> Loop {
    Loop::from_fn(m, 1, |t| alpha * (2.0 * PI * t).cos(), |t| beta * (2.0 * PI * t).sin()).unwrap()
}

#[test]
fn bessel_series_matches_tabulated_values() {
    assert!((bessel_i(0, 1.0) - 1.2660658777520082).abs() < 1e-15);
    assert!((bessel_i(1, 1.0) - 0.5651591039924851).abs() < 1e-15);
}

#[test]
fn shift_and_area_match_bessel_functions() {
    let (alpha, beta) = (0.7, 0.3);
    let exact = bessel_i(0, alpha) + 2.0 * PI * beta * bessel_i(1, alpha);
    let u = bessel_loop(32, alpha, beta);
    assert!((sigma_shift(&u) + bessel_i(0, alpha).ln()).abs() < 1e-14);
    assert!((loop_area_with(&u, PeriodicScheme::Spectral) - exact).abs() < 1e-14);

    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&m| (loop_area_with(&bessel_loop(m, alpha, beta), PeriodicScheme::Centered) - exact).abs())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.9..4.1).contains(&ratio), "ratio {ratio}");
    }
}

/// `phase = tanh s`, `a = 0`, `tau = tanh s`: both energy terms integrate
/// `sech^4`, so the total is `4 (tanh S - tanh^3 S / 3)`.
fn sech4_energy_gap(n: usize) -> f64 {
    let line = LineGrid::new(5.0, n).unwrap();
    let m = 8;
    let a = vec![0.0; n * m];
    let phase: Vec<f64> = line.points().iter().flat_map(|s| std::iter::repeat(s.tanh()).take(m)).collect();
    let u = CylinderMap::from_rows(line, CircleGrid::new(m).unwrap(), 1, &a, &phase).unwrap();
    let tau = MultiplierPath::new(GridFunction::from_fn(line, f64::tanh));
    let t = 5.0_f64.tanh();
    (energy_grad1(&u, &tau).unwrap() - 4.0 * (t - t * t * t / 3.0)).abs()
}

#[test]
fn energy_of_a_tanh_profile_converges_at_second_order() {
    let gaps: Vec<f64> = [201, 401, 801].iter().map(|&n| sech4_energy_gap(n)).collect();
    assert!(gaps[2] < 1e-3);
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn constant_critical_cylinder_solves_the_flow() {
    let line = LineGrid::new(3.0, 31).unwrap();
    for k in [1, 2, -1] {
        let u = CylinderMap::constant(line, &Loop::critical(16, k).unwrap());
        let tau = MultiplierPath::constant(line, k as f64);
        for scheme in [PeriodicScheme::Centered, PeriodicScheme::Spectral] {
            let r = grad1_residual(&u, &tau, 1.0, scheme).unwrap();
            assert!(r.certificate() <= 1e-13, "k={k} {scheme:?}: {}", r.certificate());
        }
        assert_eq!(energy_grad1(&u, &tau).unwrap(), 0.0);
    }
}

fn synthetic(seed: u64) -> CylinderMap {
    SyntheticField::random(&mut rng(seed)).build(LineGrid::new(3.0, 61).unwrap(), 32, 1).unwrap()
}

#[test]
fn energy_density_is_rotation_invariant() {
    let u = synthetic(1);
    let rotated = CylinderMap::new(
        *u.line(),
        u.loops().iter().map(|l| reparametrize(5.0 / 32.0, l).unwrap()).collect(),
    )
    .unwrap();
    let a = energy_density(&u);
    let b = energy_density(&rotated);
    let gap = a.zip_with(&b, |x, y| x - y).unwrap().max_abs();
    assert!(gap <= 1e-14 * a.max_abs().max(1.0));
}

#[test]
fn complex_structure_route_agrees_with_the_reduced_residual() {
    let u = synthetic(2);
    let tau = MultiplierPath::new(GridFunction::from_fn(*u.line(), |s| 1.0 + 0.2 * (s).sin()));
    for scheme in [PeriodicScheme::Centered, PeriodicScheme::Spectral] {
        let direct = grad1_residual(&u, &tau, 1.0, scheme).unwrap();
        let via_j = grad1_field_residual_via_j(&u, &tau, scheme).unwrap();
        assert_eq!(direct.field.len(), via_j.len());
        for (x, y) in direct.field.iter().zip(&via_j) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn translating_by_a_profile_moves_the_multiplier_by_its_derivative() {
    let u = synthetic(3);
    let tau = MultiplierPath::new(GridFunction::from_fn(*u.line(), |s| 1.0 + 0.1 * s.tanh()));
    let shift = GridFunction::from_fn(*u.line(), |s| 0.3 * (0.5 * s).sin());
    let moved = u.translate_by(&shift).unwrap();
    let moved_tau = MultiplierPath::new(tau.tau.zip_with(&shift.derivative(), |t, d| t - d).unwrap());
    let a = grad1_residual(&u, &tau, 1.0, PeriodicScheme::Centered).unwrap();
    let b = grad1_residual(&moved, &moved_tau, 1.0, PeriodicScheme::Centered).unwrap();
    for (x, y) in a.field.iter().zip(&b.field) {
        assert!((x - y).abs() <= 1e-12);
    }
}
