//! Reference values from closed forms and from `data/oracles.py` (mpmath quadrature).
//! The script's output is frozen below; rerun it to regenerate.

use std::f64::consts::PI;

use num_complex::Complex64;
use phasenls::models::{general_kn_terms, smpe_terms, smpe_terms_complex};
use phasenls::observables::{ehrenfest_corrections, energy};
use phasenls::presets::{entangled_pair, gaussian, ho_eigenstate};
use phasenls::twobody::correlation_defect;
use phasenls::units::{coupling_from_length, energy_scale, UnitsCard};
use phasenls::{evolve, ComplexField, EvolveControls, Grid, KnTerm, Model, ModelSpec, PotentialSpec, TwoBodyState, WaveFunction};

// data/oracles.py: gaussian_energy(7/10, 3/10, 1/10).
const GAUSSIAN_KIN_R: f64 = 0.25510204081632653061;
const GAUSSIAN_KIN_S: f64 = 0.0882;
const GAUSSIAN_NONLINEAR: f64 = 0.036;
// data/oracles.py: entangled_defect(3, 1/2), trapezoid on [-15, 15] with 240 cells.
const ENTANGLED_DEFECT: f64 = 0.999999995319;
// data/oracles.py: skewed_ehrenfest(1/20, 1/10); both vanish to quadrature precision.
const SKEWED_I1: f64 = -2.6e-37;
const SKEWED_I2: f64 = 2.43e-33;

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn gaussian_energy_parts() {
    let grid = Grid::one_d(256, 20.0).unwrap();
    let psi = gaussian(grid, 0.0, 0.7, 0.0, 0.3, 0.0).unwrap();
    // No floor either: the density never vanishes on this box.
    let model = Model::new(ModelSpec::smpe(0.1).with_taper_rel(0.0).with_eps_rel(0.0), grid).unwrap();
    let (total, parts) = energy(&psi, &model).unwrap();
    assert!(relative(parts.kinetic_r, GAUSSIAN_KIN_R) < 1e-12, "{}", parts.kinetic_r);
    assert!(relative(parts.kinetic_s, GAUSSIAN_KIN_S) < 1e-12, "{}", parts.kinetic_s);
    assert!(relative(parts.nonlinear, GAUSSIAN_NONLINEAR) < 1e-12, "{}", parts.nonlinear);
    assert_eq!(parts.potential, 0.0);
    assert!(relative(total, GAUSSIAN_KIN_R + GAUSSIAN_KIN_S + GAUSSIAN_NONLINEAR) < 1e-12);
}

#[test]
fn default_taper_barely_moves_the_energy() {
    let grid = Grid::one_d(256, 20.0).unwrap();
    let psi = gaussian(grid, 0.0, 0.7, 0.0, 0.3, 0.0).unwrap();
    let (_, parts) = energy(&psi, &Model::new(ModelSpec::smpe(0.1), grid).unwrap()).unwrap();
    assert!(relative(parts.nonlinear, GAUSSIAN_NONLINEAR) < 1e-6, "{}", parts.nonlinear);
}

#[test]
fn entangled_pair_defect() {
    let grid = Grid::two_d(256, 30.0).unwrap();
    let state = TwoBodyState::new(entangled_pair(grid, 6.0, 0.5).unwrap()).unwrap();
    let d = correlation_defect(&state).unwrap();
    assert!((d - ENTANGLED_DEFECT).abs() < 1e-6, "{d}");
}

#[test]
fn skewed_state_corrections_vanish() {
    let grid = Grid::one_d(256, 20.0).unwrap();
    let psi = WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        let u = x[0];
        Complex64::from_polar((-u * u / 4.0).exp() * (1.0 + 0.5 * u.tanh()), 0.1 * u.powi(3))
    }))
    .unwrap();
    let model = Model::new(ModelSpec::smpe(0.05).with_taper_rel(0.0), grid).unwrap();
    let e = ehrenfest_corrections(&psi, &model).unwrap();
    assert!((e.i1[0] - SKEWED_I1).abs() < 1e-8, "{:?}", e.i1);
    assert!((e.i2[0] - SKEWED_I2).abs() < 1e-8, "{:?}", e.i2);
}

/// `rho = exp(-a x^2)`, `S = beta x^3`: `h_r = C (6 beta x)^2`, `h_i = 6 beta C (4 a^2 x^3 - 6 a x)`.
#[test]
fn cubic_phase_closed_form() {
    let (a, beta, c) = (0.5, 0.01, 0.1);
    let grid = Grid::one_d(256, 24.0).unwrap();
    let psi = WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        Complex64::from_polar((-0.5 * a * x[0] * x[0]).exp(), beta * x[0].powi(3))
    }))
    .unwrap();
    for terms in [smpe_terms(&psi, c, 1e-12).unwrap(), smpe_terms_complex(&psi, c, 1e-12).unwrap()] {
        for i in 0..grid.len() {
            let x = grid.coordinate(i, 0);
            if x.abs() < 3.0 {
                let h_r = c * (6.0 * beta * x).powi(2);
                let h_i = 6.0 * beta * c * (4.0 * a * a * x.powi(3) - 6.0 * a * x);
                assert!((terms.h_r.values()[i] - h_r).abs() < 1e-8, "h_r at x={x}");
                assert!((terms.h_i.values()[i] - h_i).abs() < 1e-7, "h_i at x={x}");
            }
        }
    }
}

/// `S = sin x` on a constant density: `(Delta^2 S)^2` gives `h_r = C sin^2 x`, `h_i = C sin x`.
/// Four Laplacians amplify roundoff by `k_max^8`, hence the coarse grid.
#[test]
fn sine_phase_k2_n2() {
    let grid = Grid::one_d(32, 2.0 * PI).unwrap();
    let psi = WaveFunction::from_fn(grid, |x| Complex64::from_polar(1.0, x[0].sin())).unwrap();
    let c = 0.2;
    let terms = general_kn_terms(&psi, &[KnTerm::new(2, 2, c).unwrap()], 1e-12).unwrap();
    for i in 0..grid.len() {
        let s = grid.coordinate(i, 0).sin();
        assert!((terms.h_r.values()[i] - c * s * s).abs() < 1e-10);
        assert!((terms.h_i.values()[i] - c * s).abs() < 1e-7);
    }
}

fn free_gaussian(x: f64, t: f64, sigma: f64, k0: f64) -> Complex64 {
    let s2 = sigma * sigma;
    let spread = Complex64::new(1.0, t / (2.0 * s2));
    let u = x - k0 * t;
    (2.0 * PI * s2).powf(-0.25) / spread.sqrt()
        * (-(u * u) / (4.0 * s2 * spread)).exp()
        * Complex64::from_polar(1.0, k0 * x - 0.5 * k0 * k0 * t)
}

#[test]
fn zero_coupling_matches_free_gaussian() {
    let grid = Grid::one_d(256, 40.0).unwrap();
    let psi0 = gaussian(grid, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
    let model = Model::new(ModelSpec::smpe(0.0), grid).unwrap();
    let out = evolve(&psi0, &model, &EvolveControls::new(1.5).with_tol(1e-12)).unwrap().final_state;
    let exact = WaveFunction::from_fn(grid, |x| free_gaussian(x[0], 1.5, 1.0, 1.0)).unwrap();
    assert!(out.distance(&exact).unwrap() < 1e-8);
}

#[test]
fn oscillator_levels_carry_no_nonlinear_energy() {
    let grid = Grid::one_d(128, 30.0).unwrap();
    let omega = 0.5;
    let model = Model::new(ModelSpec::smpe(0.1).with_potential(PotentialSpec::Harmonic { omega }), grid).unwrap();
    for level in 0..3 {
        let (total, parts) = energy(&ho_eigenstate(grid, level, omega).unwrap(), &model).unwrap();
        assert!(parts.nonlinear.abs() < 1e-14);
        assert!((total - omega * (level as f64 + 0.5)).abs() < 1e-10, "level {level}: {total}");
    }
}

#[test]
fn units_closed_forms() {
    // hbar = m = 1, l_c = 2: |C_kn| = 2^(2(kn-1)), E_kn = 1/4.
    let card = UnitsCard::new(1.0, 1.0, 1.0, 2.0, -1.0).unwrap();
    assert_eq!(coupling_from_length(&card, 1, 2).unwrap(), -4.0);
    assert_eq!(coupling_from_length(&card, 2, 3).unwrap(), -1024.0);
    for (k, n) in [(1, 2), (1, 3), (3, 3)] {
        assert!(relative(energy_scale(&card, k, n).unwrap(), 0.25) < 1e-14);
    }
}
