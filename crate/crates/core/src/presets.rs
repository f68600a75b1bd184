//! Initial states: named presets plus the seeded random families used by the
//! property checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ComplexField, Grid};
use crate::twobody::{axis_grid, product_state};
use crate::wavefunction::WaveFunction;

fn default_one() -> f64 {
    1.0
}

fn default_half() -> f64 {
    0.5
}

/// A named initial state. Every preset is normalized when built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `exp(-(x-x0)^2/(4 sigma^2) + i (k0 x + beta x^2 + gamma x^3))`, where the phase
    /// polynomial is taken about `x0`. On 2D grids the same profile is used on both axes.
    Gaussian {
        #[serde(default)]
        x0: f64,
        #[serde(default = "default_one")]
        sigma: f64,
        #[serde(default)]
        k0: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        gamma: f64,
    },
    /// `exp(i k x)` along axis 0; `k` must be a multiple of `2 pi / L`.
    PlaneWave { k: f64 },
    /// Harmonic-oscillator eigenstate of `V = omega^2 x^2 / 2`.
    HoEigenstate {
        n_level: u32,
        #[serde(default = "default_one")]
        omega: f64,
    },
    /// Product of two 1D presets on the joint 2D grid.
    Product { first: Box<InitialState>, second: Box<InitialState> },
    /// `(g(x1-a) g(x2-a) + g(x1+a) g(x2+a)) / sqrt 2` with `a = separation / 2`.
    EntangledPair {
        separation: f64,
        #[serde(default = "default_half")]
        sigma: f64,
    },
    /// Seeded smooth periodic state without nodes.
    RandomSmooth {
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

fn default_modes() -> usize {
    4
}

/// Parameter documentation for one preset.
#[derive(Clone, Debug, Serialize)]
pub struct PresetDoc {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub fn catalog() -> Vec<PresetDoc> {
    vec![
        PresetDoc {
            name: "gaussian",
            params: "x0=0, sigma=1, k0=0, beta=0, gamma=0",
            description: "Gaussian with density width sigma and phase k0 x + beta x^2 + gamma x^3 about x0",
        },
        PresetDoc { name: "plane_wave", params: "k (multiple of 2 pi / L)", description: "exp(i k x) along the first axis" },
        PresetDoc {
            name: "ho_eigenstate",
            params: "n_level, omega=1",
            description: "harmonic-oscillator eigenstate with energy omega (n_level + 1/2)",
        },
        PresetDoc {
            name: "product",
            params: "first, second (1D presets)",
            description: "two-particle product state on a 2D grid",
        },
        PresetDoc {
            name: "entangled_pair",
            params: "separation, sigma=0.5",
            description: "equal superposition of two displaced product Gaussians on a 2D grid",
        },
        PresetDoc {
            name: "random_smooth",
            params: "modes=4 (uses the run seed)",
            description: "node-free smooth periodic state with bounded phase",
        },
    ]
}

impl InitialState {
    pub fn build(&self, grid: Grid, seed: u64) -> Result<WaveFunction> {
        match self {
            InitialState::Gaussian { x0, sigma, k0, beta, gamma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::invalid("sigma must be positive"));
                }
                gaussian(grid, *x0, *sigma, *k0, *beta, *gamma)
            }
            InitialState::PlaneWave { k } => plane_wave(grid, *k),
            InitialState::HoEigenstate { n_level, omega } => ho_eigenstate(grid, *n_level, *omega),
            InitialState::Product { first, second } => {
                if grid.dims() != 2 {
                    return Err(Error::invalid("product preset needs a 2D grid"));
                }
                let g1 = axis_grid(grid)?;
                let a = first.build(g1, seed)?;
                let b = second.build(g1, seed.wrapping_add(1))?;
                product_state(&a, &b)?.into_wavefunction().normalize()
            }
            InitialState::EntangledPair { separation, sigma } => entangled_pair(grid, *separation, *sigma),
            InitialState::RandomSmooth { modes } => random_smooth(grid, seed, *modes),
        }
    }
}

fn gaussian_profile(x: f64, x0: f64, sigma: f64, k0: f64, beta: f64, gamma: f64) -> Complex64 {
    let u = x - x0;
    Complex64::from_polar((-u * u / (4.0 * sigma * sigma)).exp(), k0 * x + beta * u * u + gamma * u * u * u)
}

pub fn gaussian(grid: Grid, x0: f64, sigma: f64, k0: f64, beta: f64, gamma: f64) -> Result<WaveFunction> {
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        x.iter().map(|&xa| gaussian_profile(xa, x0, sigma, k0, beta, gamma)).product()
    }))
}

pub fn plane_wave(grid: Grid, k: f64) -> Result<WaveFunction> {
    let modes = k * grid.length() / (2.0 * PI);
    if (modes - modes.round()).abs() > 1e-9 {
        return Err(Error::invalid(format!("k = {k} is not a multiple of 2 pi / L on {grid}")));
    }
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k * x[0])))
}

fn hermite_function(n: u32, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for j in 0..n {
        let j = j as f64;
        let next = (2.0 / (j + 1.0)).sqrt() * xi * cur - (j / (j + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Eigenstate `n_level` of `V = omega^2 |x|^2 / 2`; on 2D grids, the same level on both axes.
pub fn ho_eigenstate(grid: Grid, n_level: u32, omega: f64) -> Result<WaveFunction> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega must be positive"));
    }
    let s = omega.sqrt();
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        Complex64::new(x.iter().map(|&xa| hermite_function(n_level, s * xa)).product(), 0.0)
    }))
}

pub fn entangled_pair(grid: Grid, separation: f64, sigma: f64) -> Result<WaveFunction> {
    if grid.dims() != 2 {
        return Err(Error::invalid("entangled_pair needs a 2D grid"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let a = 0.5 * separation;
    let g = |u: f64| (-u * u / (4.0 * sigma * sigma)).exp();
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        Complex64::new(g(x[0] - a) * g(x[1] - a) + g(x[0] + a) * g(x[1] + a), 0.0)
    }))
}

struct Modes {
    amp: Vec<f64>,
    phase: Vec<f64>,
}

fn draw_modes(rng: &mut ChaCha8Rng, count: usize, scale: f64) -> Modes {
    let amp = (1..=count).map(|m| scale * (rng.random::<f64>() - 0.5) * 2.0 / m as f64).collect();
    let phase = (0..count).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
    Modes { amp, phase }
}

fn eval_modes(m: &Modes, x: f64, length: f64) -> f64 {
    m.amp
        .iter()
        .zip(&m.phase)
        .enumerate()
        .map(|(j, (a, p))| a * (2.0 * PI * (j + 1) as f64 * x / length + p).cos())
        .sum()
}

/// Smooth periodic state `R = exp(sum a_m cos)`, `S = sum b_m cos` with `|S| < pi/2`.
/// Band-limited up to mode `modes` in the phase; the amplitude is analytic.
pub fn random_smooth(grid: Grid, seed: u64, modes: usize) -> Result<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = modes.max(1);
    let dims = grid.dims();
    let r_modes: Vec<Modes> = (0..dims).map(|_| draw_modes(&mut rng, count, 0.3)).collect();
    let s_modes: Vec<Modes> = (0..dims).map(|_| draw_modes(&mut rng, count, 1.0)).collect();
    // Scale the phase so that sum |b_m| stays below pi / 2 over all axes.
    let total: f64 = s_modes.iter().flat_map(|m| m.amp.iter()).map(|a| a.abs()).sum();
    let s_scale = if total > 0.0 { 1.4 / total } else { 0.0 };
    let length = grid.length();
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        let log_r: f64 = (0..dims).map(|a| eval_modes(&r_modes[a], x[a], length)).sum();
        let s: f64 = (0..dims).map(|a| eval_modes(&s_modes[a], x[a], length)).sum();
        Complex64::from_polar(log_r.exp(), s_scale * s)
    }))
}

/// A localized random state: Gaussian envelope of width `L/12` times a smooth random
/// modulation, with a random cubic phase.
pub fn random_localized(grid: Grid, seed: u64) -> Result<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let length = grid.length();
    let sigma = length / 12.0;
    let modulation = draw_modes(&mut rng, 3, 0.3);
    let beta = 0.2 * (rng.random::<f64>() - 0.5);
    let gamma = 0.05 * (rng.random::<f64>() - 0.5);
    let k0 = 2.0 * PI / length * (rng.random_range(-3..=3) as f64);
    WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        x.iter()
            .map(|&u| {
                let r = (-u * u / (4.0 * sigma * sigma) + eval_modes(&modulation, u, length)).exp();
                Complex64::from_polar(r, k0 * u + beta * u * u + gamma * u * u * u)
            })
            .product()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::integrate;

    #[test]
    fn gaussian_density_width() {
        let g = Grid::one_d(256, 20.0).unwrap();
        let psi = gaussian(g, 1.0, 0.5, 0.0, 0.0, 0.0).unwrap();
        let rho = psi.density();
        let mean = integrate(&rho.zip_map(&crate::fields::ScalarField::from_fn(g, |x| x[0]), |r, x| r * x).unwrap());
        let var = integrate(&rho.zip_map(&crate::fields::ScalarField::from_fn(g, |x| x[0]), |r, x| r * (x - 1.0).powi(2)).unwrap());
        assert!((mean - 1.0).abs() < 1e-10);
        assert!((var - 0.25).abs() < 1e-10);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let g = Grid::one_d(256, 24.0).unwrap();
        let states: Vec<_> = (0..4).map(|n| ho_eigenstate(g, n, 1.0).unwrap()).collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let o = a.overlap(b).unwrap().norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((o - expect).abs() < 1e-10, "{i} {j} {o}");
            }
        }
    }

    #[test]
    fn plane_wave_must_be_commensurate() {
        let g = Grid::one_d(64, 10.0).unwrap();
        assert!(plane_wave(g, 1.0).is_err());
        assert!(plane_wave(g, 2.0 * PI * 3.0 / 10.0).is_ok());
    }

    #[test]
    fn random_states_are_seeded_and_node_free() {
        let g = Grid::one_d(128, 2.0 * PI).unwrap();
        let a = random_smooth(g, 7, 4).unwrap();
        let b = random_smooth(g, 7, 4).unwrap();
        let c = random_smooth(g, 8, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let rho = a.density();
        assert!(rho.min() > 0.1 * rho.max());
        for z in a.values() {
            assert!(z.arg().abs() < PI / 2.0);
        }
    }

    #[test]
    fn serde_tags() {
        // The tag names double as the CLI preset names.
        let names: Vec<_> = catalog().iter().map(|d| d.name).collect();
        assert_eq!(names, ["gaussian", "plane_wave", "ho_eigenstate", "product", "entangled_pair", "random_smooth"]);
    }
}
