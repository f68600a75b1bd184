//! Invariant check suites.
//!
//! Each suite is a list of small, self-contained scenarios. A scenario reports
//! one or more [`CheckResult`]s; a scenario that errors is reported as a single
//! failed result carrying the error text.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{translate, ComplexField, Grid};
use crate::integrator::{evolve, EvolveControls, Trajectory};
use crate::models::{general_kn_terms, smpe_terms, KnTerm, Model, ModelSpec};
use crate::observables::energy;
use crate::presets::{entangled_pair, gaussian, random_smooth};
use crate::twobody::{correlation_defect, lifted_separable_terms, product_state, TwoBody, TwoBodyModel, TwoBodyState};
use crate::units::{coupling_from_compton, coupling_from_length, energy_scale_forms, smpe_coupling_from_compton, UnitsCard};
use crate::wavefunction::WaveFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Conservation,
    Homogeneity,
    Reversibility,
    Galilean,
    Separability,
    Oracles,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Conservation, Suite::Homogeneity, Suite::Reversibility, Suite::Galilean, Suite::Separability, Suite::Oracles];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Conservation => "conservation",
            Suite::Homogeneity => "homogeneity",
            Suite::Reversibility => "reversibility",
            Suite::Galilean => "galilean",
            Suite::Separability => "separability",
            Suite::Oracles => "oracles",
        }
    }

    fn cases(self) -> Vec<(&'static str, Case)> {
        match self {
            Suite::Conservation => vec![
                ("smpe_positive_coupling", conservation_smpe_positive as Case),
                ("smpe_negative_coupling", conservation_smpe_negative),
                ("general_kn", conservation_general_kn),
                ("two_body_separable", conservation_two_body),
            ],
            Suite::Homogeneity => vec![
                ("smpe", homogeneity_smpe as Case),
                ("general_kn_k1", homogeneity_general_kn),
                ("general_kn_k2_k3", homogeneity_higher_order),
            ],
            Suite::Reversibility => vec![
                ("static_parity", reversibility_static as Case),
                ("smpe_round_trip", reversibility_smpe),
                ("k1n1_round_trip", reversibility_k1n1),
            ],
            Suite::Galilean => vec![("smpe_boost", galilean_smpe as Case)],
            Suite::Separability => vec![
                ("coupled_cross_term", separability_cross_term as Case),
                ("separable_lifted_oracle", separability_lifted),
                ("entangled_defect", separability_entangled),
                ("linear_product", separability_linear),
                ("separable_product_run", separability_dynamic),
            ],
            Suite::Oracles => vec![
                ("free_gaussian", oracle_free_gaussian as Case),
                ("gaussian_energy_parts", oracle_energy_parts),
                ("cubic_phase_h_i", oracle_cubic_phase),
                ("units_identities", oracle_units),
            ],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::invalid(format!("unknown suite '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    /// `<suite>/<scenario>`.
    pub test: String,
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    pub error: Option<String>,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => write!(f, "{status} {}: error: {e}", self.test),
            None => {
                let rel = match self.relation {
                    Relation::Below => "<",
                    Relation::Above => ">",
                };
                write!(f, "{status} {} {} = {:.3e} ({rel} {:.0e})", self.test, self.metric, self.value, self.threshold)
            }
        }
    }
}

struct Metric {
    name: String,
    value: f64,
    threshold: f64,
    relation: Relation,
}

fn below(name: impl Into<String>, value: f64, threshold: f64) -> Metric {
    Metric { name: name.into(), value, threshold, relation: Relation::Below }
}

fn above(name: impl Into<String>, value: f64, threshold: f64) -> Metric {
    Metric { name: name.into(), value, threshold, relation: Relation::Above }
}

type Case = fn() -> Result<Vec<Metric>>;

/// Runs every scenario of `suite` in parallel; results keep the scenario order.
pub fn run_suite(suite: Suite) -> Vec<CheckResult> {
    suite
        .cases()
        .into_par_iter()
        .map(|(name, case)| {
            let test = format!("{suite}/{name}");
            match case() {
                Ok(metrics) => metrics
                    .into_iter()
                    .map(|m| {
                        // NaN fails either relation.
                        let pass = match m.relation {
                            Relation::Below => m.value < m.threshold,
                            Relation::Above => m.value > m.threshold,
                        };
                        CheckResult {
                            test: test.clone(),
                            metric: m.name,
                            value: m.value,
                            threshold: m.threshold,
                            relation: m.relation,
                            pass,
                            error: None,
                        }
                    })
                    .collect(),
                Err(e) => vec![CheckResult {
                    test,
                    metric: "error".into(),
                    value: f64::NAN,
                    threshold: f64::NAN,
                    relation: Relation::Below,
                    pass: false,
                    error: Some(e.to_string()),
                }],
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn drifts(traj: &Trajectory) -> (f64, f64) {
    let first = &traj.records[0];
    let span = traj.records.last().map_or(1.0, |r| r.t - first.t).max(f64::MIN_POSITIVE);
    let norm = traj.records.iter().map(|r| (r.norm - first.norm).abs()).fold(0.0, f64::max);
    let energy = traj.records.iter().map(|r| (r.energy_total - first.energy_total).abs()).fold(0.0, f64::max);
    (norm / span, energy / span)
}

/// Suite runs give up early instead of crawling when a case turns stiff.
fn controls(t_final: f64) -> EvolveControls {
    let mut c = EvolveControls::new(t_final);
    c.dt_min = 1e-8;
    c
}

fn conservation_1d(spec: ModelSpec, n: usize, gamma: f64) -> Result<Vec<Metric>> {
    let grid = Grid::one_d(n, 30.0)?;
    let psi0 = gaussian(grid, 0.0, 1.0, 0.5, 0.1, gamma)?;
    let traj = evolve(&psi0, &Model::new(spec, grid)?, &controls(1.0).with_record_every(0.1))?;
    let (norm, energy) = drifts(&traj);
    Ok(vec![below("norm drift per unit time", norm, 1e-7), below("energy drift per unit time", energy, 1e-6)])
}

fn conservation_smpe_positive() -> Result<Vec<Metric>> {
    conservation_1d(ModelSpec::smpe(0.05), 256, 0.02)
}

/// For `C < 0` the flow is well posed only below `|k| = 1 / sqrt(2|C|)`, so the grid
/// must not resolve wavenumbers beyond it.
fn conservation_smpe_negative() -> Result<Vec<Metric>> {
    conservation_1d(ModelSpec::smpe(-0.01), 64, 0.0)
}

fn conservation_general_kn() -> Result<Vec<Metric>> {
    conservation_1d(ModelSpec::general_kn(vec![KnTerm::new(1, 3, 0.03)?]), 128, 0.0)
}

fn conservation_two_body() -> Result<Vec<Metric>> {
    let grid = Grid::two_d(64, 24.0)?;
    let g1 = Grid::one_d(64, 24.0)?;
    let state = product_state(&gaussian(g1, -0.5, 1.2, 0.3, 0.1, 0.0)?, &gaussian(g1, 0.5, 1.2, -0.2, -0.1, 0.0)?)?;
    let model = TwoBody::new(TwoBodyModel::separable(0.05, 0.03), grid)?;
    let traj = evolve(state.wavefunction(), &model, &controls(0.5).with_record_every(0.1))?;
    let (norm, energy) = drifts(&traj);
    Ok(vec![below("norm drift per unit time", norm, 1e-7), below("energy drift per unit time", energy, 1e-6)])
}

/// Largest relative deviation of the nonlinear terms under `psi -> lambda e^{i alpha} psi`.
/// The property is exact; what remains is transform roundoff amplified by about
/// `k_max^(4k)` through the derivatives, hence the coarse grids for higher `k`.
fn homogeneity(spec: ModelSpec, n: usize) -> Result<Vec<Metric>> {
    let grid = Grid::one_d(n, 2.0 * PI)?;
    let model = Model::new(spec, grid)?;
    let mut worst: f64 = 0.0;
    for seed in 0..4 {
        let psi = random_smooth(grid, seed, 4)?;
        let base = model.nonlinear_terms(&psi)?;
        let scale = base.h_r.max_abs().max(base.h_i.max_abs()).max(1.0);
        for lambda in [0.5, 2.0, 10.0] {
            for alpha in [0.0, PI / 3.0] {
                let moved = model.nonlinear_terms(&psi.rescaled(lambda, alpha)?)?;
                worst = worst.max(base.max_deviation(&moved)? / scale);
            }
        }
    }
    Ok(vec![below("max relative deviation of (h_r, h_i)", worst, 1e-12)])
}

fn homogeneity_smpe() -> Result<Vec<Metric>> {
    homogeneity(ModelSpec::smpe(0.2), 32)
}

fn homogeneity_general_kn() -> Result<Vec<Metric>> {
    homogeneity(ModelSpec::general_kn(vec![KnTerm::new(1, 1, 0.1)?, KnTerm::new(1, 3, 0.05)?]), 32)
}

fn homogeneity_higher_order() -> Result<Vec<Metric>> {
    homogeneity(ModelSpec::general_kn(vec![KnTerm::new(2, 2, 0.01)?, KnTerm::new(3, 3, 0.001)?]), 16)
}

/// Under `S -> -S` a reversible model keeps `h_r` and flips `h_i`.
fn reversibility_static() -> Result<Vec<Metric>> {
    let grid = Grid::one_d(64, 2.0 * PI)?;
    let parity = |spec: ModelSpec| -> Result<(f64, f64)> {
        let model = Model::new(spec, grid)?;
        let (mut even, mut odd) = (0.0_f64, 0.0_f64);
        for seed in 0..4 {
            let psi = random_smooth(grid, seed, 4)?;
            let a = model.nonlinear_terms(&psi)?;
            let b = model.nonlinear_terms(&psi.conj())?;
            let scale = a.h_r.max_abs().max(a.h_i.max_abs());
            even = even.max(a.h_r.minus(&b.h_r)?.max_abs() / scale);
            odd = odd.max(a.h_i.plus(&b.h_i)?.max_abs() / scale);
        }
        Ok((even, odd))
    };
    let (smpe_r, smpe_i) = parity(ModelSpec::smpe(0.1))?;
    let (k1n1_r, _) = parity(ModelSpec::general_kn(vec![KnTerm::new(1, 1, 0.1)?]))?;
    Ok(vec![
        below("SMPE relative odd part of h_r", smpe_r, 1e-12),
        below("SMPE relative even part of h_i", smpe_i, 1e-12),
        above("(1,1) relative odd part of h_r", k1n1_r, 1e-2),
    ])
}

fn round_trip(spec: ModelSpec) -> Result<f64> {
    let grid = Grid::one_d(256, 30.0)?;
    let psi0 = gaussian(grid, 0.0, 1.0, 0.5, 0.2, 0.02)?;
    let model = Model::new(spec, grid)?;
    let controls = controls(0.5).with_tol(1e-10);
    let forward = evolve(&psi0, &model, &controls)?.final_state;
    evolve(&forward.conj(), &model, &controls)?.final_state.conj().distance(&psi0)
}

fn reversibility_smpe() -> Result<Vec<Metric>> {
    Ok(vec![below("conjugation round-trip L2 defect", round_trip(ModelSpec::smpe(0.05))?, 1e-5)])
}

fn reversibility_k1n1() -> Result<Vec<Metric>> {
    let spec = ModelSpec::general_kn(vec![KnTerm::new(1, 1, 0.1)?]);
    Ok(vec![above("conjugation round-trip L2 defect", round_trip(spec)?, 1e-2)])
}

fn boost(psi: &WaveFunction, v: f64, t: f64) -> Result<WaveFunction> {
    let moved = translate(psi.field(), &[v * t])?;
    let phase = ComplexField::from_fn(psi.grid(), |x| Complex64::from_polar(1.0, v * x[0] - 0.5 * v * v * t));
    WaveFunction::new(moved.zip_map(&phase, |a, b| a * b)?)
}

fn galilean_smpe() -> Result<Vec<Metric>> {
    let length = 20.0;
    let grid = Grid::one_d(256, length)?;
    let v = 2.0 * PI * 2.0 / length;
    let t = 0.5;
    let psi0 = gaussian(grid, -1.0, 1.0, 0.0, 0.2, 0.03)?;
    let model = Model::new(ModelSpec::smpe(0.05), grid)?;
    let controls = controls(t).with_tol(1e-10);
    let a = evolve(&boost(&psi0, v, 0.0)?, &model, &controls)?.final_state;
    let b = boost(&evolve(&psi0, &model, &controls)?.final_state, v, t)?;
    Ok(vec![below("boost commutation L2 defect", a.distance(&b)?, 1e-5)])
}

/// The joint Laplacian of a product of chirps couples the factors through `8 C beta1 beta2`.
fn separability_cross_term() -> Result<Vec<Metric>> {
    let (c, b1, b2) = (0.1, 0.3, -0.2);
    let g1 = Grid::one_d(64, 20.0)?;
    let state = product_state(&gaussian(g1, 0.0, 1.0, 0.0, b1, 0.0)?, &gaussian(g1, 0.0, 1.0, 0.0, b2, 0.0)?)?;
    let coupled = TwoBody::new(TwoBodyModel::coupled(c).with_taper_rel(0.0), state.grid())?;
    let h_r = coupled.nonlinear_terms(&state)?.h_r;
    let peak = state.wavefunction().density().values().iter().enumerate().fold((0, 0.0), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc }).0;
    let cross = h_r.values()[peak] - c * (4.0 * b1 * b1 + 4.0 * b2 * b2);
    let expected = 8.0 * c * b1 * b2;
    Ok(vec![below("|cross term - 8 C beta1 beta2| at the peak", (cross - expected).abs(), 1e-10)])
}

fn separability_lifted() -> Result<Vec<Metric>> {
    let g1 = Grid::one_d(32, 2.0 * PI)?;
    let (psi1, psi2) = (random_smooth(g1, 3, 3)?, random_smooth(g1, 4, 3)?);
    let state = product_state(&psi1, &psi2)?;
    let model = TwoBody::new(TwoBodyModel::separable(0.1, -0.05).with_taper_rel(0.0), state.grid())?;
    let terms = model.nonlinear_terms(&state)?;
    let oracle = lifted_separable_terms(&psi1, &psi2, 0.1, -0.05, 1e-12)?;
    Ok(vec![below("max pointwise deviation from lifted 1D terms", terms.max_deviation(&oracle)?, 1e-10)])
}

fn separability_entangled() -> Result<Vec<Metric>> {
    let grid = Grid::two_d(64, 16.0)?;
    let state = TwoBodyState::new(entangled_pair(grid, 3.0, 0.5)?)?;
    Ok(vec![above("correlation defect of an entangled pair", correlation_defect(&state)?, 0.4)])
}

fn separability_linear() -> Result<Vec<Metric>> {
    let g1 = Grid::one_d(64, 24.0)?;
    let state = product_state(&gaussian(g1, -1.0, 1.0, 0.5, 0.1, 0.0)?, &gaussian(g1, 1.0, 0.8, -0.4, 0.0, 0.0)?)?;
    let model = TwoBody::new(TwoBodyModel::linear(), state.grid())?;
    let traj = evolve(state.wavefunction(), &model, &controls(1.0).with_record_every(0.25))?;
    let worst = traj.records.iter().filter_map(|r| r.correlation_defect).fold(0.0, f64::max);
    Ok(vec![below("max correlation defect", worst, 1e-6)])
}

fn separability_dynamic() -> Result<Vec<Metric>> {
    let g1 = Grid::one_d(64, 24.0)?;
    let state = product_state(&gaussian(g1, -0.5, 1.2, 0.3, 0.1, 0.0)?, &gaussian(g1, 0.5, 1.2, -0.2, -0.1, 0.0)?)?;
    let model = TwoBody::new(TwoBodyModel::separable(0.05, 0.03), state.grid())?;
    let traj = evolve(state.wavefunction(), &model, &controls(0.5).with_record_every(0.1))?;
    let worst = traj.records.iter().filter_map(|r| r.correlation_defect).fold(0.0, f64::max);
    Ok(vec![below("max correlation defect", worst, 1e-5)])
}

/// Closed-form free Gaussian against a zero-coupling SMPE run.
fn oracle_free_gaussian() -> Result<Vec<Metric>> {
    let (sigma, k0, t) = (1.0, 1.0, 1.0);
    let grid = Grid::one_d(256, 40.0)?;
    let psi0 = gaussian(grid, 0.0, sigma, k0, 0.0, 0.0)?;
    let run = evolve(&psi0, &Model::new(ModelSpec::smpe(0.0), grid)?, &controls(t).with_tol(1e-12))?;
    let exact = WaveFunction::from_fn(grid, |x| free_gaussian(x[0], t, sigma, k0))?;
    Ok(vec![below("L2 distance to the closed form", run.final_state.distance(&exact)?, 1e-8)])
}

/// Free evolution of the normalized Gaussian with density width `sigma` and momentum `k0`.
pub(crate) fn free_gaussian(x: f64, t: f64, sigma: f64, k0: f64) -> Complex64 {
    let s2 = sigma * sigma;
    let spread = Complex64::new(1.0, t / (2.0 * s2));
    let u = x - k0 * t;
    let amp = (2.0 * PI * s2).powf(-0.25) / spread.sqrt();
    amp * (-(u * u) / (4.0 * s2 * spread)).exp() * Complex64::from_polar(1.0, k0 * x - 0.5 * k0 * k0 * t)
}

fn oracle_energy_parts() -> Result<Vec<Metric>> {
    let (sigma, beta, c) = (0.7, 0.3, 0.1);
    let grid = Grid::one_d(256, 20.0)?;
    let psi = gaussian(grid, 0.0, sigma, 0.0, beta, 0.0)?;
    let (_, parts) = energy(&psi, &Model::new(ModelSpec::smpe(c).with_taper_rel(0.0).with_eps_rel(0.0), grid)?)?;
    let expected = [1.0 / (8.0 * sigma * sigma), 2.0 * beta * beta * sigma * sigma, 4.0 * c * beta * beta];
    let got = [parts.kinetic_r, parts.kinetic_s, parts.nonlinear];
    let worst = got.iter().zip(&expected).map(|(g, e)| ((g - e) / e).abs()).fold(0.0, f64::max);
    Ok(vec![below("max relative error of kinetic_R, kinetic_S, nonlinear", worst, 1e-10)])
}

/// `rho = exp(-a x^2)`, `S = beta x^3`: SMPE gives `h_i = 6 beta C (4 a^2 x^3 - 6 a x)`.
fn oracle_cubic_phase() -> Result<Vec<Metric>> {
    let (a, beta, c) = (0.5, 0.01, 0.1);
    let grid = Grid::one_d(256, 24.0)?;
    let psi = WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
        Complex64::from_polar((-0.5 * a * x[0] * x[0]).exp(), beta * x[0].powi(3))
    }))?;
    let terms = smpe_terms(&psi, c, 1e-12)?;
    let kn = general_kn_terms(&psi, &[KnTerm::new(1, 2, c)?], 1e-12)?;
    let mut worst: f64 = 0.0;
    for (i, h) in terms.h_i.values().iter().enumerate() {
        let x = grid.coordinate(i, 0);
        if x.abs() < 3.0 {
            worst = worst.max((h - 6.0 * beta * c * (4.0 * a * a * x.powi(3) - 6.0 * a * x)).abs());
        }
    }
    Ok(vec![
        below("max |h_i - closed form| on |x| < 3", worst, 1e-8),
        below("GeneralKN (1,2) vs SMPE, max pointwise", terms.max_deviation(&kn)?, 1e-12),
    ])
}

fn oracle_units() -> Result<Vec<Metric>> {
    let si = |l_c: f64, sign: f64| UnitsCard::new(1.054571817e-34, 9.1093837015e-31, 2.99792458e8, l_c, sign);
    let cards = [si(1e-15, 1.0)?, si(3.2e-12, -1.0)?, UnitsCard::new(1.3, 0.7, 3.1, 0.45, -1.0)?];
    let (mut forms, mut identity) = (0.0_f64, 0.0_f64);
    for card in &cards {
        for (k, n) in [(1, 2), (1, 3), (2, 2), (2, 3), (3, 3)] {
            let (a, b) = energy_scale_forms(card, k, n)?;
            forms = forms.max(((a - b) / b).abs());
        }
        let c = coupling_from_length(card, 1, 2)?;
        identity = identity.max(((smpe_coupling_from_compton(card) - c) / c).abs());
        identity = identity.max(((coupling_from_compton(card, 1, 2)? - c) / c).abs());
    }
    Ok(vec![
        below("energy-scale forms, relative", forms, 1e-10),
        below("SMPE coupling from Compton quotient, relative", identity, 1e-12),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::ALL {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn closed_form_gaussian_is_normalized_at_any_time() {
        let grid = Grid::one_d(256, 40.0).unwrap();
        for t in [0.0, 1.0, 3.0] {
            let psi = ComplexField::from_fn(grid, |x| free_gaussian(x[0], t, 1.0, 0.7));
            let norm: f64 = psi.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx();
            assert!((norm - 1.0).abs() < 1e-12, "t={t}: {norm}");
        }
    }

    #[test]
    fn homogeneity_suite_runs_clean() {
        let r = run_suite(Suite::Homogeneity);
        assert!(r.iter().all(|c| c.error.is_none()));
        assert!(r.iter().all(|c| c.pass), "{r:?}");
        assert_eq!(r.len(), 3);
    }
}
