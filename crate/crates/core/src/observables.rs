//! Derived quantities: norm, energy, currents, quantum potentials, Ehrenfest
//! corrections, Fokker-Planck coefficients and the continuity residual.
//!
//! Expectation values are plain integrals (`<x> = integral x rho`), so they
//! are expectations only for normalized states. Phase-derived quantities use
//! the dimensionless phase S; the action-valued phase of the hydrodynamic
//! literature is `hbar * S` (see [`crate::units::phase_to_action`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{divergence, gradient, integrate, ComplexField, DiffMethod, ScalarField, Spectrum};
use crate::models::{delta_k_s, Model, ModelKind};
use crate::wavefunction::{LocalDerivatives, WaveFunction};

/// Seam amplitude, relative to the peak, below which a state counts as decayed.
pub const SEAM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    /// `integral (grad R)^2 / 2`.
    pub kinetic_r: f64,
    /// `integral rho (grad S)^2 / 2`.
    pub kinetic_s: f64,
    pub nonlinear: f64,
    /// `integral V rho`.
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic_r + self.kinetic_s + self.nonlinear + self.potential
    }
}

/// One time sample of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub norm: f64,
    pub energy_total: f64,
    pub energy_parts: EnergyParts,
    pub x_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub continuity_residual: f64,
    pub seam_decayed: bool,
    /// Set for two-body runs only.
    pub correlation_defect: Option<f64>,
}

/// Probability current split into its classical `Im(Psi* grad Psi)` part and the
/// model-specific remainder.
#[derive(Clone, Debug)]
pub struct Currents {
    pub classical: Vec<ScalarField>,
    pub quantum: Vec<ScalarField>,
}

impl Currents {
    pub fn total(&self) -> Result<Vec<ScalarField>> {
        self.classical.iter().zip(&self.quantum).map(|(c, q)| c.plus(q)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestCorrections {
    /// `2 integral x rho h_i`, per axis.
    pub i1: Vec<f64>,
    /// `integral rho (2 h_i grad S - grad h_r)`, per axis.
    pub i2: Vec<f64>,
    /// `|integral grad(rho h_i)|`, which vanishes for decayed states.
    pub boundary_term: f64,
    pub seam_decayed: bool,
}

/// Drift `D_i = dS/dx_i` and diagonal diffusion `D_ii = -2 C Delta S`.
#[derive(Clone, Debug)]
pub struct FokkerPlanckCoeffs {
    pub drift: Vec<ScalarField>,
    /// Diagonal entries; off-diagonal entries vanish identically.
    pub diffusion: Vec<ScalarField>,
}

fn spectral_grad(f: &ScalarField) -> Result<Vec<ScalarField>> {
    gradient(f, DiffMethod::Spectral)
}

fn spectral_div(v: &[ScalarField]) -> Result<ScalarField> {
    divergence(v, DiffMethod::Spectral)
}

fn axis_moment(rho_like: &ScalarField, axis: usize) -> f64 {
    let g = rho_like.grid();
    let sum: f64 = rho_like.values().iter().enumerate().map(|(i, v)| g.coordinate(i, axis) * v).sum();
    sum * g.cell_volume()
}

/// Whether `|Psi|` on the periodic seam is below [`SEAM_TOLERANCE`] times its peak.
pub fn seam_decayed(psi: &WaveFunction) -> bool {
    let g = psi.grid();
    let peak = psi.field().max_abs();
    let seam = g.seam_indices().into_iter().map(|i| psi.values()[i].norm()).fold(0.0, f64::max);
    seam <= SEAM_TOLERANCE * peak
}

pub(crate) fn kinetic_parts(d: &LocalDerivatives) -> (f64, f64) {
    let g = d.grid;
    let dv = g.cell_volume();
    let mut total = 0.0;
    let mut phase = 0.0;
    for i in 0..g.len() {
        let rr = d.rho_reg.values()[i];
        for axis in 0..g.dims() {
            total += d.grad_psi[axis].values()[i].norm_sqr();
            if rr > 0.0 {
                let j = d.j[axis].values()[i];
                phase += j * j / rr;
            }
        }
    }
    let kinetic = 0.5 * total * dv;
    let kinetic_s = 0.5 * phase * dv;
    (kinetic - kinetic_s, kinetic_s)
}

pub(crate) fn energy_from(model: &Model, d: &LocalDerivatives) -> Result<EnergyParts> {
    let (kinetic_r, kinetic_s) = kinetic_parts(d);
    let potential = integrate(&d.rho.mul(model.potential())?);
    let nonlinear = match &model.spec().kind {
        ModelKind::Linear => 0.0,
        ModelKind::Smpe { .. } | ModelKind::GeneralKn { .. } => {
            let w = model.weight(d);
            let mut e = 0.0;
            for t in model.kn_terms().unwrap_or_default() {
                let a = delta_k_s(d, t.k)?;
                e += t.c * integrate(&a.zip_map(&w.f, |v, r| v.powi(t.n as i32) * r)?);
            }
            e
        }
        ModelKind::DgRestricted { .. } => integrate(&d.rho.mul(&model.terms_from(d)?.h_r)?),
        ModelKind::RelativisticP4 { mc2_inv } => -mc2_inv * integrate(&d.lap_psi.norm_sqr()),
    };
    Ok(EnergyParts { kinetic_r, kinetic_s, nonlinear, potential })
}

/// Total energy and its parts. The relativistic correction `-mc2_inv integral |Delta Psi|^2`
/// is reported in the nonlinear slot.
pub fn energy(psi: &WaveFunction, model: &Model) -> Result<(f64, EnergyParts)> {
    let parts = energy_from(model, &model.derivatives(psi.field())?)?;
    Ok((parts.total(), parts))
}

pub(crate) fn current_from(model: &Model, d: &LocalDerivatives) -> Result<Currents> {
    let g = d.grid;
    let classical = d.j.clone();
    let zeros = || vec![ScalarField::zeros(g); g.dims()];
    let quantum = match &model.spec().kind {
        ModelKind::Linear => zeros(),
        ModelKind::Smpe { .. } | ModelKind::GeneralKn { .. } => {
            let weight = model.weight(d);
            let mut acc = zeros();
            for t in model.kn_terms().unwrap_or_default() {
                let a = delta_k_s(d, t.k)?;
                let mut w = a.zip_map(&weight.f, |v, r| v.powi(t.n as i32 - 1) * r)?;
                for _ in 1..t.k {
                    w = crate::fields::laplacian(&w, DiffMethod::Spectral)?;
                }
                for (acc_a, ga) in acc.iter_mut().zip(spectral_grad(&w)?) {
                    *acc_a = acc_a.plus(&ga.scaled(-(t.n as f64) * t.c))?;
                }
            }
            acc
        }
        ModelKind::DgRestricted { d: dd, d_prime, .. } => d
            .j
            .iter()
            .zip(&d.grad_rho)
            .map(|(j, gr)| j.scaled(-dd).plus(&gr.scaled(-d_prime)))
            .collect::<Result<_>>()?,
        ModelKind::RelativisticP4 { mc2_inv } => {
            let spec = Spectrum::of(&d.lap_psi);
            let p = d.psi.values();
            let lp = d.lap_psi.values();
            (0..g.dims())
                .map(|axis| {
                    let grad_lap = spec.derivative(axis);
                    let gp = d.grad_psi[axis].values();
                    let values = (0..g.len())
                        .map(|i| 2.0 * mc2_inv * (p[i].conj() * grad_lap.values()[i] - gp[i].conj() * lp[i]).im)
                        .collect();
                    ScalarField::new(g, values)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(Currents { classical, quantum })
}

/// Probability current with classical and model-specific parts kept apart.
pub fn current(psi: &WaveFunction, model: &Model) -> Result<Currents> {
    current_from(model, &model.derivatives(psi.field())?)
}

/// `d rho / dt = 2 Im(Psi* H Psi)` evaluated from the model right-hand side.
pub fn density_rate(psi: &WaveFunction, model: &Model) -> Result<ScalarField> {
    let d = model.derivatives(psi.field())?;
    density_rate_from(model, &d)
}

pub(crate) fn density_rate_from(model: &Model, d: &LocalDerivatives) -> Result<ScalarField> {
    let h = model.hamiltonian_from(d)?;
    d.psi.zip_map(&h, |p, hp| 2.0 * (p.conj() * hp).im)
}

pub(crate) fn continuity_residual_from(model: &Model, d: &LocalDerivatives) -> Result<f64> {
    let h = model.hamiltonian_from(d)?;
    continuity_residual_impl(d, &h, &current_from(model, d)?.total()?)
}

/// `|| 2 Im(Psi* H Psi) + div j ||_2` for a precomputed `H Psi` and current.
pub(crate) fn continuity_residual_impl(d: &LocalDerivatives, h: &ComplexField, j: &[ScalarField]) -> Result<f64> {
    let rate = d.psi.zip_map(h, |p, hp| 2.0 * (p.conj() * hp).im)?;
    Ok(rate.plus(&spectral_div(j)?)?.l2_norm())
}

/// L2 norm of `d rho/dt + div j`, with `d rho/dt` taken from the Hamiltonian and `j`
/// from the model's current.
pub fn continuity_residual(psi: &WaveFunction, model: &Model) -> Result<f64> {
    continuity_residual_from(model, &model.derivatives(psi.field())?)
}

/// Bohm potential `V_R = -Delta R / (2R)` and phase potential `V_S = C (Delta S)^2`.
pub fn quantum_potential(psi: &WaveFunction, c: f64, eps_rel: f64) -> (ScalarField, ScalarField) {
    let d = LocalDerivatives::new(psi.field(), eps_rel);
    (d.lap_r_over_r.scaled(-0.5), d.delta_s.map(|s| c * s * s))
}

/// Residual of the generalized Hamilton-Jacobi equation for SMPE,
/// `dS/dt + (grad S)^2/2 + V + V_R + V_S`, given the phase rate `dS/dt`.
pub fn hamilton_jacobi_residual(psi: &WaveFunction, model: &Model, c: f64, s_rate: &ScalarField) -> Result<ScalarField> {
    let d = model.derivatives(psi.field())?;
    let (v_r, v_s) = quantum_potential(psi, c, model.eps_rel());
    let mut gs2 = ScalarField::zeros(d.grid);
    for g in &d.grad_s {
        gs2 = gs2.plus(&g.mul(g)?)?;
    }
    s_rate.plus(&gs2.scaled(0.5))?.plus(model.potential())?.plus(&v_r)?.plus(&v_s)
}

/// Phase rate `dS/dt = Im(Psi* dPsi/dt) / rho = -Re(Psi* H Psi) / rho`.
pub fn phase_rate(psi: &WaveFunction, model: &Model) -> Result<ScalarField> {
    let d = model.derivatives(psi.field())?;
    let h = model.hamiltonian_from(&d)?;
    let num = d.psi.zip_map(&h, |p, hp| -(p.conj() * hp).re)?;
    Ok(d.over_rho(&num))
}

pub(crate) fn ehrenfest_from(model: &Model, d: &LocalDerivatives, decayed: bool) -> Result<EhrenfestCorrections> {
    let terms = model.terms_from(d)?;
    ehrenfest_from_terms(d, &terms.h_r, &terms.h_i, decayed)
}

pub(crate) fn ehrenfest_from_terms(
    d: &LocalDerivatives,
    h_r: &ScalarField,
    h_i: &ScalarField,
    decayed: bool,
) -> Result<EhrenfestCorrections> {
    let g = d.grid;
    let rho_hi = d.rho.mul(h_i)?;
    let grad_hr = spectral_grad(h_r)?;
    let grad_rho_hi = spectral_grad(&rho_hi)?;
    let mut i1 = Vec::with_capacity(g.dims());
    let mut i2 = Vec::with_capacity(g.dims());
    let mut boundary: f64 = 0.0;
    for axis in 0..g.dims() {
        i1.push(2.0 * axis_moment(&rho_hi, axis));
        let integrand = rho_hi
            .mul(&d.grad_s[axis])?
            .scaled(2.0)
            .minus(&d.rho.mul(&grad_hr[axis])?)?;
        i2.push(integrate(&integrand));
        boundary = boundary.max(integrate(&grad_rho_hi[axis]).abs());
    }
    Ok(EhrenfestCorrections { i1, i2, boundary_term: boundary, seam_decayed: decayed })
}

/// Nonlinear corrections to `d<x>/dt = <p> + I1` and `d<p>/dt = -<grad V> + I2`.
pub fn ehrenfest_corrections(psi: &WaveFunction, model: &Model) -> Result<EhrenfestCorrections> {
    let decayed = seam_decayed(psi);
    if !decayed {
        log::warn!("state is not decayed at the periodic seam; Ehrenfest integrals are unreliable");
    }
    ehrenfest_from(model, &model.derivatives(psi.field())?, decayed)
}

pub fn fokker_planck_coeffs(psi: &WaveFunction, c: f64, eps_rel: f64) -> FokkerPlanckCoeffs {
    let d = LocalDerivatives::new(psi.field(), eps_rel);
    let diag = d.delta_s.scaled(-2.0 * c);
    FokkerPlanckCoeffs { drift: d.grad_s.clone(), diffusion: vec![diag; d.grid.dims()] }
}

/// Right-hand side of the Fokker-Planck form,
/// `-d_i(D_i rho) + d_i d_j(D_ij rho)`, which equals `d rho/dt` under SMPE.
pub fn fokker_planck_rate(psi: &WaveFunction, coeffs: &FokkerPlanckCoeffs) -> Result<ScalarField> {
    let rho = psi.density();
    let g = rho.grid();
    if coeffs.drift.len() != g.dims() || coeffs.diffusion.len() != g.dims() {
        return Err(Error::invalid("Fokker-Planck coefficients do not match grid dims"));
    }
    let flux: Vec<ScalarField> = coeffs.drift.iter().map(|di| di.mul(&rho)).collect::<Result<_>>()?;
    let mut out = spectral_div(&flux)?.scaled(-1.0);
    for (axis, dii) in coeffs.diffusion.iter().enumerate() {
        let w = dii.mul(&rho)?;
        out = out.plus(&crate::fields::second_derivative(&w, axis, DiffMethod::Spectral)?)?;
    }
    Ok(out)
}

/// `(<x>, <p>)` per axis, with `<p> = integral Im(Psi* grad Psi)`.
pub(crate) fn moments(d: &LocalDerivatives) -> (Vec<f64>, Vec<f64>) {
    let g = d.grid;
    let x = (0..g.dims()).map(|a| axis_moment(&d.rho, a)).collect();
    let p = d.j.iter().map(integrate).collect();
    (x, p)
}

/// Full observable record for a single-particle model.
pub fn observe(model: &Model, t: f64, psi: &WaveFunction) -> Result<ObservableRecord> {
    let d = model.derivatives(psi.field())?;
    let decayed = seam_decayed(psi);
    let parts = energy_from(model, &d)?;
    let (x_mean, p_mean) = moments(&d);
    let e = ehrenfest_from(model, &d, decayed)?;
    Ok(ObservableRecord {
        t,
        norm: integrate(&d.rho),
        energy_total: parts.total(),
        energy_parts: parts,
        x_mean,
        p_mean,
        i1: e.i1,
        i2: e.i2,
        continuity_residual: continuity_residual_from(model, &d)?,
        seam_decayed: decayed,
        correlation_defect: None,
    })
}

/// Grid-wide `max |rho(t) - rho(0)|`.
pub fn density_sup_distance(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    Ok(a.density().minus(&b.density())?.max_abs())
}
