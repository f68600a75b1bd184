//! Two particles on a line, discretized on the joint `(x1, x2)` grid.
//!
//! Axis 0 of the 2D grid is `x1`, axis 1 is `x2`. Both particles have unit
//! mass and see additive potentials `V1(x1) + V2(x2)`. Three dynamics are
//! provided: linear, SMPE with the joint Laplacian (`C (Delta_1 S + Delta_2 S)^2`,
//! which couples the particles), and SMPE applied per coordinate
//! (`sum_i C_i (Delta_i S)^2`, which keeps product states product).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{dealias, ensure_same_grid, gradient, integrate, second_derivative, ComplexField, DiffMethod, Grid, ScalarField};
use crate::integrator::Dynamics;
use crate::models::{general_kn_from, line_max, DensityWeight, KnTerm, DEFAULT_TAPER_REL, Model, ModelSpec, NonlinearTerms, PotentialSpec};
use crate::observables::{continuity_residual_impl, ehrenfest_from_terms, kinetic_parts, moments, seam_decayed, ObservableRecord, EnergyParts};
use crate::wavefunction::{LocalDerivatives, SplitSpectrum, WaveFunction, DEFAULT_EPS_REL};

/// A joint wavefunction on a 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBodyState {
    psi: WaveFunction,
}

impl TwoBodyState {
    pub fn new(psi: WaveFunction) -> Result<Self> {
        if psi.grid().dims() != 2 {
            return Err(Error::invalid("a two-body state lives on a 2D grid"));
        }
        Ok(TwoBodyState { psi })
    }

    pub fn wavefunction(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn into_wavefunction(self) -> WaveFunction {
        self.psi
    }

    pub fn grid(&self) -> Grid {
        self.psi.grid()
    }

    /// Single-particle densities `rho_1(x1)`, `rho_2(x2)` of the normalized joint density.
    pub fn marginals(&self) -> Result<(ScalarField, ScalarField)> {
        marginals(&self.psi)
    }
}

/// The 1D grid matching one axis of a 2D grid.
pub fn axis_grid(grid: Grid) -> Result<Grid> {
    Grid::one_d(grid.n(), grid.length())
}

/// `Psi(x1, x2) = psi1(x1) psi2(x2)`.
pub fn product_state(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<TwoBodyState> {
    let (g1, g2) = (psi1.grid(), psi2.grid());
    if g1.dims() != 1 {
        return Err(Error::invalid("product factors must be one-dimensional"));
    }
    ensure_same_grid(g1, g2)?;
    let n = g1.n();
    let grid = Grid::two_d(n, g1.length())?;
    let (a, b) = (psi1.values(), psi2.values());
    let values: Vec<Complex64> = (0..n * n).map(|i| a[i / n] * b[i % n]).collect();
    TwoBodyState::new(WaveFunction::new(ComplexField::new(grid, values)?)?)
}

/// Lifts a 1D field to the joint grid as a function of `x_{axis}` only.
pub fn lift(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    let g1 = f.grid();
    if g1.dims() != 1 || axis > 1 {
        return Err(Error::invalid("lift takes a 1D field and axis 0 or 1"));
    }
    let grid = Grid::two_d(g1.n(), g1.length())?;
    let n = g1.n();
    let values = (0..n * n).map(|i| f.values()[if axis == 0 { i / n } else { i % n }]).collect();
    ScalarField::new(grid, values)
}

fn marginals(psi: &WaveFunction) -> Result<(ScalarField, ScalarField)> {
    let grid = psi.grid();
    let g1 = axis_grid(grid)?;
    let n = grid.n();
    let dx = grid.dx();
    let rho = psi.density();
    let norm = integrate(&rho);
    let mut m1 = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for (i, r) in rho.values().iter().enumerate() {
        let r = r / norm;
        m1[i / n] += r * dx;
        m2[i % n] += r * dx;
    }
    Ok((ScalarField::new(g1, m1)?, ScalarField::new(g1, m2)?))
}

/// `|| rho - rho_1 (x) rho_2 ||_1` over the joint grid, for the normalized density.
pub fn correlation_defect(state: &TwoBodyState) -> Result<f64> {
    let grid = state.grid();
    let n = grid.n();
    let (m1, m2) = marginals(&state.psi)?;
    let rho = state.psi.density();
    let norm = integrate(&rho);
    let sum: f64 = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, r)| (r / norm - m1.values()[i / n] * m2.values()[i % n]).abs())
        .sum();
    Ok(sum * grid.cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoBodyVariant {
    Linear,
    /// SMPE with the joint Laplacian.
    SmpeCoupled,
    /// SMPE applied to each coordinate with its own coupling.
    SmpeSeparable,
}

fn default_eps_rel() -> f64 {
    DEFAULT_EPS_REL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoBodyModel {
    pub variant: TwoBodyVariant,
    /// Coupling of the coupled variant.
    #[serde(default)]
    pub c: f64,
    /// Per-particle couplings of the separable variant.
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub v1: PotentialSpec,
    #[serde(default)]
    pub v2: PotentialSpec,
    #[serde(default = "default_eps_rel")]
    pub eps_rel: f64,
    #[serde(default = "default_taper_rel")]
    pub taper_rel: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_taper_rel() -> f64 {
    DEFAULT_TAPER_REL
}

fn default_true() -> bool {
    true
}

impl TwoBodyModel {
    pub fn linear() -> Self {
        Self::with(TwoBodyVariant::Linear, 0.0, 0.0, 0.0)
    }

    pub fn coupled(c: f64) -> Self {
        Self::with(TwoBodyVariant::SmpeCoupled, c, 0.0, 0.0)
    }

    pub fn separable(c1: f64, c2: f64) -> Self {
        Self::with(TwoBodyVariant::SmpeSeparable, 0.0, c1, c2)
    }

    fn with(variant: TwoBodyVariant, c: f64, c1: f64, c2: f64) -> Self {
        TwoBodyModel {
            variant,
            c,
            c1,
            c2,
            v1: PotentialSpec::Zero,
            v2: PotentialSpec::Zero,
            eps_rel: DEFAULT_EPS_REL,
            taper_rel: DEFAULT_TAPER_REL,
            dealias: true,
        }
    }

    pub fn with_taper_rel(mut self, taper_rel: f64) -> Self {
        self.taper_rel = taper_rel;
        self
    }

    pub fn with_potentials(mut self, v1: PotentialSpec, v2: PotentialSpec) -> Self {
        self.v1 = v1;
        self.v2 = v2;
        self
    }

    /// The single-particle models whose product evolution the separable and linear
    /// variants reproduce.
    pub fn factor_models(&self, grid1: Grid) -> Result<(Model, Model)> {
        let (a, b) = match self.variant {
            TwoBodyVariant::Linear => (ModelSpec::linear(), ModelSpec::linear()),
            TwoBodyVariant::SmpeSeparable => (ModelSpec::smpe(self.c1), ModelSpec::smpe(self.c2)),
            TwoBodyVariant::SmpeCoupled => {
                return Err(Error::invalid("the coupled variant does not factor into single-particle models"))
            }
        };
        let bind = |s: ModelSpec, v: &PotentialSpec| {
            let s = s.with_potential(v.clone()).with_eps_rel(self.eps_rel);
            Model::new(s.with_taper_rel(self.taper_rel).with_dealias(self.dealias), grid1)
        };
        Ok((bind(a, &self.v1)?, bind(b, &self.v2)?))
    }
}

/// A validated two-body model bound to a joint grid.
#[derive(Clone, Debug)]
pub struct TwoBody {
    spec: TwoBodyModel,
    grid: Grid,
    potential: ScalarField,
}

impl TwoBody {
    pub fn new(spec: TwoBodyModel, grid: Grid) -> Result<Self> {
        if grid.dims() != 2 {
            return Err(Error::invalid("two-body models need a 2D grid"));
        }
        if ![spec.c, spec.c1, spec.c2].iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        if !(spec.eps_rel >= 0.0 && spec.eps_rel.is_finite()) {
            return Err(Error::invalid("eps_rel must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&spec.taper_rel) {
            return Err(Error::invalid("taper_rel must lie in [0, 1)"));
        }
        let g1 = axis_grid(grid)?;
        let potential = lift(&spec.v1.sample(g1)?, 0)?.plus(&lift(&spec.v2.sample(g1)?, 1)?)?;
        Ok(TwoBody { spec, grid, potential })
    }

    pub fn spec(&self) -> &TwoBodyModel {
        &self.spec
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    fn derivatives(&self, psi: &ComplexField) -> Result<LocalDerivatives> {
        ensure_same_grid(self.grid, psi.grid())?;
        Ok(LocalDerivatives::new(psi, self.spec.eps_rel))
    }

    /// `Delta_axis S` from the unwrap-free identity restricted to one coordinate, with
    /// the density floor taken relative to `line_max`.
    fn partial_delta_s(&self, d: &LocalDerivatives, axis: usize, line_max: &ScalarField) -> ScalarField {
        let d2 = SplitSpectrum::of(&d.psi).apply(|s| s.second_derivative(axis));
        let values = (0..self.grid.len())
            .map(|i| {
                let rr = d.rho.values()[i] + self.spec.eps_rel * line_max.values()[i];
                if rr <= 0.0 {
                    return 0.0;
                }
                let w = d.psi.values()[i].conj() * d2.values()[i];
                let a = 0.5 * d.grad_rho[axis].values()[i];
                let j = d.j[axis].values()[i];
                let rho = d.rho.values()[i];
                let aj = if rho > 0.0 { a * j / rho } else { 0.0 };
                (w.im - 2.0 * aj) / rr
            })
            .collect();
        ScalarField::from_raw(self.grid, values)
    }

    fn couplings(&self) -> [f64; 2] {
        [self.spec.c1, self.spec.c2]
    }

    fn weight(&self, d: &LocalDerivatives) -> DensityWeight {
        DensityWeight::new(&d.rho, self.spec.taper_rel)
    }

    /// Separable-variant weight and `d^2 S / dx_axis^2`. Both the taper and the density
    /// floor are taken relative to the line maxima along `axis`, so that product states
    /// see exactly the single-particle fields.
    fn axis_fields(&self, d: &LocalDerivatives, axis: usize) -> (DensityWeight, ScalarField) {
        let line_max = line_max(&d.rho, axis);
        let ds = self.partial_delta_s(d, axis, &line_max);
        (DensityWeight::along_lines(&d.rho, self.spec.taper_rel, &line_max), ds)
    }

    fn terms_from(&self, d: &LocalDerivatives) -> Result<NonlinearTerms> {
        match self.spec.variant {
            TwoBodyVariant::Linear => Ok(NonlinearTerms::zeros(self.grid)),
            TwoBodyVariant::SmpeCoupled => general_kn_from(d, &[KnTerm::new(1, 2, self.spec.c)?], &self.weight(d)),
            TwoBodyVariant::SmpeSeparable => {
                let mut h_r = ScalarField::zeros(self.grid);
                let mut h_i = ScalarField::zeros(self.grid);
                for (axis, c) in self.couplings().into_iter().enumerate() {
                    let (weight, ds) = self.axis_fields(d, axis);
                    let hr = match &weight.df {
                        None => ds.map(|v| c * v * v),
                        Some(df) => ds.zip_map(df, |v, g| c * g * v * v)?,
                    };
                    h_r = h_r.plus(&hr)?;
                    let w = second_derivative(&weight.f.mul(&ds)?, axis, DiffMethod::Spectral)?;
                    h_i = h_i.plus(&weight.over_rho(d, &w).scaled(c))?;
                }
                Ok(NonlinearTerms {
                    h_r: h_r.check_finite("two-body h_r")?,
                    h_i: h_i.check_finite("two-body h_i")?,
                })
            }
        }
    }

    pub fn nonlinear_terms(&self, state: &TwoBodyState) -> Result<NonlinearTerms> {
        self.terms_from(&self.derivatives(state.psi.field())?)
    }

    fn hamiltonian_from(&self, d: &LocalDerivatives) -> Result<ComplexField> {
        let t = self.terms_from(d)?;
        let p = d.psi.values();
        let nl: Vec<Complex64> =
            (0..p.len()).map(|i| Complex64::new(t.h_r.values()[i], t.h_i.values()[i]) * p[i]).collect();
        let mut nl = ComplexField::from_raw(self.grid, nl);
        if self.spec.dealias {
            nl = dealias(&nl);
        }
        let values = (0..self.grid.len())
            .map(|i| -0.5 * d.lap_psi.values()[i] + self.potential.values()[i] * p[i] + nl.values()[i])
            .collect();
        ComplexField::from_raw(self.grid, values).check_finite("two-body hamiltonian")
    }

    fn energy_from(&self, d: &LocalDerivatives) -> Result<EnergyParts> {
        let (kinetic_r, kinetic_s) = kinetic_parts(d);
        let potential = integrate(&d.rho.mul(&self.potential)?);
        let nonlinear = match self.spec.variant {
            TwoBodyVariant::Linear => 0.0,
            TwoBodyVariant::SmpeCoupled => {
                self.spec.c * integrate(&self.weight(d).f.zip_map(&d.delta_s, |r, s| r * s * s)?)
            }
            TwoBodyVariant::SmpeSeparable => {
                let mut e = 0.0;
                for (axis, c) in self.couplings().into_iter().enumerate() {
                    let (weight, ds) = self.axis_fields(d, axis);
                    let f = weight.f;
                    e += c * integrate(&f.zip_map(&ds, |r, s| r * s * s)?);
                }
                e
            }
        };
        Ok(EnergyParts { kinetic_r, kinetic_s, nonlinear, potential })
    }

    pub fn energy(&self, state: &TwoBodyState) -> Result<(f64, EnergyParts)> {
        let parts = self.energy_from(&self.derivatives(state.psi.field())?)?;
        Ok((parts.total(), parts))
    }

    fn current_from(&self, d: &LocalDerivatives) -> Result<Vec<ScalarField>> {
        let quantum: Vec<ScalarField> = match self.spec.variant {
            TwoBodyVariant::Linear => vec![ScalarField::zeros(self.grid); 2],
            TwoBodyVariant::SmpeCoupled => gradient(&self.weight(d).f.mul(&d.delta_s)?, DiffMethod::Spectral)?
                .into_iter()
                .map(|g| g.scaled(-2.0 * self.spec.c))
                .collect(),
            TwoBodyVariant::SmpeSeparable => self
                .couplings()
                .into_iter()
                .enumerate()
                .map(|(axis, c)| {
                    let (weight, ds) = self.axis_fields(d, axis);
                    let w = weight.f.mul(&ds)?;
                    Ok(crate::fields::derivative(&w, axis, DiffMethod::Spectral)?.scaled(-2.0 * c))
                })
                .collect::<Result<_>>()?,
        };
        d.j.iter().zip(&quantum).map(|(a, b)| a.plus(b)).collect()
    }

    /// Total probability current, one component per particle coordinate.
    pub fn current(&self, state: &TwoBodyState) -> Result<Vec<ScalarField>> {
        self.current_from(&self.derivatives(state.psi.field())?)
    }

    pub fn continuity_residual(&self, state: &TwoBodyState) -> Result<f64> {
        let d = self.derivatives(state.psi.field())?;
        let h = self.hamiltonian_from(&d)?;
        continuity_residual_impl(&d, &h, &self.current_from(&d)?)
    }

    pub fn observe_state(&self, t: f64, state: &TwoBodyState) -> Result<ObservableRecord> {
        let d = self.derivatives(state.psi.field())?;
        let decayed = seam_decayed(&state.psi);
        let parts = self.energy_from(&d)?;
        let (x_mean, p_mean) = moments(&d);
        let terms = self.terms_from(&d)?;
        let e = ehrenfest_from_terms(&d, &terms.h_r, &terms.h_i, decayed)?;
        let h = self.hamiltonian_from(&d)?;
        Ok(ObservableRecord {
            t,
            norm: integrate(&d.rho),
            energy_total: parts.total(),
            energy_parts: parts,
            x_mean,
            p_mean,
            i1: e.i1,
            i2: e.i2,
            continuity_residual: continuity_residual_impl(&d, &h, &self.current_from(&d)?)?,
            seam_decayed: decayed,
            correlation_defect: Some(correlation_defect(state)?),
        })
    }
}

impl Dynamics for TwoBody {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn hamiltonian(&self, psi: &ComplexField) -> Result<ComplexField> {
        self.hamiltonian_from(&self.derivatives(psi)?)
    }

    fn observe(&self, t: f64, psi: &WaveFunction) -> Result<ObservableRecord> {
        self.observe_state(t, &TwoBodyState::new(psi.clone())?)
    }

    fn coupling_scale(&self) -> f64 {
        match self.spec.variant {
            TwoBodyVariant::Linear => 0.0,
            TwoBodyVariant::SmpeCoupled => self.spec.c.abs(),
            TwoBodyVariant::SmpeSeparable => self.spec.c1.abs().max(self.spec.c2.abs()),
        }
    }

    fn max_abs_h_i(&self, psi: &WaveFunction) -> f64 {
        self.derivatives(psi.field())
            .and_then(|d| self.terms_from(&d))
            .map(|t| t.h_i.max_abs())
            .unwrap_or(f64::NAN)
    }
}

/// Separable-variant terms built from two 1D SMPE evaluations and lifted; used as an oracle.
pub fn lifted_separable_terms(psi1: &WaveFunction, psi2: &WaveFunction, c1: f64, c2: f64, eps_rel: f64) -> Result<NonlinearTerms> {
    let a = crate::models::smpe_terms(psi1, c1, eps_rel)?;
    let b = crate::models::smpe_terms(psi2, c2, eps_rel)?;
    Ok(NonlinearTerms {
        h_r: lift(&a.h_r, 0)?.plus(&lift(&b.h_r, 1)?)?,
        h_i: lift(&a.h_i, 0)?.plus(&lift(&b.h_i, 1)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1() -> Grid {
        Grid::one_d(32, 2.0 * PI).unwrap()
    }

    fn plane(k: f64) -> WaveFunction {
        WaveFunction::from_fn(g1(), |x| Complex64::from_polar(1.0, k * x[0])).unwrap()
    }

    fn gaussian(grid: Grid, beta: f64) -> WaveFunction {
        WaveFunction::normalized(ComplexField::from_fn(grid, |x| {
            Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), beta * x[0] * x[0])
        }))
        .unwrap()
    }

    #[test]
    fn product_of_plane_waves() {
        let s = product_state(&plane(1.0), &plane(2.0)).unwrap();
        let g = s.grid();
        for (i, z) in s.wavefunction().values().iter().enumerate() {
            let expect = Complex64::from_polar(1.0, g.coordinate(i, 0) + 2.0 * g.coordinate(i, 1));
            assert!((z - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn product_norm_multiplies() {
        let a = plane(1.0);
        let b = plane(3.0).rescaled(0.5, 0.0).unwrap();
        let s = product_state(&a, &b).unwrap();
        assert!((s.wavefunction().norm() - a.norm() * b.norm()).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_no_correlation() {
        let g = Grid::one_d(64, 16.0).unwrap();
        let s = product_state(&gaussian(g, 0.3), &gaussian(g, -0.1)).unwrap();
        assert!(correlation_defect(&s).unwrap() < 1e-12);
    }

    #[test]
    fn quadratic_phase_terms_per_variant() {
        let g = Grid::one_d(128, 24.0).unwrap();
        let (b1, b2) = (0.2, 0.3);
        let s = product_state(&gaussian(g, b1), &gaussian(g, b2)).unwrap();
        let grid = s.grid();
        let c = 0.1;
        let coupled = TwoBody::new(TwoBodyModel::coupled(c), grid).unwrap().nonlinear_terms(&s).unwrap();
        let sep = TwoBody::new(TwoBodyModel::separable(c, c), grid).unwrap().nonlinear_terms(&s).unwrap();
        let rho = s.wavefunction().density();
        let peak = rho.max();
        for i in 0..grid.len() {
            if rho.values()[i] > 1e-2 * peak {
                let hc = coupled.h_r.values()[i];
                let hs = sep.h_r.values()[i];
                assert!((hc - c * (2.0 * b1 + 2.0 * b2).powi(2)).abs() < 1e-8, "{hc} {hs} {}", rho.values()[i] / peak);
                assert!((hs - c * (4.0 * b1 * b1 + 4.0 * b2 * b2)).abs() < 1e-8);
                assert!((hc - hs - 8.0 * c * b1 * b2).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn phase_free_product_has_no_terms() {
        let g = Grid::one_d(64, 16.0).unwrap();
        let s = product_state(&gaussian(g, 0.0), &gaussian(g, 0.0)).unwrap();
        for spec in [TwoBodyModel::coupled(0.3), TwoBodyModel::separable(0.1, 0.2)] {
            let t = TwoBody::new(spec, s.grid()).unwrap().nonlinear_terms(&s).unwrap();
            assert_eq!(t.h_r.max_abs(), 0.0);
            assert!(t.h_i.max_abs() < 1e-12);
        }
    }

    #[test]
    fn tapered_separable_terms_factor_on_products() {
        let g = Grid::one_d(64, 16.0).unwrap();
        let (a, b) = (gaussian(g, 0.2), gaussian(g, -0.1));
        let s = product_state(&a, &b).unwrap();
        let spec = TwoBodyModel::separable(0.1, 0.05).with_taper_rel(1e-3);
        let joint = TwoBody::new(spec.clone(), s.grid()).unwrap().nonlinear_terms(&s).unwrap();
        let (m1, m2) = spec.factor_models(g).unwrap();
        let (t1, t2) = (m1.nonlinear_terms(&a).unwrap(), m2.nonlinear_terms(&b).unwrap());
        let lifted = NonlinearTerms {
            h_r: lift(&t1.h_r, 0).unwrap().plus(&lift(&t2.h_r, 1).unwrap()).unwrap(),
            h_i: lift(&t1.h_i, 0).unwrap().plus(&lift(&t2.h_i, 1).unwrap()).unwrap(),
        };
        // Lines where the other factor falls below the line floor are tapered harder.
        for i in 0..s.grid().len() {
            let (x1, x2) = (s.grid().coordinate(i, 0), s.grid().coordinate(i, 1));
            if x1.abs() < 3.0 && x2.abs() < 3.0 {
                assert!((joint.h_r.values()[i] - lifted.h_r.values()[i]).abs() < 1e-10, "{x1} {x2} {} {}", joint.h_r.values()[i], lifted.h_r.values()[i]);
                assert!((joint.h_i.values()[i] - lifted.h_i.values()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn factor_models_only_for_separable_dynamics() {
        assert!(TwoBodyModel::coupled(0.1).factor_models(g1()).is_err());
        assert!(TwoBodyModel::separable(0.1, 0.2).factor_models(g1()).is_ok());
    }

    #[test]
    fn rejects_one_dimensional_grid() {
        assert!(TwoBody::new(TwoBodyModel::linear(), g1()).is_err());
        assert!(TwoBodyState::new(plane(1.0)).is_err());
    }
}
