//! Model families and their Hamiltonians.
//!
//! Every model evolves `i dPsi/dt = (-Delta/2 + V) Psi + (h_r + i h_i) Psi` in
//! units with `hbar = m = 1`. The real field `h_r` shifts the phase; `h_i`
//! adds `2 rho h_i` to the density balance and is always a divergence, so the
//! norm is conserved. The relativistic comparison model is linear and instead
//! adds `-mc2_inv * Delta^2 Psi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{dealias, ensure_same_grid, laplacian, ComplexField, DiffMethod, Grid, ScalarField, Spectrum};
use crate::wavefunction::{LocalDerivatives, WaveFunction, DEFAULT_EPS_REL};

/// One `C (Delta^k S)^n` term of the general scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnTerm {
    pub k: u32,
    pub n: u32,
    pub c: f64,
}

impl KnTerm {
    pub fn new(k: u32, n: u32, c: f64) -> Result<Self> {
        let t = KnTerm { k, n, c };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k) || !(1..=3).contains(&self.n) {
            return Err(Error::UnsupportedTerm { k: self.k, n: self.n });
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Smpe {
        c: f64,
    },
    GeneralKn {
        terms: Vec<KnTerm>,
    },
    DgRestricted {
        d: f64,
        d_prime: f64,
        /// Coefficients of `Delta S`, `grad S . grad rho / rho`, `Delta rho / rho`,
        /// `(grad rho / rho)^2` and `(grad S)^2` in the real functional.
        b: [f64; 5],
        /// Reject coefficient sets violating `b2 = 2 b4 + b3 = 0`.
        #[serde(default)]
        check_b_constraint: bool,
    },
    RelativisticP4 {
        mc2_inv: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `V = omega^2 |x|^2 / 2`.
    Harmonic { omega: f64 },
    /// One value per grid point in flat (row-major) order.
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn sample(&self, grid: Grid) -> Result<ScalarField> {
        match self {
            PotentialSpec::Zero => Ok(ScalarField::zeros(grid)),
            PotentialSpec::Harmonic { omega } => {
                if !omega.is_finite() {
                    return Err(Error::invalid("harmonic frequency must be finite"));
                }
                let w2 = omega * omega;
                Ok(ScalarField::from_fn(grid, |x| 0.5 * w2 * x.iter().map(|v| v * v).sum::<f64>()))
            }
            PotentialSpec::Tabulated { values } => ScalarField::new(grid, values.clone()),
        }
    }
}

/// Default density scale, relative to `max rho`, below which the phase functionals taper off.
pub const DEFAULT_TAPER_REL: f64 = 1e-6;

fn default_eps_rel() -> f64 {
    DEFAULT_EPS_REL
}

fn default_taper_rel() -> f64 {
    DEFAULT_TAPER_REL
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default = "default_eps_rel")]
    pub eps_rel: f64,
    /// Taper scale of the SMPE and general-scheme functionals; 0 disables it.
    #[serde(default = "default_taper_rel")]
    pub taper_rel: f64,
    /// Apply the 2/3 rule to the nonlinear part of `H Psi`.
    #[serde(default = "default_true")]
    pub dealias: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            potential: PotentialSpec::Zero,
            eps_rel: DEFAULT_EPS_REL,
            taper_rel: DEFAULT_TAPER_REL,
            dealias: true,
        }
    }

    pub fn linear() -> Self {
        Self::new(ModelKind::Linear)
    }

    pub fn smpe(c: f64) -> Self {
        Self::new(ModelKind::Smpe { c })
    }

    pub fn general_kn(terms: Vec<KnTerm>) -> Self {
        Self::new(ModelKind::GeneralKn { terms })
    }

    pub fn dg_restricted(d: f64, d_prime: f64, b: [f64; 5]) -> Self {
        Self::new(ModelKind::DgRestricted { d, d_prime, b, check_b_constraint: false })
    }

    pub fn relativistic(mc2_inv: f64) -> Self {
        Self::new(ModelKind::RelativisticP4 { mc2_inv })
    }

    pub fn with_potential(mut self, potential: PotentialSpec) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_eps_rel(mut self, eps_rel: f64) -> Self {
        self.eps_rel = eps_rel;
        self
    }

    pub fn with_taper_rel(mut self, taper_rel: f64) -> Self {
        self.taper_rel = taper_rel;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps_rel >= 0.0 && self.eps_rel.is_finite()) {
            return Err(Error::invalid("eps_rel must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.taper_rel) {
            return Err(Error::invalid("taper_rel must lie in [0, 1)"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &self.kind {
            ModelKind::Linear => Ok(()),
            ModelKind::Smpe { c } if finite(&[*c]) => Ok(()),
            ModelKind::GeneralKn { terms } => terms.iter().try_for_each(KnTerm::validate),
            ModelKind::DgRestricted { d, d_prime, b, check_b_constraint } => {
                if !finite(&[*d, *d_prime]) || !finite(b) {
                    return Err(Error::invalid("DG coefficients must be finite"));
                }
                if *check_b_constraint && !dg_b_constraint_holds(b) {
                    return Err(Error::invalid(format!("b = {b:?} violates b2 = 2 b4 + b3 = 0")));
                }
                Ok(())
            }
            ModelKind::RelativisticP4 { mc2_inv } if finite(&[*mc2_inv]) => Ok(()),
            _ => Err(Error::invalid("coupling must be finite")),
        }
    }

    /// Largest coupling magnitude, used by the initial step heuristic.
    pub fn coupling_scale(&self) -> f64 {
        match &self.kind {
            ModelKind::Linear => 0.0,
            ModelKind::Smpe { c } => c.abs(),
            ModelKind::GeneralKn { terms } => terms.iter().map(|t| t.c.abs()).fold(0.0, f64::max),
            ModelKind::DgRestricted { d, d_prime, .. } => d.abs().max(d_prime.abs()),
            ModelKind::RelativisticP4 { mc2_inv } => mc2_inv.abs(),
        }
    }
}

/// Whether `b2 = 2 b4 + b3 = 0` within rounding.
pub fn dg_b_constraint_holds(b: &[f64; 5]) -> bool {
    b[1].abs() < 1e-14 && (2.0 * b[3] + b[2]).abs() < 1e-14
}

/// Real and imaginary nonlinear Hamiltonian fields.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearTerms {
    pub h_r: ScalarField,
    pub h_i: ScalarField,
}

impl NonlinearTerms {
    pub fn zeros(grid: Grid) -> Self {
        NonlinearTerms { h_r: ScalarField::zeros(grid), h_i: ScalarField::zeros(grid) }
    }

    /// Largest pointwise deviation from another pair.
    pub fn max_deviation(&self, other: &NonlinearTerms) -> Result<f64> {
        Ok(self.h_r.minus(&other.h_r)?.max_abs().max(self.h_i.minus(&other.h_i)?.max_abs()))
    }

    fn add_assign(&mut self, other: NonlinearTerms) -> Result<()> {
        self.h_r = self.h_r.plus(&other.h_r)?;
        self.h_i = self.h_i.plus(&other.h_i)?;
        Ok(())
    }

    fn check_finite(self) -> Result<Self> {
        Ok(NonlinearTerms {
            h_r: self.h_r.check_finite("nonlinear term h_r")?,
            h_i: self.h_i.check_finite("nonlinear term h_i")?,
        })
    }
}

fn spectral_lap(f: &ScalarField) -> Result<ScalarField> {
    laplacian(f, DiffMethod::Spectral)
}

fn lap_power(f: &ScalarField, power: u32) -> Result<ScalarField> {
    let mut out = f.clone();
    for _ in 0..power {
        out = spectral_lap(&out)?;
    }
    Ok(out)
}

/// `Delta^k S`, built from the unwrap-free `Delta S`.
pub(crate) fn delta_k_s(d: &LocalDerivatives, k: u32) -> Result<ScalarField> {
    lap_power(&d.delta_s, k - 1)
}

/// Density floor of the division producing `h_i`, relative to the taper scale.
const NODE_FLOOR: f64 = 1e-3;

/// Smallest line maximum used by [`line_max`], relative to the global one.
const LINE_FLOOR: f64 = 1e-6;

/// Maximum of `rho` over the grid line along `axis` through each point, floored at
/// [`LINE_FLOOR`] times the global maximum. Lines below the floor carry no weight and
/// would otherwise lose the regularization of every division by `rho`.
pub(crate) fn line_max(rho: &ScalarField, axis: usize) -> ScalarField {
    let grid = rho.grid();
    // Lines along `axis` are labelled by the flat index with that coordinate zeroed.
    let line = |i: usize| i - grid.axis_index(i, axis) * grid.stride(axis);
    let mut max = vec![LINE_FLOOR * rho.max(); grid.len()];
    for (i, &r) in rho.values().iter().enumerate() {
        let l = line(i);
        max[l] = max[l].max(r);
    }
    ScalarField::from_raw(grid, (0..grid.len()).map(|i| max[line(i)]).collect())
}

/// Density weight of the phase functionals, `F(rho) = rho^3 / (rho^2 + m^2)` with
/// `m = taper_rel * max rho`. The energy `C integral F (Delta^k S)^n` then gives
/// `h_r = C F'(rho) (Delta^k S)^n`, and the nonlinearity fades out in tails where
/// `rho << m`. With the taper off `F = rho` and the plain functional is recovered.
pub(crate) struct DensityWeight {
    pub f: ScalarField,
    /// `F'(rho)`; `None` means identically one.
    pub df: Option<ScalarField>,
    /// Pointwise taper scale `m`; `None` when the taper is off.
    pub m: Option<ScalarField>,
}

impl DensityWeight {
    pub(crate) fn new(rho: &ScalarField, taper_rel: f64) -> Self {
        let m = taper_rel * rho.max();
        if m == 0.0 {
            return DensityWeight { f: rho.clone(), df: None, m: None };
        }
        DensityWeight::with_scale(rho, ScalarField::constant(rho.grid(), m))
    }

    /// Taper scale relative to the line maxima of [`line_max`].
    /// `F` is homogeneous of degree one in `(rho, m)`, so for a product density the
    /// weight of axis `a` is the 1D weight of factor `a` times the other factor.
    pub(crate) fn along_lines(rho: &ScalarField, taper_rel: f64, line_max: &ScalarField) -> Self {
        if taper_rel == 0.0 || line_max.max() == 0.0 {
            return DensityWeight { f: rho.clone(), df: None, m: None };
        }
        DensityWeight::with_scale(rho, line_max.scaled(taper_rel))
    }

    fn with_scale(rho: &ScalarField, m: ScalarField) -> Self {
        let f = rho
            .zip_map(&m, |r, m| if m == 0.0 { r } else { r * r * r / (r * r + m * m) })
            .expect("fields share the grid");
        let df = rho
            .zip_map(&m, |r, m| {
                let s = r * r + m * m;
                if m == 0.0 {
                    1.0
                } else {
                    r * r * (r * r + 3.0 * m * m) / (s * s)
                }
            })
            .expect("fields share the grid");
        DensityWeight { f, df: Some(df), m: Some(m) }
    }

    /// `num rho / (rho^2 + f^2)` with `f = NODE_FLOOR m`. Where the functional is tapered
    /// off the numerator is mostly transform noise, and dividing it by `rho_reg` alone
    /// turns nodes into arbitrarily fast modes. The relative error elsewhere is `(f/rho)^2`.
    pub(crate) fn over_rho(&self, d: &LocalDerivatives, num: &ScalarField) -> ScalarField {
        let Some(m) = &self.m else {
            return d.over_rho(num);
        };
        let plain = d.over_rho(num);
        let values = (0..num.values().len())
            .map(|i| {
                let (v, r, m) = (num.values()[i], d.rho.values()[i], m.values()[i]);
                if m == 0.0 {
                    plain.values()[i]
                } else {
                    v * r / (r * r + (NODE_FLOOR * m).powi(2))
                }
            })
            .collect();
        ScalarField::from_raw(num.grid(), values)
    }
}

fn kn_term(d: &LocalDerivatives, t: &KnTerm, w: &DensityWeight) -> Result<NonlinearTerms> {
    let a = delta_k_s(d, t.k)?;
    let n = t.n as i32;
    let h_r = match &w.df {
        None => a.map(|v| t.c * v.powi(n)),
        Some(df) => a.zip_map(df, |v, g| t.c * g * v.powi(n))?,
    };
    let weighted = a.zip_map(&w.f, |v, r| v.powi(n - 1) * r)?;
    let h_i = w.over_rho(d, &lap_power(&weighted, t.k)?).scaled(0.5 * t.n as f64 * t.c);
    Ok(NonlinearTerms { h_r, h_i })
}

pub(crate) fn general_kn_from(d: &LocalDerivatives, terms: &[KnTerm], w: &DensityWeight) -> Result<NonlinearTerms> {
    let mut acc = NonlinearTerms::zeros(d.grid);
    for t in terms {
        t.validate()?;
        acc.add_assign(kn_term(d, t, w)?)?;
    }
    acc.check_finite()
}

/// `h_r = sum C (Delta^k S)^n`, `h_i = sum (n C / 2) Delta^k[(Delta^k S)^(n-1) rho] / rho`.
pub fn general_kn_terms(psi: &WaveFunction, terms: &[KnTerm], eps_rel: f64) -> Result<NonlinearTerms> {
    let d = LocalDerivatives::new(psi.field(), eps_rel);
    general_kn_from(&d, terms, &DensityWeight::new(&d.rho, 0.0))
}

/// `h_r = C (Delta S)^2`, `h_i = C Delta(rho Delta S) / rho`, from the hydrodynamic fields.
pub fn smpe_terms(psi: &WaveFunction, c: f64, eps_rel: f64) -> Result<NonlinearTerms> {
    general_kn_terms(psi, &[KnTerm::new(1, 2, c)?], eps_rel)
}

/// SMPE terms from the complex form `H = -(C/4) G`, `G = P^2 + 2 Delta(rho P) / rho`,
/// `P = Delta ln(Psi*/Psi)`. Shares no code with [`smpe_terms`] beyond the transforms.
pub fn smpe_terms_complex(psi: &WaveFunction, c: f64, eps_rel: f64) -> Result<NonlinearTerms> {
    let grid = psi.grid();
    let field = psi.field();
    let spec = Spectrum::of(field);
    let grads = spec.gradient();
    let lap = spec.laplacian();
    let rho = field.norm_sqr();
    let floor = eps_rel * rho.max();
    let len = grid.len();

    // q = Delta Psi / Psi - (grad Psi / Psi)^2 = Delta ln Psi; P = conj(q) - q.
    let mut p = vec![Complex64::new(0.0, 0.0); len];
    let mut rho_p = vec![Complex64::new(0.0, 0.0); len];
    for i in 0..len {
        let z = field.values()[i];
        let den = rho.values()[i] + floor;
        if den <= 0.0 {
            continue;
        }
        let inv = z.conj() / den;
        let mut q = lap.values()[i] * inv;
        for g in &grads {
            let u = g.values()[i] * inv;
            q -= u * u;
        }
        p[i] = q.conj() - q;
        rho_p[i] = p[i] * rho.values()[i];
    }
    let lap_rho_p = Spectrum::of(&ComplexField::from_raw(grid, rho_p)).laplacian();

    let mut h_r = vec![0.0; len];
    let mut h_i = vec![0.0; len];
    for i in 0..len {
        let den = rho.values()[i] + floor;
        let correction = if den > 0.0 { lap_rho_p.values()[i] * (2.0 / den) } else { Complex64::new(0.0, 0.0) };
        let g = p[i] * p[i] + correction;
        let h = g * (-0.25 * c);
        h_r[i] = h.re;
        h_i[i] = h.im;
    }
    NonlinearTerms { h_r: ScalarField::from_raw(grid, h_r), h_i: ScalarField::from_raw(grid, h_i) }.check_finite()
}

pub(crate) fn dg_from(d: &LocalDerivatives, dd: f64, d_prime: f64, b: &[f64; 5]) -> Result<NonlinearTerms> {
    let grid = d.grid;
    let len = grid.len();
    let rr = d.rho_reg.values();
    let mut h_r = vec![0.0; len];
    let mut h_i = vec![0.0; len];
    for i in 0..len {
        let inv = if rr[i] > 0.0 { 1.0 / rr[i] } else { 0.0 };
        let mut gs_gr = 0.0;
        let mut gr2 = 0.0;
        let mut gs2 = 0.0;
        for axis in 0..grid.dims() {
            let gs = d.grad_s[axis].values()[i];
            let gr = d.grad_rho[axis].values()[i] * inv;
            gs_gr += gs * gr;
            gr2 += gr * gr;
            gs2 += gs * gs;
        }
        let ds = d.delta_s.values()[i];
        let lr = d.lap_rho.values()[i] * inv;
        h_i[i] = 0.5 * dd * (ds + gs_gr) + 0.5 * d_prime * lr;
        h_r[i] = dd * (b[0] * ds + b[1] * gs_gr + b[2] * lr + b[3] * gr2 + b[4] * gs2);
    }
    NonlinearTerms { h_r: ScalarField::from_raw(grid, h_r), h_i: ScalarField::from_raw(grid, h_i) }.check_finite()
}

/// Restricted DG terms: `h_i` adds `D div(rho grad S) + D' Delta rho` to `d rho/dt`,
/// `h_r = D F_b[rho, S]`.
pub fn dg_restricted_terms(
    psi: &WaveFunction,
    d: f64,
    d_prime: f64,
    b: &[f64; 5],
    eps_rel: f64,
) -> Result<NonlinearTerms> {
    dg_from(&LocalDerivatives::new(psi.field(), eps_rel), d, d_prime, b)
}

/// `(-Delta/2 + V) Psi`.
pub fn linear_rhs(psi: &WaveFunction, v: &ScalarField) -> Result<ComplexField> {
    ensure_same_grid(psi.grid(), v.grid())?;
    let lap = Spectrum::of(psi.field()).laplacian();
    let vpsi = psi.field().mul_real(v)?;
    lap.scaled(-0.5).plus(&vpsi)?.check_finite("linear_rhs")
}

/// `(-Delta/2 + V) Psi - mc2_inv Delta^2 Psi`.
pub fn relativistic_rhs(psi: &WaveFunction, v: &ScalarField, mc2_inv: f64) -> Result<ComplexField> {
    let lin = linear_rhs(psi, v)?;
    let bilap = Spectrum::of(psi.field()).bilaplacian();
    lin.plus(&bilap.scaled(-mc2_inv))?.check_finite("relativistic_rhs")
}

/// A validated model bound to a grid.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    grid: Grid,
    potential: ScalarField,
}

impl Model {
    pub fn new(spec: ModelSpec, grid: Grid) -> Result<Self> {
        spec.validate()?;
        let potential = spec.potential.sample(grid)?;
        Ok(Model { spec, grid, potential })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn eps_rel(&self) -> f64 {
        self.spec.eps_rel
    }

    pub(crate) fn derivatives(&self, psi: &ComplexField) -> Result<LocalDerivatives> {
        ensure_same_grid(self.grid, psi.grid())?;
        Ok(LocalDerivatives::new(psi, self.spec.eps_rel))
    }

    pub(crate) fn weight(&self, d: &LocalDerivatives) -> DensityWeight {
        DensityWeight::new(&d.rho, self.spec.taper_rel)
    }

    /// The `C (Delta^k S)^n` terms of SMPE and the general scheme, if this is one of those.
    pub(crate) fn kn_terms(&self) -> Option<Vec<KnTerm>> {
        match &self.spec.kind {
            ModelKind::Smpe { c } => Some(vec![KnTerm { k: 1, n: 2, c: *c }]),
            ModelKind::GeneralKn { terms } => Some(terms.clone()),
            _ => None,
        }
    }

    pub(crate) fn terms_from(&self, d: &LocalDerivatives) -> Result<NonlinearTerms> {
        match &self.spec.kind {
            ModelKind::Linear | ModelKind::RelativisticP4 { .. } => Ok(NonlinearTerms::zeros(self.grid)),
            ModelKind::Smpe { c } => general_kn_from(d, &[KnTerm { k: 1, n: 2, c: *c }], &self.weight(d)),
            ModelKind::GeneralKn { terms } => general_kn_from(d, terms, &self.weight(d)),
            ModelKind::DgRestricted { d: dd, d_prime, b, .. } => dg_from(d, *dd, *d_prime, b),
        }
    }

    /// `(h_r, h_i)` for this model; zero for the linear families.
    pub fn nonlinear_terms(&self, psi: &WaveFunction) -> Result<NonlinearTerms> {
        self.terms_from(&self.derivatives(psi.field())?)
    }

    pub(crate) fn hamiltonian_from(&self, d: &LocalDerivatives) -> Result<ComplexField> {
        let p = d.psi.values();
        let lap = d.lap_psi.values();
        let v = self.potential.values();
        let mut out: Vec<Complex64> = (0..self.grid.len()).map(|i| -0.5 * lap[i] + v[i] * p[i]).collect();
        match &self.spec.kind {
            ModelKind::Linear => {}
            ModelKind::RelativisticP4 { mc2_inv } => {
                let bilap = Spectrum::of(&d.psi).bilaplacian();
                for (o, b) in out.iter_mut().zip(bilap.values()) {
                    *o -= mc2_inv * b;
                }
            }
            _ => {
                let t = self.terms_from(d)?;
                let nl: Vec<Complex64> =
                    (0..p.len()).map(|i| Complex64::new(t.h_r.values()[i], t.h_i.values()[i]) * p[i]).collect();
                let mut nl = ComplexField::from_raw(self.grid, nl);
                if self.spec.dealias {
                    nl = dealias(&nl);
                }
                for (o, v) in out.iter_mut().zip(nl.values()) {
                    *o += v;
                }
            }
        }
        ComplexField::from_raw(self.grid, out).check_finite("hamiltonian")
    }

    /// `H Psi`, including the nonlinear contribution.
    pub fn hamiltonian(&self, psi: &ComplexField) -> Result<ComplexField> {
        self.hamiltonian_from(&self.derivatives(psi)?)
    }
}
