//! The state Ψ and its amplitude-phase (Madelung) view.
//!
//! Ψ is stored as a complex field. Phase derivatives are never taken from an
//! unwrapped phase; they come from logarithmic-derivative identities of Ψ
//! itself, with denominators regularized by `rho + eps_rel * max(rho)`:
//!
//! ```text
//! grad S  = Im(Ψ* grad Ψ) / rho
//! Delta S = Im(Ψ* Delta Ψ) / rho - 2 Re(Ψ* grad Ψ) . Im(Ψ* grad Ψ) / rho^2
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{integrate, ComplexField, Grid, ScalarField, Spectrum};

/// Default relative regularization floor for denominators.
pub const DEFAULT_EPS_REL: f64 = 1e-12;

/// Fraction of points below the floor above which [`HydroView::near_nodes`] is set.
const NODE_FRACTION_FLAG: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    psi: ComplexField,
}

impl WaveFunction {
    /// Wraps a complex field; rejects fields with zero norm.
    pub fn new(psi: ComplexField) -> Result<Self> {
        let wf = WaveFunction { psi };
        let norm = wf.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(format!("wavefunction norm must be positive and finite, got {norm}")));
        }
        Ok(wf)
    }

    /// Wraps and rescales to unit norm.
    pub fn normalized(psi: ComplexField) -> Result<Self> {
        WaveFunction::new(psi)?.normalize()
    }

    pub(crate) fn from_field_unchecked(psi: ComplexField) -> Self {
        WaveFunction { psi }
    }

    /// `Ψ = R exp(iS)` pointwise.
    pub fn from_amplitude_phase(r: &ScalarField, s: &ScalarField) -> Result<Self> {
        if r.values().iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("amplitude R must be non-negative"));
        }
        WaveFunction::new(r.zip_map(s, |r, s| Complex64::from_polar(r, s))?)
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(&[f64]) -> Complex64) -> Result<Self> {
        WaveFunction::new(ComplexField::from_fn(grid, f).check_finite("wavefunction")?)
    }

    pub fn grid(&self) -> Grid {
        self.psi.grid()
    }

    pub fn field(&self) -> &ComplexField {
        &self.psi
    }

    pub fn into_field(self) -> ComplexField {
        self.psi
    }

    pub fn values(&self) -> &[Complex64] {
        self.psi.values()
    }

    pub fn density(&self) -> ScalarField {
        self.psi.norm_sqr()
    }

    /// `integral |Ψ|^2`.
    pub fn norm(&self) -> f64 {
        integrate(&self.density())
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("cannot normalize a zero wavefunction"));
        }
        Ok(WaveFunction { psi: self.psi.scaled(1.0 / norm.sqrt()) })
    }

    pub fn conj(&self) -> Self {
        WaveFunction { psi: self.psi.conj() }
    }

    /// `lambda * exp(i alpha) * Ψ`.
    pub fn rescaled(&self, lambda: f64, alpha: f64) -> Result<Self> {
        WaveFunction::new(self.psi.scaled_complex(Complex64::from_polar(lambda, alpha)))
    }

    /// `integral Ψ_a* Ψ_b`.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        let prod = self.psi.zip_map(&other.psi, |a, b| a.conj() * b)?;
        let dv = self.grid().cell_volume();
        Ok(prod.values().iter().sum::<Complex64>() * dv)
    }

    /// L2 distance to another state on the same grid.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.psi.l2_distance(&other.psi)
    }

    pub fn hydro_view(&self, eps_rel: f64) -> HydroView {
        hydro_view(&self.psi, eps_rel)
    }
}

/// Amplitude-phase quantities derived from Ψ.
#[derive(Clone, Debug)]
pub struct HydroView {
    /// `rho = |Ψ|^2`.
    pub rho: ScalarField,
    /// One component per dimension.
    pub grad_s: Vec<ScalarField>,
    pub delta_s: ScalarField,
    /// Fraction of grid points with `rho` below the regularization floor.
    pub below_floor: f64,
    /// Set when more than 1% of the points lie below the floor.
    pub near_nodes: bool,
}

/// Computes `(rho, grad S, Delta S)` from Ψ with no phase unwrapping.
pub fn hydro_view(psi: &ComplexField, eps_rel: f64) -> HydroView {
    let d = LocalDerivatives::new(psi, eps_rel);
    HydroView {
        rho: d.rho.clone(),
        grad_s: d.grad_s.clone(),
        delta_s: d.delta_s.clone(),
        below_floor: d.below_floor,
        near_nodes: d.below_floor > NODE_FRACTION_FLAG,
    }
}

/// Gradient and Laplacian of Ψ, differentiating the real and imaginary parts
/// separately so that a real Ψ has an exactly real gradient.
fn split_derivatives(psi: &ComplexField) -> (Vec<ComplexField>, ComplexField) {
    let split = SplitSpectrum::of(psi);
    let grad = (0..psi.grid().dims()).map(|axis| split.apply(|s| s.derivative(axis))).collect();
    (grad, split.apply(Spectrum::laplacian))
}

/// Spectra of the real and imaginary parts of a complex field.
pub(crate) struct SplitSpectrum {
    re: Spectrum,
    im: Spectrum,
}

impl SplitSpectrum {
    pub fn of(psi: &ComplexField) -> Self {
        SplitSpectrum { re: Spectrum::of(&psi.re()), im: Spectrum::of(&psi.im()) }
    }

    /// Applies a real-preserving spectral operator to both parts and recombines.
    pub fn apply(&self, op: impl Fn(&Spectrum) -> ComplexField) -> ComplexField {
        let (a, b) = (op(&self.re), op(&self.im));
        let values = a.values().iter().zip(b.values()).map(|(x, y)| Complex64::new(x.re, y.re)).collect();
        ComplexField::from_raw(self.re.grid(), values)
    }
}

/// All pointwise derivatives of Ψ the models need.
#[derive(Clone, Debug)]
pub(crate) struct LocalDerivatives {
    pub grid: Grid,
    pub psi: ComplexField,
    pub grad_psi: Vec<ComplexField>,
    pub lap_psi: ComplexField,
    pub rho: ScalarField,
    /// `rho + eps_rel * max(rho)`.
    pub rho_reg: ScalarField,
    /// `Im(Ψ* grad Ψ)`, the unregularized classical current.
    pub j: Vec<ScalarField>,
    pub grad_s: Vec<ScalarField>,
    pub delta_s: ScalarField,
    /// `grad rho = 2 Re(Ψ* grad Ψ)`.
    pub grad_rho: Vec<ScalarField>,
    /// `Delta rho = 2 Re(Ψ* Delta Ψ) + 2 |grad Ψ|^2`.
    pub lap_rho: ScalarField,
    /// `Delta R / R`.
    pub lap_r_over_r: ScalarField,
    pub below_floor: f64,
}

impl LocalDerivatives {
    pub fn new(psi: &ComplexField, eps_rel: f64) -> Self {
        let grid = psi.grid();
        let (grad_psi, lap_psi) = split_derivatives(psi);
        let rho = psi.norm_sqr();
        let floor = eps_rel.max(0.0) * rho.max();
        let rho_reg = rho.map(|r| r + floor);
        let below_floor = if floor > 0.0 {
            rho.values().iter().filter(|&&r| r < floor).count() as f64 / grid.len() as f64
        } else {
            0.0
        };

        let len = grid.len();
        let dims = grid.dims();
        let p = psi.values();
        let rr = rho_reg.values();
        let mut j = vec![vec![0.0; len]; dims];
        let mut a = vec![vec![0.0; len]; dims];
        for (axis, g) in grad_psi.iter().enumerate() {
            for (i, &dp) in g.values().iter().enumerate() {
                let w = p[i].conj() * dp;
                j[axis][i] = w.im;
                a[axis][i] = w.re;
            }
        }

        let safe = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let mut delta_s = vec![0.0; len];
        let mut lap_rho = vec![0.0; len];
        let mut lap_r_over_r = vec![0.0; len];
        let lp = lap_psi.values();
        for i in 0..len {
            let w = p[i].conj() * lp[i];
            let mut aj = 0.0;
            let mut jj = 0.0;
            let mut grad_sq = 0.0;
            for axis in 0..dims {
                aj += a[axis][i] * j[axis][i];
                jj += j[axis][i] * j[axis][i];
                grad_sq += grad_psi[axis].values()[i].norm_sqr();
            }
            // The products a.j/rho and j.j/rho are bounded by |grad Ψ|^2, so only the
            // outer division is regularized and Delta S comes out as rho/rho_reg times
            // its exact value instead of picking up a spurious ring where rho ~ floor.
            delta_s[i] = safe(w.im - 2.0 * safe(aj, p[i].norm_sqr()), rr[i]);
            lap_rho[i] = 2.0 * w.re + 2.0 * grad_sq;
            lap_r_over_r[i] = safe(w.re + safe(jj, p[i].norm_sqr()), rr[i]);
        }

        let grad_s = j
            .iter()
            .map(|ja| ScalarField::from_raw(grid, ja.iter().zip(rr).map(|(&v, &r)| safe(v, r)).collect()))
            .collect();
        let grad_rho = a
            .iter()
            .map(|aa| ScalarField::from_raw(grid, aa.iter().map(|v| 2.0 * v).collect()))
            .collect();

        LocalDerivatives {
            grid,
            psi: psi.clone(),
            grad_psi,
            lap_psi,
            rho,
            rho_reg,
            j: j.into_iter().map(|v| ScalarField::from_raw(grid, v)).collect(),
            grad_s,
            delta_s: ScalarField::from_raw(grid, delta_s),
            grad_rho,
            lap_rho: ScalarField::from_raw(grid, lap_rho),
            lap_r_over_r: ScalarField::from_raw(grid, lap_r_over_r),
            below_floor,
        }
    }

    /// `num / rho_reg` pointwise, zero where the regularized density vanishes.
    pub fn over_rho(&self, num: &ScalarField) -> ScalarField {
        let values = num
            .values()
            .iter()
            .zip(self.rho_reg.values())
            .map(|(&v, &r)| if r > 0.0 { v / r } else { 0.0 })
            .collect();
        ScalarField::from_raw(self.grid, values)
    }
}
