//! Explicit RK4 time stepping with step-doubling error control.
//!
//! A step of size `dt` is accepted when one full step and two half steps
//! differ by less than `tol_step` in L2; the two-half-step result is kept.
//! Rejected steps halve `dt`; ten consecutive acceptances grow it by 1.5.
//! The step is also capped by `2 / lambda`, where `lambda` estimates the
//! spectral radius of the right-hand side Jacobian, keeping RK4 inside its
//! stability region on the imaginary axis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ComplexField, Grid};
use crate::models::Model;
use crate::observables::{observe, ObservableRecord};
use crate::wavefunction::WaveFunction;

/// Something that can be time-stepped: a Hamiltonian plus its diagnostics.
pub trait Dynamics: Sync {
    fn grid(&self) -> Grid;

    /// `H Psi` including every nonlinear contribution.
    fn hamiltonian(&self, psi: &ComplexField) -> Result<ComplexField>;

    fn observe(&self, t: f64, psi: &WaveFunction) -> Result<ObservableRecord>;

    /// Largest coupling magnitude, for the initial step heuristic.
    fn coupling_scale(&self) -> f64;

    /// `max |h_i|` for stiffness reports.
    fn max_abs_h_i(&self, psi: &WaveFunction) -> f64;
}

impl Dynamics for Model {
    fn grid(&self) -> Grid {
        Model::grid(self)
    }

    fn hamiltonian(&self, psi: &ComplexField) -> Result<ComplexField> {
        Model::hamiltonian(self, psi)
    }

    fn observe(&self, t: f64, psi: &WaveFunction) -> Result<ObservableRecord> {
        observe(self, t, psi)
    }

    fn coupling_scale(&self) -> f64 {
        self.spec().coupling_scale()
    }

    fn max_abs_h_i(&self, psi: &WaveFunction) -> f64 {
        self.nonlinear_terms(psi).map(|t| t.h_i.max_abs()).unwrap_or(f64::NAN)
    }
}

fn default_tol_step() -> f64 {
    1e-8
}

fn default_dt_min() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveControls {
    /// Initial step; `None` selects the stiffness heuristic.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default = "default_tol_step")]
    pub tol_step: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    /// Upper bound on the step; `None` uses the spectral-radius estimate.
    #[serde(default)]
    pub dt_max: Option<f64>,
    /// Time between observable records; `None` records only the endpoints.
    #[serde(default)]
    pub record_every: Option<f64>,
    /// Store the state every this many records; 0 stores none.
    #[serde(default)]
    pub snapshot_every: usize,
}

impl EvolveControls {
    pub fn new(t_final: f64) -> Self {
        EvolveControls {
            dt: None,
            t_final,
            tol_step: default_tol_step(),
            dt_min: default_dt_min(),
            dt_max: None,
            record_every: None,
            snapshot_every: 0,
        }
    }

    pub fn with_tol(mut self, tol_step: f64) -> Self {
        self.tol_step = tol_step;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_record_every(mut self, every: f64) -> Self {
        self.record_every = Some(every);
        self
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::invalid("t_final must be finite and non-negative"));
        }
        if !positive(self.tol_step) {
            return Err(Error::invalid("tol_step must be positive"));
        }
        if !(self.dt_min.is_finite() && self.dt_min >= 0.0) {
            return Err(Error::invalid("dt_min must be non-negative"));
        }
        if let Some(dt) = self.dt {
            if !positive(dt) || dt <= self.dt_min {
                return Err(Error::invalid("dt must be positive and exceed dt_min"));
            }
        }
        if let Some(m) = self.dt_max {
            if !positive(m) {
                return Err(Error::invalid("dt_max must be positive"));
            }
        }
        if let Some(r) = self.record_every {
            if !positive(r) {
                return Err(Error::invalid("record_every must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    /// Index of the record taken at the same time.
    pub record: usize,
    pub psi: WaveFunction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<ObservableRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: WaveFunction,
    pub stats: StepStats,
}

/// Diagnostic attached to a stiffness failure; `partial` holds everything up to the failure.
#[derive(Debug)]
pub struct StiffnessReport {
    pub t: f64,
    pub dt: f64,
    pub max_abs_h_i: f64,
    pub spectral_radius: f64,
    pub partial: Trajectory,
}

fn rhs(model: &dyn Dynamics, psi: &[Complex64], grid: Grid) -> Result<Vec<Complex64>> {
    let h = model.hamiltonian(&ComplexField::from_raw(grid, psi.to_vec()))?;
    let minus_i = Complex64::new(0.0, -1.0);
    let out: Vec<Complex64> = h.into_values().into_iter().map(|z| z * minus_i).collect();
    Ok(out)
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(&yi, &xi)| yi + xi * a).collect()
}

fn rk4_with_k1(model: &dyn Dynamics, psi: &[Complex64], k1: &[Complex64], dt: f64, grid: Grid) -> Result<Vec<Complex64>> {
    let k2 = rhs(model, &axpy(psi, 0.5 * dt, k1), grid)?;
    let k3 = rhs(model, &axpy(psi, 0.5 * dt, &k2), grid)?;
    let k4 = rhs(model, &axpy(psi, dt, &k3), grid)?;
    let w = dt / 6.0;
    Ok((0..psi.len())
        .map(|i| psi[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w)
        .collect())
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn as_step_failure(t: f64, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::StepFailure { t, reason: format!("non-finite value in {what}") },
        other => other,
    }
}

/// One classical fourth-order Runge-Kutta step of `dPsi/dt = -i H Psi`.
pub fn step_rk4(psi: &WaveFunction, model: &dyn Dynamics, dt: f64) -> Result<WaveFunction> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let grid = psi.grid();
    crate::fields::ensure_same_grid(grid, model.grid())?;
    let step = || -> Result<Vec<Complex64>> {
        let k1 = rhs(model, psi.values(), grid)?;
        rk4_with_k1(model, psi.values(), &k1, dt, grid)
    };
    let next = step().map_err(|e| as_step_failure(0.0, e))?;
    if !all_finite(&next) {
        return Err(Error::StepFailure { t: 0.0, reason: "non-finite state after step".into() });
    }
    Ok(WaveFunction::from_field_unchecked(ComplexField::from_raw(grid, next)))
}

/// Power-iteration estimate of the largest `|lambda|` of the right-hand side Jacobian
/// at `psi`, bounded below by the exact linear kinetic rate `k_max^2 / 2` summed over axes.
///
/// Probe directions are weighted by `|psi|`, so they perturb the state relatively, the
/// way roundoff does. An absolute perturbation would fill in nodes, where the phase
/// functionals are not differentiable, and report rates the evolution never sees.
pub fn spectral_radius_estimate(psi: &WaveFunction, model: &dyn Dynamics, iterations: usize) -> Result<f64> {
    let grid = psi.grid();
    let base = rhs(model, psi.values(), grid)?;
    let psi_norm = psi.field().l2_norm().max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let peak = psi.values().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let weight: Vec<f64> = psi.values().iter().map(|z| z.norm() / peak).collect();
    let mut estimate: f64 = 0.0;
    for _ in 0..iterations {
        v.iter_mut().zip(&weight).for_each(|(z, w)| *z *= w);
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let eps = 1e-7 * psi_norm / grid.cell_volume().sqrt();
        let shifted = axpy(psi.values(), eps, &v);
        let f = match rhs(model, &shifted, grid) {
            Ok(f) => f,
            Err(_) => break,
        };
        let jv: Vec<Complex64> = f.iter().zip(&base).map(|(a, b)| (a - b) / eps).collect();
        let r = norm(&jv);
        if !r.is_finite() {
            break;
        }
        estimate = r;
        v = jv;
    }
    let k2: f64 = grid.k_max().powi(2) * grid.dims() as f64;
    Ok(estimate.max(0.5 * k2))
}

/// Initial-step heuristic `min(0.2 dx^2, 0.05 dx^4 / |C|)`.
pub fn initial_dt(grid: Grid, coupling_scale: f64) -> f64 {
    let dx = grid.dx();
    (0.2 * dx * dx).min(0.05 * dx.powi(4) / (coupling_scale + 1e-300))
}

struct Recorder<'a> {
    model: &'a dyn Dynamics,
    snapshot_every: usize,
    times: Vec<f64>,
    records: Vec<ObservableRecord>,
    snapshots: Vec<Snapshot>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, psi: &WaveFunction) -> Result<()> {
        let rec = self.model.observe(t, psi)?;
        if !rec.seam_decayed && self.records.iter().all(|r| r.seam_decayed) {
            log::warn!("state reaches the periodic seam at t={t}");
        }
        let index = self.records.len();
        if self.snapshot_every > 0 && index % self.snapshot_every == 0 {
            self.snapshots.push(Snapshot { t, record: index, psi: psi.clone() });
        }
        self.times.push(t);
        self.records.push(rec);
        Ok(())
    }

    fn finish(self, final_state: WaveFunction, stats: StepStats) -> Trajectory {
        Trajectory { times: self.times, records: self.records, snapshots: self.snapshots, final_state, stats }
    }
}

/// Integrates from `t = 0` to `controls.t_final`, recording observables at every
/// multiple of `record_every` and at both endpoints.
pub fn evolve(psi: &WaveFunction, model: &dyn Dynamics, controls: &EvolveControls) -> Result<Trajectory> {
    controls.validate()?;
    let grid = psi.grid();
    crate::fields::ensure_same_grid(grid, model.grid())?;

    let radius = spectral_radius_estimate(psi, model, 30)?;
    let dt_cap = controls.dt_max.unwrap_or(2.0 / radius);
    let mut dt = controls.dt.unwrap_or_else(|| initial_dt(grid, model.coupling_scale())).min(dt_cap);
    log::debug!("evolve: spectral radius ~ {radius:e}, dt cap {dt_cap:e}, initial dt {dt:e}");

    let mut rec = Recorder {
        model,
        snapshot_every: controls.snapshot_every,
        times: Vec::new(),
        records: Vec::new(),
        snapshots: Vec::new(),
    };
    rec.record(0.0, psi)?;

    let t_final = controls.t_final;
    let mut sample_index = 1usize;
    let next_sample = |k: usize| match controls.record_every {
        Some(every) => (k as f64 * every).min(t_final),
        None => t_final,
    };

    let mut t = 0.0;
    let mut state: Vec<Complex64> = psi.values().to_vec();
    let mut stats = StepStats::default();
    let mut streak = 0usize;

    while t < t_final {
        let target = next_sample(sample_index);
        let remaining = target - t;
        let clamped = dt >= remaining * (1.0 - 1e-12);
        let h = if clamped { remaining } else { dt };

        let attempt = (|| -> Result<(Vec<Complex64>, f64)> {
            let k1 = rhs(model, &state, grid)?;
            let coarse = rk4_with_k1(model, &state, &k1, h, grid)?;
            let mid = rk4_with_k1(model, &state, &k1, 0.5 * h, grid)?;
            let k1_mid = rhs(model, &mid, grid)?;
            let fine = rk4_with_k1(model, &mid, &k1_mid, 0.5 * h, grid)?;
            if !all_finite(&fine) || !all_finite(&coarse) {
                return Err(Error::NonFinite("time step"));
            }
            let err = (fine.iter().zip(&coarse).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * grid.cell_volume()).sqrt();
            Ok((fine, err))
        })();

        let accepted = match attempt {
            Ok((fine, err)) if err < controls.tol_step => Some(fine),
            Ok(_) => None,
            Err(Error::NonFinite(_)) => None,
            Err(e) => return Err(e),
        };

        match accepted {
            Some(next) => {
                state = next;
                stats.accepted += 1;
                streak += 1;
                if clamped {
                    t = target;
                    let wf = WaveFunction::from_field_unchecked(ComplexField::from_raw(grid, state.clone()));
                    rec.record(t, &wf)?;
                    sample_index += 1;
                } else {
                    t += h;
                }
                if streak >= 10 {
                    dt = (dt * 1.5).min(dt_cap);
                    streak = 0;
                }
            }
            None => {
                stats.rejected += 1;
                streak = 0;
                dt = 0.5 * h;
                if dt < controls.dt_min {
                    let wf = WaveFunction::from_field_unchecked(ComplexField::from_raw(grid, state));
                    let report = StiffnessReport {
                        t,
                        dt,
                        max_abs_h_i: model.max_abs_h_i(&wf),
                        spectral_radius: spectral_radius_estimate(&wf, model, 30).unwrap_or(f64::NAN),
                        partial: rec.finish(wf, stats),
                    };
                    return Err(Error::Stiffness(Box::new(report)));
                }
            }
        }
    }

    let final_state = WaveFunction::from_field_unchecked(ComplexField::from_raw(grid, state));
    Ok(rec.finish(final_state, stats))
}
