//! Phase-nonlinear Schrödinger dynamics on periodic grids.
//!
//! The crate evolves `i dPsi/dt = (-Delta/2 + V) Psi + (h_r + i h_i) Psi` for
//! a family of models whose nonlinearity depends only on derivatives of the
//! phase `S` of `Psi = R exp(iS)`, and measures the structural properties of
//! that flow: conservation laws, Ehrenfest corrections, Galilean covariance,
//! time-reversal behaviour and the separability of two-particle extensions.
//!
//! Units are `hbar = m = 1` throughout; [`units`] converts physical couplings.

pub mod error;
pub mod fields;
pub mod integrator;
pub mod models;
pub mod observables;
pub mod presets;
pub mod twobody;
pub mod units;
pub mod verify;
pub mod wavefunction;

pub use error::{Error, Result};
pub use fields::{ComplexField, DiffMethod, Grid, ScalarField};
pub use integrator::{evolve, step_rk4, Dynamics, EvolveControls, Trajectory};
pub use models::{KnTerm, Model, ModelKind, ModelSpec, NonlinearTerms, PotentialSpec};
pub use observables::ObservableRecord;
pub use twobody::{TwoBody, TwoBodyModel, TwoBodyState, TwoBodyVariant};
pub use wavefunction::{HydroView, WaveFunction};
