//! Periodic uniform grids and the operators acting on fields sampled on them.
//!
//! A [`Grid`] covers the box `[-L/2, L/2)^dims` with `n` points per axis, so
//! `x_j = -L/2 + j*dx`. Index arithmetic wraps modulo `n`. Two-dimensional
//! fields are stored row-major: the flat index is `i0 * n + i1`, with axis 1
//! contiguous.
//!
//! Differential operators come in two flavours ([`DiffMethod`]): spectral
//! (FFT multipliers, exact for band-limited fields) and `Fd2`, the standard
//! second-order centred stencils with periodic wrap.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest per-axis resolution accepted for two-dimensional grids.
pub const MAX_N_2D: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dims: usize,
    n: usize,
    length: f64,
}

/// Serialized form of a [`Grid`]; validated on conversion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: usize,
    pub n: usize,
    pub length: f64,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.dims, spec.n, spec.length)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec { dims: g.dims, n: g.n, length: g.length }
    }
}

impl Grid {
    pub fn new(dims: usize, n: usize, length: f64) -> Result<Self> {
        if dims != 1 && dims != 2 {
            return Err(Error::invalid(format!("grid dims must be 1 or 2, got {dims}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("points per axis must be a power of two >= 8, got {n}")));
        }
        if dims == 2 && n > MAX_N_2D {
            return Err(Error::invalid(format!("2D grids are limited to n <= {MAX_N_2D}, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("box length must be positive and finite, got {length}")));
        }
        Ok(Grid { dims, n, length })
    }

    pub fn one_d(n: usize, length: f64) -> Result<Self> {
        Grid::new(1, n, length)
    }

    pub fn two_d(n: usize, length: f64) -> Result<Self> {
        Grid::new(2, n, length)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `dx^dims`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dims as i32)
    }

    /// Highest resolved wavenumber `pi / dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Box-centred coordinates along one axis.
    pub fn axis_coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|j| -0.5 * self.length + j as f64 * dx).collect()
    }

    /// Angular wavenumbers in FFT order (`0, 1, ..., n/2-1, -n/2, ..., -1` times `2pi/L`).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * PI / self.length;
        (0..n).map(|j| if j < n / 2 { j } else { j - n } as f64 * dk).collect()
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dims - 1 - axis) as u32)
    }

    /// Per-axis index of a flat index.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    /// Coordinate of a flat index along `axis`.
    pub fn coordinate(&self, flat: usize, axis: usize) -> f64 {
        -0.5 * self.length + self.axis_index(flat, axis) as f64 * self.dx()
    }

    fn neighbour(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let c = (flat / stride) % self.n;
        let shifted = (c as isize + offset).rem_euclid(self.n as isize) as usize;
        flat + shifted * stride - c * stride
    }

    /// Flat indices lying on the periodic seam (first or last point along some axis).
    pub fn seam_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| (0..self.dims).any(|a| {
                let c = self.axis_index(i, a);
                c == 0 || c == self.n - 1
            }))
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D grid n={} L={}", self.dims, self.n, self.length)
    }
}

/// Scalar type stored in a [`Field`].
pub trait Sample: Copy + Default + Send + Sync + fmt::Debug + 'static {
    fn to_complex(self) -> Complex64;
    /// Projects a complex value back; real samples keep the real part.
    fn from_complex(z: Complex64) -> Self;
    fn is_finite(self) -> bool;
    fn abs_sq(self) -> f64;
    fn scale(self, a: f64) -> Self;
    fn add(self, other: Self) -> Self;
}

impl Sample for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, a: f64) -> Self {
        self * a
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
}

impl Sample for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, a: f64) -> Self {
        self * a
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
}

/// Values sampled on every point of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values supplied for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field construction"));
        }
        Ok(Field { grid, values })
    }

    /// Skips the finiteness scan; callers check the final result instead.
    pub(crate) fn from_raw(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let mut x = vec![0.0; grid.dims()];
        let values = (0..grid.len())
            .map(|i| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.coordinate(i, a);
                }
                f(&x)
            })
            .collect();
        Field { grid, values }
    }

    pub fn constant(grid: Grid, value: T) -> Self {
        Field { grid, values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, T::default())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(self, what: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Sample, V: Sample>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Result<Field<V>> {
        ensure_same_grid(self.grid, other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| v.scale(a))
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a.add(b))
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a.add(b.scale(-1.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs_sq()).fold(0.0, f64::max).sqrt()
    }

    /// `(integral of |f|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.abs_sq()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `(integral of |f - g|^2)^(1/2)`.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.minus(other)?.l2_norm())
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| v.to_complex())
    }
}

impl ScalarField {
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ComplexField {
    pub fn re(&self) -> ScalarField {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> ScalarField {
        self.map(|z| z.im)
    }

    pub fn norm_sqr(&self) -> ScalarField {
        self.map(|z| z.norm_sqr())
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|z| z.conj())
    }

    pub fn mul_real(&self, f: &ScalarField) -> Result<ComplexField> {
        self.zip_map(f, |z, a| z * a)
    }

    pub fn scaled_complex(&self, a: Complex64) -> ComplexField {
        self.map(|z| z * a)
    }
}

pub(crate) fn ensure_same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{a} vs {b}")))
    }
}

/// Trapezoidal quadrature on the periodic grid: `dx^dims * sum(values)`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMethod {
    #[default]
    Spectral,
    Fd2,
}

// ---------------------------------------------------------------------------
// FFT plumbing

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// In-place multi-dimensional DFT. The inverse is normalized by the point count.
fn transform(grid: Grid, data: &mut [Complex64], direction: FftDirection) {
    let fft = plan(grid.n(), direction);
    // Rows (the contiguous axis) first; for 2D transpose and repeat.
    fft.process(data);
    if grid.dims() == 2 {
        transpose_square(data, grid.n());
        fft.process(data);
        transpose_square(data, grid.n());
    }
    if direction == FftDirection::Inverse {
        let scale = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Forward DFT coefficients of a field (unnormalized, FFT order).
pub fn fft<T: Sample>(f: &Field<T>) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = f.values.iter().map(|v| v.to_complex()).collect();
    transform(f.grid, &mut data, FftDirection::Forward);
    data
}

/// Inverse of [`fft`].
pub fn ifft(grid: Grid, coeffs: &[Complex64]) -> Result<ComplexField> {
    if coeffs.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} coefficients for {}", coeffs.len(), grid)));
    }
    let mut data = coeffs.to_vec();
    transform(grid, &mut data, FftDirection::Inverse);
    ComplexField::new(grid, data)
}

/// Fourier coefficients of a field, reusable for several derivatives.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
    k: Vec<f64>,
}

impl Spectrum {
    pub fn of<T: Sample>(f: &Field<T>) -> Self {
        Spectrum { grid: f.grid, coeffs: fft(f), k: f.grid.wavenumbers() }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Applies a multiplier `m(k)` and transforms back.
    pub fn apply(&self, multiplier: impl Fn(&[f64]) -> Complex64) -> ComplexField {
        let g = self.grid;
        let mut kv = vec![0.0; g.dims()];
        let mut data: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                for (a, ka) in kv.iter_mut().enumerate() {
                    *ka = self.k[g.axis_index(i, a)];
                }
                c * multiplier(&kv)
            })
            .collect();
        transform(g, &mut data, FftDirection::Inverse);
        Field::from_raw(g, data)
    }

    /// First derivative along `axis`. The Nyquist mode is dropped so that real
    /// fields stay real.
    pub fn derivative(&self, axis: usize) -> ComplexField {
        let nyquist = -(self.grid.n() as f64) * PI / self.grid.length();
        self.apply(|k| {
            let ka = k[axis];
            if ka == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ka)
            }
        })
    }

    pub fn second_derivative(&self, axis: usize) -> ComplexField {
        self.apply(|k| Complex64::new(-k[axis] * k[axis], 0.0))
    }

    pub fn laplacian(&self) -> ComplexField {
        self.apply(|k| Complex64::new(-k.iter().map(|v| v * v).sum::<f64>(), 0.0))
    }

    pub fn bilaplacian(&self) -> ComplexField {
        self.apply(|k| {
            let k2: f64 = k.iter().map(|v| v * v).sum();
            Complex64::new(k2 * k2, 0.0)
        })
    }

    /// All first derivatives followed by the Laplacian, sharing this transform.
    pub fn gradient(&self) -> Vec<ComplexField> {
        (0..self.grid.dims()).map(|a| self.derivative(a)).collect()
    }
}

// ---------------------------------------------------------------------------
// Finite differences

fn fd_first<T: Sample>(f: &Field<T>, axis: usize) -> Field<T> {
    let g = f.grid;
    let inv = 0.5 / g.dx();
    let values = (0..g.len())
        .map(|i| {
            let up = f.values[g.neighbour(i, axis, 1)];
            let down = f.values[g.neighbour(i, axis, -1)];
            up.add(down.scale(-1.0)).scale(inv)
        })
        .collect();
    Field::from_raw(g, values)
}

fn fd_second<T: Sample>(f: &Field<T>, axis: usize) -> Field<T> {
    let g = f.grid;
    let inv = 1.0 / (g.dx() * g.dx());
    let values = (0..g.len())
        .map(|i| {
            let up = f.values[g.neighbour(i, axis, 1)];
            let down = f.values[g.neighbour(i, axis, -1)];
            up.add(down).add(f.values[i].scale(-2.0)).scale(inv)
        })
        .collect();
    Field::from_raw(g, values)
}

fn check_axis(grid: Grid, axis: usize) -> Result<()> {
    if axis < grid.dims() {
        Ok(())
    } else {
        Err(Error::invalid(format!("axis {axis} out of range for {grid}")))
    }
}

fn validate<T: Sample>(f: &Field<T>) -> Result<()> {
    if f.values.len() != f.grid.len() {
        return Err(Error::GridMismatch(format!("{} values on {}", f.values.len(), f.grid)));
    }
    Ok(())
}

fn project<T: Sample>(z: ComplexField) -> Field<T> {
    let grid = z.grid;
    Field::from_raw(grid, z.values.into_iter().map(T::from_complex).collect())
}

/// Zeroes every Fourier mode with `|k_a| > (2/3) k_max` on some axis.
pub fn dealias(f: &ComplexField) -> ComplexField {
    let cut = 2.0 / 3.0 * f.grid.k_max();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Spectrum::of(f).apply(|k| if k.iter().all(|v| v.abs() <= cut) { one } else { zero })
}

/// First derivative along one axis.
pub fn derivative<T: Sample>(f: &Field<T>, axis: usize, method: DiffMethod) -> Result<Field<T>> {
    validate(f)?;
    check_axis(f.grid, axis)?;
    let out = match method {
        DiffMethod::Spectral => project(Spectrum::of(f).derivative(axis)),
        DiffMethod::Fd2 => fd_first(f, axis),
    };
    out.check_finite("derivative")
}

/// Second derivative along one axis (a partial Laplacian).
pub fn second_derivative<T: Sample>(f: &Field<T>, axis: usize, method: DiffMethod) -> Result<Field<T>> {
    validate(f)?;
    check_axis(f.grid, axis)?;
    let out = match method {
        DiffMethod::Spectral => project(Spectrum::of(f).second_derivative(axis)),
        DiffMethod::Fd2 => fd_second(f, axis),
    };
    out.check_finite("second_derivative")
}

pub fn laplacian<T: Sample>(f: &Field<T>, method: DiffMethod) -> Result<Field<T>> {
    validate(f)?;
    let out = match method {
        DiffMethod::Spectral => project(Spectrum::of(f).laplacian()),
        DiffMethod::Fd2 => {
            let mut acc = fd_second(f, 0);
            for axis in 1..f.grid.dims() {
                acc = acc.plus(&fd_second(f, axis))?;
            }
            acc
        }
    };
    out.check_finite("laplacian")
}

pub fn gradient<T: Sample>(f: &Field<T>, method: DiffMethod) -> Result<Vec<Field<T>>> {
    validate(f)?;
    match method {
        DiffMethod::Spectral => {
            let spec = Spectrum::of(f);
            (0..f.grid.dims())
                .map(|a| project::<T>(spec.derivative(a)).check_finite("gradient"))
                .collect()
        }
        DiffMethod::Fd2 => (0..f.grid.dims()).map(|a| fd_first(f, a).check_finite("gradient")).collect(),
    }
}

/// `sum_i d(v_i)/dx_i` for a vector field given by components.
pub fn divergence(components: &[ScalarField], method: DiffMethod) -> Result<ScalarField> {
    let first = components.first().ok_or_else(|| Error::invalid("divergence of an empty vector field"))?;
    let grid = first.grid;
    if components.len() != grid.dims() {
        return Err(Error::invalid(format!(
            "{} components supplied for a {}D grid",
            components.len(),
            grid.dims()
        )));
    }
    let mut acc = ScalarField::zeros(grid);
    for (axis, c) in components.iter().enumerate() {
        acc = acc.plus(&derivative(c, axis, method)?)?;
    }
    Ok(acc)
}

/// `Delta^2 f`, spectral only.
pub fn bilaplacian<T: Sample>(f: &Field<T>) -> Result<Field<T>> {
    validate(f)?;
    project::<T>(Spectrum::of(f).bilaplacian()).check_finite("bilaplacian")
}

/// Periodic translation `f(x - shift)` by a Fourier phase; sub-grid shifts are exact for
/// band-limited fields.
pub fn translate<T: Sample>(f: &Field<T>, shift: &[f64]) -> Result<Field<T>> {
    validate(f)?;
    if shift.len() != f.grid.dims() {
        return Err(Error::invalid("shift vector length must equal grid dims"));
    }
    let out = Spectrum::of(f).apply(|k| {
        let phase: f64 = k.iter().zip(shift).map(|(ka, sa)| ka * sa).sum();
        Complex64::from_polar(1.0, -phase)
    });
    project::<T>(out).check_finite("translate")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_2pi(n: usize) -> Grid {
        Grid::one_d(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn grid_rejects_bad_resolution() {
        assert!(Grid::one_d(4, 1.0).is_err());
        assert!(Grid::one_d(100, 1.0).is_err());
        assert!(Grid::one_d(64, 0.0).is_err());
        assert!(Grid::two_d(1024, 1.0).is_err());
        assert!(Grid::new(3, 16, 1.0).is_err());
        let g = Grid::two_d(16, 4.0).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.len(), 256);
    }

    #[test]
    fn field_rejects_wrong_length_and_nan() {
        let g = grid_2pi(8);
        assert!(matches!(ScalarField::new(g, vec![0.0; 7]), Err(Error::GridMismatch(_))));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn neighbours_wrap() {
        let g = Grid::two_d(8, 1.0).unwrap();
        // (0, 0) -> axis 0 down wraps to (7, 0); axis 1 down wraps to (0, 7)
        assert_eq!(g.neighbour(0, 0, -1), 7 * 8);
        assert_eq!(g.neighbour(0, 1, -1), 7);
        assert_eq!(g.neighbour(7 * 8 + 7, 1, 1), 7 * 8);
    }

    #[test]
    fn spectral_laplacian_of_sine() {
        let g = Grid::one_d(64, 2.0 * PI).unwrap();
        // shift the box so that it is [0, 2pi); sin is periodic either way
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let lap = laplacian(&f, DiffMethod::Spectral).unwrap();
        let err = lap.plus(&f).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = Grid::two_d(16, 3.0).unwrap();
        let f = ScalarField::constant(g, 2.5);
        for m in [DiffMethod::Spectral, DiffMethod::Fd2] {
            assert_eq!(laplacian(&f, m).unwrap().max_abs(), 0.0);
            for d in gradient(&f, m).unwrap() {
                assert!(d.max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_of_fourier_mode() {
        let g = grid_2pi(32);
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x[0]));
        let lap = laplacian(&f, DiffMethod::Spectral).unwrap();
        let err = lap.plus(&f.scaled(4.0)).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn gradient_of_sine() {
        let g = grid_2pi(64);
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let d = &gradient(&f, DiffMethod::Spectral).unwrap()[0];
        let cos = ScalarField::from_fn(g, |x| x[0].cos());
        assert!(d.minus(&cos).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn fd2_matches_stencil_by_hand() {
        let g = Grid::one_d(8, 8.0).unwrap();
        let f = ScalarField::new(g, vec![0.0, 1.0, 4.0, 9.0, 16.0, 9.0, 4.0, 1.0]).unwrap();
        let lap = laplacian(&f, DiffMethod::Fd2).unwrap();
        assert_eq!(lap.values()[0], 1.0 + 1.0);
        assert_eq!(lap.values()[2], 9.0 - 8.0 + 1.0);
        let d = derivative(&f, 0, DiffMethod::Fd2).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.values()[1], 2.0);
    }

    #[test]
    fn integrate_constant_and_sine() {
        let g = Grid::one_d(32, 7.5).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 7.5).abs() < 1e-14);
        let g = grid_2pi(64);
        let s = ScalarField::from_fn(g, |x| x[0].sin());
        assert!(integrate(&s).abs() < 1e-12);
    }

    #[test]
    fn normalized_gaussian_integrates_to_one() {
        let g = Grid::one_d(256, 20.0).unwrap();
        let sigma: f64 = 0.5;
        let norm = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
        let rho = ScalarField::from_fn(g, |x| norm * (-x[0] * x[0] / (2.0 * sigma * sigma)).exp());
        assert!((integrate(&rho) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_d_spectral_laplacian_separates() {
        let g = Grid::two_d(32, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin() * (3.0 * x[1]).cos());
        let lap = laplacian(&f, DiffMethod::Spectral).unwrap();
        let err = lap.plus(&f.scaled(13.0)).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
        let d0 = second_derivative(&f, 0, DiffMethod::Spectral).unwrap();
        assert!(d0.plus(&f.scaled(4.0)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn translate_moves_a_mode() {
        let g = grid_2pi(32);
        let f = ScalarField::from_fn(g, |x| x[0].cos());
        let shifted = translate(&f, &[0.3]).unwrap();
        let expect = ScalarField::from_fn(g, |x| (x[0] - 0.3).cos());
        assert!(shifted.minus(&expect).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn divergence_checks_component_count() {
        let g = Grid::two_d(8, 1.0).unwrap();
        let c = ScalarField::zeros(g);
        assert!(divergence(&[c.clone()], DiffMethod::Spectral).is_err());
        assert!(divergence(&[c.clone(), c], DiffMethod::Spectral).is_ok());
    }

    #[test]
    fn grid_spec_conversion_validates() {
        assert!(Grid::try_from(GridSpec { dims: 1, n: 12, length: 1.0 }).is_err());
        let g = Grid::try_from(GridSpec { dims: 2, n: 16, length: 3.0 }).unwrap();
        assert_eq!(GridSpec::from(g).n, 16);
    }
}
