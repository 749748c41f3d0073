//! Pseudospectral calculus on the unit flat torus `R^2 / Z^2`.
//!
//! Fields are stored as `n x n` samples in row-major order; row `i` holds the
//! samples at `x = i h` and column `j` the samples at `y = j h`, with `h = 1/n`.
//! The torus has area one, so the grid mean and the integral coincide.
//!
//! Spectral operators transform on demand. Fourier mode `(k, l)` of the
//! discrete transform is an eigenfunction of `-Δ` with eigenvalue
//! `4π²(k² + l²)`, where `k, l` range over `-n/2 .. n/2`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest nonzero eigenvalue of `-Δ` on the unit flat torus.
pub const MU1: f64 = 4.0 * PI * PI;

/// Area of the unit torus.
pub const AREA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Uniform periodic sampling of `[0,1)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        Ok(TorusGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of samples, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        let h = self.h();
        Point::new(i as f64 * h, j as f64 * h)
    }

    /// Signed wavenumber of FFT index `j`.
    pub(crate) fn wavenumber(&self, j: usize) -> f64 {
        if j < self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        }
    }

    /// `-Δ` multiplier of spectral index `(a, b)`.
    pub(crate) fn symbol(&self, a: usize, b: usize) -> f64 {
        let k = self.wavenumber(a);
        let l = self.wavenumber(b);
        4.0 * PI * PI * (k * k + l * l)
    }
}

/// How the Dirichlet energy of a field is evaluated.
///
/// Fields with a gradient discontinuity (the truncated bubbles) ring under
/// the spectral sum; those use centered finite differences instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    Smooth,
    Kinked,
}

impl Regularity {
    fn join(self, other: Regularity) -> Regularity {
        if self == Regularity::Kinked || other == Regularity::Kinked {
            Regularity::Kinked
        } else {
            Regularity::Smooth
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
    regularity: Regularity,
}

impl Field {
    pub fn zeros(grid: TorusGrid) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
            regularity: Regularity::Smooth,
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F: Fn(Point) -> f64>(grid: TorusGrid, f: F) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.point(i, j)));
            }
        }
        Field {
            grid,
            values,
            regularity: Regularity::Smooth,
        }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Field {
            grid,
            values,
            regularity: Regularity::Smooth,
        })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<f64>, regularity: Regularity) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field {
            grid,
            values,
            regularity,
        }
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            regularity: self.regularity,
        }
    }

    /// Pointwise product.
    pub fn mul_pointwise(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Field {
        assert_eq!(
            self.grid, other.grid,
            "fields on different grids cannot be combined"
        );
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            regularity: self.regularity.join(other.regularity),
        }
    }

    /// L² inner product `∫ f g`.
    pub fn dot(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid);
        let h = self.grid.h();
        h * h * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Writes the text field format: `n` on the first line, then `n` rows of
    /// `n` space-separated values with 17 significant digits.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        let n = self.grid.n();
        writeln!(w, "{n}")?;
        for row in self.values.chunks(n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Field> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))??;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid size line {header:?}")))?;
        let grid = TorusGrid::new(n)?;
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {row}")))??;
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value {tok:?} in row {row}")))?;
                values.push(v);
            }
            if values.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {row} has {} values, expected {n}",
                    values.len() - before
                )));
            }
        }
        Field::from_values(grid, values)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Field> {
        Field::read_from(std::fs::File::open(path)?)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

/// Zero-mean tolerance: `1e-12 * (1 + max|values|)`.
pub fn mean_zero_tolerance(f: &Field) -> f64 {
    1e-12 * (1.0 + f.max_abs())
}

/// A field with zero mean, i.e. an element of the energy space.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanZeroField(Field);

impl MeanZeroField {
    /// Accepts `f` if its mean is within tolerance of zero.
    pub fn new(f: Field) -> Result<Self> {
        let mean = f.mean();
        let tol = mean_zero_tolerance(&f);
        if mean.abs() > tol {
            return Err(Error::NotMeanZero { mean, tol });
        }
        Ok(MeanZeroField(f))
    }

    /// Subtracts the mean.
    pub fn project(f: Field) -> Self {
        let m = f.mean();
        MeanZeroField(f.map(|v| v - m))
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        MeanZeroField(Field::zeros(grid))
    }

    pub(crate) fn from_field_unchecked(f: Field) -> Self {
        MeanZeroField(f)
    }

    pub fn as_field(&self) -> &Field {
        &self.0
    }

    pub fn into_field(self) -> Field {
        self.0
    }

    pub fn with_regularity(self, regularity: Regularity) -> Self {
        MeanZeroField(self.0.with_regularity(regularity))
    }

    pub fn scaled(&self, a: f64) -> MeanZeroField {
        MeanZeroField(&self.0 * a)
    }

    pub fn neg(&self) -> MeanZeroField {
        MeanZeroField(-&self.0)
    }

    /// `a * self + b * other`; the result stays in the zero-mean space.
    pub fn lin_comb(&self, a: f64, other: &MeanZeroField, b: f64) -> MeanZeroField {
        MeanZeroField(self.0.lin_comb(a, &other.0, b))
    }
}

impl Deref for MeanZeroField {
    type Target = Field;
    fn deref(&self) -> &Field {
        &self.0
    }
}

impl TryFrom<Field> for MeanZeroField {
    type Error = Error;
    fn try_from(f: Field) -> Result<Self> {
        MeanZeroField::new(f)
    }
}

/// Forward/inverse 2-D transforms for one grid size.
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward transform of real samples.
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Inverse transform (normalized by `1/n^2`), keeping the real part.
    pub(crate) fn inverse_real(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut spec, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        spec.into_iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        fft.process(buf);
        transpose(buf, n);
        fft.process(buf);
        transpose(buf, n);
    }
}

fn transpose(buf: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Applies the Fourier multiplier `m(symbol)` to `values`.
fn apply_multiplier<M: Fn(f64) -> f64>(grid: TorusGrid, values: &[f64], m: M) -> Vec<f64> {
    let n = grid.n();
    let fft = Fft2::new(n);
    let mut spec = fft.forward(values);
    for a in 0..n {
        for b in 0..n {
            spec[a * n + b] *= m(grid.symbol(a, b));
        }
    }
    fft.inverse_real(spec)
}

/// `∫_M f`, i.e. `h^2 Σ values`.
pub fn integrate(f: &Field) -> f64 {
    let h = f.grid().h();
    h * h * f.values().iter().sum::<f64>()
}

/// Geodesic distance on the unit flat torus.
pub fn torus_distance(p: Point, q: Point) -> f64 {
    let wrap = |a: f64, b: f64| {
        let d = (a - b).abs().rem_euclid(1.0);
        d.min(1.0 - d)
    };
    let dx = wrap(p.x, q.x);
    let dy = wrap(p.y, q.y);
    (dx * dx + dy * dy).sqrt()
}

/// Spectral `-Δ`.
pub fn minus_laplacian(u: &Field) -> Field {
    let values = apply_multiplier(u.grid(), u.values(), |s| s);
    Field::from_raw(u.grid(), values, u.regularity())
}

/// Spectral `(-Δ)^{-1}` on zero-mean input; the constant mode is dropped.
pub fn inv_minus_laplacian(f: &Field) -> Result<MeanZeroField> {
    let mean = f.mean();
    let tol = mean_zero_tolerance(f);
    if mean.abs() > tol {
        return Err(Error::NotMeanZero { mean, tol });
    }
    Ok(inv_minus_laplacian_unchecked(f))
}

pub(crate) fn inv_minus_laplacian_unchecked(f: &Field) -> MeanZeroField {
    let values = apply_multiplier(f.grid(), f.values(), |s| if s > 0.0 { 1.0 / s } else { 0.0 });
    MeanZeroField::from_field_unchecked(Field::from_raw(f.grid(), values, Regularity::Smooth))
}

/// `∫ |∇u|^2` by the spectral sum (Parseval).
pub fn spectral_dirichlet(u: &Field) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let spec = Fft2::new(n).forward(u.values());
    let norm = 1.0 / ((n * n) as f64 * (n * n) as f64);
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += grid.symbol(a, b) * spec[a * n + b].norm_sqr();
        }
    }
    acc * norm
}

/// `∫ |∇u|^2` with centered second-order differences.
pub fn fd_dirichlet(u: &Field) -> f64 {
    let n = u.grid().n();
    let v = u.values();
    let mut acc = 0.0;
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..n {
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            let dx = v[ip * n + j] - v[im * n + j];
            let dy = v[i * n + jp] - v[i * n + jm];
            acc += dx * dx + dy * dy;
        }
    }
    // (δ/2h)^2 weighted by h^2
    acc / 4.0
}

/// `‖u‖² = ∫ |∇u|²`, dispatching on the field's regularity flag.
pub fn h1_norm_sq(u: &Field) -> f64 {
    match u.regularity() {
        Regularity::Smooth => spectral_dirichlet(u),
        Regularity::Kinked => fd_dirichlet(u),
    }
}

/// Smallest nonzero `-Δ` multiplier representable on `grid`.
pub fn first_eigenvalue(grid: TorusGrid) -> f64 {
    let n = grid.n();
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in 0..n {
            let s = grid.symbol(a, b);
            if s > 0.0 && s < best {
                best = s;
            }
        }
    }
    best
}

/// Whether `8π < μ1 |M| < 16π`.
pub fn eigenvalue_assumption_holds(mu1: f64) -> bool {
    let m = mu1 * AREA;
    8.0 * PI < m && m < 16.0 * PI
}
