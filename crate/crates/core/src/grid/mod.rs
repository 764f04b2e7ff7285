//! Sampled functions on a periodic box `[-X, X) x [-Y, Y)`.
//!
//! Values are stored row-major with the first index running over `x` and
//! the second over `y` (or over the dual frequency `eta` once the second
//! axis has been transformed). Everything is complex so that spectral
//! operators and spatial data share one representation.

mod io;
mod sample;

pub use io::{read_binary, read_csv, write_binary, write_csv};
pub use sample::{bilinear, sample_offgrid, Boundary, FourierInterpolant, Scheme};

use std::f64::consts::PI;
use std::fmt;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular periodic sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct Grid2D {
    extent_x: f64,
    extent_y: f64,
    nx: usize,
    ny: usize,
}

/// Serialized form of a [`Grid2D`]; validated on conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub extent_x: f64,
    pub extent_y: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TryFrom<GridParams> for Grid2D {
    type Error = Error;

    fn try_from(p: GridParams) -> Result<Self> {
        Grid2D::new(p.extent_x, p.extent_y, p.nx, p.ny)
    }
}

impl From<Grid2D> for GridParams {
    fn from(g: Grid2D) -> Self {
        GridParams {
            extent_x: g.extent_x,
            extent_y: g.extent_y,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

/// Smallest sample count accepted along either axis.
pub const MIN_SAMPLES: usize = 8;

/// Signed FFT index of bin `m` out of `n` (Nyquist maps to `-n/2`).
#[inline]
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

impl Grid2D {
    pub fn new(extent_x: f64, extent_y: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(extent_x.is_finite() && extent_x > 0.0 && extent_y.is_finite() && extent_y > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive and finite, got ({extent_x}, {extent_y})"
            )));
        }
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < MIN_SAMPLES || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least {MIN_SAMPLES}"
                )));
            }
        }
        Ok(Grid2D {
            extent_x,
            extent_y,
            nx,
            ny,
        })
    }

    pub fn extent_x(&self) -> f64 {
        self.extent_x
    }

    pub fn extent_y(&self) -> f64 {
        self.extent_y
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.extent_x / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.extent_y / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.extent_x + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.extent_y + j as f64 * self.hy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    /// Angular frequency of x-bin `a` in FFT order.
    pub fn xi(&self, a: usize) -> f64 {
        PI * signed_index(a, self.nx) as f64 / self.extent_x
    }

    /// Angular frequency of y-bin `m` in FFT order.
    pub fn eta(&self, m: usize) -> f64 {
        PI * signed_index(m, self.ny) as f64 / self.extent_y
    }

    /// Spacing of the dual `eta` grid.
    pub fn heta(&self) -> f64 {
        PI / self.extent_y
    }

    pub fn xi_nyquist(&self) -> f64 {
        PI * (self.nx / 2) as f64 / self.extent_x
    }

    pub fn eta_nyquist(&self) -> f64 {
        PI * (self.ny / 2) as f64 / self.extent_y
    }

    /// Area of the box, `4XY`.
    pub fn area(&self) -> f64 {
        4.0 * self.extent_x * self.extent_y
    }

    /// Whether a symmetric integration window `|t| <= window` in `x` can be
    /// used without the periodised kernel overlapping itself.
    pub fn window_fits(&self, window: f64) -> bool {
        window < self.extent_x
    }

    pub fn check_window(&self, window: f64) -> Result<()> {
        if self.window_fits(window) {
            Ok(())
        } else {
            Err(Error::WindowTooLarge {
                window,
                extent: self.extent_x,
            })
        }
    }

    /// Same sample counts and x-extent with a different y-extent.
    pub fn with_extent_y(&self, extent_y: f64) -> Result<Self> {
        Grid2D::new(self.extent_x, extent_y, self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}x{}] over [-{}, {}) x [-{}, {})",
            self.nx, self.ny, self.extent_x, self.extent_x, self.extent_y, self.extent_y
        )
    }
}

/// What the second axis of a [`GridFunction2D`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisTag {
    Spatial,
    YSpectral,
}

impl AxisTag {
    pub fn name(&self) -> &'static str {
        match self {
            AxisTag::Spatial => "spatial",
            AxisTag::YSpectral => "y-spectral",
        }
    }
}

/// Exponent of an `L^p` norm, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LpRepr", into = "LpRepr")]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!("L^p exponent must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            Ok(LpExponent::Infinity)
        } else {
            Ok(LpExponent::Finite(p))
        }
    }

    pub fn two() -> Self {
        LpExponent::Finite(2.0)
    }

    pub fn value(&self) -> f64 {
        match self {
            LpExponent::Finite(p) => *p,
            LpExponent::Infinity => f64::INFINITY,
        }
    }
}

/// JSON has no infinity literal, so `p = inf` is written as the string "inf".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LpRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<LpRepr> for LpExponent {
    type Error = Error;
    fn try_from(r: LpRepr) -> Result<Self> {
        match r {
            LpRepr::Number(p) => LpExponent::new(p),
            LpRepr::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(LpExponent::Infinity),
            LpRepr::Text(s) => s
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad L^p exponent `{s}`")))
                .and_then(LpExponent::new),
        }
    }
}

impl From<LpExponent> for LpRepr {
    fn from(p: LpExponent) -> Self {
        match p {
            LpExponent::Finite(p) => LpRepr::Number(p),
            LpExponent::Infinity => LpRepr::Text("inf".into()),
        }
    }
}

impl TryFrom<f64> for LpExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        LpExponent::new(p)
    }
}

impl From<LpExponent> for f64 {
    fn from(p: LpExponent) -> f64 {
        p.value()
    }
}

/// Complex samples of a function on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    grid: Grid2D,
    values: Array2<Complex64>,
    tag: AxisTag,
}

impl GridFunction2D {
    pub fn new(grid: Grid2D, values: Array2<Complex64>, tag: AxisTag) -> Result<Self> {
        if values.dim() != (grid.nx(), grid.ny()) {
            return Err(Error::GridMismatch(format!(
                "values have shape {:?}, grid is {}x{}",
                values.dim(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(GridFunction2D { grid, values, tag })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        GridFunction2D {
            grid,
            values: Array2::zeros((grid.nx(), grid.ny())),
            tag: AxisTag::Spatial,
        }
    }

    /// Samples `f(x, y)` at the grid points.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = grid.xs();
        let ys = grid.ys();
        let values = Array2::from_shape_fn((grid.nx(), grid.ny()), |(i, j)| f(xs[i], ys[j]));
        GridFunction2D {
            grid,
            values,
            tag: AxisTag::Spatial,
        }
    }

    pub fn from_real_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn tag(&self) -> AxisTag {
        self.tag
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[(i, j)]
    }

    pub fn require_spatial(&self) -> Result<()> {
        self.require(AxisTag::Spatial)
    }

    fn require(&self, tag: AxisTag) -> Result<()> {
        if self.tag == tag {
            Ok(())
        } else {
            Err(Error::WrongTag {
                expected: tag.name(),
                found: self.tag.name(),
            })
        }
    }

    /// Pointwise map, keeping grid and tag.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridFunction2D {
            grid: self.grid,
            values: self.values.mapv(f),
            tag: self.tag,
        }
    }

    /// Pointwise modulus as a real-valued grid function.
    pub fn abs(&self) -> Self {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        if self.tag != other.tag {
            return Err(Error::WrongTag {
                expected: self.tag.name(),
                found: other.tag.name(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(GridFunction2D {
            grid: self.grid,
            values: &self.values + &other.values,
            tag: self.tag,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(GridFunction2D {
            grid: self.grid,
            values: &self.values - &other.values,
            tag: self.tag,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max |self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    /// Row `i` (fixed `x_i`) as a vector.
    pub fn row(&self, i: usize) -> Vec<Complex64> {
        self.values.index_axis(Axis(0), i).to_vec()
    }

    /// Rectangle-rule `L^p` norm; for y-spectral data the `eta` spacing
    /// replaces `hy` so that Parseval holds.
    pub fn lp_norm(&self, p: LpExponent) -> f64 {
        lp_norm(self, p)
    }
}

/// `(sum |F|^p hx hy)^(1/p)`, or `max |F|` for `p = inf`.
pub fn lp_norm(f: &GridFunction2D, p: LpExponent) -> f64 {
    let cell = match f.tag {
        AxisTag::Spatial => f.grid.hx() * f.grid.hy(),
        AxisTag::YSpectral => f.grid.hx() * f.grid.heta(),
    };
    match p {
        LpExponent::Infinity => f.max_abs(),
        LpExponent::Finite(p) if p == 2.0 => {
            (f.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt()
        }
        LpExponent::Finite(p) if p == 1.0 => f.values.iter().map(|z| z.norm()).sum::<f64>() * cell,
        LpExponent::Finite(p) => {
            // Scale by the maximum to keep |F|^p representable.
            let m = f.max_abs();
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = f.values.iter().map(|z| (z.norm() / m).powf(p)).sum();
            m * (s * cell).powf(1.0 / p)
        }
    }
}

/// Partial Fourier transform in `y`, continuum-normalised:
/// `F^(x, eta) = (2 pi)^(-1/2) * integral F(x, y) e^{-i eta y} dy`.
pub fn partial_fft_y(f: &GridFunction2D) -> Result<GridFunction2D> {
    f.require(AxisTag::Spatial)?;
    let grid = f.grid;
    let ny = grid.ny();
    let scale = grid.hy() / (2.0 * PI).sqrt();
    let mut values = f.values.clone();
    let fft = FftPlanner::new().plan_fft_forward(ny);
    for mut row in values.axis_iter_mut(Axis(0)) {
        let mut buf = row.to_vec();
        fft.process(&mut buf);
        for (m, (dst, src)) in row.iter_mut().zip(buf).enumerate() {
            // y_j = -Y + j hy contributes the phase e^{i eta_m Y} = (-1)^m.
            let sign = if signed_index(m, ny).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *dst = src * (scale * sign);
        }
    }
    Ok(GridFunction2D {
        grid,
        values,
        tag: AxisTag::YSpectral,
    })
}

/// Inverse of [`partial_fft_y`].
pub fn inverse_partial_fft_y(f: &GridFunction2D) -> Result<GridFunction2D> {
    f.require(AxisTag::YSpectral)?;
    let grid = f.grid;
    let ny = grid.ny();
    let scale = grid.heta() / (2.0 * PI).sqrt();
    let mut values = f.values.clone();
    let fft = FftPlanner::new().plan_fft_inverse(ny);
    for mut row in values.axis_iter_mut(Axis(0)) {
        let mut buf: Vec<Complex64> = row
            .iter()
            .enumerate()
            .map(|(m, z)| {
                let sign = if signed_index(m, ny).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                z * sign
            })
            .collect();
        fft.process(&mut buf);
        for (dst, src) in row.iter_mut().zip(buf) {
            *dst = src * scale;
        }
    }
    Ok(GridFunction2D {
        grid,
        values,
        tag: AxisTag::Spatial,
    })
}

/// Unnormalised 2D DFT coefficients such that
/// `F(x_i, y_j) = sum_{a,m} c[a,m] e^{i xi_a (x_i + X)} e^{i eta_m (y_j + Y)}`.
pub(crate) fn dft2_coefficients(values: &Array2<Complex64>, planner: &mut FftPlanner<f64>) -> Array2<Complex64> {
    let (nx, ny) = values.dim();
    let mut out = values.clone();
    let fy = planner.plan_fft_forward(ny);
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mut buf = row.to_vec();
        fy.process(&mut buf);
        row.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    let fx = planner.plan_fft_forward(nx);
    let norm = 1.0 / (nx * ny) as f64;
    for mut col in out.axis_iter_mut(Axis(1)) {
        let mut buf = col.to_vec();
        fx.process(&mut buf);
        col.iter_mut().zip(buf).for_each(|(d, s)| *d = s * norm);
    }
    out
}
