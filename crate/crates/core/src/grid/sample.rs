use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{dft2_coefficients, signed_index, AxisTag, GridFunction2D};
use crate::error::Result;

/// Off-grid interpolation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Periodic 4-point bilinear interpolation.
    Bilinear,
    /// The band-limited trigonometric interpolant of the samples.
    #[default]
    Fourier,
}

/// How samples outside the box are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// The function vanishes outside `[-X, X) x [-Y, Y)`.
    Zero,
}

/// Trigonometric interpolant of a spatial grid function, evaluable anywhere.
///
/// The Nyquist bin of each axis is split symmetrically (a cosine), so the
/// interpolant of real samples is real.
#[derive(Debug, Clone)]
pub struct FourierInterpolant {
    extent_x: f64,
    extent_y: f64,
    coeffs: Array2<Complex64>,
}

impl FourierInterpolant {
    pub fn new(f: &GridFunction2D) -> Result<Self> {
        f.require_spatial()?;
        let mut planner = FftPlanner::new();
        Ok(FourierInterpolant {
            extent_x: f.grid().extent_x(),
            extent_y: f.grid().extent_y(),
            coeffs: dft2_coefficients(f.values(), &mut planner),
        })
    }

    fn phases(n: usize, extent: f64, shifted: f64) -> Vec<Complex64> {
        (0..n)
            .map(|m| {
                let s = signed_index(m, n);
                let w = PI * s as f64 / extent;
                if s == -(n as i64 / 2) {
                    Complex64::new((w * shifted).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, w * shifted)
                }
            })
            .collect()
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let (nx, ny) = self.coeffs.dim();
        let ex = Self::phases(nx, self.extent_x, x + self.extent_x);
        let ey = Self::phases(ny, self.extent_y, y + self.extent_y);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, row) in self.coeffs.outer_iter().enumerate() {
            let inner: Complex64 = row.iter().zip(&ey).map(|(c, e)| c * e).sum();
            acc += ex[a] * inner;
        }
        acc
    }
}

/// Bilinear interpolation of `f` at `(x, y)`.
pub fn bilinear(f: &GridFunction2D, x: f64, y: f64, boundary: Boundary) -> Complex64 {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let px = (x + g.extent_x()) / g.hx();
    let py = (y + g.extent_y()) / g.hy();
    let fx = px.floor();
    let fy = py.floor();
    let wx = px - fx;
    let wy = py - fy;
    let (ix, iy) = (fx as i64, fy as i64);
    let v = f.values();
    let at = |i: i64, j: i64| -> Complex64 {
        match boundary {
            Boundary::Periodic => v[(i.rem_euclid(nx as i64) as usize, j.rem_euclid(ny as i64) as usize)],
            Boundary::Zero => {
                if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                    Complex64::new(0.0, 0.0)
                } else {
                    v[(i as usize, j as usize)]
                }
            }
        }
    };
    at(ix, iy) * ((1.0 - wx) * (1.0 - wy))
        + at(ix + 1, iy) * (wx * (1.0 - wy))
        + at(ix, iy + 1) * ((1.0 - wx) * wy)
        + at(ix + 1, iy + 1) * (wx * wy)
}

/// Evaluates `f` at an arbitrary point using the chosen scheme; periodic
/// wrap-around is silent.
///
/// The Fourier scheme builds the interpolant on every call; use
/// [`FourierInterpolant`] directly for repeated queries.
pub fn sample_offgrid(f: &GridFunction2D, x: f64, y: f64, scheme: Scheme) -> Result<Complex64> {
    if f.tag() != AxisTag::Spatial {
        f.require_spatial()?;
    }
    match scheme {
        Scheme::Bilinear => Ok(bilinear(f, x, y, Boundary::Periodic)),
        Scheme::Fourier => Ok(FourierInterpolant::new(f)?.eval(x, y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_points_are_reproduced() {
        let g = Grid2D::new(2.0, 1.5, 8, 12).unwrap();
        let f = GridFunction2D::from_fn(g, |x, y| Complex64::new((x * y).sin() + x, y * y));
        let interp = FourierInterpolant::new(&f).unwrap();
        for i in 0..g.nx() {
            for j in 0..g.ny() {
                let (x, y) = (g.x(i), g.y(j));
                assert_eq!(bilinear(&f, x, y, Boundary::Periodic), f.get(i, j));
                assert!((interp.eval(x, y) - f.get(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_scheme_is_exact_for_resolved_cosines() {
        let g = Grid2D::new(1.0, 3.0, 8, 16).unwrap();
        for m in 0..8 {
            let w = PI * m as f64 / g.extent_y();
            let f = GridFunction2D::from_real_fn(g, |_, y| (w * y).cos());
            let interp = FourierInterpolant::new(&f).unwrap();
            for &(x, y) in &[(0.123, -2.71), (-0.9, 0.333), (0.5, 2.9)] {
                assert_abs_diff_eq!(interp.eval(x, y).re, (w * y).cos(), epsilon = 1e-10);
                assert_abs_diff_eq!(interp.eval(x, y).im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn bilinear_cell_indicator() {
        let g = Grid2D::new(4.0, 4.0, 8, 8).unwrap();
        let f = GridFunction2D::from_real_fn(g, |x, y| if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 });
        assert_eq!(bilinear(&f, 0.0, 0.0, Boundary::Periodic).re, 1.0);
        assert_abs_diff_eq!(bilinear(&f, 0.5, 0.0, Boundary::Periodic).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bilinear_wraps_or_vanishes() {
        let g = Grid2D::new(1.0, 1.0, 8, 8).unwrap();
        let f = GridFunction2D::from_real_fn(g, |_, _| 1.0);
        assert_eq!(bilinear(&f, 5.3, -7.1, Boundary::Periodic).re, 1.0);
        assert_eq!(bilinear(&f, 5.3, 0.0, Boundary::Zero).re, 0.0);
    }
}
