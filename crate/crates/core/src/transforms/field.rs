//! Coefficient fields `u`, scale fields `k(x, y)` and the Case-1/Case-2 mask.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// The coefficient field of the parabola `(t, u t^2)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldU {
    /// `u(x)`, one sample per x-row.
    OneVariable(Vec<f64>),
    /// `u(x, y)`, one sample per grid point.
    TwoVariable(Array2<f64>),
}

impl FieldU {
    pub fn one_variable(samples: Vec<f64>) -> Result<Self> {
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::FieldPrecondition(format!("non-finite u sample {v}")));
        }
        Ok(FieldU::OneVariable(samples))
    }

    pub fn two_variable(samples: Array2<f64>) -> Result<Self> {
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::FieldPrecondition(format!("non-finite u sample {v}")));
        }
        Ok(FieldU::TwoVariable(samples))
    }

    pub fn constant(grid: &Grid2D, value: f64) -> Result<Self> {
        Self::one_variable(vec![value; grid.nx()])
    }

    pub fn from_fn_x(grid: &Grid2D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::one_variable(grid.xs().into_iter().map(f).collect())
    }

    pub fn from_fn_xy(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.xs();
        let ys = grid.ys();
        Self::two_variable(Array2::from_shape_fn((grid.nx(), grid.ny()), |(i, j)| f(xs[i], ys[j])))
    }

    pub fn is_one_variable(&self) -> bool {
        matches!(self, FieldU::OneVariable(_))
    }

    /// `u` at grid point `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            FieldU::OneVariable(v) => v[i],
            FieldU::TwoVariable(a) => a[(i, j)],
        }
    }

    /// The positivity flag: every sample is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.samples().all(|v| v > 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.samples().all(|v| v >= 0.0)
    }

    pub fn samples(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            FieldU::OneVariable(v) => Box::new(v.iter().copied()),
            FieldU::TwoVariable(a) => Box::new(a.iter().copied()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest strictly positive sample.
    pub fn min_positive(&self) -> Option<f64> {
        self.samples().filter(|&v| v > 0.0).reduce(f64::min)
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            FieldU::OneVariable(v) => FieldU::OneVariable(v.iter().map(|x| x * c).collect()),
            FieldU::TwoVariable(a) => FieldU::TwoVariable(a.mapv(|x| x * c)),
        }
    }

    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        let ok = match self {
            FieldU::OneVariable(v) => v.len() == grid.nx(),
            FieldU::TwoVariable(a) => a.dim() == (grid.nx(), grid.ny()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("coefficient field does not match grid {grid}")))
        }
    }
}

/// Declarative description of a one-variable field, used in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// Equal-width blocks across `[-X, X)` with the given values.
    Steps { values: Vec<f64> },
    /// `mean + amplitude * sin(pi * periods * (x + X) / X)`.
    Sinusoid { mean: f64, amplitude: f64, periods: f64 },
    /// `blocks` equal-width blocks with values uniform in `[lo, hi]`.
    Random { lo: f64, hi: f64, blocks: usize, seed: u64 },
}

impl FieldSpec {
    pub fn build(&self, grid: &Grid2D) -> Result<FieldU> {
        let nx = grid.nx();
        let blocks = |values: &[f64]| -> Result<FieldU> {
            if values.is_empty() || values.len() > nx {
                return Err(Error::InvalidArgument(format!(
                    "step field needs between 1 and {nx} values, got {}",
                    values.len()
                )));
            }
            FieldU::one_variable((0..nx).map(|i| values[i * values.len() / nx]).collect())
        };
        match self {
            FieldSpec::Constant { value } => FieldU::constant(grid, *value),
            FieldSpec::Steps { values } => blocks(values),
            FieldSpec::Sinusoid {
                mean,
                amplitude,
                periods,
            } => {
                let x0 = grid.extent_x();
                FieldU::from_fn_x(grid, |x| {
                    mean + amplitude * (std::f64::consts::PI * periods * (x + x0) / x0).sin()
                })
            }
            FieldSpec::Random { lo, hi, blocks: n, seed } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidArgument(format!("random field needs lo <= hi, got {lo} > {hi}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values: Vec<f64> = (0..*n).map(|_| rng.random_range(*lo..=*hi)).collect();
                blocks(&values)
            }
        }
    }
}

/// Integer scale choice `k(x, y)` with a declared admissible range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleField {
    values: Array2<i32>,
    k_min: i32,
    k_max: i32,
}

impl ScaleField {
    pub fn new(values: Array2<i32>, k_min: i32, k_max: i32) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::InvalidArgument(format!("scale range [{k_min}, {k_max}] is empty")));
        }
        if let Some(k) = values.iter().find(|k| !(k_min..=k_max).contains(*k)) {
            return Err(Error::InvalidArgument(format!(
                "scale value {k} outside declared range [{k_min}, {k_max}]"
            )));
        }
        Ok(ScaleField { values, k_min, k_max })
    }

    pub fn constant(grid: &Grid2D, k: i32) -> Self {
        ScaleField {
            values: Array2::from_elem((grid.nx(), grid.ny()), k),
            k_min: k,
            k_max: k,
        }
    }

    pub fn values(&self) -> &Array2<i32> {
        &self.values
    }

    pub fn range(&self) -> (i32, i32) {
        (self.k_min, self.k_max)
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.values[(i, j)]
    }

    /// Shape match plus `5 * 2^{k_max} < X / 2`.
    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.values.dim() != (grid.nx(), grid.ny()) {
            return Err(Error::GridMismatch(format!("scale field does not match grid {grid}")));
        }
        let reach = 5.0 * 2f64.powi(self.k_max);
        if reach >= grid.extent_x() / 2.0 {
            return Err(Error::WindowTooLarge {
                window: reach,
                extent: grid.extent_x() / 2.0,
            });
        }
        Ok(())
    }
}

/// `true` where `u(x) 4^{k(x,y)} <= 1` (Case 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CaseMask {
    pub case1: Array2<bool>,
}

impl CaseMask {
    pub fn case1_count(&self) -> usize {
        self.case1.iter().filter(|b| **b).count()
    }

    pub fn case2_count(&self) -> usize {
        self.case1.len() - self.case1_count()
    }
}

/// Ties `u 4^k = 1` go to Case 1.
pub fn compute_case_mask(u: &FieldU, kfield: &ScaleField) -> Result<CaseMask> {
    let FieldU::OneVariable(samples) = u else {
        return Err(Error::InvalidArgument("case mask needs a one-variable field".into()));
    };
    let (nx, ny) = kfield.values.dim();
    if samples.len() != nx {
        return Err(Error::GridMismatch(format!(
            "field has {} rows, scale field has {nx}",
            samples.len()
        )));
    }
    let case1 = Array2::from_shape_fn((nx, ny), |(i, j)| samples[i] * 4f64.powi(kfield.get(i, j)) <= 1.0);
    Ok(CaseMask { case1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2D {
        Grid2D::new(8.0, 8.0, 16, 8).unwrap()
    }

    #[test]
    fn case_mask_examples() {
        let g = grid();
        let k0 = ScaleField::constant(&g, 0);
        let m = compute_case_mask(&FieldU::constant(&g, 0.0).unwrap(), &k0).unwrap();
        assert_eq!(m.case2_count(), 0);
        let m = compute_case_mask(&FieldU::constant(&g, 1.0).unwrap(), &k0).unwrap();
        assert_eq!(m.case2_count(), 0);
        let m = compute_case_mask(&FieldU::constant(&g, 4.0).unwrap(), &k0).unwrap();
        assert_eq!(m.case1_count(), 0);
        let two = FieldU::from_fn_xy(&g, |_, _| 1.0).unwrap();
        assert!(compute_case_mask(&two, &k0).is_err());
    }

    #[test]
    fn scale_field_range_and_fit() {
        let g = grid();
        assert!(ScaleField::new(Array2::from_elem((16, 8), 3), 0, 2).is_err());
        // 5 * 2^0 = 5 >= 8 / 2
        assert!(ScaleField::constant(&g, 0).check_grid(&g).is_err());
        assert!(ScaleField::constant(&g, -1).check_grid(&g).is_ok());
    }

    #[test]
    fn field_specs() {
        let g = grid();
        let f = FieldSpec::Steps { values: vec![1.0, 2.0] }.build(&g).unwrap();
        assert_eq!(f.value(0, 0), 1.0);
        assert_eq!(f.value(15, 0), 2.0);
        let a = FieldSpec::Random { lo: 1.0, hi: 2.0, blocks: 4, seed: 7 }.build(&g).unwrap();
        let b = FieldSpec::Random { lo: 1.0, hi: 2.0, blocks: 4, seed: 7 }.build(&g).unwrap();
        assert_eq!(a, b);
        assert!(a.is_positive());
        assert!(FieldU::one_variable(vec![f64::NAN]).is_err());
    }
}
