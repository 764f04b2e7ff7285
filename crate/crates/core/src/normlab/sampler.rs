//! Test-function samplers. Every sampled `f` satisfies `P_k f = f`: its
//! y-spectrum sits on grid frequencies inside the plateau of the band.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bumps::BumpProfile;
use crate::error::{Error, Result};
use crate::grid::{lp_norm, signed_index, AxisTag, Grid2D, GridFunction2D, LpExponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    #[default]
    RandomBandlimited,
    Structured,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Samples satisfy `P_band f = f`.
    pub band: i32,
    /// The x-spectrum of random samples fills `|xi| <= x_band * xi_Nyquist`.
    pub x_band: f64,
    /// Coordinate-ascent steps of the adversarial sampler.
    pub ascent_steps: usize,
    /// Profile whose plateau defines the band.
    pub bump: BumpProfile,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::RandomBandlimited,
            band: 0,
            x_band: 0.75,
            ascent_steps: 50,
            bump: BumpProfile::phi0(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_band > 0.0 && self.x_band <= 1.0) {
            return Err(Error::InvalidArgument(format!("x_band must lie in (0, 1], got {}", self.x_band)));
        }
        if self.ascent_steps > 50 {
            return Err(Error::InvalidArgument(format!(
                "at most 50 ascent steps, got {}",
                self.ascent_steps
            )));
        }
        Ok(())
    }
}

/// Non-Nyquist `eta` bins with `|eta|` inside the plateau of band `k`.
pub fn plateau_bins(grid: &Grid2D, band: i32, bump: &BumpProfile) -> Result<Vec<usize>> {
    let s = 2f64.powi(band);
    let (c, d) = bump.plateau();
    let bins: Vec<usize> = (0..grid.ny())
        .filter(|&m| {
            let e = grid.eta(m).abs();
            signed_index(m, grid.ny()) != -(grid.ny() as i64 / 2) && e >= c * s && e <= d * s
        })
        .collect();
    if bins.is_empty() {
        return Err(Error::UnresolvedBand(format!(
            "no non-Nyquist grid frequency with |eta| in [{}, {}] (band {band}, grid {grid})",
            c * s,
            d * s
        )));
    }
    Ok(bins)
}

/// Unnormalised inverse 2D DFT: `sum_ab c_ab e^{2 pi i (a i / nx + b j / ny)}`.
pub(crate) fn synthesize(coeffs: Array2<Complex64>) -> Array2<Complex64> {
    let (nx, ny) = coeffs.dim();
    let mut planner = FftPlanner::new();
    let mut v = coeffs;
    for (axis, n) in [(Axis(1), ny), (Axis(0), nx)] {
        let fft = planner.plan_fft_inverse(n);
        for mut lane in v.lanes_mut(axis) {
            let mut buf = lane.to_vec();
            fft.process(&mut buf);
            lane.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
        }
    }
    v
}

fn normalised(grid: Grid2D, values: Array2<Complex64>) -> Result<GridFunction2D> {
    let f = GridFunction2D::new(grid, values, AxisTag::Spatial)?;
    let n = lp_norm(&f, LpExponent::two());
    Ok(f.scale(1.0 / n))
}

/// Gaussian coefficients on every plateau bin in `y` and every non-Nyquist
/// `|xi| <= x_band xi_N` in `x`; unit `L^2` norm.
pub fn random_bandlimited(grid: &Grid2D, cfg: &SamplerConfig, seed: u64) -> Result<GridFunction2D> {
    cfg.validate()?;
    let bins = plateau_bins(grid, cfg.band, &cfg.bump)?;
    let nx = grid.nx();
    let cut = cfg.x_band * grid.xi_nyquist();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Array2::<Complex64>::zeros((nx, grid.ny()));
    for &m in &bins {
        for a in 0..nx {
            if signed_index(a, nx) != -(nx as i64 / 2) && grid.xi(a).abs() <= cut {
                coeffs[(a, m)] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
        }
    }
    normalised(*grid, synthesize(coeffs))
}

/// Catalog entry `index`: a translated bump, a modulated bump, or a bump
/// tensored with every plateau mode, cycling in that order.
pub fn structured(grid: &Grid2D, cfg: &SamplerConfig, index: usize) -> Result<GridFunction2D> {
    let bins = plateau_bins(grid, cfg.band, &cfg.bump)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    let x0 = grid.extent_x();
    // Low-discrepancy centres in the middle half of the box.
    let frac = (index as f64 * 0.618_033_988_749_895).fract();
    let centre = -0.5 * x0 + frac * x0;
    let width = grid.hx() * 2f64.powi(1 + (index / 3 % 4) as i32);
    let bump = |x: f64| {
        let d = (x - centre).rem_euclid(2.0 * x0);
        let d = d.min(2.0 * x0 - d);
        (-0.5 * (d / width).powi(2)).exp()
    };
    let mode = |m: usize, j: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (signed_index(m, ny) as f64) * j as f64 / ny as f64);
    let m0 = bins[index % bins.len()];
    let a0 = 1 + (index * 7) % (nx / 4);
    let values = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let b = bump(grid.x(i));
        match index % 3 {
            0 => b * mode(m0, j),
            1 => b * mode(m0, j) * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (a0 * i) as f64 / nx as f64),
            _ => b * bins.iter().map(|&m| mode(m, j)).sum::<Complex64>(),
        }
    });
    normalised(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::project_pk;

    #[test]
    fn samples_are_band_limited() {
        let g = Grid2D::new(8.0, 2.0 * std::f64::consts::PI, 64, 32).unwrap();
        for band in [0, 1] {
            let cfg = SamplerConfig { band, ..Default::default() };
            let mut fs = vec![random_bandlimited(&g, &cfg, 5).unwrap()];
            fs.extend((0..6).map(|i| structured(&g, &cfg, i).unwrap()));
            for f in fs {
                let p = project_pk(&f, band, &cfg.bump).unwrap();
                assert!(p.max_abs_diff(&f).unwrap() <= 1e-10 * f.max_abs());
                assert!((lp_norm(&f, LpExponent::two()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unresolved_band_is_an_error() {
        let g = Grid2D::new(8.0, 2.0 * std::f64::consts::PI, 64, 8).unwrap();
        let cfg = SamplerConfig { band: 3, ..Default::default() };
        assert!(matches!(random_bandlimited(&g, &cfg, 1), Err(Error::UnresolvedBand(_))));
    }

    #[test]
    fn seeds_reproduce() {
        let g = Grid2D::new(8.0, 2.0 * std::f64::consts::PI, 32, 16).unwrap();
        let cfg = SamplerConfig::default();
        assert_eq!(random_bandlimited(&g, &cfg, 9).unwrap(), random_bandlimited(&g, &cfg, 9).unwrap());
        assert_ne!(random_bandlimited(&g, &cfg, 9).unwrap(), random_bandlimited(&g, &cfg, 10).unwrap());
    }
}
