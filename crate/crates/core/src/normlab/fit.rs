//! Log-linear decay fits with a residual bootstrap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resamples drawn by the bootstrap.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;
/// Fixed seed, so fits are deterministic.
pub const BOOTSTRAP_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Logarithm base of the fit.
    pub base: f64,
    /// Smallest and largest abscissa used.
    pub x_range: (f64, f64),
    /// `(x, norm)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
    /// Abscissae dropped as transient.
    pub excluded: Vec<f64>,
    /// `-slope` of `log_base(norm)` against `x`.
    pub gamma_hat: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log_base` units.
    pub residual: f64,
    /// 95% percentile interval of `gamma` from the residual bootstrap.
    pub ci95: (f64, f64),
    pub half_width: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `fit_decay`: least squares of `log_base(norm)` against `x`.
pub fn fit_decay(points: &[(f64, f64)], base: f64) -> Result<DecayFit> {
    if !(base > 0.0 && base != 1.0 && base.is_finite()) {
        return Err(Error::InvalidArgument(format!("logarithm base {base}")));
    }
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some((x, v)) = points.iter().find(|(x, v)| !(*v > 0.0 && v.is_finite() && x.is_finite())) {
        return Err(Error::Fit(format!("norm at x = {x} is {v}; norms must be positive")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln() / base.ln()).collect();
    let x_lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if x_lo == x_hi {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let fitted: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
    let resid: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let n = xs.len() as f64;
    let rms = (resid.iter().map(|r| r * r).sum::<f64>() / n).sqrt();

    // Residuals inflated by sqrt(n / (n - 2)) for the two fitted parameters.
    let inflate = (n / (n - 2.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut gammas: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let ystar: Vec<f64> = fitted
                .iter()
                .map(|f| f + inflate * resid[rng.random_range(0..resid.len())])
                .collect();
            -least_squares(&xs, &ystar).0
        })
        .collect();
    gammas.sort_by(f64::total_cmp);
    let q = |p: f64| gammas[((p * (gammas.len() - 1) as f64).round()) as usize];
    let ci95 = (q(0.025), q(0.975));
    Ok(DecayFit {
        base,
        x_range: (x_lo, x_hi),
        points: points.to_vec(),
        excluded: Vec::new(),
        gamma_hat: -slope,
        intercept,
        residual: rms,
        ci95,
        half_width: 0.5 * (ci95.1 - ci95.0),
    })
}

/// [`fit_decay`] on integer levels, dropping `l = 0, 1` when their residual
/// against the tail fit (`l >= 2`) exceeds three times the tail's RMS residual.
pub fn fit_decay_dropping_transient(points: &[(f64, f64)], base: f64) -> Result<DecayFit> {
    let tail: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= 2.0).collect();
    if tail.len() < 4 || tail.len() == points.len() {
        return fit_decay(points, base);
    }
    let tail_fit = fit_decay(&tail, base)?;
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for &(x, v) in points {
        if x < 2.0 {
            let r = (v.ln() / base.ln() - (tail_fit.intercept - tail_fit.gamma_hat * x)).abs();
            if r > 3.0 * tail_fit.residual {
                excluded.push(x);
                continue;
            }
        }
        kept.push((x, v));
    }
    let mut fit = fit_decay(&kept, base)?;
    fit.excluded = excluded;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_halving() {
        let pts: Vec<(f64, f64)> = (0..4).map(|l| (l as f64, 0.5f64.powi(l))).collect();
        let f = fit_decay(&pts, 2.0).unwrap();
        assert!((f.gamma_hat - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn constant_norms() {
        let pts: Vec<(f64, f64)> = (0..6).map(|l| (l as f64, 3.0)).collect();
        assert!(fit_decay(&pts, 2.0).unwrap().gamma_hat.abs() < 1e-12);
    }

    #[test]
    fn noisy_synthetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<(f64, f64)> = (0..=8)
            .map(|l| (l as f64, 2f64.powf(-0.5 * l as f64) * (1.0 + rng.random_range(-0.05..0.05))))
            .collect();
        let f = fit_decay(&pts, 2.0).unwrap();
        assert!((f.gamma_hat - 0.5).abs() < 0.05);
        assert!(f.ci95.0 <= f.gamma_hat && f.gamma_hat <= f.ci95.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_decay(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)], 2.0).is_err());
        assert!(fit_decay(&[(0.0, 1.0), (1.0, 0.0), (2.0, 0.25), (3.0, 0.1)], 2.0).is_err());
    }

    #[test]
    fn transient_levels_are_dropped() {
        let mut pts: Vec<(f64, f64)> = (0..=8).map(|l| (l as f64, 2f64.powf(-0.7 * l as f64) * (1.0 + 0.01 * (l % 2) as f64))).collect();
        pts[0].1 = 40.0;
        let f = fit_decay_dropping_transient(&pts, 2.0).unwrap();
        assert_eq!(f.excluded, vec![0.0]);
        assert!((f.gamma_hat - 0.7).abs() < 0.02);
    }
}
