//! Experiments: decay in `l`, Van der Corput decay of `m^u_k`, uniformity
//! in `k`, the two-variable unboundedness probe, and the identity checks.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::fit::{fit_decay, fit_decay_dropping_transient, DecayFit};
use super::{estimate_opnorm, OpReport, SamplerConfig};
use crate::bumps::{BumpProfile, PartitionFamily};
use crate::comparators::{strong_maximal, RectangleLadder};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, partial_fft_y, Boundary, Grid2D, GridFunction2D, LpExponent, Scheme};
use crate::transforms::{
    multiplier_muk, Composed, EvalOptions, FieldSpec, FieldU, GridOperator, HighFreqPart, HilbertParabolic,
    HilbertTruncation, MaximalOp, OscillatoryPiece, PieceKernel, ProjectPk,
};

/// Parameters of [`decay_scan_tl`].
#[derive(Debug, Clone)]
pub struct DecayScan {
    pub grid: Grid2D,
    pub field: FieldU,
    pub l_range: (i32, i32),
    pub p: LpExponent,
    pub sampler: SamplerConfig,
    pub trials: usize,
    pub seed: u64,
    pub kernel: PieceKernel,
    pub family: PartitionFamily,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScanReport {
    pub fit: DecayFit,
    pub norms: Vec<(i32, f64)>,
    pub reports: Vec<OpReport>,
}

/// `decay_scan_Tl`: `|T_l|_{p -> p}` per level with the same master seed
/// (common samples across levels), then a base-2 fit with the transient rule.
pub fn decay_scan_tl(cfg: &DecayScan) -> Result<DecayScanReport> {
    let (lo, hi) = cfg.l_range;
    if hi < lo || hi - lo + 1 < 4 {
        return Err(Error::Fit(format!("l range {lo}..={hi} has fewer than 4 levels")));
    }
    if !cfg.field.is_positive() {
        return Err(Error::FieldPrecondition("decay scan needs u > 0".into()));
    }
    let mut reports = Vec::new();
    let mut norms = Vec::new();
    for l in lo..=hi {
        let op = OscillatoryPiece::new(cfg.field.clone(), l, cfg.kernel, cfg.family, cfg.eval);
        let r = estimate_opnorm(&op, &cfg.grid, cfg.p, &cfg.sampler, cfg.trials, cfg.seed)?;
        norms.push((l, r.norm_estimate));
        reports.push(r);
    }
    let pts: Vec<(f64, f64)> = norms.iter().map(|&(l, v)| (l as f64, v)).collect();
    Ok(DecayScanReport {
        fit: fit_decay_dropping_transient(&pts, 2.0)?,
        norms,
        reports,
    })
}

/// Parameters of [`vdc_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcConfig {
    pub u_vals: Vec<f64>,
    pub k_vals: Vec<i32>,
    pub eta_ladder: Vec<f64>,
    /// Points of the grid `2^k xi = lambda s`, `s` in `[-6, 0]`.
    pub xi_points: usize,
    #[serde(default)]
    pub bump: BumpProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcPoint {
    pub u: f64,
    pub k: i32,
    pub eta: f64,
    /// `u 4^k eta`.
    pub lambda: f64,
    pub sup_abs: f64,
    /// The `s` attaining the sup.
    pub argmax_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    pub points: Vec<VdcPoint>,
    /// Base-10 fit of `sup |m|` against `log10 |lambda|`; `gamma_hat` is the
    /// decay exponent.
    pub fit: DecayFit,
}

/// `vdc_scan`: per `(u, k, eta)`, the sup of `|m^u_k|` over the `xi`-grid
/// `2^k xi = lambda s`, `s` evenly spaced in `[-6, 0]`. Since `phi0` is
/// even, `m(-xi) = m(xi)` and the negative half suffices; `s = -3` puts the
/// stationary point at the plateau centre `t = 1.5 * 2^k`.
pub fn vdc_scan(cfg: &VdcConfig) -> Result<VdcReport> {
    if cfg.xi_points < 2 {
        return Err(Error::InvalidArgument("need at least two xi points".into()));
    }
    let mut points = Vec::new();
    for &u in &cfg.u_vals {
        for &k in &cfg.k_vals {
            for &eta in &cfg.eta_ladder {
                let lambda = u * 4f64.powi(k) * eta;
                if lambda == 0.0 || !lambda.is_finite() {
                    return Err(Error::InvalidArgument(format!("lambda = u 4^k eta = {lambda}")));
                }
                let mut best = (0.0f64, 0.0);
                for j in 0..cfg.xi_points {
                    let s = -6.0 + 6.0 * j as f64 / (cfg.xi_points - 1) as f64;
                    let xi = lambda.abs() * s * 2f64.powi(-k);
                    let v = multiplier_muk(u, k, xi, eta, &cfg.bump)?.norm();
                    if v > best.0 {
                        best = (v, s);
                    }
                }
                points.push(VdcPoint {
                    u,
                    k,
                    eta,
                    lambda,
                    sup_abs: best.0,
                    argmax_s: best.1,
                });
            }
        }
    }
    let mags: Vec<f64> = points.iter().map(|p| p.lambda.abs()).collect();
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().copied().fold(0.0, f64::max);
    if hi < 1e3 * lo {
        return Err(Error::InvalidArgument(format!(
            "degenerate ladder: lambda spans [{lo}, {hi}], fewer than 3 decades"
        )));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.lambda.abs().log10(), p.sup_abs)).collect();
    Ok(VdcReport {
        fit: fit_decay(&pts, 10.0)?,
        points,
    })
}

/// The composed operator of a uniformity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", deny_unknown_fields)]
pub enum UniformOp {
    #[serde(rename = "Msmooth∘Pk", alias = "Msmooth-Pk")]
    MsmoothPk { k_min: i32, k_max: i32 },
    #[serde(rename = "H∘Pk", alias = "H-Pk")]
    HPk { truncation: HilbertTruncation },
}

/// Parameters of [`uniformity_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct UniformityConfig {
    /// The grid for `k = 0`; band `k` uses `y`-extent `Y 2^{-k}`.
    pub base_grid: Grid2D,
    pub field: FieldSpec,
    pub op: UniformOp,
    pub k_values: Vec<i32>,
    pub p: LpExponent,
    pub sampler: SamplerConfig,
    pub trials: usize,
    pub seed: u64,
    pub bump: BumpProfile,
    pub family: PartitionFamily,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityEntry {
    pub k: i32,
    pub grid: Grid2D,
    pub norm_estimate: f64,
    pub report: OpReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub op_id: String,
    pub per_k: Vec<UniformityEntry>,
    pub max_min_ratio: f64,
}

/// `uniformity_sweep`. Band `k` lives on the grid with `y`-extent
/// `Y 2^{-k}` (the scaling `y -> 2^k y`), so every band has the same grid
/// indices; samples are drawn in band `k` with the same seeds.
pub fn uniformity_sweep(cfg: &UniformityConfig) -> Result<UniformityReport> {
    if cfg.k_values.is_empty() {
        return Err(Error::InvalidArgument("no k values".into()));
    }
    let mut per_k = Vec::new();
    let mut op_id = String::new();
    for &k in &cfg.k_values {
        let grid = cfg.base_grid.with_extent_y(cfg.base_grid.extent_y() * 2f64.powi(-k))?;
        let field = cfg.field.build(&grid)?;
        let outer: Box<dyn GridOperator> = match &cfg.op {
            UniformOp::MsmoothPk { k_min, k_max } => {
                Box::new(MaximalOp::smoothed(field, cfg.bump, (*k_min, *k_max), cfg.eval)?)
            }
            UniformOp::HPk { truncation } => Box::new(HilbertParabolic::new(field, *truncation, cfg.family, cfg.eval)?),
        };
        let op = Composed {
            outer,
            inner: Box::new(ProjectPk { k, profile: cfg.bump }),
        };
        op_id = op.id();
        let sampler = SamplerConfig {
            band: k,
            ..cfg.sampler.clone()
        };
        let report = estimate_opnorm(&op, &grid, cfg.p, &sampler, cfg.trials, cfg.seed)?;
        per_k.push(UniformityEntry {
            k,
            grid,
            norm_estimate: report.norm_estimate,
            report,
        });
    }
    let hi = per_k.iter().map(|e| e.norm_estimate).fold(0.0, f64::max);
    let lo = per_k.iter().map(|e| e.norm_estimate).fold(f64::INFINITY, f64::min);
    Ok(UniformityReport {
        op_id,
        per_k,
        max_min_ratio: hi / lo,
    })
}

/// Coefficient field of the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeField {
    Constant { value: f64 },
    /// `u(x, y) = y / x^2` for `|x| >= 1`, else 0: the parabola through
    /// `(x, y)` passes through the origin at `t = x`, so the average at the
    /// first scale `2^k >= |x|` meets the unit ball.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeInput {
    #[default]
    UnitBall,
    Zero,
}

/// Parameters of [`unboundedness_probe`]. Level `j` doubles the box `j`
/// times at fixed spacing: extents `base_extent 2^j`, `base_samples 2^j`
/// points per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub field: ProbeField,
    #[serde(default)]
    pub input: ProbeInput,
    pub base_extent: f64,
    pub base_samples: usize,
    pub levels: usize,
    pub p: LpExponent,
    /// Smallest averaging scale; the largest is the biggest `2^k < X`.
    pub k_min: i32,
    /// Fixed Gauss–Legendre points per average.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub level: usize,
    pub grid: Grid2D,
    pub k_max: i32,
    pub input_norm: f64,
    pub output_norm: f64,
    /// `None` when the input vanishes (skipped).
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub field: ProbeField,
    pub levels: Vec<ProbeLevel>,
    pub strictly_increasing: bool,
    /// Largest over smallest ratio.
    pub max_min_ratio: Option<f64>,
    /// Successive quotients `ratio_{j+1} / ratio_j`.
    pub growth: Vec<f64>,
}

/// `unboundedness_probe`: `Msharp` with a two-variable field, sampled
/// bilinearly with zero extension outside the box.
pub fn unboundedness_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.levels == 0 {
        return Err(Error::InvalidArgument("at least one level".into()));
    }
    let opts = EvalOptions {
        scheme: Scheme::Bilinear,
        boundary: Boundary::Zero,
        fixed_nodes: Some(cfg.nodes),
    };
    let mut levels = Vec::new();
    for level in 0..cfg.levels {
        let scale = (1usize << level) as f64;
        let n = cfg.base_samples << level;
        let ext = cfg.base_extent * scale;
        let grid = Grid2D::new(ext, ext, n, n)?;
        let k_max = (ext.log2().ceil() as i32) - 1;
        if k_max < cfg.k_min {
            return Err(Error::WindowTooLarge {
                window: 2f64.powi(cfg.k_min),
                extent: ext,
            });
        }
        let f = match cfg.input {
            ProbeInput::UnitBall => {
                GridFunction2D::from_real_fn(grid, |x, y| if x * x + y * y <= 1.0 { 1.0 } else { 0.0 })
            }
            ProbeInput::Zero => GridFunction2D::zeros(grid),
        };
        let input_norm = lp_norm(&f, cfg.p);
        if input_norm == 0.0 {
            levels.push(ProbeLevel {
                level,
                grid,
                k_max,
                input_norm,
                output_norm: 0.0,
                ratio: None,
            });
            continue;
        }
        let field = match cfg.field {
            ProbeField::Constant { value } => FieldU::from_fn_xy(&grid, |_, _| value)?,
            ProbeField::Adversarial => FieldU::from_fn_xy(&grid, |x, y| if x.abs() >= 1.0 { y / (x * x) } else { 0.0 })?,
        };
        let op = MaximalOp::sharp(field, (cfg.k_min, k_max), opts)?;
        let output_norm = lp_norm(&op.apply(&f)?, cfg.p);
        levels.push(ProbeLevel {
            level,
            grid,
            k_max,
            input_norm,
            output_norm,
            ratio: Some(output_norm / input_norm),
        });
    }
    let ratios: Vec<f64> = levels.iter().filter_map(|l| l.ratio).collect();
    let growth: Vec<f64> = ratios.windows(2).map(|w| w[1] / w[0]).collect();
    let complete = ratios.len() == levels.len();
    Ok(ProbeReport {
        field: cfg.field.clone(),
        strictly_increasing: complete && ratios.len() >= 2 && growth.iter().all(|g| *g > 1.0),
        max_min_ratio: complete.then(|| {
            ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
        }),
        growth,
        levels,
    })
}

/// `|T f|_2` computed on the grid and through the fibers `F^(., eta)`.
pub fn plancherel_norms(op: &OscillatoryPiece, f: &GridFunction2D) -> Result<(f64, f64)> {
    let spatial = lp_norm(&op.apply(f)?, LpExponent::two());
    let fibered = lp_norm(&op.apply_fibered(&partial_fft_y(f)?)?, LpExponent::two());
    Ok((spatial, fibered))
}

/// `max |Hhigh f + sum_{l=1..L} T_l f - H f| / max |H f|`, with `H` the
/// partition-matched truncation at level `L`.
pub fn reconstruction_error(
    f: &GridFunction2D,
    field: &FieldU,
    levels: i32,
    family: &PartitionFamily,
    eval: EvalOptions,
) -> Result<f64> {
    let mut sum = HighFreqPart::new(field.clone(), *family, eval).apply(f)?;
    for l in 1..=levels {
        sum = sum.add(&OscillatoryPiece::new(field.clone(), l, PieceKernel::Signed, *family, eval).apply(f)?)?;
    }
    let h = HilbertParabolic::new(field.clone(), HilbertTruncation::Partition { levels }, *family, eval)?.apply(f)?;
    Ok(sum.max_abs_diff(&h)? / h.max_abs())
}

/// `sup |T_l f| / (4^l M_S f)` over points with `M_S f > 0`.
pub fn crude_bound_ratio(op: &OscillatoryPiece, f: &GridFunction2D, ladder: &RectangleLadder) -> Result<f64> {
    let tf = op.apply(f)?;
    let ms = strong_maximal(f, ladder)?;
    let scale = 4f64.powi(op.level());
    let ratios: Array2<f64> = ndarray::Zip::from(tf.values())
        .and(ms.values())
        .map_collect(|t, m| if m.re > 0.0 { t.norm() / (scale * m.re) } else { 0.0 });
    Ok(ratios.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normlab::SamplerKind;

    #[test]
    fn decay_scan_needs_four_levels() {
        let g = Grid2D::new(16.0, 2.0 * std::f64::consts::PI, 64, 16).unwrap();
        let cfg = DecayScan {
            grid: g,
            field: FieldU::constant(&g, 1.0).unwrap(),
            l_range: (0, 2),
            p: LpExponent::two(),
            sampler: SamplerConfig::default(),
            trials: 2,
            seed: 1,
            kernel: PieceKernel::Abs,
            family: PartitionFamily::default(),
            eval: EvalOptions::default(),
        };
        assert!(decay_scan_tl(&cfg).is_err());
    }

    #[test]
    fn vdc_small_lambda_and_invariance() {
        let bump = BumpProfile::phi0();
        let cfg = VdcConfig {
            u_vals: vec![1.0],
            k_vals: vec![0],
            eta_ladder: vec![1e-6, 1e-5, 1e-4, 1e-2],
            xi_points: 5,
            bump,
        };
        let r = vdc_scan(&cfg).unwrap();
        assert!((r.points[0].sup_abs - bump.integral()).abs() < 1e-4);
        let m1 = multiplier_muk(1.0, 0, 3.0, 40.0, &bump).unwrap();
        let m2 = multiplier_muk(0.25, 1, 1.5, 40.0, &bump).unwrap();
        assert!((m1 - m2).norm() < 1e-8);
        let bad = VdcConfig {
            eta_ladder: vec![1.0, 10.0],
            ..cfg
        };
        assert!(vdc_scan(&bad).is_err());
    }

    #[test]
    fn uniformity_single_k_and_unresolved() {
        let g = Grid2D::new(16.0, 2.0 * std::f64::consts::PI, 32, 16).unwrap();
        let mut cfg = UniformityConfig {
            base_grid: g,
            field: FieldSpec::Constant { value: 0.5 },
            op: UniformOp::MsmoothPk { k_min: -2, k_max: 1 },
            k_values: vec![1],
            p: LpExponent::two(),
            sampler: SamplerConfig::default(),
            trials: 2,
            seed: 3,
            bump: BumpProfile::phi0(),
            family: PartitionFamily::default(),
            eval: EvalOptions::default(),
        };
        assert_eq!(uniformity_sweep(&cfg).unwrap().max_min_ratio, 1.0);
        // Band 1 on the k = 0 grid has no plateau frequencies.
        cfg.base_grid = g;
        cfg.sampler = SamplerConfig {
            band: 0,
            kind: SamplerKind::RandomBandlimited,
            ..Default::default()
        };
        let mismatched = Grid2D::new(16.0, 2.0 * std::f64::consts::PI, 32, 8).unwrap();
        cfg.base_grid = mismatched;
        cfg.k_values = vec![3];
        assert!(uniformity_sweep(&cfg).is_err());
    }

    #[test]
    fn probe_zero_input_is_skipped() {
        let cfg = ProbeConfig {
            field: ProbeField::Constant { value: 1.0 },
            input: ProbeInput::Zero,
            base_extent: 4.0,
            base_samples: 16,
            levels: 2,
            p: LpExponent::two(),
            k_min: -1,
            nodes: 8,
        };
        let r = unboundedness_probe(&cfg).unwrap();
        assert!(r.levels.iter().all(|l| l.ratio.is_none()));
        assert!(!r.strictly_increasing);
        assert!(r.max_min_ratio.is_none());
    }
}
