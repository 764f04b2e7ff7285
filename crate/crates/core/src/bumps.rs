//! Smooth cutoffs: the annular bump `phi0`, its dilates `phi_k`, and the
//! dyadic partition of unity `psi_l` with its low-frequency sum `Psi0`.
//!
//! Every cutoff is built from one frozen transition
//!
//! ```text
//! S(s) = e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}),   0 < s < 1,
//! ```
//!
//! with `S = 0` for `s <= 0` and `S = 1` for `s >= 1`. `S` is C^infinity,
//! takes the values 0 and 1 exactly outside `(0, 1)`, and satisfies
//! `S(s) + S(1 - s) = 1`, so each ramp integrates to half its length.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// The frozen transition `S`.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let f = (-1.0 / s).exp();
        let g = (-1.0 / (1.0 - s)).exp();
        f / (f + g)
    }
}

/// `(S, S', S'')` at `s`.
pub fn smoothstep_derivs(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    // S = 1 / (1 + e^q) with q = 1/s - 1/(1-s).
    let v = smoothstep(s);
    let r = 1.0 - s;
    let dq = -1.0 / (s * s) - 1.0 / (r * r);
    let d2q = 2.0 / (s * s * s) - 2.0 / (r * r * r);
    let vv = v * (1.0 - v);
    let d1 = -vv * dq;
    let d2 = -d1 * (1.0 - 2.0 * v) * dq - vv * d2q;
    [v, d1, d2]
}

/// Even bump with support `[a, b]` and plateau `[c, d]` on each half-line:
/// `S((|t|-a)/(c-a)) * (1 - S((|t|-d)/(b-d)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BumpParams", into = "BumpParams")]
pub struct BumpProfile {
    a: f64,
    c: f64,
    d: f64,
    b: f64,
}

/// Serialized form of a [`BumpProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
    /// Always `"exp-smoothstep"`; recorded so reports name the transition.
    #[serde(default = "default_transition")]
    pub transition: String,
}

fn default_transition() -> String {
    TRANSITION.to_string()
}

/// Name of the frozen transition.
pub const TRANSITION: &str = "exp-smoothstep";

impl TryFrom<BumpParams> for BumpProfile {
    type Error = Error;
    fn try_from(p: BumpParams) -> Result<Self> {
        if p.transition != TRANSITION {
            return Err(Error::InvalidArgument(format!(
                "unknown transition `{}`, only `{TRANSITION}` exists",
                p.transition
            )));
        }
        BumpProfile::new(p.support, p.plateau)
    }
}

impl From<BumpProfile> for BumpParams {
    fn from(b: BumpProfile) -> Self {
        BumpParams {
            support: b.support(),
            plateau: b.plateau(),
            transition: default_transition(),
        }
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile::phi0()
    }
}

impl BumpProfile {
    /// `build_bump`: requires `0 < a < c < d < b`.
    pub fn new(support: (f64, f64), plateau: (f64, f64)) -> Result<Self> {
        let (a, b) = support;
        let (c, d) = plateau;
        let ok = [a, b, c, d].iter().all(|v| v.is_finite()) && 0.0 < a && a < c && c < d && d < b;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "bump needs 0 < a < c < d < b, got support ({a}, {b}) plateau ({c}, {d})"
            )));
        }
        Ok(BumpProfile { a, c, d, b })
    }

    /// The paper's `phi0`: support `[1/2, 5/2]`, plateau `[1, 2]`.
    pub fn phi0() -> Self {
        BumpProfile {
            a: 0.5,
            c: 1.0,
            d: 2.0,
            b: 2.5,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.c, self.d)
    }

    /// Continuous derivatives guaranteed by the transition; `None` means all.
    pub fn smoothness(&self) -> Option<u32> {
        None
    }

    pub fn eval(&self, t: f64) -> f64 {
        let r = t.abs();
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        let rise = smoothstep((r - self.a) / (self.c - self.a));
        let fall = 1.0 - smoothstep((r - self.d) / (self.b - self.d));
        rise * fall
    }

    /// `(f, f', f'')` at `t`.
    pub fn eval_derivs(&self, t: f64) -> [f64; 3] {
        let r = t.abs();
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let (wr, wf) = (self.c - self.a, self.b - self.d);
        let [r0, r1, r2] = smoothstep_derivs((r - self.a) / wr);
        let [f0, f1, f2] = smoothstep_derivs((r - self.d) / wf);
        let (r1, r2) = (r1 / wr, r2 / (wr * wr));
        let (g0, g1, g2) = (1.0 - f0, -f1 / wf, -f2 / (wf * wf));
        [
            r0 * g0,
            sign * (r1 * g0 + r0 * g1),
            r2 * g0 + 2.0 * r1 * g1 + r0 * g2,
        ]
    }

    /// Closed-form `integral over R`; each ramp contributes half its width.
    pub fn integral(&self) -> f64 {
        (self.c - self.a) + 2.0 * (self.d - self.c) + (self.b - self.d)
    }

    /// `integral over R of profile(t) / |t|` by refined Gauss–Legendre quadrature.
    pub fn integral_over_abs_t(&self) -> Result<f64> {
        let one_side = quad::integrate_refined(
            |t| self.eval(t) / t,
            &[(self.a, self.c), (self.c, self.d), (self.d, self.b)],
            16,
            1 << 14,
            1e-14,
        )?;
        Ok(2.0 * one_side)
    }

    /// Break points `a, c, d, b` of one half-line.
    pub fn breakpoints(&self) -> [f64; 4] {
        [self.a, self.c, self.d, self.b]
    }
}

/// `phi_k(t) = 2^{-k} phi0(t / 2^k)`.
pub fn eval_phi_k(profile: &BumpProfile, k: i32, t: f64) -> f64 {
    let s = 2f64.powi(-k);
    s * profile.eval(t * s)
}

/// `c_phi = integral of phi0` for the frozen `phi0`.
pub const C_PHI: f64 = 3.0;

/// `c_psi = integral of psi0(t) / |t|`: the partition telescopes to
/// `2 * integral_0^inf (theta(t) - theta(2t)) / t dt = 2 ln 2`.
pub const C_PSI: f64 = 2.0 * LN_2;

/// Dyadic partition `psi_l(t) = psi0(2^{-l} t)` with
/// `psi0(t) = theta(t) - theta(2t)`, where `theta` is 1 on `|t| <= 1` and
/// 0 on `|t| >= 3/2`.
///
/// As a [`BumpProfile`], `psi0` has support `[1/2, 3/2]` and plateau
/// `[3/4, 1]`. Adjacent pieces evaluate their shared ramp with the same
/// argument, so the sum over `l` is 1 to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BumpProfile", into = "BumpProfile")]
pub struct PartitionFamily {
    base: BumpProfile,
}

impl Default for PartitionFamily {
    fn default() -> Self {
        PartitionFamily {
            base: BumpProfile {
                a: 0.5,
                c: 0.75,
                d: 1.0,
                b: 1.5,
            },
        }
    }
}

impl PartitionFamily {
    /// A family from any base whose two ramps are dilates by 2
    /// (`d = 2a`, `b = 2c`), the condition for exact telescoping.
    pub fn from_base(base: BumpProfile) -> Result<Self> {
        let [a, c, d, b] = base.breakpoints();
        if d != 2.0 * a || b != 2.0 * c {
            return Err(Error::InvalidArgument(format!(
                "partition base needs d = 2a and b = 2c, got a={a} c={c} d={d} b={b}"
            )));
        }
        Ok(PartitionFamily { base })
    }

    pub fn base(&self) -> &BumpProfile {
        &self.base
    }

    /// The radial cutoff `theta`, equal to 1 on `|t| <= d`.
    pub fn theta(&self, t: f64) -> f64 {
        let [_, _, d, b] = self.base.breakpoints();
        1.0 - smoothstep((t.abs() - d) / (b - d))
    }

    /// `psi_l(t) = psi0(2^{-l} t)`, height 1.
    pub fn psi_l(&self, l: i32, t: f64) -> f64 {
        self.base.eval(t * 2f64.powi(-l))
    }

    /// `Psi0 = sum_{l <= 0} psi_l = theta`, with `Psi0(0) = 1`.
    pub fn big_psi0(&self, t: f64) -> f64 {
        self.theta(t)
    }

    /// Support `[lo, hi]` of `psi_l` on the positive half-line.
    pub fn support_l(&self, l: i32) -> (f64, f64) {
        let s = 2f64.powi(l);
        let (a, b) = self.base.support();
        (a * s, b * s)
    }
}

impl TryFrom<BumpProfile> for PartitionFamily {
    type Error = Error;
    fn try_from(b: BumpProfile) -> Result<Self> {
        PartitionFamily::from_base(b)
    }
}

impl From<PartitionFamily> for BumpProfile {
    fn from(f: PartitionFamily) -> Self {
        f.base
    }
}

pub fn eval_psi_l(family: &PartitionFamily, l: i32, t: f64) -> f64 {
    family.psi_l(l, t)
}

/// `Psi0(t)` in closed form. `tol` is accepted for interface parity with the
/// truncated-sum definition; the closed form is exact, so it is unused.
pub fn eval_big_psi0(family: &PartitionFamily, t: f64, _tol: f64) -> f64 {
    family.big_psi0(t)
}

/// Outcome of the bump and partition checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpValidation {
    pub points: usize,
    /// `max |sum_{|l|<=12} psi_l(t) - 1|` over log-spaced `t` in `[2^-8, 2^8]`.
    pub partition_max_deviation: f64,
    /// Same with `t` replaced by `w^{1/2} t` for several `w`.
    pub rescaled_partition_max_deviation: f64,
    pub plateau_exact: bool,
    pub support_exact: bool,
    /// `max_k |integral phi_k - integral phi0|` for `k` in `-4..=4`.
    pub l1_consistency_deviation: f64,
    pub c_phi_quadrature: f64,
    pub c_psi_quadrature: f64,
    /// Largest finite-difference second derivative of `phi0`.
    pub max_second_difference: f64,
    /// Largest jump between neighbouring second differences, relative to
    /// `max_second_difference`.
    pub max_second_difference_jump: f64,
}

/// `n` points log-uniform on `[lo, hi]`, endpoints included.
pub fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Runs the full bump/partition validation on the frozen `phi0` and the
/// default partition family.
pub fn validate(points: usize) -> Result<BumpValidation> {
    let phi0 = BumpProfile::phi0();
    let fam = PartitionFamily::default();
    let ts = log_points(2f64.powi(-8), 2f64.powi(8), points);

    let partition_sum = |t: f64| (-12..=12).map(|l| fam.psi_l(l, t)).sum::<f64>();
    let partition_max_deviation = ts.iter().fold(0.0f64, |m, &t| m.max((partition_sum(t) - 1.0).abs()));
    let rescaled_partition_max_deviation = [0.37, 2.0, 17.5]
        .iter()
        .flat_map(|&w: &f64| ts.iter().map(move |&t| w.sqrt() * t))
        .filter(|&t| (2f64.powi(-8)..=2f64.powi(8)).contains(&t))
        .fold(0.0f64, |m, t| m.max((partition_sum(t) - 1.0).abs()));

    let grid: Vec<f64> = (0..=4000).map(|i| -3.0 + 6.0 * i as f64 / 4000.0).collect();
    let plateau_exact = grid
        .iter()
        .filter(|t| (1.0..=2.0).contains(&t.abs()))
        .all(|&t| phi0.eval(t) == 1.0);
    let support_exact = grid
        .iter()
        .filter(|t| t.abs() <= 0.5 || t.abs() >= 2.5)
        .all(|&t| phi0.eval(t) == 0.0);

    let c_phi_quadrature = 2.0
        * quad::integrate_refined(|t| phi0.eval(t), &[(0.5, 1.0), (1.0, 2.0), (2.0, 2.5)], 16, 1 << 14, 1e-15)?;
    let mut l1_consistency_deviation = 0.0f64;
    for k in -4..=4 {
        let s = 2f64.powi(k);
        let v = 2.0
            * quad::integrate_refined(
                |t| eval_phi_k(&phi0, k, t),
                &[(0.5 * s, s), (s, 2.0 * s), (2.0 * s, 2.5 * s)],
                16,
                1 << 14,
                1e-15,
            )?;
        l1_consistency_deviation = l1_consistency_deviation.max((v - c_phi_quadrature).abs());
    }
    let c_psi_quadrature = fam.base.integral_over_abs_t()?;

    let h = 1e-3;
    let second: Vec<f64> = (0..=3000)
        .map(|i| 0.5 + 2.0 * i as f64 / 3000.0)
        .map(|t| (phi0.eval(t + h) - 2.0 * phi0.eval(t) + phi0.eval(t - h)) / (h * h))
        .collect();
    let max_second_difference = second.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_second_difference_jump = second
        .windows(2)
        .fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()))
        / max_second_difference;

    Ok(BumpValidation {
        points,
        partition_max_deviation,
        rescaled_partition_max_deviation,
        plateau_exact,
        support_exact,
        l1_consistency_deviation,
        c_phi_quadrature,
        c_psi_quadrature,
        max_second_difference,
        max_second_difference_jump,
    })
}
