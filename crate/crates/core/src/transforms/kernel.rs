//! Integration kernels `K_u(t)` of the parabolic operators
//! `T f(x, y) = integral f(x - t, y - u t^2) K_u(t) dt`.

use crate::bumps::{eval_phi_k, BumpProfile, PartitionFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    /// `phi_k(t)`.
    SmoothAvg { k: i32, profile: BumpProfile },
    /// `2^{-k-1}` on `|t| <= 2^k`: the mean over the window.
    SharpAvg { k: i32 },
    /// `psi_l(u^{1/2} t) / |t|`, or `/ t` when `signed`.
    Piece {
        l: i32,
        family: PartitionFamily,
        signed: bool,
    },
    /// `Psi0(u^{1/2} t) / t`.
    High { family: PartitionFamily },
    /// `1 / t` on `eps <= |t| <= r`.
    HilbertSharp { eps: f64, r: f64 },
    /// `theta(u^{1/2} t / 2^L) / t`, the truncation matched to the partition.
    HilbertSmooth { levels: i32, family: PartitionFamily },
}

/// Splits `[lo, hi]` into dyadic pieces `[hi/2, hi], [hi/4, hi/2], ...`,
/// stopping at `lo` or after ten halvings.
pub(crate) fn dyadic_split(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut top = hi;
    for _ in 0..10 {
        let half = 0.5 * top;
        if half <= lo {
            break;
        }
        out.push((half, top));
        top = half;
    }
    if top > lo {
        out.push((lo, top));
    }
    out.reverse();
    out
}

impl Kernel {
    /// `K(-t) = -K(t)`.
    pub fn is_odd(&self) -> bool {
        match self {
            Kernel::SmoothAvg { .. } | Kernel::SharpAvg { .. } => false,
            Kernel::Piece { signed, .. } => *signed,
            Kernel::High { .. } | Kernel::HilbertSharp { .. } | Kernel::HilbertSmooth { .. } => true,
        }
    }

    /// Kernels written in the variable `u^{1/2} t`; they need `u > 0` and
    /// vanish identically on rows with `u = 0`.
    pub fn needs_positive_u(&self) -> bool {
        matches!(
            self,
            Kernel::Piece { .. } | Kernel::High { .. } | Kernel::HilbertSmooth { .. }
        )
    }

    /// Whether the kernel is smooth on its support (trapezoid-eligible).
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Kernel::SharpAvg { .. } | Kernel::HilbertSharp { .. })
    }

    fn dilation(&self, u: f64) -> f64 {
        if self.needs_positive_u() {
            1.0 / u.sqrt()
        } else {
            1.0
        }
    }

    /// `K_u(t)` for `t > 0`.
    pub fn value(&self, u: f64, t: f64) -> f64 {
        match *self {
            Kernel::SmoothAvg { k, profile } => eval_phi_k(&profile, k, t),
            Kernel::SharpAvg { k } => {
                let w = 2f64.powi(k);
                if t <= w {
                    0.5 / w
                } else {
                    0.0
                }
            }
            Kernel::Piece { l, family, .. } => family.psi_l(l, u.sqrt() * t) / t,
            Kernel::High { family } => family.big_psi0(u.sqrt() * t) / t,
            Kernel::HilbertSharp { eps, r } => {
                if t >= eps && t <= r {
                    1.0 / t
                } else {
                    0.0
                }
            }
            Kernel::HilbertSmooth { levels, family } => family.theta(u.sqrt() * t * 2f64.powi(-levels)) / t,
        }
    }

    /// `lim_{t -> 0+} t K(t)` for odd kernels whose support reaches 0.
    pub fn pv_limit(&self) -> Option<f64> {
        match self {
            Kernel::High { .. } | Kernel::HilbertSmooth { .. } => Some(1.0),
            Kernel::HilbertSharp { eps, .. } if *eps == 0.0 => Some(1.0),
            _ => None,
        }
    }

    /// Largest `|t|` in the support.
    pub fn reach(&self, u: f64) -> f64 {
        let s = self.dilation(u);
        match *self {
            Kernel::SmoothAvg { k, profile } => profile.support().1 * 2f64.powi(k),
            Kernel::SharpAvg { k } => 2f64.powi(k),
            Kernel::Piece { l, family, .. } => family.support_l(l).1 * s,
            Kernel::High { family } => family.base().support().1 * s,
            Kernel::HilbertSharp { r, .. } => r,
            Kernel::HilbertSmooth { levels, family } => family.base().support().1 * 2f64.powi(levels) * s,
        }
    }

    /// Narrowest smooth transition, which sets the kernel's bandwidth.
    pub fn transition_width(&self, u: f64) -> f64 {
        let s = self.dilation(u);
        let narrow = |b: &BumpProfile| {
            let [a, c, d, bb] = b.breakpoints();
            (c - a).min(bb - d)
        };
        match *self {
            Kernel::SmoothAvg { k, profile } => narrow(&profile) * 2f64.powi(k),
            Kernel::Piece { l, family, .. } => narrow(family.base()) * 2f64.powi(l) * s,
            Kernel::High { family } => {
                let [_, _, d, b] = family.base().breakpoints();
                (b - d) * s
            }
            Kernel::HilbertSmooth { levels, family } => {
                let [_, _, d, b] = family.base().breakpoints();
                (b - d) * 2f64.powi(levels) * s
            }
            Kernel::SharpAvg { .. } | Kernel::HilbertSharp { .. } => 0.0,
        }
    }

    /// Positive-`t` intervals on which the kernel is smooth; quadrature
    /// panels are laid inside each.
    pub fn intervals(&self, u: f64) -> Vec<(f64, f64)> {
        let s = self.dilation(u);
        let scaled = |b: &BumpProfile, f: f64| {
            let [a, c, d, bb] = b.breakpoints();
            vec![(a * f, c * f), (c * f, d * f), (d * f, bb * f)]
        };
        match *self {
            Kernel::SmoothAvg { k, profile } => scaled(&profile, 2f64.powi(k)),
            Kernel::SharpAvg { k } => vec![(0.0, 2f64.powi(k))],
            Kernel::Piece { l, family, .. } => scaled(family.base(), 2f64.powi(l) * s),
            Kernel::High { family } => {
                let [_, _, d, b] = family.base().breakpoints();
                let mut v = dyadic_split(0.0, d * s);
                v.push((d * s, b * s));
                v
            }
            Kernel::HilbertSharp { eps, r } => dyadic_split(eps, r),
            Kernel::HilbertSmooth { levels, family } => {
                let [_, _, d, b] = family.base().breakpoints();
                let f = 2f64.powi(levels) * s;
                let mut v = dyadic_split(0.0, d * f);
                v.push((d * f, b * f));
                v
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_split_covers_interval() {
        let v = dyadic_split(0.0, 8.0);
        assert_eq!(v.first().unwrap().0, 0.0);
        assert_eq!(v.last().unwrap().1, 8.0);
        assert!(v.windows(2).all(|w| w[0].1 == w[1].0));
        let v = dyadic_split(1.0, 8.0);
        assert_eq!(v, vec![(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)]);
        let v = dyadic_split(3.0, 8.0);
        assert_eq!(v, vec![(3.0, 4.0), (4.0, 8.0)]);
    }

    #[test]
    fn piece_support_scales_with_u() {
        let k = Kernel::Piece {
            l: 2,
            family: PartitionFamily::default(),
            signed: true,
        };
        assert_eq!(k.reach(4.0), 1.5 * 4.0 / 2.0);
        assert_eq!(k.value(4.0, 10.0), 0.0);
        assert_eq!(k.value(4.0, 1.5), 1.0 / 1.5);
    }
}
