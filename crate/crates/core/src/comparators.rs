//! Dominating operators: the strong maximal function over a dyadic
//! rectangle ladder, the 1D maximal Hilbert transform in `x`, and the
//! Case-1 residual between parabolic and flat single-scale averages.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bumps::BumpProfile;
use crate::error::{Error, Result};
use crate::grid::{AxisTag, Grid2D, GridFunction2D};
use crate::transforms::{compute_case_mask, project_pk, EvalOptions, FieldU, LinearizedMaximal, ScaleField};

/// Centered rectangles with half-widths `a hx` by `b hy` (in grid steps),
/// where `a` ranges over `{0} ∪ {2^j : j in x_levels}` and likewise `b`.
/// Half-width 0 is the single cell, so `M_S F >= |F|` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleLadder {
    pub x_levels: (u32, u32),
    pub y_levels: (u32, u32),
}

impl RectangleLadder {
    /// Every dyadic level whose rectangle fits strictly inside the box.
    pub fn full(grid: &Grid2D) -> Self {
        let top = |n: usize| (usize::BITS - 1 - ((n - 2) / 2).leading_zeros()) as u32;
        RectangleLadder {
            x_levels: (0, top(grid.nx())),
            y_levels: (0, top(grid.ny())),
        }
    }

    fn steps(levels: (u32, u32)) -> Vec<usize> {
        std::iter::once(0).chain((levels.0..=levels.1).map(|j| 1usize << j)).collect()
    }

    pub fn x_steps(&self) -> Vec<usize> {
        Self::steps(self.x_levels)
    }

    pub fn y_steps(&self) -> Vec<usize> {
        Self::steps(self.y_levels)
    }

    /// Nonempty ranges and `2 * 2^j + 1 <= n` on both axes.
    pub fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        for (name, (lo, hi), n) in [("x", self.x_levels, grid.nx()), ("y", self.y_levels, grid.ny())] {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("empty {name} ladder [{lo}, {hi}]")));
            }
            if hi >= usize::BITS || 2 * (1usize << hi) + 1 > n {
                return Err(Error::WindowTooLarge {
                    window: (1u64 << hi.min(63)) as f64,
                    extent: ((n - 1) / 2) as f64,
                });
            }
        }
        Ok(())
    }
}

/// Periodic window sums `sum_{|d| <= a} v[i + d]` via a prefix sum.
fn window_sums(v: &[f64], a: usize, out: &mut [f64]) {
    let n = v.len();
    let mut prefix = vec![0.0; 3 * n + 1];
    for k in 0..3 * n {
        prefix[k + 1] = prefix[k] + v[k % n];
    }
    for (i, o) in out.iter_mut().enumerate() {
        // Shift by n so the window start is nonnegative.
        let lo = i + n - a;
        *o = prefix[lo + 2 * a + 1] - prefix[lo];
    }
}

/// Window sums of every row (`along = Axis(1)`) or column (`Axis(0)`).
fn axis_sums(v: &Array2<f64>, along: Axis, a: usize) -> Array2<f64> {
    let mut out = Array2::zeros(v.dim());
    let mut buf = vec![0.0; v.len_of(along)];
    for (lane, mut dst) in v.lanes(along).into_iter().zip(out.lanes_mut(along)) {
        window_sums(&lane.to_vec(), a, &mut buf);
        dst.iter_mut().zip(&buf).for_each(|(d, s)| *d = *s);
    }
    out
}

/// `M_S F`: per point, the largest mean of `|F|` over ladder rectangles
/// centered there. Periodic box; each mean is exact for the grid measure.
pub fn strong_maximal(f: &GridFunction2D, ladder: &RectangleLadder) -> Result<GridFunction2D> {
    f.require_spatial()?;
    ladder.check_grid(f.grid())?;
    let mods = f.values().mapv(|z| z.norm());
    // The single cell is taken verbatim so that `M_S F >= |F|` holds exactly.
    let mut best = mods.clone();
    for b in ladder.y_steps() {
        let ysum = axis_sums(&mods, Axis(1), b);
        for a in ladder.x_steps() {
            if a == 0 && b == 0 {
                continue;
            }
            let area = ((2 * a + 1) * (2 * b + 1)) as f64;
            let sums = axis_sums(&ysum, Axis(0), a);
            best.zip_mut_with(&sums, |m, s| *m = m.max(s / area));
        }
    }
    GridFunction2D::new(*f.grid(), best.mapv(|v| Complex64::new(v, 0.0)), AxisTag::Spatial)
}

/// Truncation ladder for the 1D maximal Hilbert transform: inner radii
/// `2^e hx` for `e` in `levels`, outer radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HilbertLadder {
    pub levels: (u32, u32),
    pub r: f64,
}

/// `sup_eps |sum_{eps <= |t_n| <= R} g(x - t_n) hx / t_n|` on the periodic
/// grid `t_n = n hx`, with `+-t_n` paired.
pub fn maximal_hilbert_1d(g: &[Complex64], hx: f64, ladder: &HilbertLadder) -> Result<Vec<f64>> {
    let n = g.len();
    let (lo, hi) = ladder.levels;
    let outer = (ladder.r / hx + 1e-9).floor() as usize;
    if lo > hi || hi >= 60 || (1usize << hi) > outer || 2 * outer >= n {
        return Err(Error::InvalidArgument(format!(
            "Hilbert ladder levels {lo}..={hi} with R = {} on {n} points of spacing {hx}",
            ladder.r
        )));
    }
    let inner: Vec<usize> = (lo..=hi).map(|e| 1usize << e).collect();
    Ok((0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut best = 0.0f64;
            // Accumulate from the outside in, reading off each inner radius.
            let mut rungs = inner.iter().rev().peekable();
            for m in (inner[0]..=outer).rev() {
                acc += (g[(i + n - m) % n] - g[(i + m) % n]) / m as f64;
                if rungs.peek() == Some(&&m) {
                    best = best.max(acc.norm());
                    rungs.next();
                }
            }
            best
        })
        .collect())
}

/// [`maximal_hilbert_1d`] along `x` for every `y`.
pub fn maximal_hilbert_x(f: &GridFunction2D, ladder: &HilbertLadder) -> Result<GridFunction2D> {
    f.require_spatial()?;
    let g = f.grid();
    let mut out = Array2::<Complex64>::zeros((g.nx(), g.ny()));
    for (col, mut dst) in f.values().columns().into_iter().zip(out.columns_mut()) {
        let v = maximal_hilbert_1d(&col.to_vec(), g.hx(), ladder)?;
        dst.iter_mut().zip(v).for_each(|(d, s)| *d = Complex64::new(s, 0.0));
    }
    GridFunction2D::new(*g, out, AxisTag::Spatial)
}

/// `|integral F(x - t, y - u(x) t^2) phi_k(t) dt - integral F(x - t, y) phi_k(t) dt|`
/// with `k = k(x, y)`. Every grid point must be in Case 1, and `F` must
/// satisfy `P_0 F = F` to `1e-8` relative in `L^inf`.
pub fn comparison_residual(
    f: &GridFunction2D,
    u: &FieldU,
    kfield: &ScaleField,
    profile: &BumpProfile,
) -> Result<GridFunction2D> {
    comparison_residual_with(f, u, kfield, profile, EvalOptions::default())
}

pub fn comparison_residual_with(
    f: &GridFunction2D,
    u: &FieldU,
    kfield: &ScaleField,
    profile: &BumpProfile,
    opts: EvalOptions,
) -> Result<GridFunction2D> {
    f.require_spatial()?;
    let mask = compute_case_mask(u, kfield)?;
    if mask.case2_count() > 0 {
        return Err(Error::CaseViolation(format!(
            "{} grid points have u 4^k > 1",
            mask.case2_count()
        )));
    }
    let band = project_pk(f, 0, profile)?.max_abs_diff(f)?;
    if band > 1e-8 * f.max_abs() {
        return Err(Error::InvalidArgument(format!(
            "input is not band-limited to the unit annulus: |P_0 F - F| = {band:e}"
        )));
    }
    let parabolic = LinearizedMaximal::new(u.clone(), kfield.clone(), *profile, opts)?.average(f)?;
    let flat = LinearizedMaximal::new(FieldU::constant(f.grid(), 0.0)?, kfield.clone(), *profile, opts)?.average(f)?;
    Ok(parabolic.sub(&flat)?.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid32() -> Grid2D {
        Grid2D::new(4.0, 4.0, 32, 32).unwrap()
    }

    #[test]
    fn constant_and_homogeneity() {
        let g = grid32();
        let ladder = RectangleLadder::full(&g);
        let c = GridFunction2D::from_real_fn(g, |_, _| -2.5);
        assert!(strong_maximal(&c, &ladder).unwrap().values().iter().all(|z| (z.re - 2.5).abs() < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals = Array2::from_shape_fn((32, 32), |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let f = GridFunction2D::new(g, vals, AxisTag::Spatial).unwrap();
        let mf = strong_maximal(&f, &ladder).unwrap();
        let m3 = strong_maximal(&f.scale(-3.0), &ladder).unwrap();
        assert!(m3.max_abs_diff(&mf.scale(3.0)).unwrap() < 1e-12);
        for (m, z) in mf.values().iter().zip(f.values()) {
            assert!(m.re >= z.norm());
        }
    }

    #[test]
    fn single_cell_matches_brute_force() {
        let g = grid32();
        let ladder = RectangleLadder::full(&g);
        let f = GridFunction2D::from_fn(g, |x, y| Complex64::new(if x == 0.0 && y == 0.0 { 1.0 } else { 0.0 }, 0.0));
        let mf = strong_maximal(&f, &ladder).unwrap();
        let (c0, c1) = (16usize, 16usize);
        for i in 0..32 {
            for j in 0..32 {
                let di = (i as i64 - c0 as i64).unsigned_abs() as usize;
                let dj = (j as i64 - c1 as i64).unsigned_abs() as usize;
                let di = di.min(32 - di);
                let dj = dj.min(32 - dj);
                let mut best = 0.0f64;
                for a in ladder.x_steps() {
                    for b in ladder.y_steps() {
                        if a >= di && b >= dj {
                            best = best.max(1.0 / ((2 * a + 1) * (2 * b + 1)) as f64);
                        }
                    }
                }
                assert!((mf.get(i, j).re - best).abs() < 1e-15, "{i} {j}");
            }
        }
        // Along an axis at distance 3 the smallest cover is 9 x 1 cells.
        assert!((mf.get(19, 16).re - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn dominates_axis_averages() {
        let g = grid32();
        let ladder = RectangleLadder::full(&g);
        let f = GridFunction2D::from_real_fn(g, |x, y| (x * 1.3).sin() * (y * 0.7 + 0.2).cos());
        let mf = strong_maximal(&f, &ladder).unwrap();
        let mods = f.values().mapv(|z| z.norm());
        for a in ladder.x_steps() {
            let avg = axis_sums(&mods, Axis(0), a) / (2 * a + 1) as f64;
            assert!(mf.values().iter().zip(avg.iter()).all(|(m, v)| m.re >= v - 1e-14));
        }
    }

    #[test]
    fn ladder_must_fit() {
        let g = grid32();
        let bad = RectangleLadder {
            x_levels: (0, 4),
            y_levels: (0, 1),
        };
        assert!(bad.check_grid(&g).is_err());
        assert!(RectangleLadder::full(&g).check_grid(&g).is_ok());
    }

    fn oracle_hilbert(g: &[Complex64], hx: f64, ladder: &HilbertLadder) -> Vec<f64> {
        let n = g.len() as i64;
        (0..n)
            .map(|i| {
                (ladder.levels.0..=ladder.levels.1)
                    .map(|e| {
                        let eps = (1u64 << e) as f64 * hx;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m in -n / 2 + 1..n / 2 {
                            let t = m as f64 * hx;
                            if m != 0 && t.abs() >= eps - 1e-12 && t.abs() <= ladder.r + 1e-12 {
                                acc += g[(i - m).rem_euclid(n) as usize] * hx / t;
                            }
                        }
                        acc.norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn maximal_hilbert_examples() {
        let n = 256;
        let hx = 0.125;
        let ladder = HilbertLadder { levels: (0, 6), r: 12.0 };
        let ones = vec![Complex64::new(1.0, 0.0); n];
        assert!(maximal_hilbert_1d(&ones, hx, &ladder).unwrap().iter().all(|v| v.abs() < 1e-12));

        let a = 2.0 * std::f64::consts::PI * 5.0 / (n as f64 * hx);
        let cosine: Vec<Complex64> = (0..n).map(|i| Complex64::new((a * i as f64 * hx).cos(), 0.0)).collect();
        let v = maximal_hilbert_1d(&cosine, hx, &ladder).unwrap();
        assert!(v.iter().all(|x| *x <= std::f64::consts::PI + 0.05));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        let fast = maximal_hilbert_1d(&g, hx, &ladder).unwrap();
        let slow = oracle_hilbert(&g, hx, &ladder);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-10 * b.max(1.0));
        }
    }

    fn band_limited(g: Grid2D, seed: u64) -> GridFunction2D {
        // Single eta = 1.5 mode (inside the plateau of phi0) times a smooth x-profile.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), rng.random_range(0.0..6.0));
        GridFunction2D::from_fn(g, move |x, y| {
            Complex64::from_polar((a * x).cos() + b * (0.5 * x).sin(), 1.5 * y + c)
        })
    }

    #[test]
    fn residual_examples() {
        // eta = 1.5 on the grid: m pi / Y = 1.5 with Y = 4 pi, m = 6.
        let g = Grid2D::new(16.0, 4.0 * std::f64::consts::PI, 64, 32).unwrap();
        let profile = BumpProfile::phi0();
        let f = band_limited(g, 1);
        let kfield = ScaleField::constant(&g, 0);
        let zero = FieldU::constant(&g, 0.0).unwrap();
        assert!(comparison_residual(&f, &zero, &kfield, &profile).unwrap().max_abs() < 1e-12);

        let too_big = FieldU::constant(&g, 2.0).unwrap();
        assert!(matches!(
            comparison_residual(&f, &too_big, &kfield, &profile),
            Err(Error::CaseViolation(_))
        ));

        let u = FieldU::constant(&g, 0.2).unwrap();
        let full = comparison_residual(&f, &u, &kfield, &profile).unwrap();
        let half = comparison_residual(&f, &u.scaled(0.5), &kfield, &profile).unwrap();
        let ratio = half.max_abs() / full.max_abs();
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");

        let raw = GridFunction2D::from_real_fn(g, |x, _| x.cos());
        assert!(comparison_residual(&raw, &u, &kfield, &profile).is_err());
    }
}
