//! Two ways to evaluate `T f(x, y) = integral f(x - t, y - u t^2) K_u(t) dt`.
//!
//! *Spectral* (one-variable `u`, Fourier scheme): the operator is applied to
//! the trigonometric interpolant of the samples. Each 2D Fourier mode
//! `e^{i xi x + i eta y}` is an eigenfunction of the fixed-`u` operator
//! with multiplier `m_u(xi, eta) = integral K_u(t) e^{-i xi t - i eta u t^2} dt`,
//! so rows sharing a value of `u` are filled by one inverse FFT per active
//! `eta` column.
//!
//! *Direct*: per grid point, a Gauss–Legendre node sum over off-grid
//! samples. Used for two-variable fields and for the bilinear scheme.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::kernel::Kernel;
use super::EvalOptions;
use crate::error::{Error, Result};
use crate::grid::{
    bilinear, dft2_coefficients, signed_index, Boundary, FourierInterpolant, Grid2D, GridFunction2D, Scheme,
};
use crate::quad;
use crate::transforms::field::FieldU;

/// Absolute tolerance on multipliers between successive refinements,
/// scaled by `max(1, sup |m|)`.
pub(crate) const MULTIPLIER_TOL: f64 = 1e-11;
/// Largest trapezoid length tried before giving up.
const TRAPEZOID_CAP: usize = 1 << 24;
/// Gauss–Legendre points per interval: start and failure cap for multipliers.
const GL_START: usize = 64;
const GL_MULTIPLIER_CAP: usize = 1 << 14;
/// Direct engine: refinement stops at this many points per interval.
pub(crate) const DIRECT_CAP: usize = 1024;
pub(crate) const DIRECT_TOL: f64 = 1e-8;
/// Columns whose largest coefficient is below this fraction of the global
/// largest are treated as empty.
const ACTIVE_COLUMN_FLOOR: f64 = 1e-14;

#[derive(Default)]
struct CacheState {
    grid: Option<Grid2D>,
    map: HashMap<(u64, usize), Arc<Vec<Complex64>>>,
}

/// Multipliers `m_u(xi_a, eta_m)` keyed by `(u, m)`; cleared when the grid
/// changes.
#[derive(Default)]
pub(crate) struct MultiplierCache {
    state: Mutex<CacheState>,
}

impl std::fmt::Debug for MultiplierCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MultiplierCache")
    }
}

impl Clone for MultiplierCache {
    fn clone(&self) -> Self {
        MultiplierCache::default()
    }
}

impl MultiplierCache {
    fn get_or_compute(
        &self,
        grid: &Grid2D,
        u: f64,
        m: usize,
        compute: impl FnOnce() -> Result<Vec<Complex64>>,
    ) -> Result<Arc<Vec<Complex64>>> {
        {
            let mut st = self.state.lock().expect("multiplier cache poisoned");
            if st.grid != Some(*grid) {
                st.map.clear();
                st.grid = Some(*grid);
            }
            if let Some(v) = st.map.get(&(u.to_bits(), m)) {
                return Ok(v.clone());
            }
        }
        let v = Arc::new(compute()?);
        self.state
            .lock()
            .expect("multiplier cache poisoned")
            .map
            .insert((u.to_bits(), m), v.clone());
        Ok(v)
    }
}

/// `xi` values in FFT order followed by `+xi_Nyquist`.
fn xi_list(grid: &Grid2D) -> Vec<f64> {
    let mut v: Vec<f64> = (0..grid.nx()).map(|a| grid.xi(a)).collect();
    v.push(grid.xi_nyquist());
    v
}

/// Trapezoid rule on the period `2X` with `n` points: one FFT yields the
/// multiplier at every `xi_a`.
fn trapezoid_once(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D, n: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let x0 = grid.extent_x();
    let delta = 2.0 * x0 / n as f64;
    let reach = kernel.reach(u);
    let odd = kernel.is_odd();
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    let half = (reach / delta).ceil() as usize + 1;
    for j in 1..=half.min(n / 2 - 1) {
        let t = j as f64 * delta;
        let k = kernel.value(u, t);
        if k == 0.0 {
            continue;
        }
        let v = Complex64::from_polar(k * delta, -eta * u * t * t);
        g[j] = v;
        g[n - j] = if odd { -v } else { v };
    }
    planner.plan_fft_forward(n).process(&mut g);
    let nx = grid.nx();
    let mut out: Vec<Complex64> = (0..nx)
        .map(|a| g[signed_index(a, nx).rem_euclid(n as i64) as usize])
        .collect();
    out.push(g[nx / 2]);
    if let Some(pv) = kernel.pv_limit() {
        // The paired integrand -2i sin(xi t) K(t) e^{...} is even and
        // smooth; the half-line rule is missing its t = 0 endpoint term.
        for (m, xi) in out.iter_mut().zip(xi_list(grid)) {
            *m += Complex64::new(0.0, -delta * xi * pv);
        }
    }
    out
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn sup_abs(a: &[Complex64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// First trapezoid length: the rule on spacing `delta` aliases frequency
/// `2 pi / delta` onto zero, so `2 pi / delta` must clear the grid band plus
/// the chirp and kernel bands. The smoothstep ramps of width `w` have
/// spectra below `1e-12` beyond roughly `300 / w`.
fn initial_length(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D) -> usize {
    let band = grid.xi_nyquist() + 2.0 * (eta * u).abs() * kernel.reach(u) + 300.0 / kernel.transition_width(u);
    let need = (grid.extent_x() * band / PI).ceil() as usize;
    (2 * grid.nx()).max(need.next_power_of_two())
}

fn raw_trapezoid(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D) -> Result<Vec<Complex64>> {
    let mut n = initial_length(kernel, u, eta, grid);
    let mut planner = FftPlanner::new();
    let mut prev = trapezoid_once(kernel, u, eta, grid, n, &mut planner);
    while n < TRAPEZOID_CAP {
        n *= 2;
        let cur = trapezoid_once(kernel, u, eta, grid, n, &mut planner);
        if sup_diff(&cur, &prev) <= MULTIPLIER_TOL * sup_abs(&cur).max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!(
        "trapezoid multiplier at u={u}, eta={eta} did not settle within {TRAPEZOID_CAP} points"
    )))
}

/// Gauss–Legendre node sum with nodes paired at `+-t`.
fn gl_once(kernel: &Kernel, u: f64, eta: f64, xis: &[f64], per_interval: usize) -> Vec<Complex64> {
    let nodes = quad::nodes_on_intervals(&kernel.intervals(u), per_interval);
    let odd = kernel.is_odd();
    let mut out = vec![Complex64::new(0.0, 0.0); xis.len()];
    for (t, w) in nodes {
        let k = kernel.value(u, t);
        if k == 0.0 {
            continue;
        }
        let base = Complex64::from_polar(w * k, -eta * u * t * t);
        for (o, &xi) in out.iter_mut().zip(xis) {
            let (s, c) = (xi * t).sin_cos();
            // e^{-i xi t} +- e^{i xi t}
            *o += if odd {
                base * Complex64::new(0.0, -2.0 * s)
            } else {
                base * (2.0 * c)
            };
        }
    }
    out
}

fn raw_gl(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D) -> Result<Vec<Complex64>> {
    let xis = xi_list(grid);
    let mut n = GL_START;
    let mut prev = gl_once(kernel, u, eta, &xis, n);
    while n < GL_MULTIPLIER_CAP {
        n *= 2;
        let cur = gl_once(kernel, u, eta, &xis, n);
        if sup_diff(&cur, &prev) <= MULTIPLIER_TOL * sup_abs(&cur).max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!(
        "node-sum multiplier at u={u}, eta={eta} did not settle within {GL_MULTIPLIER_CAP} points per interval"
    )))
}

fn raw_multiplier(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D) -> Result<Vec<Complex64>> {
    if kernel.is_smooth() {
        raw_trapezoid(kernel, u, eta, grid)
    } else {
        raw_gl(kernel, u, eta, grid)
    }
}

/// Multiplier for column `m`, one entry per `xi` bin. Nyquist bins stand for
/// cosines, so they get the average of the `+-` frequencies.
pub(crate) fn column_multiplier(kernel: &Kernel, u: f64, m: usize, grid: &Grid2D) -> Result<Vec<Complex64>> {
    let ny = grid.ny();
    let eta = grid.eta(m);
    let mut raw = raw_multiplier(kernel, u, eta, grid)?;
    if signed_index(m, ny) == -(ny as i64 / 2) {
        let other = raw_multiplier(kernel, u, -eta, grid)?;
        raw.iter_mut().zip(other).for_each(|(a, b)| *a = 0.5 * (*a + b));
    }
    let nx = grid.nx();
    let extra = raw.pop().expect("nyquist entry");
    raw[nx / 2] = 0.5 * (raw[nx / 2] + extra);
    Ok(raw)
}

/// One `eta` column of the coefficient array, resampled on finer x-grids.
struct ColumnInterp {
    coeffs: Vec<Complex64>,
    coeff_sum: f64,
    /// `sum_a xi_a c_a e^{i xi_a (x_i + X)}` on the base grid (Nyquist `xi` averages to 0).
    xi_weighted: Vec<Complex64>,
    refined: HashMap<usize, Vec<Complex64>>,
}

impl ColumnInterp {
    fn new(coeffs: Vec<Complex64>, grid: &Grid2D, planner: &mut FftPlanner<f64>) -> Self {
        let nx = grid.nx();
        let mut xi_weighted: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(a, c)| if a == nx / 2 { Complex64::new(0.0, 0.0) } else { c * grid.xi(a) })
            .collect();
        planner.plan_fft_inverse(nx).process(&mut xi_weighted);
        ColumnInterp {
            coeff_sum: coeffs.iter().map(|c| c.norm()).sum(),
            coeffs,
            xi_weighted,
            refined: HashMap::new(),
        }
    }

    /// The trigonometric interpolant on the `n`-point grid of the same box.
    fn refined(&mut self, n: usize, planner: &mut FftPlanner<f64>) -> &[Complex64] {
        let coeffs = &self.coeffs;
        self.refined.entry(n).or_insert_with(|| {
            let nx = coeffs.len();
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (a, c) in coeffs.iter().enumerate() {
                let s = signed_index(a, nx);
                if s == -(nx as i64 / 2) {
                    buf[nx / 2] += 0.5 * c;
                    buf[n - nx / 2] += 0.5 * c;
                } else {
                    buf[s.rem_euclid(n as i64) as usize] += c;
                }
            }
            planner.plan_fft_inverse(n).process(&mut buf);
            buf
        })
    }
}

/// Trapezoid evaluation row by row: the same discrete rule as
/// [`trapezoid_once`], applied as a convolution on the refined interpolant.
/// Cheaper than the multiplier FFT when few rows share a value of `u`.
fn rows_trapezoid_once(
    kernel: &Kernel,
    u: f64,
    eta: f64,
    nyquist_column: bool,
    rows: &[usize],
    col: &mut ColumnInterp,
    grid: &Grid2D,
    n: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let nx = grid.nx();
    let delta = 2.0 * grid.extent_x() / n as f64;
    let ratio = n / nx;
    let odd = kernel.is_odd();
    let reach = kernel.reach(u);
    let taps: Vec<(usize, Complex64)> = (1..=((reach / delta).ceil() as usize + 1).min(n / 2 - 1))
        .filter_map(|j| {
            let t = j as f64 * delta;
            let k = kernel.value(u, t);
            if k == 0.0 {
                return None;
            }
            let phase = -eta * u * t * t;
            let w = if nyquist_column {
                Complex64::new(k * delta * phase.cos(), 0.0)
            } else {
                Complex64::from_polar(k * delta, phase)
            };
            Some((j, w))
        })
        .collect();
    let pv = kernel.pv_limit();
    let xi_weighted = col.xi_weighted.clone();
    let fine = col.refined(n, planner);
    rows.iter()
        .map(|&i| {
            let c = i * ratio;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j, w) in &taps {
                let l = fine[(c + n - j) % n];
                let r = fine[(c + j) % n];
                acc += w * if odd { l - r } else { l + r };
            }
            if let Some(pv) = pv {
                acc += Complex64::new(0.0, -delta * pv) * xi_weighted[i];
            }
            acc
        })
        .collect()
}

fn rows_trapezoid(
    kernel: &Kernel,
    u: f64,
    m: usize,
    rows: &[usize],
    col: &mut ColumnInterp,
    grid: &Grid2D,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<Complex64>> {
    let eta = grid.eta(m);
    let nyq = signed_index(m, grid.ny()) == -(grid.ny() as i64 / 2);
    let mut n = initial_length(kernel, u, eta, grid);
    let mut prev = rows_trapezoid_once(kernel, u, eta, nyq, rows, col, grid, n, planner);
    while n < TRAPEZOID_CAP {
        n *= 2;
        let cur = rows_trapezoid_once(kernel, u, eta, nyq, rows, col, grid, n, planner);
        col.refined.remove(&(n / 2));
        if sup_diff(&cur, &prev) <= MULTIPLIER_TOL * col.coeff_sum.max(sup_abs(&cur)) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!(
        "row-wise trapezoid at u={u}, eta={eta} did not settle within {TRAPEZOID_CAP} points"
    )))
}

/// Whether evaluating `rows` one by one beats one multiplier FFT.
fn rows_are_cheaper(kernel: &Kernel, u: f64, eta: f64, grid: &Grid2D, rows: usize) -> bool {
    let n = initial_length(kernel, u, eta, grid) as f64;
    let taps = kernel.reach(u) * n / (2.0 * grid.extent_x());
    (rows as f64) * 2.0 * taps < n * n.log2()
}

/// Distinct values of `u` in order of first appearance, with their rows.
fn row_groups(u_rows: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &u) in u_rows.iter().enumerate() {
        let key = u.to_bits();
        match index.get(&key) {
            Some(&g) => groups[g].1.push(i),
            None => {
                index.insert(key, groups.len());
                groups.push((u, vec![i]));
            }
        }
    }
    groups
}

pub(crate) fn check_field(kernel: &Kernel, field: &FieldU, grid: &Grid2D) -> Result<()> {
    field.check_grid(grid)?;
    if kernel.needs_positive_u() && !field.is_nonnegative() {
        return Err(Error::FieldPrecondition("u must be >= 0 for operators written in u^(1/2) t".into()));
    }
    let reach = if kernel.needs_positive_u() {
        match field.min_positive() {
            Some(u) => kernel.reach(u),
            None => 0.0,
        }
    } else {
        kernel.reach(0.0)
    };
    grid.check_window(reach)
}

pub(crate) fn apply_spectral(
    f: &GridFunction2D,
    u_rows: &[f64],
    kernel: &Kernel,
    cache: &MultiplierCache,
) -> Result<Array2<Complex64>> {
    let grid = *f.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut planner = FftPlanner::new();
    let coeffs = dft2_coefficients(f.values(), &mut planner);
    let global = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut cols = Array2::<Complex64>::zeros((nx, ny));
    if global == 0.0 {
        return Ok(cols);
    }
    let active: Vec<usize> = (0..ny)
        .filter(|&m| {
            coeffs
                .index_axis(Axis(1), m)
                .iter()
                .any(|z| z.norm() > ACTIVE_COLUMN_FLOOR * global)
        })
        .collect();
    let ifft_x = planner.plan_fft_inverse(nx);
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    let mut columns: HashMap<usize, ColumnInterp> = HashMap::new();
    for (u, rows) in row_groups(u_rows) {
        if kernel.needs_positive_u() && u == 0.0 {
            continue;
        }
        for &m in &active {
            if kernel.is_smooth() && rows_are_cheaper(kernel, u, grid.eta(m), &grid, rows.len()) {
                let col = columns
                    .entry(m)
                    .or_insert_with(|| ColumnInterp::new(coeffs.column(m).to_vec(), &grid, &mut planner));
                let vals = rows_trapezoid(kernel, u, m, &rows, col, &grid, &mut planner)?;
                for (&i, v) in rows.iter().zip(vals) {
                    cols[(i, m)] = v;
                }
                continue;
            }
            let mult = cache.get_or_compute(&grid, u, m, || column_multiplier(kernel, u, m, &grid))?;
            for (a, b) in buf.iter_mut().enumerate() {
                *b = coeffs[(a, m)] * mult[a];
            }
            ifft_x.process(&mut buf);
            for &i in &rows {
                cols[(i, m)] = buf[i];
            }
        }
    }
    let ifft_y = planner.plan_fft_inverse(ny);
    for mut row in cols.axis_iter_mut(Axis(0)) {
        let mut b = row.to_vec();
        ifft_y.process(&mut b);
        row.iter_mut().zip(b).for_each(|(d, s)| *d = s);
    }
    Ok(cols)
}

/// Plancherel route: `fhat` holds `F^(x, eta_m)` and each `eta` fiber is
/// handled as a 1D multiplier problem in `x`, one fiber at a time.
pub(crate) fn apply_fibered(
    fhat: &GridFunction2D,
    u_rows: &[f64],
    kernel: &Kernel,
    cache: &MultiplierCache,
) -> Result<Array2<Complex64>> {
    let grid = *fhat.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut planner = FftPlanner::new();
    let fft_x = planner.plan_fft_forward(nx);
    let ifft_x = planner.plan_fft_inverse(nx);
    let mut out = Array2::<Complex64>::zeros((nx, ny));
    let groups = row_groups(u_rows);
    for m in 0..ny {
        let mut fiber = fhat.values().column(m).to_vec();
        if fiber.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        fft_x.process(&mut fiber);
        for (u, rows) in &groups {
            if kernel.needs_positive_u() && *u == 0.0 {
                continue;
            }
            let mult = cache.get_or_compute(&grid, *u, m, || column_multiplier(kernel, *u, m, &grid))?;
            let mut buf: Vec<Complex64> = fiber.iter().zip(mult.iter()).map(|(c, w)| c * w / nx as f64).collect();
            ifft_x.process(&mut buf);
            for &i in rows {
                out[(i, m)] = buf[i];
            }
        }
    }
    Ok(out)
}

enum Sampler<'a> {
    Bilinear(&'a GridFunction2D, Boundary),
    Fourier(FourierInterpolant),
}

impl Sampler<'_> {
    fn at(&self, x: f64, y: f64) -> Complex64 {
        match self {
            Sampler::Bilinear(f, b) => bilinear(f, x, y, *b),
            Sampler::Fourier(p) => p.eval(x, y),
        }
    }
}

fn direct_once(f: &GridFunction2D, field: &FieldU, kernel: &Kernel, sampler: &Sampler, per_interval: usize) -> Array2<Complex64> {
    let grid = f.grid();
    let xs = grid.xs();
    let ys = grid.ys();
    let odd = kernel.is_odd();
    let mut nodes_for: HashMap<u64, Vec<(f64, f64, f64)>> = HashMap::new();
    Array2::from_shape_fn((grid.nx(), grid.ny()), |(i, j)| {
        let u = field.value(i, j);
        if kernel.needs_positive_u() && u == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let nodes = nodes_for.entry(u.to_bits()).or_insert_with(|| {
            quad::nodes_on_intervals(&kernel.intervals(u), per_interval)
                .into_iter()
                .map(|(t, w)| (t, w * kernel.value(u, t), u * t * t))
                .filter(|n| n.1 != 0.0)
                .collect()
        });
        let (x, y) = (xs[i], ys[j]);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t, wk, dy) in nodes.iter() {
            let l = sampler.at(x - t, y - dy);
            let r = sampler.at(x + t, y - dy);
            acc += wk * if odd { l - r } else { l + r };
        }
        acc
    })
}

pub(crate) fn apply_direct(f: &GridFunction2D, field: &FieldU, kernel: &Kernel, opts: &EvalOptions) -> Result<Array2<Complex64>> {
    let sampler = match opts.scheme {
        Scheme::Bilinear => Sampler::Bilinear(f, opts.boundary),
        Scheme::Fourier => {
            if opts.boundary != Boundary::Periodic {
                return Err(Error::InvalidArgument("the fourier scheme is periodic only".into()));
            }
            Sampler::Fourier(FourierInterpolant::new(f)?)
        }
    };
    if let Some(n) = opts.fixed_nodes {
        return Ok(direct_once(f, field, kernel, &sampler, n));
    }
    let mut n = GL_START;
    let mut prev = direct_once(f, field, kernel, &sampler, n);
    while n < DIRECT_CAP {
        n *= 2;
        let cur = direct_once(f, field, kernel, &sampler, n);
        let diff = cur
            .iter()
            .zip(prev.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prev = cur;
        if diff < DIRECT_TOL {
            break;
        }
    }
    Ok(prev)
}
