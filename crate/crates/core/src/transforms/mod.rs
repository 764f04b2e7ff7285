//! Operators along the variable parabola `(t, u(x) t^2)`.
//!
//! Every operator is `T f(x, y) = integral f(x - t, y - u t^2) K_u(t) dt`
//! for some kernel, possibly followed by a modulus and a supremum over
//! scales. Kernels live in [`kernel`]; the two evaluation engines in
//! [`engine`].

mod engine;
pub mod field;
mod kernel;

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use field::{compute_case_mask, CaseMask, FieldSpec, FieldU, ScaleField};

use crate::bumps::{BumpProfile, PartitionFamily};
use crate::error::{Error, Result};
use crate::grid::{inverse_partial_fft_y, partial_fft_y, AxisTag, Boundary, GridFunction2D, Scheme};
use crate::quad;
use engine::MultiplierCache;
use kernel::Kernel;

/// How operators sample `f` off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub scheme: Scheme,
    pub boundary: Boundary,
    /// Fixed Gauss–Legendre points per interval for the direct engine;
    /// `None` refines 64, 128, ... up to 1024.
    pub fixed_nodes: Option<usize>,
}

impl EvalOptions {
    pub fn bilinear() -> Self {
        EvalOptions {
            scheme: Scheme::Bilinear,
            ..Default::default()
        }
    }

    /// Forces the per-point node-sum engine with the Fourier interpolant.
    pub fn direct_fourier(nodes: usize) -> Self {
        EvalOptions {
            fixed_nodes: Some(nodes),
            ..Default::default()
        }
    }
}

/// Anything that maps grid functions to grid functions.
pub trait GridOperator: Send + Sync + std::fmt::Debug {
    fn id(&self) -> String;
    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D>;
}

/// A linear kernel operator bound to a field and evaluation options.
#[derive(Debug, Clone)]
struct LinearOp {
    field: FieldU,
    kernel: Kernel,
    opts: EvalOptions,
    cache: MultiplierCache,
}

impl LinearOp {
    fn new(field: FieldU, kernel: Kernel, opts: EvalOptions) -> Self {
        LinearOp {
            field,
            kernel,
            opts,
            cache: MultiplierCache::default(),
        }
    }

    fn uses_spectral(&self) -> bool {
        self.field.is_one_variable()
            && self.opts.scheme == Scheme::Fourier
            && self.opts.boundary == Boundary::Periodic
            && self.opts.fixed_nodes.is_none()
    }

    fn values(&self, f: &GridFunction2D) -> Result<Array2<Complex64>> {
        f.require_spatial()?;
        engine::check_field(&self.kernel, &self.field, f.grid())?;
        match &self.field {
            FieldU::OneVariable(u) if self.uses_spectral() => engine::apply_spectral(f, u, &self.kernel, &self.cache),
            _ => engine::apply_direct(f, &self.field, &self.kernel, &self.opts),
        }
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        GridFunction2D::new(*f.grid(), self.values(f)?, AxisTag::Spatial)
    }

    fn apply_fibered(&self, fhat: &GridFunction2D) -> Result<GridFunction2D> {
        if fhat.tag() != AxisTag::YSpectral {
            return Err(Error::WrongTag {
                expected: AxisTag::YSpectral.name(),
                found: fhat.tag().name(),
            });
        }
        let FieldU::OneVariable(u) = &self.field else {
            return Err(Error::InvalidArgument("the fibered route needs a one-variable field".into()));
        };
        engine::check_field(&self.kernel, &self.field, fhat.grid())?;
        let vals = engine::apply_fibered(fhat, u, &self.kernel, &self.cache)?;
        GridFunction2D::new(*fhat.grid(), vals, AxisTag::YSpectral)
    }
}

fn real_output(f: &GridFunction2D, values: Array2<f64>) -> Result<GridFunction2D> {
    GridFunction2D::new(*f.grid(), values.mapv(|v| Complex64::new(v, 0.0)), AxisTag::Spatial)
}

/// `c * f`.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub scale: f64,
}

impl GridOperator for Identity {
    fn id(&self) -> String {
        "identity".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        f.require_spatial()?;
        Ok(f.scale(self.scale))
    }
}

/// Littlewood–Paley projection in `y` with the height-1 symbol `phi0(eta / 2^k)`.
#[derive(Debug, Clone, Copy)]
pub struct ProjectPk {
    pub k: i32,
    pub profile: BumpProfile,
}

impl GridOperator for ProjectPk {
    fn id(&self) -> String {
        "Pk".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        project_pk(f, self.k, &self.profile)
    }
}

pub fn project_pk(f: &GridFunction2D, k: i32, profile: &BumpProfile) -> Result<GridFunction2D> {
    f.require_spatial()?;
    let g = *f.grid();
    let s = 2f64.powi(k);
    let top = profile.support().1 * s;
    if top > g.eta_nyquist() {
        return Err(Error::UnresolvedBand(format!(
            "P_{k} reaches |eta| = {top}, grid Nyquist is {}",
            g.eta_nyquist()
        )));
    }
    let symbol: Vec<f64> = (0..g.ny()).map(|m| profile.eval(g.eta(m) / s)).collect();
    if symbol.iter().all(|v| *v == 0.0) {
        return Err(Error::UnresolvedBand(format!(
            "no grid frequency eta_m = m pi / {} falls in the band of P_{k}",
            g.extent_y()
        )));
    }
    let spec = partial_fft_y(f)?;
    let mut vals = spec.into_values();
    for mut row in vals.rows_mut() {
        row.iter_mut().zip(&symbol).for_each(|(z, s)| *z *= *s);
    }
    inverse_partial_fft_y(&GridFunction2D::new(g, vals, AxisTag::YSpectral)?)
}

/// `sup_k |integral f(x - t, y - u t^2) K_k(t) dt|` over a scale range,
/// with `K_k` the sharp window mean or the smooth `phi_k`.
#[derive(Debug, Clone)]
pub struct MaximalOp {
    id: &'static str,
    scales: Vec<(i32, LinearOp)>,
}

impl MaximalOp {
    /// `Msharp`: means over `|t| <= 2^k`.
    pub fn sharp(field: FieldU, krange: (i32, i32), opts: EvalOptions) -> Result<Self> {
        check_krange(krange)?;
        Ok(MaximalOp {
            id: "Msharp",
            scales: (krange.0..=krange.1)
                .map(|k| (k, LinearOp::new(field.clone(), Kernel::SharpAvg { k }, opts)))
                .collect(),
        })
    }

    /// `Msmooth`: the kernels `phi_k`.
    pub fn smoothed(field: FieldU, profile: BumpProfile, krange: (i32, i32), opts: EvalOptions) -> Result<Self> {
        check_krange(krange)?;
        Ok(MaximalOp {
            id: "Msmooth",
            scales: (krange.0..=krange.1)
                .map(|k| (k, LinearOp::new(field.clone(), Kernel::SmoothAvg { k, profile }, opts)))
                .collect(),
        })
    }

    /// The complex single-scale averages, one per `k`.
    pub fn scale_averages(&self, f: &GridFunction2D) -> Result<Vec<(i32, GridFunction2D)>> {
        self.scales.iter().map(|(k, op)| Ok((*k, op.apply(f)?))).collect()
    }
}

fn check_krange(krange: (i32, i32)) -> Result<()> {
    if krange.0 > krange.1 {
        return Err(Error::InvalidArgument(format!("empty scale range {krange:?}")));
    }
    Ok(())
}

impl GridOperator for MaximalOp {
    fn id(&self) -> String {
        self.id.into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        let g = f.grid();
        let mut out = Array2::<f64>::zeros((g.nx(), g.ny()));
        for (_, op) in &self.scales {
            let v = op.values(f)?;
            out.zip_mut_with(&v, |o, z| *o = o.max(z.norm()));
        }
        real_output(f, out)
    }
}

pub fn maximal_parabolic_sharp(f: &GridFunction2D, u: &FieldU, krange: (i32, i32)) -> Result<GridFunction2D> {
    MaximalOp::sharp(u.clone(), krange, EvalOptions::default())?.apply(f)
}

pub fn maximal_parabolic_smoothed(
    f: &GridFunction2D,
    u: &FieldU,
    profile: &BumpProfile,
    krange: (i32, i32),
) -> Result<GridFunction2D> {
    MaximalOp::smoothed(u.clone(), *profile, krange, EvalOptions::default())?.apply(f)
}

/// `Mk`: `|integral f(x - t, y - u t^2) phi_k(t) dt|` for a fixed real `u`.
#[derive(Debug, Clone)]
pub struct SingleScale {
    u_val: f64,
    k: i32,
    profile: BumpProfile,
    opts: EvalOptions,
}

impl SingleScale {
    pub fn new(u_val: f64, k: i32, profile: BumpProfile, opts: EvalOptions) -> Result<Self> {
        if !u_val.is_finite() {
            return Err(Error::FieldPrecondition(format!("u = {u_val}")));
        }
        Ok(SingleScale {
            u_val,
            k,
            profile,
            opts,
        })
    }

    /// The complex average before taking the modulus.
    pub fn average(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        LinearOp::new(
            FieldU::constant(f.grid(), self.u_val)?,
            Kernel::SmoothAvg {
                k: self.k,
                profile: self.profile,
            },
            self.opts,
        )
        .apply(f)
    }
}

impl GridOperator for SingleScale {
    fn id(&self) -> String {
        "Mk".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        Ok(self.average(f)?.abs())
    }
}

pub fn single_scale_avg(f: &GridFunction2D, u_val: f64, k: i32, profile: &BumpProfile) -> Result<GridFunction2D> {
    SingleScale::new(u_val, k, *profile, EvalOptions::default())?.apply(f)
}

/// `Mlin`: `|integral f(x - t, y - u(x) t^2) phi_{k(x,y)}(t) dt|`.
#[derive(Debug, Clone)]
pub struct LinearizedMaximal {
    kfield: ScaleField,
    inner: MaximalOp,
}

impl LinearizedMaximal {
    pub fn new(field: FieldU, kfield: ScaleField, profile: BumpProfile, opts: EvalOptions) -> Result<Self> {
        let inner = MaximalOp::smoothed(field, profile, kfield.range(), opts)?;
        Ok(LinearizedMaximal { kfield, inner })
    }

    /// The complex linearised average.
    pub fn average(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.kfield.check_grid(f.grid())?;
        let (k_min, _) = self.kfield.range();
        let per_k = self.inner.scale_averages(f)?;
        let vals = Array2::from_shape_fn(self.kfield.values().dim(), |(i, j)| {
            per_k[(self.kfield.get(i, j) - k_min) as usize].1.get(i, j)
        });
        GridFunction2D::new(*f.grid(), vals, AxisTag::Spatial)
    }
}

impl GridOperator for LinearizedMaximal {
    fn id(&self) -> String {
        "Mlin".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        Ok(self.average(f)?.abs())
    }
}

pub fn linearized_maximal(
    f: &GridFunction2D,
    u: &FieldU,
    kfield: &ScaleField,
    profile: &BumpProfile,
) -> Result<GridFunction2D> {
    LinearizedMaximal::new(u.clone(), kfield.clone(), *profile, EvalOptions::default())?.apply(f)
}

/// Truncation of the Hilbert kernel `1/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HilbertTruncation {
    /// `eps <= |t| <= r`; `eps = 0` is the principal value.
    Sharp { eps: f64, r: f64 },
    /// `theta(u^{1/2} t / 2^levels) / t`: exactly the sum of the high part
    /// and the signed pieces `l = 1..=levels`.
    Partition { levels: i32 },
}

/// `H`: the truncated Hilbert transform along the parabola.
#[derive(Debug, Clone)]
pub struct HilbertParabolic {
    op: LinearOp,
    trunc: HilbertTruncation,
}

impl HilbertParabolic {
    pub fn new(field: FieldU, trunc: HilbertTruncation, family: PartitionFamily, opts: EvalOptions) -> Result<Self> {
        let kernel = match trunc {
            HilbertTruncation::Sharp { eps, r } => {
                if !(eps >= 0.0 && eps < r && r.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "Hilbert truncation needs 0 <= eps < R, got eps={eps}, R={r}"
                    )));
                }
                Kernel::HilbertSharp { eps, r }
            }
            HilbertTruncation::Partition { levels } => {
                if !field.is_positive() {
                    return Err(Error::FieldPrecondition(
                        "the partition-matched truncation needs u > 0 everywhere".into(),
                    ));
                }
                Kernel::HilbertSmooth { levels, family }
            }
        };
        Ok(HilbertParabolic {
            op: LinearOp::new(field, kernel, opts),
            trunc,
        })
    }

    pub fn truncation(&self) -> HilbertTruncation {
        self.trunc
    }
}

impl HilbertParabolic {
    /// The operator on `F^(x, eta)`, one `eta` fiber at a time; the input and
    /// output are y-spectral.
    pub fn apply_fibered(&self, fhat: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply_fibered(fhat)
    }
}

impl GridOperator for HilbertParabolic {
    fn id(&self) -> String {
        "H".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply(f)
    }
}

pub fn hilbert_parabolic(f: &GridFunction2D, u: &FieldU, eps: f64, r: f64) -> Result<GridFunction2D> {
    HilbertParabolic::new(
        u.clone(),
        HilbertTruncation::Sharp { eps, r },
        PartitionFamily::default(),
        EvalOptions::default(),
    )?
    .apply(f)
}

/// `dt/|t|` (maximal form) or `dt/t` (Hilbert form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceKernel {
    Abs,
    Signed,
}

/// `Tl`: `integral f(x - t, y - u(x) t^2) psi_l(u(x)^{1/2} t) dt / |t|` (or `/ t`).
#[derive(Debug, Clone)]
pub struct OscillatoryPiece {
    op: LinearOp,
    l: i32,
}

impl OscillatoryPiece {
    pub fn new(field: FieldU, l: i32, kernel: PieceKernel, family: PartitionFamily, opts: EvalOptions) -> Self {
        OscillatoryPiece {
            op: LinearOp::new(
                field,
                Kernel::Piece {
                    l,
                    family,
                    signed: kernel == PieceKernel::Signed,
                },
                opts,
            ),
            l,
        }
    }

    pub fn level(&self) -> i32 {
        self.l
    }

    /// Largest `|t|` the piece reaches for coefficient `u`.
    pub fn reach(&self, u: f64) -> f64 {
        self.op.kernel.reach(u)
    }
}

impl OscillatoryPiece {
    /// The operator on `F^(x, eta)`, one `eta` fiber at a time; the input and
    /// output are y-spectral.
    pub fn apply_fibered(&self, fhat: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply_fibered(fhat)
    }
}

impl GridOperator for OscillatoryPiece {
    fn id(&self) -> String {
        "Tl".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply(f)
    }
}

pub fn oscillatory_piece_tl(f: &GridFunction2D, u: &FieldU, l: i32, kernel: PieceKernel) -> Result<GridFunction2D> {
    OscillatoryPiece::new(u.clone(), l, kernel, PartitionFamily::default(), EvalOptions::default()).apply(f)
}

/// `Hhigh`: `integral f(x - t, y - u(x) t^2) Psi0(u(x)^{1/2} t) dt / t`, the
/// high part after the change of variable `u^{1/2} t -> t`.
#[derive(Debug, Clone)]
pub struct HighFreqPart {
    op: LinearOp,
}

impl HighFreqPart {
    pub fn new(field: FieldU, family: PartitionFamily, opts: EvalOptions) -> Self {
        HighFreqPart {
            op: LinearOp::new(field, Kernel::High { family }, opts),
        }
    }
}

impl HighFreqPart {
    /// The operator on `F^(x, eta)`, one `eta` fiber at a time; the input and
    /// output are y-spectral.
    pub fn apply_fibered(&self, fhat: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply_fibered(fhat)
    }
}

impl GridOperator for HighFreqPart {
    fn id(&self) -> String {
        "Hhigh".into()
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.op.apply(f)
    }
}

pub fn high_freq_part(f: &GridFunction2D, u: &FieldU, family: &PartitionFamily) -> Result<GridFunction2D> {
    HighFreqPart::new(u.clone(), *family, EvalOptions::default()).apply(f)
}

/// `outer(inner(f))`.
#[derive(Debug)]
pub struct Composed {
    pub outer: Box<dyn GridOperator>,
    pub inner: Box<dyn GridOperator>,
}

impl GridOperator for Composed {
    fn id(&self) -> String {
        format!("{}∘{}", self.outer.id(), self.inner.id())
    }

    fn apply(&self, f: &GridFunction2D) -> Result<GridFunction2D> {
        self.outer.apply(&self.inner.apply(f)?)
    }
}

/// `m^u_k(xi, eta) = integral e^{i t xi + i u t^2 eta} phi_k(t) dt`.
///
/// Each smooth piece of the support gets Gauss–Legendre panels sized so the
/// phase turns by at most `2 pi` per panel; the panel count doubles until two
/// passes agree to `1e-9` relative, with an absolute floor of `1e-12` times
/// the bound `2 (b - a)` on the `L^1` mass of `phi_k`.
pub fn multiplier_muk(u: f64, k: i32, xi: f64, eta: f64, profile: &BumpProfile) -> Result<Complex64> {
    const ORDER: usize = 16;
    let s = 2f64.powi(k);
    let [a, c, d, b] = profile.breakpoints();
    let pieces = [(a * s, c * s), (c * s, d * s), (d * s, b * s)];
    let a2 = u * eta;
    let eval = |mult: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(p, q) in &pieces {
            for sign in [1.0, -1.0] {
                // Full turns of t xi + a2 t^2 over the piece.
                let turn = (xi.abs() * (q - p) + a2.abs() * (q * q - p * p)) / (2.0 * PI);
                let panels = mult * (turn.ceil() as usize + 1);
                for (t, w) in quad::composite(p, q, panels, ORDER) {
                    let tt = sign * t;
                    acc += Complex64::from_polar(w * crate::bumps::eval_phi_k(profile, k, tt), tt * xi + a2 * tt * tt);
                }
            }
        }
        acc
    };
    let mut mult = 1;
    let mut prev = eval(mult);
    while mult < 1 << 12 {
        mult *= 2;
        let cur = eval(mult);
        if (cur - prev).norm() <= 1e-9 * cur.norm() + 1e-12 * 2.0 * (b - a) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!(
        "m^u_k at u={u}, k={k}, xi={xi}, eta={eta}"
    )))
}

#[cfg(test)]
mod tests;
