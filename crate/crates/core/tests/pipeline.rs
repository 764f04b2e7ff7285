//! End-to-end checks through the public API, across modules.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use vparab::bumps::{BumpProfile, PartitionFamily};
use vparab::grid::{inverse_partial_fft_y, partial_fft_y, read_binary, read_csv, write_binary, write_csv};
use vparab::normlab::{estimate_opnorm, random_bandlimited, OperatorSpec, SamplerConfig};
use vparab::transforms::{
    high_freq_part, hilbert_parabolic, oscillatory_piece_tl, EvalOptions, FieldSpec, FieldU, GridOperator,
    MaximalOp, PieceKernel,
};
use vparab::{Error, Grid2D, GridFunction2D, LpExponent};

fn wave_grid() -> Grid2D {
    Grid2D::new(8.0, 2.0 * PI, 32, 16).unwrap()
}

fn sample(grid: &Grid2D, seed: u64) -> GridFunction2D {
    let cfg = SamplerConfig {
        band: -1,
        ..Default::default()
    };
    random_bandlimited(grid, &cfg, seed).unwrap()
}

#[test]
fn files_and_spectra_round_trip() {
    let g = wave_grid();
    let f = sample(&g, 1);
    let fhat = partial_fft_y(&f).unwrap();

    let mut csv = Vec::new();
    write_csv(&fhat, &mut csv).unwrap();
    let back = read_csv(&csv[..]).unwrap();
    assert_eq!(back.tag(), fhat.tag());
    assert_eq!(back.max_abs_diff(&fhat).unwrap(), 0.0);

    let mut bin = Vec::new();
    write_binary(&f, &mut bin).unwrap();
    assert_eq!(read_binary(&bin[..]).unwrap().max_abs_diff(&f).unwrap(), 0.0);

    // Plancherel in y, then back.
    let p = LpExponent::two();
    assert!((fhat.lp_norm(p) / f.lp_norm(p) - 1.0).abs() < 1e-12);
    assert!(inverse_partial_fft_y(&fhat).unwrap().max_abs_diff(&f).unwrap() < 1e-13);
}

#[test]
fn sharp_maximal_of_box_indicator_is_one_at_origin() {
    let g = Grid2D::new(8.0, 8.0, 64, 64).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| if x.abs() <= 4.0 && y.abs() <= 4.0 { 1.0 } else { 0.0 });
    let u = FieldU::constant(&g, 1.0).unwrap();
    let m = MaximalOp::sharp(u, (-3, 0), EvalOptions::bilinear()).unwrap().apply(&f).unwrap();
    assert!((m.get(32, 32).re - 1.0).abs() < 1e-12, "{}", m.get(32, 32));
    assert!(m.values().iter().all(|z| z.re >= 0.0 && z.im == 0.0));
}

#[test]
fn hilbert_kills_constants() {
    let g = wave_grid();
    let f = GridFunction2D::from_real_fn(g, |_, _| 1.0);
    let u = FieldSpec::Steps { values: vec![0.5, 1.0] }.build(&g).unwrap();
    let h = hilbert_parabolic(&f, &u, 0.01, 2.0).unwrap();
    assert!(h.max_abs() < 1e-12, "{}", h.max_abs());
}

#[test]
fn pieces_and_high_part_rebuild_the_matched_hilbert_transform() {
    let g = Grid2D::new(16.0, 2.0 * PI, 64, 16).unwrap();
    let u = FieldU::constant(&g, 16.0).unwrap();
    let fam = PartitionFamily::default();
    let f = sample(&g, 4);
    let mut sum = high_freq_part(&f, &u, &fam).unwrap();
    for l in 1..=4 {
        sum = sum.add(&oscillatory_piece_tl(&f, &u, l, PieceKernel::Signed).unwrap()).unwrap();
    }
    let spec: OperatorSpec = serde_json::from_value(serde_json::json!({
        "op": "H",
        "field": {"kind": "constant", "value": 16.0},
        "truncation": {"kind": "partition", "levels": 4},
    }))
    .unwrap();
    let h = spec.build(&g).unwrap().apply(&f).unwrap();
    let rel = h.max_abs_diff(&sum).unwrap() / h.max_abs();
    assert!(rel < 1e-10, "relative gap {rel:e}");
}

#[test]
fn smoothed_maximal_norm_estimate_is_reproducible() {
    let g = wave_grid();
    let op = MaximalOp::smoothed(
        FieldU::constant(&g, 1.0).unwrap(),
        BumpProfile::phi0(),
        (-2, 0),
        EvalOptions::default(),
    )
    .unwrap();
    let cfg = SamplerConfig::default();
    let a = estimate_opnorm(&op, &g, LpExponent::two(), &cfg, 3, 7).unwrap();
    let b = estimate_opnorm(&op, &g, LpExponent::two(), &cfg, 3, 7).unwrap();
    assert_eq!(a.norm_estimate.to_bits(), b.norm_estimate.to_bits());
    assert!(a.norm_estimate > 0.0 && a.norm_estimate <= BumpProfile::phi0().integral() + 1e-12);
}

#[test]
fn oversized_window_is_a_numerical_error() {
    let g = wave_grid();
    let u = FieldU::constant(&g, 1.0).unwrap();
    let f = GridFunction2D::from_fn(g, |x, _| C::new((-x * x).exp(), 0.0));
    let err = MaximalOp::sharp(u, (0, 5), EvalOptions::default()).unwrap().apply(&f).unwrap_err();
    assert!(matches!(err, Error::WindowTooLarge { .. }), "{err}");
    assert!(err.is_numerical());
}
