use super::*;
use crate::bumps::{C_PHI, C_PSI};
use crate::grid::{Grid2D, LpExponent};
use approx::assert_abs_diff_eq;

fn bump(x: f64, y: f64, r: f64) -> f64 {
    let s = (x * x + y * y) / (r * r);
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

#[test]
fn pk_examples() {
    let g = Grid2D::new(4.0, PI, 8, 64).unwrap();
    let p = BumpProfile::phi0();
    let c8 = GridFunction2D::from_real_fn(g, |_, y| (8.0 * y).cos());
    let p3 = project_pk(&c8, 3, &p).unwrap();
    assert!(p3.max_abs_diff(&c8).unwrap() < 1e-10);
    assert!(project_pk(&c8, 0, &p).unwrap().max_abs() < 1e-12);
    let one = GridFunction2D::from_real_fn(g, |_, _| 1.0);
    assert!(project_pk(&one, 1, &p).unwrap().max_abs() < 1e-12);
    // plateau of P_2 is [4, 8]
    let f = GridFunction2D::from_real_fn(g, |x, y| (1.0 + x) * ((5.0 * y).sin() + (7.0 * y + 0.3).cos()));
    assert!(project_pk(&f, 2, &p).unwrap().max_abs_diff(&f).unwrap() < 1e-10);
    // 5 * 2^3 = 40 > Nyquist 32
    assert!(matches!(project_pk(&f, 4, &p), Err(Error::UnresolvedBand(_))));
}

#[test]
fn sharp_maximal_examples() {
    let g = Grid2D::new(8.0, 8.0, 32, 32).unwrap();
    let ind = GridFunction2D::from_real_fn(g, |x, _| if x.abs() <= 1.0 { 1.0 } else { 0.0 });
    let u0 = FieldU::constant(&g, 0.0).unwrap();
    let m = MaximalOp::sharp(u0, (-3, 2), EvalOptions::bilinear()).unwrap().apply(&ind).unwrap();
    assert_abs_diff_eq!(m.get(16, 5).re, 1.0, epsilon = 1e-12);
    assert!(m.values().iter().all(|z| z.re >= 0.0));

    let sq = GridFunction2D::from_real_fn(g, |x, y| if x.abs() <= 4.0 && y.abs() <= 4.0 { 1.0 } else { 0.0 });
    let u1 = FieldU::constant(&g, 1.0).unwrap();
    let m = MaximalOp::sharp(u1, (-3, 0), EvalOptions::bilinear()).unwrap().apply(&sq).unwrap();
    assert_abs_diff_eq!(m.get(16, 16).re, 1.0, epsilon = 1e-12);
}

#[test]
fn window_must_fit() {
    let g = Grid2D::new(4.0, 4.0, 16, 16).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| bump(x, y, 2.0));
    let u = FieldU::constant(&g, 1.0).unwrap();
    let r = maximal_parabolic_sharp(&f, &u, (0, 2));
    assert!(matches!(r, Err(Error::WindowTooLarge { .. })));
    let r = maximal_parabolic_smoothed(&f, &u, &BumpProfile::phi0(), (0, 1));
    assert!(matches!(r, Err(Error::WindowTooLarge { .. })));
}

#[test]
fn smoothed_constant_gives_c_phi() {
    let g = Grid2D::new(16.0, 4.0, 32, 16).unwrap();
    let one = GridFunction2D::from_real_fn(g, |_, _| 1.0);
    let u = FieldU::constant(&g, 0.0).unwrap();
    let m = maximal_parabolic_smoothed(&one, &u, &BumpProfile::phi0(), (-2, 2)).unwrap();
    for z in m.values() {
        assert_abs_diff_eq!(z.re, C_PHI, epsilon = 1e-10);
    }
    // Also for u != 0: a constant does not see the curve.
    let u = FieldU::constant(&g, 3.0).unwrap();
    let m = maximal_parabolic_smoothed(&one, &u, &BumpProfile::phi0(), (-2, 2)).unwrap();
    assert!(m.values().iter().all(|z| (z.re - C_PHI).abs() < 1e-10));
}

#[test]
fn single_scale_sin_y() {
    let g = Grid2D::new(8.0, PI, 16, 32).unwrap();
    let f = GridFunction2D::from_real_fn(g, |_, y| y.sin());
    let m = single_scale_avg(&f, 0.0, 0, &BumpProfile::phi0()).unwrap();
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            assert_abs_diff_eq!(m.get(i, j).re, C_PHI * g.y(j).sin().abs(), epsilon = 1e-10);
        }
    }
    let zero = GridFunction2D::zeros(g);
    assert_eq!(single_scale_avg(&zero, 1.5, 0, &BumpProfile::phi0()).unwrap().max_abs(), 0.0);
}

#[test]
fn single_scale_anisotropic_covariance() {
    // f2(x, y) = f(x, 2y) on the grid with half the y-extent.
    let g = Grid2D::new(8.0, 4.0, 32, 32).unwrap();
    let g2 = g.with_extent_y(2.0).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| (PI * y / 4.0 * 3.0).cos() * bump(x, 0.0, 3.0) + (PI * x / 8.0).sin());
    let f2 = GridFunction2D::from_real_fn(g2, |x, y| {
        (PI * 2.0 * y / 4.0 * 3.0).cos() * bump(x, 0.0, 3.0) + (PI * x / 8.0).sin()
    });
    let p = BumpProfile::phi0();
    let a = single_scale_avg(&f2, 0.7, 0, &p).unwrap();
    let b = single_scale_avg(&f, 1.4, 0, &p).unwrap();
    // same sample indices: y2_j = y_j / 2
    let d = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    assert!(d < 1e-8, "{d}");
}

#[test]
fn linearisation_identities() {
    let g = Grid2D::new(32.0, 4.0, 64, 16).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| bump(x, y, 6.0) * (1.0 + 0.5 * (3.0 * y).sin()));
    let u = FieldU::from_fn_x(&g, |x| 0.5 + 0.1 * x.abs()).unwrap();
    let p = BumpProfile::phi0();
    let krange = (-2, 1);
    let sup = maximal_parabolic_smoothed(&f, &u, &p, krange).unwrap();
    let max_op = MaximalOp::smoothed(u.clone(), p, krange, EvalOptions::default()).unwrap();
    let per_k = max_op.scale_averages(&f).unwrap();
    // argmax scale field reproduces the sup
    let arg = Array2::from_shape_fn((g.nx(), g.ny()), |(i, j)| {
        per_k
            .iter()
            .max_by(|a, b| a.1.get(i, j).norm().total_cmp(&b.1.get(i, j).norm()))
            .unwrap()
            .0
    });
    let kf = ScaleField::new(arg, krange.0, krange.1).unwrap();
    let lin = linearized_maximal(&f, &u, &kf, &p).unwrap();
    assert!(lin.max_abs_diff(&sup).unwrap() < 1e-14);
    // constant field: equals the single-scale row-wise application
    let k0 = ScaleField::constant(&g, -1);
    let lin = linearized_maximal(&f, &u, &k0, &p).unwrap();
    assert!(lin.max_abs_diff(&per_k[1].1.abs()).unwrap() < 1e-14);
    for (a, b) in lin.values().iter().zip(sup.values()) {
        assert!(a.re <= b.re + 1e-14);
    }
}

#[test]
fn hilbert_of_constant_vanishes() {
    let g = Grid2D::new(16.0, 4.0, 32, 16).unwrap();
    let one = GridFunction2D::from_real_fn(g, |_, _| 1.0);
    let u = FieldU::constant(&g, 1.0).unwrap();
    assert!(hilbert_parabolic(&one, &u, 0.0, 4.0).unwrap().max_abs() < 1e-12);
    assert!(hilbert_parabolic(&one, &u, 0.1, 4.0).unwrap().max_abs() < 1e-12);
    let fam = PartitionFamily::default();
    assert!(high_freq_part(&one, &u, &fam).unwrap().max_abs() < 1e-12);
    assert!(hilbert_parabolic(&one, &u, 2.0, 1.0).is_err());
}

#[test]
fn hilbert_of_cosine_is_pi_sine() {
    let g = Grid2D::new(64.0, 4.0, 256, 8).unwrap();
    let a = PI * 82.0 / 64.0;
    let f = GridFunction2D::from_real_fn(g, |x, _| (a * x).cos());
    let u = FieldU::constant(&g, 0.0).unwrap();
    let h = hilbert_parabolic(&f, &u, 1e-3, 16.0).unwrap();
    let want = GridFunction2D::from_real_fn(g, |x, _| PI * (a * x).sin());
    let err = h.max_abs_diff(&want).unwrap() / PI;
    assert!(err < 1e-2, "{err}");
}

#[test]
fn piece_constants() {
    let g = Grid2D::new(16.0, 4.0, 32, 16).unwrap();
    let one = GridFunction2D::from_real_fn(g, |_, _| 1.0);
    let u = FieldU::constant(&g, 1.0).unwrap();
    let abs = oscillatory_piece_tl(&one, &u, 0, PieceKernel::Abs).unwrap();
    assert!(abs.values().iter().all(|z| (z.re - C_PSI).abs() < 1e-10 && z.im.abs() < 1e-12));
    let signed = oscillatory_piece_tl(&one, &u, 0, PieceKernel::Signed).unwrap();
    assert!(signed.max_abs() < 1e-12);
}

#[test]
fn zero_rows_are_skipped_and_negative_u_rejected() {
    let g = Grid2D::new(16.0, 4.0, 32, 16).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| bump(x, y, 4.0));
    let u = FieldU::from_fn_x(&g, |x| if x < 0.0 { 0.0 } else { 1.0 }).unwrap();
    let t = oscillatory_piece_tl(&f, &u, 1, PieceKernel::Abs).unwrap();
    assert!((0..16).all(|i| (0..16).all(|j| t.get(i, j).norm() == 0.0)));
    let neg = FieldU::constant(&g, -1.0).unwrap();
    assert!(matches!(
        oscillatory_piece_tl(&f, &neg, 1, PieceKernel::Abs),
        Err(Error::FieldPrecondition(_))
    ));
    // l = 4 reaches 24 > 16
    assert!(matches!(
        oscillatory_piece_tl(&f, &FieldU::constant(&g, 1.0).unwrap(), 4, PieceKernel::Abs),
        Err(Error::WindowTooLarge { .. })
    ));
}

#[test]
fn piece_support_is_respected() {
    // f supported far from every parabola arc the piece can reach from x=0.
    let g = Grid2D::new(32.0, 8.0, 128, 32).unwrap();
    let u = FieldU::constant(&g, 1.0).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| bump(x - 10.0, y, 1.0));
    let t = OscillatoryPiece::new(u, 1, PieceKernel::Abs, PartitionFamily::default(), EvalOptions::bilinear())
        .apply(&f)
        .unwrap();
    // psi_1 lives on |t| in [1, 3]: from x = 0 the samples stay in [-3, 3],
    // from x = 8 they reach [5, 11] and meet the bump.
    let at = |i: usize| (0..g.ny()).fold(0.0f64, |m, j| m.max(t.get(i, j).norm()));
    assert_eq!(at(64), 0.0);
    assert!(at(80) > 0.0);
}

#[test]
fn spectral_and_direct_engines_agree() {
    let g = Grid2D::new(8.0, 4.0, 16, 16).unwrap();
    let f = GridFunction2D::from_fn(g, |x, y| {
        Complex64::new((PI * x / 8.0 * 3.0).cos() * (PI * y / 4.0 * 2.0).sin(), (PI * x / 8.0).sin())
    });
    let u = FieldU::from_fn_x(&g, |x| 1.0 + 0.25 * (PI * x / 8.0).cos()).unwrap();
    let fam = PartitionFamily::default();
    let direct = EvalOptions::direct_fourier(128);
    let pairs: Vec<(Box<dyn GridOperator>, Box<dyn GridOperator>)> = vec![
        (
            Box::new(HighFreqPart::new(u.clone(), fam, EvalOptions::default())),
            Box::new(HighFreqPart::new(u.clone(), fam, direct)),
        ),
        (
            Box::new(OscillatoryPiece::new(u.clone(), 1, PieceKernel::Signed, fam, EvalOptions::default())),
            Box::new(OscillatoryPiece::new(u.clone(), 1, PieceKernel::Signed, fam, direct)),
        ),
        (
            Box::new(HilbertParabolic::new(u.clone(), HilbertTruncation::Sharp { eps: 0.0, r: 3.0 }, fam, EvalOptions::default()).unwrap()),
            Box::new(HilbertParabolic::new(u.clone(), HilbertTruncation::Sharp { eps: 0.0, r: 3.0 }, fam, direct).unwrap()),
        ),
        (
            Box::new(MaximalOp::sharp(u.clone(), (-1, 1), EvalOptions::default()).unwrap()),
            Box::new(MaximalOp::sharp(u.clone(), (-1, 1), direct).unwrap()),
        ),
    ];
    for (a, b) in pairs {
        let x = a.apply(&f).unwrap();
        let y = b.apply(&f).unwrap();
        let d = x.max_abs_diff(&y).unwrap() / y.max_abs();
        assert!(d < 1e-8, "{}: {d}", a.id());
    }
}

#[test]
fn reconstruction_small_grid() {
    let g = Grid2D::new(16.0, 16.0, 64, 32).unwrap();
    let f = GridFunction2D::from_real_fn(g, |x, y| bump(x, y, 5.0));
    let u = FieldU::from_fn_x(&g, |x| if x < 0.0 { 4.0 } else { 9.0 }).unwrap();
    let fam = PartitionFamily::default();
    let levels = 3;
    let mut sum = HighFreqPart::new(u.clone(), fam, EvalOptions::default()).apply(&f).unwrap();
    for l in 1..=levels {
        let t = OscillatoryPiece::new(u.clone(), l, PieceKernel::Signed, fam, EvalOptions::default())
            .apply(&f)
            .unwrap();
        sum = sum.add(&t).unwrap();
    }
    let h = HilbertParabolic::new(u, HilbertTruncation::Partition { levels }, fam, EvalOptions::default())
        .unwrap()
        .apply(&f)
        .unwrap();
    let rel = sum.max_abs_diff(&h).unwrap() / h.max_abs();
    assert!(rel < 1e-9, "{rel}");
}

#[test]
fn maximal_ops_are_sublinear_and_bounded() {
    let g = Grid2D::new(16.0, 4.0, 32, 16).unwrap();
    let f1 = GridFunction2D::from_real_fn(g, |x, y| bump(x, y, 3.0) * (2.0 * y).cos());
    let f2 = GridFunction2D::from_real_fn(g, |x, y| (PI * x / 16.0).sin() * (PI * y / 4.0).cos());
    let u = FieldU::from_fn_x(&g, |x| 0.3 + 0.02 * x).unwrap();
    let p = BumpProfile::phi0();
    let m = |f: &GridFunction2D| maximal_parabolic_smoothed(f, &u, &p, (-3, 1)).unwrap();
    let (a, b, s) = (m(&f1), m(&f2), m(&f1.add(&f2).unwrap()));
    for ((x, y), z) in a.values().iter().zip(b.values()).zip(s.values()) {
        assert!(z.re <= x.re + y.re + 1e-10);
    }
    let sup = f1.add(&f2).unwrap().lp_norm(LpExponent::Infinity);
    assert!(s.lp_norm(LpExponent::Infinity) <= C_PHI * sup * (1.0 + 1e-9));
}

#[test]
fn muk_examples() {
    let p = BumpProfile::phi0();
    for k in [-3, 0, 4] {
        assert_abs_diff_eq!(multiplier_muk(2.0, k, 0.0, 0.0, &p).unwrap().re, C_PHI, epsilon = 1e-9);
    }
    for (xi, eta) in [(1.0, 3.0), (-7.0, 0.5), (0.0, 40.0)] {
        assert!(multiplier_muk(1.3, 1, xi, eta, &p).unwrap().norm() <= C_PHI + 1e-12);
    }
    // (u, k) = (1, 0) vs (1/4, 1) with 2^k xi matched
    let a = multiplier_muk(1.0, 0, 6.0, 50.0, &p).unwrap();
    let b = multiplier_muk(0.25, 1, 3.0, 50.0, &p).unwrap();
    assert!((a - b).norm() < 1e-8);
}
