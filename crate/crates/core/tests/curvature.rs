mod common;

use std::f64::consts::PI;

use common::{assert_close, binomial, names, random_point, random_torus, rng};
use curvlab_core::curvature::identities as id;
use curvlab_core::curvature::{Chart, ChartKind, CurvatureState, Scalar};
use curvlab_core::expr::{parse, Expr};
use curvlab_core::tensor::{covariant_derivative, Co, PointTensor};
use curvlab_core::Error;

fn state(chart: &Chart, p: &[f64], order: usize) -> CurvatureState {
    CurvatureState::new(chart, p, order).unwrap()
}

#[test]
fn space_forms() {
    for n in 2..=5 {
        let chart = Chart::sphere_polar(n, None).unwrap();
        let mut r = rng(n as u64);
        for _ in 0..3 {
            let p = random_point(&chart, &mut r);
            let order = if n >= 4 { 4 } else { 3 };
            let s = state(&chart, &p, order);
            let nf = n as f64;
            assert_close(s.scalar_curvature().unwrap().value(), nf * (nf - 1.0), 1e-12, "R");
            // R_ijkl = g_ik g_jl − g_il g_jk
            let g = s.metric();
            let rm = s.riemann().unwrap();
            let want = PointTensor::from_fn(n, &[Co; 4], |ix| {
                let v = g.value(&[ix[0], ix[2]]) * g.value(&[ix[1], ix[3]])
                    - g.value(&[ix[0], ix[3]]) * g.value(&[ix[1], ix[2]]);
                curvlab_core::expr::Jet::constant(n, 0, v)
            });
            assert!(id::compare(rm, &want).unwrap() < 1e-12);
            assert_close(s.gauss_bonnet(1).unwrap().value(), 2.0 * nf * (nf - 1.0), 1e-12, "G_2");
            if n < 3 {
                continue;
            }
            assert!(id::compare(s.schouten().unwrap(), &g.scale(0.5)).unwrap() < 1e-12);
            assert!(s.weyl().unwrap().max_abs_value() < 1e-11);
            assert!(s.cotton().unwrap().max_abs_value() < 1e-11);
            for k in 0..=n {
                let want = binomial(n, k) / 2f64.powi(k as i32);
                assert_close(s.sigma(k).unwrap().value(), want, 1e-12, "sigma_k");
            }
            if n >= 4 {
                assert!(s.bach().unwrap().max_abs_value() < 1e-10);
            }
            if n == 4 {
                assert_close(s.gauss_bonnet(2).unwrap().value(), 96.0, 1e-12, "G_4(S^4)");
            }
            if n == 5 {
                assert_close(s.v6().unwrap().value(), -0.15625, 1e-12, "v6(S^5)");
            }
        }
    }
}

#[test]
fn trace_of_ricci_on_s3() {
    let chart = Chart::sphere_polar(3, None).unwrap();
    let s = state(&chart, &[0.7, 1.9, 2.5], 2);
    let r = s.trace(s.ricci().unwrap(), 0, 1).unwrap();
    assert_close(r.as_scalar().value(), 6.0, 1e-13, "tr Ric");
}

#[test]
fn polar_plane_christoffel() {
    let nm = names(&["r", "th"]);
    let metric = vec![
        parse("1", &nm).unwrap(),
        parse("0", &nm).unwrap(),
        parse("r^2", &nm).unwrap(),
    ];
    let chart = Chart::new(
        ChartKind::Inline,
        nm,
        vec![(0.5, 3.0), (0.0, 2.0 * PI)],
        vec![false, true],
        metric,
        "polar plane",
    )
    .unwrap();
    let r0 = 1.7;
    let s = state(&chart, &[r0, 0.4], 3);
    let gamma = s.christoffel().unwrap();
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let want = match (k, i, j) {
                    (0, 1, 1) => -r0,
                    (1, 0, 1) | (1, 1, 0) => 1.0 / r0,
                    _ => 0.0,
                };
                assert!((gamma.value(&[k, i, j]) - want).abs() < 1e-14);
            }
        }
    }
    assert!(s.riemann().unwrap().max_abs_value() < 1e-13);
}

#[test]
fn flat_box_is_flat() {
    let chart = Chart::flat_box(4).unwrap();
    let s = state(&chart, &[0.1, -0.2, 0.3, 0.5], 4);
    assert_eq!(s.christoffel().unwrap().max_abs_value(), 0.0);
    assert_eq!(s.riemann().unwrap().max_abs_value(), 0.0);
    assert_eq!(s.bach().unwrap().max_abs_value(), 0.0);
}

#[test]
fn two_sphere_gauss_curvature() {
    let chart = Chart::sphere_polar(2, None).unwrap();
    let s = state(&chart, &[1.1, 0.3], 2);
    let g = s.metric();
    let det = g.value(&[0, 0]) * g.value(&[1, 1]) - g.value(&[0, 1]).powi(2);
    assert_close(s.riemann().unwrap().value(&[0, 1, 0, 1]), det, 1e-14, "R_1212");
}

#[test]
fn product_of_spheres() {
    let (r1, r2) = (1.0, 1.0);
    let chart = Chart::product_s2xs2(r1, r2).unwrap();
    let s = state(&chart, &[0.8, 1.0, 2.1, 4.0], 2);
    let rm = s.riemann().unwrap();
    let block = |i: usize| i / 2;
    for flat in 0..256 {
        let idx = [flat / 64, (flat / 16) % 4, (flat / 4) % 4, flat % 4];
        let same = idx.iter().all(|&i| block(i) == block(idx[0]));
        if !same {
            assert!(rm.value(&idx).abs() < 1e-13, "mixed component {idx:?}");
        }
    }
    let g = s.metric();
    for (a, b) in [(0, 1), (2, 3)] {
        let det = g.value(&[a, a]) * g.value(&[b, b]);
        assert_close(rm.value(&[a, b, a, b]), det, 1e-13, "block curvature");
    }
    let w = s.weyl().unwrap();
    assert!(w.max_abs_value() > 0.1, "S^2×S^2 is not conformally flat");
    assert!(id::weyl_traces(&s).unwrap() < 1e-9);
    assert!(id::decomposition(&s).unwrap() < 1e-10);
}

#[test]
fn three_dimensional_weyl_vanishes() {
    let chart = random_torus(3, 11);
    let mut r = rng(3);
    for _ in 0..4 {
        let s = state(&chart, &random_point(&chart, &mut r), 3);
        assert!(s.weyl().unwrap().max_abs_value() < 1e-9);
        assert!(s.cotton().unwrap().max_abs_value() > 1e-3, "generic 3-metric has Cotton");
    }
}

#[test]
fn conformally_flat_metrics() {
    let n3 = names(&["x1", "x2", "x3"]);
    let w3 = parse("0.3*sin(x1)*cos(x2) + 0.2*cos(x3)", &n3).unwrap();
    let c3 = Chart::torus_conformal(3, 2.0 * PI, &w3).unwrap();
    let s = state(&c3, &[0.4, 1.3, 2.2], 3);
    assert!(s.cotton().unwrap().max_abs_value() < 1e-8);

    let n5 = names(&["x1", "x2", "x3", "x4", "x5"]);
    let w5 = parse("0.2*sin(x1)*sin(x2) + 0.1*cos(x3 - x5)", &n5).unwrap();
    let c5 = Chart::torus_conformal(5, 2.0 * PI, &w5).unwrap();
    let mut r = rng(5);
    for _ in 0..3 {
        let s = state(&c5, &random_point(&c5, &mut r), 4);
        assert!(s.weyl().unwrap().max_abs_value() < 1e-9);
        assert!(s.bach().unwrap().max_abs_value() < 1e-8);
        assert!(id::gauss_bonnet_lcf(&s, 2).unwrap() < 1e-7);
        assert_eq!(id::gauss_bonnet_lcf_constant(5, 2), 192.0);
        assert!(id::v6_lcf(&s).unwrap() < 1e-8);
    }
}

#[test]
fn random_torus_identities() {
    for (n, seed) in [(5, 1), (6, 2)] {
        let chart = random_torus(n, seed);
        let mut r = rng(100 + seed);
        for _ in 0..2 {
            let p = random_point(&chart, &mut r);
            let s = state(&chart, &p, 5);
            let checks: Vec<(&str, f64, f64)> = vec![
                ("decomposition", id::decomposition(&s).unwrap(), 1e-10),
                ("riemann symmetries", id::riemann_symmetries(&s).unwrap(), 1e-10),
                ("schouten reconstruction", id::schouten_reconstruction(&s).unwrap(), 1e-11),
                ("newton contraction", id::newton_contraction(&s).unwrap(), 1e-10),
                ("newton trace", id::newton_trace(&s).unwrap(), 1e-10),
                ("weyl divergence", id::weyl_divergence_cotton(&s).unwrap(), 1e-8),
                ("cotton traces", id::cotton_traces(&s).unwrap(), 1e-9),
                ("cotton divergence", id::cotton_divergence(&s).unwrap(), 1e-9),
                ("newton divergence", id::newton_divergence(&s).unwrap(), 1e-7),
                ("bach divergence", id::bach_divergence(&s).unwrap(), 1e-7),
                ("bach symmetry", id::bach_symmetry(&s).unwrap(), 1e-8),
                ("P_1 divergence", id::p_divergence(&s, 1).unwrap(), 1e-7),
                ("P_2 divergence", id::p_divergence(&s, 2).unwrap(), 1e-7),
                ("P_1 trace", id::p_trace(&s, 1).unwrap(), 1e-9),
                ("P_2 trace", id::p_trace(&s, 2).unwrap(), 1e-9),
                ("G_2 = 2R", id::g2_scalar(&s).unwrap(), 1e-12),
                ("schouten bianchi", id::schouten_bianchi(&s).unwrap(), 1e-9),
                ("second bianchi", id::second_bianchi(&s).unwrap(), 1e-9),
            ];
            for (what, res, tol) in checks {
                assert!(res < tol, "n={n} {what}: residual {res:e} ≥ {tol:e}");
            }
            assert!(s.weyl().unwrap().max_abs_value() > 1e-3, "metric should not be LCF");
            assert!(s.bach().unwrap().max_abs_value() > 1e-4);
        }
    }
}

#[test]
fn sigma_matches_principal_minor_sums() {
    fn det(m: &[f64], k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        for c in 0..k {
            let minor: Vec<f64> = (1..k)
                .flat_map(|r| (0..k).filter(move |&cc| cc != c).map(move |cc| (r, cc)))
                .map(|(r, cc)| m[r * k + cc])
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * m[c] * det(&minor, k - 1);
        }
        total
    }
    let n = 5;
    let chart = random_torus(n, 42);
    let s = state(&chart, &[0.3, 1.1, 2.9, 4.0, 5.5], 2);
    let a = s.schouten_endomorphism().unwrap();
    for k in 1..=n {
        let mut sum = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let m: Vec<f64> = rows
                .iter()
                .flat_map(|&i| rows.iter().map(move |&j| (i, j)))
                .map(|(i, j)| a.value(&[i, j]))
                .collect();
            sum += det(&m, k);
        }
        let got = s.sigma(k).unwrap().value();
        assert!((got - sum).abs() < 1e-11, "sigma_{k}: {got} vs {sum}");
    }
    let r = s.scalar_curvature().unwrap().value();
    assert!((s.sigma(1).unwrap().value() - r / 8.0).abs() < 1e-12);
    assert!((s.v2k(1).unwrap().value() + r / 16.0).abs() < 1e-11);
}

#[test]
fn newton_tensor_matches_newton_transformation() {
    let n = 5;
    let chart = random_torus(n, 8);
    let s = state(&chart, &[1.0, 2.0, 3.0, 4.0, 5.0], 2);
    let a = s.schouten_endomorphism().unwrap();
    // T_k = σ_k I − a T_{k−1}
    let mut prev: Vec<f64> = (0..n * n).map(|f| (f / n == f % n) as u8 as f64).collect();
    for k in 1..n {
        let sk = s.sigma(k).unwrap().value();
        let next: Vec<f64> = (0..n * n)
            .map(|f| {
                let (j, i) = (f / n, f % n);
                let at: f64 = (0..n).map(|p| a.value(&[j, p]) * prev[p * n + i]).sum();
                if j == i {
                    sk - at
                } else {
                    -at
                }
            })
            .collect();
        let t = s.newton_tensor(k).unwrap();
        for (f, want) in next.iter().enumerate() {
            assert!((t.value(&[f / n, f % n]) - want).abs() < 1e-12, "T^({k})");
        }
        prev = next;
    }
    let t0 = s.newton_tensor(0).unwrap();
    assert_eq!(t0.value(&[2, 2]), 1.0);
    assert_eq!(t0.value(&[1, 2]), 0.0);
}

#[test]
fn metric_compatibility_and_torsion_freedom() {
    let chart = random_torus(4, 21);
    let s = state(&chart, &[0.2, 0.9, 3.3, 5.1], 4);
    let gamma = s.christoffel().unwrap();
    assert!(id::compare(gamma, &gamma.permute(&[0, 2, 1])).unwrap() < 1e-13);
    let dg = covariant_derivative(s.metric(), gamma).unwrap();
    assert!(dg.max_abs_value() < 1e-11);
    let f = PointTensor::scalar(s.scalar_curvature().unwrap().clone());
    let hess = covariant_derivative(&covariant_derivative(&f, gamma).unwrap(), gamma).unwrap();
    assert!(id::compare(&hess, &hess.permute(&[1, 0])).unwrap() < 1e-12);
    // raise then lower
    let ric = s.ricci().unwrap();
    let back = ric.raise(0, s.inverse().unwrap()).unwrap().lower(0, s.metric()).unwrap();
    assert!(id::compare(ric, &back).unwrap() < 1e-12);
}

#[test]
fn jet_order_budget() {
    let chart = random_torus(5, 3);
    let p = [0.5, 1.5, 2.5, 3.5, 4.5];
    type Probe = fn(&CurvatureState) -> Result<(), Error>;
    let probes: Vec<(&str, usize, Probe)> = vec![
        ("christoffel", 1, |s| s.christoffel().map(drop)),
        ("riemann", 2, |s| s.riemann().map(drop)),
        ("ricci", 2, |s| s.ricci().map(drop)),
        ("scalar", 2, |s| s.scalar_curvature().map(drop)),
        ("schouten", 2, |s| s.schouten().map(drop)),
        ("sigma_3", 2, |s| s.sigma(3).map(drop)),
        ("newton", 2, |s| s.newton_tensor(2).map(drop)),
        ("G_4", 2, |s| s.gauss_bonnet(2).map(drop)),
        ("P_2", 2, |s| s.p_tensor(2).map(drop)),
        ("cotton", 3, |s| s.cotton().map(drop)),
        ("grad sigma_2", 3, |s| s.gradient(Scalar::Sigma(2)).map(drop)),
        ("grad G_4", 3, |s| s.gradient(Scalar::GaussBonnet(2)).map(drop)),
        ("weyl divergence", 3, |s| s.weyl_divergence().map(drop)),
        ("div T^(2)", 3, |s| s.divergence(s.newton_tensor(2)?, 0).map(drop)),
        ("div P_2", 3, |s| s.divergence(s.p_tensor(2)?, 0).map(drop)),
        ("bach", 4, |s| s.bach().map(drop)),
        ("v6", 4, |s| s.v6().map(drop)),
        ("grad v6", 5, |s| s.gradient(Scalar::V(3)).map(drop)),
        ("div B", 5, |s| s.divergence(s.bach()?, 1).map(drop)),
    ];
    for (what, min, probe) in probes {
        assert!(probe(&state(&chart, &p, min)).is_ok(), "{what} at order {min}");
        let err = probe(&state(&chart, &p, min - 1)).unwrap_err();
        assert!(matches!(err, Error::OrderExhausted(_)), "{what} at order {}: {err:?}", min - 1);
    }
}

#[test]
fn dimension_guards() {
    let s4 = Chart::sphere_polar(4, None).unwrap();
    let s = state(&s4, &[1.0, 1.0, 1.0, 1.0], 4);
    assert!(matches!(s.v6(), Err(Error::Dimension(_))));
    assert!(matches!(s.gauss_bonnet(3), Err(Error::Dimension(_))));
    let s2 = Chart::sphere_polar(2, None).unwrap();
    let s = state(&s2, &[1.0, 1.0], 2);
    assert!(matches!(s.schouten(), Err(Error::Dimension(_))));
    let s3 = Chart::sphere_polar(3, None).unwrap();
    let s = state(&s3, &[1.0, 1.0, 1.0], 4);
    assert!(matches!(s.bach(), Err(Error::Dimension(_))));
}

#[test]
fn gradients_vanish_on_space_forms_and_match_finite_differences() {
    let chart = Chart::sphere_polar(5, None).unwrap();
    let s = state(&chart, &[0.9, 1.2, 2.0, 1.4, 3.0], 5);
    for q in [Scalar::Sigma(2), Scalar::GaussBonnet(2), Scalar::V(3)] {
        assert!(s.gradient(q).unwrap().max_abs_value() < 1e-10, "{q:?}");
    }

    let chart = random_torus(4, 9);
    let p = [0.3, 2.2, 4.1, 1.7];
    let s = state(&chart, &p, 3);
    let grad = s.gradient(Scalar::Curvature).unwrap();
    let scalar_at = |x: &[f64]| state(&chart, x, 2).scalar_curvature().unwrap().value();
    let fd = |h: f64, i: usize| {
        let (mut a, mut b) = (p.to_vec(), p.to_vec());
        a[i] += h;
        b[i] -= h;
        (scalar_at(&a) - scalar_at(&b)) / (2.0 * h)
    };
    for i in 0..4 {
        let g = grad.value(&[i]);
        let e1 = (fd(1e-2, i) - g).abs();
        let e2 = (fd(5e-3, i) - g).abs();
        let order = (e1 / e2).log2();
        assert!(order > 1.8 && order < 2.2, "axis {i}: order {order}");
    }
    let g1 = s.gradient(Scalar::Sigma(1)).unwrap();
    for i in 0..4 {
        assert!((g1.value(&[i]) - grad.value(&[i]) / 6.0).abs() < 1e-11);
    }
}

#[test]
fn chart_validation() {
    let nm = names(&["x1", "x2"]);
    let bad = Chart::new(
        ChartKind::Torus,
        nm.clone(),
        vec![(0.0, 1.0); 2],
        vec![true; 2],
        vec![parse("1 + 0.1*x1", &nm).unwrap(), Expr::constant(0.0), Expr::constant(1.0)],
        "aperiodic",
    )
    .unwrap();
    assert!(matches!(bad.validate(), Err(Error::InvalidChart(_))));
    assert!(random_torus(5, 1).validate().is_ok());
    assert!(Chart::sphere_polar(4, None).unwrap().validate().is_ok());
}
