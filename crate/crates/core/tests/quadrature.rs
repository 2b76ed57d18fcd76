mod common;

use std::f64::consts::PI;

use common::{binomial, names, random_torus};
use curvlab_core::conformal::builtin_fields;
use curvlab_core::curvature::{Chart, ChartKind, CurvatureState, Scalar};
use curvlab_core::expr::{parse, Expr};
use curvlab_core::quadrature::{
    conformal_invariance_functional, integrate, kw_integral, QuadratureSpec, Rule,
};
use curvlab_core::Error;

fn sphere_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..n).map(|i| format!("th{i}")).collect();
    v.push("phi".into());
    v
}

fn bumped_sphere(n: usize) -> Chart {
    let phi = parse("0.25*cos(th1)", &sphere_names(n)).unwrap();
    Chart::sphere_polar(n, Some(&phi)).unwrap()
}

fn sphere_ckv(n: usize) -> curvlab_core::conformal::VectorField {
    builtin_fields(ChartKind::SpherePolar, n).unwrap().remove(0)
}

fn one(_: &[f64]) -> curvlab_core::Result<f64> {
    Ok(1.0)
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

#[test]
fn three_sphere_volume() {
    let chart = Chart::sphere_polar(3, None).unwrap();
    let spec = QuadratureSpec::for_chart(&chart, 24).unwrap().with_ladder(vec![1]).unwrap();
    assert_eq!(spec.rules(), [Rule::GaussLegendre, Rule::GaussLegendre, Rule::TrapezoidPeriodic]);
    let vol = integrate(&chart, one, &spec).unwrap().value();
    assert!(rel(vol, 2.0 * PI * PI) < 1e-10, "{vol}");
}

#[test]
fn flat_torus_area() {
    let delta = vec![Expr::constant(1.0), Expr::constant(0.0), Expr::constant(1.0)];
    let chart = Chart::torus(2, 2.0 * PI, delta).unwrap();
    let spec = QuadratureSpec::for_chart(&chart, 4).unwrap();
    let out = integrate(&chart, one, &spec).unwrap();
    assert_eq!(out.levels.len(), 2);
    for level in &out.levels {
        assert!(rel(level.values[0], 4.0 * PI * PI) < 1e-13);
    }
}

#[test]
fn trapezoid_converges_spectrally() {
    // ∫∫ e^{c sin x sin y} = 4π² Σ_k (c/2)^{2k} C(2k,k) / (4^k (k!)²).
    let c: f64 = 3.0;
    let mut want = 0.0;
    let mut fact = 1.0;
    for k in 0..40 {
        if k > 0 {
            fact *= k as f64;
        }
        want += (c / 2.0).powi(2 * k as i32) * binomial(2 * k, k) / (4f64.powi(k as i32) * fact * fact);
    }
    want *= 4.0 * PI * PI;
    let w = parse("1.5*sin(x1)*sin(x2)", &names(&["x1", "x2"])).unwrap();
    let chart = Chart::torus_conformal(2, 2.0 * PI, &w).unwrap();
    let spec = QuadratureSpec::for_chart(&chart, 12).unwrap();
    let out = integrate(&chart, one, &spec).unwrap();
    let e12 = (out.levels[0].values[0] - want).abs();
    let e24 = (out.levels[1].values[0] - want).abs();
    assert!(e12 > 1e-10, "coarse error {e12:e} too small to measure a ratio");
    assert!(e12 / e24.max(f64::MIN_POSITIVE) > 1e3, "{e12:e} / {e24:e}");
}

#[test]
fn gauss_bonnet_integral_on_the_four_sphere() {
    let chart = Chart::sphere_polar(4, None).unwrap();
    let spec = QuadratureSpec::for_chart(&chart, 12).unwrap().with_ladder(vec![1]).unwrap();
    let f = |p: &[f64]| Ok(CurvatureState::new(&chart, p, 2)?.gauss_bonnet(2)?.value());
    let got = integrate(&chart, f, &spec).unwrap().value();
    assert!(rel(got, 96.0 * 8.0 * PI * PI / 3.0) < 1e-8, "{got}");
}

#[test]
fn axisymmetric_reduction_matches_the_full_grid() {
    let chart = bumped_sphere(4);
    let f = |p: &[f64]| Ok(CurvatureState::new(&chart, p, 2)?.sigma(2)?.value());
    let full = QuadratureSpec::for_chart(&chart, 12)
        .unwrap()
        .with_nodes(vec![24, 16, 16, 4])
        .unwrap()
        .with_ladder(vec![1])
        .unwrap();
    let line = full.clone().with_axisymmetric(true);
    let a = integrate(&chart, f, &full).unwrap().value();
    let b = integrate(&chart, f, &line).unwrap().value();
    assert!(rel(a, b) < 1e-8, "{a} vs {b}");
    assert_eq!(integrate(&chart, f, &line).unwrap().levels[0].nodes, vec![24]);
}

#[test]
fn spec_validation() {
    let sphere = Chart::sphere_polar(3, None).unwrap();
    let bad = QuadratureSpec::new(vec![Rule::TrapezoidPeriodic; 3], vec![8; 3], false, vec![1]).unwrap();
    assert!(matches!(integrate(&sphere, one, &bad), Err(Error::Quadrature(_))));
    assert!(QuadratureSpec::new(vec![Rule::GaussLegendre; 2], vec![8, 3], false, vec![1]).is_err());
    assert!(QuadratureSpec::new(vec![Rule::GaussLegendre; 2], vec![8, 8], false, vec![]).is_err());
    let torus = random_torus(2, 1);
    let axi = QuadratureSpec::for_chart(&torus, 8).unwrap().with_axisymmetric(true);
    assert!(matches!(integrate(&torus, one, &axi), Err(Error::Quadrature(_))));
    assert_eq!(Rule::from_name("gauss_legendre").unwrap(), Rule::GaussLegendre);
    assert!(Rule::from_name("simpson").is_err());
}

#[test]
fn node_failures_carry_coordinates() {
    let chart = Chart::sphere_polar(2, None).unwrap();
    let spec = QuadratureSpec::for_chart(&chart, 4).unwrap();
    let failing = |p: &[f64]| {
        if p[0] > 2.0 {
            Err(Error::Domain("test".into()))
        } else {
            Ok(1.0)
        }
    };
    match integrate(&chart, failing, &spec) {
        Err(Error::NodeEvaluation { coords, source }) => {
            assert!(coords[0] > 2.0);
            assert_eq!(*source, Error::Domain("test".into()));
        }
        other => panic!("{other:?}"),
    }
    let nan = |_: &[f64]| Ok(f64::NAN);
    assert!(matches!(integrate(&chart, nan, &spec), Err(Error::NonFiniteValue(_))));
}

#[test]
fn parallel_sums_are_bitwise_reproducible() {
    let chart = bumped_sphere(4);
    let spec = QuadratureSpec::for_chart(&chart, 6).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| kw_integral(&chart, &sphere_ckv(4), Scalar::Sigma(2), &spec).unwrap())
    };
    let a = run(1);
    let b = run(4);
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert_eq!(x.integral.to_bits(), y.integral.to_bits());
        assert_eq!(x.norm.to_bits(), y.norm.to_bits());
    }
}

#[test]
fn kazdan_warner_on_round_and_bumped_spheres() {
    let round = Chart::sphere_polar(4, None).unwrap();
    let x = sphere_ckv(4);
    let spec = QuadratureSpec::for_chart(&round, 6).unwrap().with_ladder(vec![1]).unwrap();
    for q in [Scalar::Sigma(2), Scalar::GaussBonnet(2)] {
        let kw = kw_integral(&round, &x, q, &spec).unwrap();
        assert!(kw.finest().degenerate(), "{kw:?}");
        assert_eq!(kw.finest().ratio(), 0.0);
    }

    let bumped = bumped_sphere(4);
    let spec = QuadratureSpec::for_chart(&bumped, 4)
        .unwrap()
        .with_nodes(vec![12, 4, 4, 4])
        .unwrap();
    let kw = kw_integral(&bumped, &x, Scalar::Sigma(2), &spec).unwrap();
    let (coarse, fine) = (&kw.levels[0], &kw.levels[1]);
    assert!(!fine.degenerate());
    assert_eq!(fine.nodes, vec![24, 8, 8, 8]);
    assert!(fine.ratio() < 1e-7, "{kw:?}");
    assert!(fine.ratio() <= coarse.ratio(), "{kw:?}");
    assert!(fine.norm > 1e-3, "{kw:?}");
}

#[test]
fn kazdan_warner_preconditions() {
    let x = sphere_ckv(4);
    let spec4 = QuadratureSpec::for_chart(&bumped_sphere(4), 4).unwrap();
    assert!(matches!(
        kw_integral(&bumped_sphere(4), &x, Scalar::V(3), &spec4),
        Err(Error::Dimension(_))
    ));
    let torus = random_torus(3, 9);
    let shift = builtin_fields(ChartKind::Torus, 3).unwrap().remove(0);
    let spec = QuadratureSpec::for_chart(&torus, 4).unwrap();
    assert!(matches!(
        kw_integral(&torus, &shift, Scalar::Sigma(1), &spec),
        Err(Error::NotConformalKilling(_))
    ));
}

#[test]
fn invariance_functional_guards_and_trivial_cases() {
    let s5 = bumped_sphere(5);
    let spec5 = QuadratureSpec::for_chart(&s5, 4).unwrap().with_axisymmetric(true);
    let zero = Expr::constant(0.0);
    assert!(matches!(
        conformal_invariance_functional(&s5, &zero, &sphere_ckv(5), &spec5),
        Err(Error::Dimension(_))
    ));

    let s6 = Chart::sphere_polar(6, None).unwrap();
    let spec = QuadratureSpec::for_chart(&s6, 8)
        .unwrap()
        .with_axisymmetric(true)
        .with_ladder(vec![1])
        .unwrap();
    let x = sphere_ckv(6);
    let same = conformal_invariance_functional(&s6, &zero, &x, &spec).unwrap();
    assert_eq!(same[0].base.to_bits(), same[0].rescaled.to_bits());
    assert_eq!(same[0].relative_difference(), 0.0);
    let shifted = conformal_invariance_functional(&s6, &Expr::constant(0.4), &x, &spec).unwrap();
    assert!(shifted[0].relative_difference() < 1e-12, "{shifted:?}");
}
