use curvlab::catalog::{catalog, listing, lookup, TaskKind};
use curvlab::report::{LadderEntry, Report};
use curvlab::runner::{run, run_with_threads, sample_points, space_form_residual};
use curvlab::Config;
use curvlab_core::curvature::{Chart, CurvatureState};

fn config(text: &str) -> Config {
    Config::parse(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn task<'a>(r: &'a Report, name: &str) -> &'a curvlab::TaskRecord {
    r.tasks.iter().find(|t| t.name == name).unwrap()
}

#[test]
fn smoke_two_passing_tasks_on_a_random_torus() {
    let c = config("[chart]\nkind = torus\nn = 5\nperturbation_seed = 11\n[tasks]\nrun = decomposition, bianchi\n");
    let r = run(&c, None);
    assert!(r.pass);
    assert_eq!(r.tasks.len(), 2);
    for t in &r.tasks {
        assert!(t.pass, "{t:?}");
        assert_eq!(t.points, Some(8));
        assert!(t.residual_max.unwrap() <= t.tol);
        assert!(t.residual_mean.unwrap() <= t.residual_max.unwrap());
        assert!(t.seconds >= 0.0);
        assert!(t.message.is_none());
    }
}

#[test]
fn v6_on_four_dimensions_fails_with_dimension_text() {
    let c = config("[chart]\nkind = torus\nn = 4\n[tasks]\nrun = lcf_v6, decomposition\n");
    let r = run(&c, None);
    assert!(!r.pass);
    let t = task(&r, "lcf_v6");
    assert!(!t.pass);
    assert!(t.residual_max.is_none());
    assert!(t.message.as_ref().unwrap().contains("dimension error"), "{t:?}");
    assert!(task(&r, "decomposition").pass);
}

#[test]
fn conformal_killing_tasks_are_skipped_for_other_fields() {
    let c = config(
        "[chart]\nkind = torus\nn = 5\nperturbation_seed = 2\n[field]\nbuiltin = \"d/dx1\"\n\
         [tasks]\nrun = ckv, g2r_ckv_chain_r1, kw_sigma1\n[quadrature]\nnodes = 4\nladder = 1\n",
    );
    let r = run(&c, None);
    assert!(!r.pass);
    assert!(!task(&r, "ckv").pass, "a translation is not conformal Killing on a perturbed torus");
    for name in ["g2r_ckv_chain_r1", "kw_sigma1"] {
        let t = task(&r, name);
        assert!(!t.pass);
        assert!(t.message.as_ref().unwrap().starts_with("skipped"), "{t:?}");
    }
}

#[test]
fn missing_inputs_are_reported_per_task() {
    let c = config("[chart]\nkind = flat_box\nn = 3\n[tasks]\nrun = ckv, schouten_dot\n");
    let r = run(&c, None);
    assert!(task(&r, "ckv").message.as_ref().unwrap().contains("[field]"));
    assert!(task(&r, "schouten_dot").message.as_ref().unwrap().contains("eta"));
}

#[test]
fn tolerance_overrides_are_recorded_and_enforced() {
    let c = config(
        "[chart]\nkind = sphere_polar\nn = 4\nconformal_factor = \"0.25*cos(th1)\"\n\
         [tasks]\nrun = decomposition, lcf_gauss_bonnet\ndecomposition.tol = 1e-30\n",
    );
    let r = run(&c, None);
    let d = task(&r, "decomposition");
    assert!(d.tol_overridden);
    assert_eq!(d.tol, 1e-30);
    assert!(!d.pass, "a rounding-level residual cannot meet 1e-30: {d:?}");
    let g = task(&r, "lcf_gauss_bonnet");
    assert!(!g.tol_overridden && g.pass);
    assert_eq!(g.tol, lookup("lcf_gauss_bonnet").unwrap().tol);
}

#[test]
fn jet_order_overrides_reach_the_state() {
    let c = config("[chart]\nkind = flat_box\nn = 3\n[tasks]\nrun = decomposition, g2_scalar\ng2_scalar.order = 4\n");
    let r = run(&c, None);
    assert_eq!(task(&r, "decomposition").jet_order, Some(2));
    assert_eq!(task(&r, "g2_scalar").jet_order, Some(4));
    assert!(r.pass);
}

#[test]
fn report_schema_and_verdict() {
    let c = config(
        "[chart]\nkind = sphere_polar\nn = 4\nconformal_factor = \"0.25*cos(th1)\"\n\
         [field]\nbuiltin = \"-sin(th1) d/dth1\"\n[tasks]\nrun = g2_scalar, kw_sigma1\nseed = 5\n\
         [quadrature]\nnodes = 8, 4, 4, 4\nladder = 1\n",
    );
    let r = run(&c, None);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["version", "config", "tasks", "pass", "seed"] {
        assert!(json.get(key).is_some(), "missing top-level `{key}`");
    }
    assert_eq!(json["seed"], 5);
    assert_eq!(json["config"]["tasks"]["seed"], "5");
    let t = &json["tasks"][1];
    for key in [
        "name",
        "cite",
        "residual_max",
        "residual_mean",
        "normalization",
        "ladder",
        "fd_order",
        "tol",
        "pass",
        "seconds",
    ] {
        assert!(t.get(key).is_some(), "missing task field `{key}`");
    }
    assert_eq!(t["ladder"][0]["nodes"], serde_json::json!([8, 4, 4, 4]));
    assert!(matches!(r.tasks[1].ladder[0], LadderEntry::KazdanWarner { .. }));
    let back: Report = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    for t in &r.tasks {
        if t.pass {
            assert!(t.residual_max.unwrap() <= t.tol);
        }
    }
    assert_eq!(r.pass, r.tasks.iter().all(|t| t.pass));
    assert!(r.summary().lines().last().unwrap().contains("of 2 tasks passed"));
}

#[test]
fn seed_override_changes_points_and_is_reported() {
    let c = config("[chart]\nkind = torus\nn = 3\nperturbation_seed = 1\n[tasks]\nrun = decomposition\nseed = 4\n");
    let a = run(&c, None);
    let b = run(&c, Some(9));
    assert_eq!(a.seed, 4);
    assert_eq!(b.seed, 9);
    assert_eq!(b.config["tasks"]["seed"], "9");
    assert_ne!(a.tasks[0].residual_max, b.tasks[0].residual_max);
}

#[test]
fn sample_points_are_seeded_and_interior() {
    let chart = Chart::sphere_polar(4, None).unwrap();
    let a = sample_points(&chart, 16, 3);
    assert_eq!(a, sample_points(&chart, 16, 3));
    assert_ne!(a, sample_points(&chart, 16, 4));
    for p in &a {
        for ((x, &(lo, hi)), &per) in p.iter().zip(chart.domain()).zip(chart.periodic()) {
            let m = if per { 0.0 } else { 0.1 * (hi - lo) };
            assert!(*x >= lo + m && *x < hi - m);
        }
    }
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let c = config(
        "[chart]\nkind = sphere_polar\nn = 5\nconformal_factor = \"0.25*cos(th1)\"\n\
         [field]\nbuiltin = \"-sin(th1) d/dth1\"\n[conformal]\neta = \"0.3*cos(th1)\"\n\
         [tasks]\nrun = decomposition, newton_divergence, schouten_dot, g2r_ckv_chain_r2, kw_sigma2\nkw_sigma2.tol = 1e-4\n\
         [quadrature]\nnodes = 4\nladder = 2, 3\naxisymmetric = true\n",
    );
    let one = run_with_threads(&c, None, 1).unwrap().without_timing();
    let four = run_with_threads(&c, None, 4).unwrap().without_timing();
    assert!(one.pass, "{}", one.summary());
    assert_eq!(one.to_json(), four.to_json());
}

#[test]
fn space_form_residual_detects_non_round_metrics() {
    for n in 3..=6 {
        let chart = Chart::sphere_polar(n, None).unwrap();
        let s = CurvatureState::new(&chart, &chart.probe_points()[0], 4).unwrap();
        assert!(space_form_residual(&s).unwrap() < 1e-9, "S^{n}");
    }
    let bumped = curvlab_core::expr::parse("0.1*cos(th1)", &["th1".into(), "th2".into(), "phi".into()]).unwrap();
    let chart = Chart::sphere_polar(3, Some(&bumped)).unwrap();
    let s = CurvatureState::new(&chart, &chart.probe_points()[0], 4).unwrap();
    assert!(space_form_residual(&s).unwrap() > 1e-3);
}

#[test]
fn catalog_listing() {
    let text = listing();
    assert_eq!(text.lines().count(), catalog().len());
    assert!(text.lines().any(|l| l.starts_with("p_divergence_r1 ") && l.contains("divergence free")));
    assert!(text.lines().any(|l| l.starts_with("kw_g4 ") && l.contains("Kazdan-Warner")));
    for t in catalog() {
        assert!(text.contains(&format!("[jet order {}", t.min_order)), "{}", t.name);
        assert_eq!(lookup(t.name).unwrap().name, t.name);
        assert!(t.tol > 0.0);
        if let TaskKind::Pointwise(_) = t.kind {
            assert!(t.min_order >= 2);
        }
    }
    let mut names: Vec<_> = catalog().iter().map(|t| t.name).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), catalog().len(), "duplicate task names");
}
