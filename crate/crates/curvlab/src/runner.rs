//! Task execution. Tasks, sample points and quadrature nodes run on the
//! current rayon pool; results are gathered in configuration order.

use std::time::Instant;

use curvlab_core::conformal::{
    check_conformal_killing, ckv_relative, g2r_ckv_chain, v6_ckv_residual, variation_residual,
    VariationKind, VectorField,
};
use curvlab_core::curvature::identities::{compare, compare_values, gauss_bonnet_lcf_constant};
use curvlab_core::curvature::{Chart, CurvatureState};
use curvlab_core::expr::Expr;
use curvlab_core::quadrature::{conformal_invariance_functional, kw_integral};
use curvlab_core::{Error as CoreError, Result as CoreResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{lookup, TaskKind, TaskSpec};
use crate::config::{Config, TaskRequest};
use crate::report::{LadderEntry, Report, TaskRecord};

/// Accepted band for measured central-difference orders.
pub const FD_ORDER_BAND: (f64, f64) = (1.9, 2.1);

/// Seeded interior points, keeping 10% away from the ends of non-periodic axes.
pub fn sample_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            chart
                .domain()
                .iter()
                .zip(chart.periodic())
                .map(|(&(a, b), &periodic)| {
                    let m = if periodic { 0.0 } else { 0.1 * (b - a) };
                    r.gen_range(a + m..b - m)
                })
                .collect()
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest relative deviation from the closed-form curvature of the unit
/// round sphere of the state's dimension.
pub fn space_form_residual(s: &CurvatureState) -> CoreResult<f64> {
    let n = s.dim();
    let nf = n as f64;
    let mut worst = compare_values(s.scalar_curvature()?.value(), nf * (nf - 1.0));
    worst = worst.max(compare(s.schouten()?, &s.metric().scale(0.5))?);
    worst = worst.max(s.weyl()?.max_abs_value());
    if s.order() >= 3 {
        worst = worst.max(s.cotton()?.max_abs_value());
    }
    if n >= 4 && s.order() >= 4 {
        worst = worst.max(s.bach()?.max_abs_value());
    }
    for k in 1..=n {
        let want = binomial(n, k) / 2f64.powi(k as i32);
        worst = worst.max(compare_values(s.sigma(k)?.value(), want));
    }
    for r in 1..=n / 2 {
        let want = gauss_bonnet_lcf_constant(n, r) * binomial(n, r) / 2f64.powi(r as i32);
        worst = worst.max(compare_values(s.gauss_bonnet(r)?.value(), want));
    }
    if n >= 5 && s.order() >= 4 {
        worst = worst.max(compare_values(s.v6()?.value(), -binomial(n, 3) / 64.0));
    }
    Ok(worst)
}

/// Everything a task needs besides its own request.
struct Context<'a> {
    config: &'a Config,
    points: Vec<Vec<f64>>,
}

impl Context<'_> {
    fn field(&self) -> Result<&VectorField, String> {
        self.config.field.as_ref().ok_or_else(|| "this task needs a [field] section".to_string())
    }

    fn eta(&self) -> Result<&Expr, String> {
        self.config.eta.as_ref().ok_or_else(|| "this task needs `eta` in [conformal]".to_string())
    }

    /// The configured field, after the conformal Killing pre-check.
    fn ckv(&self) -> Result<&VectorField, String> {
        let field = self.field()?;
        check_conformal_killing(&self.config.chart, field).map_err(|e| match e {
            CoreError::NotConformalKilling(m) => format!("skipped: field is not conformal Killing ({m})"),
            other => other.to_string(),
        })?;
        Ok(field)
    }

    fn per_point<F>(&self, f: F) -> Result<Vec<f64>, String>
    where
        F: Fn(&[f64]) -> CoreResult<f64> + Sync,
    {
        self.points
            .par_iter()
            .map(|p| f(p).map_err(|e| format!("at {p:?}: {e}")))
            .collect()
    }
}

fn stats(rec: &mut TaskRecord, residuals: &[f64]) {
    let max = residuals.iter().fold(0f64, |m, &r| if r.is_nan() { f64::NAN } else { m.max(r) });
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    rec.residual_max = Some(max);
    rec.residual_mean = Some(mean);
    rec.points = Some(residuals.len());
    rec.pass = max <= rec.tol;
}

fn run_task(ctx: &Context, req: &TaskRequest) -> TaskRecord {
    let spec: &TaskSpec = lookup(&req.name).expect("validated when the configuration was parsed");
    let start = Instant::now();
    let mut rec = TaskRecord {
        name: spec.name.to_string(),
        cite: spec.cite.to_string(),
        residual_max: None,
        residual_mean: None,
        normalization: None,
        ladder: Vec::new(),
        fd_order: None,
        tol: req.tol.unwrap_or(spec.tol),
        tol_overridden: req.tol.is_some(),
        jet_order: None,
        points: None,
        pass: false,
        seconds: 0.0,
        message: None,
    };
    if let Err(m) = execute(ctx, spec, req, &mut rec) {
        rec.pass = false;
        rec.message = Some(m);
    }
    rec.seconds = start.elapsed().as_secs_f64();
    rec
}

fn execute(ctx: &Context, spec: &TaskSpec, req: &TaskRequest, rec: &mut TaskRecord) -> Result<(), String> {
    let chart = &ctx.config.chart;
    match spec.kind {
        TaskKind::Pointwise(check) => {
            let order = req.order.unwrap_or(spec.min_order);
            rec.jet_order = Some(order);
            let res = ctx.per_point(|p| check(&CurvatureState::new(chart, p, order)?))?;
            stats(rec, &res);
        }
        TaskKind::Ckv => {
            let field = ctx.field()?;
            let res = ctx.per_point(|p| ckv_relative(&CurvatureState::new(chart, p, 1)?, &field.at(p, 1)?))?;
            stats(rec, &res);
        }
        TaskKind::Variation(kind) => variation(ctx, kind, rec)?,
        TaskKind::CkvChain(r) => {
            let field = ctx.ckv()?;
            let res = ctx.per_point(|p| g2r_ckv_chain(chart, field, p, r))?;
            stats(rec, &res);
        }
        TaskKind::V6Ckv => {
            let field = ctx.ckv()?;
            let res = ctx.per_point(|p| v6_ckv_residual(chart, field, p))?;
            stats(rec, &res);
        }
        TaskKind::KazdanWarner(q) => {
            let field = ctx.ckv()?;
            let kw = kw_integral(chart, field, q, &ctx.config.quadrature).map_err(|e| e.to_string())?;
            rec.ladder = kw
                .levels
                .iter()
                .map(|l| LadderEntry::KazdanWarner {
                    nodes: l.nodes.clone(),
                    integral: l.integral,
                    norm: l.norm,
                    ratio: l.ratio(),
                    degenerate: l.degenerate(),
                })
                .collect();
            let fine = kw.finest();
            let ratio = fine.ratio();
            rec.residual_max = Some(ratio);
            rec.normalization = Some(fine.norm);
            let ratios: Vec<f64> = kw.levels.iter().map(|l| l.ratio()).collect();
            let monotone = ratios.windows(2).all(|w| w[1] <= w[0] || w[1] <= rec.tol);
            rec.pass = ratio <= rec.tol && monotone;
            if fine.degenerate() {
                rec.message = Some("degenerate normalization: the integrand vanishes identically".into());
            } else if !monotone {
                rec.message = Some(format!("ratio does not decrease along the ladder: {ratios:?}"));
            }
        }
        TaskKind::Invariance => {
            let field = ctx.field()?;
            let eta = ctx.eta()?;
            let levels = conformal_invariance_functional(chart, eta, field, &ctx.config.quadrature)
                .map_err(|e| e.to_string())?;
            rec.ladder = levels
                .iter()
                .map(|l| LadderEntry::Invariance {
                    nodes: l.nodes.clone(),
                    base: l.base,
                    rescaled: l.rescaled,
                    relative_difference: l.relative_difference(),
                })
                .collect();
            let fine = levels.last().expect("ladder is non-empty");
            let diff = fine.relative_difference();
            rec.residual_max = Some(diff);
            rec.normalization = Some(fine.base.abs() + fine.rescaled.abs() + fine.mass);
            rec.pass = diff <= rec.tol;
        }
    }
    Ok(())
}

fn variation(ctx: &Context, kind: VariationKind, rec: &mut TaskRecord) -> Result<(), String> {
    let chart = &ctx.config.chart;
    let eta = ctx.eta()?;
    let field = match kind {
        VariationKind::DivDot => Some(ctx.field()?),
        _ => None,
    };
    let fd = &ctx.config.fd;
    let outcomes = ctx
        .points
        .par_iter()
        .map(|p| variation_residual(kind, chart, eta, field, p, fd).map_err(|e| format!("at {p:?}: {e}")))
        .collect::<Result<Vec<_>, String>>()?;
    let residuals: Vec<f64> = outcomes.iter().map(|o| o.residual).collect();
    stats(rec, &residuals);
    if kind == VariationKind::RiemannConf {
        return Ok(());
    }
    let (lo, hi) = FD_ORDER_BAND;
    // Farthest measured order from 2.
    rec.fd_order = outcomes
        .iter()
        .filter_map(|o| o.fd_order)
        .max_by(|a, b| (a - 2.0).abs().total_cmp(&(b - 2.0).abs()));
    let out_of_band = outcomes.iter().filter_map(|o| o.fd_order).filter(|o| !(lo..=hi).contains(o)).count();
    // Without a measurable order the difference quotients must already be
    // exact to rounding at both steps.
    let unmeasured: Vec<_> = outcomes.iter().filter(|o| o.fd_order.is_none()).collect();
    let exact = unmeasured.iter().all(|o| o.residual_h <= rec.tol && o.residual_h2 <= rec.tol);
    rec.pass = rec.pass && out_of_band == 0 && exact;
    let mut notes = Vec::new();
    if out_of_band > 0 {
        notes.push(format!("{out_of_band} measured orders outside [{lo}, {hi}]"));
    }
    if !unmeasured.is_empty() {
        let worst = unmeasured.iter().map(|o| o.residual_h.max(o.residual_h2)).fold(0f64, f64::max);
        notes.push(format!(
            "order not measurable at {} of {} points: residual at both steps is at rounding level (max {worst:.1e})",
            unmeasured.len(),
            outcomes.len()
        ));
    }
    if !notes.is_empty() {
        rec.message = Some(notes.join("; "));
    }
    Ok(())
}

/// Runs every configured task on the current rayon pool.
pub fn run(config: &Config, seed: Option<u64>) -> Report {
    let seed = seed.unwrap_or(config.seed);
    let ctx = Context {
        config,
        points: sample_points(&config.chart, config.points, seed),
    };
    let tasks: Vec<TaskRecord> = config.tasks.par_iter().map(|req| run_task(&ctx, req)).collect();
    let mut echo = config.raw.echo();
    echo.entry("tasks".into()).or_default().insert("seed".into(), seed.to_string());
    Report {
        version: crate::VERSION.to_string(),
        config: echo,
        seed,
        pass: tasks.iter().all(|t| t.pass),
        tasks,
    }
}

/// [`run`] on a dedicated pool of `threads` workers (0 picks the default).
pub fn run_with_threads(config: &Config, seed: Option<u64>, threads: usize) -> Result<Report, crate::Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::Error::Pool(e.to_string()))?;
    Ok(pool.install(|| run(config, seed)))
}
