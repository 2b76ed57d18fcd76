//! Integration against the Riemannian volume element over compact charts,
//! the Kazdan–Warner integrals and the `n = 6` conformal-invariance functional.
//!
//! Node values are gathered in parallel and summed afterwards in a fixed
//! lexicographic order with compensated summation, so results do not depend
//! on the thread count.

mod rules;

pub use rules::{gauss_legendre, sphere_volume, trapezoid_periodic, CompensatedSum};

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::conformal::{check_conformal_killing, divergence, rescale, VectorField};
use crate::curvature::{Chart, ChartKind, CurvatureState, Scalar};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::tensor::metric_determinant;

/// Ratio `N / S` below which a Kazdan–Warner integrand counts as identically
/// zero; `S = ∫ |X|_g (1 + |Q|) dv_g`.
pub const DEGENERATE_RATIO: f64 = 1e-11;

/// One-dimensional rule used along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    GaussLegendre,
    TrapezoidPeriodic,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::GaussLegendre => "gauss_legendre",
            Rule::TrapezoidPeriodic => "trapezoid_periodic",
        }
    }

    pub fn from_name(name: &str) -> Result<Rule> {
        match name {
            "gauss_legendre" => Ok(Rule::GaussLegendre),
            "trapezoid_periodic" => Ok(Rule::TrapezoidPeriodic),
            other => Err(Error::Quadrature(format!("unknown rule `{other}`"))),
        }
    }

    fn nodes(self, count: usize, (a, b): (f64, f64)) -> (Vec<f64>, Vec<f64>) {
        match self {
            Rule::GaussLegendre => gauss_legendre(count, a, b),
            Rule::TrapezoidPeriodic => trapezoid_periodic(count, a, b),
        }
    }
}

/// Tensor-product rule with a refinement ladder.
///
/// Level `m` of the ladder uses `m × nodes[i]` points on axis `i`. With
/// `axisymmetric` set, the integrand is assumed to depend only on the first
/// polar angle of a `sphere_polar` chart and is integrated along that line.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    rules: Vec<Rule>,
    nodes: Vec<usize>,
    axisymmetric: bool,
    ladder: Vec<usize>,
}

impl QuadratureSpec {
    pub fn new(rules: Vec<Rule>, nodes: Vec<usize>, axisymmetric: bool, ladder: Vec<usize>) -> Result<Self> {
        if rules.len() != nodes.len() {
            return Err(Error::Quadrature(format!(
                "{} rules for {} node counts",
                rules.len(),
                nodes.len()
            )));
        }
        if let Some(n) = nodes.iter().find(|&&n| n < 4) {
            return Err(Error::Quadrature(format!("node count {n} is below the minimum of 4")));
        }
        if ladder.is_empty() || ladder.contains(&0) {
            return Err(Error::Quadrature("ladder multipliers must be a non-empty list of positive integers".into()));
        }
        Ok(QuadratureSpec {
            rules,
            nodes,
            axisymmetric,
            ladder,
        })
    }

    /// Trapezoid on the chart's periodic axes, Gauss–Legendre elsewhere, the
    /// same node count on every axis and the default ladder `[1, 2]`.
    pub fn for_chart(chart: &Chart, nodes: usize) -> Result<Self> {
        let rules = chart
            .periodic()
            .iter()
            .map(|&p| if p { Rule::TrapezoidPeriodic } else { Rule::GaussLegendre })
            .collect();
        QuadratureSpec::new(rules, vec![nodes; chart.dim()], false, vec![1, 2])
    }

    pub fn with_nodes(mut self, nodes: Vec<usize>) -> Result<Self> {
        self.nodes = nodes;
        QuadratureSpec::new(self.rules, self.nodes, self.axisymmetric, self.ladder)
    }

    pub fn with_ladder(self, ladder: Vec<usize>) -> Result<Self> {
        QuadratureSpec::new(self.rules, self.nodes, self.axisymmetric, ladder)
    }

    pub fn with_axisymmetric(mut self, on: bool) -> Self {
        self.axisymmetric = on;
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn axisymmetric(&self) -> bool {
        self.axisymmetric
    }

    pub fn ladder(&self) -> &[usize] {
        &self.ladder
    }

    /// Checks the rules and node counts against a chart.
    pub fn validate(&self, chart: &Chart) -> Result<()> {
        let n = chart.dim();
        if self.rules.len() != n {
            return Err(Error::Quadrature(format!(
                "spec has {} axes, chart has dimension {n}",
                self.rules.len()
            )));
        }
        for (i, (&rule, &periodic)) in self.rules.iter().zip(chart.periodic()).enumerate() {
            if rule == Rule::TrapezoidPeriodic && !periodic {
                return Err(Error::Quadrature(format!(
                    "trapezoid_periodic on non-periodic axis {}",
                    chart.names()[i]
                )));
            }
        }
        if self.axisymmetric {
            if chart.kind() != ChartKind::SpherePolar {
                return Err(Error::Quadrature(format!(
                    "axisymmetric reduction needs a sphere_polar chart, got {}",
                    chart.kind()
                )));
            }
            if self.rules[0] != Rule::GaussLegendre {
                return Err(Error::Quadrature("axisymmetric reduction integrates th1 with gauss_legendre".into()));
            }
        }
        Ok(())
    }

    /// Node count per axis at ladder multiplier `m`; only the first axis
    /// matters under axisymmetric reduction.
    fn level_nodes(&self, m: usize) -> Vec<usize> {
        if self.axisymmetric {
            vec![self.nodes[0] * m]
        } else {
            self.nodes.iter().map(|&c| c * m).collect()
        }
    }
}

/// Integral values at one ladder level.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub multiplier: usize,
    /// Node count per integrated axis (a single entry under axisymmetric reduction).
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

/// Values of `∫ f dv_g` at every ladder level, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub levels: Vec<Level>,
}

impl Integration {
    /// The finest-level estimate of the first component.
    pub fn value(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.values[0])
    }
}

struct Grid {
    axes: Vec<(Vec<f64>, Vec<f64>)>,
    /// Coordinates held fixed on the non-integrated axes (axisymmetric case).
    template: Vec<f64>,
    /// Extra factor applied to every weight.
    factor: f64,
}

impl Grid {
    fn build(chart: &Chart, spec: &QuadratureSpec, m: usize) -> Grid {
        let n = chart.dim();
        if spec.axisymmetric {
            let axis = Rule::GaussLegendre.nodes(spec.nodes[0] * m, chart.domain()[0]);
            let mut template = vec![FRAC_PI_2; n];
            template[n - 1] = 0.0;
            Grid {
                axes: vec![axis],
                template,
                factor: sphere_volume(n - 1),
            }
        } else {
            let axes = (0..n).map(|i| spec.rules[i].nodes(spec.nodes[i] * m, chart.domain()[i])).collect();
            Grid {
                axes,
                template: vec![0.0; n],
                factor: 1.0,
            }
        }
    }

    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.0.len()).product()
    }

    /// Coordinates and weight of the node with lexicographic index `flat`
    /// (last axis fastest).
    fn node(&self, mut flat: usize) -> (Vec<f64>, f64) {
        let mut point = self.template.clone();
        let mut weight = self.factor;
        for (i, (x, w)) in self.axes.iter().enumerate().rev() {
            let j = flat % x.len();
            flat /= x.len();
            point[i] = x[j];
            weight *= w[j];
        }
        (point, weight)
    }
}

/// `√det g` at a point.
pub fn volume_density(chart: &Chart, point: &[f64]) -> Result<f64> {
    let det = metric_determinant(&chart.metric_at(point, 0)?)?.value();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::SingularMetric(format!("det g = {det:e} at {point:?}")));
    }
    Ok(det.sqrt())
}

fn node_error(point: &[f64], e: Error) -> Error {
    Error::NodeEvaluation {
        coords: point.to_vec(),
        source: Box::new(e),
    }
}

/// Integrates a vector-valued field `f` with `width` components against
/// `dv_g` at every ladder level.
pub fn integrate_many<F>(chart: &Chart, spec: &QuadratureSpec, width: usize, f: F) -> Result<Integration>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    spec.validate(chart)?;
    let mut levels = Vec::with_capacity(spec.ladder.len());
    for &m in &spec.ladder {
        let grid = Grid::build(chart, spec, m);
        let terms: Vec<Result<Vec<f64>>> = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let (point, weight) = grid.node(flat);
                let vol = volume_density(chart, &point).map_err(|e| node_error(&point, e))?;
                let vals = f(&point).map_err(|e| node_error(&point, e))?;
                if vals.len() != width {
                    return Err(node_error(
                        &point,
                        Error::Shape(format!("integrand returned {} values, expected {width}", vals.len())),
                    ));
                }
                let w = weight * vol;
                let out: Vec<f64> = vals.iter().map(|v| v * w).collect();
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteValue(point));
                }
                Ok(out)
            })
            .collect();
        let mut sums = vec![CompensatedSum::default(); width];
        for term in terms {
            for (s, v) in sums.iter_mut().zip(term?) {
                s.add(v);
            }
        }
        levels.push(Level {
            multiplier: m,
            nodes: spec.level_nodes(m),
            values: sums.iter().map(CompensatedSum::total).collect(),
        });
    }
    Ok(Integration { levels })
}

/// `∫ f dv_g` at every ladder level.
pub fn integrate<F>(chart: &Chart, f: F, spec: &QuadratureSpec) -> Result<Integration>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    integrate_many(chart, spec, 1, |p| f(p).map(|v| vec![v]))
}

/// One ladder level of a Kazdan–Warner integral.
#[derive(Debug, Clone, PartialEq)]
pub struct KwLevel {
    pub nodes: Vec<usize>,
    /// `I = ∫ ⟨X, ∇Q⟩ dv_g`.
    pub integral: f64,
    /// `N = ∫ |⟨X, ∇Q⟩| dv_g`.
    pub norm: f64,
    /// `S = ∫ |X|_g (1 + |Q|) dv_g`, the scale used to detect `N ≈ 0`.
    pub scale: f64,
}

impl KwLevel {
    /// True when the integrand vanishes identically up to rounding.
    pub fn degenerate(&self) -> bool {
        self.norm <= DEGENERATE_RATIO * self.scale
    }

    /// `|I| / N`, reported as 0 for a degenerate normalization.
    pub fn ratio(&self) -> f64 {
        if self.degenerate() {
            0.0
        } else {
            self.integral.abs() / self.norm
        }
    }
}

/// Ladder of Kazdan–Warner integrals, coarsest first.
#[derive(Debug, Clone, PartialEq)]
pub struct KwIntegral {
    pub quantity: Scalar,
    pub levels: Vec<KwLevel>,
}

impl KwIntegral {
    pub fn finest(&self) -> &KwLevel {
        self.levels.last().expect("ladder is non-empty")
    }
}

/// `I = ∫ ⟨X, ∇Q⟩ dv_g` and `N = ∫ |⟨X, ∇Q⟩| dv_g` for a conformal Killing
/// field `X`; the Kazdan–Warner identities predict `|I|/N → 0`.
pub fn kw_integral(chart: &Chart, field: &VectorField, quantity: Scalar, spec: &QuadratureSpec) -> Result<KwIntegral> {
    spec.validate(chart)?;
    check_conformal_killing(chart, field)?;
    let order = quantity.min_order() + 1;
    // Surface dimension and order errors directly instead of per node.
    let probe = &chart.probe_points()[0];
    CurvatureState::new(chart, probe, order)?.gradient(quantity)?;

    let n = chart.dim();
    let integration = integrate_many(chart, spec, 3, |p| {
        let state = CurvatureState::new(chart, p, order)?;
        let grad = state.gradient(quantity)?;
        let q = state.scalar(quantity)?.value();
        let x = field.at(p, 0)?;
        let g = state.metric();
        let mut d = 0.0;
        let mut norm2 = 0.0;
        for i in 0..n {
            d += x.value(&[i]) * grad.value(&[i]);
            for j in 0..n {
                norm2 += g.value(&[i, j]) * x.value(&[i]) * x.value(&[j]);
            }
        }
        Ok(vec![d, d.abs(), norm2.max(0.0).sqrt() * (1.0 + q.abs())])
    })?;
    let levels = integration
        .levels
        .into_iter()
        .map(|l| KwLevel {
            nodes: l.nodes,
            integral: l.values[0],
            norm: l.values[1],
            scale: l.values[2],
        })
        .collect();
    Ok(KwIntegral { quantity, levels })
}

/// One ladder level of the invariance functional `F(g) = ∫ div_g X · v^(6)(g) dv_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceLevel {
    pub nodes: Vec<usize>,
    /// `F(g)` and `F(e^{2η}g)`.
    pub base: f64,
    pub rescaled: f64,
    /// `∫ |div X · v^(6)| dv` for both metrics, summed.
    pub mass: f64,
}

impl InvarianceLevel {
    /// `|F(g) − F(e^{2η}g)| / (|F(g)| + |F(e^{2η}g)| + mass)`.
    pub fn relative_difference(&self) -> f64 {
        let den = self.base.abs() + self.rescaled.abs() + self.mass;
        if den == 0.0 {
            0.0
        } else {
            (self.base - self.rescaled).abs() / den
        }
    }
}

/// `F(g)` and `F(e^{2η}g)` at every ladder level for `n = 6`.
pub fn conformal_invariance_functional(
    chart: &Chart,
    eta: &Expr,
    field: &VectorField,
    spec: &QuadratureSpec,
) -> Result<Vec<InvarianceLevel>> {
    if chart.dim() != 6 {
        return Err(Error::Dimension(format!(
            "the invariance functional is defined for n = 6, chart has n = {}",
            chart.dim()
        )));
    }
    spec.validate(chart)?;
    check_conformal_killing(chart, field)?;
    let rescaled = rescale(chart, eta, 1.0);
    let functional = |c: &Chart| {
        integrate_many(c, spec, 2, |p| {
            let state = CurvatureState::new(c, p, 4)?;
            let div = divergence(&state, &field.at(p, 4)?)?.value();
            let v = div * state.v6()?.value();
            Ok(vec![v, v.abs()])
        })
    };
    let base = functional(chart)?;
    let other = functional(&rescaled)?;
    Ok(base
        .levels
        .into_iter()
        .zip(other.levels)
        .map(|(a, b)| InvarianceLevel {
            nodes: a.nodes,
            base: a.values[0],
            rescaled: b.values[0],
            mass: a.values[1] + b.values[1],
        })
        .collect())
}
