//! Conformal families `g_t = e^{2tη} g`, vector fields, Lie derivatives of
//! the metric and the residuals of the conformal variation laws.

mod variation;

pub use variation::{
    g2r_ckv_chain, v6_ckv_residual, variation_residual, FdSettings, VariationKind, VariationOutcome,
};

use std::fmt;

use crate::curvature::{Chart, ChartKind, CurvatureState};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Func, Jet};
use crate::tensor::{covariant_derivative, metric_determinant, Contra, PointTensor};

/// Relative CKV residual below which a field is accepted as conformal Killing.
pub const CKV_TOLERANCE: f64 = 1e-8;

/// What a vector field is known or claimed to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Killing,
    ConformalKilling,
    Generic,
}

impl FieldTag {
    pub fn name(self) -> &'static str {
        match self {
            FieldTag::Killing => "killing",
            FieldTag::ConformalKilling => "conformal_killing",
            FieldTag::Generic => "generic",
        }
    }
}

/// A vector field `X = X^i ∂_i` given by component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<Expr>,
    label: String,
    tag: FieldTag,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>, label: impl Into<String>, tag: FieldTag) -> Self {
        VectorField {
            comps,
            label: label.into(),
            tag,
        }
    }

    /// Parse one component expression per coordinate.
    pub fn parse(texts: &[&str], names: &[String], label: impl Into<String>) -> Result<Self> {
        let comps = texts.iter().map(|t| parse(t, names)).collect::<Result<Vec<_>>>()?;
        Ok(VectorField::new(comps, label, FieldTag::Generic))
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    /// Components `X^i` as jets at `point`.
    pub fn at(&self, point: &[f64], order: usize) -> Result<PointTensor> {
        if point.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "field {} has {} components, point has {}",
                self.label,
                self.dim(),
                point.len()
            )));
        }
        PointTensor::try_from_fn(self.dim(), &[Contra], |ix| self.comps[ix[0]].eval_jet(point, order))
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.label, self.tag.name())
    }
}

fn unit(n: usize, i: usize, e: Expr, label: String, tag: FieldTag) -> VectorField {
    let mut comps = vec![Expr::constant(0.0); n];
    comps[i] = e;
    VectorField::new(comps, label, tag)
}

/// Curated vector fields for a chart family.
///
/// * `sphere_polar`: `−sin θ1 ∂_θ1` (conformal Killing, not Killing) and the
///   azimuthal rotation `∂_phi` (Killing).
/// * `torus`: translations `∂_i`, conformal Killing for every metric `e^{2w}δ`.
/// * `flat_box`: translations, rotations, the dilation and the special
///   conformal fields `2(x·e_k)x − |x|² e_k`.
pub fn builtin_fields(kind: ChartKind, n: usize) -> Result<Vec<VectorField>> {
    let x = Expr::var;
    let c = Expr::constant;
    Ok(match kind {
        ChartKind::SpherePolar => vec![
            unit(
                n,
                0,
                Expr::neg(Expr::call(Func::Sin, x(0))),
                "-sin(th1) d/dth1".into(),
                FieldTag::ConformalKilling,
            ),
            unit(n, n - 1, c(1.0), "d/dphi".into(), FieldTag::Killing),
        ],
        ChartKind::Torus => (0..n)
            .map(|i| unit(n, i, c(1.0), format!("d/dx{}", i + 1), FieldTag::ConformalKilling))
            .collect(),
        ChartKind::FlatBox => {
            let mut out: Vec<VectorField> = (0..n)
                .map(|i| unit(n, i, c(1.0), format!("d/dx{}", i + 1), FieldTag::Killing))
                .collect();
            for i in 0..n {
                for j in i + 1..n {
                    let mut comps = vec![c(0.0); n];
                    comps[i] = Expr::neg(x(j));
                    comps[j] = x(i);
                    out.push(VectorField::new(
                        comps,
                        format!("rotation x{} d/dx{} - x{} d/dx{}", i + 1, j + 1, j + 1, i + 1),
                        FieldTag::Killing,
                    ));
                }
            }
            out.push(VectorField::new(
                (0..n).map(x).collect(),
                "dilation",
                FieldTag::ConformalKilling,
            ));
            let sq = (1..n).fold(Expr::mul(x(0), x(0)), |acc, i| Expr::add(acc, Expr::mul(x(i), x(i))));
            for k in 0..n {
                let comps = (0..n)
                    .map(|i| {
                        let two_xk_xi = Expr::mul(c(2.0), Expr::mul(x(k), x(i)));
                        if i == k {
                            Expr::sub(two_xk_xi, sq.clone())
                        } else {
                            two_xk_xi
                        }
                    })
                    .collect();
                out.push(VectorField::new(
                    comps,
                    format!("special conformal along x{}", k + 1),
                    FieldTag::ConformalKilling,
                ));
            }
            out
        }
        other => return Err(Error::UnknownChartKind(format!("no builtin fields for {other}"))),
    })
}

/// The chart with metric `e^{2tη} g`.
pub fn rescale(chart: &Chart, eta: &Expr, t: f64) -> Chart {
    if t == 0.0 {
        return chart.clone();
    }
    let factor = Expr::call(Func::Exp, Expr::mul(Expr::constant(2.0 * t), eta.clone()));
    let label = format!("{} rescaled by exp(2*{t}*({}))", chart.label(), eta.to_text(chart.names()));
    chart.with_metric_factor(&factor, label)
}

/// `(L_X g)_ij = ∇_i X_j + ∇_j X_i`, one jet order below the state.
pub fn lie_metric(state: &CurvatureState, x: &PointTensor) -> Result<PointTensor> {
    let low = x.lower(0, state.metric())?;
    let dx = covariant_derivative(&low, state.christoffel()?)?;
    dx.add(&dx.permute(&[1, 0]))
}

/// `div_g X = (1/√det g) ∂_i(√det g X^i)`, one jet order below the inputs.
pub fn divergence(state: &CurvatureState, x: &PointTensor) -> Result<Jet> {
    let n = state.dim();
    let root = metric_determinant(state.metric())?.sqrt()?;
    let order = root.order().min(x.order());
    if order == 0 {
        return Err(Error::OrderExhausted("divergence needs jets of order ≥ 1".into()));
    }
    let mut flux = Jet::zero(n, order - 1);
    for i in 0..n {
        flux.add_scaled(&root.mul(x.get(&[i])).partial(i)?, 1.0);
    }
    flux.div(&root.truncate(order - 1))
}

/// `L_X g − (2 div X / n) g`.
pub fn ckv_residual(state: &CurvatureState, x: &PointTensor) -> Result<PointTensor> {
    let n = state.dim() as f64;
    let lie = lie_metric(state, x)?;
    let div = divergence(state, x)?;
    lie.sub(&state.metric().mul_jet(&div.scale(2.0 / n)))
}

/// Relative CKV residual `max|L_X g − (2 div X/n) g| / max(1, max|L_X g|)`.
pub fn ckv_relative(state: &CurvatureState, x: &PointTensor) -> Result<f64> {
    let res = ckv_residual(state, x)?;
    let lie = lie_metric(state, x)?;
    Ok(res.max_abs_value() / 1f64.max(lie.max_abs_value()))
}

/// Largest relative CKV residual over the chart's probe points; fails with
/// `NotConformalKilling` above [`CKV_TOLERANCE`].
pub fn check_conformal_killing(chart: &Chart, field: &VectorField) -> Result<f64> {
    let mut worst = 0f64;
    for p in chart.probe_points() {
        let state = CurvatureState::new(chart, &p, 1)?;
        let x = field.at(&p, 1)?;
        worst = worst.max(ckv_relative(&state, &x)?);
    }
    if worst > CKV_TOLERANCE {
        return Err(Error::NotConformalKilling(format!(
            "{} on {}: relative residual {worst:e}",
            field.label(),
            chart.label()
        )));
    }
    Ok(worst)
}

/// `∇_i ∇_j f` of a scalar jet.
pub fn hessian(state: &CurvatureState, f: &Jet) -> Result<PointTensor> {
    let gamma = state.christoffel()?;
    let df = covariant_derivative(&PointTensor::scalar(f.clone()), gamma)?;
    covariant_derivative(&df, gamma)
}
