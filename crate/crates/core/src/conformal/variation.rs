//! Residuals of the conformal variation laws along `g_t = e^{2tη} g`.
//!
//! Derivative laws are checked by central differences in `t` at steps `h`
//! and `h/2`; the observed convergence order is `log2(|r(h)| / |r(h/2)|)` and
//! the Richardson value `(4D(h/2) − D(h))/3` gives the extrapolated residual.
//! The sample at `t = 0` feeds a fourth-difference estimate of rounding noise.

use super::{divergence, hessian, rescale, VectorField};
use crate::curvature::identities::compare;
use crate::curvature::{Chart, CurvatureState, Scalar};
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet};
use crate::tensor::{kulkarni_nomizu, Co, Contra, PointTensor};

/// Which variation law to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariationKind {
    /// `d/dt(g_t^{-1}A_t) = −g^{-1}∇²η − 2η g^{-1}A`.
    SchoutenDot,
    /// `d/dt div_{g_t} X = n X(η)`.
    DivDot,
    /// Exact law `R^{ij}_{kl}(g_t) = e^{−2tη}(R − α⊙g)^{ij}_{kl}` at finite `t`,
    /// `α = t∇²η − t² dη⊗dη + (t²/2)|dη|² g`.
    RiemannConf,
    /// `d/dt B_ij = (n−4)(C_ijk + C_jik)∇^kη − 2η B_ij`.
    BachDot,
    /// `d/dt v^(6) = −6η v^(6) + ∇^j[(T^(2)_ij/8 + B_ij/(24(n−4)))∇^iη]`.
    V6Variation,
    /// `d/dt G_2r = −2rη G_2r − 4r(n−2r+1) (P_{r−1})^j_i ∇^i∇_j η`.
    G2rVariation(usize),
}

impl VariationKind {
    pub fn name(self) -> String {
        match self {
            VariationKind::SchoutenDot => "schouten_dot".into(),
            VariationKind::DivDot => "div_dot".into(),
            VariationKind::RiemannConf => "riemann_conf".into(),
            VariationKind::BachDot => "bach_dot".into(),
            VariationKind::V6Variation => "v6_variation".into(),
            VariationKind::G2rVariation(r) => format!("g2r_variation:{r}"),
        }
    }

    /// Metric jet order the base-point prediction needs.
    pub fn base_order(self) -> usize {
        match self {
            VariationKind::DivDot => 1,
            VariationKind::SchoutenDot | VariationKind::RiemannConf | VariationKind::G2rVariation(_) => 2,
            VariationKind::BachDot => 4,
            VariationKind::V6Variation => 5,
        }
    }
}

/// Step and parameter choices.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSettings {
    /// Central-difference step; `h/2` is always evaluated as well.
    pub h: f64,
    /// Parameters at which the exact Riemann law is checked.
    pub t_values: Vec<f64>,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            h: 1e-3,
            t_values: vec![0.3, 1.0],
        }
    }
}

/// Outcome of one variation check at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationOutcome {
    /// Richardson-extrapolated residual for derivative laws; the worst
    /// residual over the parameter list for the exact Riemann law.
    pub residual: f64,
    pub residual_h: f64,
    pub residual_h2: f64,
    /// Observed order, or `None` when the residual at `h/2` is not resolved
    /// above the rounding noise of the difference quotient.
    pub fd_order: Option<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Resolution factor: a residual counts as measured only when it exceeds the
/// rounding noise of the difference quotient by this much.
const NOISE_MARGIN: f64 = 16.0;

fn fd_check(eval: impl Fn(f64) -> Result<Vec<f64>>, predicted: &[f64], h: f64) -> Result<VariationOutcome> {
    let samples = [-h, -h / 2.0, 0.0, h / 2.0, h]
        .iter()
        .map(|&t| eval(t))
        .collect::<Result<Vec<_>>>()?;
    let [m1, m2, f0, p2, p1] = &samples[..] else { unreachable!() };
    if samples.iter().any(|v| v.len() != predicted.len()) {
        return Err(Error::Shape("prediction and difference quotient differ in length".into()));
    }
    let size = samples.iter().map(|v| max_abs(v)).fold(0f64, f64::max);
    let quotient = |plus: &[f64], minus: &[f64], step: f64| -> Vec<f64> {
        plus.iter().zip(minus).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    let d1 = quotient(p1, m1, h);
    let d2 = quotient(p2, m2, h / 2.0);
    let scale = 1f64.max(max_abs(predicted)).max(max_abs(&d2));
    let diff = |d: &[f64]| -> Vec<f64> { d.iter().zip(predicted).map(|(a, b)| a - b).collect() };
    let r1 = diff(&d1);
    let r2 = diff(&d2);
    let ext: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let re = diff(&ext);
    // Rounding noise of the quotient at h/2. Independent sample errors of size
    // e give a fourth difference of about sqrt(70) e and a quotient error of
    // about sqrt(2) e / h; truncation enters the fourth difference at O(h^4).
    let fourth = (0..predicted.len())
        .map(|i| (m1[i] - 4.0 * m2[i] + 6.0 * f0[i] - 4.0 * p2[i] + p1[i]).abs())
        .fold(0f64, f64::max);
    let floor = (8.0 * f64::EPSILON * size / h).max(fourth / (6.0 * h));
    let fd_order = if max_abs(&r2) <= NOISE_MARGIN * floor {
        None
    } else {
        Some((l2(&r1) / l2(&r2)).log2())
    };
    Ok(VariationOutcome {
        residual: max_abs(&re) / scale,
        residual_h: max_abs(&r1) / scale,
        residual_h2: max_abs(&r2) / scale,
        fd_order,
    })
}

fn eta_gradient_up(state: &CurvatureState, eta: &Jet) -> Result<PointTensor> {
    let n = state.dim();
    let d = PointTensor::try_from_fn(n, &[Co], |ix| eta.partial(ix[0]))?;
    d.raise(0, state.inverse()?)
}

/// `M_ij = T^(2)_ij/8 + B_ij/(24(n−4))`.
fn v6_flux_tensor(state: &CurvatureState) -> Result<PointTensor> {
    let n = state.dim() as f64;
    let t2 = state.newton_tensor(2)?.lower(0, state.metric())?;
    let b = state.bach()?;
    t2.scale(0.125).add(&b.scale(1.0 / (24.0 * (n - 4.0))))
}

/// `∇^j (M_ij V^i)` for a symmetric covariant `M` and a vector `V`.
fn contracted_divergence(state: &CurvatureState, m: &PointTensor, v: &PointTensor) -> Result<Jet> {
    let n = state.dim();
    let order = m.order().min(v.order());
    let y = PointTensor::from_fn(n, &[Co], |ix| {
        let mut acc = Jet::zero(n, order);
        for i in 0..n {
            acc.mul_acc(m.get(&[i, ix[0]]), v.get(&[i]), 1.0);
        }
        acc
    });
    Ok(state.divergence(&y, 0)?.as_scalar().clone())
}

/// Residual of one variation law at `point`.
pub fn variation_residual(
    kind: VariationKind,
    chart: &Chart,
    eta: &Expr,
    field: Option<&VectorField>,
    point: &[f64],
    fd: &FdSettings,
) -> Result<VariationOutcome> {
    let n = chart.dim();
    let nf = n as f64;
    let base = CurvatureState::new(chart, point, kind.base_order())?;
    let eta_jet = eta.eval_jet(point, kind.base_order())?;
    let eta0 = eta_jet.value();
    let at = |t: f64, order: usize| CurvatureState::new(&rescale(chart, eta, t), point, order);
    match kind {
        VariationKind::SchoutenDot => {
            let a = base.schouten_endomorphism()?;
            let h_up = hessian(&base, &eta_jet)?.raise(0, base.inverse()?)?;
            let predicted: Vec<f64> = h_up
                .values()
                .iter()
                .zip(a.values())
                .map(|(h, a)| -h - 2.0 * eta0 * a)
                .collect();
            fd_check(|t| Ok(at(t, 2)?.schouten_endomorphism()?.values()), &predicted, fd.h)
        }
        VariationKind::DivDot => {
            let field = field.ok_or_else(|| Error::Shape("div_dot needs a vector field".into()))?;
            let x = field.at(point, 1)?;
            let grad = eta_jet.gradient();
            let predicted = nf * (0..n).map(|i| x.value(&[i]) * grad[i]).sum::<f64>();
            fd_check(
                |t| {
                    let s = at(t, 1)?;
                    Ok(vec![divergence(&s, &field.at(point, 1)?)?.value()])
                },
                &[predicted],
                fd.h,
            )
        }
        VariationKind::RiemannConf => {
            let rm = base.riemann_raised()?;
            let ginv = base.inverse()?;
            let g = base.metric();
            let hess = hessian(&base, &eta_jet)?;
            let d: Vec<f64> = eta_jet.gradient();
            let norm2: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| ginv.value(&[i, j]) * d[i] * d[j])
                .sum();
            let mut worst = 0f64;
            for &t in &fd.t_values {
                let alpha = PointTensor::from_fn(n, &[Co, Co], |ix| {
                    let (i, j) = (ix[0], ix[1]);
                    let v = t * hess.value(&[i, j]) - t * t * d[i] * d[j]
                        + 0.5 * t * t * norm2 * g.value(&[i, j]);
                    Jet::constant(n, 0, v)
                });
                let ag = kulkarni_nomizu(&alpha, g)?.raise(0, ginv)?.raise(1, ginv)?;
                let want = rm.sub(&ag)?.scale((-2.0 * t * eta0).exp());
                let got = at(t, 2)?;
                worst = worst.max(compare(got.riemann_raised()?, &want)?);
            }
            Ok(VariationOutcome {
                residual: worst,
                residual_h: worst,
                residual_h2: worst,
                fd_order: None,
            })
        }
        VariationKind::BachDot => {
            let b = base.bach()?;
            let c = base.cotton()?;
            let up = eta_gradient_up(&base, &eta_jet)?;
            let mut predicted = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += (c.value(&[i, j, k]) + c.value(&[j, i, k])) * up.value(&[k]);
                    }
                    predicted.push((nf - 4.0) * s - 2.0 * eta0 * b.value(&[i, j]));
                }
            }
            fd_check(|t| Ok(at(t, 4)?.bach()?.values()), &predicted, fd.h)
        }
        VariationKind::V6Variation => {
            let v6 = base.v6()?.value();
            let m = v6_flux_tensor(&base)?;
            let up = eta_gradient_up(&base, &eta_jet)?;
            let div = contracted_divergence(&base, &m, &up)?.value();
            let predicted = -6.0 * v6 * eta0 + div;
            fd_check(|t| Ok(vec![at(t, 4)?.v6()?.value()]), &[predicted], fd.h)
        }
        VariationKind::G2rVariation(r) => {
            if r == 0 || 2 * r > n {
                return Err(Error::Dimension(format!("G_{} in dimension {n}", 2 * r)));
            }
            let g2r = base.gauss_bonnet(r)?.value();
            let p = base.p_tensor(r - 1)?;
            let h_up = hessian(&base, &eta_jet)?.raise(0, base.inverse()?)?;
            let mut ph = 0.0;
            for i in 0..n {
                for j in 0..n {
                    ph += p.value(&[j, i]) * h_up.value(&[i, j]);
                }
            }
            let rf = r as f64;
            let predicted = -2.0 * rf * eta0 * g2r - 4.0 * rf * (nf - 2.0 * rf + 1.0) * ph;
            fd_check(|t| Ok(vec![at(t, 2)?.gauss_bonnet(r)?.value()]), &[predicted], fd.h)
        }
    }
}

fn relative_sum(terms: &[f64]) -> f64 {
    let total: f64 = terms.iter().sum();
    total.abs() / terms.iter().fold(1f64, |m, t| m.max(t.abs()))
}

/// Pointwise chain for a conformal Killing field `X`:
/// `L_X G_2r + (2r/n) div X · G_2r + (4r(n−2r+1)/n) ∇_j((P_{r−1})^j_i ∇^i div X) = 0`.
pub fn g2r_ckv_chain(chart: &Chart, field: &VectorField, point: &[f64], r: usize) -> Result<f64> {
    let n = chart.dim();
    if r == 0 || 2 * r > n {
        return Err(Error::Dimension(format!("G_{} in dimension {n}", 2 * r)));
    }
    let state = CurvatureState::new(chart, point, 3)?;
    let x = field.at(point, 3)?;
    let grad = state.gradient(Scalar::GaussBonnet(r))?;
    let lie: f64 = (0..n).map(|i| x.value(&[i]) * grad.value(&[i])).sum();
    let div = divergence(&state, &x)?;
    let (nf, rf) = (n as f64, r as f64);
    let second = 2.0 * rf / nf * div.value() * state.gauss_bonnet(r)?.value();
    let p = state.p_tensor(r - 1)?;
    let up = eta_gradient_up(&state, &div)?;
    let order = p.order().min(up.order());
    let v = PointTensor::from_fn(n, &[Contra], |ix| {
        let mut acc = Jet::zero(n, order);
        for i in 0..n {
            acc.mul_acc(p.get(&[ix[0], i]), up.get(&[i]), 1.0);
        }
        acc
    });
    let third = 4.0 * rf * (nf - 2.0 * rf + 1.0) / nf * state.divergence(&v, 0)?.as_scalar().value();
    Ok(relative_sum(&[lie, second, third]))
}

/// Pointwise identity for a conformal Killing field `X` and `k = 3`:
/// `(1 − 6/n)⟨X, ∇v^(6)⟩ + (6/n) div(v^(6) X) − (1/n)∇^j(M_ij ∇^i div X) = 0`
/// with `M_ij = T^(2)_ij/8 + B_ij/(24(n−4))`.
pub fn v6_ckv_residual(chart: &Chart, field: &VectorField, point: &[f64]) -> Result<f64> {
    let n = chart.dim();
    let nf = n as f64;
    let state = CurvatureState::new(chart, point, 5)?;
    let x = field.at(point, 5)?;
    let grad = state.gradient(Scalar::V(3))?;
    let first = (1.0 - 6.0 / nf) * (0..n).map(|i| x.value(&[i]) * grad.value(&[i])).sum::<f64>();
    let v6 = state.v6()?;
    let v6x = x.mul_jet(v6);
    let second = 6.0 / nf * divergence(&state, &v6x)?.value();
    let div = divergence(&state, &x)?;
    let up = eta_gradient_up(&state, &div)?;
    let m = v6_flux_tensor(&state)?;
    let third = -contracted_divergence(&state, &m, &up)?.value() / nf;
    Ok(relative_sum(&[first, second, third]))
}
