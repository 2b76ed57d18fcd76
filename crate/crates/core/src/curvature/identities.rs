//! Pointwise curvature identities, each evaluated as a relative residual
//! `max|lhs − rhs| / max(1, max|lhs|, max|rhs|)` over value parts.

use super::CurvatureState;
use crate::error::{Error, Result};
use crate::expr::Jet;
use crate::tensor::{kulkarni_nomizu, Co, PointTensor};

/// Relative residual between two tensors of equal shape.
pub fn compare(lhs: &PointTensor, rhs: &PointTensor) -> Result<f64> {
    let diff = lhs.max_abs_diff(rhs)?;
    Ok(diff / 1f64.max(lhs.max_abs_value()).max(rhs.max_abs_value()))
}

/// Relative residual between two scalars.
pub fn compare_values(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

fn compare_jets(lhs: &Jet, rhs: &Jet) -> f64 {
    compare_values(lhs.value(), rhs.value())
}

/// Residual of `R_ijkl = W_ijkl + (A⊙g)_ijkl`, with the Weyl tensor built
/// independently from Ricci and the scalar curvature, combined with the
/// trace-freeness of the stored Weyl tensor.
pub fn decomposition(s: &CurvatureState) -> Result<f64> {
    let n = s.dim() as f64;
    let g = s.metric();
    let rm = s.riemann()?;
    let ric = s.ricci()?;
    let r = s.scalar_curvature()?;
    let traceless = ric.sub(&g.mul_jet(&r.scale(1.0 / n)))?;
    let w = rm
        .sub(&kulkarni_nomizu(&traceless, g)?.scale(1.0 / (n - 2.0)))?
        .sub(&kulkarni_nomizu(g, g)?.mul_jet(&r.scale(1.0 / (2.0 * n * (n - 1.0)))))?;
    let rebuilt = w.add(&kulkarni_nomizu(s.schouten()?, g)?)?;
    Ok(compare(rm, &rebuilt)?.max(weyl_traces(s)?))
}

/// Largest single metric trace of the Weyl tensor, relative to `|W|`.
pub fn weyl_traces(s: &CurvatureState) -> Result<f64> {
    let w = s.weyl()?;
    let scale = 1f64.max(w.max_abs_value());
    let mut worst = 0f64;
    for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        worst = worst.max(s.trace(w, a, b)?.max_abs_value());
    }
    Ok(worst / scale)
}

/// Pair antisymmetries, pair exchange and the first Bianchi identity.
pub fn riemann_symmetries(s: &CurvatureState) -> Result<f64> {
    let rm = s.riemann()?;
    let zero = PointTensor::zeros(s.dim(), &[Co; 4], 0);
    let mut worst = 0f64;
    worst = worst.max(compare(rm, &rm.permute(&[1, 0, 2, 3]).scale(-1.0))?);
    worst = worst.max(compare(rm, &rm.permute(&[0, 1, 3, 2]).scale(-1.0))?);
    worst = worst.max(compare(rm, &rm.permute(&[2, 3, 0, 1]))?);
    // R_ijkl + R_iklj + R_iljk
    let cyc = rm.add(&rm.permute(&[0, 2, 3, 1]))?.add(&rm.permute(&[0, 3, 1, 2]))?;
    let bianchi = cyc.max_abs_diff(&zero)? / 1f64.max(rm.max_abs_value());
    Ok(worst.max(bianchi))
}

/// Second Bianchi identity `R_ijkl,m + R_ijlm,k + R_ijmk,l = 0`, relative to `|∇Rm|`.
pub fn second_bianchi(s: &CurvatureState) -> Result<f64> {
    let d = crate::tensor::covariant_derivative(s.riemann()?, s.christoffel()?)?;
    let cyc = d.add(&d.permute(&[0, 1, 3, 4, 2]))?.add(&d.permute(&[0, 1, 4, 2, 3]))?;
    Ok(cyc.max_abs_value() / 1f64.max(d.max_abs_value()))
}

/// `Ric = (n−2)A + (tr_g A) g`.
pub fn schouten_reconstruction(s: &CurvatureState) -> Result<f64> {
    let n = s.dim() as f64;
    let a = s.schouten()?;
    let tr = s.trace(a, 0, 1)?;
    let rebuilt = a.scale(n - 2.0).add(&s.metric().mul_jet(tr.as_scalar()))?;
    compare(s.ricci()?, &rebuilt)
}

/// `Σ T^(k−1)_ij A_ij = k σ_k` for every `1 ≤ k ≤ n`.
pub fn newton_contraction(s: &CurvatureState) -> Result<f64> {
    let n = s.dim();
    let a = s.schouten_endomorphism()?;
    let mut worst = 0f64;
    for k in 1..=n {
        let t = s.newton_tensor(k - 1)?;
        // T^j_i a^i_j
        let mut lhs = 0.0;
        for i in 0..n {
            for j in 0..n {
                lhs += t.value(&[j, i]) * a.value(&[i, j]);
            }
        }
        worst = worst.max(compare_values(lhs, k as f64 * s.sigma(k)?.value()));
    }
    Ok(worst)
}

/// `tr T^(k) = (n−k) σ_k` for every `0 ≤ k ≤ n−1`.
pub fn newton_trace(s: &CurvatureState) -> Result<f64> {
    let n = s.dim();
    let mut worst = 0f64;
    for k in 0..n {
        let tr = s.newton_tensor(k)?.contract(0, 1)?;
        let want = (n - k) as f64 * s.sigma(k)?.value();
        worst = worst.max(compare_values(tr.as_scalar().value(), want));
    }
    Ok(worst)
}

/// `∇^l W_lijk = −(n−3) C_ijk`.
pub fn weyl_divergence_cotton(s: &CurvatureState) -> Result<f64> {
    let n = s.dim() as f64;
    compare(s.weyl_divergence()?, &s.cotton()?.scale(-(n - 3.0)))
}

/// Both metric traces of the Cotton tensor, `g^{ij}C_ijk` and `g^{jk}C_ijk`.
pub fn cotton_traces(s: &CurvatureState) -> Result<f64> {
    let c = s.cotton()?;
    let scale = 1f64.max(c.max_abs_value());
    let t01 = s.trace(c, 0, 1)?.max_abs_value();
    let t12 = s.trace(c, 1, 2)?.max_abs_value();
    Ok(t01.max(t12) / scale)
}

/// `g^{il} ∇_l C_ijk = 0`, relative to the size of `∇C`.
pub fn cotton_divergence(s: &CurvatureState) -> Result<f64> {
    let c = s.cotton()?;
    let div = s.divergence(c, 0)?;
    let grad = crate::tensor::covariant_derivative(c, s.christoffel()?)?;
    Ok(div.max_abs_value() / 1f64.max(grad.max_abs_value()))
}

/// `A^{pq} C_pqi`.
fn schouten_cotton(s: &CurvatureState) -> Result<PointTensor> {
    let n = s.dim();
    let ginv = s.inverse()?;
    let a_up = s.schouten()?.raise(0, ginv)?.raise(1, ginv)?;
    let c = s.cotton()?;
    let order = a_up.order().min(c.order());
    Ok(PointTensor::from_fn(n, &[Co], |ix| {
        let mut acc = Jet::zero(n, order);
        for p in 0..n {
            for q in 0..n {
                acc.mul_acc(a_up.get(&[p, q]), c.get(&[p, q, ix[0]]), 1.0);
            }
        }
        acc
    }))
}

/// `∇_j T^(2)_ij = −A^{pq} C_pqi`.
pub fn newton_divergence(s: &CurvatureState) -> Result<f64> {
    if s.dim() < 3 {
        return Err(Error::Dimension("T^(2) needs n ≥ 3".into()));
    }
    // T^j_i: divergence over the upper slot leaves the lower index i
    let div = s.divergence(s.newton_tensor(2)?, 0)?;
    compare(&div, &schouten_cotton(s)?.scale(-1.0))
}

/// `∇^j B_ij = (n−4) A^{kl} C_kli`.
pub fn bach_divergence(s: &CurvatureState) -> Result<f64> {
    let n = s.dim() as f64;
    let div = s.divergence(s.bach()?, 1)?;
    compare(&div, &schouten_cotton(s)?.scale(n - 4.0))
}

/// `∇_j (P_r)^j_i = 0`, relative to the size of `∇P_r`.
pub fn p_divergence(s: &CurvatureState, r: usize) -> Result<f64> {
    let p = s.p_tensor(r)?;
    let div = s.divergence(p, 0)?;
    let grad = crate::tensor::covariant_derivative(p, s.christoffel()?)?;
    Ok(div.max_abs_value() / 1f64.max(grad.max_abs_value()))
}

/// `tr P_r = (n−2r) G_2r`.
pub fn p_trace(s: &CurvatureState, r: usize) -> Result<f64> {
    let n = s.dim();
    let tr = s.p_tensor(r)?.contract(0, 1)?;
    let want = (n - 2 * r) as f64 * s.gauss_bonnet(r)?.value();
    Ok(compare_values(tr.as_scalar().value(), want))
}

/// `G_2 = 2R`.
pub fn g2_scalar(s: &CurvatureState) -> Result<f64> {
    Ok(compare_jets(s.gauss_bonnet(1)?, &s.scalar_curvature()?.scale(2.0)))
}

/// Locally conformally flat relation `G_2r = 4^r (n−r)! r!/(n−2r)! σ_r`.
pub fn gauss_bonnet_lcf(s: &CurvatureState, r: usize) -> Result<f64> {
    let n = s.dim();
    let c = gauss_bonnet_lcf_constant(n, r);
    Ok(compare_jets(s.gauss_bonnet(r)?, &s.sigma(r)?.scale(c)))
}

/// `4^r (n−r)! r! / (n−2r)!`.
pub fn gauss_bonnet_lcf_constant(n: usize, r: usize) -> f64 {
    use crate::expr::factorial;
    4f64.powi(r as i32) * factorial(n - r) * factorial(r) / factorial(n - 2 * r)
}

/// Locally conformally flat relation `v^(6) = −σ_3/8`.
pub fn v6_lcf(s: &CurvatureState) -> Result<f64> {
    Ok(compare_jets(s.v6()?, &s.sigma(3)?.scale(-0.125)))
}

/// Bach symmetry and trace-freeness.
pub fn bach_symmetry(s: &CurvatureState) -> Result<f64> {
    let b = s.bach()?;
    let sym = compare(b, &b.permute(&[1, 0]))?;
    let tr = s.trace(b, 0, 1)?.as_scalar().value().abs() / 1f64.max(b.max_abs_value());
    Ok(sym.max(tr))
}

/// Contracted Bianchi identity for the Schouten tensor:
/// `g^{ik} A_ik,j = g^{ik} A_ij,k`.
pub fn schouten_bianchi(s: &CurvatureState) -> Result<f64> {
    let da = s.schouten_gradient()?;
    let lhs = s.trace(da, 0, 1)?;
    let rhs = s.trace(da, 0, 2)?;
    compare(&lhs, &rhs)
}
