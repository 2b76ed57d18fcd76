//! Curvature stack of a metric at a point, from Christoffel symbols to the
//! Bach tensor, σ_k, Newton tensors, Gauss–Bonnet curvatures and `v^(2k)`.
//!
//! Sign conventions: `R^i_jkl = ∂_kΓ^i_lj − ∂_lΓ^i_kj + Γ^i_kmΓ^m_lj − Γ^i_lmΓ^m_kj`,
//! `R_ijkl = g_im R^m_jkl` and `Ric_jl = R^i_jil`, so the unit sphere has
//! `R_ijkl = g_ik g_jl − g_il g_jk` and scalar curvature `n(n−1)`.
//!
//! A [`CurvatureState`] is built from metric jets of some order `K`; every
//! derived tensor carries jets of order `K` minus the number of metric
//! derivatives it consumes, and asking for a quantity the order cannot
//! support fails with `OrderExhausted`.

mod chart;
pub mod identities;

pub use chart::{coord_names, Chart, ChartKind, CosineTerm};

use std::cell::OnceCell;

use crate::error::{Error, Result};
use crate::expr::{factorial, Jet};
use crate::tensor::{
    covariant_derivative, for_each_nonzero, for_each_nonzero_paired, kulkarni_nomizu,
    metric_inverse, Co, Contra, PointTensor,
};

/// Scalar curvature quantities that can be differentiated along the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scalar {
    /// Scalar curvature `R`.
    Curvature,
    /// `σ_k` of the Schouten endomorphism.
    Sigma(usize),
    /// Gauss–Bonnet curvature `G_2r`.
    GaussBonnet(usize),
    /// Renormalized volume coefficient `v^(2k)`, `k ≤ 3`.
    V(usize),
}

impl Scalar {
    /// Metric jet order needed to evaluate the value.
    pub fn min_order(self) -> usize {
        match self {
            Scalar::V(3) => 4,
            _ => 2,
        }
    }

    pub fn label(self) -> String {
        match self {
            Scalar::Curvature => "R".into(),
            Scalar::Sigma(k) => format!("sigma_{k}"),
            Scalar::GaussBonnet(r) => format!("G_{}", 2 * r),
            Scalar::V(k) => format!("v^({})", 2 * k),
        }
    }
}

fn cached<T>(cell: &OnceCell<T>, f: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

/// Memoized curvature quantities at one point of one metric.
#[derive(Debug)]
pub struct CurvatureState {
    point: Vec<f64>,
    metric: PointTensor,
    inverse: OnceCell<PointTensor>,
    christoffel: OnceCell<PointTensor>,
    riemann_mixed: OnceCell<PointTensor>,
    riemann: OnceCell<PointTensor>,
    riemann_raised: OnceCell<PointTensor>,
    ricci: OnceCell<PointTensor>,
    scalar: OnceCell<Jet>,
    schouten: OnceCell<PointTensor>,
    schouten_endo: OnceCell<PointTensor>,
    weyl: OnceCell<PointTensor>,
    schouten_grad: OnceCell<PointTensor>,
    cotton: OnceCell<PointTensor>,
    div_weyl: OnceCell<PointTensor>,
    bach: OnceCell<PointTensor>,
    sigma: OnceCell<Vec<Jet>>,
    newton: Vec<OnceCell<PointTensor>>,
    gauss_bonnet: Vec<OnceCell<Jet>>,
    p_tensor: Vec<OnceCell<PointTensor>>,
    v6: OnceCell<Jet>,
}

impl CurvatureState {
    /// Evaluate the chart's metric with jets of `order` at `point`.
    pub fn new(chart: &Chart, point: &[f64], order: usize) -> Result<Self> {
        let metric = chart.metric_at(point, order)?;
        Self::from_metric(point.to_vec(), metric)
    }

    /// Build from metric jets `g_ij` given directly.
    pub fn from_metric(point: Vec<f64>, metric: PointTensor) -> Result<Self> {
        if metric.variance() != [Co, Co] {
            return Err(Error::Variance("metric must be a covariant 2-tensor".into()));
        }
        let n = metric.dim();
        Ok(CurvatureState {
            point,
            metric,
            inverse: OnceCell::new(),
            christoffel: OnceCell::new(),
            riemann_mixed: OnceCell::new(),
            riemann: OnceCell::new(),
            riemann_raised: OnceCell::new(),
            ricci: OnceCell::new(),
            scalar: OnceCell::new(),
            schouten: OnceCell::new(),
            schouten_endo: OnceCell::new(),
            weyl: OnceCell::new(),
            schouten_grad: OnceCell::new(),
            cotton: OnceCell::new(),
            div_weyl: OnceCell::new(),
            bach: OnceCell::new(),
            sigma: OnceCell::new(),
            newton: (0..n).map(|_| OnceCell::new()).collect(),
            gauss_bonnet: (0..=n / 2).map(|_| OnceCell::new()).collect(),
            p_tensor: (0..=n / 2).map(|_| OnceCell::new()).collect(),
            v6: OnceCell::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Metric jet order this state was built with.
    pub fn order(&self) -> usize {
        self.metric.order()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn metric(&self) -> &PointTensor {
        &self.metric
    }

    fn need(&self, min: usize, what: &str) -> Result<()> {
        if self.order() < min {
            return Err(Error::OrderExhausted(format!(
                "{what} needs metric jets of order {min}, this state carries order {}",
                self.order()
            )));
        }
        Ok(())
    }

    fn need_dim(&self, ok: bool, what: &str) -> Result<()> {
        if !ok {
            return Err(Error::Dimension(format!(
                "{what} is not defined in dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Inverse metric `g^{ij}`.
    pub fn inverse(&self) -> Result<&PointTensor> {
        cached(&self.inverse, || metric_inverse(&self.metric))
    }

    /// `Γ^k_ij`, variance `(Contra, Co, Co)`.
    pub fn christoffel(&self) -> Result<&PointTensor> {
        cached(&self.christoffel, || {
            self.need(1, "Christoffel symbols")?;
            let n = self.dim();
            let ginv = self.inverse()?;
            // dg[(l*n + i)*n + j] = ∂_l g_ij
            let mut dg = Vec::with_capacity(n * n * n);
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        dg.push(self.metric.get(&[i, j]).partial(l)?);
                    }
                }
            }
            let d = |l: usize, i: usize, j: usize| &dg[(l * n + i) * n + j];
            let order = self.order() - 1;
            let first: Vec<Jet> = (0..n * n * n)
                .map(|f| {
                    let (l, i, j) = (f / (n * n), (f / n) % n, f % n);
                    d(i, j, l).add(d(j, i, l)).sub(d(l, i, j)).scale(0.5)
                })
                .collect();
            Ok(PointTensor::from_fn(n, &[Contra, Co, Co], |ix| {
                let (k, i, j) = (ix[0], ix[1], ix[2]);
                let mut acc = Jet::zero(n, order);
                for l in 0..n {
                    acc.mul_acc(ginv.get(&[k, l]), &first[(l * n + i) * n + j], 1.0);
                }
                acc
            }))
        })
    }

    /// `R^i_jkl`, variance `(Contra, Co, Co, Co)`.
    pub fn riemann_mixed(&self) -> Result<&PointTensor> {
        cached(&self.riemann_mixed, || {
            self.need(2, "the Riemann tensor")?;
            let n = self.dim();
            let gamma = self.christoffel()?;
            // dgam[c * n + m] = ∂_m Γ[c]
            let mut dgam = Vec::with_capacity(n * n * n * n);
            for c in gamma.comps() {
                for m in 0..n {
                    dgam.push(c.partial(m)?);
                }
            }
            let dg = |i: usize, a: usize, b: usize, m: usize| &dgam[((i * n + a) * n + b) * n + m];
            let order = self.order() - 2;
            Ok(PointTensor::from_fn(n, &[Contra, Co, Co, Co], |ix| {
                let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
                let mut acc = dg(i, l, j, k).sub(dg(i, k, j, l)).truncate(order);
                for m in 0..n {
                    acc.mul_acc(gamma.get(&[i, k, m]), gamma.get(&[m, l, j]), 1.0);
                    acc.mul_acc(gamma.get(&[i, l, m]), gamma.get(&[m, k, j]), -1.0);
                }
                acc
            }))
        })
    }

    /// `R_ijkl`, all slots covariant.
    pub fn riemann(&self) -> Result<&PointTensor> {
        cached(&self.riemann, || self.riemann_mixed()?.lower(0, &self.metric))
    }

    /// `R^{ij}_{kl}`, variance `(Contra, Contra, Co, Co)`.
    pub fn riemann_raised(&self) -> Result<&PointTensor> {
        cached(&self.riemann_raised, || {
            self.riemann_mixed()?.raise(1, self.inverse()?)
        })
    }

    /// `Ric_jl = R^i_jil`.
    pub fn ricci(&self) -> Result<&PointTensor> {
        cached(&self.ricci, || self.riemann_mixed()?.contract(0, 2))
    }

    /// Scalar curvature `R = g^{jl} Ric_jl`.
    pub fn scalar_curvature(&self) -> Result<&Jet> {
        cached(&self.scalar, || {
            let t = self.trace(self.ricci()?, 0, 1)?;
            Ok(t.as_scalar().clone())
        })
    }

    /// Metric trace `g^{ab}` over two covariant slots.
    pub fn trace(&self, t: &PointTensor, a: usize, b: usize) -> Result<PointTensor> {
        t.raise(a, self.inverse()?)?.contract(a, b)
    }

    /// Covariant divergence over `slot`: `∇_a t^{…a…}` for a contravariant
    /// slot, `g^{ab}∇_b t_{…a…}` for a covariant one.
    pub fn divergence(&self, t: &PointTensor, slot: usize) -> Result<PointTensor> {
        let gamma = self.christoffel()?;
        let up = match t.variance().get(slot) {
            Some(Contra) => t.clone(),
            Some(Co) => t.raise(slot, self.inverse()?)?,
            None => return Err(Error::Shape(format!("slot {slot} out of range"))),
        };
        let last = up.rank();
        covariant_derivative(&up, gamma)?.contract(slot, last)
    }

    /// Schouten tensor `A = (Ric − R/(2(n−1)) g)/(n−2)`.
    pub fn schouten(&self) -> Result<&PointTensor> {
        cached(&self.schouten, || {
            let n = self.dim();
            self.need_dim(n >= 3, "the Schouten tensor")?;
            let ric = self.ricci()?;
            let r = self.scalar_curvature()?;
            let c = 1.0 / (2.0 * (n as f64 - 1.0));
            let rg = self.metric.mul_jet(&r.scale(c));
            Ok(ric.sub(&rg)?.scale(1.0 / (n as f64 - 2.0)))
        })
    }

    /// Endomorphism `a^i_j = g^{ik} A_kj`, variance `(Contra, Co)`.
    pub fn schouten_endomorphism(&self) -> Result<&PointTensor> {
        cached(&self.schouten_endo, || self.schouten()?.raise(0, self.inverse()?))
    }

    /// Weyl tensor `W = Rm − A⊙g`.
    pub fn weyl(&self) -> Result<&PointTensor> {
        cached(&self.weyl, || {
            let ag = kulkarni_nomizu(self.schouten()?, &self.metric)?;
            self.riemann()?.sub(&ag)
        })
    }

    /// `A_ij,k`.
    pub fn schouten_gradient(&self) -> Result<&PointTensor> {
        cached(&self.schouten_grad, || {
            self.need(3, "the covariant derivative of the Schouten tensor")?;
            covariant_derivative(self.schouten()?, self.christoffel()?)
        })
    }

    /// Cotton tensor `C_ijk = A_ij,k − A_ik,j`.
    pub fn cotton(&self) -> Result<&PointTensor> {
        cached(&self.cotton, || {
            let da = self.schouten_gradient()?;
            let swapped = da.permute(&[0, 2, 1]);
            da.sub(&swapped)
        })
    }

    /// Weyl divergence `∇^l W_lijk`, slots `(i, j, k)`.
    pub fn weyl_divergence(&self) -> Result<&PointTensor> {
        cached(&self.div_weyl, || {
            self.need(3, "the Weyl divergence")?;
            self.divergence(self.weyl()?, 0)
        })
    }

    /// Bach tensor `B_ij = (1/(n−3)) ∇^k∇^l W_likj + (1/(n−2)) R^{kl} W_likj`.
    pub fn bach(&self) -> Result<&PointTensor> {
        cached(&self.bach, || {
            let n = self.dim();
            self.need_dim(n >= 4, "the Bach tensor")?;
            self.need(4, "the Bach tensor")?;
            // ∇^l W_likj is the Weyl divergence with slots (i, k, j)
            let d = self.weyl_divergence()?;
            let dd = self.divergence(d, 1)?;
            let ginv = self.inverse()?;
            let ric_up = self.ricci()?.raise(0, ginv)?.raise(1, ginv)?;
            let w = self.weyl()?;
            let order = dd.order().min(ric_up.order()).min(w.order());
            let nf = n as f64;
            Ok(PointTensor::from_fn(n, &[Co, Co], |ix| {
                let (i, j) = (ix[0], ix[1]);
                let mut acc = dd.get(&[i, j]).truncate(order).scale(1.0 / (nf - 3.0));
                for k in 0..n {
                    for l in 0..n {
                        acc.mul_acc(ric_up.get(&[k, l]), w.get(&[l, i, k, j]), 1.0 / (nf - 2.0));
                    }
                }
                acc
            }))
        })
    }

    /// `σ_0 … σ_n` of the Schouten endomorphism, by the Faddeev–LeVerrier
    /// recursion over jets.
    pub fn sigmas(&self) -> Result<&[Jet]> {
        cached(&self.sigma, || {
            self.need(2, "sigma_k")?;
            let n = self.dim();
            let a = self.schouten_endomorphism()?;
            let order = a.order();
            let id = PointTensor::identity(n, order);
            let matmul = |x: &PointTensor, y: &PointTensor| {
                PointTensor::from_fn(n, &[Contra, Co], |ix| {
                    let mut acc = Jet::zero(n, order);
                    for p in 0..n {
                        acc.mul_acc(x.get(&[ix[0], p]), y.get(&[p, ix[1]]), 1.0);
                    }
                    acc
                })
            };
            let trace = |x: &PointTensor| {
                let mut acc = Jet::zero(n, order);
                for p in 0..n {
                    acc.add_scaled(x.get(&[p, p]), 1.0);
                }
                acc
            };
            // char poly det(λ − a) = Σ c_m λ^m with c_n = 1; σ_k = (−1)^k c_{n−k}
            let mut sig = vec![Jet::constant(n, order, 1.0)];
            let mut m = id.clone();
            let mut c_prev = Jet::constant(n, order, 1.0);
            for k in 1..=n {
                if k > 1 {
                    let am = matmul(a, &m);
                    m = am.add(&id.mul_jet(&c_prev))?;
                }
                let c = trace(&matmul(a, &m)).scale(-1.0 / k as f64);
                sig.push(if k % 2 == 0 { c.clone() } else { c.neg() });
                c_prev = c;
            }
            Ok(sig)
        })
        .map(Vec::as_slice)
    }

    /// `σ_k`, `0 ≤ k ≤ n`.
    pub fn sigma(&self, k: usize) -> Result<&Jet> {
        self.need_dim(k <= self.dim(), &format!("sigma_{k}"))?;
        Ok(&self.sigmas()?[k])
    }

    /// Newton tensor `T^(k)` as the endomorphism `T^j_i`, stored with
    /// variance `(Contra, Co)` and indexed `[j, i]`:
    /// `T^j_i = (1/k!) δ^{j1…jk j}_{i1…ik i} a^{i1}_{j1} ⋯ a^{ik}_{jk}`.
    pub fn newton_tensor(&self, k: usize) -> Result<&PointTensor> {
        let n = self.dim();
        self.need_dim(k < n, &format!("the Newton tensor T^({k})"))?;
        cached(&self.newton[k], || {
            self.need(2, "Newton tensors")?;
            let a = self.schouten_endomorphism()?;
            let order = a.order();
            if k == 0 {
                return Ok(PointTensor::identity(n, order));
            }
            let mut acc: Vec<Jet> = (0..n * n).map(|_| Jet::zero(n, order)).collect();
            let mut prod = Jet::zero(n, order);
            for_each_nonzero(n, k + 1, |up, lo, s| {
                prod.clone_from(a.get(&[lo[0], up[0]]));
                for m in 1..k {
                    prod = prod.mul(a.get(&[lo[m], up[m]]));
                }
                acc[up[k] * n + lo[k]].add_scaled(&prod, s as f64);
            });
            let norm = 1.0 / factorial(k);
            Ok(PointTensor::from_fn(n, &[Contra, Co], |ix| acc[ix[0] * n + ix[1]].scale(norm)))
        })
    }

    /// Gauss–Bonnet curvature
    /// `G_2r = δ^{j1…j2r}_{i1…i2r} R^{i1i2}_{j1j2} ⋯ R^{i2r−1 i2r}_{j2r−1 j2r}`.
    pub fn gauss_bonnet(&self, r: usize) -> Result<&Jet> {
        let n = self.dim();
        self.need_dim(2 * r <= n, &format!("G_{}", 2 * r))?;
        cached(&self.gauss_bonnet[r], || {
            self.need(2, "Gauss–Bonnet curvatures")?;
            let rm = self.riemann_raised()?;
            let order = rm.order();
            let mut acc = Jet::zero(n, order);
            if r == 0 {
                return Ok(acc.add_scalar(1.0));
            }
            let mut prod = Jet::zero(n, order);
            for_each_nonzero_paired(n, 0, r, |up, lo, s| {
                pair_product(rm, up, lo, 0, r, &mut prod);
                acc.add_scaled(&prod, s as f64);
            });
            Ok(acc.scale(4f64.powi(r as i32)))
        })
    }

    /// `P_r` as the endomorphism `(P_r)^j_i`, stored with variance
    /// `(Contra, Co)` and indexed `[j, i]`:
    /// `(P_r)^j_i = δ^{j j1…j2r}_{i i1…i2r} R^{i1i2}_{j1j2} ⋯`.
    pub fn p_tensor(&self, r: usize) -> Result<&PointTensor> {
        let n = self.dim();
        self.need_dim(2 * r < n, &format!("P_{r}"))?;
        cached(&self.p_tensor[r], || {
            self.need(2, "P_r tensors")?;
            let rm = self.riemann_raised()?;
            let order = rm.order();
            if r == 0 {
                return Ok(PointTensor::identity(n, order));
            }
            let mut acc: Vec<Jet> = (0..n * n).map(|_| Jet::zero(n, order)).collect();
            let mut prod = Jet::zero(n, order);
            for_each_nonzero_paired(n, 1, r, |up, lo, s| {
                pair_product(rm, up, lo, 1, r, &mut prod);
                acc[up[0] * n + lo[0]].add_scaled(&prod, s as f64);
            });
            let norm = 4f64.powi(r as i32);
            Ok(PointTensor::from_fn(n, &[Contra, Co], |ix| acc[ix[0] * n + ix[1]].scale(norm)))
        })
    }

    /// `v^(2k)` for `k ∈ {1, 2, 3}`.
    pub fn v2k(&self, k: usize) -> Result<Jet> {
        match k {
            1 => Ok(self.sigma(1)?.scale(-0.5)),
            2 => Ok(self.sigma(2)?.scale(0.25)),
            3 => self.v6().cloned(),
            _ => Err(Error::Dimension(format!("v^({}) is only available for k ≤ 3", 2 * k))),
        }
    }

    /// `v^(6) = −(1/8)[σ_3 + A^{ij}B_ij / (3(n−4))]`, defined for `n ≥ 5`.
    pub fn v6(&self) -> Result<&Jet> {
        cached(&self.v6, || {
            let n = self.dim();
            self.need_dim(n >= 5, "v^(6)")?;
            self.need(4, "v^(6)")?;
            let ab = self.schouten_bach_pairing()?;
            let s3 = self.sigma(3)?;
            let c = 1.0 / (3.0 * (n as f64 - 4.0));
            let mut v = ab.scale(c);
            v.add_scaled(s3, 1.0);
            Ok(v.scale(-0.125))
        })
    }

    /// `A^{ij} B_ij`.
    pub fn schouten_bach_pairing(&self) -> Result<Jet> {
        let n = self.dim();
        let b = self.bach()?;
        let a = self.schouten()?;
        let ginv = self.inverse()?;
        let a_up = a.raise(0, ginv)?.raise(1, ginv)?;
        let mut acc = Jet::zero(n, b.order().min(a_up.order()));
        for i in 0..n {
            for j in 0..n {
                acc.mul_acc(a_up.get(&[i, j]), b.get(&[i, j]), 1.0);
            }
        }
        Ok(acc)
    }

    /// The selected scalar as a jet.
    pub fn scalar(&self, which: Scalar) -> Result<Jet> {
        match which {
            Scalar::Curvature => self.scalar_curvature().cloned(),
            Scalar::Sigma(k) => self.sigma(k).cloned(),
            Scalar::GaussBonnet(r) => self.gauss_bonnet(r).cloned(),
            Scalar::V(k) => self.v2k(k),
        }
    }

    /// Coordinate gradient `∂_i Q` of a scalar quantity, one jet order lower.
    pub fn gradient(&self, which: Scalar) -> Result<PointTensor> {
        self.need(which.min_order() + 1, &format!("the gradient of {}", which.label()))?;
        let q = self.scalar(which)?;
        let n = self.dim();
        PointTensor::try_from_fn(n, &[Co], |ix| q.partial(ix[0]))
    }
}

/// `Π_q R^{lo_a lo_b}_{up_a up_b}` over the `pairs` index pairs after `lead`.
fn pair_product(rm: &PointTensor, up: &[usize], lo: &[usize], lead: usize, pairs: usize, out: &mut Jet) {
    let factor = |q: usize| {
        let a = lead + 2 * q;
        rm.get(&[lo[a], lo[a + 1], up[a], up[a + 1]])
    };
    out.clone_from(factor(0));
    for q in 1..pairs {
        *out = out.mul(factor(q));
    }
}
