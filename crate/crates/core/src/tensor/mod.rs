//! Dense tensors over the jet ring at a single point.

mod kronecker;

pub use kronecker::{for_each_nonzero, for_each_nonzero_paired, gen_kronecker};

use crate::error::{Error, Result};
use crate::expr::Jet;

/// Position of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    /// Lower index.
    Co,
    /// Upper index.
    Contra,
}

pub use Variance::{Co, Contra};

/// Multi-index array of jets with an explicit variance signature.
///
/// Components are stored row-major with slot 0 most significant. Every
/// component shares the tensor's dimension; orders may differ only
/// transiently and [`PointTensor::order`] reports the minimum.
#[derive(Debug, Clone)]
pub struct PointTensor {
    dim: usize,
    variance: Vec<Variance>,
    comps: Vec<Jet>,
}

/// Decode a row-major flat index into `out`.
#[inline]
pub(crate) fn decode(mut flat: usize, dim: usize, out: &mut [usize]) {
    for slot in (0..out.len()).rev() {
        out[slot] = flat % dim;
        flat /= dim;
    }
}

#[inline]
fn encode(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

impl PointTensor {
    pub fn from_fn(dim: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        Self::try_from_fn(dim, variance, |idx| Ok(f(idx))).unwrap()
    }

    pub fn try_from_fn(
        dim: usize,
        variance: &[Variance],
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Self> {
        let rank = variance.len();
        let count = dim.pow(rank as u32);
        let mut idx = vec![0; rank];
        let mut comps = Vec::with_capacity(count);
        for flat in 0..count {
            decode(flat, dim, &mut idx);
            let j = f(&idx)?;
            debug_assert_eq!(j.dim(), dim);
            comps.push(j);
        }
        Ok(PointTensor {
            dim,
            variance: variance.to_vec(),
            comps,
        })
    }

    pub fn scalar(j: Jet) -> Self {
        PointTensor {
            dim: j.dim(),
            variance: Vec::new(),
            comps: vec![j],
        }
    }

    pub fn zeros(dim: usize, variance: &[Variance], order: usize) -> Self {
        Self::from_fn(dim, variance, |_| Jet::zero(dim, order))
    }

    /// Identity endomorphism `δ^i_j`, stored with variance `(Contra, Co)`.
    pub fn identity(dim: usize, order: usize) -> Self {
        Self::from_fn(dim, &[Contra, Co], |ix| {
            Jet::constant(dim, order, if ix[0] == ix[1] { 1.0 } else { 0.0 })
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    /// Smallest jet order among the components.
    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        debug_assert_eq!(idx.len(), self.rank());
        &self.comps[encode(idx, self.dim)]
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    /// Scalar jet of a rank-0 tensor.
    pub fn as_scalar(&self) -> &Jet {
        assert_eq!(self.rank(), 0, "not a scalar");
        &self.comps[0]
    }

    /// Value parts of every component, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn map(&self, f: impl FnMut(&Jet) -> Jet) -> Self {
        PointTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(Error::Shape(format!(
                "{what}: {:?} (dim {}) vs {:?} (dim {})",
                self.variance, self.dim, other.variance, other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(PointTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(PointTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|j| j.scale(s))
    }

    /// Multiply every component by a scalar jet.
    pub fn mul_jet(&self, s: &Jet) -> Self {
        self.map(|j| j.mul(s))
    }

    /// Reorder slots: slot `s` of the result is slot `perm[s]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let variance: Vec<Variance> = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0; self.rank()];
        Self::from_fn(self.dim, &variance, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[p] = idx[s];
            }
            self.get(&src).clone()
        })
    }

    /// Trace over two slots of opposite variance.
    pub fn contract(&self, a: usize, b: usize) -> Result<Self> {
        let rank = self.rank();
        if a == b || a >= rank || b >= rank {
            return Err(Error::Shape(format!(
                "cannot contract slots {a} and {b} of a rank-{rank} tensor"
            )));
        }
        if self.variance[a] == self.variance[b] {
            return Err(Error::Variance(format!(
                "slots {a} and {b} are both {:?}; raise or lower one first",
                self.variance[a]
            )));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != lo && s != hi)
            .map(|(_, &v)| v)
            .collect();
        let order = self.order();
        let mut full = vec![0; rank];
        Ok(Self::from_fn(self.dim, &variance, |idx| {
            let mut k = 0;
            for (s, slot) in full.iter_mut().enumerate() {
                if s != lo && s != hi {
                    *slot = idx[k];
                    k += 1;
                }
            }
            let mut acc = Jet::zero(self.dim, order);
            for p in 0..self.dim {
                full[lo] = p;
                full[hi] = p;
                acc.add_scaled(self.get(&full), 1.0);
            }
            acc
        }))
    }

    /// Raise a covariant slot with the inverse metric `g^{ij}`.
    pub fn raise(&self, slot: usize, ginv: &PointTensor) -> Result<Self> {
        if ginv.variance != [Contra, Contra] {
            return Err(Error::Variance("raise needs g^{ij} with two upper slots".into()));
        }
        self.move_index(slot, Co, Contra, ginv)
    }

    /// Lower a contravariant slot with the metric `g_{ij}`.
    pub fn lower(&self, slot: usize, g: &PointTensor) -> Result<Self> {
        if g.variance != [Co, Co] {
            return Err(Error::Variance("lower needs g_{ij} with two lower slots".into()));
        }
        self.move_index(slot, Contra, Co, g)
    }

    fn move_index(&self, slot: usize, from: Variance, to: Variance, m: &PointTensor) -> Result<Self> {
        if slot >= self.rank() {
            return Err(Error::Shape(format!("slot {slot} out of range")));
        }
        if self.variance[slot] != from {
            return Err(Error::Variance(format!(
                "slot {slot} is {:?}, expected {from:?}",
                self.variance[slot]
            )));
        }
        let mut variance = self.variance.clone();
        variance[slot] = to;
        let order = self.order().min(m.order());
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.dim, &variance, |idx| {
            src.copy_from_slice(idx);
            let mut acc = Jet::zero(self.dim, order);
            for p in 0..self.dim {
                src[slot] = p;
                acc.mul_acc(m.get(&[idx[slot], p]), self.get(&src), 1.0);
            }
            acc
        }))
    }

    /// Largest absolute value part over all components.
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, j| m.max(j.value().abs()))
    }

    /// Largest absolute difference of value parts.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "compare")?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .fold(0.0_f64, |m, (a, b)| m.max((a.value() - b.value()).abs())))
    }
}

/// Kulkarni–Nomizu product of two symmetric covariant 2-tensors:
/// `(a⊙b)_ijkl = a_ik b_jl + a_jl b_ik − a_il b_jk − a_jk b_il`.
pub fn kulkarni_nomizu(a: &PointTensor, b: &PointTensor) -> Result<PointTensor> {
    for t in [a, b] {
        if t.variance != [Co, Co] {
            return Err(Error::Variance(
                "Kulkarni–Nomizu product takes covariant 2-tensors".into(),
            ));
        }
    }
    if a.dim != b.dim {
        return Err(Error::Shape("Kulkarni–Nomizu operands differ in dimension".into()));
    }
    let n = a.dim;
    let order = a.order().min(b.order());
    Ok(PointTensor::from_fn(n, &[Co, Co, Co, Co], |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = Jet::zero(n, order);
        acc.mul_acc(a.get(&[i, k]), b.get(&[j, l]), 1.0);
        acc.mul_acc(a.get(&[j, l]), b.get(&[i, k]), 1.0);
        acc.mul_acc(a.get(&[i, l]), b.get(&[j, k]), -1.0);
        acc.mul_acc(a.get(&[j, k]), b.get(&[i, l]), -1.0);
        acc
    }))
}

/// Levi-Civita covariant derivative. The new covariant slot is appended last,
/// so for `t = A_ij` the result is `A_ij,k`. The result loses one jet order.
///
/// `gamma` holds `Γ^k_ij` with variance `(Contra, Co, Co)`.
pub fn covariant_derivative(t: &PointTensor, gamma: &PointTensor) -> Result<PointTensor> {
    if gamma.variance != [Contra, Co, Co] {
        return Err(Error::Variance("Christoffel symbols must be Γ^k_ij".into()));
    }
    let order = t.order();
    if order == 0 {
        return Err(Error::OrderExhausted(format!(
            "covariant derivative of a rank-{} tensor with order-0 jets",
            t.rank()
        )));
    }
    let n = t.dim;
    let out_order = (order - 1).min(gamma.order());
    let rank = t.rank();
    // partials[flat * n + m] = ∂_m t[flat]
    let mut partials = Vec::with_capacity(t.comps.len() * n);
    for c in &t.comps {
        for m in 0..n {
            partials.push(c.partial(m)?);
        }
    }
    let mut variance = t.variance.clone();
    variance.push(Co);
    let mut src = vec![0; rank];
    Ok(PointTensor::from_fn(n, &variance, |idx| {
        let m = idx[rank];
        let base = &idx[..rank];
        let flat = encode(base, n);
        let mut acc = partials[flat * n + m].truncate(out_order);
        for s in 0..rank {
            src.copy_from_slice(base);
            let is = base[s];
            for p in 0..n {
                src[s] = p;
                match t.variance[s] {
                    Contra => acc.mul_acc(gamma.get(&[is, m, p]), t.get(&src), 1.0),
                    Co => acc.mul_acc(gamma.get(&[p, m, is]), t.get(&src), -1.0),
                }
            }
        }
        acc
    }))
}

fn metric_values(g: &PointTensor) -> Result<Vec<f64>> {
    if g.variance != [Co, Co] && g.variance != [Contra, Contra] {
        return Err(Error::Variance("metric must have two slots of equal variance".into()));
    }
    Ok(g.values())
}

/// Cholesky test on the value part; returns the determinant.
/// Cholesky test on the value part. The determinant is judged after Jacobi
/// scaling (`det g / Π g_ii`), so diagonal factors such as `sin²θ` near a
/// polar axis do not count as singular.
fn check_positive_definite(vals: &[f64], n: usize) -> Result<f64> {
    let mut l = vec![0.0; n * n];
    let mut det = 1.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = vals[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::SingularMetric(format!(
                        "value part is not positive definite (pivot {s:e} at row {i})"
                    )));
                }
                l[i * n + i] = s.sqrt();
                det *= s;
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let scaled = (0..n).fold(det, |d, i| d / vals[i * n + i]);
    if scaled <= 1e-13 {
        return Err(Error::SingularMetric(format!(
            "Jacobi-scaled determinant {scaled:e} is below 1e-13"
        )));
    }
    Ok(det)
}

/// Inverse metric `g^{ij}` computed by Gauss–Jordan elimination over jets,
/// so `g^{ik} g_kj = δ^i_j` holds at full jet order.
pub fn metric_inverse(g: &PointTensor) -> Result<PointTensor> {
    let n = g.dim;
    let vals = metric_values(g)?;
    check_positive_definite(&vals, n)?;
    let order = g.order();
    let mut a: Vec<Jet> = g.comps.clone();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(n, order, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| {
                a[x * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[y * n + col].value().abs())
            })
            .unwrap();
        if pivot_row != col {
            for k in 0..n {
                a.swap(pivot_row * n + k, col * n + k);
                inv.swap(pivot_row * n + k, col * n + k);
            }
        }
        let p = a[col * n + col]
            .recip()
            .map_err(|e| Error::SingularMetric(e.to_string()))?;
        for k in 0..n {
            a[col * n + k] = a[col * n + k].mul(&p);
            inv[col * n + k] = inv[col * n + k].mul(&p);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col].clone();
            for k in 0..n {
                let (ak, ik) = (a[col * n + k].clone(), inv[col * n + k].clone());
                a[row * n + k].mul_acc(&f, &ak, -1.0);
                inv[row * n + k].mul_acc(&f, &ik, -1.0);
            }
        }
    }
    let variance = match g.variance[0] {
        Co => [Contra, Contra],
        Contra => [Co, Co],
    };
    Ok(PointTensor::from_fn(n, &variance, |ix| {
        let (i, j) = (ix[0], ix[1]);
        inv[i * n + j].add(&inv[j * n + i]).scale(0.5)
    }))
}

/// Determinant of a covariant metric as a jet (LU elimination over jets).
pub fn metric_determinant(g: &PointTensor) -> Result<Jet> {
    let n = g.dim;
    check_positive_definite(&metric_values(g)?, n)?;
    let mut a: Vec<Jet> = g.comps.clone();
    let mut det = Jet::constant(n, g.order(), 1.0);
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| {
                a[x * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[y * n + col].value().abs())
            })
            .unwrap();
        if pivot_row != col {
            sign = -sign;
            for k in 0..n {
                a.swap(pivot_row * n + k, col * n + k);
            }
        }
        let pivot = a[col * n + col].clone();
        let p = pivot.recip().map_err(|e| Error::SingularMetric(e.to_string()))?;
        det = det.mul(&pivot);
        for row in col + 1..n {
            let f = a[row * n + col].mul(&p);
            for k in col..n {
                let ak = a[col * n + k].clone();
                a[row * n + k].mul_acc(&f, &ak, -1.0);
            }
        }
    }
    Ok(det.scale(sign))
}
