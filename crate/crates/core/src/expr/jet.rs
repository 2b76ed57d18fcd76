//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] of dimension `n` and order `K` stores the Taylor-normalized
//! coefficients `∂^α f(p) / α!` for every multi-index `|α| ≤ K`. Coefficients
//! are laid out in graded lexicographic order: by total degree first, then
//! lexicographically descending in the exponent vector. Because the layout is
//! graded, the coefficients of a lower-order truncation are a prefix of the
//! full coefficient vector, which is what lets operands of different orders
//! combine without copying.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest number of variables a jet may carry.
pub const MAX_DIM: usize = 8;
/// Largest truncation order a jet may carry.
pub const MAX_ORDER: usize = 8;

/// Index tables shared by every jet of one `(dim, order)`.
pub struct Layout {
    dim: usize,
    order: usize,
    exponents: Vec<u8>,
    degree_start: Vec<usize>,
    /// `(out, lhs, rhs)` triples of the truncated Cauchy product, grouped by `out`.
    mul: Vec<[u32; 3]>,
    /// `shift[var * lower + k]` is the index of `α_k + e_var`, where `lower` is
    /// the coefficient count of order `order - 1`.
    shift: Vec<u32>,
    index: HashMap<Vec<u8>, usize>,
}

impl Layout {
    fn build(dim: usize, order: usize) -> Layout {
        let mut exponents = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        let mut scratch = vec![0u8; dim];
        for degree in 0..=order {
            degree_start.push(exponents.len() / dim);
            push_degree(&mut exponents, &mut scratch, 0, degree, dim);
        }
        let count = binomial(dim + order, order);
        debug_assert_eq!(exponents.len(), count * dim);
        degree_start.push(count);

        let mut index = HashMap::with_capacity(count);
        for k in 0..count {
            index.insert(exponents[k * dim..(k + 1) * dim].to_vec(), k);
        }

        let degree_of = |k: usize| -> usize {
            exponents[k * dim..(k + 1) * dim]
                .iter()
                .map(|&e| e as usize)
                .sum()
        };

        let mut mul = Vec::new();
        let mut sum = vec![0u8; dim];
        for out in 0..count {
            let target = &exponents[out * dim..(out + 1) * dim];
            let d = degree_of(out);
            // lhs ranges over the indices of degree ≤ d whose exponents fit under target
            for lhs in 0..degree_start[d + 1] {
                let a = &exponents[lhs * dim..(lhs + 1) * dim];
                if a.iter().zip(target).all(|(x, y)| x <= y) {
                    for v in 0..dim {
                        sum[v] = target[v] - a[v];
                    }
                    let rhs = index[&sum];
                    mul.push([out as u32, lhs as u32, rhs as u32]);
                }
            }
        }

        let lower = if order == 0 {
            0
        } else {
            binomial(dim + order - 1, order - 1)
        };
        let mut shift = Vec::with_capacity(dim * lower);
        for var in 0..dim {
            for k in 0..lower {
                let mut e = exponents[k * dim..(k + 1) * dim].to_vec();
                e[var] += 1;
                shift.push(index[&e] as u32);
            }
        }

        Layout {
            dim,
            order,
            exponents,
            degree_start,
            mul,
            shift,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients, `C(dim + order, order)`.
    pub fn len(&self) -> usize {
        *self.degree_start.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exponent vector of the `k`-th coefficient.
    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exponents[k * self.dim..(k + 1) * self.dim]
    }

    /// Position of a multi-index in the layout, if `|α| ≤ order`.
    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dim || alpha.iter().sum::<usize>() > self.order {
            return None;
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        self.index.get(&key).copied()
    }

    /// Half-open range of coefficient positions having total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

fn push_degree(out: &mut Vec<u8>, scratch: &mut [u8], var: usize, remaining: usize, dim: usize) {
    if var == dim - 1 {
        scratch[var] = remaining as u8;
        out.extend_from_slice(scratch);
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[var] = e as u8;
        push_degree(out, scratch, var + 1, remaining - e, dim);
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

static LAYOUTS: [[OnceLock<Layout>; MAX_ORDER + 1]; MAX_DIM + 1] =
    [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_DIM + 1];

/// Shared layout for `(dim, order)`; built on first use.
pub fn layout(dim: usize, order: usize) -> &'static Layout {
    assert!((1..=MAX_DIM).contains(&dim), "jet dimension {dim} outside 1..={MAX_DIM}");
    assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
    LAYOUTS[dim][order].get_or_init(|| Layout::build(dim, order))
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(dim: usize, order: usize) -> Jet {
        let layout = layout(dim, order);
        Jet {
            layout,
            coeffs: vec![0.0; layout.len()],
        }
    }

    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let mut j = Jet::zero(dim, order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded at a point whose `var`-th
    /// coordinate is `value`.
    pub fn variable(dim: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < dim);
        let mut j = Jet::constant(dim, order, value);
        if order > 0 {
            // degree-1 block is ordered e_0, e_1, …
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        let layout = layout(dim, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Shape(format!(
                "jet of dim {dim} order {order} needs {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `∂^α f / α!`; zero beyond the truncation order.
    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        self.layout.position(alpha).map_or(0.0, |k| self.coeffs[k])
    }

    /// Partial derivative value `∂^α f` at the base point.
    pub fn derivative(&self, alpha: &[usize]) -> f64 {
        let fact: f64 = alpha.iter().map(|&a| factorial(a)).product();
        self.coeff(alpha) * fact
    }

    /// First partial derivatives at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        if self.order() == 0 {
            return vec![0.0; self.dim()];
        }
        self.coeffs[1..1 + self.dim()].to_vec()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.dim(), order);
        Jet {
            layout,
            coeffs: self.coeffs[..layout.len()].to_vec(),
        }
    }

    /// `∂f/∂x_var` as a jet one order lower.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        let order = self.order();
        if order == 0 {
            return Err(Error::OrderExhausted(format!(
                "cannot differentiate an order-0 jet along x{var}"
            )));
        }
        assert!(var < self.dim());
        let lower = layout(self.dim(), order - 1);
        let n = lower.len();
        let shift = &self.layout.shift[var * n..(var + 1) * n];
        let coeffs = (0..n)
            .map(|k| {
                let e = lower.exponent(k)[var] as f64 + 1.0;
                e * self.coeffs[shift[k] as usize]
            })
            .collect();
        Ok(Jet {
            layout: lower,
            coeffs,
        })
    }

    fn common(&self, other: &Jet) -> &'static Layout {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        if self.order() <= other.order() {
            self.layout
        } else {
            other.layout
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let layout = self.common(other);
        let coeffs = (0..layout.len())
            .map(|k| self.coeffs[k] + other.coeffs[k])
            .collect();
        Jet { layout, coeffs }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let layout = self.common(other);
        let coeffs = (0..layout.len())
            .map(|k| self.coeffs[k] - other.coeffs[k])
            .collect();
        Jet { layout, coeffs }
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet) -> Jet {
        let layout = self.common(other);
        let mut out = Jet {
            layout,
            coeffs: vec![0.0; layout.len()],
        };
        out.mul_acc(self, other, 1.0);
        out
    }

    /// `self += s · a · b`, truncated at `self`'s order, which must not exceed
    /// the order of either factor.
    pub fn mul_acc(&mut self, a: &Jet, b: &Jet, s: f64) {
        assert!(self.order() <= a.order() && self.order() <= b.order());
        assert!(self.dim() == a.dim() && self.dim() == b.dim());
        let (x, y) = (&a.coeffs, &b.coeffs);
        let out = &mut self.coeffs;
        if s == 1.0 {
            for &[o, i, j] in &self.layout.mul {
                out[o as usize] += x[i as usize] * y[j as usize];
            }
        } else {
            for &[o, i, j] in &self.layout.mul {
                out[o as usize] += s * x[i as usize] * y[j as usize];
            }
        }
    }

    /// `self += s · a`, truncated at `self`'s order.
    pub fn add_scaled(&mut self, a: &Jet, s: f64) {
        assert!(self.order() <= a.order() && self.dim() == a.dim());
        for (c, x) in self.coeffs.iter_mut().zip(&a.coeffs) {
            *c += s * x;
        }
    }

    /// Evaluate `Σ_k taylor[k] · (self − value)^k`, the composition of a
    /// univariate function (given by its Taylor coefficients at this jet's
    /// value) with this jet.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let order = self.order();
        debug_assert_eq!(taylor.len(), order + 1);
        let mut hat = self.clone();
        hat.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.dim(), order, taylor[order]);
        for k in (0..order).rev() {
            acc = acc.mul(&hat);
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let u = self.value();
        if u == 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("division by a jet with value {u}")));
        }
        let inv = 1.0 / u;
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut c = inv;
        for _ in 0..=self.order() {
            taylor.push(c);
            c *= -inv;
        }
        Ok(self.compose(&taylor))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let taylor: Vec<f64> = (0..=self.order())
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&taylor)
    }

    pub fn tan(&self) -> Result<Jet> {
        let c = self.cos();
        if c.value().abs() < 1e-300 {
            return Err(Error::Domain(format!(
                "tan evaluated at a pole (argument {})",
                self.value()
            )));
        }
        self.sin().div(&c)
    }

    pub fn ln(&self) -> Result<Jet> {
        let u = self.value();
        if u <= 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("log of non-positive value {u}")));
        }
        let mut taylor = vec![u.ln()];
        let mut p = 1.0;
        for k in 1..=self.order() {
            p /= u;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(sign * p / k as f64);
        }
        Ok(self.compose(&taylor))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    /// Real power `self^p`.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        let u = self.value();
        if u < 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!(
                "non-integer power {p} of negative value {u}"
            )));
        }
        if u == 0.0 {
            if self.order() == 0 && p > 0.0 {
                return Ok(Jet::zero(self.dim(), 0));
            }
            return Err(Error::Domain(format!(
                "power {p} is not differentiable at 0"
            )));
        }
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut c = u.powf(p);
        taylor.push(c);
        for k in 1..=self.order() {
            c *= (p - (k as f64 - 1.0)) / (k as f64 * u);
            taylor.push(c);
        }
        Ok(self.compose(&taylor))
    }

    /// Integer power by repeated squaring; negative exponents go through `recip`.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(self.dim(), self.order(), 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn layout_counts_and_grading() {
        for dim in 1..=6 {
            for order in 0..=5 {
                let l = layout(dim, order);
                assert_eq!(l.len(), binomial(dim + order, order));
                for d in 0..=order {
                    for k in l.degree_range(d) {
                        let s: usize = l.exponent(k).iter().map(|&e| e as usize).sum();
                        assert_eq!(s, d);
                    }
                }
            }
        }
        let l = layout(2, 2);
        let exps: Vec<&[u8]> = (0..l.len()).map(|k| l.exponent(k)).collect();
        assert_eq!(
            exps,
            vec![&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]
        );
    }

    #[test]
    fn truncation_is_a_prefix() {
        let l5 = layout(3, 5);
        let l2 = layout(3, 2);
        for k in 0..l2.len() {
            assert_eq!(l2.exponent(k), l5.exponent(k));
        }
    }

    #[test]
    fn product_rule_example() {
        let x = Jet::variable(2, 2, 0, 1.0);
        let y = Jet::variable(2, 2, 1, 1.0);
        let p = x.mul(&y);
        assert_eq!(p.value(), 1.0);
        assert_eq!(p.gradient(), vec![1.0, 1.0]);
        assert_eq!(p.coeff(&[1, 1]), 1.0);
        assert_eq!(p.coeff(&[2, 0]), 0.0);
        assert_eq!(p.coeff(&[0, 2]), 0.0);
    }

    #[test]
    fn geometric_series() {
        let one = Jet::constant(1, 3, 1.0);
        let d = one.add(&Jet::variable(1, 3, 0, 0.0));
        let q = one.div(&d).unwrap();
        assert_eq!(q.coeffs(), &[1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn exp_of_sum() {
        let s = Jet::variable(2, 2, 0, 0.0).add(&Jet::variable(2, 2, 1, 0.0));
        let e = s.exp();
        assert!(close(e.value(), 1.0, 1e-15));
        assert_eq!(e.gradient(), vec![1.0, 1.0]);
        assert!(close(e.coeff(&[2, 0]), 0.5, 1e-15));
        assert!(close(e.coeff(&[0, 2]), 0.5, 1e-15));
        assert!(close(e.coeff(&[1, 1]), 1.0, 1e-15));
    }

    #[test]
    fn partial_lowers_order() {
        // f = x^2 y at (2, 3): ∂x f = 2xy
        let x = Jet::variable(2, 3, 0, 2.0);
        let y = Jet::variable(2, 3, 1, 3.0);
        let f = x.mul(&x).mul(&y);
        let fx = f.partial(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert!(close(fx.value(), 12.0, 1e-14));
        assert!(close(fx.derivative(&[1, 0]), 6.0, 1e-14));
        assert!(close(fx.derivative(&[0, 1]), 4.0, 1e-14));
        assert!(close(fx.derivative(&[1, 1]), 2.0, 1e-14));
        let c = Jet::constant(2, 0, 1.0);
        assert!(matches!(c.partial(0), Err(Error::OrderExhausted(_))));
    }

    #[test]
    fn domain_errors() {
        let z = Jet::constant(1, 2, 0.0);
        assert!(matches!(z.recip(), Err(Error::Domain(_))));
        assert!(matches!(z.ln(), Err(Error::Domain(_))));
        assert!(matches!(z.sqrt(), Err(Error::Domain(_))));
        let neg = Jet::constant(1, 2, -1.0);
        assert!(matches!(neg.sqrt(), Err(Error::Domain(_))));
        assert!(neg.powi(3).is_ok());
    }

    #[test]
    fn mixed_orders_truncate_to_the_lower() {
        let a = Jet::variable(2, 4, 0, 0.5);
        let b = Jet::variable(2, 2, 1, 0.25);
        let p = a.mul(&b);
        assert_eq!(p.order(), 2);
        assert!(close(p.coeff(&[1, 1]), 1.0, 1e-15));
    }
}
