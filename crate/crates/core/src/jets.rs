//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] of order `K` in `d` variables stores the coefficients `c_α` of
//! `Σ c_α (x − p)^α` for all multi-indices with `|α| ≤ K`, densely, in a
//! graded-lexicographic layout. Lower orders are a prefix of higher ones, so
//! truncation is slicing and jets of different orders interoperate.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

pub mod series;

/// Constant terms smaller than this are singular for reciprocal-type series.
pub const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("incompatible jets: dim {0}/order {1} vs dim {2}/order {3}")]
    Incompatible(usize, usize, usize, usize),
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
    #[error("multi-index has length {got}, expected {expected}")]
    BadIndex { got: usize, expected: usize },
    #[error("{function} is singular at constant term {value}")]
    Singular { function: &'static str, value: f64 },
    #[error("cannot differentiate a jet of order 0")]
    Exhausted,
}

/// Monomial layout and the convolution tables shared by all jets of one dimension.
pub struct Layout {
    dim: usize,
    max_order: usize,
    exps: Vec<u8>,
    /// `offsets[k]` = number of monomials of degree < k.
    offsets: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    mul_i: Vec<u32>,
    mul_j: Vec<u32>,
    mul_k: Vec<u32>,
    /// number of product triples whose output degree is ≤ k.
    mul_count: Vec<usize>,
    /// per variable: (src, dst, factor) for ∂_v, sorted by src.
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layout(dim={}, max_order={})", self.dim, self.max_order)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of monomials in `dim` variables with total degree ≤ `order`.
pub fn coefficient_count(dim: usize, order: usize) -> usize {
    binomial(dim + order, dim)
}

fn compositions(dim: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<u8>) {
    if prefix.len() + 1 == dim {
        prefix.push(degree as u8);
        out.extend_from_slice(prefix);
        prefix.pop();
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first as u8);
        compositions(dim, degree - first, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(dim: usize, max_order: usize) -> Layout {
        assert!(dim >= 1, "jets need at least one variable");
        let mut exps = Vec::new();
        let mut offsets = vec![0usize];
        for k in 0..=max_order {
            compositions(dim, k, &mut Vec::with_capacity(dim), &mut exps);
            offsets.push(exps.len() / dim);
        }
        let n = exps.len() / dim;
        let mono = |i: usize| &exps[i * dim..(i + 1) * dim];
        let mut index = HashMap::with_capacity(n);
        for i in 0..n {
            index.insert(mono(i).to_vec(), i);
        }

        let (mut mul_i, mut mul_j, mut mul_k) = (Vec::new(), Vec::new(), Vec::new());
        let mut mul_count = Vec::with_capacity(max_order + 1);
        let mut diff = vec![0u8; dim];
        for k in 0..n {
            let a = mono(k);
            let deg: usize = a.iter().map(|&e| e as usize).sum();
            for i in 0..offsets[deg + 1] {
                let b = mono(i);
                if b.iter().zip(a).all(|(x, y)| x <= y) {
                    for v in 0..dim {
                        diff[v] = a[v] - b[v];
                    }
                    mul_i.push(i as u32);
                    mul_j.push(index[&diff] as u32);
                    mul_k.push(k as u32);
                }
            }
            if k + 1 == offsets[deg + 1] {
                mul_count.push(mul_i.len());
            }
        }

        let mut deriv = vec![Vec::new(); dim];
        for (v, table) in deriv.iter_mut().enumerate() {
            for src in 0..n {
                let a = mono(src);
                if a[v] > 0 {
                    let mut lower = a.to_vec();
                    lower[v] -= 1;
                    table.push((src as u32, index[&lower] as u32, a[v] as f64));
                }
            }
        }

        Layout { dim, max_order, exps, offsets, index, mul_i, mul_j, mul_k, mul_count, deriv }
    }

    /// A shared layout for `dim` variables covering at least `order`.
    pub fn get(dim: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(l) = guard.get(&dim) {
            if l.max_order >= order {
                return l.clone();
            }
        }
        let l = Arc::new(Layout::build(dim, order));
        guard.insert(dim, l.clone());
        l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self, order: usize) -> usize {
        self.offsets[order + 1]
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.exps[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Index range of monomials of exactly degree `k`.
    pub fn degree_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }
}

/// Truncated Taylor polynomial of a scalar function about a point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim())
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Jet) -> bool {
        self.dim() == other.dim() && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(dim: usize, order: usize) -> Jet {
        let layout = Layout::get(dim, order);
        let n = layout.len(order);
        Jet { layout, order, coeffs: vec![0.0; n] }
    }

    pub fn constant(dim: usize, order: usize, c: f64) -> Jet {
        let mut j = Jet::zero(dim, order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_var` expanded about a point whose `var`-th coordinate is `at`.
    pub fn variable(dim: usize, order: usize, var: usize, at: f64) -> Jet {
        assert!(var < dim);
        let mut j = Jet::constant(dim, order, at);
        if order >= 1 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// Build from coefficients listed in layout order (missing tail is zero).
    pub fn from_coeffs(dim: usize, order: usize, coeffs: &[f64]) -> Jet {
        let mut j = Jet::zero(dim, order);
        let n = j.coeffs.len().min(coeffs.len());
        j.coeffs[..n].copy_from_slice(&coeffs[..n]);
        j
    }

    /// Build from (multi-index, coefficient) pairs.
    pub fn from_terms(dim: usize, order: usize, terms: &[(Vec<u8>, f64)]) -> Result<Jet, JetError> {
        let mut j = Jet::zero(dim, order);
        for (alpha, c) in terms {
            let i = j.slot(alpha)?;
            j.coeffs[i] += c;
        }
        Ok(j)
    }

    pub fn like(&self, c: f64) -> Jet {
        Jet::constant(self.dim(), self.order, c)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    fn slot(&self, alpha: &[u8]) -> Result<usize, JetError> {
        if alpha.len() != self.dim() {
            return Err(JetError::BadIndex { got: alpha.len(), expected: self.dim() });
        }
        let degree: usize = alpha.iter().map(|&a| a as usize).sum();
        if degree > self.order {
            return Err(JetError::OrderExceeded { degree, order: self.order });
        }
        Ok(self.layout.position(alpha).expect("layout covers order"))
    }

    /// Raw Taylor coefficient `c_α`.
    pub fn coefficient(&self, alpha: &[u8]) -> Result<f64, JetError> {
        Ok(self.coeffs[self.slot(alpha)?])
    }

    /// Partial derivative value `(∂^α f)(p) = α!·c_α`.
    pub fn derivative(&self, alpha: &[u8]) -> Result<f64, JetError> {
        let c = self.coefficient(alpha)?;
        let fact: f64 = alpha.iter().map(|&a| (1..=a as u64).product::<u64>() as f64).product();
        Ok(c * fact)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet { layout: self.layout.clone(), order, coeffs: self.coeffs[..self.layout.len(order)].to_vec() }
    }

    fn wider(&self, other: &Jet) -> Arc<Layout> {
        if self.layout.max_order >= other.layout.max_order {
            self.layout.clone()
        } else {
            other.layout.clone()
        }
    }

    fn check(&self, other: &Jet) -> Result<(), JetError> {
        if self.dim() != other.dim() || self.order != other.order {
            return Err(JetError::Incompatible(self.dim(), self.order, other.dim(), other.order));
        }
        Ok(())
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let coeffs = self.coeffs[..n].iter().zip(&other.coeffs[..n]).map(|(&a, &b)| f(a, b)).collect();
        Jet { layout: self.wider(other), order, coeffs }
    }

    /// Product truncated to the smaller of the two orders.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let order = self.order.min(other.order);
        if self.is_constant() {
            return other.truncate(order).scale(self.coeffs[0]);
        }
        if other.is_constant() {
            return self.truncate(order).scale(other.coeffs[0]);
        }
        let layout = self.wider(other);
        let n = layout.len(order);
        let mut out = vec![0.0; n];
        let count = layout.mul_count[order];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for t in 0..count {
            let (i, j, k) = (layout.mul_i[t] as usize, layout.mul_j[t] as usize, layout.mul_k[t] as usize);
            out[k] += a[i] * b[j];
        }
        Jet { layout, order, coeffs: out }
    }

    /// `self += c·a·b` in place; the result order is the minimum of all three.
    pub fn add_mul(&mut self, c: f64, a: &Jet, b: &Jet) {
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        if a.is_constant() {
            let k = c * a.coeffs[0];
            for (x, y) in self.coeffs.iter_mut().zip(&b.coeffs) {
                *x += k * y;
            }
            return;
        }
        if b.is_constant() {
            let k = c * b.coeffs[0];
            for (x, y) in self.coeffs.iter_mut().zip(&a.coeffs) {
                *x += k * y;
            }
            return;
        }
        let layout = if a.layout.max_order >= order { a.layout.clone() } else { b.layout.clone() };
        let count = layout.mul_count[order];
        let (ac, bc, out) = (&a.coeffs, &b.coeffs, &mut self.coeffs);
        for t in 0..count {
            let (i, j, k) = (layout.mul_i[t] as usize, layout.mul_j[t] as usize, layout.mul_k[t] as usize);
            out[k] += c * ac[i] * bc[j];
        }
    }

    /// Product that insists on equal dimension and order.
    /// Product with `self` treated as vanishing at the point (its constant term is
    /// dropped), which makes the result exact to one order beyond `other`.
    pub fn mul_vanishing(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order + 1);
        let mut a = self.truncate(order);
        a.coeffs[0] = 0.0;
        let b = Jet::from_coeffs(self.dim(), order, &other.coeffs);
        a.mul_jet(&b)
    }

    pub fn mul_checked(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        Ok(self.mul_jet(other))
    }

    pub fn add_checked(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet { layout: self.layout.clone(), order: self.order, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += c;
        j
    }

    /// `self += c·other` in place, truncating to the smaller order.
    pub fn axpy(&mut self, c: f64, other: &Jet) {
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += c * y;
        }
    }

    /// `∂_var`, an order `K−1` jet.
    pub fn partial(&self, var: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::Exhausted);
        }
        assert!(var < self.dim());
        let order = self.order - 1;
        let n = self.layout.len(order);
        let mut out = vec![0.0; n];
        let src_end = self.layout.len(self.order) as u32;
        for &(src, dst, f) in &self.layout.deriv[var] {
            if src >= src_end {
                break;
            }
            out[dst as usize] += f * self.coeffs[src as usize];
        }
        Ok(Jet { layout: self.layout.clone(), order, coeffs: out })
    }

    /// `f(self)` where `f` is given by its Taylor coefficients about `self.value()`.
    pub fn compose(&self, f: &[f64]) -> Jet {
        let mut dx = self.clone();
        dx.coeffs[0] = 0.0;
        let top = f.len().min(self.order + 1);
        let mut acc = self.like(f.get(top.wrapping_sub(1)).copied().unwrap_or(0.0));
        for m in (0..top.saturating_sub(1)).rev() {
            acc = acc.mul_jet(&dx).add_scalar(f[m]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        Ok(self.compose(&series::powf_coeffs(self.value(), -1.0, self.order, "reciprocal")?))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        Ok(self.compose(&series::powf_coeffs(self.value(), 0.5, self.order, "sqrt")?))
    }

    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        Ok(self.compose(&series::powf_coeffs(self.value(), r, self.order, "pow")?))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&series::exp_coeffs(self.value(), self.order))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        Ok(self.compose(&series::ln_coeffs(self.value(), self.order)?))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&series::sin_coeffs(self.value(), self.order))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&series::cos_coeffs(self.value(), self.order))
    }

    pub fn tanh(&self) -> Jet {
        self.compose(&series::tanh_coeffs(self.value(), self.order))
    }

    /// Integer power by repeated squaring; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i64) -> Result<Jet, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = self.like(1.0);
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    /// Univariate Taylor coefficients of `t ↦ f(p + t·v)`.
    pub fn along_line(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        (0..=self.order)
            .map(|k| {
                self.layout
                    .degree_range(k)
                    .map(|i| {
                        let m = self.layout.monomial(i);
                        self.coeffs[i] * m.iter().zip(v).map(|(&e, &x)| x.powi(e as i32)).product::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// `f(p + δ(y))` as a jet in the new variables `y`.
    ///
    /// `offsets[a]` is the jet of `δ_a(y) = φ_a(y) − p_a`; its constant term may be
    /// nonzero (a small shift of the expansion point).
    pub fn substitute(&self, offsets: &[Jet]) -> Jet {
        assert_eq!(offsets.len(), self.dim());
        let new_dim = offsets[0].dim();
        let order = offsets.iter().map(|j| j.order).min().unwrap_or(0);
        let top = self.order;
        let powers: Vec<Vec<Jet>> = offsets
            .iter()
            .map(|o| {
                let o = o.truncate(order);
                let mut p = vec![Jet::constant(new_dim, order, 1.0)];
                for e in 1..=top {
                    let next = p[e - 1].mul_jet(&o);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Jet::zero(new_dim, order);
        for i in 0..self.layout.len(top) {
            let c = self.coeffs[i];
            if c == 0.0 {
                continue;
            }
            let m = self.layout.monomial(i);
            let mut term: Option<Jet> = None;
            for (a, &e) in m.iter().enumerate() {
                if e > 0 {
                    let p = &powers[a][e as usize];
                    term = Some(match term {
                        None => p.clone(),
                        Some(t) => t.mul_jet(p),
                    });
                }
            }
            match term {
                None => out.coeffs[0] += c,
                Some(t) => out.axpy(c, &t),
            }
        }
        out
    }

    /// Re-expand about a shifted point: coefficients of `f(p + δ + y)` in `y`.
    pub fn shift(&self, delta: &[f64]) -> Jet {
        let dim = self.dim();
        let offsets: Vec<Jet> = (0..dim).map(|a| Jet::variable(dim, self.order, a, delta[a])).collect();
        self.substitute(&offsets)
    }

    /// Evaluate the polynomial at offset `y` from the expansion point.
    pub fn eval_offset(&self, y: &[f64]) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let m = self.layout.monomial(i);
                self.coeffs[i] * m.iter().zip(y).map(|(&e, &x)| x.powi(e as i32)).product::<f64>()
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_product() {
        let x = Jet::variable(2, 2, 0, 0.0);
        let y = Jet::variable(2, 2, 1, 0.0);
        let xy = &x * &y;
        assert_eq!(xy.coefficient(&[1, 1]).unwrap(), 1.0);
        assert_eq!(xy.coeffs().iter().filter(|&&c| c != 0.0).count(), 1);
    }

    #[test]
    fn checked_mul_rejects_mismatch() {
        let a = Jet::constant(2, 2, 1.0);
        let b = Jet::constant(2, 3, 1.0);
        assert!(matches!(a.mul_checked(&b), Err(JetError::Incompatible(..))));
        let c = Jet::constant(3, 2, 1.0);
        assert!(a.mul_checked(&c).is_err());
    }

    #[test]
    fn exp_series() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let e = x.exp();
        assert_eq!(e.coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0]);
    }

    #[test]
    fn geometric_series() {
        let a = Jet::variable(1, 2, 0, 0.0).add_scalar(1.0);
        let r = a.recip().unwrap();
        for (c, e) in r.coeffs().iter().zip([1.0, -1.0, 1.0]) {
            assert!((c - e).abs() < 1e-15);
        }
        assert!(matches!(Jet::variable(1, 2, 0, 0.0).recip(), Err(JetError::Singular { .. })));
    }

    #[test]
    fn coefficient_and_derivative() {
        let x = Jet::variable(2, 3, 0, 0.0);
        let y = Jet::variable(2, 3, 1, 0.0);
        let f = &(&x * &x) * &y;
        assert_eq!(f.derivative(&[2, 1]).unwrap(), 2.0);
        assert!(matches!(f.coefficient(&[2, 2]), Err(JetError::OrderExceeded { .. })));
        let g = f.add_scalar(3.0);
        assert_eq!(g.derivative(&[0, 0]).unwrap(), 3.0);
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::variable(2, 3, 0, 1.0);
        let f = x.powi(3).unwrap();
        let df = f.partial(0).unwrap();
        assert_eq!(df.order(), 2);
        assert!((df.value() - 3.0).abs() < 1e-15);
        assert!(Jet::constant(2, 0, 1.0).partial(0).is_err());
    }

    #[test]
    fn layout_prefix() {
        let l = Layout::get(3, 4);
        assert_eq!(l.len(0), 1);
        assert_eq!(l.len(1), 4);
        assert_eq!(l.len(4), coefficient_count(3, 4));
        assert_eq!(coefficient_count(6, 5), 462);
    }

    #[test]
    fn line_restriction() {
        let x = Jet::variable(2, 3, 0, 0.0);
        let y = Jet::variable(2, 3, 1, 0.0);
        let f = &x * &y;
        let c = f.along_line(&[2.0, 3.0]);
        assert_eq!(c, vec![0.0, 0.0, 6.0, 0.0]);
    }

    #[test]
    fn substitution_matches_direct() {
        // f(x, y) = x^2 y about (1, 2), φ(t) = (1 + t, 2 + t^2)
        let x = Jet::variable(2, 4, 0, 1.0);
        let y = Jet::variable(2, 4, 1, 2.0);
        let f = &(&x * &x) * &y;
        let t = Jet::variable(1, 4, 0, 0.0);
        let phi = vec![t.clone(), &t * &t];
        let g = f.substitute(&phi);
        // (1+t)^2 (2+t^2) = 2 + 4t + 3t^2 + 2t^3 + t^4
        for (c, e) in g.coeffs().iter().zip([2.0, 4.0, 3.0, 2.0, 1.0]) {
            assert!((c - e).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_reexpands() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let f = x.powi(3).unwrap();
        let g = f.shift(&[1.0]);
        for (c, e) in g.coeffs().iter().zip([1.0, 3.0, 3.0, 1.0]) {
            assert!((c - e).abs() < 1e-13);
        }
    }
}
