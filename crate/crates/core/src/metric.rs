//! Metric sources: closed-form metric expressions and derived metrics
//! (conformal rescalings, perturbations) producing component jets at a point.

use crate::error::{Error, Result};
use crate::expr::{Expr, Expression, ParseError};
use crate::jets::Jet;
use crate::tensor::{Field, MetricAtPoint, TensorError};

/// Anything that can expand a Riemannian metric about a point.
pub trait MetricSource: Send + Sync {
    fn dim(&self) -> usize;
    /// Component jets `g_ab` (symmetric, row-major rank-2 field) to the given order.
    fn metric_jets(&self, p: &[f64], order: usize) -> Result<Field>;

    fn at_point(&self, p: &[f64]) -> Result<MetricAtPoint> {
        Ok(MetricAtPoint::from_jets(&self.metric_jets(p, 0)?)?)
    }
}

impl<M: MetricSource + ?Sized> MetricSource for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn metric_jets(&self, p: &[f64], order: usize) -> Result<Field> {
        (**self).metric_jets(p, order)
    }
}

/// Metric given by a symmetric matrix of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    dim: usize,
    comps: Vec<Expression>,
}

impl MetricSpec {
    /// Upper triangle (including the diagonal) is authoritative.
    pub fn new(rows: Vec<Vec<Expression>>) -> Result<MetricSpec> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid(format!("metric must be a {dim}x{dim} matrix")));
        }
        let mut comps = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let (i, j) = if a <= b { (a, b) } else { (b, a) };
                comps.push(rows[i][j].clone());
            }
        }
        Ok(MetricSpec { dim, comps })
    }

    /// Parse a matrix of source strings; empty strings below the diagonal are allowed.
    pub fn parse(rows: &[Vec<String>], names: &[String]) -> std::result::Result<MetricSpec, (usize, usize, ParseError)> {
        let dim = names.len();
        let mut parsed = Vec::with_capacity(dim);
        for (a, row) in rows.iter().enumerate() {
            let mut r = Vec::with_capacity(dim);
            for (b, src) in row.iter().enumerate() {
                if b < a && src.trim().is_empty() {
                    r.push(Expression::constant(0.0, dim));
                } else {
                    r.push(Expression::parse_with_names(src, names).map_err(|e| (a, b, e))?);
                }
            }
            parsed.push(r);
        }
        MetricSpec::new(parsed).map_err(|_| (0, 0, ParseError::Empty))
    }

    pub fn from_strs(rows: &[&[&str]]) -> Result<MetricSpec> {
        let dim = rows.len();
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| Expression::parse(s, dim)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        MetricSpec::new(rows)
    }

    pub fn flat(dim: usize) -> MetricSpec {
        MetricSpec::conformal(Expression::constant(1.0, dim))
    }

    /// `f · δ_ab`.
    pub fn conformal(factor: Expression) -> MetricSpec {
        let dim = factor.dim();
        let comps = (0..dim * dim)
            .map(|k| if k / dim == k % dim { factor.clone() } else { Expression::constant(0.0, dim) })
            .collect();
        MetricSpec { dim, comps }
    }

    pub fn component(&self, a: usize, b: usize) -> &Expression {
        &self.comps[a * self.dim + b]
    }

    /// Scalar multiple by an expression (e.g. `Ω²g`), still closed-form.
    pub fn scaled(&self, factor: &Expression) -> MetricSpec {
        let comps = self
            .comps
            .iter()
            .map(|c| Expression::from_expr(factor.root().clone() * c.root().clone(), self.dim))
            .collect();
        MetricSpec { dim: self.dim, comps }
    }

    /// Conformal rescaling `Ω² g`.
    pub fn rescaled(&self, omega: &Expression) -> MetricSpec {
        let sq = Expression::from_expr(omega.root().clone().powi(2), self.dim);
        self.scaled(&sq)
    }

    /// `g + h` componentwise with an expression matrix.
    pub fn plus(&self, h: &[Expression]) -> MetricSpec {
        let comps = self
            .comps
            .iter()
            .zip(h)
            .map(|(g, h)| Expression::from_expr(g.root().clone() + h.root().clone(), self.dim))
            .collect();
        MetricSpec { dim: self.dim, comps }
    }

    pub fn components(&self) -> &[Expression] {
        &self.comps
    }
}

impl MetricSource for MetricSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_jets(&self, p: &[f64], order: usize) -> Result<Field> {
        let d = self.dim;
        let mut comps: Vec<Option<Jet>> = vec![None; d * d];
        for a in 0..d {
            for b in a..d {
                let j = self.comps[a * d + b].eval_jet(p, order)?;
                comps[b * d + a] = Some(j.clone());
                comps[a * d + b] = Some(j);
            }
        }
        Ok(Field { dim: d, rank: 2, comps: comps.into_iter().map(|j| j.expect("filled")).collect() })
    }
}

/// `Ω² g` for an arbitrary base source.
pub struct Rescaled<'a> {
    pub base: &'a dyn MetricSource,
    pub omega: &'a Expression,
}

impl MetricSource for Rescaled<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn metric_jets(&self, p: &[f64], order: usize) -> Result<Field> {
        let om = self.omega.eval_jet(p, order)?;
        if om.value() <= 0.0 {
            return Err(TensorError::NonPositiveScale(om.value()).into());
        }
        let sq = &om * &om;
        Ok(self.base.metric_jets(p, order)?.mul_scalar(&sq))
    }
}

/// Jets of `g^{ab}` from jets of `g_ab` (Neumann series about the value).
pub fn inverse(g: &Field) -> Result<Field> {
    let d = g.dim;
    let order = g.order();
    let at = MetricAtPoint::from_jets(g)?;
    let a = |i: usize, j: usize| at.g_inv.get(&[i, j]);
    let delta = g.map(|j| j.add_scalar(-j.value()));
    let constant = Field::from_fn(d, 2, |i| Jet::constant(d, order, a(i[0], i[1])));
    let mut x = constant.clone();
    for _ in 0..order {
        // x ← A − A δ x
        let dx = Field::from_fn(d, 2, |i| {
            let mut acc = Jet::zero(d, order);
            for e in 0..d {
                acc.add_mul(1.0, delta.get(&[i[0], e]), x.get(&[e, i[1]]));
            }
            acc
        });
        x = Field::from_fn(d, 2, |i| {
            let mut acc = constant.get(i).clone();
            for e in 0..d {
                acc.axpy(-a(i[0], e), dx.get(&[e, i[1]]));
            }
            acc
        });
    }
    Ok(x)
}

/// `det g` as a jet, by elimination without pivoting (valid for positive definite `g`).
pub fn determinant(g: &Field) -> Result<Jet> {
    let d = g.dim;
    let mut m: Vec<Vec<Jet>> = (0..d).map(|a| (0..d).map(|b| g.get(&[a, b]).clone()).collect()).collect();
    let mut det = Jet::constant(d, g.order(), 1.0);
    for k in 0..d {
        let pivot = m[k][k].clone();
        det = &det * &pivot;
        let inv = pivot.recip()?;
        for i in (k + 1)..d {
            let f = &m[i][k] * &inv;
            for j in (k + 1)..d {
                let t = &f * &m[k][j];
                m[i][j] = &m[i][j] - &t;
            }
        }
    }
    Ok(det)
}

/// Expression for `δ_ab + ε·p_ab` style metrics built programmatically.
pub fn spec_from_exprs(dim: usize, comps: Vec<Expr>) -> MetricSpec {
    assert_eq!(comps.len(), dim * dim);
    let rows = (0..dim)
        .map(|a| (0..dim).map(|b| Expression::from_expr(comps[a * dim + b].clone(), dim)).collect())
        .collect();
    MetricSpec::new(rows).expect("square")
}
