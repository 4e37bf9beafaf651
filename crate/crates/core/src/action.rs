//! Tensor-product Gauss–Legendre quadrature over coordinate boxes, the
//! Einstein–Hilbert (with boundary term) and Weyl-squared actions, and
//! finite-difference checks of their first variations.
//!
//! The designated boundary `Σ` is the lower face `x_d = lower_d`; its normal
//! `n = ∇x_d/|∇x_d|` points into the box.

use std::f64::consts::PI;

use crate::curvature::{curvature_fields, Geometry, Level};
use crate::error::{Error, Result};
use crate::expr::{Expr, Expression};
use crate::hypersurface::{gauss_legendre, HypersurfaceSpec, SurfaceFields};
use crate::jets::Jet;
use crate::metric::MetricSource;
use crate::tensor::{indices, Down, Field, MetricAtPoint, TensorValue, Up};
use crate::tractor::delta1_tracefree;

/// Sum in a fixed pairwise order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl QuadratureDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, nodes: Vec<usize>) -> Result<QuadratureDomain> {
        let d = lower.len();
        if upper.len() != d || nodes.len() != d {
            return Err(Error::Invalid("box bounds and node counts must have one entry per axis".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::Invalid("box bounds must satisfy lower < upper".into()));
        }
        if nodes.iter().any(|&n| n < 4) {
            return Err(Error::Invalid("at least 4 quadrature nodes per axis are required".into()));
        }
        Ok(QuadratureDomain { lower, upper, nodes })
    }

    pub fn cube(dim: usize, lower: f64, upper: f64, nodes: usize) -> Result<QuadratureDomain> {
        QuadratureDomain::new(vec![lower; dim], vec![upper; dim], vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// `s = x_d − lower_d`.
    pub fn sigma(&self) -> HypersurfaceSpec {
        let d = self.dim();
        let e = Expr::var(d - 1) - Expr::num(self.lower[d - 1]);
        HypersurfaceSpec::new(Expression::from_expr(e, d))
    }

    fn product_nodes(&self, axes: usize) -> Vec<(Vec<f64>, f64)> {
        let rules: Vec<Vec<(f64, f64)>> = (0..axes).map(|i| gauss_legendre(self.nodes[i])).collect();
        let counts: Vec<usize> = (0..axes).map(|i| self.nodes[i]).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; axes];
        loop {
            let mut x = Vec::with_capacity(self.dim());
            let mut w = 1.0;
            for i in 0..axes {
                let (node, weight) = rules[i][idx[i]];
                let half = 0.5 * (self.upper[i] - self.lower[i]);
                x.push(self.lower[i] + half * (node + 1.0));
                w *= weight * half;
            }
            out.push((x, w));
            let mut k = axes;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Interior nodes with coordinate weights.
    pub fn bulk_nodes(&self) -> Vec<(Vec<f64>, f64)> {
        self.product_nodes(self.dim())
    }

    /// Nodes on `Σ` with coordinate weights.
    pub fn face_nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let d = self.dim();
        self.product_nodes(d - 1)
            .into_iter()
            .map(|(mut x, w)| {
                x.push(self.lower[d - 1]);
                (x, w)
            })
            .collect()
    }

    /// `Π_{i<d}(1 − ξ_i²)³ (1 − ξ_d)³` with `ξ` the affine coordinate onto `[−1, 1]`;
    /// vanishes to third order on every face except `Σ`.
    pub fn window(&self) -> Expr {
        let d = self.dim();
        let xi = |i: usize| {
            let c = 0.5 * (self.lower[i] + self.upper[i]);
            let r = 0.5 * (self.upper[i] - self.lower[i]);
            (Expr::var(i) - Expr::num(c)) / Expr::num(r)
        };
        let mut w = (Expr::num(1.0) - xi(d - 1)).powi(3);
        for i in 0..d - 1 {
            w = w * (Expr::num(1.0) - xi(i).powi(2)).powi(3);
        }
        w
    }

    /// Like [`window`](Self::window) but vanishing on `Σ` as well.
    pub fn interior_window(&self) -> Expr {
        let d = self.dim();
        let c = 0.5 * (self.lower[d - 1] + self.upper[d - 1]);
        let r = 0.5 * (self.upper[d - 1] - self.lower[d - 1]);
        let xi = (Expr::var(d - 1) - Expr::num(c)) / Expr::num(r);
        self.window() * (Expr::num(1.0) + xi).powi(3)
    }
}

/// `∫ f dV_g` over the box.
pub fn integrate_bulk(
    metric: &dyn MetricSource,
    dom: &QuadratureDomain,
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut terms = Vec::new();
    for (x, w) in dom.bulk_nodes() {
        let det = metric.at_point(&x)?.det();
        terms.push(w * det.sqrt() * f(&x)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `∫_Σ f dV_ḡ` over the designated face.
pub fn integrate_boundary(
    metric: &dyn MetricSource,
    dom: &QuadratureDomain,
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut terms = Vec::new();
    for (x, w) in dom.face_nodes() {
        terms.push(w * face_area_element(metric, &x)? * f(&x)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `√det(g_ij)`, `i, j < d`: the induced area element of `x_d = const` in the coordinates `x'`.
pub fn face_area_element(metric: &dyn MetricSource, x: &[f64]) -> Result<f64> {
    let d = metric.dim();
    let m = metric.at_point(x)?;
    let sub = nalgebra::DMatrix::from_fn(d - 1, d - 1, |i, j| m.g.get(&[i, j]));
    Ok(sub.determinant().sqrt())
}

/// Metric variation `h_ab`.
#[derive(Debug, Clone)]
pub enum Variation {
    /// Explicit symmetric components (upper triangle authoritative).
    Components(Vec<Expression>),
    /// `h = f g`.
    Trace(Expression),
    /// `h = L_k g = ∇_a k_b + ∇_b k_a` for a vector field `k^a`.
    Lie(Vec<Expression>),
}

#[derive(Debug, Clone)]
pub struct VariationField {
    pub dim: usize,
    pub kind: Variation,
}

impl VariationField {
    pub fn components(dim: usize, comps: Vec<Expression>) -> Result<VariationField> {
        if comps.len() != dim * dim {
            return Err(Error::Invalid(format!("variation needs {} components", dim * dim)));
        }
        let comps = (0..dim * dim)
            .map(|k| {
                let (a, b) = (k / dim, k % dim);
                if a <= b { comps[k].clone() } else { comps[b * dim + a].clone() }
            })
            .collect();
        Ok(VariationField { dim, kind: Variation::Components(comps) })
    }

    /// Multiply every component by `window`.
    pub fn windowed(dim: usize, comps: &[Expr], window: &Expr) -> Result<VariationField> {
        let c = comps.iter().map(|e| Expression::from_expr(e.clone() * window.clone(), dim)).collect();
        VariationField::components(dim, c)
    }

    pub fn trace(f: Expression) -> VariationField {
        VariationField { dim: f.dim(), kind: Variation::Trace(f) }
    }

    pub fn lie(k: Vec<Expression>) -> VariationField {
        VariationField { dim: k.len(), kind: Variation::Lie(k) }
    }

    pub fn zero(dim: usize) -> VariationField {
        VariationField { dim, kind: Variation::Components(vec![Expression::constant(0.0, dim); dim * dim]) }
    }

    /// Component jets of `h` about `p`, with `g` the unperturbed metric.
    pub fn jets(&self, metric: &dyn MetricSource, p: &[f64], order: usize) -> Result<Field> {
        let d = self.dim;
        match &self.kind {
            Variation::Components(c) => {
                let mut comps: Vec<Jet> = Vec::with_capacity(d * d);
                for e in c {
                    comps.push(e.eval_jet(p, order)?);
                }
                Ok(Field { dim: d, rank: 2, comps })
            }
            Variation::Trace(f) => {
                let fj = f.eval_jet(p, order)?;
                Ok(metric.metric_jets(p, order)?.mul_scalar(&fj))
            }
            Variation::Lie(k) => {
                let g = metric.metric_jets(p, order + 1)?;
                let kj = k.iter().map(|e| e.eval_jet(p, order + 1)).collect::<std::result::Result<Vec<Jet>, _>>()?;
                Ok(Field::from_fn(d, 2, |i| {
                    let (a, b) = (i[0], i[1]);
                    let mut acc = Jet::zero(d, order);
                    for c in 0..d {
                        let dg = g.get(&[a, b]).partial(c).expect("order ≥ 1");
                        acc.add_mul(1.0, &kj[c], &dg);
                        acc.add_mul(1.0, g.get(&[c, b]), &kj[c].partial(a).expect("order ≥ 1"));
                        acc.add_mul(1.0, g.get(&[a, c]), &kj[c].partial(b).expect("order ≥ 1"));
                    }
                    acc
                }))
            }
        }
    }
}

/// `g + t h`.
pub struct Perturbed<'a> {
    pub base: &'a dyn MetricSource,
    pub h: &'a VariationField,
    pub t: f64,
}

impl MetricSource for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn metric_jets(&self, p: &[f64], order: usize) -> Result<Field> {
        let g = self.base.metric_jets(p, order)?;
        if self.t == 0.0 {
            return Ok(g);
        }
        Ok(g.add(&self.h.jets(self.base, p, order)?.scale(self.t)))
    }
}

/// Boundary coefficient `c` in `S = (1/16π)∫Sc dV + c ∫_Σ H dV_ḡ` (see [`action_eh`]).
pub const GHY_COEFFICIENT: f64 = -3.0 / (8.0 * PI);

fn scalar_curvature(metric: &dyn MetricSource, x: &[f64]) -> Result<f64> {
    let geom = Geometry::from_source(metric, x, 2)?;
    Ok(curvature_fields(&geom, Level::Weyl)?.sc.scalar_jet().value())
}

fn mean_curvature(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, x: &[f64]) -> Result<f64> {
    Ok(SurfaceFields::new(metric, hyp, x, 2)?.h.scalar_jet().value())
}

/// `(1/16π)∫_M Sc dV + c ∫_Σ H dV_ḡ` with `c` = [`GHY_COEFFICIENT`] when `include_ghy`.
pub fn action_eh(metric: &dyn MetricSource, dom: &QuadratureDomain, include_ghy: bool) -> Result<f64> {
    action_eh_with(metric, dom, if include_ghy { GHY_COEFFICIENT } else { 0.0 })
}

pub fn action_eh_with(metric: &dyn MetricSource, dom: &QuadratureDomain, ghy: f64) -> Result<f64> {
    check_dim(metric, dom, "Einstein–Hilbert action")?;
    let bulk = integrate_bulk(metric, dom, |x| scalar_curvature(metric, x))? / (16.0 * PI);
    if ghy == 0.0 {
        return Ok(bulk);
    }
    let hyp = dom.sigma();
    let bdy = integrate_boundary(metric, dom, |x| mean_curvature(metric, &hyp, x))?;
    Ok(bulk + ghy * bdy)
}

fn check_dim(metric: &dyn MetricSource, dom: &QuadratureDomain, op: &'static str) -> Result<()> {
    if metric.dim() != dom.dim() {
        return Err(Error::Mismatch(format!("metric dimension {} vs domain dimension {}", metric.dim(), dom.dim())));
    }
    if metric.dim() != 4 {
        return Err(Error::UnsupportedDimension { op, dim: metric.dim(), supported: "4" });
    }
    Ok(())
}

/// `|W|² = W_abcd W^abcd`.
pub fn weyl_norm_squared(w: &TensorValue, m: &MetricAtPoint) -> f64 {
    let up = w.raise(0, m).raise(1, m).raise(2, m).raise(3, m);
    up.entries.iter().zip(&w.entries).map(|(a, b)| a * b).sum()
}

fn weyl_density(metric: &dyn MetricSource, x: &[f64]) -> Result<f64> {
    let geom = Geometry::from_source(metric, x, 2)?;
    let cf = curvature_fields(&geom, Level::Weyl)?;
    let w = cf.weyl.value(vec![Down; 4], 2);
    Ok(0.25 * weyl_norm_squared(&w, &geom.at_point()?))
}

/// `¼∫_M |W|² dV`.
pub fn action_weyl2(metric: &dyn MetricSource, dom: &QuadratureDomain) -> Result<f64> {
    check_dim(metric, dom, "Weyl-squared action")?;
    integrate_bulk(metric, dom, |x| weyl_density(metric, x))
}

/// Central difference of `S(g + t h)` at `t = 0` with one Richardson level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

/// `values[k]` = `S` at `t = [step, −step, step/2, −step/2][k]`.
fn richardson(values: &[f64; 4], step: f64) -> FiniteDifference {
    let coarse = (values[0] - values[1]) / (2.0 * step);
    let fine = (values[2] - values[3]) / step;
    FiniteDifference { coarse, fine, extrapolated: (4.0 * fine - coarse) / 3.0 }
}

fn fd_offsets(step: f64) -> [f64; 4] {
    [step, -step, 0.5 * step, -0.5 * step]
}

/// FD derivative of a bulk action whose density depends on the metric only.
fn fd_bulk(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
    density: impl Fn(&dyn MetricSource, &[f64]) -> Result<f64>,
) -> Result<FiniteDifference> {
    let ts = fd_offsets(step);
    let mut terms: [Vec<f64>; 4] = Default::default();
    for (x, w) in dom.bulk_nodes() {
        for (k, &t) in ts.iter().enumerate() {
            let g = Perturbed { base: metric, h, t };
            let det = g.at_point(&x)?.det();
            terms[k].push(w * det.sqrt() * density(&g, &x)?);
        }
    }
    let vals = [pairwise_sum(&terms[0]), pairwise_sum(&terms[1]), pairwise_sum(&terms[2]), pairwise_sum(&terms[3])];
    Ok(richardson(&vals, step))
}

fn fd_boundary(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
    density: impl Fn(&dyn MetricSource, &[f64]) -> Result<f64>,
) -> Result<FiniteDifference> {
    let ts = fd_offsets(step);
    let mut terms: [Vec<f64>; 4] = Default::default();
    for (x, w) in dom.face_nodes() {
        for (k, &t) in ts.iter().enumerate() {
            let g = Perturbed { base: metric, h, t };
            terms[k].push(w * face_area_element(&g, &x)? * density(&g, &x)?);
        }
    }
    let vals = [pairwise_sum(&terms[0]), pairwise_sum(&terms[1]), pairwise_sum(&terms[2]), pairwise_sum(&terms[3])];
    Ok(richardson(&vals, step))
}

/// `d/dt ¼∫|W|²[g + t h]` at `t = 0`.
pub fn fd_weyl2(metric: &dyn MetricSource, h: &VariationField, dom: &QuadratureDomain, step: f64) -> Result<FiniteDifference> {
    check_dim(metric, dom, "Weyl-squared variation")?;
    fd_bulk(metric, h, dom, step, weyl_density)
}

/// `d/dt S_EH[g + t h]` at `t = 0`, boundary coefficient `ghy`.
pub fn fd_eh(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
    ghy: f64,
) -> Result<FiniteDifference> {
    check_dim(metric, dom, "Einstein–Hilbert variation")?;
    let hyp = dom.sigma();
    let b = fd_bulk(metric, h, dom, step, |g, x| Ok(scalar_curvature(g, x)? / (16.0 * PI)))?;
    if ghy == 0.0 {
        return Ok(b);
    }
    let s = fd_boundary(metric, h, dom, step, |g, x| Ok(ghy * mean_curvature(g, &hyp, x)?))?;
    Ok(FiniteDifference { coarse: b.coarse + s.coarse, fine: b.fine + s.fine, extrapolated: b.extrapolated + s.extrapolated })
}

/// Default FD step: `base / max(1, max|h_ab|)` over the bulk nodes.
pub fn scaled_step(base: f64, metric: &dyn MetricSource, h: &VariationField, dom: &QuadratureDomain) -> Result<f64> {
    let mut m: f64 = 0.0;
    for (x, _) in dom.bulk_nodes() {
        m = m.max(h.jets(metric, &x, 0)?.max_abs());
    }
    Ok(base / m.max(1.0))
}

/// `‖a − b‖/max(‖a‖, ‖b‖, 1e−10)` for scalars.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-10)
}

#[derive(Debug, Clone)]
pub struct EhReport {
    pub lhs_fd: f64,
    pub fd: FiniteDifference,
    pub bulk: f64,
    pub boundary: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Tensor and scalar data of `h` at a point of `Σ`.
struct BoundaryData {
    sf: SurfaceFields,
    m: MetricAtPoint,
    h_field: Field,
    h: TensorValue,
    n_up: Vec<f64>,
}

impl BoundaryData {
    fn new(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, h: &VariationField, x: &[f64], order: usize) -> Result<Self> {
        let sf = SurfaceFields::new(metric, hyp, x, order)?;
        let m = sf.metric_at_point()?;
        let h_field = h.jets(metric, x, 2)?;
        let hv = h_field.value(vec![Down, Down], 2);
        let n_up = sf.n_up.comps.iter().map(|j| j.value()).collect();
        Ok(BoundaryData { sf, m, h_field, h: hv, n_up })
    }

    fn proj(&self, t: &TensorValue) -> TensorValue {
        let d = t.dim;
        let p = self.sf.proj.value(vec![Down, Up], 0);
        let rank = t.rank();
        TensorValue::from_fn(d, t.variance.clone(), t.weight, |i| {
            indices(d, rank).map(|j| i.iter().zip(&j).map(|(&a, &b)| p.get(&[a, b])).product::<f64>() * t.get(&j)).sum()
        })
    }

    fn h_nn(&self) -> f64 {
        let d = self.h.dim;
        indices(d, 2).map(|i| self.n_up[i[0]] * self.n_up[i[1]] * self.h.get(&i)).sum()
    }

    /// `h^⊤_ab`.
    fn h_top(&self) -> TensorValue {
        self.proj(&self.h)
    }

    /// `h^⊤_{nb}`.
    fn h_n_top(&self) -> TensorValue {
        let d = self.h.dim;
        let hn = TensorValue::from_fn(d, vec![Down], 2, |i| (0..d).map(|a| self.n_up[a] * self.h.get(&[a, i[0]])).sum());
        self.proj(&hn)
    }
}

fn full_dot(a: &TensorValue, b_up: &TensorValue) -> f64 {
    a.entries.iter().zip(&b_up.entries).map(|(x, y)| x * y).sum()
}

fn raise_all(t: &TensorValue, m: &MetricAtPoint) -> TensorValue {
    (0..t.rank()).fold(t.clone(), |acc, s| acc.raise(s, m))
}

/// FD of the boundary-corrected Einstein–Hilbert action against
/// `−(1/16π)∫G_ab h^ab dV + (1/16π)∫_Σ (2Hḡ_ab − II̊_ab) δḡ^ab dV_ḡ`, `δḡ^ab = −h^⊤ab`.
pub fn verify_eh_variation(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
) -> Result<EhReport> {
    verify_eh_variation_with(metric, h, dom, step, GHY_COEFFICIENT)
}

pub fn verify_eh_variation_with(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
    ghy: f64,
) -> Result<EhReport> {
    let fd = fd_eh(metric, h, dom, step, ghy)?;
    let hyp = dom.sigma();
    let bulk = integrate_bulk(metric, dom, |x| {
        let geom = Geometry::from_source(metric, x, 2)?;
        let cf = curvature_fields(&geom, Level::Weyl)?;
        let m = geom.at_point()?;
        let sc = cf.sc.scalar_jet().value();
        let ric = cf.ric.value(vec![Down, Down], 0);
        let g = &m.g;
        let einstein = ric.sub(&g.scale(0.5 * sc));
        let hu = raise_all(&h.jets(metric, x, 0)?.value(vec![Down, Down], 2), &m);
        Ok(-full_dot(&einstein, &hu) / (16.0 * PI))
    })?;
    let boundary = integrate_boundary(metric, dom, |x| {
        let bd = BoundaryData::new(metric, &hyp, h, x, 2)?;
        let hval = bd.sf.h.scalar_jet().value();
        let gbar = bd.sf.gbar.value(vec![Down, Down], 2);
        let iio = bd.sf.iio.value(vec![Down, Down], 1);
        let k = gbar.scale(2.0 * hval).sub(&iio);
        let dgbar = raise_all(&bd.h_top(), &bd.m).scale(-1.0);
        Ok(full_dot(&k, &dgbar) / (16.0 * PI))
    })?;
    let rhs = bulk + boundary;
    Ok(EhReport { lhs_fd: fd.extrapolated, fd, bulk, boundary, rhs, rel_err: rel_err(fd.extrapolated, rhs) })
}

#[derive(Debug, Clone)]
pub struct Weyl2Report {
    pub lhs_fd: f64,
    pub fd: FiniteDifference,
    /// `−∫ B^ab h_ab dV`.
    pub bulk: f64,
    /// `−∫_Σ (n^c C_cab h^ab − n_a W^abcd ∇_c h_bd)`.
    pub boundary_raw: f64,
    /// Boundary term in the `δ_R` form.
    pub boundary_delta_r: f64,
    /// Boundary term in the final trace-decomposed form.
    pub boundary_final: f64,
    pub rhs: f64,
    /// FD against `bulk + boundary_final`.
    pub rel_err: f64,
    /// `δ_R` form against the final form.
    pub routes_rel_err: f64,
    /// Raw boundary against the final form.
    pub raw_rel_err: f64,
}

/// Pointwise integrands of the three boundary forms.
pub fn weyl2_boundary_integrands(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    h: &VariationField,
    x: &[f64],
) -> Result<[f64; 3]> {
    let bd = BoundaryData::new(metric, hyp, h, x, 3)?;
    let d = bd.h.dim;
    let m = &bd.m;
    let sf = &bd.sf;
    let n_up = &bd.n_up;
    let n_down: Vec<f64> = sf.n.comps.iter().map(|j| j.value()).collect();
    let h_up = raise_all(&bd.h, m);

    // Raw form.
    let cotton = sf.curv.cotton.as_ref().expect("order 3").value(vec![Down; 3], 0);
    let weyl = sf.curv.weyl.value(vec![Down; 4], 2);
    let w_up = raise_all(&weyl, m);
    let dh = sf.geom.covariant_derivative(&bd.h_field, &[Down, Down])?.value(vec![Down; 3], 2); // [c][b][d]
    let mut c_term = 0.0;
    for i in indices(d, 3) {
        c_term += n_up[i[0]] * cotton.get(&i) * h_up.get(&[i[1], i[2]]);
    }
    let mut w_term = 0.0;
    for i in indices(d, 4) {
        let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
        w_term += n_down[a] * w_up.get(&i) * dh.get(&[c, b, e]);
    }
    let raw = -(c_term - w_term);

    // Shared pieces.
    let iv = sf.fourth_form()?.value(vec![Down, Down], -1);
    let iio = sf.iio.value(vec![Down, Down], 1);
    let wnn = sf.weyl_nn().value(vec![Down, Down], 0);
    let wnn_up = raise_all(&wnn, m);
    let iv_up = raise_all(&iv, m);
    // X^{ab} = II̊_c^a W_n^{bc}_n
    let iio_mixed = iio.raise(1, m); // II̊_c^a stored [c][a]
    let x_up = TensorValue::from_fn(d, vec![Up, Up], 0, |i| {
        (0..d).map(|c| iio_mixed.get(&[c, i[0]]) * wnn_up.get(&[i[1], c])).sum()
    });
    let tr_h = bd.h.trace(0, 1, m).value();
    let h_tf_field = {
        let trj = bd.h_field.contract(0, 1, Some(&sf.geom.ginv));
        bd.h_field.sub(&sf.geom.g.mul_scalar(&trj.scalar_jet().scale(1.0 / d as f64)))
    };
    let delta1 = delta1_tracefree(&h_tf_field, sf)?;
    let w_delta1 = full_dot(&delta1, &wnn_up);
    let wiio = full_dot(&iio, &wnn_up);

    // δ_R form.
    let h_top = bd.h_top();
    let h_nn = bd.h_nn();
    let coeff = iv_up.add(&x_up);
    let delta_r = -full_dot(&h_top, &coeff) + wiio * h_nn - w_delta1;

    // Final form.
    let h_tf = bd.h.sub(&m.g.scale(tr_h / d as f64));
    let h_tf_nn: f64 = indices(d, 2).map(|i| n_up[i[0]] * n_up[i[1]] * h_tf.get(&i)).sum();
    let gbar = sf.gbar.value(vec![Down, Down], 2);
    let h_tf_top = bd.proj(&h_tf);
    let tr_top = h_tf_top.trace(0, 1, m).value();
    let h_ttf = h_tf_top.sub(&gbar.scale(tr_top / (d as f64 - 1.0)));
    let fin = 4.0 / 3.0 * wiio * h_tf_nn - full_dot(&h_ttf, &coeff) - w_delta1;
    Ok([raw, delta_r, fin])
}

/// FD of `¼∫|W|²` against `−∫B^ab h_ab + boundary`, with all three boundary forms.
pub fn verify_weyl2_variation(
    metric: &dyn MetricSource,
    h: &VariationField,
    dom: &QuadratureDomain,
    step: f64,
) -> Result<Weyl2Report> {
    let fd = fd_weyl2(metric, h, dom, step)?;
    let hyp = dom.sigma();
    let bulk = integrate_bulk(metric, dom, |x| {
        let geom = Geometry::from_source(metric, x, 4)?;
        let cf = curvature_fields(&geom, Level::Bach)?;
        let m = geom.at_point()?;
        let b = cf.bach.expect("level").value(vec![Down, Down], -2);
        let hu = raise_all(&h.jets(metric, x, 0)?.value(vec![Down, Down], 2), &m);
        Ok(-full_dot(&b, &hu))
    })?;
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for (x, w) in dom.face_nodes() {
        let area = face_area_element(metric, &x)?;
        let v = weyl2_boundary_integrands(metric, &hyp, h, &x)?;
        for k in 0..3 {
            parts[k].push(w * area * v[k]);
        }
    }
    let [raw, delta_r, fin] = [pairwise_sum(&parts[0]), pairwise_sum(&parts[1]), pairwise_sum(&parts[2])];
    let rhs = bulk + fin;
    Ok(Weyl2Report {
        lhs_fd: fd.extrapolated,
        fd,
        bulk,
        boundary_raw: raw,
        boundary_delta_r: delta_r,
        boundary_final: fin,
        rhs,
        rel_err: rel_err(fd.extrapolated, rhs),
        routes_rel_err: rel_err(delta_r, fin),
        raw_rel_err: rel_err(raw, fin),
    })
}

#[derive(Debug, Clone)]
pub struct IioReport {
    pub lhs_fd: TensorValue,
    pub rhs: TensorValue,
    pub rel_err: f64,
}

/// FD of `II̊[g + t h]` at `p` (fixed `s`) against
/// `½δ⁽¹⁾h̊ + 2n_(a II̊^c_b) h^⊤_nc − ½II̊ h_nn + II̊_(a^c h^⊤_b)c`.
pub fn verify_iio_variation(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    h: &VariationField,
    p: &[f64],
    step: f64,
) -> Result<IioReport> {
    let d = metric.dim();
    let iio_at = |t: f64| -> Result<TensorValue> {
        let g = Perturbed { base: metric, h, t };
        Ok(SurfaceFields::new(&g, hyp, p, 2)?.iio.value(vec![Down, Down], 1))
    };
    let ts = fd_offsets(step);
    let vals: Vec<TensorValue> = ts.iter().map(|&t| iio_at(t)).collect::<Result<_>>()?;
    let lhs_fd = TensorValue::from_fn(d, vec![Down, Down], 1, |i| {
        let v = [vals[0].get(i), vals[1].get(i), vals[2].get(i), vals[3].get(i)];
        richardson(&v, step).extrapolated
    });

    let bd = BoundaryData::new(metric, hyp, h, p, 2)?;
    let m = &bd.m;
    let sf = &bd.sf;
    let iio = sf.iio.value(vec![Down, Down], 1);
    let iio_mixed = iio.raise(1, m); // II̊_a^c stored [a][c]
    let n_down: Vec<f64> = sf.n.comps.iter().map(|j| j.value()).collect();
    let hnt = bd.h_n_top();
    let h_top = bd.h_top();
    let h_nn = bd.h_nn();
    let trj = bd.h_field.contract(0, 1, Some(&sf.geom.ginv));
    let h_tf = bd.h_field.sub(&sf.geom.g.mul_scalar(&trj.scalar_jet().scale(1.0 / d as f64)));
    let delta1 = delta1_tracefree(&h_tf, sf)?;
    // II̊^c_b h^⊤_nc
    let ih: Vec<f64> = (0..d).map(|b| (0..d).map(|c| iio_mixed.get(&[b, c]) * hnt.get(&[c])).sum()).collect();
    let rhs = TensorValue::from_fn(d, vec![Down, Down], 1, |i| {
        let (a, b) = (i[0], i[1]);
        let ihh = |x: usize, y: usize| (0..d).map(|c| iio_mixed.get(&[x, c]) * h_top.get(&[y, c])).sum::<f64>();
        0.5 * delta1.get(i) + (n_down[a] * ih[b] + n_down[b] * ih[a]) - 0.5 * iio.get(i) * h_nn
            + 0.5 * (ihh(a, b) + ihh(b, a))
    });
    let err = lhs_fd.sub(&rhs).norm() / lhs_fd.norm().max(rhs.norm()).max(1e-10);
    Ok(IioReport { lhs_fd, rhs, rel_err: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    #[test]
    fn unit_box_volume() {
        let dom = QuadratureDomain::cube(4, 0.0, 1.0, 4).unwrap();
        let v = integrate_bulk(&MetricSpec::flat(4), &dom, |_| Ok(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        let a = integrate_boundary(&MetricSpec::flat(4), &dom, |_| Ok(1.0)).unwrap();
        assert!((a - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_exactness() {
        let dom = QuadratureDomain::cube(3, -1.0, 2.0, 5).unwrap();
        let v = integrate_bulk(&MetricSpec::flat(3), &dom, |x| Ok(x[0].powi(9) * x[1].powi(4) + x[2].powi(2))).unwrap();
        let exact = (2f64.powi(10) - 1.0) / 10.0 * (2f64.powi(5) + 1.0) / 5.0 * 3.0 + 9.0 * 3.0;
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn flat_actions_vanish() {
        let dom = QuadratureDomain::cube(4, 0.0, 1.0, 4).unwrap();
        assert_eq!(action_eh(&MetricSpec::flat(4), &dom, true).unwrap(), 0.0);
        assert_eq!(action_weyl2(&MetricSpec::flat(4), &dom).unwrap(), 0.0);
    }

    #[test]
    fn small_domains_rejected() {
        assert!(QuadratureDomain::cube(4, 0.0, 1.0, 3).is_err());
        assert!(QuadratureDomain::new(vec![0.0; 4], vec![1.0, 1.0, 0.0, 1.0], vec![4; 4]).is_err());
    }
}
