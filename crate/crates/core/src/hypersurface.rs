//! Extrinsic geometry of `Σ = {s = 0}`: unit normal, projector, second
//! fundamental form, Fialkow tensor, Weyl projections, the fourth conformal
//! fundamental form (d = 4), its divergence, and the `II̊·F̊` pairing.
//!
//! The normal is extended off `Σ` as `n = ∇s/|∇s|`, pointing into `{s > 0}`.
//! Intrinsic curvature comes from a graph chart `x_k = q(x')` solved in the jet ring.

use crate::curvature::{curvature_fields, CurvatureFields, Geometry, Level};
use crate::error::{Error, Result};
use crate::expr::{Expr, Expression};
use crate::jets::Jet;
use crate::metric::MetricSource;
use crate::tensor::{indices, Down, Field, MetricAtPoint, TensorValue, Up, Variance};

/// Hypersurface given as the zero set of a defining function.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersurfaceSpec {
    pub s: Expression,
}

impl HypersurfaceSpec {
    pub fn new(s: Expression) -> HypersurfaceSpec {
        HypersurfaceSpec { s }
    }

    pub fn parse(src: &str, dim: usize) -> Result<HypersurfaceSpec> {
        Ok(HypersurfaceSpec { s: Expression::parse(src, dim)? })
    }

    /// Same hypersurface with defining function `s·(1 + c·s)`.
    pub fn reextended(&self, c: f64) -> HypersurfaceSpec {
        let s = self.s.root().clone();
        let e = s.clone() * (Expr::num(1.0) + Expr::num(c) * s);
        HypersurfaceSpec { s: Expression::from_expr(e, self.s.dim()) }
    }
}

/// Jet fields of the ambient and extrinsic geometry about a point of `Σ`.
#[derive(Debug, Clone)]
pub struct SurfaceFields {
    pub geom: Geometry,
    pub curv: CurvatureFields,
    pub s: Jet,
    /// `n_a`.
    pub n: Field,
    /// `n^a`.
    pub n_up: Field,
    /// `ḡ_a^b = δ_a^b − n_a n^b`, stored `[a][b]`.
    pub proj: Field,
    pub gbar: Field,
    pub gbar_up: Field,
    pub ii: Field,
    pub h: Field,
    pub iio: Field,
}

/// Tolerance for `s(p) = 0`, relative to `max(1, |ds|)`.
pub const ON_SURFACE_TOL: f64 = 1e-10;

impl SurfaceFields {
    /// Expand everything about `p` with metric and defining-function jets of order `order`.
    pub fn new(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64], order: usize) -> Result<SurfaceFields> {
        let s = hyp.s.eval_jet(p, order)?;
        let geom = Geometry::from_source(metric, p, order)?;
        SurfaceFields::from_parts(geom, s, true)
    }

    /// Build from precomputed jets; `check_surface` enforces `s(p) ≈ 0`.
    pub fn from_parts(geom: Geometry, s: Jet, check_surface: bool) -> Result<SurfaceFields> {
        let d = geom.dim;
        let order = geom.order().min(s.order());
        if order < 2 {
            return Err(Error::InsufficientOrder { what: "second fundamental form", need: 2, have: order });
        }
        let ds = Field::from_fn(d, 1, |i| s.partial(i[0]).expect("order ≥ 1"));
        let grad_scale = ds.comps.iter().map(|j| j.value().abs()).fold(0.0, f64::max);
        if check_surface && s.value().abs() > ON_SURFACE_TOL * grad_scale.max(1.0) {
            return Err(Error::NotOnSurface(s.value()));
        }
        let norm2 = ds.outer(&ds).contract(0, 1, Some(&geom.ginv));
        let norm2 = norm2.scalar_jet();
        if norm2.value().sqrt() < 1e-8 {
            return Err(Error::DegenerateNormal(norm2.value().max(0.0).sqrt()));
        }
        let inv = norm2.powf(-0.5)?;
        let n = ds.mul_scalar(&inv);
        let n_up = n.apply_to_slot(0, &geom.ginv);
        let proj = Field::from_fn(d, 2, |i| {
            let nn = n.get(&[i[0]]) * n_up.get(&[i[1]]);
            let id = if i[0] == i[1] { 1.0 } else { 0.0 };
            (-&nn).add_scalar(id)
        });
        let gbar = geom.g.sub(&n.outer(&n));
        let gbar_up = geom.ginv.sub(&n_up.outer(&n_up));
        let dn = geom.covariant_derivative(&n, &[Down])?;
        let ii = dn.apply_to_slot(0, &proj).apply_to_slot(1, &proj).symmetrize_pair(0, 1);
        let h = ii.contract(0, 1, Some(&geom.ginv)).scale(1.0 / (d as f64 - 1.0));
        let iio = ii.sub(&gbar.mul_scalar(h.scalar_jet()));
        let level = if geom.order() >= 3 { Level::Cotton } else { Level::Weyl };
        let curv = curvature_fields(&geom, level)?;
        Ok(SurfaceFields { geom, curv, s, n, n_up, proj, gbar, gbar_up, ii, h, iio })
    }

    pub fn dim(&self) -> usize {
        self.geom.dim
    }

    fn proj_up(&self) -> Field {
        self.proj.permute(&[1, 0])
    }

    /// Tangential projection of the listed slots.
    pub fn project(&self, t: &Field, variance: &[Variance]) -> Field {
        let up = if variance.contains(&Up) { Some(self.proj_up()) } else { None };
        let mut out = t.clone();
        for (slot, v) in variance.iter().enumerate() {
            out = match v {
                Down => out.apply_to_slot(slot, &self.proj),
                Up => out.apply_to_slot(slot, up.as_ref().expect("built")),
            };
        }
        out
    }

    /// Largest normal component at the expansion point, relative to `max(|t|, 1)`.
    pub fn normal_defect(&self, t: &Field, variance: &[Variance]) -> f64 {
        let size = t.comps.iter().map(|j| j.value().abs()).fold(0.0, f64::max);
        let mut m: f64 = 0.0;
        for (slot, v) in variance.iter().enumerate() {
            let c = match v {
                Down => t.contract_vector(slot, &self.n_up),
                Up => t.contract_vector(slot, &self.n),
            };
            m = m.max(c.comps.iter().map(|j| j.value().abs()).fold(0.0, f64::max));
        }
        m / size.max(1.0)
    }

    /// `∇̄ t`: full projection of `∇` applied to the projected extension (derivative slot first).
    pub fn intrinsic_derivative(&self, t: &Field, variance: &[Variance]) -> Result<Field> {
        let defect = self.normal_defect(t, variance);
        if defect > 1e-9 {
            return Err(Error::NotTangential(defect));
        }
        let pt = self.project(t, variance);
        let dt = self.geom.covariant_derivative(&pt, variance)?;
        let mut var = vec![Down];
        var.extend_from_slice(variance);
        Ok(self.project(&dt, &var))
    }

    /// `W_nabn`.
    pub fn weyl_nn(&self) -> Field {
        self.curv.weyl.contract_vector(0, &self.n_up).contract_vector(2, &self.n_up)
    }

    /// `W_abcn^⊤`.
    pub fn weyl_tangential(&self) -> Field {
        self.project(&self.curv.weyl.contract_vector(3, &self.n_up), &[Down, Down, Down])
    }

    /// `C_n(ab)^⊤`.
    pub fn cotton_normal(&self) -> Result<Field> {
        let c = self.curv.cotton.as_ref().ok_or(Error::InsufficientOrder {
            what: "Cotton tensor",
            need: 3,
            have: self.geom.order(),
        })?;
        Ok(self.project(&c.contract_vector(0, &self.n_up).symmetrize_pair(0, 1), &[Down, Down]))
    }

    /// `IV̊_ab = C_n(ab)^⊤ + H W_nabn − ∇̄^c W_c(ab)n^⊤` (d = 4 only).
    pub fn fourth_form(&self) -> Result<Field> {
        if self.dim() != 4 {
            return Err(Error::UnsupportedDimension { op: "fourth fundamental form", dim: self.dim(), supported: "4" });
        }
        let cn = self.cotton_normal()?;
        let hw = self.weyl_nn().mul_scalar(self.h.scalar_jet());
        let t = self.weyl_tangential();
        let dt = self.intrinsic_derivative(&t, &[Down, Down, Down])?;
        let div = dt.contract(0, 1, Some(&self.gbar_up)).symmetrize_pair(0, 1);
        Ok(cn.add(&hw).sub(&div))
    }

    /// `∇̄^a IV̊_ab`.
    pub fn divergence_fourth_form(&self) -> Result<Field> {
        let iv = self.fourth_form()?;
        if iv.order() == 0 {
            return Err(Error::InsufficientOrder { what: "divergence of the fourth form", need: 4, have: self.geom.order() });
        }
        let d = self.intrinsic_derivative(&iv, &[Down, Down])?;
        Ok(d.contract(0, 1, Some(&self.gbar_up)))
    }

    /// `II̊_a^c II̊_cb`.
    pub fn iio_squared(&self) -> Field {
        let raised = self.iio.apply_to_slot(1, &self.geom.ginv);
        let d = self.dim();
        let order = raised.order().min(self.iio.order());
        Field::from_fn(d, 2, |i| {
            let mut acc = Jet::zero(d, order);
            for c in 0..d {
                acc.add_mul(1.0, raised.get(&[i[0], c]), self.iio.get(&[c, i[1]]));
            }
            acc
        })
    }

    /// Trace-free part with respect to `ḡ` of a tangential symmetric field.
    pub fn tangential_trace_free(&self, t: &Field) -> Field {
        let tr = t.contract(0, 1, Some(&self.gbar_up));
        let k = 1.0 / (self.dim() as f64 - 1.0);
        t.sub(&self.gbar.mul_scalar(&tr.scalar_jet().scale(k)))
    }

    pub fn metric_at_point(&self) -> Result<MetricAtPoint> {
        self.geom.at_point()
    }
}

/// Graph chart `x_axis = q(x')` of `Σ` near the point, with the induced metric
/// expanded in the chart coordinates and its curvature.
#[derive(Debug, Clone)]
pub struct Chart {
    pub axis: usize,
    /// `e_i^a = ∂_i φ^a` at the point.
    pub frame: Vec<Vec<f64>>,
    pub geom: Geometry,
    pub curv: CurvatureFields,
}

impl Chart {
    /// `g` and `s` are jets about a point of `Σ`; `axis` defaults to the largest `|∂s|`.
    pub fn new(g: &Field, s: &Jet, axis: Option<usize>) -> Result<Chart> {
        let d = g.dim;
        if d < 4 {
            return Err(Error::UnsupportedDimension { op: "intrinsic chart curvature", dim: d, supported: "≥ 4" });
        }
        if s.order() < 4 || g.order() < 2 {
            return Err(Error::InsufficientOrder { what: "intrinsic chart", need: 4, have: s.order().min(g.order() + 2) });
        }
        let s = s.truncate(4);
        let axis = axis.unwrap_or_else(|| {
            (0..d)
                .max_by(|&a, &b| {
                    let da = s.partial(a).unwrap().value().abs();
                    let db = s.partial(b).unwrap().value().abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
        });
        let ds_axis = s.partial(axis)?;
        if ds_axis.value().abs() < 1e-8 {
            return Err(Error::DegenerateNormal(ds_axis.value().abs()));
        }
        let m = d - 1;
        let order = s.order();
        let others: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
        let mut offsets: Vec<Jet> = vec![Jet::zero(m, order); d];
        for (i, &a) in others.iter().enumerate() {
            offsets[a] = Jet::variable(m, order, i, 0.0);
        }
        for _ in 0..8 {
            let f = s.substitute(&offsets);
            let df = ds_axis.substitute(&offsets);
            let step = f.div(&df)?;
            offsets[axis] = &offsets[axis] - &step;
        }
        let phi_order = order - 1;
        let offsets: Vec<Jet> = offsets.iter().map(|j| j.truncate(phi_order)).collect();
        // e[i][a] = ∂_i φ^a
        let e: Vec<Vec<Jet>> = (0..m).map(|i| (0..d).map(|a| offsets[a].partial(i).expect("order ≥ 1")).collect()).collect();
        let frame = e.iter().map(|row| row.iter().map(|j| j.value()).collect()).collect();
        let g_sub: Vec<Jet> = g.comps.iter().map(|c| c.truncate(2).substitute(&offsets)).collect();
        let gbar = Field::from_fn(m, 2, |ij| {
            let mut acc = Jet::zero(m, 2);
            for a in 0..d {
                for b in 0..d {
                    let ge = &g_sub[a * d + b] * &e[ij[0]][a];
                    acc.add_mul(1.0, &ge, &e[ij[1]][b]);
                }
            }
            acc
        });
        let geom = Geometry::new(gbar)?;
        let curv = curvature_fields(&geom, Level::Weyl)?;
        Ok(Chart { axis, frame, geom, curv })
    }

    /// Pull back an all-down ambient tensor to chart indices.
    pub fn pullback(&self, t: &TensorValue) -> TensorValue {
        let m = self.frame.len();
        let d = t.dim;
        let rank = t.rank();
        TensorValue::from_fn(m, vec![Down; rank], t.weight, |idx| {
            indices(d, rank)
                .map(|a| {
                    let w: f64 = idx.iter().zip(&a).map(|(&i, &ai)| self.frame[i][ai]).product();
                    w * t.get(&a)
                })
                .sum()
        })
    }

    /// Push an all-down chart tensor forward to ambient (tangential) indices.
    pub fn pushforward(&self, t: &TensorValue, g: &MetricAtPoint) -> TensorValue {
        let m = self.frame.len();
        let d = g.dim();
        let gbar_inv = self.geom.at_point().expect("positive definite").g_inv;
        // eps[i][a] = ḡ^{ij} g_ab e_j^b
        let eps: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..d)
                    .map(|a| {
                        (0..m)
                            .map(|j| gbar_inv.get(&[i, j]) * (0..d).map(|b| g.g.get(&[a, b]) * self.frame[j][b]).sum::<f64>())
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let rank = t.rank();
        TensorValue::from_fn(d, vec![Down; rank], t.weight, |a| {
            indices(m, rank)
                .map(|i| {
                    let w: f64 = i.iter().zip(a).map(|(&ii, &aa)| eps[ii][aa]).product();
                    w * t.get(&i)
                })
                .sum()
        })
    }

    pub fn metric(&self) -> TensorValue {
        self.geom.g.value(vec![Down, Down], 2)
    }

    /// `R̄_ijkl`.
    pub fn riemann(&self) -> TensorValue {
        self.curv.riem.value(vec![Down; 4], 2)
    }

    /// `P̄_ij`.
    pub fn schouten(&self) -> TensorValue {
        self.curv.schouten.value(vec![Down, Down], 0)
    }

    /// Trace-free part with respect to the chart metric.
    pub fn trace_free(&self, t: &TensorValue) -> TensorValue {
        let m = self.frame.len();
        let mp = self.geom.at_point().expect("positive definite");
        t.trace_free_part(&mp, m).expect("symmetric input")
    }
}

/// All hypersurface invariants at a point of `Σ` (down-index representatives).
#[derive(Debug, Clone)]
pub struct ExtrinsicBundle {
    pub n: TensorValue,
    pub n_up: TensorValue,
    pub gbar: TensorValue,
    pub ii: TensorValue,
    pub h: f64,
    pub iio: TensorValue,
    pub fialkow: TensorValue,
    pub weyl_nn: TensorValue,
    pub weyl_tangential: TensorValue,
    pub cotton_normal: TensorValue,
    pub fourth_form: Option<TensorValue>,
    pub div_fourth_form: Option<TensorValue>,
    pub metric: MetricAtPoint,
}

/// Metric/defining-function jet order used by the extrinsic pipelines.
pub const EXTRINSIC_ORDER: usize = 4;

impl ExtrinsicBundle {
    pub fn from_fields(sf: &SurfaceFields) -> Result<ExtrinsicBundle> {
        let d = sf.dim();
        let metric = sf.metric_at_point()?;
        let chart = Chart::new(&sf.geom.g, &sf.s, None)?;
        let fialkow = fialkow_tensor(sf, &chart, &metric)?;
        let (fourth_form, div_fourth_form) = if d == 4 {
            let iv = sf.fourth_form()?;
            let div = if iv.order() >= 1 { Some(sf.divergence_fourth_form()?.value(vec![Down], -3)) } else { None };
            (Some(iv.value(vec![Down, Down], -1)), div)
        } else {
            (None, None)
        };
        Ok(ExtrinsicBundle {
            n: sf.n.value(vec![Down], 1),
            n_up: sf.n_up.value(vec![Up], -1),
            gbar: sf.gbar.value(vec![Down, Down], 2),
            ii: sf.ii.value(vec![Down, Down], 1),
            h: sf.h.scalar_jet().value(),
            iio: sf.iio.value(vec![Down, Down], 1),
            fialkow,
            weyl_nn: sf.weyl_nn().value(vec![Down, Down], 0),
            weyl_tangential: sf.weyl_tangential().value(vec![Down; 3], 1),
            cotton_normal: sf.cotton_normal()?.value(vec![Down, Down], -1),
            fourth_form,
            div_fourth_form,
            metric,
        })
    }
}

/// `F̊ = P^⊤̊ − P̄̊ + H II̊`, computed in the chart and pushed to ambient indices.
pub fn fialkow_tensor(sf: &SurfaceFields, chart: &Chart, metric: &MetricAtPoint) -> Result<TensorValue> {
    let p_amb = sf.curv.schouten.value(vec![Down, Down], 0);
    let p_top = chart.trace_free(&chart.pullback(&p_amb));
    let pbar = chart.trace_free(&chart.schouten());
    let iio = chart.pullback(&sf.iio.value(vec![Down, Down], 1));
    let h = sf.h.scalar_jet().value();
    let f = p_top.sub(&pbar).add(&iio.scale(h));
    let mut out = chart.pushforward(&f, metric);
    out.weight = 0;
    Ok(out)
}

/// Extrinsic bundle at `p` (jets of order [`EXTRINSIC_ORDER`]).
pub fn extrinsic_stack(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64]) -> Result<ExtrinsicBundle> {
    let sf = SurfaceFields::new(metric, hyp, p, EXTRINSIC_ORDER)?;
    ExtrinsicBundle::from_fields(&sf)
}

/// `IV̊` at `p` (d = 4).
pub fn fourth_form(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64]) -> Result<TensorValue> {
    if metric.dim() != 4 {
        return Err(Error::UnsupportedDimension { op: "fourth fundamental form", dim: metric.dim(), supported: "4" });
    }
    let sf = SurfaceFields::new(metric, hyp, p, 3)?;
    Ok(sf.fourth_form()?.value(vec![Down, Down], -1))
}

/// `∇̄^a IV̊_ab` at `p` (d = 4).
pub fn divergence_fourth_form(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64]) -> Result<TensorValue> {
    if metric.dim() != 4 {
        return Err(Error::UnsupportedDimension { op: "fourth fundamental form", dim: metric.dim(), supported: "4" });
    }
    let sf = SurfaceFields::new(metric, hyp, p, 4)?;
    Ok(sf.divergence_fourth_form()?.value(vec![Down], -3))
}

/// Left and right sides of a tensor identity at a point.
#[derive(Debug, Clone)]
pub struct IdentitySides {
    pub lhs: TensorValue,
    pub rhs: TensorValue,
}

impl IdentitySides {
    /// `‖lhs − rhs‖/max(‖lhs‖, ‖rhs‖, 1e−10)`.
    pub fn rel_err(&self) -> f64 {
        self.lhs.sub(&self.rhs).norm() / self.lhs.norm().max(self.rhs.norm()).max(1e-10)
    }
}

/// Gauss: `R̄_ijkl` against the pullback of `R_abcd + II_ac II_bd − II_ad II_bc`.
pub fn gauss_identity(sf: &SurfaceFields, chart: &Chart) -> IdentitySides {
    let r = sf.curv.riem.value(vec![Down; 4], 2);
    let ii = sf.ii.value(vec![Down, Down], 1);
    let amb = TensorValue::from_fn(sf.dim(), vec![Down; 4], 2, |i| {
        r.get(i) + ii.get(&[i[0], i[2]]) * ii.get(&[i[1], i[3]]) - ii.get(&[i[0], i[3]]) * ii.get(&[i[1], i[2]])
    });
    IdentitySides { lhs: chart.riemann(), rhs: chart.pullback(&amb) }
}

/// Trace-free Fialkow–Gauss: `(II̊²)_(ab)∘ − W_nabn = (d−3) F̊_ab`.
pub fn fialkow_identity(sf: &SurfaceFields, chart: &Chart) -> Result<IdentitySides> {
    let d = sf.dim() as f64;
    let x = sf.iio_squared().symmetrize_pair(0, 1).sub(&sf.weyl_nn());
    let lhs = sf.tangential_trace_free(&x).value(vec![Down, Down], 0);
    let metric = sf.metric_at_point()?;
    let rhs = fialkow_tensor(sf, chart, &metric)?.scale(d - 3.0);
    Ok(IdentitySides { lhs, rhs })
}

/// Trace-free Codazzi: `W_abcn^⊤` against the `∇̄ II̊` combination.
pub fn codazzi_identity(sf: &SurfaceFields) -> Result<IdentitySides> {
    let d = sf.dim();
    let dii = sf.intrinsic_derivative(&sf.iio, &[Down, Down])?; // [a][b][c] = ∇̄_a II̊_bc
    let div = dii.contract(0, 1, Some(&sf.gbar_up)); // [a] = ∇̄^c II̊_ca
    let gbar = &sf.gbar;
    let k = 1.0 / (d as f64 - 2.0);
    let rhs = Field::from_fn(d, 3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let mut x = dii.get(&[a, b, c]) - dii.get(&[b, a, c]);
        x.add_mul(k, gbar.get(&[b, c]), div.get(&[a]));
        x.add_mul(-k, gbar.get(&[a, c]), div.get(&[b]));
        x
    });
    Ok(IdentitySides { lhs: sf.weyl_tangential().value(vec![Down; 3], 1), rhs: rhs.value(vec![Down; 3], 1) })
}

/// `C_ann = −(1/(d−3)) ∇̄^d W_nadn + (1/(d−3)) II̊^{bd} W_ndab^⊤`.
pub fn cotton_nn_identity(sf: &SurfaceFields) -> Result<IdentitySides> {
    let d = sf.dim();
    let c = sf.curv.cotton.as_ref().ok_or(Error::InsufficientOrder { what: "Cotton tensor", need: 3, have: sf.geom.order() })?;
    let lhs = c.contract_vector(1, &sf.n_up).contract_vector(1, &sf.n_up);
    let wnn = sf.weyl_nn(); // [a][d] = W_nadn
    let dw = sf.intrinsic_derivative(&wnn, &[Down, Down])?; // [e][a][d]
    let div = dw.contract(0, 2, Some(&sf.gbar_up)); // [a]
    let wn = sf.project(&sf.curv.weyl.contract_vector(0, &sf.n_up), &[Down, Down, Down]); // [d][a][b] = W_ndab^⊤
    let iio_up = sf.iio.apply_to_slot(0, &sf.geom.ginv).apply_to_slot(1, &sf.geom.ginv);
    let order = wn.order().min(iio_up.order());
    let k = 1.0 / (d as f64 - 3.0);
    let rhs = Field::from_fn(d, 1, |i| {
        let a = i[0];
        let mut acc = div.get(&[a]).scale(-k).truncate(order);
        for b in 0..d {
            for e in 0..d {
                acc.add_mul(k, iio_up.get(&[b, e]), wn.get(&[e, a, b]));
            }
        }
        acc
    });
    Ok(IdentitySides { lhs: lhs.value(vec![Down], 0), rhs: rhs.value(vec![Down], 0) })
}

/// Quadrature rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    gauss_quad::GaussLegendre::new(n).expect("node count ≥ 2").into_node_weight_pairs()
}

/// `∫ II̊^{ab} F̊_ab dV_ḡ` over the graph patch `x_d = q(x')`, `x' ∈ box`, `d = 4`.
///
/// `lower`/`upper` bound the first `d−1` coordinates; nodes are placed on `Σ`
/// by Newton iteration on `s` along the last axis.
pub fn pairing_integral(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    lower: &[f64],
    upper: &[f64],
    nodes: usize,
) -> Result<f64> {
    let d = metric.dim();
    if d != 4 {
        return Err(Error::UnsupportedDimension { op: "pairing integral", dim: d, supported: "4" });
    }
    let rule = gauss_legendre(nodes);
    let m = d - 1;
    let mut total = 0.0;
    for k in indices(nodes, m) {
        let mut x = vec![0.0; d];
        let mut w = 1.0;
        for i in 0..m {
            let (node, weight) = rule[k[i]];
            let half = 0.5 * (upper[i] - lower[i]);
            x[i] = lower[i] + half * (node + 1.0);
            w *= weight * half;
        }
        x[d - 1] = locate_on_surface(hyp, &x, d - 1)?;
        let sf = SurfaceFields::new(metric, hyp, &x, 4)?;
        let mp = sf.metric_at_point()?;
        let chart = Chart::new(&sf.geom.g, &sf.s, Some(d - 1))?;
        let f = fialkow_tensor(&sf, &chart, &mp)?;
        let iio = sf.iio.value(vec![Down, Down], 1).raise(0, &mp).raise(1, &mp);
        let pairing: f64 = iio.entries.iter().zip(&f.entries).map(|(a, b)| a * b).sum();
        let area = chart.geom.at_point()?;
        let det = nalgebra::DMatrix::from_fn(m, m, |i, j| area.g.get(&[i, j])).determinant();
        total += w * pairing * det.sqrt();
    }
    Ok(total)
}

/// Solve `s(x) = 0` for coordinate `axis` starting from `x[axis]`.
pub fn locate_on_surface(hyp: &HypersurfaceSpec, x: &[f64], axis: usize) -> Result<f64> {
    let mut y = x.to_vec();
    for _ in 0..50 {
        let j = hyp.s.eval_jet(&y, 1)?;
        let ds = j.partial(axis)?.value();
        if ds.abs() < 1e-12 {
            return Err(Error::DegenerateNormal(ds.abs()));
        }
        let step = j.value() / ds;
        y[axis] -= step;
        if step.abs() < 1e-15 * (1.0 + y[axis].abs()) {
            break;
        }
    }
    let residual = hyp.s.eval(&y)?;
    if residual.abs() > 1e-12 {
        return Err(Error::NotOnSurface(residual));
    }
    Ok(y[axis])
}
