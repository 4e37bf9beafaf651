//! Levi-Civita connection and the curvature stack: Riemann, Ricci, scalar,
//! Schouten, Weyl, Cotton and Bach tensors, as jet fields and as pointwise bundles.
//!
//! Conventions: `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`,
//! `Ric_bd = R^a_bad` (positive on spheres), `R_abcd = g_ae R^e_bcd`,
//! `P = (Ric − Sc g/(2(d−1)))/(d−2)`, `J = g^ab P_ab`,
//! `R_abcd = W_abcd + g_ac P_bd − g_bc P_ad − g_ad P_bc + g_bd P_ac`,
//! `C_abc = ∇_a P_bc − ∇_b P_ac`, `B_ab = ∇^c C_cab + P^cd W_acbd`, `Δ = g^ab ∇_a ∇_b`.

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::metric::{inverse, MetricSource};
use crate::tensor::{indices, Down, Field, MetricAtPoint, TensorValue, Up, Variance};

/// Metric jets at a point with inverse and Christoffel symbols.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub dim: usize,
    pub g: Field,
    pub ginv: Field,
    /// `Γ^a_bc`.
    pub gamma: Field,
}

impl Geometry {
    pub fn new(g: Field) -> Result<Geometry> {
        let d = g.dim;
        if g.order() < 1 {
            return Err(Error::InsufficientOrder { what: "Christoffel symbols", need: 1, have: g.order() });
        }
        let ginv = inverse(&g)?;
        // dg[e][b][c] = ∂_e g_bc
        let dg = Field::from_fn(d, 3, |i| g.get(&[i[1], i[2]]).partial(i[0]).expect("order ≥ 1"));
        let order = dg.order();
        let first = Field::from_fn(d, 3, |i| {
            let (e, b, c) = (i[0], i[1], i[2]);
            (&(dg.get(&[b, e, c]) + dg.get(&[c, e, b])) - dg.get(&[e, b, c])).scale(0.5)
        });
        let gamma = Field::from_fn(d, 3, |i| {
            let mut acc = Jet::zero(d, order);
            for e in 0..d {
                acc.add_mul(1.0, ginv.get(&[i[0], e]), first.get(&[e, i[1], i[2]]));
            }
            acc
        });
        Ok(Geometry { dim: d, g, ginv, gamma })
    }

    pub fn from_source(src: &dyn MetricSource, p: &[f64], order: usize) -> Result<Geometry> {
        Geometry::new(src.metric_jets(p, order)?)
    }

    /// Order of the metric jets.
    pub fn order(&self) -> usize {
        self.g.order()
    }

    pub fn at_point(&self) -> Result<MetricAtPoint> {
        Ok(MetricAtPoint::from_jets(&self.g)?)
    }

    /// `∇_c T_{...}` with the derivative index in slot 0.
    pub fn covariant_derivative(&self, t: &Field, variance: &[Variance]) -> Result<Field> {
        let d = self.dim;
        assert_eq!(variance.len(), t.rank);
        if t.order() == 0 {
            return Err(Error::InsufficientOrder { what: "covariant derivative", need: 1, have: 0 });
        }
        let partials: Vec<Vec<Jet>> =
            t.comps.iter().map(|j| (0..d).map(|c| j.partial(c).expect("order ≥ 1")).collect()).collect();
        let order = (t.order() - 1).min(self.gamma.order());
        Ok(Field::from_fn(d, t.rank + 1, |idx| {
            let c = idx[0];
            let rest = &idx[1..];
            let mut acc = partials[crate::tensor::flat(d, rest)][c].truncate(order);
            let mut j = rest.to_vec();
            for (slot, v) in variance.iter().enumerate() {
                let a = rest[slot];
                for e in 0..d {
                    j[slot] = e;
                    let tv = t.get(&j);
                    match v {
                        Down => acc.add_mul(-1.0, self.gamma.get(&[e, c, a]), tv),
                        Up => acc.add_mul(1.0, self.gamma.get(&[a, c, e]), tv),
                    }
                }
                j[slot] = a;
            }
            acc
        }))
    }

    /// Raise slot `slot` of a field with `g^{ab}`.
    pub fn raise(&self, t: &Field, slot: usize) -> Field {
        t.apply_to_slot(slot, &self.ginv)
    }

    pub fn lower(&self, t: &Field, slot: usize) -> Field {
        t.apply_to_slot(slot, &self.g)
    }

    /// `Δf = g^{ab}∇_a∇_b f` for a scalar field.
    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        let df = self.covariant_derivative(f, &[])?;
        let ddf = self.covariant_derivative(&df, &[Down])?;
        Ok(ddf.contract(0, 1, Some(&self.ginv)))
    }
}

/// How far up the curvature stack to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Weyl,
    Cotton,
    Bach,
}

impl Level {
    pub fn metric_order(self) -> usize {
        match self {
            Level::Weyl => 2,
            Level::Cotton => 3,
            Level::Bach => 4,
        }
    }
}

/// Curvature tensors as jet fields about the expansion point.
#[derive(Debug, Clone)]
pub struct CurvatureFields {
    /// `R^a_bcd`.
    pub riem_up: Field,
    /// `R_abcd`.
    pub riem: Field,
    pub ric: Field,
    pub sc: Field,
    pub schouten: Field,
    pub j: Field,
    pub weyl: Field,
    pub cotton: Option<Field>,
    pub bach: Option<Field>,
}

/// `R^a_bcd` with c < d computed once and antisymmetry filling the rest.
pub fn riemann_up(geom: &Geometry) -> Result<Field> {
    let d = geom.dim;
    let gam = &geom.gamma;
    if gam.order() == 0 {
        return Err(Error::InsufficientOrder { what: "Riemann tensor", need: 2, have: geom.order() });
    }
    let dgam: Vec<Vec<Jet>> =
        gam.comps.iter().map(|j| (0..d).map(|c| j.partial(c).expect("order ≥ 1")).collect()).collect();
    let dg = |a: usize, b: usize, c: usize, dir: usize| &dgam[crate::tensor::flat(d, &[a, b, c])][dir];
    let order = gam.order() - 1;
    let mut comps = vec![Jet::zero(d, order); d * d * d * d];
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in (c + 1)..d {
                    let dd = e;
                    let mut acc = dg(a, dd, b, c) - dg(a, c, b, dd);
                    for f in 0..d {
                        acc.add_mul(1.0, gam.get(&[a, c, f]), gam.get(&[f, dd, b]));
                        acc.add_mul(-1.0, gam.get(&[a, dd, f]), gam.get(&[f, c, b]));
                    }
                    comps[crate::tensor::flat(d, &[a, b, dd, c])] = -&acc;
                    comps[crate::tensor::flat(d, &[a, b, c, dd])] = acc;
                }
            }
        }
    }
    Ok(Field { dim: d, rank: 4, comps })
}

/// `Ric_bd = R^a_bad` for a given `R^a_bcd`.
pub fn ricci(riem_up: &Field) -> Field {
    riem_up.contract(0, 2, None)
}

/// Schouten tensor and its trace from Ricci and the inverse metric.
pub fn schouten(geom: &Geometry, ric: &Field) -> (Field, Field, Field) {
    let d = geom.dim as f64;
    let sc = ric.contract(0, 1, Some(&geom.ginv));
    let s = sc.scalar_jet();
    let p = Field::from_fn(geom.dim, 2, |i| {
        let mut x = ric.get(i).clone();
        x.add_mul(-1.0 / (2.0 * (d - 1.0)), s, geom.g.get(i));
        x.scale(1.0 / (d - 2.0))
    });
    let j = Field::scalar(s.scale(1.0 / (2.0 * (d - 1.0))));
    (sc, p, j)
}

/// `g ∧ P` part of the Riemann decomposition.
pub fn kulkarni_nomizu(g: &Field, p: &Field) -> Field {
    Field::from_fn(g.dim, 4, |i| {
        let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
        let order = g.order().min(p.order());
        let mut acc = Jet::zero(g.dim, order);
        acc.add_mul(1.0, g.get(&[a, c]), p.get(&[b, e]));
        acc.add_mul(-1.0, g.get(&[b, c]), p.get(&[a, e]));
        acc.add_mul(-1.0, g.get(&[a, e]), p.get(&[b, c]));
        acc.add_mul(1.0, g.get(&[b, e]), p.get(&[a, c]));
        acc
    })
}

pub fn curvature_fields(geom: &Geometry, level: Level) -> Result<CurvatureFields> {
    let have = geom.order();
    if have < level.metric_order() {
        return Err(Error::InsufficientOrder { what: "curvature stack", need: level.metric_order(), have });
    }
    if geom.dim < 3 {
        return Err(Error::UnsupportedDimension { op: "curvature stack", dim: geom.dim, supported: "3..=6" });
    }
    let riem_up = riemann_up(geom)?;
    let riem = geom.lower(&riem_up, 0);
    let ric = ricci(&riem_up);
    let (sc, p, j) = schouten(geom, &ric);
    let weyl = riem.sub(&kulkarni_nomizu(&geom.g, &p));
    let mut cotton = None;
    let mut bach = None;
    if level >= Level::Cotton {
        let c = cotton_from(geom, &p)?;
        if level >= Level::Bach {
            bach = Some(bach_from_cotton(geom, &c, &p, &weyl)?);
        }
        cotton = Some(c);
    }
    Ok(CurvatureFields { riem_up, riem, ric, sc, schouten: p, j, weyl, cotton, bach })
}

/// `C_abc = ∇_a P_bc − ∇_b P_ac`.
pub fn cotton_from(geom: &Geometry, p: &Field) -> Result<Field> {
    let dp = geom.covariant_derivative(p, &[Down, Down])?;
    Ok(Field::from_fn(geom.dim, 3, |i| dp.get(&[i[0], i[1], i[2]]) - dp.get(&[i[1], i[0], i[2]])))
}

/// `P^cd W_acbd`.
fn p_weyl(geom: &Geometry, p: &Field, w: &Field) -> Field {
    let pu = geom.raise(&geom.raise(p, 0), 1);
    let d = geom.dim;
    let order = pu.order().min(w.order());
    Field::from_fn(d, 2, |i| {
        let mut acc = Jet::zero(d, order);
        for c in 0..d {
            for e in 0..d {
                acc.add_mul(1.0, pu.get(&[c, e]), w.get(&[i[0], c, i[1], e]));
            }
        }
        acc
    })
}

/// `B_ab = ∇^c C_cab + P^cd W_acbd`.
pub fn bach_from_cotton(geom: &Geometry, c: &Field, p: &Field, w: &Field) -> Result<Field> {
    let dc = geom.covariant_derivative(c, &[Down, Down, Down])?;
    let div = dc.contract(0, 1, Some(&geom.ginv));
    let pw = p_weyl(geom, p, w);
    Ok(div.add(&pw.truncate(div.order())))
}

/// `B_ab = ΔP_ab − ∇^c∇_a P_bc + P^cd W_acbd`.
pub fn bach_from_schouten(geom: &Geometry, p: &Field, w: &Field) -> Result<Field> {
    let dp = geom.covariant_derivative(p, &[Down, Down])?;
    let ddp = geom.covariant_derivative(&dp, &[Down, Down, Down])?;
    let lap = ddp.contract(0, 1, Some(&geom.ginv));
    // ∇^c∇_a P_bc: slots (e, a, b, c) contracted on e, c.
    let mixed = ddp.contract(0, 3, Some(&geom.ginv));
    let pw = p_weyl(geom, p, w);
    Ok(lap.sub(&mixed).add(&pw.truncate(lap.order())))
}

/// `(1/(d−3)) ∇^e W_ecab`, the Weyl-divergence form of the Cotton tensor (d ≥ 4).
pub fn cotton_from_weyl(geom: &Geometry, w: &Field) -> Result<Field> {
    let d = geom.dim;
    if d < 4 {
        return Err(Error::UnsupportedDimension { op: "Cotton from Weyl", dim: d, supported: "≥ 4" });
    }
    let dw = geom.covariant_derivative(w, &[Down, Down, Down, Down])?;
    // div[c][a][b] = g^{fe} ∇_f W_ecab
    let div = dw.contract(0, 1, Some(&geom.ginv));
    Ok(Field::from_fn(d, 3, |i| div.get(&[i[2], i[0], i[1]]).scale(1.0 / (d as f64 - 3.0))))
}

/// All curvature tensors at a point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub gamma: TensorValue,
    pub riem: TensorValue,
    pub ric: TensorValue,
    pub sc: f64,
    pub schouten: TensorValue,
    pub j: f64,
    pub schouten_tf: TensorValue,
    pub weyl: TensorValue,
    pub cotton: Option<TensorValue>,
    pub bach: Option<TensorValue>,
    pub metric: MetricAtPoint,
}

impl CurvatureBundle {
    pub fn from_fields(geom: &Geometry, f: &CurvatureFields) -> Result<CurvatureBundle> {
        let d = geom.dim;
        let metric = geom.at_point()?;
        let schouten = f.schouten.value(vec![Down, Down], 0);
        let schouten_tf = schouten.trace_free_part(&metric, d)?;
        Ok(CurvatureBundle {
            gamma: geom.gamma.value(vec![Up, Down, Down], 0),
            riem: f.riem.value(vec![Down; 4], 2),
            ric: f.ric.value(vec![Down, Down], 0),
            sc: f.sc.scalar_jet().value(),
            schouten,
            j: f.j.scalar_jet().value(),
            schouten_tf,
            weyl: f.weyl.value(vec![Down; 4], 2),
            cotton: f.cotton.as_ref().map(|c| c.value(vec![Down; 3], 0)),
            bach: f.bach.as_ref().map(|b| b.value(vec![Down, Down], 2 - d as i32)),
            metric,
        })
    }
}

/// Curvature stack at `p`; Bach requires fourth metric derivatives.
pub fn curvature_stack(metric: &dyn MetricSource, p: &[f64], need_b: bool) -> Result<CurvatureBundle> {
    let level = if need_b { Level::Bach } else { Level::Cotton };
    let geom = Geometry::from_source(metric, p, level.metric_order())?;
    let fields = curvature_fields(&geom, level)?;
    CurvatureBundle::from_fields(&geom, &fields)
}

/// Maximum deviation from the Riemann pair symmetries and first Bianchi identity, relative to |R|.
pub fn riemann_symmetry_defect(r: &TensorValue) -> f64 {
    let d = r.dim;
    let scale = r.max_abs().max(1e-300);
    let mut m: f64 = 0.0;
    for i in indices(d, 4) {
        let (a, b, c, e) = (i[0], i[1], i[2], i[3]);
        let v = r.get(&i);
        m = m.max((v + r.get(&[b, a, c, e])).abs());
        m = m.max((v + r.get(&[a, b, e, c])).abs());
        m = m.max((v - r.get(&[c, e, a, b])).abs());
        m = m.max((v + r.get(&[b, c, a, e]) + r.get(&[c, a, b, e])).abs());
    }
    if r.max_abs() == 0.0 {
        0.0
    } else {
        m / scale
    }
}

/// Largest metric trace of a rank-4 tensor, relative to its size.
pub fn weyl_trace_defect(w: &TensorValue, m: &MetricAtPoint) -> f64 {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let scale = w.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    pairs.iter().map(|&(a, b)| w.trace(a, b, m).max_abs()).fold(0.0, f64::max) / scale
}
