//! Standard tractors in a chosen scale: the `(τ⁺, τ^a, τ⁻)` splitting, tractor
//! metric, change of scale, tractor connection, Thomas-D on densities, the normal
//! tractor, the splitting operator `q`, and the hypersurface operators `δ_R`, `δ⁽¹⁾`.
//!
//! Pairing convention: `h(T, U) = g_ab τ^a υ^b + τ⁺υ⁻ + τ⁻υ⁺`, so `X = (0, 0, 1)`.

use crate::curvature::Geometry;
use crate::error::{Error, Result};
use crate::hypersurface::{ExtrinsicBundle, SurfaceFields};
use crate::jets::Jet;
use crate::tensor::{Down, Field, MetricAtPoint, TensorValue, Up, Variance};

/// Identifies the metric representative a tractor's components live in.
pub type ScaleTag = u64;

/// Tractor components at a point: `τ⁺` (Y slot), `τ^a` (Z slot, up index), `τ⁻` (X slot).
#[derive(Debug, Clone, PartialEq)]
pub struct TractorValue {
    pub weight: i32,
    pub scale: ScaleTag,
    pub plus: f64,
    pub mid: Vec<f64>,
    pub minus: f64,
}

impl TractorValue {
    pub fn new(weight: i32, scale: ScaleTag, plus: f64, mid: Vec<f64>, minus: f64) -> TractorValue {
        TractorValue { weight, scale, plus, mid, minus }
    }

    pub fn dim(&self) -> usize {
        self.mid.len()
    }

    /// The canonical tractor `X`.
    pub fn x(dim: usize, scale: ScaleTag) -> TractorValue {
        TractorValue::new(1, scale, 0.0, vec![0.0; dim], 1.0)
    }

    /// `Y` in the given scale.
    pub fn y(dim: usize, scale: ScaleTag) -> TractorValue {
        TractorValue::new(-1, scale, 1.0, vec![0.0; dim], 0.0)
    }

    /// `Z^A_b` contracted with the vector `v^b`.
    pub fn z(v: &[f64], scale: ScaleTag) -> TractorValue {
        TractorValue::new(0, scale, 0.0, v.to_vec(), 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.mid.iter().fold(self.plus.abs().max(self.minus.abs()), |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &TractorValue) -> TractorValue {
        TractorValue {
            weight: self.weight,
            scale: self.scale,
            plus: self.plus - other.plus,
            mid: self.mid.iter().zip(&other.mid).map(|(a, b)| a - b).collect(),
            minus: self.minus - other.minus,
        }
    }

    /// Components in the scale `ĝ = Ω²g`, where `upsilon = d log Ω` (down) at the point.
    pub fn rescale(&self, g: &MetricAtPoint, omega: f64, upsilon: &[f64], to: ScaleTag) -> TractorValue {
        let d = self.dim();
        let up: Vec<f64> = (0..d).map(|a| (0..d).map(|b| g.g_inv.get(&[a, b]) * upsilon[b]).sum()).collect();
        let norm2: f64 = up.iter().zip(upsilon).map(|(a, b)| a * b).sum();
        let dot: f64 = self.mid.iter().zip(upsilon).map(|(a, b)| a * b).sum();
        let w = omega.powi(self.weight);
        TractorValue {
            weight: self.weight,
            scale: to,
            plus: w * omega * self.plus,
            mid: (0..d).map(|a| w / omega * (self.mid[a] + up[a] * self.plus)).collect(),
            minus: w / omega * (self.minus - dot - 0.5 * norm2 * self.plus),
        }
    }
}

/// `h(T, U)`; both must live in the same scale.
pub fn tractor_metric_pair(t: &TractorValue, u: &TractorValue, g: &MetricAtPoint) -> Result<f64> {
    if t.scale != u.scale {
        return Err(Error::Mismatch(format!("tractor scales {} and {}", t.scale, u.scale)));
    }
    if t.dim() != u.dim() || t.dim() != g.dim() {
        return Err(Error::Mismatch(format!("tractor dimensions {} and {}", t.dim(), u.dim())));
    }
    let d = t.dim();
    let mut acc = t.plus * u.minus + t.minus * u.plus;
    for a in 0..d {
        for b in 0..d {
            acc += g.g.get(&[a, b]) * t.mid[a] * u.mid[b];
        }
    }
    Ok(acc)
}

/// Tractor field given by component jets.
#[derive(Debug, Clone)]
pub struct TractorField {
    pub weight: i32,
    pub plus: Jet,
    /// Rank-1 field, up index.
    pub mid: Field,
    pub minus: Jet,
}

impl TractorField {
    pub fn dim(&self) -> usize {
        self.mid.dim
    }

    pub fn order(&self) -> usize {
        self.plus.order().min(self.mid.order()).min(self.minus.order())
    }

    pub fn value(&self, scale: ScaleTag) -> TractorValue {
        TractorValue {
            weight: self.weight,
            scale,
            plus: self.plus.value(),
            mid: self.mid.comps.iter().map(|j| j.value()).collect(),
            minus: self.minus.value(),
        }
    }
}

/// `h(T, U)` as a jet, with `g_ab` given as jets.
pub fn pair_fields(t: &TractorField, u: &TractorField, g: &Field) -> Jet {
    let d = t.dim();
    let mut acc = &t.plus * &u.minus;
    acc.add_mul(1.0, &t.minus, &u.plus);
    for a in 0..d {
        let ga = g.get(&[a, 0]).mul_jet(t.mid.get(&[0]));
        let mut row = ga;
        for b in 1..d {
            row.add_mul(1.0, g.get(&[a, b]), t.mid.get(&[b]));
        }
        acc.add_mul(1.0, &row, u.mid.get(&[a]));
    }
    acc
}

/// `∇^T_a T` for every direction `a`: entry `a` of the result is the tractor
/// `(∇_aτ⁺ − g_acτ^c, ∇_aτ^b + δ_a^bτ⁻ + P_a^bτ⁺, ∇_aτ⁻ − P_abτ^b)`.
pub fn tractor_connection_derivative(t: &TractorField, geom: &Geometry, schouten: &Field) -> Result<Vec<TractorField>> {
    let d = geom.dim;
    if t.order() == 0 {
        return Err(Error::InsufficientOrder { what: "tractor connection", need: 1, have: 0 });
    }
    let dmid = geom.covariant_derivative(&t.mid, &[Up])?; // [a][b]
    let p_mixed = geom.raise(schouten, 1); // P_a^b
    let lowered = geom.lower(&t.mid, 0); // τ_c
    let mut out = Vec::with_capacity(d);
    for a in 0..d {
        let plus = &t.plus.partial(a)? - lowered.get(&[a]);
        let mid = Field::from_fn(d, 1, |b| {
            let mut x = dmid.get(&[a, b[0]]).clone();
            if a == b[0] {
                x = &x + &t.minus;
            }
            x.add_mul(1.0, p_mixed.get(&[a, b[0]]), &t.plus);
            x
        });
        let mut minus = t.minus.partial(a)?;
        for b in 0..d {
            minus.add_mul(-1.0, schouten.get(&[a, b]), t.mid.get(&[b]));
        }
        out.push(TractorField { weight: t.weight, plus, mid, minus });
    }
    Ok(out)
}

/// Thomas-D of a weight-`w` density: `((d+2w−2)wσ, (d+2w−2)∇^bσ, −(Δσ + wJσ))`, weight `w−1`.
pub fn thomas_d(sigma: &Jet, w: i32, geom: &Geometry, j: &Jet) -> Result<TractorField> {
    let d = geom.dim as f64;
    if sigma.order() < 2 {
        return Err(Error::InsufficientOrder { what: "Thomas-D", need: 2, have: sigma.order() });
    }
    let wf = w as f64;
    let c = d + 2.0 * wf - 2.0;
    let f = Field::scalar(sigma.clone());
    let df = geom.covariant_derivative(&f, &[])?;
    let grad = geom.raise(&df, 0);
    let lap = geom.laplacian(&f)?;
    let mut minus = lap.scalar_jet().clone();
    minus.add_mul(wf, j, sigma);
    Ok(TractorField { weight: w - 1, plus: sigma.scale(c * wf), mid: grad.scale(c), minus: minus.scale(-1.0) })
}

/// `I = Dσ/d` for a weight-1 density.
pub fn scale_tractor(sigma: &Jet, geom: &Geometry, j: &Jet) -> Result<TractorField> {
    let t = thomas_d(sigma, 1, geom, j)?;
    let k = 1.0 / geom.dim as f64;
    Ok(TractorField { weight: 0, plus: t.plus.scale(k), mid: t.mid.scale(k), minus: t.minus.scale(k) })
}

/// `N = (0, n^a, −H)`.
pub fn normal_tractor(b: &ExtrinsicBundle, scale: ScaleTag) -> TractorValue {
    TractorValue::new(0, scale, 0.0, b.n_up.entries.clone(), -b.h)
}

/// Block form of `q_AB(t) = Z_A^a Z_B^b t_ab + X_(A Z_B)^b c_b + X_A X_B e`.
#[derive(Debug, Clone)]
pub struct SplitTractor {
    pub weight: i32,
    /// `t_ab`.
    pub zz: TensorValue,
    /// `c_b = −(2/(d+w)) ∇^a t_ab`, coefficient of the symmetrized `X_(A Z_B)^b`.
    pub xz: TensorValue,
    /// `e = (∇^a∇^b t_ab + (d+w) P^ab t_ab)/((d+w)(d+w−1))`.
    pub xx: f64,
}

impl SplitTractor {
    /// `q_AB U^A V^B`, using `X_A U^A = u⁺`, `Z_A^a U^A = u^a`.
    pub fn bilinear(&self, u: &TractorValue, v: &TractorValue) -> f64 {
        let d = self.zz.dim;
        let mut acc = self.xx * u.plus * v.plus;
        for b in 0..d {
            acc += 0.5 * self.xz.get(&[b]) * (u.plus * v.mid[b] + v.plus * u.mid[b]);
            for a in 0..d {
                acc += self.zz.get(&[a, b]) * u.mid[a] * v.mid[b];
            }
        }
        acc
    }

    /// Largest `|X^A q_AB V^B|` over a basis of `V`.
    pub fn x_contraction_defect(&self) -> f64 {
        let d = self.zz.dim;
        let x = TractorValue::x(d, 0);
        basis(d).iter().map(|v| self.bilinear(&x, v).abs()).fold(0.0, f64::max)
    }

    /// `Z^A_a Z^B_b q_AB`, the left inverse of `q`.
    pub fn readback(&self) -> TensorValue {
        let d = self.zz.dim;
        TensorValue::from_fn(d, vec![Down, Down], self.zz.weight, |i| {
            let mut ea = vec![0.0; d];
            ea[i[0]] = 1.0;
            let mut eb = vec![0.0; d];
            eb[i[1]] = 1.0;
            self.bilinear(&TractorValue::z(&ea, 0), &TractorValue::z(&eb, 0))
        })
    }
}

fn basis(d: usize) -> Vec<TractorValue> {
    let mut out = vec![TractorValue::new(0, 0, 1.0, vec![0.0; d], 0.0), TractorValue::new(0, 0, 0.0, vec![0.0; d], 1.0)];
    for a in 0..d {
        let mut v = vec![0.0; d];
        v[a] = 1.0;
        out.push(TractorValue::z(&v, 0));
    }
    out
}

/// Splitting operator on a symmetric trace-free field `t_ab` of tractor weight `w`.
pub fn q_splitting(t: &Field, w: i32, geom: &Geometry, schouten: &Field) -> Result<SplitTractor> {
    let d = geom.dim;
    let dw = d as f64 + w as f64;
    if dw == 0.0 || dw == 1.0 {
        return Err(Error::WeightDegenerate { dim: d, weight: w });
    }
    let m = geom.at_point()?;
    let tv = t.value(vec![Down, Down], w + 2);
    if tv.symmetry_defect() > 1e-12 * tv.max_abs().max(1.0) {
        return Err(crate::tensor::TensorError::NotSymmetric(tv.symmetry_defect()).into());
    }
    let tr = tv.trace(0, 1, &m).value();
    if tr.abs() > 1e-10 * tv.max_abs().max(1.0) {
        return Err(Error::NotTraceFree(tr));
    }
    if t.order() < 2 {
        return Err(Error::InsufficientOrder { what: "splitting operator", need: 2, have: t.order() });
    }
    let dt = geom.covariant_derivative(t, &[Down, Down])?; // [c][a][b]
    let div = dt.contract(0, 1, Some(&geom.ginv)); // [b]
    let ddt = geom.covariant_derivative(&div, &[Down])?; // [e][b]
    let ddiv = ddt.contract(0, 1, Some(&geom.ginv)).scalar_jet().value();
    let p_up = geom.raise(&geom.raise(schouten, 0), 1).value(vec![Up, Up], 0);
    let ptt: f64 = p_up.entries.iter().zip(&tv.entries).map(|(a, b)| a * b).sum();
    Ok(SplitTractor {
        weight: w,
        zz: tv,
        xz: div.value(vec![Down], w).scale(-2.0 / dw),
        xx: (ddiv + dw * ptt) / (dw * (dw - 1.0)),
    })
}

/// `δ_R T = ∇_n T − wH T` at the expansion point.
pub fn delta_r(t: &Field, variance: &[Variance], w: i32, sf: &SurfaceFields) -> Result<TensorValue> {
    let dt = sf.geom.covariant_derivative(t, variance)?;
    let dn = dt.contract_vector(0, &sf.n_up);
    let h = sf.h.scalar_jet().value();
    let vals = dn.value(variance.to_vec(), w - 1);
    let tv = t.value(variance.to_vec(), w);
    Ok(vals.sub(&tv.scale(w as f64 * h)))
}

/// `δ⁽¹⁾u_ab = ⊤̊[∇_n u_ab − 2∇̄_(a u_{n b)∘}^⊤]` for symmetric trace-free `u` (weight 2).
pub fn delta1_tracefree(u: &Field, sf: &SurfaceFields) -> Result<TensorValue> {
    let m = sf.metric_at_point()?;
    let uv = u.value(vec![Down, Down], 2);
    let tr = uv.trace(0, 1, &m).value();
    if tr.abs() > 1e-10 * uv.max_abs().max(1.0) {
        return Err(Error::NotTraceFree(tr));
    }
    let du = sf.geom.covariant_derivative(u, &[Down, Down])?;
    let dn = du.contract_vector(0, &sf.n_up);
    let un = sf.project(&u.contract_vector(0, &sf.n_up), &[Down]);
    let dun = sf.intrinsic_derivative(&un, &[Down])?.symmetrize_pair(0, 1);
    let x = dn.truncate(0).sub(&dun.truncate(0).scale(2.0));
    let out = sf.tangential_trace_free(&sf.project(&x, &[Down, Down]).truncate(0));
    Ok(out.value(vec![Down, Down], 1))
}
