//! Formal singular Yamabe expansion about a boundary point.
//!
//! Starting from `σ₀ ∝ s` normalized so that `|∇σ₀| = 1` on `Σ`, stage `k` multiplies `σ` by `1 − r/c_k` with
//! `c_k = 2(k+1)(1 − k/d)` and `r = S(σ) − 1`, where
//! `S(σ) = |∇σ|² − (2/d) σ(Δσ + Jσ)`. Since `r = O(s^k)` before stage `k`, this is the
//! update `σ(1 + w s^k)` with `w = −r_k/c_k` read off along `Σ`, done for all points of
//! the jet at once. After `d − 1` stages the residual is `O(s^d)` and its leading
//! coefficient is the obstruction.

use crate::curvature::{curvature_fields, Geometry, Level};
use crate::error::{Error, Result};
use crate::hypersurface::{HypersurfaceSpec, SurfaceFields, ON_SURFACE_TOL};
use crate::jets::{series, Jet};
use crate::metric::{determinant, MetricSource};
use crate::tensor::{Down, Field, TensorValue};
use crate::tractor::{pair_fields, scale_tractor};

/// `c_k = 2(k+1)(1 − k/d)`, the linear response of the `s^k` residual coefficient.
pub fn update_denominator(k: usize, d: usize) -> f64 {
    2.0 * (k as f64 + 1.0) * (1.0 - k as f64 / d as f64)
}

#[derive(Debug, Clone)]
pub struct YamabeExpansion {
    pub dim: usize,
    pub point: Vec<f64>,
    /// Collar direction `v = g⁻¹ds` at the point.
    pub direction: Vec<f64>,
    pub geom: Geometry,
    pub j: Jet,
    pub s: Jet,
    pub sigma: Jet,
    /// Completed correction stages.
    pub stages: usize,
    /// `S(σ) − 1` for the final `σ`.
    pub residual: Jet,
    /// Residual along the collar in powers of `s`, after stage 0, 1, ….
    pub history: Vec<Vec<f64>>,
}

/// Direct route: `S(σ) − 1` with `Δσ = |g|^{−1/2} ∂_a(|g|^{1/2} g^{ab} ∂_b σ)`.
pub fn yamabe_residual(sigma: &Jet, g: &Field, ginv: &Field, sqrt_det: &Jet, j: &Jet) -> Result<Jet> {
    let d = g.dim;
    let ds: Vec<Jet> = (0..d).map(|a| sigma.partial(a)).collect::<std::result::Result<_, _>>()?;
    let grad: Vec<Jet> = (0..d)
        .map(|a| {
            let mut acc = Jet::zero(d, ds[0].order());
            for b in 0..d {
                acc.add_mul(1.0, ginv.get(&[a, b]), &ds[b]);
            }
            acc
        })
        .collect();
    let mut norm = Jet::zero(d, ds[0].order());
    for a in 0..d {
        norm.add_mul(1.0, &ds[a], &grad[a]);
    }
    let mut div = Jet::zero(d, grad[0].order().saturating_sub(1));
    for a in 0..d {
        div = &div + &(sqrt_det * &grad[a]).partial(a)?;
    }
    let lap = div.div(sqrt_det)?;
    let inner = &lap + &sigma.mul_vanishing(j);
    let mut r = &norm - &sigma.mul_vanishing(&inner).scale(2.0 / d as f64);
    r = r.add_scalar(-1.0);
    Ok(r)
}

/// Tractor route: `h(I, I) − 1` with `I = Dσ/d`, using the Christoffel Laplacian.
pub fn tractor_residual(sigma: &Jet, geom: &Geometry, j: &Jet) -> Result<Jet> {
    let i = scale_tractor(sigma, geom, j)?;
    Ok(pair_fields(&i, &i, &geom.g).add_scalar(-1.0))
}

struct Setup {
    geom: Geometry,
    ginv: Field,
    sqrt_det: Jet,
    j: Jet,
    s: Jet,
    v: Vec<f64>,
}

fn setup(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64], order: usize) -> Result<Setup> {
    let d = metric.dim();
    if d < 3 {
        return Err(Error::UnsupportedDimension { op: "singular Yamabe expansion", dim: d, supported: "≥ 3" });
    }
    let geom = Geometry::from_source(metric, p, order)?;
    let s = hyp.s.eval_jet(p, order)?;
    let scale = (0..d).map(|a| s.partial(a).map(|j| j.value().abs())).collect::<std::result::Result<Vec<_>, _>>()?;
    let scale = scale.into_iter().fold(0.0, f64::max);
    if s.value().abs() > ON_SURFACE_TOL * scale.max(1.0) {
        return Err(Error::NotOnSurface(s.value()));
    }
    let cf = curvature_fields(&geom, Level::Weyl)?;
    let sqrt_det = determinant(&geom.g)?.sqrt()?;
    let m = geom.at_point()?;
    let v: Vec<f64> = (0..d)
        .map(|a| (0..d).map(|b| m.g_inv.get(&[a, b]) * s.partial(b).expect("order ≥ 1").value()).sum())
        .collect();
    if v.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-8 {
        return Err(Error::DegenerateNormal(0.0));
    }
    let ginv = geom.ginv.clone();
    Ok(Setup { j: cf.j.scalar_jet().clone(), geom, ginv, sqrt_det, s, v })
}

/// `σ₀ = s/|∇s|(p)`, then `σ ← σ(1 − r/2)` until `S(σ) = 1` on `Σ` to full jet order.
///
/// The restriction of `r` to `Σ` converges quadratically and vanishes at `p` from the
/// start, so its jet is exact through degree `2^n − 1` after `n` sweeps.
fn initial_sigma(st: &Setup) -> Result<Jet> {
    let d = st.geom.dim;
    let m = st.geom.at_point()?;
    let mut norm2 = 0.0;
    for a in 0..d {
        for b in 0..d {
            norm2 += m.g_inv.get(&[a, b]) * st.s.partial(a)?.value() * st.s.partial(b)?.value();
        }
    }
    let mut sigma = st.s.scale(1.0 / norm2.sqrt());
    let mut sweeps = 0;
    while (1usize << sweeps) <= st.s.order() + 1 {
        let r = yamabe_residual(&sigma, &st.geom.g, &st.ginv, &st.sqrt_det, &st.j)?;
        sigma = &sigma - &sigma.mul_vanishing(&r).scale(0.5);
        sweeps += 1;
    }
    Ok(sigma)
}

/// Coefficients of a collar quantity in powers of `s` along `p + t·v`.
fn in_s_powers(f: &Jet, s: &Jet, v: &[f64]) -> Result<Vec<f64>> {
    let n = f.order() + 1;
    let s_line: Vec<f64> = s.along_line(v).into_iter().take(n).collect();
    let t_of_s = series::revert(&s_line)?;
    Ok(series::compose(&f.along_line(v), &t_of_s))
}

impl YamabeExpansion {
    fn run(st: Setup, p: &[f64], stages: usize) -> Result<YamabeExpansion> {
        let d = st.geom.dim;
        let mut sigma = initial_sigma(&st)?;
        let mut residual = yamabe_residual(&sigma, &st.geom.g, &st.ginv, &st.sqrt_det, &st.j)?;
        let mut history = vec![in_s_powers(&residual, &st.s, &st.v)?];
        for k in 1..=stages {
            let c = update_denominator(k, d);
            sigma = &sigma - &sigma.mul_vanishing(&residual).scale(1.0 / c);
            residual = yamabe_residual(&sigma, &st.geom.g, &st.ginv, &st.sqrt_det, &st.j)?;
            history.push(in_s_powers(&residual, &st.s, &st.v)?);
        }
        Ok(YamabeExpansion {
            dim: d,
            point: p.to_vec(),
            direction: st.v,
            geom: st.geom,
            j: st.j,
            s: st.s,
            sigma,
            stages,
            residual,
            history,
        })
    }

    /// Residual along the collar in powers of `s`.
    pub fn residual_coefficients(&self) -> &[f64] {
        self.history.last().expect("stage 0 always recorded")
    }

    /// `σ` along the collar in powers of `t`.
    pub fn sigma_along_collar(&self) -> Vec<f64> {
        self.sigma.along_line(&self.direction)
    }

    /// Largest multivariate residual coefficient of total degree `≤ k`.
    pub fn residual_through(&self, k: usize) -> f64 {
        let lay = self.residual.layout();
        (0..=k.min(self.residual.order()))
            .flat_map(|deg| lay.degree_range(deg))
            .map(|i| self.residual.coeffs()[i].abs())
            .fold(0.0, f64::max)
    }
}

/// Solve through residual order `min(m + 1, d)` with jets of order `m + 2`.
pub fn solve_sigma(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, m: usize, p: &[f64]) -> Result<YamabeExpansion> {
    let d = metric.dim();
    if m > d {
        return Err(Error::Invalid(format!("expansion order {m} exceeds the obstruction order {d}")));
    }
    let st = setup(metric, hyp, p, m + 2)?;
    YamabeExpansion::run(st, p, m.min(d - 1))
}

/// Run exactly `stages` corrections (`≤ d − 1`) with jets of order `order`.
pub fn solve_stages(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    p: &[f64],
    stages: usize,
    order: usize,
) -> Result<YamabeExpansion> {
    let d = metric.dim();
    if stages >= d {
        return Err(Error::Invalid(format!("stage {stages} reaches the obstruction order {d}")));
    }
    let st = setup(metric, hyp, p, order)?;
    YamabeExpansion::run(st, p, stages)
}

/// `B_σ = r_d/σ₁^d` where `r_d` is the `t^d` residual coefficient along the collar and
/// `σ₁ = ∂_tσ`, so that `S(σ) = 1 + σ^d B_σ + O(σ^{d+1})`.
pub fn obstruction_density(exp: &YamabeExpansion) -> Result<f64> {
    let d = exp.dim;
    if exp.stages < d - 1 {
        return Err(Error::InsufficientStages { done: exp.stages, need: d - 1 });
    }
    if exp.residual.order() < d {
        return Err(Error::InsufficientOrder { what: "obstruction density", need: d + 2, have: exp.geom.order() });
    }
    let r = exp.residual.along_line(&exp.direction);
    let sig = exp.sigma_along_collar();
    Ok(r[d] / sig[1].powi(d as i32))
}

/// Linear-solve check of the stage-`k` update: returns `(w_formula, w_solved, slope, c_k)`
/// where the slope is the response of the `s^k` residual coefficient to `σ ↦ σ(1 + w s^k)`.
pub fn update_coefficient_check(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    p: &[f64],
    k: usize,
) -> Result<(f64, f64, f64, f64)> {
    let d = metric.dim();
    if k == 0 || k >= d {
        return Err(Error::Invalid(format!("update stage {k} outside 1..{d}")));
    }
    let order = k + 3;
    let st = setup(metric, hyp, p, order)?;
    let exp = YamabeExpansion::run(setup(metric, hyp, p, order)?, p, k - 1)?;
    let r_k = exp.residual_coefficients()[k];
    let sk = st.s.powi(k as i64)?;
    let trial = |w: f64| -> Result<f64> {
        let f = sk.scale(w).add_scalar(1.0);
        let sig = exp.sigma.mul_jet(&f);
        let r = yamabe_residual(&sig, &st.geom.g, &st.ginv, &st.sqrt_det, &st.j)?;
        Ok(in_s_powers(&r, &st.s, &st.v)?[k])
    };
    let a = trial(0.0)?;
    let slope = trial(1.0)? - a;
    let c = update_denominator(k, d);
    Ok((-r_k / c, -a / slope, slope, c))
}

/// `E_ab = tf(∇_a∇_bσ + P_ab σ)` as a jet field about the expansion point.
pub fn almost_einstein_field(exp: &YamabeExpansion) -> Result<Field> {
    let geom = &exp.geom;
    let d = geom.dim;
    let cf = curvature_fields(geom, Level::Weyl)?;
    let f = Field::scalar(exp.sigma.clone());
    let hess = geom.covariant_derivative(&geom.covariant_derivative(&f, &[])?, &[Down])?;
    let ps = cf.schouten.map(|p| exp.sigma.mul_vanishing(p));
    let x = hess.add(&ps.truncate(hess.order()));
    let tr = x.contract(0, 1, Some(&geom.ginv));
    Ok(x.sub(&geom.g.mul_scalar(&tr.scalar_jet().scale(1.0 / d as f64))))
}

/// `E` at offset `y` from the expansion point (collar or boundary), weight 1.
pub fn almost_einstein(exp: &YamabeExpansion, y: &[f64]) -> Result<TensorValue> {
    let e = almost_einstein_field(exp)?;
    let d = exp.dim;
    Ok(TensorValue { dim: d, variance: vec![Down, Down], weight: 1, entries: e.comps.iter().map(|j| j.eval_offset(y)).collect() })
}

/// Projections of `∇_n^k E` on `Σ`.
#[derive(Debug, Clone)]
pub struct NormalJet {
    pub k: usize,
    /// `⊤̊ ∇_n^k E`.
    pub tangential: TensorValue,
    /// `(n^a ∇_n^k E_ab)^⊤`.
    pub mixed: TensorValue,
    /// `n^a n^b ∇_n^k E_ab`.
    pub normal: f64,
}

impl NormalJet {
    pub fn max_abs(&self) -> f64 {
        self.tangential.max_abs().max(self.mixed.max_abs()).max(self.normal.abs())
    }
}

/// Largest `k` for which `∇_n^k E|_Σ` is fixed by the expansion (`E` is determined modulo `O(σ^{d−1})`).
pub fn max_determined_normal_order(d: usize) -> usize {
    d - 2
}

pub fn e_normal_jets(exp: &YamabeExpansion, k_max: usize) -> Result<Vec<NormalJet>> {
    let d = exp.dim;
    let max = max_determined_normal_order(d);
    if k_max > max {
        return Err(Error::OrderNotDetermined { k: k_max, max });
    }
    if exp.stages < d - 1 {
        return Err(Error::InsufficientStages { done: exp.stages, need: d - 1 });
    }
    let sf = SurfaceFields::from_parts(exp.geom.clone(), exp.s.clone(), true)?;
    let mut e = almost_einstein_field(exp)?;
    if e.order() < k_max {
        return Err(Error::InsufficientOrder { what: "normal jets of E", need: k_max + 4, have: exp.geom.order() });
    }
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let tangential = sf.tangential_trace_free(&sf.project(&e.truncate(0), &[Down, Down]));
        let mixed = sf.project(&e.contract_vector(0, &sf.n_up), &[Down]);
        let normal = e.contract_vector(0, &sf.n_up).contract_vector(0, &sf.n_up).scalar_jet().value();
        out.push(NormalJet {
            k,
            tangential: tangential.value(vec![Down, Down], 1 - k as i32),
            mixed: mixed.value(vec![Down], 1 - k as i32),
            normal,
        });
        if k < k_max {
            e = sf.geom.covariant_derivative(&e, &[Down, Down])?.contract_vector(0, &sf.n_up);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;
    use crate::samples::ball_defining_function;

    #[test]
    fn half_space_is_exact() {
        let hyp = HypersurfaceSpec::parse("x4", 4).unwrap();
        let exp = solve_sigma(&MetricSpec::flat(4), &hyp, 4, &[0.3, 0.1, -0.2, 0.0]).unwrap();
        assert!(exp.residual.max_abs() < 1e-15);
        assert_eq!(obstruction_density(&exp).unwrap(), 0.0);
        let e = e_normal_jets(&exp, 2).unwrap();
        assert!(e.iter().all(|j| j.max_abs() == 0.0));
    }

    #[test]
    fn hyperbolic_ball_residual_vanishes_identically() {
        let hyp = HypersurfaceSpec::new(ball_defining_function(4));
        let p = [0.5, 0.5, -0.5, 0.5];
        let exp = solve_sigma(&MetricSpec::flat(4), &hyp, 4, &p).unwrap();
        assert!(exp.residual.order() >= 5, "{} {}", exp.residual.order(), exp.sigma.order());
        assert!(exp.residual.max_abs() < 1e-12);
        for h in &exp.history {
            assert!(h.iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn determined_order_enforced() {
        let hyp = HypersurfaceSpec::parse("x4", 4).unwrap();
        let exp = solve_sigma(&MetricSpec::flat(4), &hyp, 4, &[0.0; 4]).unwrap();
        assert!(matches!(e_normal_jets(&exp, 3), Err(Error::OrderNotDetermined { k: 3, max: 2 })));
        let short = solve_sigma(&MetricSpec::flat(4), &hyp, 2, &[0.0; 4]).unwrap();
        assert!(matches!(obstruction_density(&short), Err(Error::InsufficientStages { .. })));
    }

    #[test]
    fn denominators() {
        assert_eq!(update_denominator(1, 4), 3.0);
        assert_eq!(update_denominator(4, 4), 0.0);
    }
}
