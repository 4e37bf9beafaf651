//! Named oracle comparisons: conformal-weight checks, structure identities,
//! tractor properties, the flat-zero suite and the umbilic consequence check.

use rand::Rng;

use crate::curvature::{
    bach_from_cotton, bach_from_schouten, cotton_from, cotton_from_weyl, curvature_fields, curvature_stack,
    kulkarni_nomizu, Geometry, Level,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::hypersurface::{
    codazzi_identity, cotton_nn_identity, divergence_fourth_form, extrinsic_stack, fialkow_identity, fialkow_tensor,
    fourth_form, gauss_identity, pairing_integral, Chart, HypersurfaceSpec, SurfaceFields,
};
use crate::jets::Jet;
use crate::metric::{MetricSource, MetricSpec, Rescaled};
use crate::samples::rng;
use crate::tensor::{Down, Field, TensorValue};
use crate::tractor::{
    normal_tractor, pair_fields, q_splitting, thomas_d, tractor_connection_derivative, tractor_metric_pair,
    TractorField,
};
use crate::yamabe::{e_normal_jets, max_determined_normal_order, obstruction_density, solve_sigma};

/// `‖a − b‖/max(‖a‖, ‖b‖, 1e−10)`.
pub fn rel_diff(a: &TensorValue, b: &TensorValue) -> f64 {
    a.sub(b).norm() / a.norm().max(b.norm()).max(1e-10)
}

/// One named comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub error: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, error: f64) -> Check {
        Check { name: name.into(), error }
    }
}

/// Invariants with a declared conformal weight of their all-down representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Weyl,
    Bach,
    Iio,
    Fialkow,
    Iv4,
    DivIv4,
}

impl Invariant {
    pub const ALL: [Invariant; 6] =
        [Invariant::Weyl, Invariant::Bach, Invariant::Iio, Invariant::Fialkow, Invariant::Iv4, Invariant::DivIv4];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::Weyl => "weyl",
            Invariant::Bach => "bach",
            Invariant::Iio => "iio",
            Invariant::Fialkow => "fialkow",
            Invariant::Iv4 => "iv4",
            Invariant::DivIv4 => "div-iv4",
        }
    }

    pub fn from_name(s: &str) -> Option<Invariant> {
        Invariant::ALL.into_iter().find(|i| i.name() == s)
    }

    /// `w` with `T[Ω²g] = Ω^w T[g]`.
    pub fn weight(self, d: usize) -> i32 {
        let d = d as i32;
        match self {
            Invariant::Weyl => 2,
            Invariant::Bach => 2 - d,
            Invariant::Iio => 1,
            Invariant::Fialkow => 0,
            Invariant::Iv4 => 3 - d,
            Invariant::DivIv4 => 1 - d,
        }
    }

    pub fn needs_surface(self) -> bool {
        !matches!(self, Invariant::Weyl | Invariant::Bach)
    }
}

pub fn evaluate_invariant(
    inv: Invariant,
    metric: &dyn MetricSource,
    hyp: Option<&HypersurfaceSpec>,
    p: &[f64],
) -> Result<TensorValue> {
    let d = metric.dim();
    let surface = || hyp.ok_or_else(|| Error::Invalid(format!("invariant {} needs a hypersurface", inv.name())));
    match inv {
        Invariant::Weyl => {
            let geom = Geometry::from_source(metric, p, 2)?;
            Ok(curvature_fields(&geom, Level::Weyl)?.weyl.value(vec![Down; 4], 2))
        }
        Invariant::Bach => {
            if d != 4 {
                return Err(Error::UnsupportedDimension { op: "conformally covariant Bach tensor", dim: d, supported: "4" });
            }
            Ok(curvature_stack(metric, p, true)?.bach.expect("requested"))
        }
        Invariant::Iio => Ok(SurfaceFields::new(metric, surface()?, p, 2)?.iio.value(vec![Down, Down], 1)),
        Invariant::Fialkow => {
            let sf = SurfaceFields::new(metric, surface()?, p, 4)?;
            let chart = Chart::new(&sf.geom.g, &sf.s, None)?;
            fialkow_tensor(&sf, &chart, &sf.metric_at_point()?)
        }
        Invariant::Iv4 => fourth_form(metric, surface()?, p),
        Invariant::DivIv4 => divergence_fourth_form(metric, surface()?, p),
    }
}

#[derive(Debug, Clone)]
pub struct WeightCheck {
    pub invariant: Invariant,
    pub weight: i32,
    pub omega: f64,
    pub original: TensorValue,
    pub rescaled: TensorValue,
    /// `rel_diff(T[Ω²g], Ω^w T[g])`.
    pub rel_err: f64,
}

pub fn weight_check(
    inv: Invariant,
    metric: &dyn MetricSource,
    hyp: Option<&HypersurfaceSpec>,
    omega: &Expression,
    p: &[f64],
) -> Result<WeightCheck> {
    let w = inv.weight(metric.dim());
    let om = omega.eval(p)?;
    let original = evaluate_invariant(inv, metric, hyp, p)?;
    let hat = Rescaled { base: metric, omega };
    let rescaled = evaluate_invariant(inv, &hat, hyp, p)?;
    let expected = original.scale(om.powi(w));
    let rel_err = rel_diff(&rescaled, &expected);
    Ok(WeightCheck { invariant: inv, weight: w, omega: om, original, rescaled, rel_err })
}

/// Ambient curvature identities at `p` (relative residuals).
pub fn curvature_suite(metric: &dyn MetricSource, p: &[f64]) -> Result<Vec<Check>> {
    let d = metric.dim();
    let mut out = Vec::new();
    let geom = Geometry::from_source(metric, p, 4)?;
    let cf = curvature_fields(&geom, Level::Weyl)?;
    let m = geom.at_point()?;
    let riem = cf.riem.value(vec![Down; 4], 2);
    out.push(Check::new("riemann-symmetries", crate::curvature::riemann_symmetry_defect(&riem)));
    let decomposed = cf.weyl.add(&kulkarni_nomizu(&geom.g, &cf.schouten)).value(vec![Down; 4], 2);
    out.push(Check::new("riemann-decomposition", rel_diff(&riem, &decomposed)));
    let w = cf.weyl.value(vec![Down; 4], 2);
    out.push(Check::new("weyl-trace-free", crate::curvature::weyl_trace_defect(&w, &m)));
    let cotton = cotton_from(&geom, &cf.schouten)?;
    if d >= 4 {
        let via_weyl = cotton_from_weyl(&geom, &cf.weyl)?;
        out.push(Check::new("cotton-weyl", rel_diff(&cotton.value(vec![Down; 3], 0), &via_weyl.value(vec![Down; 3], 0))));
    }
    let b1 = bach_from_cotton(&geom, &cotton, &cf.schouten, &cf.weyl)?.value(vec![Down, Down], 2 - d as i32);
    let b2 = bach_from_schouten(&geom, &cf.schouten, &cf.weyl)?.value(vec![Down, Down], 2 - d as i32);
    out.push(Check::new("bach-routes", rel_diff(&b1, &b2)));
    Ok(out)
}

/// Gauss, Fialkow–Gauss, Codazzi and `C_nn` identities at a point of `Σ`.
/// Only Codazzi is available in `d = 3`, where `Σ` has no intrinsic Schouten tensor.
pub fn surface_suite(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64]) -> Result<Vec<Check>> {
    let sf = SurfaceFields::new(metric, hyp, p, 4)?;
    if metric.dim() < 4 {
        return Ok(vec![Check::new("codazzi", codazzi_identity(&sf)?.rel_err())]);
    }
    let chart = Chart::new(&sf.geom.g, &sf.s, None)?;
    Ok(vec![
        Check::new("gauss", gauss_identity(&sf, &chart).rel_err()),
        Check::new("fialkow-gauss", fialkow_identity(&sf, &chart)?.rel_err()),
        Check::new("codazzi", codazzi_identity(&sf)?.rel_err()),
        Check::new("cotton-nn", cotton_nn_identity(&sf)?.rel_err()),
    ])
}

/// Ambient and hypersurface structure identities at a point of `Σ` (relative residuals).
pub fn identity_suite(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64]) -> Result<Vec<Check>> {
    let mut out = curvature_suite(metric, p)?;
    out.extend(surface_suite(metric, hyp, p)?);
    Ok(out)
}

fn random_jet(r: &mut impl Rng, dim: usize, order: usize, amp: f64) -> Jet {
    let n = crate::jets::coefficient_count(dim, order);
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-amp..=amp)).collect();
    Jet::from_coeffs(dim, order, &c)
}

fn random_tractor_field(r: &mut impl Rng, dim: usize, order: usize, weight: i32) -> TractorField {
    TractorField {
        weight,
        plus: random_jet(r, dim, order, 1.0),
        mid: Field::from_fn(dim, 1, |_| random_jet(r, dim, order, 1.0)),
        minus: random_jet(r, dim, order, 1.0),
    }
}

/// `(Ω, Υ_a = ∂_a log Ω)` at `p`.
fn omega_data(omega: &Expression, p: &[f64]) -> Result<(f64, Vec<f64>)> {
    let j = omega.eval_jet(p, 1)?;
    let om = j.value();
    let ups = (0..p.len()).map(|a| j.partial(a).map(|x| x.value() / om)).collect::<std::result::Result<_, _>>()?;
    Ok((om, ups))
}

/// Tractor property suite at a point of `Σ` (absolute residuals on O(1) data).
pub fn tractor_suite(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    omega: &Expression,
    p: &[f64],
    seed: u64,
) -> Result<Vec<Check>> {
    let d = metric.dim();
    let mut r = rng(seed);
    let mut out = Vec::new();
    let hat = Rescaled { base: metric, omega };
    let (om, ups) = omega_data(omega, p)?;
    let m = metric.at_point(p)?;
    let m_hat = hat.at_point(p)?;

    let b = extrinsic_stack(metric, hyp, p)?;
    let n = normal_tractor(&b, 0);
    out.push(Check::new("normal-unit", (tractor_metric_pair(&n, &n, &m)? - 1.0).abs()));
    let b_hat = extrinsic_stack(&hat, hyp, p)?;
    let n_hat = normal_tractor(&b_hat, 1);
    out.push(Check::new("normal-covariance", n_hat.sub(&n.rescale(&m, om, &ups, 1)).max_abs()));

    // Splitting operator on a random trace-free symmetric field.
    let geom = Geometry::from_source(metric, p, 3)?;
    let cf = curvature_fields(&geom, Level::Weyl)?;
    let raw = Field::from_fn(d, 2, |_| random_jet(&mut r, d, 3, 1.0));
    let sym = raw.symmetrize_pair(0, 1);
    let g = geom.g.truncate(3);
    let tr = sym.contract(0, 1, Some(&geom.ginv));
    let t = sym.sub(&g.mul_scalar(&tr.scalar_jet().scale(1.0 / d as f64)));
    let q = q_splitting(&t, 0, &geom, &cf.schouten)?;
    let size = q.zz.max_abs().max(1.0);
    out.push(Check::new("q-x-kernel", q.x_contraction_defect() / size));
    out.push(Check::new("q-readback", q.readback().sub(&q.zz).max_abs() / size));

    // Metricity through the Leibniz rule.
    let tf = random_tractor_field(&mut r, d, 2, 0);
    let uf = random_tractor_field(&mut r, d, 2, 0);
    let dt = tractor_connection_derivative(&tf, &geom, &cf.schouten)?;
    let du = tractor_connection_derivative(&uf, &geom, &cf.schouten)?;
    let pair = pair_fields(&tf, &uf, &geom.g);
    let mut defect: f64 = 0.0;
    for a in 0..d {
        let lhs = pair.partial(a)?.value();
        let rhs = pair_fields(&dt[a], &uf, &geom.g).value() + pair_fields(&tf, &du[a], &geom.g).value();
        defect = defect.max((lhs - rhs).abs());
    }
    out.push(Check::new("connection-metricity", defect));

    // Change of scale.
    let tv = tf.value(0);
    let uv = uf.value(0);
    let t_hat = tv.rescale(&m, om, &ups, 1);
    let u_hat = uv.rescale(&m, om, &ups, 1);
    let back_ups: Vec<f64> = ups.iter().map(|u| -u).collect();
    let back = t_hat.rescale(&m_hat, 1.0 / om, &back_ups, 0);
    out.push(Check::new("rescale-roundtrip", back.sub(&tv).max_abs()));
    let h0 = tractor_metric_pair(&tv, &uv, &m)?;
    let h1 = tractor_metric_pair(&t_hat, &u_hat, &m_hat)?;
    out.push(Check::new("pairing-invariance", (h0 - h1).abs()));

    // Thomas-D on random densities of several weights.
    let geom2 = Geometry::from_source(metric, p, 2)?;
    let j = curvature_fields(&geom2, Level::Weyl)?.j.scalar_jet().clone();
    let geom2_hat = Geometry::from_source(&hat, p, 2)?;
    let j_hat = curvature_fields(&geom2_hat, Level::Weyl)?.j.scalar_jet().clone();
    let om_jet = omega.eval_jet(p, 2)?;
    for w in [-1, 0, 1, 2] {
        let sigma = random_jet(&mut r, d, 2, 1.0);
        let sigma_hat = sigma.mul_jet(&om_jet.powi(w as i64)?);
        let ds = thomas_d(&sigma, w, &geom2, &j)?.value(0);
        let ds_hat = thomas_d(&sigma_hat, w, &geom2_hat, &j_hat)?.value(1);
        let err = ds_hat.sub(&ds.rescale(&m, om, &ups, 1)).max_abs() / ds.max_abs().max(1.0);
        out.push(Check::new(format!("thomas-d-covariance-w{w}"), err));
    }
    Ok(out)
}

/// Absolute sizes of every curvature, extrinsic and Yamabe quantity for the flat
/// metric in `d = 4` with `Σ = {x₄ = 0}` at `p`.
pub fn flat_zero_suite(p: &[f64]) -> Result<Vec<Check>> {
    let g = MetricSpec::flat(4);
    let hyp = HypersurfaceSpec::parse("x4", 4)?;
    let mut out = Vec::new();
    let c = curvature_stack(&g, p, true)?;
    out.push(Check::new("riemann", c.riem.max_abs()));
    out.push(Check::new("ricci", c.ric.max_abs()));
    out.push(Check::new("scalar", c.sc.abs()));
    out.push(Check::new("schouten", c.schouten.max_abs()));
    out.push(Check::new("j", c.j.abs()));
    out.push(Check::new("weyl", c.weyl.max_abs()));
    out.push(Check::new("cotton", c.cotton.expect("order 4").max_abs()));
    out.push(Check::new("bach", c.bach.expect("requested").max_abs()));
    let b = extrinsic_stack(&g, &hyp, p)?;
    out.push(Check::new("ii", b.ii.max_abs()));
    out.push(Check::new("mean-curvature", b.h.abs()));
    out.push(Check::new("iio", b.iio.max_abs()));
    out.push(Check::new("fialkow", b.fialkow.max_abs()));
    out.push(Check::new("weyl-nn", b.weyl_nn.max_abs()));
    out.push(Check::new("weyl-tangential", b.weyl_tangential.max_abs()));
    out.push(Check::new("cotton-normal", b.cotton_normal.max_abs()));
    out.push(Check::new("iv4", b.fourth_form.as_ref().expect("d = 4").max_abs()));
    out.push(Check::new("div-iv4", b.div_fourth_form.as_ref().expect("d = 4").max_abs()));
    let exp = solve_sigma(&g, &hyp, 4, p)?;
    out.push(Check::new("obstruction", obstruction_density(&exp)?.abs()));
    for nj in e_normal_jets(&exp, max_determined_normal_order(4))? {
        out.push(Check::new(format!("e-normal-jet-{}", nj.k), nj.max_abs()));
    }
    Ok(out)
}

/// Quantities that vanish for Bach-flat metrics with umbilic boundary.
#[derive(Debug, Clone)]
pub struct UmbilicReport {
    pub iio: f64,
    pub fialkow: f64,
    pub div_iv4: f64,
    pub obstruction: f64,
    /// `max |∇_n^k E|` for `k = 0..=k_max`.
    pub e_jets: Vec<f64>,
}

pub fn umbilic_report(metric: &dyn MetricSource, hyp: &HypersurfaceSpec, p: &[f64], k_max: usize) -> Result<UmbilicReport> {
    let b = extrinsic_stack(metric, hyp, p)?;
    let exp = solve_sigma(metric, hyp, metric.dim(), p)?;
    let e_jets = e_normal_jets(&exp, k_max)?.iter().map(|j| j.max_abs()).collect();
    Ok(UmbilicReport {
        iio: b.iio.max_abs(),
        fialkow: b.fialkow.max_abs(),
        div_iv4: b.div_fourth_form.as_ref().map_or(0.0, |t| t.max_abs()),
        obstruction: obstruction_density(&exp)?.abs(),
        e_jets,
    })
}

#[derive(Debug, Clone)]
pub struct PairingCheck {
    pub original: f64,
    pub rescaled: f64,
    pub rel_err: f64,
}

/// `∫ II̊·F̊` over a graph patch for `g` and `Ω²g`.
pub fn pairing_check(
    metric: &dyn MetricSource,
    hyp: &HypersurfaceSpec,
    omega: &Expression,
    lower: &[f64],
    upper: &[f64],
    nodes: usize,
) -> Result<PairingCheck> {
    let original = pairing_integral(metric, hyp, lower, upper, nodes)?;
    let rescaled = pairing_integral(&Rescaled { base: metric, omega }, hyp, lower, upper, nodes)?;
    let rel_err = (original - rescaled).abs() / original.abs().max(rescaled.abs()).max(1e-10);
    Ok(PairingCheck { original, rescaled, rel_err })
}
