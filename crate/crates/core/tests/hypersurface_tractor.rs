use confgeom_core::checks::{rel_diff, tractor_suite, weight_check, Invariant};
use confgeom_core::curvature::{curvature_fields, Geometry, Level};
use confgeom_core::expr::Expression;
use confgeom_core::hypersurface::{
    extrinsic_stack, fialkow_identity, fourth_form, pairing_integral, Chart, HypersurfaceSpec, SurfaceFields,
};
use confgeom_core::jets::Jet;
use confgeom_core::metric::{MetricSource, MetricSpec, Rescaled};
use confgeom_core::samples::{
    ball_defining_function, conformally_flat, random_graph, random_setting, rng, round_sphere,
};
use confgeom_core::tensor::{Down, Field};
use confgeom_core::tractor::{delta1_tracefree, delta_r, normal_tractor, q_splitting, scale_tractor, tractor_metric_pair};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn all_invariants_carry_their_weights(seed in 0u64..100_000) {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        for inv in Invariant::ALL {
            let h = inv.needs_surface().then_some(&hyp);
            let c = weight_check(inv, &s.metric, h, &s.omega, &s.point).unwrap();
            prop_assert!(c.rel_err < 1e-6, "{}: {:e}", inv.name(), c.rel_err);
        }
    }

    #[test]
    fn extrinsic_data_ignores_the_extension(seed in 0u64..100_000, c in -2.0f64..2.0) {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        let a = extrinsic_stack(&s.metric, &hyp, &s.point).unwrap();
        let b = extrinsic_stack(&s.metric, &hyp.reextended(c), &s.point).unwrap();
        prop_assert!(rel_diff(&a.n, &b.n) < 1e-12);
        prop_assert!((a.h - b.h).abs() < 1e-11 * a.h.abs().max(1.0));
        prop_assert!(rel_diff(&a.iio, &b.iio) < 1e-11);
        prop_assert!(rel_diff(&a.fialkow, &b.fialkow) < 1e-10);
        prop_assert!(rel_diff(a.fourth_form.as_ref().unwrap(), b.fourth_form.as_ref().unwrap()) < 1e-9);
        prop_assert!(rel_diff(a.div_fourth_form.as_ref().unwrap(), b.div_fourth_form.as_ref().unwrap()) < 1e-8);
    }

    #[test]
    fn induced_connection_preserves_induced_metric(seed in 0u64..100_000) {
        let s = random_setting(seed, 4);
        let sf = SurfaceFields::new(&s.metric, &HypersurfaceSpec::new(s.s), &s.point, 3).unwrap();
        let dg = sf.intrinsic_derivative(&sf.gbar, &[Down, Down]).unwrap();
        prop_assert!(dg.value(vec![Down; 3], 0).max_abs() < 1e-12);
    }

    #[test]
    fn fialkow_equation_in_five_dimensions(seed in 0u64..100_000) {
        let s = random_setting(seed, 5);
        let sf = SurfaceFields::new(&s.metric, &HypersurfaceSpec::new(s.s), &s.point, 4).unwrap();
        let chart = Chart::new(&sf.geom.g, &sf.s, None).unwrap();
        prop_assert!(fialkow_identity(&sf, &chart).unwrap().rel_err() < 1e-9);
    }

    #[test]
    fn lower_dimensional_weights(seed in 0u64..100_000, d in 3usize..6) {
        let s = random_setting(seed, d);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        for inv in [Invariant::Iio, Invariant::Fialkow, Invariant::Weyl] {
            if inv == Invariant::Fialkow && d == 3 {
                prop_assert!(weight_check(inv, &s.metric, Some(&hyp), &s.omega, &s.point).is_err());
                continue;
            }
            let c = weight_check(inv, &s.metric, Some(&hyp), &s.omega, &s.point).unwrap();
            if inv == Invariant::Weyl && d == 3 {
                prop_assert!(c.original.max_abs() < 1e-13 && c.rescaled.max_abs() < 1e-13);
                continue;
            }
            prop_assert!(c.rel_err < 1e-7, "d={} {}: {:e}", d, inv.name(), c.rel_err);
        }
    }

    #[test]
    fn conformally_flat_fourth_form_vanishes(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let (m, _) = conformally_flat(&mut r, 4, 0.3);
        let (s, q) = random_graph(&mut r, 4, 0.3);
        let mut p = vec![0.1, -0.2, 0.15, 0.0];
        p[3] = q.eval(&p).unwrap();
        let iv = fourth_form(&m, &HypersurfaceSpec::new(s), &p).unwrap();
        prop_assert!(iv.max_abs() < 1e-11);
    }

    #[test]
    fn tractor_properties_hold(seed in 0u64..100_000) {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        for c in tractor_suite(&s.metric, &hyp, &s.omega, &s.point, seed).unwrap() {
            prop_assert!(c.error < 1e-9, "{}: {:e}", c.name, c.error);
        }
    }
}

#[test]
fn pairing_vanishes_on_umbilic_patches() {
    let flat = pairing_integral(&MetricSpec::flat(4), &HypersurfaceSpec::parse("x4", 4).unwrap(), &[-0.5; 3], &[0.5; 3], 4)
        .unwrap();
    assert_eq!(flat, 0.0);
    // The equator of the round sphere is umbilic though the metric is curved.
    let eq = pairing_integral(&round_sphere(4), &HypersurfaceSpec::parse("x4", 4).unwrap(), &[-0.5; 3], &[0.5; 3], 4)
        .unwrap();
    assert!(eq.abs() < 1e-13, "{eq}");
    let tilted = HypersurfaceSpec::parse("x4 - 0.3*x1^2 + 0.2*x2*x3", 4).unwrap();
    assert!(pairing_integral(&round_sphere(4), &tilted, &[-0.5; 3], &[0.5; 3], 4).unwrap().abs() > 1e-3);
}

#[test]
fn flat_half_space_normal_and_scale_tractors() {
    let g = MetricSpec::flat(4);
    let hyp = HypersurfaceSpec::parse("x4", 4).unwrap();
    let p = [0.2, -0.1, 0.4, 0.0];
    let n = normal_tractor(&extrinsic_stack(&g, &hyp, &p).unwrap(), 0);
    assert_eq!((n.plus, n.mid.clone(), n.minus), (0.0, vec![0.0, 0.0, 0.0, 1.0], 0.0));

    for x4 in [0.0, 0.3] {
        let q = [0.2, -0.1, 0.4, x4];
        let geom = Geometry::from_source(&g, &q, 2).unwrap();
        let j = Jet::zero(4, 0);
        let sigma = hyp.s.eval_jet(&q, 2).unwrap();
        let i = scale_tractor(&sigma, &geom, &j).unwrap().value(0);
        assert!((i.plus - x4).abs() < 1e-15 && i.minus.abs() < 1e-15);
        assert_eq!(i.mid, vec![0.0, 0.0, 0.0, 1.0]);
        assert!((tractor_metric_pair(&i, &i, &geom.at_point().unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }
}

/// Flat space: `c_b = −(2/(d+w)) ∂^a t_ab`, checked against central differences.
#[test]
fn splitting_divergence_matches_finite_differences() {
    let d = 4;
    let srcs = [
        ["x1*x2 + x3^2", "sin(x1 + x4)", "x2*x3", "x4^2 - x1"],
        ["", "x2^3 - x1*x4", "cos(x3)", "x1*x2*x3"],
        ["", "", "exp(0.3*x4) - x1", "x2 + x3*x4"],
        ["", "", "", "0"],
    ];
    let comp = |a: usize, b: usize| {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        Expression::parse(srcs[i][j], d).unwrap()
    };
    // Make the field trace free by fixing t_44 = −(t_11 + t_22 + t_33).
    let t_at = |x: &[f64], a: usize, b: usize| -> f64 {
        if (a, b) == (3, 3) {
            -(0..3).map(|k| comp(k, k).eval(x).unwrap()).sum::<f64>()
        } else {
            comp(a, b).eval(x).unwrap()
        }
    };
    let p = [0.1, 0.2, -0.3, 0.25];
    let g = MetricSpec::flat(d);
    let geom = Geometry::from_source(&g, &p, 3).unwrap();
    let cf = curvature_fields(&geom, Level::Weyl).unwrap();
    let t = Field::from_fn(d, 2, |i| {
        if i == [3, 3] {
            let mut acc = Jet::zero(d, 3);
            for k in 0..3 {
                acc.axpy(-1.0, &comp(k, k).eval_jet(&p, 3).unwrap());
            }
            acc
        } else {
            comp(i[0], i[1]).eval_jet(&p, 3).unwrap()
        }
    });
    for w in [-1, 0, 1] {
        let q = q_splitting(&t, w, &geom, &cf.schouten).unwrap();
        for b in 0..d {
            let mut div = 0.0;
            for a in 0..d {
                let f = |h: f64| {
                    let mut xp = p.to_vec();
                    let mut xm = p.to_vec();
                    xp[a] += h;
                    xm[a] -= h;
                    (t_at(&xp, a, b) - t_at(&xm, a, b)) / (2.0 * h)
                };
                div += (4.0 * f(5e-4) - f(1e-3)) / 3.0;
            }
            let want = -2.0 / (d as f64 + w as f64) * div;
            assert!((q.xz.get(&[b]) - want).abs() < 1e-8, "w={w} b={b}: {} vs {want}", q.xz.get(&[b]));
        }
    }
}

#[test]
fn robin_operator_on_flat_examples() {
    let g = MetricSpec::flat(4);
    // Half-space: H = 0 so δ_R is the plain normal derivative.
    let hyp = HypersurfaceSpec::parse("x4", 4).unwrap();
    let p = [0.3, 0.1, -0.2, 0.0];
    let sf = SurfaceFields::new(&g, &hyp, &p, 3).unwrap();
    let f = Field::scalar(Expression::parse("x1*x4 + x4^2 + x2", 4).unwrap().eval_jet(&p, 3).unwrap());
    for w in [-2, 0, 3] {
        let v = delta_r(&f, &[], w, &sf).unwrap().value();
        assert!((v - 0.3).abs() < 1e-15);
    }
    // Unit sphere with inward normal: ∇_n|x|² = −2.
    let ball = HypersurfaceSpec::new(ball_defining_function(4));
    let q = [0.5, 0.5, 0.5, 0.5];
    let sf = SurfaceFields::new(&g, &ball, &q, 3).unwrap();
    let h = sf.h.scalar_jet().value();
    let f = Field::scalar(Expression::parse("x1^2 + x2^2 + x3^2 + x4^2", 4).unwrap().eval_jet(&q, 3).unwrap());
    for w in [-1, 0, 2] {
        let v = delta_r(&f, &[], w, &sf).unwrap().value();
        assert!((v - (-2.0 - w as f64 * h)).abs() < 1e-14, "w={w}: {v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// On a weight-0 scalar `δ_R` is `∇_n`, which picks up `Ω⁻¹`.
    #[test]
    fn robin_operator_rescales_on_weight_zero(seed in 0u64..100_000) {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        let hat = Rescaled { base: &s.metric, omega: &s.omega };
        let f = Expression::parse("sin(x1 + 2*x4) + x2*x3", 4).unwrap();
        let fj = Field::scalar(f.eval_jet(&s.point, 3).unwrap());
        let a = delta_r(&fj, &[], 0, &SurfaceFields::new(&s.metric, &hyp, &s.point, 3).unwrap()).unwrap().value();
        let b = delta_r(&fj, &[], 0, &SurfaceFields::new(&hat, &hyp, &s.point, 3).unwrap()).unwrap().value();
        let om = s.omega.eval(&s.point).unwrap();
        prop_assert!((b - a / om).abs() < 1e-12 * a.abs().max(1.0));
    }

    /// Under a constant rescaling `g ↦ c²g` with `u ↦ c²u`, `δ⁽¹⁾u` scales by `c`.
    #[test]
    fn delta1_scales_with_homothety(seed in 0u64..100_000, c in 0.3f64..3.0) {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s.clone());
        let omega = Expression::parse(&format!("{c}"), 4).unwrap();
        let hat = Rescaled { base: &s.metric, omega: &omega };
        let sf = SurfaceFields::new(&s.metric, &hyp, &s.point, 3).unwrap();
        let sf_hat = SurfaceFields::new(&hat, &hyp, &s.point, 3).unwrap();
        let mut r = rng(seed ^ 0x55);
        let raw = Field::from_fn(4, 2, |_| {
            use rand::Rng;
            let coeffs: Vec<f64> = (0..confgeom_core::jets::coefficient_count(4, 2)).map(|_| r.gen_range(-1.0..1.0)).collect();
            Jet::from_coeffs(4, 2, &coeffs)
        })
        .symmetrize_pair(0, 1);
        let g = sf.geom.g.truncate(2);
        let tr = raw.contract(0, 1, Some(&sf.geom.ginv.truncate(2)));
        let u = raw.sub(&g.mul_scalar(&tr.scalar_jet().scale(0.25)));
        let a = delta1_tracefree(&u, &sf).unwrap();
        let b = delta1_tracefree(&u.scale(c * c), &sf_hat).unwrap();
        prop_assert!(rel_diff(&b, &a.scale(c)) < 1e-12);
        prop_assert!(a.max_abs() > 1e-3);
    }
}

#[test]
fn normal_tractor_is_unit_on_curved_data() {
    for seed in 0..5 {
        let s = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(s.s);
        let b = extrinsic_stack(&s.metric, &hyp, &s.point).unwrap();
        let n = normal_tractor(&b, 0);
        let m = s.metric.at_point(&s.point).unwrap();
        assert!((tractor_metric_pair(&n, &n, &m).unwrap() - 1.0).abs() < 1e-13);
    }
}
