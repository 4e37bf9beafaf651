//! Acceptance suite: one line per criterion, exit status 1 if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 2 5`.

use std::time::{Duration, Instant};

use confgeom_core::action::{
    fd_weyl2, verify_eh_variation, verify_iio_variation, verify_weyl2_variation, QuadratureDomain, VariationField,
};
use confgeom_core::checks::{
    flat_zero_suite, identity_suite, pairing_check, tractor_suite, umbilic_report, weight_check, Check, Invariant,
};
use confgeom_core::expr::{Expr, Expression};
use confgeom_core::hypersurface::HypersurfaceSpec;
use confgeom_core::metric::MetricSpec;
use confgeom_core::samples::{
    ball_defining_function, bump_omega, conformally_flat, random_graph, random_metric, random_poly, random_setting, rng,
};
use confgeom_core::yamabe::{solve_sigma, solve_stages, tractor_residual, update_coefficient_check, yamabe_residual};
use confgeom_core::Result;

const FLAT_ZERO_TOL: f64 = 1e-11;
const WEIGHT_TOL: f64 = 1e-7;
const IDENTITY_TOL: f64 = 1e-8;
const TRACTOR_TOL: f64 = 1e-9;
const BALL_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const OBSTRUCTION_FLOOR: f64 = 1e-3;
const UPDATE_TOL: f64 = 1e-12;
const ROUTE_TOL: f64 = 1e-10;
const IIO_TOL: f64 = 1e-5;
const EH_TOL: f64 = 1e-3;
const W2_TOL: f64 = 2e-3;
const W2_ROUTES_TOL: f64 = 1e-8;
/// Gauge and pure-trace variations must vanish relative to a generic variation of the same data.
const QUADRATURE_TOL: f64 = 1e-6;
const UMBILIC_F_TOL: f64 = 1e-8;
const UMBILIC_TOL: f64 = 1e-7;
const CONTROL_FLOOR: f64 = 1e-3;
const PAIRING_TOL: f64 = 1e-5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn worst(checks: &[Check]) -> (String, f64) {
    checks
        .iter()
        .fold((String::from("-"), 0.0), |acc, c| if c.error > acc.1 || c.error.is_nan() { (c.name.clone(), c.error) } else { acc })
}

fn flat_zero() -> Result<Verdict> {
    let checks = flat_zero_suite(&[0.1, -0.2, 0.3, 0.0])?;
    let (name, err) = worst(&checks);
    Ok(Verdict { pass: err <= FLAT_ZERO_TOL, detail: format!("{} quantities, max {err:.1e} ({name})", checks.len()) })
}

fn conformal_weights() -> Result<Verdict> {
    let invs = [Invariant::Weyl, Invariant::Bach, Invariant::Iio, Invariant::Fialkow, Invariant::Iv4];
    let mut max = [0.0f64; 5];
    for seed in 0..20 {
        let rs = random_setting(seed, 4);
        let hyp = HypersurfaceSpec::new(rs.s.clone());
        for (k, inv) in invs.iter().enumerate() {
            let c = weight_check(*inv, &rs.metric, Some(&hyp), &rs.omega, &rs.point)?;
            max[k] = max[k].max(c.rel_err);
        }
    }
    let pass = max.iter().all(|e| *e <= WEIGHT_TOL);
    let detail = invs.iter().zip(&max).map(|(i, e)| format!("{} {e:.1e}", i.name())).collect::<Vec<_>>().join(", ");
    Ok(Verdict { pass, detail: format!("20 settings: {detail}") })
}

fn identities() -> Result<Verdict> {
    let mut all = Vec::new();
    for seed in 0..10 {
        let rs = random_setting(seed, 4);
        all.extend(identity_suite(&rs.metric, &HypersurfaceSpec::new(rs.s.clone()), &rs.point)?);
    }
    for seed in 0..3 {
        let rs = random_setting(100 + seed, 5);
        let checks = identity_suite(&rs.metric, &HypersurfaceSpec::new(rs.s.clone()), &rs.point)?;
        all.extend(checks.into_iter().map(|c| Check { name: format!("{} (d=5)", c.name), error: c.error }));
    }
    let (name, err) = worst(&all);
    Ok(Verdict { pass: err <= IDENTITY_TOL, detail: format!("{} residuals, max {err:.1e} ({name})", all.len()) })
}

fn tractors() -> Result<Verdict> {
    let mut all = Vec::new();
    for seed in 0..5 {
        let rs = random_setting(seed, 4);
        all.extend(tractor_suite(&rs.metric, &HypersurfaceSpec::new(rs.s.clone()), &rs.omega, &rs.point, seed)?);
    }
    let (name, err) = worst(&all);
    Ok(Verdict { pass: err <= TRACTOR_TOL, detail: format!("{} checks, max {err:.1e} ({name})", all.len()) })
}

fn singular_yamabe() -> Result<Verdict> {
    let mut notes = Vec::new();
    let mut pass = true;

    let ball = HypersurfaceSpec::new(ball_defining_function(4));
    let exp = solve_sigma(&MetricSpec::flat(4), &ball, 4, &[0.5, 0.5, 0.5, 0.5])?;
    let ball_res = exp.residual_through(5);
    pass &= ball_res <= BALL_TOL;
    notes.push(format!("ball {ball_res:.1e}"));

    let plane = HypersurfaceSpec::parse("x4", 4)?;
    let (mut low, mut s4_min) = (0.0f64, f64::INFINITY);
    let mut upd = 0.0f64;
    let mut route = 0.0f64;
    for seed in 0..10 {
        let mut r = rng(500 + seed);
        let g = random_metric(&mut r, 4, 0.1);
        let p = [0.1, -0.1, 0.2, 0.0];
        if seed < 5 {
            let exp = solve_stages(&g, &plane, &p, 3, 6)?;
            let c = exp.residual_coefficients();
            low = low.max(c[..4].iter().fold(0.0, |m, v| m.max(v.abs())));
            s4_min = s4_min.min(c[4].abs());
            let direct = yamabe_residual(&exp.sigma, &exp.geom.g, &exp.geom.ginv, &sqrt_det(&exp.geom)?, &exp.j)?;
            let tractor = tractor_residual(&exp.sigma, &exp.geom, &exp.j)?;
            route = route.max((&direct - &tractor).max_abs());
        }
        for k in 1..4 {
            let (w_formula, w_solved, _, _) = update_coefficient_check(&g, &plane, &p, k)?;
            upd = upd.max((w_formula - w_solved).abs() / w_formula.abs().max(1.0));
        }
    }
    pass &= low <= RESIDUAL_TOL && s4_min >= OBSTRUCTION_FLOOR && upd <= UPDATE_TOL && route <= ROUTE_TOL;
    notes.push(format!("s0..s3 {low:.1e}, min |s4| {s4_min:.2e}, update {upd:.1e}, routes {route:.1e}"));
    Ok(Verdict { pass, detail: notes.join("; ") })
}

fn sqrt_det(geom: &confgeom_core::curvature::Geometry) -> Result<confgeom_core::jets::Jet> {
    Ok(confgeom_core::metric::determinant(&geom.g)?.sqrt()?)
}

fn windowed_variation(r: &mut rand_chacha::ChaCha8Rng, dom: &QuadratureDomain, amp: f64) -> VariationField {
    let comps: Vec<Expr> = (0..16).map(|_| random_poly(r, &[0, 1, 2, 3], 0, 2, amp)).collect();
    VariationField::windowed(4, &comps, &dom.window()).expect("16 components")
}

fn variations() -> Result<Verdict> {
    let mut notes = Vec::new();
    let mut pass = true;

    // Pointwise lemma for the trace-free second fundamental form.
    let rs = random_setting(7, 4);
    let hyp = HypersurfaceSpec::new(rs.s.clone());
    let mut r = rng(70);
    let comps: Vec<Expression> =
        (0..16).map(|_| Expression::from_expr(random_poly(&mut r, &[0, 1, 2, 3], 0, 2, 0.3), 4)).collect();
    let h = VariationField::components(4, comps)?;
    let iio = verify_iio_variation(&rs.metric, &hyp, &h, &rs.point, 1e-4)?;
    pass &= iio.rel_err <= IIO_TOL;
    notes.push(format!("iio {:.1e}", iio.rel_err));

    let mut r = rng(71);
    let g = random_metric(&mut r, 4, 0.04);
    let dom = QuadratureDomain::cube(4, -0.5, 0.5, 12)?;
    let h = windowed_variation(&mut r, &dom, 0.3);

    let eh = verify_eh_variation(&g, &h, &dom, 1e-3)?;
    pass &= eh.rel_err <= EH_TOL;
    notes.push(format!("eh {:.1e}", eh.rel_err));

    let w2 = verify_weyl2_variation(&g, &h, &dom, 1e-3)?;
    pass &= w2.rel_err <= W2_TOL && w2.routes_rel_err <= W2_ROUTES_TOL;
    notes.push(format!("weyl2 {:.1e}, routes {:.1e}", w2.rel_err, w2.routes_rel_err));

    let scale = w2.lhs_fd.abs();
    let coarse = QuadratureDomain::cube(4, -0.5, 0.5, 8)?;
    let f = random_poly(&mut r, &[0, 1, 2, 3], 0, 2, 0.3) * coarse.window();
    let trace = fd_weyl2(&g, &VariationField::trace(Expression::from_expr(f, 4)), &coarse, 1e-3)?.extrapolated;
    let k: Vec<Expression> = (0..4)
        .map(|_| Expression::from_expr(random_poly(&mut r, &[0, 1, 2, 3], 0, 2, 0.3) * coarse.interior_window(), 4))
        .collect();
    let lie = fd_weyl2(&g, &VariationField::lie(k), &coarse, 1e-3)?.extrapolated;
    pass &= trace.abs() <= QUADRATURE_TOL * scale && lie.abs() <= QUADRATURE_TOL * scale;
    notes.push(format!("trace {:.1e}, diffeo {:.1e} (scale {scale:.1e})", trace.abs(), lie.abs()));
    Ok(Verdict { pass, detail: notes.join("; ") })
}

fn umbilic() -> Result<Verdict> {
    let (mut f, mut div, mut obs, mut e) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut control = f64::INFINITY;
    for seed in 0..5 {
        let mut r = rng(800 + seed);
        let (g, _) = conformally_flat(&mut r, 4, 0.3);
        let (hyp, p) = if seed % 2 == 0 {
            (HypersurfaceSpec::parse("x4", 4)?, vec![0.1, -0.2, 0.15, 0.0])
        } else {
            (HypersurfaceSpec::new(ball_defining_function(4)), vec![0.5, -0.5, 0.5, 0.5])
        };
        let u = umbilic_report(&g, &hyp, &p, 1)?;
        f = f.max(u.fialkow);
        div = div.max(u.div_iv4);
        obs = obs.max(u.obstruction);
        e = e.max(u.e_jets.iter().cloned().fold(0.0, f64::max));

        let (s, _) = random_graph(&mut r, 4, 0.5);
        let c = umbilic_report(&g, &HypersurfaceSpec::new(s), &[0.0; 4], 0)?;
        control = control.min(c.iio).min(c.fialkow).min(c.obstruction).min(c.e_jets[0]);
    }
    let pass = f <= UMBILIC_F_TOL && div <= UMBILIC_TOL && obs <= UMBILIC_TOL && e <= UMBILIC_TOL && control >= CONTROL_FLOOR;
    Ok(Verdict {
        pass,
        detail: format!("F {f:.1e}, div IV {div:.1e}, B {obs:.1e}, E(k<=1) {e:.1e}; controls min {control:.2e}"),
    })
}

fn pairing() -> Result<Verdict> {
    let (lower, upper) = ([-0.2; 3], [0.2; 3]);
    let mut max = 0.0f64;
    let mut smallest = f64::INFINITY;
    for seed in 0..5 {
        let mut r = rng(900 + seed);
        let g = random_metric(&mut r, 4, 0.08);
        let (s, _) = random_graph(&mut r, 4, 0.5);
        let omega = bump_omega(4, &[0, 1, 2, 3], &[-0.3; 4], &[0.3; 4], 0.5);
        let c = pairing_check(&g, &HypersurfaceSpec::new(s), &omega, &lower, &upper, 6)?;
        max = max.max(c.rel_err);
        smallest = smallest.min(c.original.abs());
    }
    Ok(Verdict { pass: max <= PAIRING_TOL, detail: format!("max rel change {max:.1e} (min |value| {smallest:.2e})") })
}

type Criterion = (usize, &'static str, u64, fn() -> Result<Verdict>);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "flat-zero suite", 1, flat_zero),
        (2, "conformal weights", 30, conformal_weights),
        (3, "structure identities", 60, identities),
        (4, "tractor suite", 10, tractors),
        (5, "singular Yamabe", 20, singular_yamabe),
        (6, "variational identities", 600, variations),
        (7, "umbilic consequences", 120, umbilic),
        (8, "pairing invariance", 60, pairing),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, title, budget, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} {title:<24} {} | {detail} | {:.1} s (budget {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
