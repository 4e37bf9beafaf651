//! Seeded random geometries for property tests and randomized suites.
//!
//! All draws come from a ChaCha8 stream keyed by a single seed, so a seed fully
//! determines the metric, hypersurface, conformal factor and points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Expr, Expression, Func};
use crate::metric::{spec_from_exprs, MetricSource, MetricSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn monomial(exps: &[usize]) -> Option<Expr> {
    let mut term: Option<Expr> = None;
    for (i, &e) in exps.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let f = if e == 1 { Expr::var(i) } else { Expr::var(i).powi(e as i64) };
        term = Some(match term {
            None => f,
            Some(t) => t * f,
        });
    }
    term
}

fn exponents(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; vars]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &out {
            for v in 0..vars {
                let mut f = e.clone();
                f[v] += 1;
                if !next.contains(&f) && !out.contains(&f) {
                    next.push(f);
                }
            }
        }
        out.extend(next);
    }
    out
}

/// Random polynomial in the coordinates listed in `vars` with total degree in
/// `min_degree..=max_degree` and coefficients uniform in `[−amp, amp]`.
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[usize], min_degree: usize, max_degree: usize, amp: f64) -> Expr {
    let mut sum: Option<Expr> = None;
    for e in exponents(vars.len(), max_degree) {
        let deg: usize = e.iter().sum();
        if deg < min_degree {
            continue;
        }
        let c: f64 = rng.gen_range(-amp..=amp);
        let mut full = vec![0; vars.iter().max().map_or(0, |m| m + 1)];
        for (k, &v) in vars.iter().enumerate() {
            full[v] = e[k];
        }
        let term = match monomial(&full) {
            None => Expr::num(c),
            Some(m) => Expr::num(c) * m,
        };
        sum = Some(match sum {
            None => term,
            Some(s) => s + term,
        });
    }
    sum.unwrap_or_else(|| Expr::num(0.0))
}

/// `g = δ + ε·p` with symmetric cubic polynomial perturbation.
pub fn random_metric(rng: &mut ChaCha8Rng, dim: usize, eps: f64) -> MetricSpec {
    let vars: Vec<usize> = (0..dim).collect();
    let mut comps = vec![Expr::num(0.0); dim * dim];
    for a in 0..dim {
        for b in a..dim {
            let p = random_poly(rng, &vars, 0, 3, eps);
            let e = if a == b { Expr::num(1.0) + p } else { p };
            comps[a * dim + b] = e.clone();
            comps[b * dim + a] = e;
        }
    }
    spec_from_exprs(dim, comps)
}

/// `e^{2φ} δ` with a random polynomial `φ`.
pub fn conformally_flat(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> (MetricSpec, Expression) {
    let vars: Vec<usize> = (0..dim).collect();
    let phi = random_poly(rng, &vars, 1, 3, amp);
    conformally_flat_from(dim, phi)
}

pub fn conformally_flat_from(dim: usize, phi: Expr) -> (MetricSpec, Expression) {
    let factor = Expr::call(Func::Exp, Expr::num(2.0) * phi.clone());
    (MetricSpec::conformal(Expression::from_expr(factor, dim)), Expression::from_expr(phi, dim))
}

/// Graph hypersurface `x_d = q(x')`: returns `s = x_d − q` and `q`.
pub fn random_graph(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> (Expression, Expression) {
    let vars: Vec<usize> = (0..dim - 1).collect();
    let q = random_poly(rng, &vars, 2, 3, amp);
    let s = Expr::var(dim - 1) - q.clone();
    (Expression::from_expr(s, dim), Expression::from_expr(q, dim))
}

/// Positive conformal factor `exp(poly)`.
pub fn random_omega(rng: &mut ChaCha8Rng, dim: usize, amp: f64) -> Expression {
    let vars: Vec<usize> = (0..dim).collect();
    let p = random_poly(rng, &vars, 1, 2, amp);
    Expression::from_expr(Expr::call(Func::Exp, p), dim)
}

/// Point near the origin with the last coordinate placed on the graph `x_d = q(x')`.
pub fn point_on_graph(rng: &mut ChaCha8Rng, q: &Expression, radius: f64) -> Vec<f64> {
    let dim = q.dim();
    let mut p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
    p[dim - 1] = 0.0;
    p[dim - 1] = q.eval(&p).expect("polynomial");
    p
}

/// A random curved geometry with a graph hypersurface and a point on it.
#[derive(Debug, Clone)]
pub struct RandomSetting {
    pub metric: MetricSpec,
    pub s: Expression,
    pub q: Expression,
    pub omega: Expression,
    pub point: Vec<f64>,
}

pub fn random_setting(seed: u64, dim: usize) -> RandomSetting {
    let mut r = rng(seed);
    loop {
        let metric = random_metric(&mut r, dim, 0.08);
        let (s, q) = random_graph(&mut r, dim, 0.3);
        let omega = random_omega(&mut r, dim, 0.3);
        let point = point_on_graph(&mut r, &q, 0.3);
        if metric.at_point(&point).is_ok() {
            return RandomSetting { metric, s, q, omega, point };
        }
    }
}

/// Flat hyperbolic-ball defining function `(1 − |x|²)/2`.
pub fn ball_defining_function(dim: usize) -> Expression {
    let mut r2 = Expr::num(0.0);
    for i in 0..dim {
        r2 = r2 + Expr::var(i).powi(2);
    }
    Expression::from_expr((Expr::num(1.0) - r2) / Expr::num(2.0), dim)
}

/// Round metric `4δ/(1+|x|²)²`.
pub fn round_sphere(dim: usize) -> MetricSpec {
    let mut r2 = Expr::num(1.0);
    for i in 0..dim {
        r2 = r2 + Expr::var(i).powi(2);
    }
    MetricSpec::conformal(Expression::from_expr(Expr::num(4.0) / r2.powi(2), dim))
}

/// Upper half-space metric `δ/x_d²`.
pub fn hyperbolic_half_space(dim: usize) -> MetricSpec {
    MetricSpec::conformal(Expression::from_expr(Expr::num(1.0) / Expr::var(dim - 1).powi(2), dim))
}

/// `1 + amp·Π(1 − ξ_i²)³` over the listed axes, with `ξ` mapping `[lower_i, upper_i]`
/// onto `[−1, 1]`: equals 1 to third order on the faces of the box.
pub fn bump_omega(dim: usize, axes: &[usize], lower: &[f64], upper: &[f64], amp: f64) -> Expression {
    let mut b = Expr::num(amp);
    for (k, &i) in axes.iter().enumerate() {
        let c = 0.5 * (lower[k] + upper[k]);
        let r = 0.5 * (upper[k] - lower[k]);
        let xi = (Expr::var(i) - Expr::num(c)) / Expr::num(r);
        b = b * (Expr::num(1.0) - xi.powi(2)).powi(3);
    }
    Expression::from_expr(Expr::num(1.0) + b, dim)
}
