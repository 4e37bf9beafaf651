//! Command dispatch: each command expands into jobs, jobs run in parallel and the
//! report keeps declaration order.

use std::collections::BTreeMap;
use std::time::Instant;

use confgeom_core::action::{
    scaled_step, verify_eh_variation, verify_iio_variation, verify_weyl2_variation, QuadratureDomain, VariationField,
};
use confgeom_core::checks::{curvature_suite, pairing_check, surface_suite, tractor_suite, weight_check, Check, Invariant};
use confgeom_core::curvature::curvature_stack;
use confgeom_core::expr::{Expr, Expression};
use confgeom_core::hypersurface::{
    codazzi_identity, extrinsic_stack, fialkow_identity, locate_on_surface, Chart, IdentitySides, SurfaceFields,
};
use confgeom_core::metric::determinant;
use confgeom_core::samples::{bump_omega, random_omega, rng};
use confgeom_core::tensor::{Down, TensorValue};
use confgeom_core::yamabe::{
    e_normal_jets, max_determined_normal_order, obstruction_density, solve_sigma, tractor_residual, yamabe_residual,
};
use rand::Rng;
use rayon::prelude::*;

use crate::manifest::Manifest;
use crate::report::{digest, scalar, tensor, vector, Entry, Record, Report};

/// FD base step for the action checks, divided by `max(1, max|h|)`.
const STEP_ACTION: f64 = 1e-3;
const STEP_IIO: f64 = 1e-4;
const OMEGA_AMPLITUDE: f64 = 0.3;
const PAIRING_BUMP: f64 = 0.5;
/// Half-width of the tangential box around the base point for invariance trials.
const TRIAL_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    Eh,
    Weyl2,
    Iio,
    Fialkow,
    Codazzi,
}

impl Identity {
    pub const ALL: [Identity; 5] = [Identity::Eh, Identity::Weyl2, Identity::Iio, Identity::Fialkow, Identity::Codazzi];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Eh => "eh",
            Identity::Weyl2 => "weyl2",
            Identity::Iio => "iio",
            Identity::Fialkow => "fialkow",
            Identity::Codazzi => "codazzi",
        }
    }

    pub fn from_name(s: &str) -> Option<Identity> {
        Identity::ALL.into_iter().find(|i| i.name() == s)
    }
}

#[derive(Debug, Clone)]
pub enum Command {
    Curvature,
    Hypersurface,
    Yamabe,
    TractorCheck,
    Invariance { invariant: Invariant, trials: usize },
    /// Empty: take the identities listed in the manifest checks.
    Verify { identities: Vec<Identity> },
    Pairing,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Hypersurface => "hypersurface",
            Command::Yamabe => "yamabe",
            Command::TractorCheck => "tractor-check",
            Command::Invariance { .. } => "invariance",
            Command::Verify { .. } => "verify",
            Command::Pairing => "pairing",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub tolerance: Option<f64>,
    pub nodes: Option<usize>,
    pub order: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Manifest(String),
    Numerical(String),
}

impl From<confgeom_core::Error> for Failure {
    fn from(e: confgeom_core::Error) -> Failure {
        Failure::Numerical(e.to_string())
    }
}

/// Result of one comparison before tolerances are applied.
struct Outcome {
    base: String,
    default_tol: f64,
    values: Vec<Entry>,
    oracle: Vec<Entry>,
    residuals: Vec<Entry>,
    abs_err: Option<f64>,
    rel_err: f64,
}

impl Outcome {
    fn new(base: impl Into<String>, default_tol: f64, rel_err: f64) -> Outcome {
        Outcome {
            base: base.into(),
            default_tol,
            values: Vec::new(),
            oracle: Vec::new(),
            residuals: Vec::new(),
            abs_err: None,
            rel_err,
        }
    }

    fn values(mut self, v: Vec<Entry>) -> Outcome {
        self.values = v;
        self
    }

    fn oracle(mut self, v: Vec<Entry>) -> Outcome {
        self.oracle = v;
        self
    }

    fn residuals(mut self, v: Vec<Entry>) -> Outcome {
        self.residuals = v;
        self
    }

    fn abs_err(mut self, e: f64) -> Outcome {
        self.abs_err = Some(e);
        self
    }

    /// Tensor comparison: `values` against `oracle`, errors from their difference.
    fn compare(base: &str, default_tol: f64, name: &str, got: &TensorValue, want: &TensorValue) -> Outcome {
        let diff = got.sub(want);
        let rel = diff.norm() / got.norm().max(want.norm()).max(1e-10);
        Outcome::new(base, default_tol, rel).values(tensor(name, got)).oracle(tensor(name, want)).abs_err(diff.max_abs())
    }

    fn scalar_compare(base: &str, default_tol: f64, name: &str, got: f64, want: f64) -> Outcome {
        let abs = (got - want).abs();
        let rel = abs / got.abs().max(want.abs()).max(1e-300);
        Outcome::new(base, default_tol, rel).values(scalar(name, got)).oracle(scalar(name, want)).abs_err(abs)
    }
}

type JobFn<'a> = Box<dyn Fn() -> confgeom_core::Result<Vec<Outcome>> + Send + Sync + 'a>;

struct Job<'a> {
    /// Appended to each outcome's base name, e.g. `[p1]`.
    suffix: String,
    /// Manifest check name that also overrides the tolerance of every outcome.
    group: &'static str,
    run: JobFn<'a>,
}

fn residual_entries(checks: &[Check]) -> Vec<Entry> {
    checks.iter().map(|c| Entry { label: c.name.clone(), value: c.error }).collect()
}

fn worst(checks: &[Check]) -> f64 {
    checks.iter().fold(0.0f64, |m, c| if c.error.is_nan() { f64::NAN } else { m.max(c.error) })
}

fn point_suffix(m: &Manifest, i: usize) -> String {
    if m.points.len() == 1 { String::new() } else { format!("[p{i}]") }
}

fn variation_roots(m: &Manifest) -> Result<Vec<Expr>, Failure> {
    m.variation
        .as_ref()
        .map(|h| h.iter().map(|e| e.root().clone()).collect())
        .ok_or_else(|| Failure::Manifest("this check needs a `variation` matrix".into()))
}

fn quadrature(m: &Manifest, opts: &Options) -> Result<(QuadratureDomain, bool), Failure> {
    let dom = m.domain.as_ref().ok_or_else(|| Failure::Manifest("this check needs a `[domain]` table".into()))?;
    if opts.nodes.is_some_and(|n| n < 2) {
        return Err(Failure::Manifest("--nodes must be at least 2".into()));
    }
    Ok((dom.quadrature(opts.nodes)?, dom.window))
}

fn omega_or_seeded(m: &Manifest, seed: u64) -> Expression {
    m.omega.clone().unwrap_or_else(|| random_omega(&mut rng(seed), m.dim, OMEGA_AMPLITUDE))
}

fn curvature_jobs<'a>(m: &'a Manifest) -> Vec<Job<'a>> {
    let d = m.dim;
    m.points
        .iter()
        .enumerate()
        .map(|(i, p)| Job {
            suffix: point_suffix(m, i),
            group: "curvature",
            run: Box::new(move || {
                let c = curvature_stack(&m.metric, p, d >= 4)?;
                let mut values = tensor("g", &c.metric.g);
                values.extend(tensor("christoffel", &c.gamma));
                values.extend(tensor("riemann", &c.riem));
                values.extend(tensor("ricci", &c.ric));
                values.extend(scalar("scalar", c.sc));
                values.extend(tensor("schouten", &c.schouten));
                values.extend(scalar("j", c.j));
                values.extend(tensor("weyl", &c.weyl));
                if let Some(t) = &c.cotton {
                    values.extend(tensor("cotton", t));
                }
                if let Some(t) = &c.bach {
                    values.extend(tensor("bach", t));
                }
                let suite = curvature_suite(&m.metric, p)?;
                Ok(vec![Outcome::new("curvature", 1e-8, worst(&suite)).values(values).residuals(residual_entries(&suite))])
            }),
        })
        .collect()
}

fn hypersurface_jobs<'a>(m: &'a Manifest) -> Vec<Job<'a>> {
    m.points
        .iter()
        .enumerate()
        .map(|(i, p)| Job {
            suffix: point_suffix(m, i),
            group: "hypersurface",
            run: Box::new(move || {
                let values = if m.dim >= 4 {
                    let b = extrinsic_stack(&m.metric, &m.hyp, p)?;
                    let mut v = tensor("n", &b.n);
                    v.extend(tensor("gbar", &b.gbar));
                    v.extend(tensor("ii", &b.ii));
                    v.extend(scalar("mean_curvature", b.h));
                    v.extend(tensor("iio", &b.iio));
                    v.extend(tensor("fialkow", &b.fialkow));
                    v.extend(tensor("weyl_nn", &b.weyl_nn));
                    v.extend(tensor("weyl_tangential", &b.weyl_tangential));
                    v.extend(tensor("cotton_normal", &b.cotton_normal));
                    if let Some(t) = &b.fourth_form {
                        v.extend(tensor("iv4", t));
                    }
                    if let Some(t) = &b.div_fourth_form {
                        v.extend(tensor("div_iv4", t));
                    }
                    v
                } else {
                    let sf = SurfaceFields::new(&m.metric, &m.hyp, p, 2)?;
                    let mut v = tensor("n", &sf.n.value(vec![Down], 1));
                    v.extend(tensor("gbar", &sf.gbar.value(vec![Down, Down], 2)));
                    v.extend(tensor("ii", &sf.ii.value(vec![Down, Down], 1)));
                    v.extend(scalar("mean_curvature", sf.h.value(vec![], -1).value()));
                    v.extend(tensor("iio", &sf.iio.value(vec![Down, Down], 1)));
                    v
                };
                let suite = surface_suite(&m.metric, &m.hyp, p)?;
                Ok(vec![Outcome::new("hypersurface", 1e-8, worst(&suite)).values(values).residuals(residual_entries(&suite))])
            }),
        })
        .collect()
}

fn yamabe_jobs<'a>(m: &'a Manifest, opts: &Options) -> Result<Vec<Job<'a>>, Failure> {
    let d = m.dim;
    let order = opts.order.unwrap_or(d);
    if !(1..=d).contains(&order) {
        return Err(Failure::Manifest(format!("--order must be between 1 and {d}")));
    }
    Ok(m.points
        .iter()
        .enumerate()
        .map(|(i, p)| Job {
            suffix: point_suffix(m, i),
            group: "yamabe",
            run: Box::new(move || {
                let exp = solve_sigma(&m.metric, &m.hyp, order, p)?;
                let mut values = vector("sigma_collar", &exp.sigma_along_collar());
                values.extend(vector("residual_collar", exp.residual_coefficients()));
                if let Ok(b) = obstruction_density(&exp) {
                    values.extend(scalar("obstruction", b));
                }
                let jets = (0..=max_determined_normal_order(d)).rev().find_map(|k| e_normal_jets(&exp, k).ok());
                for j in jets.unwrap_or_default() {
                    values.extend(tensor(&format!("e{}_tangential", j.k), &j.tangential));
                    values.extend(tensor(&format!("e{}_mixed", j.k), &j.mixed));
                    values.extend(scalar(format!("e{}_normal", j.k), j.normal));
                }
                let through = exp.residual_through(exp.stages);
                let residual = Outcome::new("yamabe-residual", 1e-8, through).values(values).abs_err(through);

                let sqrt_det = determinant(&exp.geom.g)?.sqrt()?;
                let direct = yamabe_residual(&exp.sigma, &exp.geom.g, &exp.geom.ginv, &sqrt_det, &exp.j)?;
                let via_tractor = tractor_residual(&exp.sigma, &exp.geom, &exp.j)?;
                let n = direct.order().min(via_tractor.order());
                let (a, b) = (direct.truncate(n), via_tractor.truncate(n));
                let diff = (&a - &b).max_abs();
                let routes = Outcome::new("yamabe-routes", 1e-10, diff / a.max_abs().max(1.0))
                    .values(vector("direct", a.coeffs()))
                    .oracle(vector("tractor", b.coeffs()))
                    .abs_err(diff);
                Ok(vec![residual, routes])
            }),
        })
        .collect())
}

fn tractor_jobs<'a>(m: &'a Manifest, seed: u64) -> Vec<Job<'a>> {
    m.points
        .iter()
        .enumerate()
        .map(|(i, p)| Job {
            suffix: point_suffix(m, i),
            group: "tractor",
            run: Box::new(move || {
                let omega = omega_or_seeded(m, seed);
                let suite = tractor_suite(&m.metric, &m.hyp, &omega, p, seed)?;
                Ok(suite
                    .into_iter()
                    .map(|c| Outcome::new(c.name.clone(), 1e-9, c.error).abs_err(c.error).residuals(scalar(c.name, c.error)))
                    .collect())
            }),
        })
        .collect()
}

/// Trial `t` draws from stream `t` of the seeded generator, so trials are independent
/// of scheduling and of the trial count.
fn invariance_jobs<'a>(m: &'a Manifest, inv: Invariant, trials: usize, seed: u64) -> Vec<Job<'a>> {
    let d = m.dim;
    let base = &m.points[0];
    (0..trials)
        .map(|t| Job {
            suffix: format!("[trial {t}]"),
            group: inv.name(),
            run: Box::new(move || {
                let mut r = rng(seed);
                r.set_stream(t as u64);
                let omega = random_omega(&mut r, d, OMEGA_AMPLITUDE);
                let mut p: Vec<f64> = base.iter().map(|x| x + r.gen_range(-TRIAL_RADIUS..=TRIAL_RADIUS)).collect();
                let hyp = inv.needs_surface().then_some(&m.hyp);
                if hyp.is_some() {
                    p[d - 1] = locate_on_surface(&m.hyp, &p, d - 1)?;
                }
                let wc = weight_check(inv, &m.metric, hyp, &omega, &p)?;
                let expected = wc.original.scale(wc.omega.powi(wc.weight));
                let mut out = Outcome::compare(inv.name(), 1e-7, inv.name(), &wc.rescaled, &expected);
                out.rel_err = wc.rel_err;
                out.residuals = vector("point", &p);
                out.residuals.extend(scalar("omega", wc.omega));
                out.residuals.extend(scalar("weight", wc.weight as f64));
                Ok(vec![out])
            }),
        })
        .collect()
}

fn sides(base: &str, tol: f64, s: &IdentitySides) -> Outcome {
    let mut o = Outcome::compare(base, tol, base, &s.lhs, &s.rhs);
    o.rel_err = s.rel_err();
    o
}

fn verify_jobs<'a>(m: &'a Manifest, ids: &[Identity], opts: &Options) -> Result<Vec<Job<'a>>, Failure> {
    let mut jobs = Vec::new();
    for &id in ids {
        match id {
            Identity::Eh | Identity::Weyl2 => {
                let (dom, windowed) = quadrature(m, opts)?;
                let comps = variation_roots(m)?;
                let window = if windowed { dom.window() } else { Expr::num(1.0) };
                let h = VariationField::windowed(m.dim, &comps, &window)?;
                jobs.push(Job {
                    suffix: String::new(),
                    group: id.name(),
                    run: Box::new(move || {
                        let step = scaled_step(STEP_ACTION, &m.metric, &h, &dom)?;
                        if id == Identity::Eh {
                            let r = verify_eh_variation(&m.metric, &h, &dom, step)?;
                            let o = Outcome::scalar_compare("eh", 1e-3, "dS", r.lhs_fd, r.rhs)
                                .residuals([scalar("bulk", r.bulk), scalar("boundary", r.boundary), scalar("step", step)].concat());
                            Ok(vec![o])
                        } else {
                            let r = verify_weyl2_variation(&m.metric, &h, &dom, step)?;
                            let main = Outcome::scalar_compare("weyl2", 2e-3, "dS", r.lhs_fd, r.rhs).residuals(
                                [scalar("bulk", r.bulk), scalar("boundary", r.boundary_final), scalar("step", step)].concat(),
                            );
                            let mut routes = Outcome::scalar_compare(
                                "weyl2-routes",
                                1e-8,
                                "boundary",
                                r.boundary_delta_r,
                                r.boundary_final,
                            )
                            .residuals(scalar("boundary_raw", r.boundary_raw));
                            routes.rel_err = r.routes_rel_err;
                            Ok(vec![main, routes])
                        }
                    }),
                });
            }
            Identity::Iio => {
                let comps = m.variation.clone().ok_or_else(|| Failure::Manifest("iio needs a `variation` matrix".into()))?;
                let h = VariationField::components(m.dim, comps)?;
                for (i, p) in m.points.iter().enumerate() {
                    let h = h.clone();
                    jobs.push(Job {
                        suffix: point_suffix(m, i),
                        group: "iio",
                        run: Box::new(move || {
                            let r = verify_iio_variation(&m.metric, &m.hyp, &h, p, STEP_IIO)?;
                            let mut o = Outcome::compare("iio", 1e-5, "d_iio", &r.lhs_fd, &r.rhs);
                            o.rel_err = r.rel_err;
                            Ok(vec![o])
                        }),
                    });
                }
            }
            Identity::Fialkow | Identity::Codazzi => {
                for (i, p) in m.points.iter().enumerate() {
                    jobs.push(Job {
                        suffix: point_suffix(m, i),
                        group: id.name(),
                        run: Box::new(move || {
                            let sf = SurfaceFields::new(&m.metric, &m.hyp, p, 4)?;
                            let s = if id == Identity::Fialkow {
                                fialkow_identity(&sf, &Chart::new(&sf.geom.g, &sf.s, None)?)?
                            } else {
                                codazzi_identity(&sf)?
                            };
                            Ok(vec![sides(id.name(), 1e-8, &s)])
                        }),
                    });
                }
            }
        }
    }
    Ok(jobs)
}

fn pairing_jobs<'a>(m: &'a Manifest, opts: &Options) -> Result<Vec<Job<'a>>, Failure> {
    let dom = m.domain.as_ref().ok_or_else(|| Failure::Manifest("pairing needs a `[domain]` table".into()))?;
    let d = m.dim;
    let nodes = opts.nodes.unwrap_or(dom.nodes[0]);
    let omega = m.omega.clone().unwrap_or_else(|| {
        let axes: Vec<usize> = (0..d).collect();
        bump_omega(d, &axes, &dom.lower, &dom.upper, PAIRING_BUMP)
    });
    Ok(vec![Job {
        suffix: String::new(),
        group: "pairing",
        run: Box::new(move || {
            let c = pairing_check(&m.metric, &m.hyp, &omega, &dom.lower[..d - 1], &dom.upper[..d - 1], nodes)?;
            let mut o = Outcome::scalar_compare("pairing", 1e-5, "integral", c.rescaled, c.original);
            o.rel_err = c.rel_err;
            Ok(vec![o])
        }),
    }])
}

/// Identities named by `--identity`, or else by the manifest checks.
fn requested_identities(m: &Manifest, ids: &[Identity]) -> Result<Vec<Identity>, Failure> {
    if !ids.is_empty() {
        return Ok(ids.to_vec());
    }
    let from_manifest: Vec<Identity> = m.checks.iter().filter_map(|c| Identity::from_name(&c.name)).collect();
    if from_manifest.is_empty() {
        return Err(Failure::Manifest("no identity requested: pass --identity or list one under [[checks]]".into()));
    }
    Ok(from_manifest)
}

pub fn execute(cmd: &Command, m: &Manifest, manifest_label: &str, opts: &Options) -> Result<Report, Failure> {
    let seed = opts.seed.unwrap_or(m.seed);
    let jobs = match cmd {
        Command::Curvature => curvature_jobs(m),
        Command::Hypersurface => hypersurface_jobs(m),
        Command::Yamabe => yamabe_jobs(m, opts)?,
        Command::TractorCheck => tractor_jobs(m, seed),
        Command::Invariance { invariant, trials } => invariance_jobs(m, *invariant, *trials, seed),
        Command::Verify { identities } => verify_jobs(m, &requested_identities(m, identities)?, opts)?,
        Command::Pairing => pairing_jobs(m, opts)?,
    };
    let params = format!("{cmd:?} nodes={:?} order={:?} seed={seed}", opts.nodes, opts.order);

    let results: Vec<(confgeom_core::Result<Vec<Outcome>>, f64)> = jobs
        .par_iter()
        .map(|job| {
            let t0 = Instant::now();
            let r = (job.run)();
            (r, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut tolerances = BTreeMap::new();
    let mut records = Vec::new();
    for (job, (result, wall)) in jobs.iter().zip(results) {
        let outcomes = result.map_err(|e| Failure::Numerical(format!("{}{}: {e}", job.group, job.suffix)))?;
        let share = wall / outcomes.len().max(1) as f64;
        // A group name that is also an outcome name only overrides that outcome.
        let group_is_check = outcomes.iter().any(|o| o.base == job.group);
        for o in outcomes {
            let tol = opts
                .tolerance
                .or_else(|| m.tolerance_override(&o.base))
                .or_else(|| if group_is_check { None } else { m.tolerance_override(job.group) })
                .unwrap_or(o.default_tol);
            tolerances.insert(o.base.clone(), tol);
            let name = format!("{}{}", o.base, job.suffix);
            records.push(Record {
                inputs_digest: digest(&m.source, &params, &name),
                name,
                values: o.values,
                oracle: o.oracle,
                residuals: o.residuals,
                abs_err: o.abs_err,
                pass: o.rel_err <= tol,
                rel_err: o.rel_err,
                tolerance: tol,
                wall_time_s: share,
            });
        }
    }
    Ok(Report::new(cmd.name().to_string(), manifest_label.to_string(), seed, tolerances, records))
}
