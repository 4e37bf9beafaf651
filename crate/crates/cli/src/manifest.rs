//! TOML manifest: geometry, hypersurface, optional rescaling/variation, quadrature box, checks.

use std::collections::HashSet;
use std::path::Path;

use confgeom_core::action::QuadratureDomain;
use confgeom_core::expr::Expression;
use confgeom_core::hypersurface::{locate_on_surface, HypersurfaceSpec};
use confgeom_core::metric::MetricSpec;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawManifest {
    pub dimension: usize,
    pub coordinates: Option<Vec<String>>,
    pub metric: Vec<Vec<String>>,
    pub defining_function: String,
    pub conformal_factor: Option<String>,
    pub variation: Option<Vec<Vec<String>>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub domain: Option<RawDomain>,
    #[serde(default)]
    pub checks: Vec<CheckRequest>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Nodes,
    /// Multiply the variation by the box window so it vanishes to third order on every face.
    #[serde(default = "yes")]
    pub window: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Nodes {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub name: String,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
    pub window: bool,
}

impl Domain {
    pub fn quadrature(&self, nodes: Option<usize>) -> confgeom_core::Result<QuadratureDomain> {
        let n = nodes.map_or_else(|| self.nodes.clone(), |n| vec![n; self.lower.len()]);
        QuadratureDomain::new(self.lower.clone(), self.upper.clone(), n)
    }
}

/// A validated manifest.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub dim: usize,
    pub metric: MetricSpec,
    pub hyp: HypersurfaceSpec,
    pub omega: Option<Expression>,
    /// Upper-triangle-completed `h_ab`, row-major.
    pub variation: Option<Vec<Expression>>,
    pub points: Vec<Vec<f64>>,
    pub domain: Option<Domain>,
    pub checks: Vec<CheckRequest>,
    pub seed: u64,
    /// Source text, hashed into every report record.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestError(pub String);

impl std::fmt::Display for ManifestError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ManifestError {}

macro_rules! bail {
    ($($t:tt)*) => { return Err(ManifestError(format!($($t)*))) };
}

fn parse_expr(src: &str, names: &[String], what: &str) -> Result<Expression, ManifestError> {
    Expression::parse_with_names(src, names).map_err(|e| ManifestError(format!("{what}: {e}")))
}

/// Parse a symmetric matrix: the upper triangle is authoritative and each lower entry
/// must be empty or parse to the same expression as its mirror.
fn symmetric_matrix(rows: &[Vec<String>], names: &[String], what: &str) -> Result<Vec<Vec<Expression>>, ManifestError> {
    let d = names.len();
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        bail!("{what} must be a {d}x{d} matrix");
    }
    let mut out = vec![Vec::with_capacity(d); d];
    for a in 0..d {
        for b in 0..d {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            out[a].push(parse_expr(&rows[i][j], names, &format!("{what}[{i}][{j}]"))?);
        }
    }
    for a in 0..d {
        for b in 0..a {
            if !rows[a][b].trim().is_empty() && parse_expr(&rows[a][b], names, &format!("{what}[{a}][{b}]"))? != out[b][a] {
                bail!("{what}[{a}][{b}] = {:?} does not match {what}[{b}][{a}] = {:?}", rows[a][b], rows[b][a]);
            }
        }
    }
    Ok(out)
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError(format!("cannot read {}: {e}", path.display())))?;
        Manifest::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Manifest, ManifestError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| ManifestError(e.message().to_string()))?;
        Manifest::validate(raw, text.to_string())
    }

    fn validate(raw: RawManifest, source: String) -> Result<Manifest, ManifestError> {
        let d = raw.dimension;
        if !(3..=6).contains(&d) {
            bail!("dimension must be between 3 and 6, got {d}");
        }
        let names = match raw.coordinates {
            Some(n) if n.len() != d => bail!("{} coordinate names for dimension {d}", n.len()),
            Some(n) => {
                if n.iter().collect::<HashSet<_>>().len() != d {
                    bail!("coordinate names must be distinct");
                }
                n
            }
            None => (1..=d).map(|i| format!("x{i}")).collect(),
        };
        let metric = MetricSpec::new(symmetric_matrix(&raw.metric, &names, "metric")?)
            .map_err(|e| ManifestError(format!("metric: {e}")))?;
        let hyp = HypersurfaceSpec::new(parse_expr(&raw.defining_function, &names, "defining_function")?);
        let omega = raw.conformal_factor.as_deref().map(|s| parse_expr(s, &names, "conformal_factor")).transpose()?;
        let variation = match &raw.variation {
            Some(rows) => Some(symmetric_matrix(rows, &names, "variation")?.into_iter().flatten().collect()),
            None => None,
        };

        let domain = match raw.domain {
            Some(dom) => {
                if dom.lower.len() != d || dom.upper.len() != d {
                    bail!("domain bounds must have {d} entries");
                }
                if dom.lower.iter().zip(&dom.upper).any(|(l, u)| !(l < u)) {
                    bail!("domain lower bounds must be below the upper bounds");
                }
                let nodes = match dom.nodes {
                    Nodes::Uniform(n) => vec![n; d],
                    Nodes::PerAxis(v) if v.len() == d => v,
                    Nodes::PerAxis(v) => bail!("domain.nodes has {} entries for dimension {d}", v.len()),
                };
                if nodes.iter().any(|&n| n < 2) {
                    bail!("domain.nodes must be at least 2 per axis");
                }
                Some(Domain { lower: dom.lower, upper: dom.upper, nodes, window: dom.window })
            }
            None => None,
        };

        let points = match raw.points {
            Some(ps) => {
                if ps.is_empty() {
                    bail!("points must not be empty");
                }
                if let Some(p) = ps.iter().find(|p| p.len() != d) {
                    bail!("point {p:?} does not have {d} coordinates");
                }
                ps
            }
            None => vec![default_point(&hyp, domain.as_ref(), d)?],
        };

        let mut seen = HashSet::new();
        for c in &raw.checks {
            if !seen.insert(c.name.as_str()) {
                bail!("check {:?} is listed twice", c.name);
            }
            if let Some(t) = c.tolerance {
                if !(t > 0.0 && t.is_finite()) {
                    bail!("check {:?}: tolerance must be positive", c.name);
                }
            }
        }

        Ok(Manifest { dim: d, metric, hyp, omega, variation, points, domain, checks: raw.checks, seed: raw.seed, source })
    }

    pub fn tolerance_override(&self, check: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == check).and_then(|c| c.tolerance)
    }
}

/// Centre of the box (or the origin) moved onto `Σ` along the last axis.
fn default_point(hyp: &HypersurfaceSpec, domain: Option<&Domain>, d: usize) -> Result<Vec<f64>, ManifestError> {
    let mut p = match domain {
        Some(dom) => dom.lower.iter().zip(&dom.upper).map(|(l, u)| 0.5 * (l + u)).collect(),
        None => vec![0.0; d],
    };
    p[d - 1] = locate_on_surface(hyp, &p, d - 1).map_err(|e| ManifestError(format!("cannot place a default point on the hypersurface: {e}")))?;
    Ok(p)
}
