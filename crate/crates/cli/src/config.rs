//! TOML run configurations describing a custom geometry and the checks to
//! run on it.
//!
//! ```toml
//! name = "h5_custom"
//!
//! [params]
//! a = 2.0
//!
//! [metrics.flat]
//! coords = ["x1", "x2"]
//! chart = [[-inf, inf], [0, inf]]
//! conformal = "1"
//!
//! [metrics.target]
//! coords = ["y1", "y2", "y3"]
//! diagonal = ["1", "y1^2", "1"]
//!
//! [map]
//! source = "flat"
//! target = "target"
//! components = ["a", "x1", "x2"]
//!
//! [sampling]
//! box = [[-1, 1], [0.5, 2]]
//! samples = 64
//! seed = 7
//!
//! [[checks]]
//! name = "bitension"
//! expect = "zero"
//! tol = 1e-7
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::{Path, PathBuf};

use bitension_core::catalog::{CheckKind, Expectation, VerificationCase, Verdict, DEFAULT_TOL, PROPER_TOL};
use bitension_core::expr::Expr;
use bitension_core::geometry::{ChartDomain, Params, RiemannianMetric, SmoothMap};
use serde::Deserialize;
use toml::Spanned;

/// A configuration problem located in the source file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}:{line}:{column}: {message}")]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    metrics: BTreeMap<String, Spanned<RawMetric>>,
    map: RawMap,
    #[serde(default)]
    sampling: RawSampling,
    #[serde(default)]
    checks: Vec<RawCheck>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    coords: Vec<Spanned<String>>,
    chart: Option<Spanned<Vec<[f64; 2]>>>,
    /// Coordinate hyperplanes `[index, value]` removed from the chart.
    #[serde(default)]
    exclude: Vec<Spanned<(usize, f64)>>,
    conformal: Option<Spanned<String>>,
    diagonal: Option<Vec<Spanned<String>>>,
    components: Option<Vec<Vec<Spanned<String>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    source: Spanned<String>,
    target: Spanned<String>,
    components: Vec<Spanned<String>>,
    lambda_sq: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    #[serde(rename = "box")]
    sample_box: Option<Spanned<Vec<[f64; 2]>>>,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    name: Spanned<String>,
    expect: Option<Spanned<String>>,
    tol: Option<Spanned<f64>>,
}

/// A resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: VerificationCase,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

struct Resolver<'a> {
    path: &'a Path,
    src: &'a str,
    params: &'a BTreeMap<String, f64>,
}

impl Resolver<'_> {
    fn error(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        let before = &self.src[..span.start.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        ConfigError { path: self.path.to_path_buf(), line, column, message: message.into() }
    }

    /// Parses an expression whose free identifiers must be among `scope` or
    /// the parameters.
    fn expr(&self, src: &Spanned<String>, what: &str, scope: &[String]) -> Result<Expr, ConfigError> {
        let e = Expr::parse(src.get_ref()).map_err(|err| self.error(src.span(), format!("{what}: {err}")))?;
        let bound: BTreeSet<&str> = scope.iter().map(String::as_str).chain(self.params.keys().map(String::as_str)).collect();
        if let Some(free) = e.identifiers().iter().find(|id| !bound.contains(id.as_str())) {
            return Err(self.error(src.span(), format!("{what}: unbound identifier `{free}`")));
        }
        Ok(e)
    }

    fn chart(&self, bounds: &Spanned<Vec<[f64; 2]>>, dim: usize, what: &str) -> Result<ChartDomain, ConfigError> {
        let b: Vec<(f64, f64)> = bounds.get_ref().iter().map(|[lo, hi]| (*lo, *hi)).collect();
        if b.len() != dim {
            return Err(self.error(bounds.span(), format!("{what}: {} intervals for {dim} coordinates", b.len())));
        }
        ChartDomain::new(b).map_err(|e| self.error(bounds.span(), format!("{what}: {e}")))
    }

    fn metric(&self, name: &str, raw: &Spanned<RawMetric>) -> Result<RiemannianMetric, ConfigError> {
        let span = raw.span();
        let raw = raw.get_ref();
        let coords: Vec<String> = raw.coords.iter().map(|c| c.get_ref().clone()).collect();
        let m = coords.len();
        if let Some(dup) = raw.coords.iter().find(|c| coords.iter().filter(|d| *d == c.get_ref()).count() > 1) {
            return Err(self.error(dup.span(), format!("metric {name}: repeated coordinate `{}`", dup.get_ref())));
        }
        if let Some(clash) = raw.coords.iter().find(|c| self.params.contains_key(c.get_ref())) {
            return Err(self.error(clash.span(), format!("metric {name}: coordinate `{}` is also a parameter", clash.get_ref())));
        }
        let mut domain = match &raw.chart {
            Some(c) => self.chart(c, m, &format!("metric {name} chart"))?,
            None => ChartDomain::unbounded(m.max(1)),
        };
        for ex in &raw.exclude {
            let (coord, value) = *ex.get_ref();
            domain = domain.excluding(coord, value).map_err(|e| self.error(ex.span(), format!("metric {name}: {e}")))?;
        }
        let what = |k: &str| format!("metric {name} {k}");
        let components = match (&raw.conformal, &raw.diagonal, &raw.components) {
            (Some(f), None, None) => {
                let f = self.expr(f, &what("conformal"), &coords)?;
                let mut c = vec![Expr::num(0.0); m * m];
                for i in 0..m {
                    c[i * m + i] = f.clone();
                }
                c
            }
            (None, Some(d), None) => {
                if d.len() != m {
                    return Err(self.error(span, format!("metric {name}: {} diagonal entries for {m} coordinates", d.len())));
                }
                let mut c = vec![Expr::num(0.0); m * m];
                for (i, e) in d.iter().enumerate() {
                    c[i * m + i] = self.expr(e, &what(&format!("diagonal[{i}]")), &coords)?;
                }
                c
            }
            (None, None, Some(rows)) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(self.error(span, format!("metric {name}: components must form a {m}x{m} matrix")));
                }
                let mut c = Vec::with_capacity(m * m);
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        c.push(self.expr(e, &what(&format!("components[{i}][{j}]")), &coords)?);
                    }
                }
                c
            }
            _ => {
                return Err(self.error(span, format!("metric {name}: give exactly one of conformal, diagonal, components")))
            }
        };
        RiemannianMetric::new(coords, components, domain, self.params.clone())
            .map_err(|e| self.error(span, format!("metric {name}: {e}")))
    }
}

fn parse_error(path: &Path, src: &str, err: toml::de::Error) -> ConfigError {
    let r = Resolver { path, src, params: &BTreeMap::new() };
    let span = err.span().unwrap_or(0..0);
    let mut e = r.error(span, err.message().to_string());
    e.message = e.message.trim_end().to_string();
    e
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: 0,
        column: 0,
        message: format!("cannot read: {e}"),
    })?;
    parse(path, &src)
}

pub fn parse(path: &Path, src: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| parse_error(path, src, e))?;
    let r = Resolver { path, src, params: &raw.params };
    let mut metrics = BTreeMap::new();
    for (name, m) in &raw.metrics {
        metrics.insert(name.clone(), r.metric(name, m)?);
    }
    let lookup = |s: &Spanned<String>| {
        metrics
            .get(s.get_ref())
            .cloned()
            .ok_or_else(|| r.error(s.span(), format!("no metric named `{}`", s.get_ref())))
    };
    let g = lookup(&raw.map.source)?;
    let h = lookup(&raw.map.target)?;
    let coords = g.coords().to_vec();
    if raw.map.components.len() != h.dim() {
        return Err(r.error(
            raw.map.target.span(),
            format!("map has {} components but metric `{}` has dimension {}", raw.map.components.len(), raw.map.target.get_ref(), h.dim()),
        ));
    }
    let components = raw
        .map
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| r.expr(c, &format!("map components[{i}]"), &coords))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda_sq = raw.map.lambda_sq.as_ref().map(|l| r.expr(l, "map lambda_sq", &coords)).transpose()?;
    let map = SmoothMap::new(coords, components, g.domain().clone(), raw.params.clone())
        .map_err(|e| r.error(raw.map.source.span(), e.to_string()))?;

    let sample_box = match &raw.sampling.sample_box {
        Some(b) => r.chart(b, g.dim(), "sampling box")?,
        None => g.domain().clone(),
    };
    let mut expectations = Vec::with_capacity(raw.checks.len());
    for c in &raw.checks {
        let check = CheckKind::from_name(c.name.get_ref()).ok_or_else(|| {
            let known: Vec<&str> = CheckKind::ALL.iter().map(|k| k.name()).collect();
            r.error(c.name.span(), format!("unknown check `{}`; known checks: {}", c.name.get_ref(), known.join(", ")))
        })?;
        let verdict = match c.expect.as_ref().map(|e| (e.get_ref().as_str(), e.span())) {
            None | Some(("zero", _)) => Verdict::Zero,
            Some(("nonzero", _)) => Verdict::Nonzero,
            Some((other, span)) => return Err(r.error(span, format!("expect must be zero or nonzero, got `{other}`"))),
        };
        let tol = match &c.tol {
            Some(t) if !(*t.get_ref() > 0.0) => return Err(r.error(t.span(), "tolerance must be positive")),
            Some(t) => *t.get_ref(),
            None if verdict == Verdict::Zero => DEFAULT_TOL,
            None => PROPER_TOL,
        };
        expectations.push(Expectation { check, verdict, tol });
    }
    if expectations.is_empty() {
        return Err(r.error(0..0, "no [[checks]] given"));
    }
    let name = raw.name.clone().unwrap_or_else(|| {
        path.file_stem().map_or_else(|| "custom".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let mut case = VerificationCase::new(&name, map, g, h, sample_box, expectations).map_err(|e| {
        let span = raw.sampling.sample_box.as_ref().map_or(0..0, |b| b.span());
        r.error(span, e.to_string())
    })?;
    if let Some(l) = lambda_sq {
        case = case.with_lambda_sq(l);
    }
    case.params = raw.params.clone() as Params;
    Ok(RunConfig { case, samples: raw.sampling.samples, seed: raw.sampling.seed })
}
