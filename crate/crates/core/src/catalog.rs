//! Named verification cases: the examples as executable fixtures with
//! expected verdicts, their perturbed negative controls, and a
//! deterministic report format.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylinder::{build_family_case, CylinderParams};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{conformality, ChartDomain, MapFrame, Params, RiemannianMetric, SmoothMap};
use crate::jet::Jet;
use crate::random_cases::coordinate_names;
use crate::surfaces::{r3_system_residual, r3_system_residual_with, R3Residual};
use crate::weierstrass::{max_norm, w_section, wrap_case};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_TOL: f64 = 1e-7;
/// Lower bound on `|τ|` certifying that a biharmonic case is proper.
pub const PROPER_TOL: f64 = 1e-3;
/// Residual a negative control must exceed in its key check.
pub const CONTROL_MARGIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|τ|_h`.
    Tension,
    /// `|τ₂|_h`.
    Bitension,
    /// Tangential part of the conformal surface system.
    R3Tangential,
    /// Normal part of the conformal surface system.
    R3Normal,
    /// Relative deviation of `φ*h` from `λ² g`, and of `λ²` from its
    /// closed form when one is given.
    Conformality,
    /// `|Σ ϕ²|`.
    W1,
    /// `Σ |ϕ|²`.
    W2,
    /// `max |∂_z̄∂_z(μ^{-1}∂ϕ/∂z̄)|`.
    W3,
    /// `max |∂ϕ/∂z̄|`.
    Holomorphy,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Tension,
        CheckKind::Bitension,
        CheckKind::R3Tangential,
        CheckKind::R3Normal,
        CheckKind::Conformality,
        CheckKind::W1,
        CheckKind::W2,
        CheckKind::W3,
        CheckKind::Holomorphy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Tension => "tension",
            CheckKind::Bitension => "bitension",
            CheckKind::R3Tangential => "r3_tangential",
            CheckKind::R3Normal => "r3_normal",
            CheckKind::Conformality => "conformality",
            CheckKind::W1 => "w1",
            CheckKind::W2 => "w2",
            CheckKind::W3 => "w3",
            CheckKind::Holomorphy => "holomorphy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Whether a check's quantity must vanish or stay away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Passes iff the largest value is at most `tol`.
    Zero,
    /// Passes iff the smallest value exceeds `tol`.
    Nonzero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub check: CheckKind,
    pub verdict: Verdict,
    pub tol: f64,
}

impl Expectation {
    pub fn zero(check: CheckKind, tol: f64) -> Self {
        Self { check, verdict: Verdict::Zero, tol }
    }

    pub fn nonzero(check: CheckKind, tol: f64) -> Self {
        Self { check, verdict: Verdict::Nonzero, tol }
    }
}

#[derive(Debug, Clone)]
pub struct VerificationCase {
    pub name: String,
    pub params: Params,
    pub map: SmoothMap,
    pub g: RiemannianMetric,
    pub h: RiemannianMetric,
    /// `λ²` with `φ*h = λ² g`, in the domain coordinates.
    pub lambda_sq: Option<Expr>,
    /// Box the sample points are drawn from; inside the chart domain.
    pub sample_box: ChartDomain,
    pub expectations: Vec<Expectation>,
    /// The check a perturbed variant is expected to fail.
    pub key_check: CheckKind,
}

impl VerificationCase {
    pub fn new(
        name: &str,
        map: SmoothMap,
        g: RiemannianMetric,
        h: RiemannianMetric,
        sample_box: ChartDomain,
        expectations: Vec<Expectation>,
    ) -> Result<Self> {
        if g.dim() != map.source_dim() || h.dim() != map.target_dim() || sample_box.dim() != g.dim() {
            return Err(Error::Dimension(format!(
                "case {name}: map {} -> {}, metrics {} and {}, sample box {}",
                map.source_dim(),
                map.target_dim(),
                g.dim(),
                h.dim(),
                sample_box.dim()
            )));
        }
        if !g.domain().contains_region(sample_box.bounds()) || !map.domain().contains_region(sample_box.bounds()) {
            return Err(Error::Invalid(format!("case {name}: sample box leaves the chart domain")));
        }
        if let Some(e) = expectations.iter().find(|e| !(e.tol > 0.0)) {
            return Err(Error::InvalidParameter(format!("tolerance of {} must be positive", e.check.name())));
        }
        let key_check = expectations.first().map(|e| e.check).unwrap_or(CheckKind::Bitension);
        Ok(Self {
            name: name.to_string(),
            params: Params::new(),
            map,
            g,
            h,
            lambda_sq: None,
            sample_box,
            expectations,
            key_check,
        })
    }

    pub fn with_lambda_sq(mut self, lambda_sq: Expr) -> Self {
        self.lambda_sq = Some(lambda_sq);
        self
    }

    pub fn with_key_check(mut self, key: CheckKind) -> Self {
        self.key_check = key;
        self
    }

    fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }
}

/// A catalog entry as listed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseInfo {
    pub name: &'static str,
    /// Accepted parameters with their defaults.
    pub params: &'static [(&'static str, f64)],
    pub summary: &'static str,
}

pub const CASES: [CaseInfo; 7] = [
    CaseInfo {
        name: "h5_inclusion",
        params: &[],
        summary: "(1, x1..x4) from flat half-space into the hyperbolic space H^5; proper biharmonic",
    },
    CaseInfo {
        name: "s5_stereographic",
        params: &[],
        summary: "(u1..u4, 0) from flat R^4 into S^5 through inverse stereographic coordinates; proper biharmonic",
    },
    CaseInfo {
        name: "cylinder_family",
        params: &[("R", 1.0), ("C1", 0.0), ("C2", 2.0), ("sign", 1.0)],
        summary: "(R, theta, z) over lambda^-2 (R^2 dtheta^2 + dz^2) into cylindrical R^3; proper biharmonic",
    },
    CaseInfo {
        name: "r2_wrap_r3",
        params: &[("R", 1.0)],
        summary: "(R cos(x/R), R sin(x/R), y) over exp(y/R)(dx^2 + dy^2); proper biharmonic",
    },
    CaseInfo {
        name: "r2_wrap_r6",
        params: &[("R", 1.0)],
        summary: "the R^3 wrap repeated twice into R^6; proper biharmonic",
    },
    CaseInfo { name: "plane_inclusion", params: &[], summary: "(u, v, 0) into R^3; harmonic" },
    CaseInfo { name: "identity", params: &[("m", 3.0)], summary: "identity of the half-space model of H^m; harmonic" },
];

pub fn case_info(name: &str) -> Result<&'static CaseInfo> {
    CASES.iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownCase(name.to_string()))
}

/// Fills defaults and rejects parameters the case does not take.
pub fn resolve_params(name: &str, given: &BTreeMap<String, f64>) -> Result<Params> {
    let info = case_info(name)?;
    if let Some(k) = given.keys().find(|k| !info.params.iter().any(|(p, _)| p == k)) {
        return Err(Error::InvalidParameter(format!("case {name} takes no parameter {k}")));
    }
    Ok(info.params.iter().map(|(k, d)| (k.to_string(), *given.get(*k).unwrap_or(d))).collect())
}

fn parse(src: &str) -> Expr {
    Expr::parse(src).expect("catalog expressions are well formed")
}

fn parse_all(srcs: &[&str]) -> Vec<Expr> {
    srcs.iter().map(|s| parse(s)).collect()
}

fn euclidean(n: usize) -> Result<RiemannianMetric> {
    RiemannianMetric::euclidean(coordinate_names("y", n), ChartDomain::unbounded(n))
}

fn proper_biharmonic() -> Vec<Expectation> {
    vec![Expectation::zero(CheckKind::Bitension, DEFAULT_TOL), Expectation::nonzero(CheckKind::Tension, PROPER_TOL)]
}

fn harmonic() -> Vec<Expectation> {
    vec![Expectation::zero(CheckKind::Tension, DEFAULT_TOL), Expectation::zero(CheckKind::Bitension, DEFAULT_TOL)]
}

fn wrap_expectations() -> Vec<Expectation> {
    let mut e = proper_biharmonic();
    e.extend([
        Expectation::zero(CheckKind::W1, 1e-12),
        Expectation::nonzero(CheckKind::W2, PROPER_TOL),
        Expectation::zero(CheckKind::W3, 1e-9),
        Expectation::nonzero(CheckKind::Holomorphy, 0.1),
    ]);
    e
}

fn h5(perturbed: bool) -> Result<VerificationCase> {
    let xs = coordinate_names("x", 4);
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); 4];
    bounds[3] = (0.0, f64::INFINITY);
    let domain = ChartDomain::new(bounds)?;
    let last = if perturbed { "x4^2" } else { "x4" };
    let map = SmoothMap::new(xs.clone(), parse_all(&["1", "x1", "x2", "x3", last]), domain.clone(), Params::new())?;
    let g = RiemannianMetric::euclidean(xs, domain)?;
    let mut tb = vec![(f64::NEG_INFINITY, f64::INFINITY); 5];
    tb[4] = (0.0, f64::INFINITY);
    let h = RiemannianMetric::conformally_flat(coordinate_names("y", 5), parse("y5^(-2)"), ChartDomain::new(tb)?, Params::new())?;
    VerificationCase::new("h5_inclusion", map, g, h, ChartDomain::cube(4, 0.5, 2.0)?, proper_biharmonic())
}

fn s5(perturbed: bool) -> Result<VerificationCase> {
    let us = coordinate_names("u", 4);
    let map = SmoothMap::new(us.clone(), parse_all(&["u1", "u2", "u3", "u4", "0"]), ChartDomain::unbounded(4), Params::new())?;
    let g = RiemannianMetric::euclidean(us, ChartDomain::unbounded(4))?;
    let power = if perturbed { "" } else { "^2" };
    let factor = parse(&format!("4/(1 + y1^2 + y2^2 + y3^2 + y4^2 + y5^2){power}"));
    let h = RiemannianMetric::conformally_flat(coordinate_names("y", 5), factor, ChartDomain::unbounded(5), Params::new())?;
    VerificationCase::new("s5_stereographic", map, g, h, ChartDomain::cube(4, -2.0, 2.0)?, proper_biharmonic())
}

fn cylinder(params: &Params, perturbed: bool) -> Result<VerificationCase> {
    let sign = params["sign"];
    let p = CylinderParams::new(params["R"], params["C1"], params["C2"], sign, (0.0, 1.0))?;
    let fam = build_family_case(&p)?;
    let (g, lambda_sq) = if perturbed {
        let wrong = parse("exp(2*z/R)");
        (fam.g.scaled(&(fam.lambda_sq.clone() / wrong.clone())), wrong)
    } else {
        (fam.g, fam.lambda_sq)
    };
    let mut expectations = proper_biharmonic();
    expectations.extend([
        Expectation::zero(CheckKind::R3Tangential, 1e-8),
        Expectation::zero(CheckKind::R3Normal, 1e-8),
        Expectation::zero(CheckKind::Conformality, 1e-9),
    ]);
    let sample_box = ChartDomain::new(vec![(0.0, 2.0 * PI), (0.0, 1.0)])?;
    Ok(VerificationCase::new("cylinder_family", fam.map, g, fam.h, sample_box, expectations)?.with_lambda_sq(lambda_sq))
}

fn wrap(copies: usize, params: &Params, perturbed: bool) -> Result<VerificationCase> {
    let r = params["R"];
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    let (map, g, h) = wrap_case(copies, vec![(f64::NEG_INFINITY, f64::INFINITY); 2], r)?;
    let g = if perturbed { g.scaled(&parse("exp(y/R)")) } else { g };
    let name = if copies == 1 { "r2_wrap_r3" } else { "r2_wrap_r6" };
    let sample_box = ChartDomain::new(vec![(-PI * r, PI * r), (-1.0, 1.0)])?;
    VerificationCase::new(name, map, g, h, sample_box, wrap_expectations())
}

fn plane(perturbed: bool) -> Result<VerificationCase> {
    let uv = vec!["u".to_string(), "v".to_string()];
    let last = if perturbed { "u^2" } else { "0" };
    let map = SmoothMap::new(uv.clone(), parse_all(&["u", "v", last]), ChartDomain::unbounded(2), Params::new())?;
    let g = RiemannianMetric::euclidean(uv, ChartDomain::unbounded(2))?;
    let mut e = harmonic();
    e.extend([Expectation::zero(CheckKind::W1, 1e-12), Expectation::zero(CheckKind::W3, 1e-9)]);
    VerificationCase::new("plane_inclusion", map, g, euclidean(3)?, ChartDomain::cube(2, -1.0, 1.0)?, e)
}

fn identity(params: &Params, perturbed: bool) -> Result<VerificationCase> {
    let mf = params["m"];
    if mf.fract() != 0.0 || !(2.0..=8.0).contains(&mf) {
        return Err(Error::InvalidParameter(format!("identity needs an integer m in 2..=8, got {mf}")));
    }
    let m = mf as usize;
    let xs = coordinate_names("x", m);
    let ys = coordinate_names("y", m);
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); m];
    bounds[m - 1] = (0.0, f64::INFINITY);
    let domain = ChartDomain::new(bounds)?;
    let mut comps: Vec<Expr> = xs.iter().map(|x| Expr::ident(x)).collect();
    if perturbed {
        comps[0] = parse("x1 + x1^2");
    }
    let map = SmoothMap::new(xs.clone(), comps, domain.clone(), Params::new())?;
    let g = RiemannianMetric::conformally_flat(xs, parse(&format!("x{m}^(-2)")), domain.clone(), Params::new())?;
    let h = RiemannianMetric::conformally_flat(ys, parse(&format!("y{m}^(-2)")), domain, Params::new())?;
    let mut sample = vec![(-1.0, 1.0); m];
    sample[m - 1] = (0.5, 2.0);
    VerificationCase::new("identity", map, g, h, ChartDomain::new(sample)?, harmonic())
}

fn build(name: &str, given: &BTreeMap<String, f64>, perturbed: bool) -> Result<VerificationCase> {
    let params = resolve_params(name, given)?;
    let case = match name {
        "h5_inclusion" => h5(perturbed)?,
        "s5_stereographic" => s5(perturbed)?,
        "cylinder_family" => cylinder(&params, perturbed)?,
        "r2_wrap_r3" => wrap(1, &params, perturbed)?,
        "r2_wrap_r6" => wrap(2, &params, perturbed)?,
        "plane_inclusion" => plane(perturbed)?,
        "identity" => identity(&params, perturbed)?,
        _ => return Err(Error::UnknownCase(name.to_string())),
    };
    let key = match name {
        "plane_inclusion" | "identity" => CheckKind::Tension,
        _ => CheckKind::Bitension,
    };
    Ok(case.with_params(params).with_key_check(key))
}

pub fn build_case(name: &str, params: &BTreeMap<String, f64>) -> Result<VerificationCase> {
    build(name, params, false)
}

/// The deliberately broken variant of a built-in case; its key check must
/// fail by more than [`CONTROL_MARGIN`].
pub fn negative_control(name: &str, params: &BTreeMap<String, f64>) -> Result<VerificationCase> {
    let mut case = build(name, params, true)?;
    case.name = format!("{name}_control");
    Ok(case)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub expect: Verdict,
    /// Largest residual for zero checks, smallest magnitude for nonzero
    /// checks.
    pub max_abs: f64,
    /// Same quantity divided by `|τ|_h + 1` at the point attaining it.
    pub max_norm: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<CheckError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckError {
    /// Evaluation left a function's or a chart's domain.
    pub domain: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub case: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn errors(&self) -> impl Iterator<Item = &CheckError> {
        self.checks.iter().filter_map(|c| c.error.as_ref())
    }
}

/// Lazily computed data at one sample point.
struct PointData<'a> {
    case: &'a VerificationCase,
    x: &'a [f64],
    frame: Option<Result<(MapFrame, Vec<f64>)>>,
    r3: Option<Result<R3Residual>>,
}

impl<'a> PointData<'a> {
    fn frame(&mut self) -> Result<&(MapFrame, Vec<f64>)> {
        let (case, x) = (self.case, self.x);
        self.frame
            .get_or_insert_with(|| {
                let f = MapFrame::new(&case.map, &case.g, &case.h, x)?;
                let tau: Vec<f64> = f.tension().iter().map(Jet::value).collect();
                Ok((f, tau))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn tension_norm(&mut self) -> Result<f64> {
        let (f, tau) = self.frame()?;
        Ok(f.target_norm(tau))
    }

    fn r3(&mut self) -> Result<&R3Residual> {
        let (case, x) = (self.case, self.x);
        self.r3
            .get_or_insert_with(|| match &case.lambda_sq {
                Some(l2) => r3_system_residual_with(&case.map, &case.h, l2, x),
                None => r3_system_residual(&case.map, &case.g, &case.h, x),
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn value(&mut self, check: CheckKind) -> Result<f64> {
        let (case, x) = (self.case, self.x);
        Ok(match check {
            CheckKind::Tension => self.tension_norm()?,
            CheckKind::Bitension => {
                let (f, _) = self.frame()?;
                f.target_norm(&f.bitension())
            }
            CheckKind::R3Tangential => self.r3()?.tangential.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            CheckKind::R3Normal => self.r3()?.normal.abs(),
            CheckKind::Conformality => {
                let (l2, deviation) = conformality(&case.map, &case.g, &case.h, x)?;
                match &case.lambda_sq {
                    Some(e) => {
                        let mut ctx = crate::expr::EvalContext::with_variables(
                            0.0,
                            case.map.coords().iter().map(String::as_str),
                            x,
                        );
                        ctx.bind_parameters(case.map.params());
                        let want = e.evaluate(&ctx).map_err(|err| Error::Eval { source: err, point: x.to_vec() })?;
                        deviation.max((l2 - want).abs() / want.abs())
                    }
                    None => deviation,
                }
            }
            CheckKind::W1 => w_section(&case.map, &case.g, &case.h, x)?.w1_w2_check().0.norm(),
            CheckKind::W2 => w_section(&case.map, &case.g, &case.h, x)?.w1_w2_check().1,
            CheckKind::W3 => max_norm(&w_section(&case.map, &case.g, &case.h, x)?.w3_residual()),
            CheckKind::Holomorphy => w_section(&case.map, &case.g, &case.h, x)?.holomorphy_defect(),
        })
    }
}

/// Per point: `(value, normalized value)` per expectation, or the error.
type PointRow = Vec<Result<(f64, f64)>>;

fn evaluate_point(case: &VerificationCase, x: &[f64]) -> PointRow {
    let mut data = PointData { case, x, frame: None, r3: None };
    case.expectations
        .iter()
        .map(|e| {
            let v = data.value(e.check)?;
            let scale = data.tension_norm()? + 1.0;
            Ok((v, v / scale))
        })
        .collect()
}

/// Runs every expectation of `case` at `samples` low-discrepancy points.
/// `tol` overrides the tolerance of the zero checks.
pub fn verify_case(case: &VerificationCase, samples: usize, seed: u64, tol: Option<f64>) -> Result<VerificationReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample point required".into()));
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {t} must be positive")));
        }
    }
    let points = case.sample_box.sample_points(samples, seed)?;
    let rows: Vec<PointRow> = points.par_iter().map(|x| evaluate_point(case, x)).collect();
    let checks: Vec<CheckRecord> = case
        .expectations
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let tol = match (e.verdict, tol) {
                (Verdict::Zero, Some(t)) => t,
                _ => e.tol,
            };
            let mut record = CheckRecord {
                name: e.check.name().to_string(),
                expect: e.verdict,
                max_abs: match e.verdict {
                    Verdict::Zero => 0.0,
                    Verdict::Nonzero => f64::INFINITY,
                },
                max_norm: 0.0,
                tol,
                pass: true,
                worst_point: points[0].clone(),
                error: None,
            };
            for (x, row) in points.iter().zip(&rows) {
                match &row[k] {
                    Err(err) => {
                        record.error = Some(CheckError { domain: err.is_domain_violation(), message: err.to_string() });
                        record.worst_point = x.clone();
                        record.max_abs = f64::MAX;
                        record.max_norm = f64::MAX;
                        break;
                    }
                    Ok((v, n)) => {
                        let worse = match e.verdict {
                            Verdict::Zero => *v > record.max_abs || v.is_nan(),
                            Verdict::Nonzero => *v < record.max_abs || v.is_nan(),
                        };
                        if worse {
                            record.max_abs = *v;
                            record.max_norm = *n;
                            record.worst_point = x.clone();
                        }
                    }
                }
            }
            record.pass = record.error.is_none()
                && record.max_abs.is_finite()
                && match e.verdict {
                    Verdict::Zero => record.max_abs <= tol,
                    Verdict::Nonzero => record.max_abs > tol,
                };
            if !record.max_abs.is_finite() {
                record.max_abs = f64::MAX;
                record.max_norm = f64::MAX;
            }
            record
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        version: VERSION.to_string(),
        case: case.name.clone(),
        seed,
        samples,
        checks,
        pass,
    })
}
