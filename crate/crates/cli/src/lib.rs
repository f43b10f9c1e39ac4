//! Command-line front end for the verification library.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or configuration error,
//! 3 evaluation error, 4 domain violation.

pub mod config;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use bitension_core::catalog::{
    build_case, case_info, verify_case, CheckKind, CheckRecord, Expectation, VerificationCase, VerificationReport,
    Verdict, CASES, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, VERSION,
};
use bitension_core::conformal::ConformalPoint;
use bitension_core::cylinder::{solve_ode, CylinderParams, OdeSolution};
use bitension_core::geometry::relative_discrepancy;
use bitension_core::jet::MAX_ORDER;
use bitension_core::random_cases::seeded_case;
use bitension_core::weierstrass::w_section;
use bitension_core::Error;
use clap::{Parser, Subcommand, ValueEnum};

use crate::report::{render, Format};

pub const SEED_ENV: &str = "BITENSION_SEED";

pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const EVALUATION: i32 = 3;
    pub const DOMAIN: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "bitension", version, about = "Verify biharmonic maps and conformal transformation laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunOpts {
    /// Number of sample points.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampling seed; overrides the configuration and BITENSION_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance of every check that expects zero.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in verification cases.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Randomized checks of the conformal transformation laws.
    CheckTransform {
        #[arg(long, value_enum)]
        law: Law,
        /// Source and target dimensions as `m,n`.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// The conformal cylinder family.
    Cylinder {
        #[command(subcommand)]
        action: CylinderAction,
    },
    /// The complex form of the biharmonic surface equation.
    Weierstrass {
        #[command(subcommand)]
        action: WeierstrassAction,
    },
    /// Geometries defined in a configuration file.
    Custom {
        #[command(subcommand)]
        action: CustomAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// List the built-in cases and their parameters.
    List,
    /// Verify one built-in case.
    Verify {
        name: String,
        /// Case parameter as `key=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum CylinderAction {
    /// Integrate the profile equation and compare with the closed form.
    Solve {
        #[arg(long)]
        radius: f64,
        #[arg(long, allow_hyphen_values = true)]
        c1: f64,
        #[arg(long, allow_hyphen_values = true)]
        c2: f64,
        /// `+` or `-`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_sign)]
        sign: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        z1: f64,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Bound on the deviation from the closed form.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Bound on the drift of the first integral.
        #[arg(long, default_value_t = 1e-10)]
        drift_tol: f64,
        /// Write `z, closed form, RK4, drift` rows here.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum WeierstrassAction {
    /// Check the section conditions on a surface into flat space.
    Check {
        #[arg(long, conflicts_with = "case", required_unless_present = "case")]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum CustomAction {
    /// Run the checks listed in a configuration file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Tension,
    Jacobi,
    Bitension,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s.split_once(',').ok_or_else(|| format!("expected m,n, got `{s}`"))?;
    let m: usize = m.trim().parse().map_err(|e| format!("bad m: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("bad n: {e}"))?;
    if !(2..=5).contains(&m) || !(2..=6).contains(&n) {
        return Err(format!("need m in 2..=5 and n in 2..=6, got {m},{n}"));
    }
    Ok((m, n))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = match v.trim() {
        "+" => 1.0,
        "-" => -1.0,
        t => t.parse().map_err(|e| format!("bad value for {k}: {e}"))?,
    };
    Ok((k.trim().to_string(), v))
}

fn parse_sign(s: &str) -> Result<f64, String> {
    match s {
        "+" | "+1" | "1" => Ok(1.0),
        "-" | "-1" => Ok(-1.0),
        _ => Err(format!("sign must be + or -, got `{s}`")),
    }
}

/// A failed command: message for stderr and exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) | CliError::Csv(_) => exit::USAGE,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &Error) -> i32 {
    if e.is_domain_violation() {
        return exit::DOMAIN;
    }
    match e {
        Error::Parse(_)
        | Error::Dimension(_)
        | Error::NonFlatTarget
        | Error::UnknownCase(_)
        | Error::InvalidParameter(_)
        | Error::Invalid(_) => exit::USAGE,
        _ => exit::EVALUATION,
    }
}

/// Exit status for a finished report.
pub fn report_exit_code(report: &VerificationReport) -> i32 {
    let errors: Vec<_> = report.errors().collect();
    if errors.iter().any(|e| e.domain) {
        exit::DOMAIN
    } else if !errors.is_empty() {
        exit::EVALUATION
    } else if report.pass {
        exit::PASS
    } else {
        exit::CHECK_FAILED
    }
}

/// `--seed`, then the configuration, then `BITENSION_SEED`, then the
/// built-in default.
pub fn resolve_seed(flag: Option<u64>, configured: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(configured) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Runs one command, writing its report to `out`; returns the exit status.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Catalog { action: CatalogAction::List } => {
            for info in CASES {
                let params: Vec<String> = info.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(out, "{:<18} {:<28} {}", info.name, params.join(" "), info.summary)?;
            }
            Ok(exit::PASS)
        }
        Command::Catalog { action: CatalogAction::Verify { name, params, opts } } => {
            case_info(&name)?;
            let case = build_case(&name, &params.into_iter().collect())?;
            verify(&case, &opts, None, None, out)
        }
        Command::CheckTransform { law, dims, cases, seed, tol, format } => {
            let seed = resolve_seed(seed, None)?;
            let report = check_transform(law, dims, cases, seed, tol)?;
            out.write_all(render(&report, format).as_bytes())?;
            Ok(report_exit_code(&report))
        }
        Command::Cylinder { action } => {
            let CylinderAction::Solve { radius, c1, c2, sign, z0, z1, steps, tol, drift_tol, emit_csv, format } = action;
            let p = CylinderParams::new(radius, c1, c2, sign, (z0, z1))?;
            p.check_positive()?;
            let (report, sol) = cylinder_solve(&p, steps, tol, drift_tol)?;
            if let Some(path) = emit_csv {
                write_csv(&sol, &path)?;
            }
            out.write_all(render(&report, format).as_bytes())?;
            Ok(report_exit_code(&report))
        }
        Command::Weierstrass { action: WeierstrassAction::Check { config, case, params, opts } } => {
            let (case, samples, seed) = match (config, case) {
                (Some(path), _) => {
                    let c = config::load(&path)?;
                    (c.case, c.samples, c.seed)
                }
                (None, Some(name)) => (build_case(&name, &params.into_iter().collect())?, None, None),
                (None, None) => return Err(CliError::Usage("give --config or --case".into())),
            };
            weierstrass_check(case, &opts, samples, seed, out)
        }
        Command::Custom { action: CustomAction::Verify { config, opts } } => {
            let c = config::load(&config)?;
            verify(&c.case, &opts, c.samples, c.seed, out)
        }
    }
}

fn verify(
    case: &VerificationCase,
    opts: &RunOpts,
    samples: Option<usize>,
    seed: Option<u64>,
    out: &mut impl Write,
) -> Result<i32, CliError> {
    let samples = opts.samples.or(samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = resolve_seed(opts.seed, seed)?;
    let report = verify_case(case, samples, seed, opts.tol)?;
    out.write_all(render(&report, opts.format).as_bytes())?;
    Ok(report_exit_code(&report))
}

/// Largest relative discrepancy between the direct and transformed sides
/// over `cases` random geometries.
pub fn check_transform(law: Law, (m, n): (usize, usize), cases: usize, seed: u64, tol: f64) -> Result<VerificationReport, CliError> {
    if cases == 0 || !(tol > 0.0) {
        return Err(CliError::Usage("need at least one case and a positive tolerance".into()));
    }
    let mut record = CheckRecord {
        name: match law {
            Law::Tension => "tension_law",
            Law::Jacobi => "jacobi_law",
            Law::Bitension => "bitension_law",
        }
        .to_string(),
        expect: Verdict::Zero,
        max_abs: 0.0,
        max_norm: 0.0,
        tol,
        pass: true,
        worst_point: Vec::new(),
        error: None,
    };
    for index in 0..cases as u64 {
        let c = seeded_case(m, n, seed, index)?;
        let p = ConformalPoint::new(&c.map, &c.g, &c.h, &c.factor, &c.point)?;
        let (direct, rhs) = match law {
            Law::Tension => (p.tension_direct(), p.tension_rhs()),
            Law::Jacobi => {
                let x = c.field.jets_at(&c.point, MAX_ORDER)?;
                (p.jacobi_direct(&x), p.jacobi_rhs(&x))
            }
            Law::Bitension => (p.bitension_direct(), p.bitension_rhs()),
        };
        let d = relative_discrepancy(&direct, &rhs);
        if d > record.max_abs || d.is_nan() || record.worst_point.is_empty() {
            record.max_abs = d;
            record.max_norm = d;
            record.worst_point = c.point.clone();
        }
    }
    record.pass = record.max_abs <= tol;
    Ok(VerificationReport {
        version: VERSION.to_string(),
        case: format!("check_transform {} m={m} n={n}", record.name),
        seed,
        samples: cases,
        pass: record.pass,
        checks: vec![record],
    })
}

pub fn cylinder_solve(p: &CylinderParams, steps: usize, tol: f64, drift_tol: f64) -> Result<(VerificationReport, OdeSolution), CliError> {
    let (z0, _) = p.z_range;
    let (a, b) = p.exponential_coefficients();
    let r = p.radius;
    let y0 = a * (z0 / r).exp() + b * (-z0 / r).exp();
    let y0prime = (a * (z0 / r).exp() - b * (-z0 / r).exp()) / r;
    let sol = solve_ode(r, p.z_range, y0, y0prime, steps)?;
    let worst = |f: &dyn Fn(usize) -> f64| {
        (0..sol.z.len()).fold((0.0f64, sol.z[0]), |(m, z), k| if f(k) > m { (f(k), sol.z[k]) } else { (m, z) })
    };
    let (dev, zdev) = worst(&|k| (sol.y[k] - sol.closed[k]).abs());
    let (drift, zdrift) = worst(&|k| sol.drift_at(k).abs());
    let rec = |name: &str, v: f64, z: f64, tol: f64| CheckRecord {
        name: name.to_string(),
        expect: Verdict::Zero,
        max_abs: v,
        max_norm: v / (sol.y.iter().fold(0.0f64, |m, y| m.max(y.abs())) + 1.0),
        tol,
        pass: v <= tol,
        worst_point: vec![z],
        error: None,
    };
    let checks = vec![rec("rk4_deviation", dev, zdev, tol), rec("first_integral_drift", drift, zdrift, drift_tol)];
    let report = VerificationReport {
        version: VERSION.to_string(),
        case: format!("cylinder_solve R={} C1={} C2={} sign={}", p.radius, p.c1, p.c2, p.sign),
        seed: 0,
        samples: sol.z.len(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    Ok((report, sol))
}

/// Header row, then `z, lambda_sq_closed, lambda_sq_rk4, drift` with 17
/// significant digits.
pub fn write_csv(sol: &OdeSolution, path: &std::path::Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z", "lambda_sq_closed", "lambda_sq_rk4", "first_integral_drift"])?;
    for k in 0..sol.z.len() {
        let row = [sol.z[k], sol.closed[k], sol.y[k], sol.drift_at(k)];
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Verdict of the section conditions.
pub fn weierstrass_verdict(report: &VerificationReport, holomorphy: f64) -> &'static str {
    let ok = |n: &str| report.checks.iter().any(|c| c.name == n && c.pass);
    if !(ok("w1") && ok("w2")) {
        "not conformal"
    } else if !ok("w3") {
        "not biharmonic"
    } else if holomorphy <= 1e-8 {
        "harmonic"
    } else {
        "proper biharmonic"
    }
}

fn weierstrass_check(
    mut case: VerificationCase,
    opts: &RunOpts,
    samples: Option<usize>,
    seed: Option<u64>,
    out: &mut impl Write,
) -> Result<i32, CliError> {
    if case.map.source_dim() != 2 {
        return Err(CliError::Core(Error::Dimension("the complex form needs a surface".into())));
    }
    if !case.h.is_euclidean() {
        return Err(CliError::Core(Error::NonFlatTarget));
    }
    case.expectations = vec![
        Expectation::zero(CheckKind::W1, 1e-12),
        Expectation::nonzero(CheckKind::W2, 1e-3),
        Expectation::zero(CheckKind::W3, 1e-9),
    ];
    let samples = opts.samples.or(samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = resolve_seed(opts.seed, seed)?;
    let report = verify_case(&case, samples, seed, opts.tol)?;
    let mut per_component = vec![0.0f64; case.map.target_dim()];
    if report.errors().next().is_none() {
        for x in case.sample_box.sample_points(samples, seed)? {
            let s = w_section(&case.map, &case.g, &case.h, &x)?;
            for (m, v) in per_component.iter_mut().zip(s.holomorphy_components()) {
                *m = m.max(v);
            }
        }
    }
    let holomorphy = per_component.iter().copied().fold(0.0, f64::max);
    let verdict = weierstrass_verdict(&report, holomorphy);
    out.write_all(report::render_weierstrass(&report, &per_component, verdict, opts.format).as_bytes())?;
    Ok(report_exit_code(&report))
}
