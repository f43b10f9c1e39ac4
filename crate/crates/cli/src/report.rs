//! Text and JSON rendering of reports. Both carry the same numbers in
//! shortest round-trip form.

use bitension_core::catalog::{Verdict, VerificationReport};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

fn point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", parts.join(", "))
}

fn text(report: &VerificationReport) -> String {
    let mut s = format!(
        "case {}  version {}  seed {}  samples {}\n",
        report.case, report.version, report.seed, report.samples
    );
    for c in &report.checks {
        let expect = match c.expect {
            Verdict::Zero => "zero",
            Verdict::Nonzero => "nonzero",
        };
        s += &format!(
            "{} {:<22} expect {:<7} max_abs {:?}  max_norm {:?}  tol {:?}  worst_point {}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            expect,
            c.max_abs,
            c.max_norm,
            c.tol,
            point(&c.worst_point)
        );
        if let Some(e) = &c.error {
            s += &format!("     error: {}\n", e.message);
        }
    }
    s += if report.pass { "overall PASS\n" } else { "overall FAIL\n" };
    s
}

pub fn render(report: &VerificationReport, format: Format) -> String {
    match format {
        Format::Text => text(report),
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
    }
}

#[derive(Serialize)]
struct WeierstrassJson<'a> {
    #[serde(flatten)]
    report: &'a VerificationReport,
    holomorphy: &'a [f64],
    verdict: &'a str,
}

pub fn render_weierstrass(report: &VerificationReport, holomorphy: &[f64], verdict: &str, format: Format) -> String {
    match format {
        Format::Text => {
            let mut s = text(report);
            s += &format!("holomorphy {}\nverdict {verdict}\n", point(holomorphy));
            s
        }
        Format::Json => {
            serde_json::to_string_pretty(&WeierstrassJson { report, holomorphy, verdict }).expect("reports serialize") + "\n"
        }
    }
}
