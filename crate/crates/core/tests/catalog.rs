use std::collections::BTreeMap;

use approx::assert_relative_eq;
use bitension_core::catalog::{
    build_case, negative_control, verify_case, CheckKind, Verdict, CASES, CONTROL_MARGIN, DEFAULT_SAMPLES,
    DEFAULT_SEED,
};
use bitension_core::geometry::conformality;
use bitension_core::Error;

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn built_in_cases_pass() {
    for info in CASES {
        let case = build_case(info.name, &BTreeMap::new()).unwrap();
        let report = verify_case(&case, DEFAULT_SAMPLES, DEFAULT_SEED, None).unwrap();
        assert!(report.pass, "{}: {report:#?}", info.name);
        assert_eq!(report.checks.len(), case.expectations.len());
    }
}

#[test]
fn cylinder_variants_pass() {
    for (r, c1, c2, sign) in [(1.0, 0.0, 2.0, -1.0), (0.5, -1.0, 1.0, 1.0), (2.0, -1.0, 2.0, -1.0), (0.5, 1.0, 1.0, 1.0)] {
        let case = build_case("cylinder_family", &params(&[("R", r), ("C1", c1), ("C2", c2), ("sign", sign)])).unwrap();
        let report = verify_case(&case, 32, 3, None).unwrap();
        assert!(report.pass, "{report:#?}");
    }
    let bad = params(&[("R", 1.0), ("C1", 4.0), ("C2", 1.0), ("sign", 1.0)]);
    assert!(matches!(build_case("cylinder_family", &bad), Err(Error::NonPositiveLambda { .. })));
}

#[test]
fn negative_controls_fail_their_key_check() {
    for info in CASES {
        let case = negative_control(info.name, &BTreeMap::new()).unwrap();
        let report = verify_case(&case, DEFAULT_SAMPLES, DEFAULT_SEED, None).unwrap();
        assert!(!report.pass, "{}", info.name);
        let key = report.checks.iter().find(|c| c.name == case.key_check.name()).unwrap();
        assert!(!key.pass);
        assert_eq!(key.expect, Verdict::Zero);
        assert!(key.max_abs > CONTROL_MARGIN, "{}: {}", info.name, key.max_abs);
    }
}

#[test]
fn identity_is_harmonic() {
    for m in [2.0, 3.0, 5.0] {
        let case = build_case("identity", &params(&[("m", m)])).unwrap();
        let report = verify_case(&case, 16, 1, None).unwrap();
        assert!(report.pass);
        assert!(report.checks.iter().all(|c| c.max_abs < 1e-12));
    }
    assert!(matches!(build_case("identity", &params(&[("m", 2.5)])), Err(Error::InvalidParameter(_))));
}

#[test]
fn exponential_cylinder_is_the_wrap() {
    let cyl = build_case("cylinder_family", &params(&[("sign", -1.0)])).unwrap();
    let wrap = build_case("r2_wrap_r3", &BTreeMap::new()).unwrap();
    for (theta, z) in [(0.5, 0.2), (2.0, 0.7)] {
        let gc = cyl.g.values_at(&[theta, z]).unwrap();
        let gw = wrap.g.values_at(&[theta, z]).unwrap();
        assert_relative_eq!(gc[0], gw[0], max_relative = 1e-14);
        assert_relative_eq!(gc[3], gw[3], max_relative = 1e-14);
        let (l2, _) = conformality(&cyl.map, &cyl.g, &cyl.h, &[theta, z]).unwrap();
        assert_relative_eq!(l2, (-z as f64).exp(), max_relative = 1e-14);
        let (l2w, _) = conformality(&wrap.map, &wrap.g, &wrap.h, &[theta, z]).unwrap();
        assert_relative_eq!(l2, l2w, max_relative = 1e-14);
    }
}

#[test]
fn reports_are_deterministic() {
    let case = build_case("s5_stereographic", &BTreeMap::new()).unwrap();
    let a = verify_case(&case, 32, 11, None).unwrap();
    let b = verify_case(&case, 32, 11, None).unwrap();
    assert_eq!(a, b);
    let c = verify_case(&case, 32, 12, None).unwrap();
    assert_ne!(a.checks[1].worst_point, c.checks[1].worst_point);
}

#[test]
fn tolerance_override_applies_to_zero_checks() {
    let case = build_case("cylinder_family", &BTreeMap::new()).unwrap();
    let report = verify_case(&case, 16, 1, Some(1e-20)).unwrap();
    assert!(!report.pass);
    let tension = report.checks.iter().find(|c| c.name == CheckKind::Tension.name()).unwrap();
    assert!(tension.pass && tension.tol == 1e-3);
    assert!(verify_case(&case, 16, 1, Some(0.0)).is_err());
    assert!(verify_case(&case, 0, 1, None).is_err());
}

#[test]
fn unknown_cases_and_parameters() {
    assert!(matches!(build_case("no_such_case", &BTreeMap::new()), Err(Error::UnknownCase(_))));
    assert!(matches!(build_case("h5_inclusion", &params(&[("R", 1.0)])), Err(Error::InvalidParameter(_))));
    assert!(matches!(build_case("r2_wrap_r3", &params(&[("R", -1.0)])), Err(Error::InvalidParameter(_))));
}
