use approx::assert_relative_eq;
use bitension_core::conformal::{
    conformal_metric, immersion_point, jacobi_product_rule_residual, ConformalPoint,
};
use bitension_core::expr::Expr;
use bitension_core::geometry::{
    bitension_field, relative_discrepancy, tension_field, ChartDomain, MapFrame, Params, RiemannianMetric, SmoothMap,
};
use bitension_core::jet::{Jet, MAX_ORDER};
use bitension_core::random_cases::seeded_case;
use bitension_core::Error;

const CASES: u64 = 12;

fn point(m: usize, n: usize, seed: u64, idx: u64) -> (ConformalPoint, Vec<Jet>) {
    let c = seeded_case(m, n, seed, idx).unwrap();
    let p = ConformalPoint::new(&c.map, &c.g, &c.h, &c.factor, &c.point).unwrap();
    let x = c.field.jets_at(&c.point, MAX_ORDER).unwrap();
    (p, x)
}

#[test]
fn tension_law_randomized() {
    for m in 2..=5 {
        for idx in 0..CASES {
            let (p, _) = point(m, m + 1, 10, idx);
            let d = relative_discrepancy(&p.tension_direct(), &p.tension_rhs());
            assert!(d < 1e-12, "m={m} case {idx}: {d:e}");
        }
    }
}

#[test]
fn jacobi_law_randomized() {
    for m in 2..=5 {
        for idx in 0..CASES {
            let (p, x) = point(m, 3, 11, idx);
            let d = relative_discrepancy(&p.jacobi_direct(&x), &p.jacobi_rhs(&x));
            assert!(d < 1e-10, "m={m} case {idx}: {d:e}");
        }
    }
}

#[test]
fn bitension_law_randomized() {
    for m in 2..=5 {
        for idx in 0..CASES {
            let (p, _) = point(m, 4, 12, idx);
            let direct = p.bitension_direct();
            let d = relative_discrepancy(&direct, &p.bitension_rhs());
            assert!(d < 1e-9, "m={m} case {idx}: {d:e}");
            assert!(direct.iter().any(|v| v.abs() > 1e-3), "case {idx} too degenerate");
        }
    }
}

#[test]
fn two_dimensional_specialization() {
    for idx in 0..CASES {
        let (p, _) = point(2, 3, 13, idx);
        let d = relative_discrepancy(&p.bitension_rhs(), &p.bitension_rhs_2d().unwrap());
        assert!(d < 1e-12, "case {idx}: {d:e}");
    }
    let (p, _) = point(3, 3, 13, 0);
    assert!(p.bitension_rhs_2d().is_err());
}

#[test]
fn trivial_factor_is_identity() {
    let c = seeded_case(3, 3, 14, 0).unwrap();
    let p = ConformalPoint::new(&c.map, &c.g, &c.h, &Expr::num(1.0), &c.point).unwrap();
    let x = c.field.jets_at(&c.point, MAX_ORDER).unwrap();
    let frame = p.frame();
    let tau: Vec<f64> = frame.tension().iter().map(Jet::value).collect();
    assert!(relative_discrepancy(&p.tension_rhs(), &tau) < 1e-12);
    assert!(relative_discrepancy(&p.jacobi_rhs(&x), &frame.jacobi(&x)) < 1e-12);
    assert!(relative_discrepancy(&p.bitension_rhs(), &frame.bitension()) < 1e-12);
}

#[test]
fn confi_residual_equals_bitension_on_g() {
    // φ*h = λ²g holds for the identity map with h = λ²g
    for idx in 0..CASES {
        let c = seeded_case(3, 3, 15, idx).unwrap();
        let lambda_sq = Expr::binary(bitension_core::expr::BinaryOp::Pow, c.factor.clone(), Expr::num(2.0));
        let h = c.g.scaled(&lambda_sq);
        let hy = RiemannianMetric::new(
            vec!["y1".into(), "y2".into(), "y3".into()],
            h.components()
                .iter()
                .map(|e| e.substitute(&|n| n.strip_prefix('x').map(|k| Expr::ident(&format!("y{k}")))))
                .collect(),
            ChartDomain::unbounded(3),
            Params::new(),
        )
        .unwrap();
        let id = SmoothMap::new(c.g.coords().to_vec(), ["x1", "x2", "x3"].iter().map(|s| Expr::ident(s)).collect(),
            ChartDomain::unbounded(3), Params::new()).unwrap();
        let p = immersion_point(&id, &c.g, &hy, &lambda_sq, &c.point, 1e-9).unwrap();
        let direct = bitension_field(&id, &c.g, &hy, &c.point).unwrap();
        assert!(relative_discrepancy(&p.immersion_residual(), &direct) < 1e-9, "case {idx}");
        assert!(p.immersion_tension_residual().iter().all(|v| v.abs() < 1e-10));
        // φ is an isometry onto (N, h) from ḡ, hence harmonic there
        assert!(p.tension_direct().iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn jacobi_product_rule_randomized() {
    for idx in 0..CASES {
        let c = seeded_case(3, 4, 16, idx).unwrap();
        let frame = MapFrame::new(&c.map, &c.g, &c.h, &c.point).unwrap();
        let vars = Jet::seed_point(&c.point).unwrap();
        let ctx = bitension_core::geometry::metric_context(&c.g, &vars).unwrap();
        let f = c.scalar.evaluate(&ctx).unwrap();
        let x = c.field.jets_at(&c.point, MAX_ORDER).unwrap();
        let r = jacobi_product_rule_residual(&frame, &f, &x);
        assert!(r.iter().all(|v| v.abs() < 1e-9), "case {idx}: {r:?}");
    }
}

/// Inclusion `(1, x1, .., x4)` into the half-space model of H⁵, with the
/// flat and the hyperbolic domain metrics.
fn h5() -> (SmoothMap, RiemannianMetric, RiemannianMetric, RiemannianMetric) {
    let xs: Vec<String> = (1..=4).map(|i| format!("x{i}")).collect();
    let ys: Vec<String> = (1..=5).map(|i| format!("y{i}")).collect();
    let mut bounds = vec![(-2.0, 2.0); 4];
    bounds[3] = (0.0, f64::INFINITY);
    let domain = ChartDomain::new(bounds).unwrap();
    let flat = RiemannianMetric::euclidean(xs.clone(), domain.clone()).unwrap();
    let hyp = RiemannianMetric::conformally_flat(xs.clone(), Expr::parse("x4^(-2)").unwrap(), domain.clone(), Params::new())
        .unwrap();
    let mut tb = vec![(f64::NEG_INFINITY, f64::INFINITY); 5];
    tb[4] = (0.0, f64::INFINITY);
    let h = RiemannianMetric::conformally_flat(ys, Expr::parse("y5^(-2)").unwrap(), ChartDomain::new(tb).unwrap(), Params::new())
        .unwrap();
    let comps = ["1", "x1", "x2", "x3", "x4"].iter().map(|s| Expr::parse(s).unwrap()).collect();
    (SmoothMap::new(xs, comps, domain, Params::new()).unwrap(), flat, hyp, h)
}

#[test]
fn hyperbolic_inclusion_terms() {
    let (map, flat, hyp, h) = h5();
    let factor = Expr::parse("1/x4").unwrap();
    let x = [0.3, -0.2, 0.5, 1.3];
    let p = ConformalPoint::new(&map, &hyp, &h, &factor, &x).unwrap();
    let residual = p.harmonic_biharmonic_condition().unwrap();
    assert!(residual.iter().all(|v| v.abs() < 1e-12), "{residual:?}");

    // the three terms of J_ḡ(dφ(grad_ḡ ln F)) over the flat metric ḡ
    let frame = p.barred();
    assert!(frame.domain().christoffel_values().iter().all(|&c| c.abs() < 1e-14));
    let d4: Vec<Jet> = (0..5).map(|a| frame.dphi(a, 3).clone()).collect();
    let x4 = x[3];
    let vars = Jet::seed_point(&x).unwrap();
    let j = frame.jacobi(&d4);
    let f = vars[3].recip().unwrap();
    let lap = frame.domain().laplacian(&f).value();
    let cov = frame.covariant_along(&frame.domain().gradient(&f), &d4);
    let (t1, t2, t3) = (-j[4] / x4, lap * d4[4].value(), 2.0 * cov[4].value());
    assert_relative_eq!(t1, -4.0 / x4.powi(3), max_relative = 1e-12);
    assert_relative_eq!(t2, 2.0 / x4.powi(3), max_relative = 1e-12);
    assert_relative_eq!(t3, 2.0 / x4.powi(3), max_relative = 1e-12);
    for k in 0..4 {
        assert!(j[k].abs() < 1e-12 && cov[k].value().abs() < 1e-12);
    }

    assert!(relative_discrepancy(&p.bitension_direct(), &bitension_field(&map, &flat, &h, &x).unwrap()) < 1e-14);
    assert!(bitension_field(&map, &flat, &h, &x).unwrap().iter().all(|v| v.abs() < 1e-12));
    assert!(tension_field(&map, &flat, &h, &x).unwrap()[4].abs() > 1.0);
    let gbar = conformal_metric(&hyp, &factor);
    assert!(relative_discrepancy(&gbar.values_at(&x).unwrap(), &flat.values_at(&x).unwrap()) < 1e-15);
}

#[test]
fn harmonic_condition_preconditions() {
    let (map, _, hyp, h) = h5();
    let x = [0.3, -0.2, 0.5, 1.3];
    let p = ConformalPoint::new(&map, &hyp, &h, &Expr::parse("2.5").unwrap(), &x).unwrap();
    assert!(p.harmonic_biharmonic_condition().unwrap().iter().all(|v| v.abs() < 1e-14));
    let bent = SmoothMap::new(
        map.coords().to_vec(),
        ["x1^2", "x1", "x2", "x3", "x4"].iter().map(|s| Expr::parse(s).unwrap()).collect(),
        map.domain().clone(),
        Params::new(),
    )
    .unwrap();
    let p = ConformalPoint::new(&bent, &hyp, &h, &Expr::parse("1/x4").unwrap(), &x).unwrap();
    assert!(matches!(p.harmonic_biharmonic_condition(), Err(Error::NotHarmonic { .. })));
    let c = seeded_case(2, 3, 1, 0).unwrap();
    let p = ConformalPoint::new(&c.map, &c.g, &c.h, &c.factor, &c.point).unwrap();
    assert!(matches!(p.harmonic_biharmonic_condition(), Err(Error::Dimension(_))));
    assert!(matches!(
        ConformalPoint::new(&map, &hyp, &h, &Expr::parse("x1").unwrap(), &[-0.3, 0.0, 0.0, 1.0]),
        Err(Error::NonPositiveFactor { .. })
    ));
}
