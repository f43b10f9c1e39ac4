use approx::assert_relative_eq;
use bitension_core::expr::Expr;
use bitension_core::geometry::{relative_discrepancy, ChartDomain, Params, RiemannianMetric, SmoothMap};
use bitension_core::jet::{Jet, MAX_ORDER};
use bitension_core::random_cases::{coordinate_names, random_factor, seeded_case};
use bitension_core::surfaces::{chen_bitension, r3_system_residual, r3_system_residual_with, SurfacePoint};
use bitension_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn parse_all(src: &[&str]) -> Vec<Expr> {
    src.iter().map(|s| Expr::parse(s).unwrap()).collect()
}

fn surface(components: &[&str], params: Params) -> SmoothMap {
    SmoothMap::new(vec!["u".into(), "v".into()], parse_all(components), ChartDomain::unbounded(2), params).unwrap()
}

fn euclidean3() -> RiemannianMetric {
    RiemannianMetric::euclidean(coordinate_names("y", 3), ChartDomain::unbounded(3)).unwrap()
}

fn cylindrical() -> RiemannianMetric {
    let domain = ChartDomain::new(vec![(0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)])
        .unwrap();
    RiemannianMetric::diagonal(vec!["rho".into(), "th".into(), "z".into()], parse_all(&["1", "rho^2", "1"]), domain, Params::new())
        .unwrap()
}

fn radius(r: f64) -> Params {
    Params::from([("R".to_string(), r)])
}

#[test]
fn cylinder_in_cylindrical_chart() {
    for r in [0.5, 1.0, 2.0] {
        let map = surface(&["R", "u", "v"], radius(r));
        let sp = SurfacePoint::new(&map, &cylindrical(), &[0.7, 0.2]).unwrap();
        let n = sp.normal();
        assert_relative_eq!(n[0], 1.0, epsilon = 1e-14);
        assert!(n[1].abs() < 1e-14 && n[2].abs() < 1e-14);
        let a = sp.shape_operator();
        assert_relative_eq!(a[0], -1.0 / r, epsilon = 1e-13);
        assert!(a[1].abs() < 1e-14 && a[2].abs() < 1e-14 && a[3].abs() < 1e-14);
        assert_relative_eq!(sp.mean_curvature(), -0.5 / r, epsilon = 1e-13);
        assert_relative_eq!(sp.b_norm_sq(), 1.0 / (r * r), epsilon = 1e-12);
    }
}

#[test]
fn cylinder_in_cartesian_chart() {
    let map = surface(&["R*cos(u)", "R*sin(u)", "v"], radius(2.0));
    let t = 0.9;
    let sp = SurfacePoint::new(&map, &euclidean3(), &[t, -0.3]).unwrap();
    assert!(relative_discrepancy(&sp.normal(), &[t.cos(), t.sin(), 0.0]) < 1e-14);
    assert_relative_eq!(sp.mean_curvature(), -0.25, epsilon = 1e-13);
    // isometric cylinder: τ₂ = ξ / R³
    let chen = sp.chen_bitension();
    assert!(relative_discrepancy(&chen, &[t.cos() / 8.0, t.sin() / 8.0, 0.0]) < 1e-13);
    assert!(relative_discrepancy(&chen, &sp.frame().bitension()) < 1e-12);
}

#[test]
fn plane_and_paraboloid() {
    let sp = SurfacePoint::new(&surface(&["u", "v", "0"], Params::new()), &euclidean3(), &[0.3, 0.4]).unwrap();
    assert!(sp.shape_operator().iter().all(|a| a.abs() < 1e-15));
    assert!(sp.chen_bitension().iter().all(|a| a.abs() < 1e-15));

    let para = surface(&["u", "v", "(u^2 + v^2)/2"], Params::new());
    let sp = SurfacePoint::new(&para, &euclidean3(), &[0.0, 0.0]).unwrap();
    assert!(relative_discrepancy(&sp.normal(), &[0.0, 0.0, 1.0]) < 1e-15);
    assert!(relative_discrepancy(&sp.shape_operator(), &[1.0, 0.0, 0.0, 1.0]) < 1e-14);
    assert_relative_eq!(sp.mean_curvature(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(sp.b_norm_sq(), 2.0, epsilon = 1e-13);
    let flipped = surface(&["v", "u", "(u^2 + v^2)/2"], Params::new());
    let sp = SurfacePoint::new(&flipped, &euclidean3(), &[0.0, 0.0]).unwrap();
    assert_relative_eq!(sp.mean_curvature(), -1.0, epsilon = 1e-14);
}

#[test]
fn degenerate_maps_are_rejected() {
    let fold = surface(&["u", "u", "u^2"], Params::new());
    assert!(matches!(SurfacePoint::new(&fold, &euclidean3(), &[0.1, 0.2]), Err(Error::Degenerate { .. })));
    let c = seeded_case(3, 3, 1, 0).unwrap();
    assert!(matches!(SurfacePoint::new(&c.map, &c.h, &c.point), Err(Error::Dimension(_))));
}

#[test]
fn chen_formula_on_random_surfaces() {
    for idx in 0..16 {
        let c = seeded_case(2, 3, 40, idx).unwrap();
        let map = SmoothMap::new(c.map.coords().to_vec(), c.map.components().to_vec(), ChartDomain::unbounded(2), Params::new())
            .unwrap();
        let sp = SurfacePoint::new(&map, &euclidean3(), &c.point).unwrap();
        let direct = sp.frame().bitension();
        let d = relative_discrepancy(&sp.chen_bitension(), &direct);
        assert!(d < 1e-9, "case {idx}: {d:e}");
        assert!(relative_discrepancy(&chen_bitension(&map, &euclidean3(), &c.point).unwrap(), &direct) < 1e-9);
    }
}

#[test]
fn tension_is_twice_mean_curvature_vector() {
    for idx in 0..16 {
        let c = seeded_case(2, 3, 41, idx).unwrap();
        let sp = SurfacePoint::new(&c.map, &c.h, &c.point).unwrap();
        let tau: Vec<f64> = sp.frame().tension().iter().map(Jet::value).collect();
        let eta: Vec<f64> = sp.mean_curvature_vector().iter().map(|v| 2.0 * v).collect();
        assert!(relative_discrepancy(&tau, &eta) < 1e-11, "case {idx}");
        assert_relative_eq!(sp.frame().target_norm(&sp.normal()), 1.0, epsilon = 1e-13);
    }
}

#[test]
fn normal_derivative_identity_in_curved_targets() {
    for idx in 0..16 {
        let c = seeded_case(2, 3, 42, idx).unwrap();
        let sp = SurfacePoint::new(&c.map, &c.h, &c.point).unwrap();
        let y: Vec<Jet> = c.field.jets_at(&c.point, MAX_ORDER).unwrap().into_iter().take(2).collect();
        let r = sp.normal_derivative_residual(&y);
        assert!(r.iter().all(|v| v.abs() < 1e-11), "case {idx}: {r:?}");
    }
}

/// Over `g = λ^{-2} φ*h` in flat space, `τ₂(φ, g) = λ²(2 N ξ - 4 dφ(T))`
/// with `T`, `N` the tangential and normal residuals.
#[test]
fn residuals_decompose_bitension_over_g() {
    for idx in 0..16 {
        let c = seeded_case(2, 3, 43, idx).unwrap();
        let sp = SurfacePoint::new(&c.map, &euclidean3(), &c.point).unwrap();
        let lambda_sq = bitension_core::conformal::factor_jet(&c.g, &c.factor, &c.point).unwrap();
        let res = sp.r3_residual(&lambda_sq).unwrap();
        let g = sp.frame().domain().rescaled(&lambda_sq.recip().unwrap()).unwrap();
        let over_g = sp.frame().with_domain(g).unwrap().bitension();
        let n = sp.normal();
        let l2 = lambda_sq.value();
        let expected: Vec<f64> = (0..3)
            .map(|a| {
                let push = sp.frame().dphi(a, 0).value() * res.tangential[0] + sp.frame().dphi(a, 1).value() * res.tangential[1];
                l2 * (2.0 * res.normal * n[a] - 4.0 * push)
            })
            .collect();
        let d = relative_discrepancy(&over_g, &expected);
        assert!(d < 1e-9, "case {idx}: {d:e}");
    }
}

#[test]
fn conformal_domain_metric_is_checked() {
    let map = surface(&["R*cos(u)", "R*sin(u)", "v"], radius(1.0));
    let x = [0.4, 0.1];
    let flat = RiemannianMetric::euclidean(vec!["u".into(), "v".into()], ChartDomain::unbounded(2)).unwrap();
    let res = r3_system_residual(&map, &flat, &euclidean3(), &x).unwrap();
    // isometric cylinder: only H|B|² survives
    assert!(res.tangential.iter().all(|v| v.abs() < 1e-13));
    assert_relative_eq!(res.normal, 0.5, epsilon = 1e-12);
    let with = r3_system_residual_with(&map, &euclidean3(), &Expr::num(1.0), &x).unwrap();
    assert!(relative_discrepancy(&with.tangential, &res.tangential) < 1e-14);
    let skew = RiemannianMetric::diagonal(vec!["u".into(), "v".into()], parse_all(&["1", "2"]), ChartDomain::unbounded(2), Params::new())
        .unwrap();
    assert!(matches!(r3_system_residual(&map, &skew, &euclidean3(), &x), Err(Error::NonConformal { .. })));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let names = vec!["u".to_string(), "v".to_string()];
    let f = random_factor(&mut rng, &names);
    let g = flat.scaled(&f);
    let a = r3_system_residual(&map, &g, &euclidean3(), &x).unwrap();
    let b = r3_system_residual_with(&map, &euclidean3(), &(Expr::num(1.0) / f), &x).unwrap();
    assert!(relative_discrepancy(&a.tangential, &b.tangential) < 1e-12);
    assert_relative_eq!(a.normal, b.normal, max_relative = 1e-12);
}

#[test]
fn mean_curvature_vector_along_cylinder_directions() {
    let r = 2.0;
    let map = surface(&["R", "u", "v"], radius(r));
    let x = [0.3, 0.6];
    let sp = SurfacePoint::new(&map, &cylindrical(), &x).unwrap();
    let vars = Jet::seed_point(&x).unwrap();
    let zero = vars[0].zero_like();
    let h = sp.mean_curvature();
    let eta: Vec<Jet> = sp.normal().iter().map(|n| zero.add_scalar(n * h)).collect();
    // e₁ = ∂_θ / R: ∇_{e₁}(Hξ) = (H/R) e₁
    let e1 = [zero.add_scalar(1.0 / r), zero.clone()];
    let d = sp.frame().covariant_along(&e1, &eta);
    let got: Vec<f64> = d.iter().map(Jet::value).collect();
    assert!(relative_discrepancy(&got, &[0.0, h / (r * r), 0.0]) < 1e-14);
    assert!(sp.normal_derivative_residual(&e1).iter().all(|v| v.abs() < 1e-14));
    // rulings lie in the kernel of A
    let e2 = [zero.clone(), zero.add_scalar(1.0)];
    let d: Vec<f64> = sp.frame().covariant_along(&e2, &eta).iter().map(Jet::value).collect();
    assert!(d.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn chen_formula_on_isometric_catalog_surfaces() {
    let cases = [
        (surface(&["R", "u", "v"], radius(1.5)), cylindrical()),
        (surface(&["u", "v", "0"], Params::new()), euclidean3()),
        (surface(&["u", "v", "(u^2 + v^2)/2"], Params::new()), euclidean3()),
    ];
    for (map, h) in &cases {
        for x in [[0.2, 0.1], [1.1, -0.4], [2.0, 0.5]] {
            let sp = SurfacePoint::new(map, h, &x).unwrap();
            assert!(relative_discrepancy(&sp.chen_bitension(), &sp.frame().bitension()) < 1e-10);
        }
    }
}
