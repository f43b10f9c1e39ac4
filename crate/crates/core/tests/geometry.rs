use std::f64::consts::PI;

use approx::assert_relative_eq;
use bitension_core::expr::Expr;
use bitension_core::geometry::{
    bienergy, bitension_field, christoffel_symbols, conformality, curvature_apply, first_variation_check, gradient,
    laplacian, pullback_metric, tension_field, variation_slope, ChartDomain, Params, RiemannianMetric, SmoothMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(ns: &[&str]) -> Vec<String> {
    ns.iter().map(|s| s.to_string()).collect()
}

fn exprs(src: &[&str]) -> Vec<Expr> {
    src.iter().map(|s| Expr::parse(s).unwrap()).collect()
}

fn flat(coords: &[&str]) -> RiemannianMetric {
    RiemannianMetric::euclidean(names(coords), ChartDomain::unbounded(coords.len())).unwrap()
}

fn plane_map(components: &[&str]) -> SmoothMap {
    SmoothMap::new(names(&["x", "y"]), exprs(components), ChartDomain::unbounded(2), Params::new()).unwrap()
}

/// Fourth-order central difference of `f` along coordinate `i`.
fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut p = x.to_vec();
        p[i] += s;
        f(&p)
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

/// Laplace-Beltrami in divergence form, `|g|^{-1/2} ∂_i(|g|^{1/2} g^{ij} ∂_j f)`,
/// for a two-dimensional metric given as a closure.
fn laplace_beltrami(metric: &dyn Fn(&[f64]) -> [f64; 4], f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let flux = |i: usize| {
        move |p: &[f64]| {
            let g = metric(p);
            let det = g[0] * g[3] - g[1] * g[2];
            let inv = [g[3] / det, -g[1] / det, -g[2] / det, g[0] / det];
            let df = [fd(f, p, 0, h), fd(f, p, 1, h)];
            det.sqrt() * (inv[2 * i] * df[0] + inv[2 * i + 1] * df[1])
        }
    };
    let g = metric(x);
    let det = g[0] * g[3] - g[1] * g[2];
    (fd(&flux(0), x, 0, h) + fd(&flux(1), x, 1, h)) / det.sqrt()
}

#[test]
fn flat_biharmonic_polynomials() {
    let g = flat(&["x", "y"]);
    let h = flat(&["u", "v"]);
    let x = [0.3, -0.2];
    let cubic = bitension_field(&plane_map(&["x^3", "y"]), &g, &h, &x).unwrap();
    assert!(cubic.iter().all(|c| c.abs() < 1e-12));
    let quartic = bitension_field(&plane_map(&["x^4", "y"]), &g, &h, &x).unwrap();
    assert_relative_eq!(quartic[0], 24.0, epsilon = 1e-11);
    assert!(quartic[1].abs() < 1e-12);
}

#[test]
fn curved_domain_matches_divergence_form_oracle() {
    let metric_src = ["exp(0.4*x - 0.2*y)*(1 + 0.15*sin(x)^2)", "exp(0.4*x - 0.2*y)*0.15*sin(x)*cos(y)",
        "exp(0.4*x - 0.2*y)*0.15*sin(x)*cos(y)", "exp(0.4*x - 0.2*y)*(1 + 0.15*cos(y)^2)"];
    let g = RiemannianMetric::new(names(&["x", "y"]), exprs(&metric_src), ChartDomain::unbounded(2), Params::new())
        .unwrap();
    let h = flat(&["u", "v", "w"]);
    let map = plane_map(&["x^2*y + sin(y)", "cos(x)*y", "x*y^3 - x"]);

    let metric = |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let e = (0.4 * x - 0.2 * y).exp();
        let off = e * 0.15 * x.sin() * y.cos();
        [e * (1.0 + 0.15 * x.sin().powi(2)), off, off, e * (1.0 + 0.15 * y.cos().powi(2))]
    };
    let comps: [fn(&[f64]) -> f64; 3] = [
        |p| p[0] * p[0] * p[1] + p[1].sin(),
        |p| p[0].cos() * p[1],
        |p| p[0] * p[1].powi(3) - p[0],
    ];

    for x in [[0.3, -0.2], [-0.4, 0.45], [0.1, 0.05]] {
        let tau = tension_field(&map, &g, &h, &x).unwrap();
        let tau2 = bitension_field(&map, &g, &h, &x).unwrap();
        for c in 0..3 {
            let f = comps[c];
            let want_tau = laplace_beltrami(&metric, &f, &x, 1e-3);
            assert_relative_eq!(tau[c], want_tau, epsilon = 1e-7, max_relative = 1e-7);
            let lap_f = |p: &[f64]| laplace_beltrami(&metric, &f, p, 1e-2);
            let want_tau2 = laplace_beltrami(&metric, &lap_f, &x, 1e-2);
            assert_relative_eq!(tau2[c], want_tau2, epsilon = 1e-5, max_relative = 1e-5);
        }
    }
}

fn half_plane() -> RiemannianMetric {
    RiemannianMetric::conformally_flat(
        names(&["u", "v"]),
        Expr::parse("1/v^2").unwrap(),
        ChartDomain::new(vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)]).unwrap(),
        Params::new(),
    )
    .unwrap()
}

#[test]
fn hyperbolic_identity_is_harmonic() {
    let h = half_plane();
    let id = SmoothMap::new(names(&["u", "v"]), exprs(&["u", "v"]), h.domain().clone(), Params::new()).unwrap();
    for x in [[0.2, 0.5], [-1.0, 2.0]] {
        assert!(tension_field(&id, &h, &h, &x).unwrap().iter().all(|c| c.abs() < 1e-12));
        assert!(bitension_field(&id, &h, &h, &x).unwrap().iter().all(|c| c.abs() < 1e-11));
    }
}

/// Composing with an isometry of the target multiplies τ and τ₂ by its
/// differential; here `(u, v) -> (2u + 1, 2v)` on the half plane.
#[test]
fn bitension_is_equivariant_under_target_isometries() {
    let g = flat(&["x", "y"]);
    let h = half_plane();
    let map = plane_map(&["x*y + sin(x)", "1.5 + 0.3*x^2 + 0.2*cos(y)"]);
    let moved = plane_map(&["2*(x*y + sin(x)) + 1", "2*(1.5 + 0.3*x^2 + 0.2*cos(y))"]);
    let x = [0.4, -0.7];
    let t1 = bitension_field(&map, &g, &h, &x).unwrap();
    let t2 = bitension_field(&moved, &g, &h, &x).unwrap();
    assert!(t1[0].abs() > 1e-3);
    for c in 0..2 {
        assert_relative_eq!(t2[c], 2.0 * t1[c], epsilon = 1e-11, max_relative = 1e-11);
    }
}

#[test]
fn isometric_cylinder() {
    let g = RiemannianMetric::diagonal(
        names(&["t", "z"]),
        exprs(&["R^2", "1"]),
        ChartDomain::new(vec![(-1.0, 7.0), (-1.0, 2.0)]).unwrap(),
        Params::from([("R".to_string(), 1.0)]),
    )
    .unwrap();
    let h = flat(&["X", "Y", "Z"]);
    let map = SmoothMap::new(
        names(&["t", "z"]),
        exprs(&["R*cos(t)", "R*sin(t)", "z"]),
        g.domain().clone(),
        Params::from([("R".to_string(), 1.0)]),
    )
    .unwrap();
    let tau2 = bitension_field(&map, &g, &h, &[0.7, 0.3]).unwrap();
    assert_relative_eq!(tau2[0], 0.7f64.cos(), epsilon = 1e-12);
    assert_relative_eq!(tau2[1], 0.7f64.sin(), epsilon = 1e-12);
    let e = bienergy(&map, &g, &h, &[(0.0, 2.0 * PI), (0.0, 1.0)], 16).unwrap();
    assert_relative_eq!(e, PI, epsilon = 1e-12);
}

const BUMP: &str = "1000*(x - 0.1)^2*(0.9 - x)^2*(y - 1.1)^2*(1.9 - y)^2";
const REGION: [(f64, f64); 2] = [(0.1, 0.9), (1.1, 1.9)];

fn bump_field() -> Vec<Expr> {
    exprs(&[&format!("{BUMP}*(1 + x)"), &format!("{BUMP}*y")])
}

#[test]
fn first_variation_sign_on_flat_plane() {
    let g = flat(&["x", "y"]);
    let h = flat(&["u", "v"]);
    // E₂ is quadratic in t for a flat target, so the central difference is exact
    let fv = first_variation_check(&plane_map(&["x^4", "y"]), &bump_field(), &g, &h, &REGION, 1e-2, 12).unwrap();
    assert_eq!(fv.sign(), 1.0);
    assert!(fv.defect(1.0) < 1e-10 * fv.pairing.abs(), "{fv:?}");
    // (x^3, y) is biharmonic: zero pairing, zero slope
    let cubic = first_variation_check(&plane_map(&["x^3", "y"]), &bump_field(), &g, &h, &REGION, 1e-2, 12).unwrap();
    assert!(cubic.pairing.abs() < 1e-9 && cubic.slope.abs() < 1e-9, "{cubic:?}");
}

#[test]
fn first_variation_into_hyperbolic_plane_converges_quadratically() {
    let g = flat(&["x", "y"]);
    let h = half_plane();
    let map = plane_map(&["x^4", "y"]);
    let field = bump_field();
    let pairing = first_variation_check(&map, &field, &g, &h, &REGION, 1e-2, 20).unwrap().pairing;
    let defects: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&t| (variation_slope(&map, &field, &g, &h, &REGION, t, 20).unwrap() - pairing).abs())
        .collect();
    for w in defects.windows(2) {
        assert_relative_eq!(w[0] / w[1], 4.0, max_relative = 0.05);
    }
}

fn cylindrical() -> RiemannianMetric {
    RiemannianMetric::diagonal(
        names(&["rho", "theta", "z"]),
        exprs(&["1", "rho^2", "1"]),
        ChartDomain::new(vec![(0.0, f64::INFINITY), (-10.0, 10.0), (-10.0, 10.0)]).unwrap().excluding(0, 0.0).unwrap(),
        Params::new(),
    )
    .unwrap()
}

#[test]
fn cylindrical_chart_christoffels() {
    let gamma = christoffel_symbols(&cylindrical(), &[1.7, 0.3, -0.4]).unwrap();
    for (idx, &v) in gamma.iter().enumerate() {
        let (k, i, j) = (idx / 9, (idx / 3) % 3, idx % 3);
        let want = match (k, i, j) {
            (0, 1, 1) => -1.7,
            (1, 0, 1) | (1, 1, 0) => 1.0 / 1.7,
            _ => 0.0,
        };
        assert_relative_eq!(v, want, epsilon = 1e-14);
    }
}

fn random_vectors(rng: &mut impl Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn check_constant_curvature(h: &RiemannianMetric, curvature: f64, points: &[Vec<f64>], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.dim();
    for y in points {
        let v = random_vectors(&mut rng, 3, n);
        let hv = h.values_at(y).unwrap();
        let inner = |a: &[f64], b: &[f64]| -> f64 { (0..n * n).map(|k| hv[k] * a[k / n] * b[k % n]).sum() };
        let got = curvature_apply(h, y, &v[0], &v[1], &v[2]).unwrap();
        let yz = inner(&v[1], &v[2]);
        let xz = inner(&v[0], &v[2]);
        for l in 0..n {
            let want = curvature * (yz * v[0][l] - xz * v[1][l]);
            assert_relative_eq!(got[l], want, epsilon = 1e-10, max_relative = 1e-10);
        }
    }
}

#[test]
fn constant_curvature_identities_at_random_points() {
    let hyp = RiemannianMetric::conformally_flat(
        names(&["y1", "y2", "y3", "y4", "y5"]),
        Expr::parse("y5^(-2)").unwrap(),
        ChartDomain::new(vec![(-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0), (0.5, 2.0)]).unwrap(),
        Params::new(),
    )
    .unwrap();
    let pts = hyp.domain().sample_points(32, 1).unwrap();
    check_constant_curvature(&hyp, -1.0, &pts, 2);

    let sphere = RiemannianMetric::conformally_flat(
        names(&["y1", "y2", "y3", "y4", "y5"]),
        Expr::parse("4/(1 + y1^2 + y2^2 + y3^2 + y4^2 + y5^2)^2").unwrap(),
        ChartDomain::cube(5, -2.0, 2.0).unwrap(),
        Params::new(),
    )
    .unwrap();
    let pts = sphere.domain().sample_points(32, 3).unwrap();
    check_constant_curvature(&sphere, 1.0, &pts, 4);
}

#[test]
fn metric_compatibility() {
    for g in [cylindrical(), half_plane()] {
        let m = g.dim();
        let mut bounds = vec![(-1.0, 1.0); m];
        bounds[if m == 3 { 0 } else { 1 }] = (0.5, 2.0);
        let pts = ChartDomain::new(bounds).unwrap().sample_points(16, 9).unwrap();
        for x in pts {
            let j = g.jets_at(&x, 2).unwrap();
            for k in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        let mut v = j.g(a, b).d(k);
                        for l in 0..m {
                            v -= j.gamma(l, k, a).value() * j.g(l, b).value() + j.gamma(l, k, b).value() * j.g(a, l).value();
                        }
                        assert!(v.abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn gradient_and_laplacian_examples() {
    let g = flat(&["x1", "x2"]);
    let f = Expr::parse("x1^2").unwrap();
    assert_eq!(gradient(&g, &f, &[0.5, 1.0]).unwrap(), vec![1.0, 0.0]);
    assert_relative_eq!(laplacian(&g, &f, &[0.5, 1.0]).unwrap(), 2.0);

    // ln λ with λ² = e^{z/R} on the flat (θ, z) chart
    let g = flat(&["theta", "z"]).with_params(Params::from([("R".to_string(), 2.0)]));
    let ln_lambda = Expr::parse("z/(2*R)").unwrap();
    assert!(laplacian(&g, &ln_lambda, &[0.3, 0.2]).unwrap().abs() < 1e-15);
    let grad = gradient(&g, &ln_lambda, &[0.3, 0.2]).unwrap();
    assert_relative_eq!(grad[0] * grad[0] + grad[1] * grad[1], 1.0 / 16.0);
}

#[test]
fn pullbacks_and_conformality() {
    let h = cylindrical();
    let params = Params::from([("R".to_string(), 1.5), ("C2".to_string(), 2.0)]);
    let domain = ChartDomain::new(vec![(0.0, 6.0), (0.0, 1.0)]).unwrap();
    let map = SmoothMap::new(names(&["theta", "z"]), exprs(&["R", "theta", "z"]), domain.clone(), params.clone()).unwrap();
    let p = pullback_metric(&map, &h, &[1.0, 0.5]).unwrap();
    assert_eq!(p, vec![2.25, 0.0, 0.0, 1.0]);

    let g = RiemannianMetric::diagonal(names(&["theta", "z"]), exprs(&["R^2*exp(-z)", "exp(-z)"]), domain, params).unwrap();
    let (lambda2, dev) = conformality(&map, &g, &h, &[1.0, 0.5]).unwrap();
    assert_relative_eq!(lambda2, 0.5f64.exp(), max_relative = 1e-12);
    assert!(dev < 1e-14);

    let skew = plane_map(&["x", "y", "x"]);
    let (_, dev) = conformality(&skew, &flat(&["x", "y"]), &flat(&["a", "b", "c"]), &[0.1, 0.2]).unwrap();
    assert!(dev > 0.1);
    let id = plane_map(&["x", "y"]);
    let (lambda2, dev) = conformality(&id, &half_plane(), &half_plane(), &[0.1, 0.2]).unwrap();
    assert_relative_eq!(lambda2, 1.0, epsilon = 1e-14);
    assert!(dev < 1e-14);
}

#[test]
fn stereographic_pullback() {
    let h = RiemannianMetric::conformally_flat(
        names(&["y1", "y2", "y3", "y4", "y5"]),
        Expr::parse("4/(1 + y1^2 + y2^2 + y3^2 + y4^2 + y5^2)^2").unwrap(),
        ChartDomain::unbounded(5),
        Params::new(),
    )
    .unwrap();
    let map = SmoothMap::new(
        names(&["u1", "u2", "u3", "u4"]),
        exprs(&["u1", "u2", "u3", "u4", "0"]),
        ChartDomain::unbounded(4),
        Params::new(),
    )
    .unwrap();
    let u = [0.3, -0.5, 1.2, 0.1];
    let p = pullback_metric(&map, &h, &u).unwrap();
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let want = 4.0 / (1.0 + r2).powi(2);
    for i in 0..4 {
        for j in 0..4 {
            assert_relative_eq!(p[i * 4 + j], if i == j { want } else { 0.0 }, epsilon = 1e-15);
        }
    }
}
