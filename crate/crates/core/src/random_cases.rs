//! Randomized smooth test geometries with guaranteed well-posedness.
//!
//! Metrics are `δ + ε P` with `|P_ij| ≤ 1` and `ε m < 1`, so they are
//! positive definite everywhere by diagonal dominance. Maps, fields and
//! scalars mix polynomials of degree at most three with bounded
//! trigonometric terms. Conformal factors are exponentials of small
//! bounded functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expr::Expr;
use crate::geometry::{ChartDomain, FieldAlongMap, Params, RiemannianMetric, SmoothMap};

/// Half-width of the box the base point is drawn from.
pub const POINT_RADIUS: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RandomCase {
    pub map: SmoothMap,
    pub g: RiemannianMetric,
    pub h: RiemannianMetric,
    /// Conformal factor `F` in the domain coordinates.
    pub factor: Expr,
    /// Section along the map.
    pub field: FieldAlongMap,
    /// Smooth scalar on the domain.
    pub scalar: Expr,
    pub point: Vec<f64>,
}

pub fn coordinate_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn coef(rng: &mut impl Rng, scale: f64) -> String {
    format!("{:?}", (rng.gen_range(-scale..scale) * 1e4).round() / 1e4)
}

fn pick<'a>(rng: &mut impl Rng, names: &'a [String]) -> &'a str {
    &names[rng.gen_range(0..names.len())]
}

/// A function bounded by 1 in absolute value.
fn bounded_term(rng: &mut impl Rng, names: &[String]) -> String {
    let (a, b, c) = (coef(rng, 1.5), coef(rng, 1.5), coef(rng, 1.0));
    let (x, y) = (pick(rng, names).to_string(), pick(rng, names).to_string());
    match rng.gen_range(0..3) {
        0 => format!("sin({a}*{x} + {c})"),
        1 => format!("cos({a}*{x} + {b}*{y} + {c})"),
        _ => format!("sin({a}*{x})*cos({b}*{y} + {c})"),
    }
}

/// Polynomial of degree at most three plus one trigonometric term.
fn smooth_function(rng: &mut impl Rng, names: &[String]) -> String {
    let mut s = coef(rng, 1.0);
    for x in names {
        s += &format!(" + {}*{x}", coef(rng, 1.0));
    }
    for _ in 0..2 {
        let (x, y) = (pick(rng, names), pick(rng, names));
        s += &format!(" + {}*{x}*{y}", coef(rng, 0.5));
    }
    let (x, y, z) = (pick(rng, names), pick(rng, names), pick(rng, names));
    s += &format!(" + {}*{x}*{y}*{z}", coef(rng, 0.3));
    let x = pick(rng, names);
    s += &format!(" + {}*sin({}*{x} + {})", coef(rng, 0.5), coef(rng, 1.5), coef(rng, 1.0));
    s
}

fn parse(src: &str) -> Expr {
    Expr::parse(src).expect("generated expressions are well formed")
}

/// `δ + ε P` over the given coordinates.
pub fn random_metric(rng: &mut impl Rng, names: &[String]) -> Result<RiemannianMetric> {
    let m = names.len();
    let eps = (0.75 / m as f64).min(0.2);
    let mut comps = vec![Expr::num(0.0); m * m];
    for i in 0..m {
        for j in i..m {
            let term = bounded_term(rng, names);
            let src = if i == j { format!("1 + {eps:?}*{term}") } else { format!("{eps:?}*{term}") };
            comps[i * m + j] = parse(&src);
            comps[j * m + i] = comps[i * m + j].clone();
        }
    }
    RiemannianMetric::new(names.to_vec(), comps, ChartDomain::unbounded(m), Params::new())
}

pub fn random_factor(rng: &mut impl Rng, names: &[String]) -> Expr {
    let (a, b) = (bounded_term(rng, names), bounded_term(rng, names));
    parse(&format!("exp({}*{a} + {}*{b})", coef(rng, 0.3), coef(rng, 0.2)))
}

pub fn random_case(m: usize, n: usize, rng: &mut impl Rng) -> Result<RandomCase> {
    let xs = coordinate_names("x", m);
    let ys = coordinate_names("y", n);
    let g = random_metric(rng, &xs)?;
    let h = random_metric(rng, &ys)?;
    let components = (0..n).map(|_| parse(&smooth_function(rng, &xs))).collect();
    let map = SmoothMap::new(xs.clone(), components, ChartDomain::unbounded(m), Params::new())?;
    let factor = random_factor(rng, &xs);
    let field = FieldAlongMap::new(
        xs.clone(),
        (0..n).map(|_| parse(&smooth_function(rng, &xs))).collect(),
        Params::new(),
    );
    let scalar = parse(&smooth_function(rng, &xs));
    let point = (0..m).map(|_| rng.gen_range(-POINT_RADIUS..POINT_RADIUS)).collect();
    Ok(RandomCase { map, g, h, factor, field, scalar, point })
}

/// The `index`-th case of the stream determined by `seed`.
pub fn seeded_case(m: usize, n: usize, seed: u64, index: u64) -> Result<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    random_case(m, n, &mut rng)
}
