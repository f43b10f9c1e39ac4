//! Complex form of the biharmonic equation for surfaces in flat `ℝⁿ`.
//!
//! With `z = u + iv`, `∂_z = ½(∂_u - i∂_v)` and `∂_z̄ = ½(∂_u + i∂_v)`, a
//! map `φ` has section `ϕ = ∂φ/∂z`. Over a domain metric `g = μ|dz|²` the
//! Laplacian is `4μ^{-1}∂_z̄∂_z`, so `τ = 4μ^{-1}∂ϕ/∂z̄` and
//! `τ₂ = 4μ^{-1}∂_z̄∂_z(4μ^{-1}∂ϕ/∂z̄)` componentwise. The map is conformal
//! iff `Σ ϕ² = 0` and `Σ|ϕ|² ≠ 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartDomain, MetricJets, Params, RiemannianMetric, SmoothMap};
use crate::jet::{Jet, MAX_ORDER};

/// Relative tolerance of the conformality gate and of the check that the
/// domain metric is a multiple of `du² + dv²`.
pub const CONFORMAL_TOL: f64 = 1e-9;

/// A complex function of `(u, v)` as a pair of real jets.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexJet {
    pub re: Jet,
    pub im: Jet,
}

impl ComplexJet {
    pub fn new(re: Jet, im: Jet) -> Self {
        Self { re, im }
    }

    pub fn real(re: Jet) -> Self {
        let im = re.zero_like();
        Self { re, im }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    /// `½(∂_u - i∂_v)`.
    pub fn d_z(&self) -> Self {
        let (a, b) = (&self.re, &self.im);
        Self {
            re: a.derivative(0).add(&b.derivative(1)).scale(0.5),
            im: b.derivative(0).sub(&a.derivative(1)).scale(0.5),
        }
    }

    /// `½(∂_u + i∂_v)`.
    pub fn d_zbar(&self) -> Self {
        let (a, b) = (&self.re, &self.im);
        Self {
            re: a.derivative(0).sub(&b.derivative(1)).scale(0.5),
            im: b.derivative(0).add(&a.derivative(1)).scale(0.5),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            re: self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            im: self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        }
    }

    pub fn scale(&self, f: &Jet) -> Self {
        Self { re: f.mul(&self.re), im: f.mul(&self.im) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.neg() }
    }
}

/// The section `ϕ = ∂φ/∂z` of a surface in `ℝⁿ` at one point, with the
/// induced factor `⟨φ_u, φ_u⟩` and the domain factor `μ` of `g = μ|dz|²`.
#[derive(Debug, Clone)]
pub struct WSection {
    point: Vec<f64>,
    /// Components of `ϕ`, order three.
    section: Vec<ComplexJet>,
    /// `(⟨φ_u, φ_u⟩, ⟨φ_v, φ_v⟩, ⟨φ_u, φ_v⟩)`.
    induced: (f64, f64, f64),
    /// `μ^{-1}`, order four.
    inv_factor: Jet,
}

/// Checks `g = μ(du² + dv²)` at `x` and returns the jet of `μ`.
fn domain_factor(g: &MetricJets) -> Result<Jet> {
    let (a, b, c) = (g.g(0, 0), g.g(1, 1), g.g(0, 1));
    let scale = a.value().abs().max(b.value().abs());
    let deviation = (a.value() - b.value()).abs().max(c.value().abs()) / scale;
    if deviation > CONFORMAL_TOL {
        return Err(Error::Invalid(format!(
            "domain metric is not a multiple of du^2 + dv^2 at {:?} (relative deviation {deviation:e})",
            g.point()
        )));
    }
    Ok(a.add(b).scale(0.5))
}

pub fn w_section(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<WSection> {
    if map.source_dim() != 2 || g.dim() != 2 {
        return Err(Error::Dimension(format!("the complex form needs a surface, got dimension {}", map.source_dim())));
    }
    if !h.is_euclidean() || h.dim() != map.target_dim() {
        return Err(Error::NonFlatTarget);
    }
    let mu = domain_factor(&g.jets_at(x, MAX_ORDER)?)?;
    let inv_factor = mu.recip().map_err(|_| Error::NonPositiveFactor { point: x.to_vec(), value: mu.value() })?;
    let phi = map.jets_at(x, MAX_ORDER)?;
    let section: Vec<ComplexJet> = phi.iter().map(|p| ComplexJet::real(p.clone()).d_z()).collect();
    let (mut e, mut f, mut gg) = (0.0, 0.0, 0.0);
    for p in &phi {
        let (pu, pv) = (p.d(0), p.d(1));
        e += pu * pu;
        gg += pv * pv;
        f += pu * pv;
    }
    Ok(WSection { point: x.to_vec(), section, induced: (e, gg, f), inv_factor })
}

impl WSection {
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn section(&self) -> Vec<Complex64> {
        self.section.iter().map(ComplexJet::value).collect()
    }

    /// `⟨φ_u, φ_u⟩`.
    pub fn induced_factor(&self) -> f64 {
        self.induced.0
    }

    /// `μ` with `g = μ|dz|²`.
    pub fn domain_factor(&self) -> f64 {
        1.0 / self.inv_factor.value()
    }

    /// `(Σ ϕ², Σ|ϕ|²)`.
    pub fn w1_w2_check(&self) -> (Complex64, f64) {
        let s = self.section();
        (s.iter().map(|c| c * c).sum(), s.iter().map(|c| c.norm_sqr()).sum())
    }

    /// `max(|E - G|, 2|F|) / (E + G)` from the first fundamental form.
    pub fn conformality_deviation(&self) -> f64 {
        let (e, g, f) = self.induced;
        (e - g).abs().max(2.0 * f.abs()) / (e + g)
    }

    pub fn check_conformal(&self, tol: f64) -> Result<()> {
        let deviation = self.conformality_deviation();
        if !(deviation <= tol) {
            return Err(Error::NonConformal { point: self.point.clone(), deviation });
        }
        if !(self.w1_w2_check().1 > 0.0) {
            return Err(Error::Degenerate { point: self.point.clone() });
        }
        Ok(())
    }

    fn dzbar_section(&self) -> Vec<ComplexJet> {
        self.section.iter().map(ComplexJet::d_zbar).collect()
    }

    /// `|∂ϕ^α/∂z̄|` per component.
    pub fn holomorphy_components(&self) -> Vec<f64> {
        self.dzbar_section().iter().map(|c| c.value().norm()).collect()
    }

    /// `max_α |∂ϕ^α/∂z̄|`; zero exactly for harmonic maps.
    pub fn holomorphy_defect(&self) -> f64 {
        self.holomorphy_components().into_iter().fold(0.0, f64::max)
    }

    /// `τ = 4μ^{-1}∂ϕ/∂z̄`.
    pub fn tension_complex(&self) -> Vec<Complex64> {
        self.dzbar_section().iter().map(|c| c.scale(&self.inv_factor).value() * 4.0).collect()
    }

    /// `∂_z̄∂_z(μ^{-1}∂ϕ/∂z̄)`.
    pub fn w3_residual(&self) -> Vec<Complex64> {
        self.dzbar_section().iter().map(|c| c.scale(&self.inv_factor).d_z().d_zbar().value()).collect()
    }

    /// `4μ^{-1}∂_z̄∂_z(4μ^{-1}∂ϕ/∂z̄)`.
    pub fn bitension_complex(&self) -> Vec<Complex64> {
        let m = 16.0 * self.inv_factor.value();
        self.w3_residual().iter().map(|c| c * m).collect()
    }

    /// `4μ^{-1}∂_z̄∂_z f` for a real jet over `(u, v)`.
    pub fn laplacian(&self, f: &Jet) -> f64 {
        4.0 * self.inv_factor.value() * ComplexJet::real(f.clone()).d_z().d_zbar().value().re
    }
}

/// `max_σ |z_σ|`.
pub fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0f64, |m, c| m.max(c.norm()))
}

/// `(R cos(x/R), R sin(x/R), y)` repeated `copies` times, over
/// `g = e^{y/R}(dx² + dy²)` on the given box.
pub fn wrap_case(copies: usize, bounds: Vec<(f64, f64)>, radius: f64) -> Result<(SmoothMap, RiemannianMetric, RiemannianMetric)> {
    let coords = vec!["x".to_string(), "y".to_string()];
    let params = Params::from([("R".to_string(), radius)]);
    let domain = ChartDomain::new(bounds)?;
    let one: Vec<Expr> = ["R*cos(x/R)", "R*sin(x/R)", "y"].iter().map(|s| Expr::parse(s).expect("well formed")).collect();
    let components: Vec<Expr> = one.iter().cycle().take(3 * copies).cloned().collect();
    let n = components.len();
    let map = SmoothMap::new(coords.clone(), components, domain.clone(), params.clone())?;
    let g = RiemannianMetric::conformally_flat(coords, Expr::parse("exp(y/R)").expect("well formed"), domain, params)?;
    let h = RiemannianMetric::euclidean(crate::random_cases::coordinate_names("y", n), ChartDomain::unbounded(n))?;
    Ok((map, g, h))
}

/// Expected verdict of a pool member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Harmonic,
    ProperBiharmonic,
    NotBiharmonic,
}

#[derive(Debug, Clone)]
pub struct PoolCase {
    pub kind: PoolKind,
    pub map: SmoothMap,
    pub g: RiemannianMetric,
    pub h: RiemannianMetric,
    pub point: Vec<f64>,
}

fn c(rng: &mut impl Rng, scale: f64) -> f64 {
    (rng.gen_range(-scale..scale) * 1e4_f64).round() / 1e4
}

/// Conformal immersions built from a random holomorphic
/// `f = a z + b z² + c e^z` with `f'(0) ≈ a` kept away from zero:
/// `(Re f, Im f, 0)` (harmonic for every conformal domain metric), the
/// wrap composed with `f` over its biharmonic metric
/// `e^{Im f/R}|f'|²|dz|²`, and the same wrap over the wrong rate
/// `e^{2 Im f/R}` or over the induced metric.
pub fn conformal_pool(count: usize, seed: u64) -> Result<Vec<PoolCase>> {
    let coords = vec!["u".to_string(), "v".to_string()];
    let domain = ChartDomain::new(vec![(-0.5, 0.5), (-0.5, 0.5)])?;
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let (ar, ai) = (1.0 + c(&mut rng, 0.5), c(&mut rng, 0.5));
        let (br, bi) = (c(&mut rng, 0.3), c(&mut rng, 0.3));
        let (cr, ci) = (c(&mut rng, 0.1), c(&mut rng, 0.1));
        let re_f = format!(
            "{ar:?}*u - {ai:?}*v + {br:?}*(u^2 - v^2) - {bi:?}*2*u*v + exp(u)*({cr:?}*cos(v) - {ci:?}*sin(v))"
        );
        let im_f = format!(
            "{ai:?}*u + {ar:?}*v + {bi:?}*(u^2 - v^2) + {br:?}*2*u*v + exp(u)*({cr:?}*sin(v) + {ci:?}*cos(v))"
        );
        let re_df = format!("{ar:?} + 2*({br:?}*u - {bi:?}*v) + exp(u)*({cr:?}*cos(v) - {ci:?}*sin(v))");
        let im_df = format!("{ai:?} + 2*({br:?}*v + {bi:?}*u) + exp(u)*({cr:?}*sin(v) + {ci:?}*cos(v))");
        let speed = format!("(({re_df})^2 + ({im_df})^2)");
        let radius = rng.gen_range(0.5..2.0);
        let point = vec![rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
        let params = Params::from([("R".to_string(), radius)]);
        let kind = match index % 4 {
            0 => PoolKind::Harmonic,
            1 | 2 => PoolKind::ProperBiharmonic,
            _ => PoolKind::NotBiharmonic,
        };
        let (components, factor) = match kind {
            PoolKind::Harmonic => {
                let mu = format!("exp({}*u + {}*v^2)", c(&mut rng, 1.0), c(&mut rng, 1.0));
                (vec![re_f.clone(), im_f.clone(), "0".to_string()], mu)
            }
            _ => {
                let wrap = vec![format!("R*cos(({re_f})/R)"), format!("R*sin(({re_f})/R)"), im_f.clone()];
                let rate = match (kind, index % 8) {
                    (PoolKind::ProperBiharmonic, _) => "1",
                    (_, 3) => "2",
                    _ => "0",
                };
                (wrap, format!("exp({rate}*({im_f})/R)*{speed}"))
            }
        };
        let parse = |s: &str| Expr::parse(s).map_err(Error::from);
        let map = SmoothMap::new(
            coords.clone(),
            components.iter().map(|s| parse(s)).collect::<Result<_>>()?,
            domain.clone(),
            params.clone(),
        )?;
        let g = RiemannianMetric::conformally_flat(coords.clone(), parse(&factor)?, domain.clone(), params.clone())?;
        let h = RiemannianMetric::euclidean(crate::random_cases::coordinate_names("y", 3), ChartDomain::unbounded(3))?;
        out.push(PoolCase { kind, map, g, h, point });
    }
    Ok(out)
}
