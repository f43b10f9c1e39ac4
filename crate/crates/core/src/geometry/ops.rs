use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{Jet, MAX_ORDER};

use super::map::{eval_components, FieldAlongMap, MapFrame, SmoothMap};
use super::metric::{MetricJets, RiemannianMetric};
use super::quadrature::box_rule;

pub fn christoffel_symbols(g: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(g.jets_at(x, 1)?.christoffel_values())
}

/// `R^l_{kij}`, see [`MetricJets::curvature_values`].
pub fn riemann_tensor(g: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(g.jets_at(x, 2)?.curvature_values())
}

/// `R(X, Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z` for vectors at `x`.
pub fn curvature_apply(g: &RiemannianMetric, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let m = g.dim();
    if u.len() != m || v.len() != m || w.len() != m {
        return Err(Error::Dimension("curvature arguments of the wrong dimension".into()));
    }
    let r = riemann_tensor(g, x)?;
    Ok((0..m)
        .map(|l| {
            let mut s = 0.0;
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        s += r[((l * m + k) * m + i) * m + j] * u[i] * v[j] * w[k];
                    }
                }
            }
            s
        })
        .collect())
}

fn scalar_jet(g: &RiemannianMetric, f: &Expr, x: &[f64]) -> Result<Jet> {
    let vars = Jet::seed_point_to_order(x, MAX_ORDER)?;
    Ok(eval_components(std::slice::from_ref(f), g.coords(), &vars, g.params())?.remove(0))
}

pub fn gradient(g: &RiemannianMetric, f: &Expr, x: &[f64]) -> Result<Vec<f64>> {
    let jets = g.jets_at(x, MAX_ORDER)?;
    Ok(jets.gradient(&scalar_jet(g, f, x)?).iter().map(Jet::value).collect())
}

pub fn laplacian(g: &RiemannianMetric, f: &Expr, x: &[f64]) -> Result<f64> {
    let jets = g.jets_at(x, MAX_ORDER)?;
    Ok(jets.laplacian(&scalar_jet(g, f, x)?).value())
}

/// `φ*h` at `x`, row-major.
pub fn pullback_metric(map: &SmoothMap, h: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    let phi = map.jets_at(x, 1)?;
    let y: Vec<f64> = phi.iter().map(Jet::value).collect();
    let hv = h.values_at(&y)?;
    let (m, n) = (map.source_dim(), map.target_dim());
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            for a in 0..n {
                for b in 0..n {
                    out[i * m + j] += hv[a * n + b] * phi[a].d(i) * phi[b].d(j);
                }
            }
        }
    }
    Ok(out)
}

/// Best conformal factor `λ²` with `φ*h ≈ λ² g`, and the relative
/// deviation `max|φ*h - λ² g| / max|φ*h|`.
pub fn conformality(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<(f64, f64)> {
    let p = pullback_metric(map, h, x)?;
    let gj = g.jets_at(x, 1)?;
    let m = g.dim();
    let gv = gj.metric_values();
    let gi = gj.inverse_values();
    let lambda2 = (0..m * m).map(|k| gi[k] * p[k]).sum::<f64>() / m as f64;
    let scale = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let dev = p.iter().zip(&gv).fold(0.0f64, |a, (p, g)| a.max((p - lambda2 * g).abs()));
    Ok((lambda2, if scale > 0.0 { dev / scale } else { f64::INFINITY }))
}

pub fn tension_field(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(MapFrame::new(map, g, h, x)?.tension().iter().map(Jet::value).collect())
}

pub fn jacobi_field(
    map: &SmoothMap,
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    field: &FieldAlongMap,
    x: &[f64],
) -> Result<Vec<f64>> {
    let frame = MapFrame::new(map, g, h, x)?;
    Ok(frame.jacobi(&field.jets_at(x, MAX_ORDER)?))
}

pub fn bitension_field(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(MapFrame::new(map, g, h, x)?.bitension())
}

fn check_region(map: &SmoothMap, region: &[(f64, f64)]) -> Result<()> {
    if !map.domain().contains_region(region) {
        return Err(Error::Invalid(format!("integration region {region:?} leaves the chart")));
    }
    Ok(())
}

/// `E₂(φ) = ½ ∫ |τ(φ)|² dv_g` over a coordinate box, by tensor-product
/// Gauss-Legendre quadrature.
pub fn bienergy(
    map: &SmoothMap,
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    region: &[(f64, f64)],
    nodes_per_axis: usize,
) -> Result<f64> {
    check_region(map, region)?;
    box_rule(region, nodes_per_axis)
        .par_iter()
        .map(|(x, w)| {
            let frame = MapFrame::new(map, g, h, x)?;
            let tau: Vec<f64> = frame.tension().iter().map(Jet::value).collect();
            Ok(0.5 * w * frame.target_norm(&tau).powi(2) * frame.domain().volume_density())
        })
        .sum()
}

/// `∫ <τ₂(φ), V> dv_g` over a coordinate box.
pub fn bitension_pairing(
    map: &SmoothMap,
    field: &[Expr],
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    region: &[(f64, f64)],
    nodes_per_axis: usize,
) -> Result<f64> {
    check_region(map, region)?;
    let v = FieldAlongMap::new(map.coords().to_vec(), field.to_vec(), map.params().clone());
    box_rule(region, nodes_per_axis)
        .par_iter()
        .map(|(x, w)| {
            let frame = MapFrame::new(map, g, h, x)?;
            let tau2 = frame.bitension();
            let vx: Vec<f64> = v.jets_at(x, 0)?.iter().map(Jet::value).collect();
            Ok(w * frame.target_inner(&tau2, &vx) * frame.domain().volume_density())
        })
        .sum()
}

/// Central-difference slope of the bienergy along `φ + tV` next to the
/// pairing `∫ <τ₂(φ), V> dv_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVariation {
    pub step: f64,
    pub slope: f64,
    pub pairing: f64,
}

impl FirstVariation {
    /// Sign `s` with `d/dt E₂ = s ∫ <τ₂, V>`, or 0 when undetermined.
    pub fn sign(&self) -> f64 {
        if self.pairing == 0.0 || self.slope == 0.0 {
            0.0
        } else {
            (self.slope / self.pairing).signum()
        }
    }

    /// `|slope - s * pairing|`.
    pub fn defect(&self, sign: f64) -> f64 {
        (self.slope - sign * self.pairing).abs()
    }
}

/// `(E₂(φ + tV) - E₂(φ - tV)) / 2t`.
pub fn variation_slope(
    map: &SmoothMap,
    field: &[Expr],
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    region: &[(f64, f64)],
    t: f64,
    nodes_per_axis: usize,
) -> Result<f64> {
    let energy = |s: f64| bienergy(&map.perturbed(field, s)?, g, h, region, nodes_per_axis);
    Ok((energy(t)? - energy(-t)?) / (2.0 * t))
}

/// `V` must vanish to first order on the boundary of `region` for the
/// slope to approach `s * pairing`.
pub fn first_variation_check(
    map: &SmoothMap,
    field: &[Expr],
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    region: &[(f64, f64)],
    t: f64,
    nodes_per_axis: usize,
) -> Result<FirstVariation> {
    Ok(FirstVariation {
        step: t,
        slope: variation_slope(map, field, g, h, region, t, nodes_per_axis)?,
        pairing: bitension_pairing(map, field, g, h, region, nodes_per_axis)?,
    })
}

/// Metric jets of `F^{-2} g` at `x`, given `F` as an expression in the
/// coordinates of `g`.
pub fn conformal_jets(g: &RiemannianMetric, factor: &Expr, x: &[f64]) -> Result<MetricJets> {
    let f = scalar_jet(g, factor, x)?;
    if f.value() <= 0.0 || !f.value().is_finite() {
        return Err(Error::NonPositiveFactor { point: x.to_vec(), value: f.value() });
    }
    let w = f.powi(-2).map_err(|_| Error::NonPositiveFactor { point: x.to_vec(), value: f.value() })?;
    g.jets_at(x, MAX_ORDER)?.rescaled(&w)
}
