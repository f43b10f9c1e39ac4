//! Extrinsic geometry of immersed surfaces in a three-dimensional target:
//! unit normal, shape operator, mean curvature, and the biharmonic surface
//! equations built from them.
//!
//! All extrinsic data are taken with respect to the induced metric
//! `ḡ = φ*h`. The normal is `ξ ∝ h^{-1}(T_1 × T_2)` with `T_i = dφ(∂_i)`,
//! so the cylinder `(R, θ, z)` in cylindrical coordinates gets `ξ = ∂_ρ`.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{eval_components, MapFrame, RiemannianMetric, SmoothMap};
use crate::jet::{Jet, MAX_ORDER};

/// Relative mismatch allowed between `φ*h` and `λ² g` before a domain
/// metric is rejected as non-conformal.
pub const CONFORMAL_TOL: f64 = 1e-8;

fn sum(terms: impl IntoIterator<Item = Jet>) -> Jet {
    terms.into_iter().reduce(|a, b| a.add(&b)).expect("nonempty sum")
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// Pointwise extrinsic data of a surface `φ: U ⊂ ℝ² -> (N³, h)`.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    frame: MapFrame,
    /// Unit normal, order three.
    normal: Vec<Jet>,
    /// `b_ij = h(-∇_i ξ, ∂_j φ)`, order two.
    second: Vec<Jet>,
    /// `A_i^j = ḡ^{jk} b_ik` at `i*2 + j`, order two.
    shape: Vec<Jet>,
    /// `H = trace(A) / 2`, order two.
    mean: Jet,
}

/// Residuals of the biharmonic surface system written over a conformal
/// domain metric `g = λ^{-2} ḡ`.
#[derive(Debug, Clone, PartialEq)]
pub struct R3Residual {
    /// Coordinate components of the tangential equation.
    pub tangential: Vec<f64>,
    pub normal: f64,
}

impl R3Residual {
    pub fn max_abs(&self) -> f64 {
        self.tangential.iter().fold(self.normal.abs(), |m, v| m.max(v.abs()))
    }
}

impl SurfacePoint {
    pub fn new(map: &SmoothMap, h: &RiemannianMetric, x: &[f64]) -> Result<Self> {
        Self::from_frame(MapFrame::induced(map, h, x)?)
    }

    /// `frame` must be taken over the induced metric.
    pub fn from_frame(frame: MapFrame) -> Result<Self> {
        if frame.m() != 2 || frame.n() != 3 {
            return Err(Error::Dimension(format!(
                "surface data need a map from dimension 2 into dimension 3, got {} -> {}",
                frame.m(),
                frame.n()
            )));
        }
        let t = |a: usize, i: usize| frame.dphi(a, i).clone();
        let lower = [
            t(1, 0).mul(&t(2, 1)).sub(&t(2, 0).mul(&t(1, 1))),
            t(2, 0).mul(&t(0, 1)).sub(&t(0, 0).mul(&t(2, 1))),
            t(0, 0).mul(&t(1, 1)).sub(&t(1, 0).mul(&t(0, 1))),
        ];
        let inv = frame.target_inverse();
        let raised: Vec<Jet> = (0..3).map(|a| sum((0..3).map(|b| inv[a * 3 + b].mul(&lower[b])))).collect();
        let norm_sq = sum((0..3).map(|a| raised[a].mul(&lower[a])));
        let point = frame.point().to_vec();
        let norm = match norm_sq.sqrt() {
            Ok(n) if norm_sq.value() > 0.0 => n,
            _ => return Err(Error::Degenerate { point }),
        };
        let scale = norm.recip().map_err(|_| Error::Degenerate { point: point.clone() })?;
        let normal: Vec<Jet> = raised.iter().map(|r| r.mul(&scale)).collect();

        let mut second = Vec::with_capacity(4);
        for i in 0..2 {
            let dxi = frame.covariant(&normal, i);
            for j in 0..2 {
                let s = sum((0..3).flat_map(|a| {
                    let (dxi, frame) = (&dxi, &frame);
                    (0..3).map(move |b| frame.target_metric(a, b).mul(&dxi[a]).mul(frame.dphi(b, j)))
                }));
                second.push(s.neg());
            }
        }
        let d = frame.domain();
        let mut shape = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                shape.push(sum((0..2).map(|k| d.inv(j, k).mul(&second[i * 2 + k]))));
            }
        }
        let mean = shape[0].add(&shape[3]).scale(0.5);
        Ok(Self { frame, normal, second, shape, mean })
    }

    pub fn frame(&self) -> &MapFrame {
        &self.frame
    }

    pub fn normal(&self) -> Vec<f64> {
        values(&self.normal)
    }

    pub fn second_fundamental_form(&self) -> Vec<f64> {
        values(&self.second)
    }

    /// `A_i^j` at `i*2 + j`, so `A(∂_i) = A_i^j ∂_j`.
    pub fn shape_operator(&self) -> Vec<f64> {
        values(&self.shape)
    }

    pub fn mean_curvature(&self) -> f64 {
        self.mean.value()
    }

    pub fn mean_curvature_jet(&self) -> &Jet {
        &self.mean
    }

    /// `|B|²_ḡ = trace(A²)`.
    pub fn b_norm_sq(&self) -> f64 {
        let a = self.shape_operator();
        a[0] * a[0] + 2.0 * a[1] * a[2] + a[3] * a[3]
    }

    /// `H ξ`.
    pub fn mean_curvature_vector(&self) -> Vec<f64> {
        self.normal().iter().map(|v| v * self.mean_curvature()).collect()
    }

    /// `A(v)` for coordinate components `v`.
    pub fn shape_apply(&self, v: &[f64]) -> Vec<f64> {
        let a = self.shape_operator();
        (0..2).map(|j| v[0] * a[j] + v[1] * a[2 + j]).collect()
    }

    fn push(&self, v: &[f64]) -> Vec<f64> {
        (0..3).map(|a| self.frame.dphi(a, 0).value() * v[0] + self.frame.dphi(a, 1).value() * v[1]).collect()
    }

    /// `2(Δ_ḡ H - H|B|²_ḡ) ξ - 2 dφ(2 A(grad_ḡ H) + grad_ḡ H²)`.
    pub fn chen_bitension(&self) -> Vec<f64> {
        let d = self.frame.domain();
        let h = self.mean_curvature();
        let normal_coef = 2.0 * (d.laplacian(&self.mean).value() - h * self.b_norm_sq());
        let grad = values(&d.gradient(&self.mean));
        let a_grad = self.shape_apply(&grad);
        let tangential = self.push(&[2.0 * a_grad[0] + 2.0 * h * grad[0], 2.0 * a_grad[1] + 2.0 * h * grad[1]]);
        self.normal().iter().zip(&tangential).map(|(n, t)| normal_coef * n - 2.0 * t).collect()
    }

    /// `∇_Y(Hξ) - (Y(H) ξ - H dφ(A Y))` for a tangent field `Y` carrying
    /// first derivatives.
    pub fn normal_derivative_residual(&self, y: &[Jet]) -> Vec<f64> {
        let eta: Vec<Jet> = self.normal.iter().map(|n| n.mul(&self.mean)).collect();
        let lhs = values(&self.frame.covariant_along(y, &eta));
        let yv = values(y);
        let yh = yv[0] * self.mean.d(0) + yv[1] * self.mean.d(1);
        let ay = self.push(&self.shape_apply(&yv));
        let h = self.mean_curvature();
        let n = self.normal();
        (0..3).map(|a| lhs[a] - (yh * n[a] - h * ay[a])).collect()
    }

    /// Residuals of
    /// `A(grad H) + ½ grad H² + 2H A(grad ln λ) = 0` and
    /// `ΔH - H|B|² + 2H(Δ ln λ + 2|grad ln λ|²) + 4 g(grad ln λ, grad H) = 0`
    /// with operators of `g = λ^{-2} ḡ` and `|B|² = λ² |B|²_ḡ`.
    pub fn r3_residual(&self, lambda_sq: &Jet) -> Result<R3Residual> {
        let point = self.frame.point().to_vec();
        let bad = || Error::NonPositiveFactor { point: point.clone(), value: lambda_sq.value() };
        let inv = lambda_sq.recip().map_err(|_| bad())?;
        let g = self.frame.domain().rescaled(&inv)?;
        let ln = lambda_sq.ln().map_err(|_| bad())?.scale(0.5);
        let h = self.mean_curvature();
        let grad_h = values(&g.gradient(&self.mean));
        let grad_ln = values(&g.gradient(&ln));
        let a_grad_h = self.shape_apply(&grad_h);
        let a_grad_ln = self.shape_apply(&grad_ln);
        let tangential = (0..2).map(|i| a_grad_h[i] + h * grad_h[i] + 2.0 * h * a_grad_ln[i]).collect();
        let lap_ln = g.laplacian(&ln).value();
        let normal = g.laplacian(&self.mean).value() - h * lambda_sq.value() * self.b_norm_sq()
            + 2.0 * h * (lap_ln + 2.0 * g.inner(&grad_ln, &grad_ln))
            + 4.0 * g.inner(&grad_ln, &grad_h);
        Ok(R3Residual { tangential, normal })
    }
}

/// `λ²` with `φ*h = λ² g`, read off as `trace_g(φ*h) / 2` after checking
/// conformality to relative tolerance `tol`.
pub fn conformal_factor_jet(sp: &SurfacePoint, g: &RiemannianMetric, tol: f64) -> Result<Jet> {
    let x = sp.frame.point();
    let gj = g.jets_at(x, MAX_ORDER)?;
    let induced = sp.frame.domain();
    let lambda_sq = sum((0..2).flat_map(|i| {
        let (gj, induced) = (&gj, induced);
        (0..2).map(move |j| gj.inv(i, j).mul(induced.g(i, j)))
    }))
    .scale(0.5);
    let l2 = lambda_sq.value();
    if !(l2 > 0.0) {
        return Err(Error::Degenerate { point: x.to_vec() });
    }
    let gv = gj.metric_values();
    let iv = induced.metric_values();
    let scale = iv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let deviation = iv.iter().zip(&gv).fold(0.0f64, |m, (a, b)| m.max((a - l2 * b).abs())) / scale;
    if deviation > tol {
        return Err(Error::NonConformal { point: x.to_vec(), deviation });
    }
    Ok(lambda_sq)
}

/// Bitension field of a surface over its induced metric, by the mean
/// curvature formula.
pub fn chen_bitension(map: &SmoothMap, h: &RiemannianMetric, x: &[f64]) -> Result<Vec<f64>> {
    Ok(SurfacePoint::new(map, h, x)?.chen_bitension())
}

/// Biharmonic surface system for the conformal immersion `φ: (U, g) -> (N, h)`.
pub fn r3_system_residual(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<R3Residual> {
    let sp = SurfacePoint::new(map, h, x)?;
    let lambda_sq = conformal_factor_jet(&sp, g, CONFORMAL_TOL)?;
    sp.r3_residual(&lambda_sq)
}

/// Same as [`r3_system_residual`] with `λ²` given as an expression in the
/// domain coordinates.
pub fn r3_system_residual_with(
    map: &SmoothMap,
    h: &RiemannianMetric,
    lambda_sq: &Expr,
    x: &[f64],
) -> Result<R3Residual> {
    let sp = SurfacePoint::new(map, h, x)?;
    let vars = Jet::seed_point_to_order(x, MAX_ORDER)?;
    let l2 = eval_components(std::slice::from_ref(lambda_sq), map.coords(), &vars, map.params())?.remove(0);
    sp.r3_residual(&l2)
}
