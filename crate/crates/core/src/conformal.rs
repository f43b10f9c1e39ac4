//! Conformal changes `ḡ = F^{-2} g` of the domain metric: the transformation
//! laws for tension, Jacobi operator and bitension, and the biharmonicity
//! criterion for conformal immersions.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{MapFrame, MetricJets, RiemannianMetric, SmoothMap};
use crate::jet::{Jet, MAX_ORDER};

/// Tolerance on `|τ(φ, g)|` below which a map counts as harmonic.
pub const HARMONIC_TOL: f64 = 1e-8;

/// `F^{-2} g` as a metric with composed component expressions.
pub fn conformal_metric(g: &RiemannianMetric, factor: &Expr) -> RiemannianMetric {
    let weight = Expr::binary(crate::expr::BinaryOp::Pow, factor.clone(), Expr::num(-2.0));
    g.scaled(&weight)
}

/// `F` evaluated as a jet at `x` in the coordinates of `g`; must be positive.
pub fn factor_jet(g: &RiemannianMetric, factor: &Expr, x: &[f64]) -> Result<Jet> {
    let vars = Jet::seed_point_to_order(x, MAX_ORDER)?;
    let ctx = crate::geometry::metric_context(g, &vars)?;
    let f = factor.evaluate(&ctx).map_err(|e| Error::Eval { source: e, point: x.to_vec() })?;
    if !(f.value() > 0.0) || !f.value().is_finite() {
        return Err(Error::NonPositiveFactor { point: x.to_vec(), value: f.value() });
    }
    Ok(f)
}

/// Checks `F > 0` at every point.
pub fn check_factor_positive(g: &RiemannianMetric, factor: &Expr, points: &[Vec<f64>]) -> Result<()> {
    points.iter().try_for_each(|x| factor_jet(g, factor, x).map(|_| ()))
}

/// `ln F` and its `g`-derivatives at one point.
#[derive(Debug, Clone)]
pub struct FactorJets {
    pub value: f64,
    /// `grad ln F`, valid to order three.
    pub grad_ln: Vec<Jet>,
    pub laplacian_ln: f64,
    pub grad_ln_sq: f64,
}

impl FactorJets {
    pub fn new(domain: &MetricJets, factor: &Jet) -> Result<Self> {
        let ln = factor.ln().map_err(|_| Error::NonPositiveFactor {
            point: domain.point().to_vec(),
            value: factor.value(),
        })?;
        let grad_ln = domain.gradient(&ln);
        let laplacian_ln = domain.laplacian(&ln).value();
        let gv: Vec<f64> = grad_ln.iter().map(Jet::value).collect();
        let grad_ln_sq = domain.inner(&gv, &gv);
        Ok(Self { value: factor.value(), grad_ln, laplacian_ln, grad_ln_sq })
    }

    /// The same data for `1/F`: `ln` and its derivatives change sign,
    /// `|grad ln|²` does not.
    pub fn reciprocal(&self) -> Self {
        Self {
            value: 1.0 / self.value,
            grad_ln: self.grad_ln.iter().map(Jet::neg).collect(),
            laplacian_ln: -self.laplacian_ln,
            grad_ln_sq: self.grad_ln_sq,
        }
    }
}

fn combine(terms: &[(f64, &[f64])], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += c * x;
        }
    }
    out
}

fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

/// A map at one point seen from both `g` and `ḡ = F^{-2} g`.
#[derive(Debug, Clone)]
pub struct ConformalPoint {
    frame: MapFrame,
    barred: MapFrame,
    factor: FactorJets,
}

impl ConformalPoint {
    pub fn new(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, factor: &Expr, x: &[f64]) -> Result<Self> {
        let frame = MapFrame::new(map, g, h, x)?;
        let f = factor_jet(g, factor, x)?;
        Self::from_frame(frame, &f)
    }

    pub fn from_frame(frame: MapFrame, factor: &Jet) -> Result<Self> {
        let factor_jets = FactorJets::new(frame.domain(), factor)?;
        let weight = factor.powi(-2).map_err(|_| Error::NonPositiveFactor {
            point: frame.point().to_vec(),
            value: factor.value(),
        })?;
        let barred = frame.with_domain(frame.domain().rescaled(&weight)?)?;
        Ok(Self { frame, barred, factor: factor_jets })
    }

    pub fn frame(&self) -> &MapFrame {
        &self.frame
    }

    /// The frame over `ḡ`.
    pub fn barred(&self) -> &MapFrame {
        &self.barred
    }

    pub fn factor(&self) -> &FactorJets {
        &self.factor
    }

    fn m(&self) -> f64 {
        self.frame.m() as f64
    }

    /// `dφ(grad ln F)`, valid to order three.
    pub fn dphi_grad_ln(&self) -> Vec<Jet> {
        self.frame.push_forward(&self.factor.grad_ln)
    }

    pub fn tension_direct(&self) -> Vec<f64> {
        values(&self.barred.tension())
    }

    /// `F²{τ(φ,g) - (m-2) dφ(grad ln F)}`.
    pub fn tension_rhs(&self) -> Vec<f64> {
        let f2 = self.factor.value.powi(2);
        let tau = values(&self.frame.tension());
        let y = values(&self.dphi_grad_ln());
        combine(&[(f2, &tau), (-f2 * (self.m() - 2.0), &y)], self.frame.n())
    }

    pub fn jacobi_direct(&self, x: &[Jet]) -> Vec<f64> {
        self.barred.jacobi(x)
    }

    /// `F² J_g(X) + F²(m-2) ∇_{grad ln F} X`.
    pub fn jacobi_rhs(&self, x: &[Jet]) -> Vec<f64> {
        let f2 = self.factor.value.powi(2);
        let j = self.frame.jacobi(x);
        let d = values(&self.frame.covariant_along(&self.factor.grad_ln, x));
        combine(&[(f2, &j), (f2 * (self.m() - 2.0), &d)], self.frame.n())
    }

    pub fn bitension_direct(&self) -> Vec<f64> {
        self.barred.bitension()
    }

    /// The general transformation law of the bitension field, all
    /// operators with respect to `g`.
    pub fn bitension_rhs(&self) -> Vec<f64> {
        let m = self.m();
        let fl = &self.factor;
        let f4 = fl.value.powi(4);
        let tau = self.frame.tension();
        let y = self.dphi_grad_ln();
        let tau2 = self.frame.bitension();
        let jy = self.frame.jacobi(&y);
        let c = fl.laplacian_ln - (m - 4.0) * fl.grad_ln_sq;
        let d_tau = values(&self.frame.covariant_along(&fl.grad_ln, &tau));
        let d_y = values(&self.frame.covariant_along(&fl.grad_ln, &y));
        let tau = values(&tau);
        let y = values(&y);
        combine(
            &[
                (f4, &tau2),
                (f4 * (m - 2.0), &jy),
                (f4 * 2.0 * c, &tau),
                (-f4 * (m - 6.0), &d_tau),
                (-f4 * 2.0 * (m - 2.0) * c, &y),
                (f4 * (m - 2.0) * (m - 6.0), &d_y),
            ],
            self.frame.n(),
        )
    }

    /// Two-dimensional form `F⁴{τ₂ + 2(Δ ln F + 2|grad ln F|²)τ + 4∇_{grad ln F}τ}`.
    pub fn bitension_rhs_2d(&self) -> Result<Vec<f64>> {
        if self.frame.m() != 2 {
            return Err(Error::Dimension(format!("two-dimensional law used with m = {}", self.frame.m())));
        }
        let fl = &self.factor;
        let f4 = fl.value.powi(4);
        let tau = self.frame.tension();
        let tau2 = self.frame.bitension();
        let d_tau = values(&self.frame.covariant_along(&fl.grad_ln, &tau));
        let tau = values(&tau);
        Ok(combine(
            &[(f4, &tau2), (f4 * 2.0 * (fl.laplacian_ln + 2.0 * fl.grad_ln_sq), &tau), (f4 * 4.0, &d_tau)],
            self.frame.n(),
        ))
    }

    /// For `φ` harmonic on `(M, g)` and `m ≠ 2`: vanishes exactly when `φ`
    /// is biharmonic on `(M, ḡ)`.
    pub fn harmonic_biharmonic_condition(&self) -> Result<Vec<f64>> {
        if self.frame.m() == 2 {
            return Err(Error::Dimension("the harmonic criterion requires m != 2".into()));
        }
        let tau = values(&self.frame.tension());
        let norm = self.frame.target_norm(&tau);
        if norm > HARMONIC_TOL {
            return Err(Error::NotHarmonic { point: self.frame.point().to_vec(), norm });
        }
        let m = self.m();
        let fl = &self.factor;
        let y = self.dphi_grad_ln();
        let jy = self.frame.jacobi(&y);
        let d_y = values(&self.frame.covariant_along(&fl.grad_ln, &y));
        let c = fl.laplacian_ln - (m - 4.0) * fl.grad_ln_sq;
        let y = values(&y);
        Ok(combine(&[(1.0, &jy), (m - 6.0, &d_y), (-2.0 * c, &y)], self.frame.n()))
    }

    /// For a conformal immersion with `φ*h = λ² g`, where `F = λ^{-1}`:
    /// `λ⁴ τ₂(φ, ḡ)` minus the `g`-side expression in `η = τ(φ, ḡ)/m`.
    /// Equals `τ₂(φ, g)`, so it vanishes exactly when `φ` is biharmonic.
    pub fn immersion_residual(&self) -> Vec<f64> {
        let m = self.m();
        let lam = self.factor.reciprocal();
        let l2 = lam.value.powi(2);
        let eta: Vec<Jet> = self.barred.tension().iter().map(|t| t.scale(1.0 / m)).collect();
        let y = self.frame.push_forward(&lam.grad_ln);
        let jy = self.frame.jacobi(&y);
        let d_eta = values(&self.frame.covariant_along(&lam.grad_ln, &eta));
        let lhs = self.barred.bitension();
        let eta = values(&eta);
        combine(
            &[
                (l2 * l2, &lhs),
                (m - 2.0, &jy),
                (2.0 * m * l2 * (lam.laplacian_ln + 2.0 * lam.grad_ln_sq), &eta),
                (-m * (m - 6.0) * l2, &d_eta),
            ],
            self.frame.n(),
        )
    }

    /// Two-dimensional form: `λ²τ₂(φ, ḡ) + 4(Δ ln λ + 2|grad ln λ|²)η + 8∇_{grad ln λ}η`.
    pub fn immersion_residual_2d(&self) -> Result<Vec<f64>> {
        if self.frame.m() != 2 {
            return Err(Error::Dimension(format!("two-dimensional law used with m = {}", self.frame.m())));
        }
        let lam = self.factor.reciprocal();
        let l2 = lam.value.powi(2);
        let eta: Vec<Jet> = self.barred.tension().iter().map(|t| t.scale(0.5)).collect();
        let d_eta = values(&self.frame.covariant_along(&lam.grad_ln, &eta));
        let lhs = self.barred.bitension();
        let eta = values(&eta);
        Ok(combine(
            &[(l2, &lhs), (4.0 * (lam.laplacian_ln + 2.0 * lam.grad_ln_sq), &eta), (8.0, &d_eta)],
            self.frame.n(),
        ))
    }

    /// `τ(φ, g) - (m λ² η + (2 - m) dφ(grad ln λ))` for `F = λ^{-1}`.
    pub fn immersion_tension_residual(&self) -> Vec<f64> {
        let m = self.m();
        let lam = self.factor.reciprocal();
        let l2 = lam.value.powi(2);
        let eta: Vec<f64> = self.tension_direct().iter().map(|t| t / m).collect();
        let y = values(&self.frame.push_forward(&lam.grad_ln));
        let tau = values(&self.frame.tension());
        combine(&[(1.0, &tau), (-m * l2, &eta), (m - 2.0, &y)], self.frame.n())
    }
}

/// Conformal immersion data at `x`: builds the point with `F = λ^{-1}`
/// from an expression for `λ²`, after checking `φ*h = λ² g` to `tol`
/// relative to `|g|`.
pub fn immersion_point(
    map: &SmoothMap,
    g: &RiemannianMetric,
    h: &RiemannianMetric,
    lambda_sq: &Expr,
    x: &[f64],
    tol: f64,
) -> Result<ConformalPoint> {
    let frame = MapFrame::new(map, g, h, x)?;
    let l2 = factor_jet(g, lambda_sq, x)?;
    let pull = frame.pullback();
    let gv = frame.domain().metric_values();
    let scale = gv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let deviation = pull
        .iter()
        .zip(&gv)
        .fold(0.0f64, |a, (p, g)| a.max((p - l2.value() * g).abs()))
        / scale;
    if !(deviation < tol) {
        return Err(Error::NonConformal { point: x.to_vec(), deviation });
    }
    let f = l2.powf(-0.5).map_err(|_| Error::NonPositiveFactor { point: x.to_vec(), value: l2.value() })?;
    ConformalPoint::from_frame(frame, &f)
}

/// Residual of the Jacobi product rule
/// `J(fX) - (f J(X) - (Δf) X - 2∇_{grad f} X)` at the frame's point.
pub fn jacobi_product_rule_residual(frame: &MapFrame, f: &Jet, x: &[Jet]) -> Vec<f64> {
    let fx: Vec<Jet> = x.iter().map(|c| f.mul(c)).collect();
    let lhs = frame.jacobi(&fx);
    let jx = frame.jacobi(x);
    let lap = frame.domain().laplacian(f).value();
    let grad = frame.domain().gradient(f);
    let d = values(&frame.covariant_along(&grad, x));
    let xv = values(x);
    let rhs = combine(&[(f.value(), &jx), (-lap, &xv), (-2.0, &d)], frame.n());
    lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect()
}
