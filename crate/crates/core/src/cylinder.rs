//! Conformal cylinders `φ(θ, z) = (R, θ, z)` over `g = λ^{-2}(R²dθ² + dz²)`
//! into Euclidean space in cylindrical coordinates. These are biharmonic
//! exactly when `(λ²)'' = λ²/R²`, so
//! `λ² = (C2 e^{s z/R} - C1 C2^{-1} R² e^{-s z/R}) / 2` with first integral
//! `(λ²)'² = (λ²)²/R² + C1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartDomain, Params, RiemannianMetric, SmoothMap};

/// Grid resolution used to certify `λ² > 0` on the parameter range.
pub const POSITIVITY_GRID: usize = 256;

/// Domain coordinates `(θ, z)` and target coordinates `(ρ, ϑ, ζ)`.
pub const DOMAIN_COORDS: [&str; 2] = ["theta", "z"];
pub const TARGET_COORDS: [&str; 3] = ["rho", "vartheta", "zeta"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    pub radius: f64,
    pub c1: f64,
    pub c2: f64,
    /// `+1` or `-1`.
    pub sign: f64,
    pub z_range: (f64, f64),
}

impl CylinderParams {
    pub fn new(radius: f64, c1: f64, c2: f64, sign: f64, z_range: (f64, f64)) -> Result<Self> {
        let p = Self { radius, c1, c2, sign, z_range };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {} must be positive", self.radius)));
        }
        if self.c2 == 0.0 || !self.c2.is_finite() || !self.c1.is_finite() {
            return Err(Error::InvalidParameter(format!("C2 must be finite and nonzero, got {}", self.c2)));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {}", self.sign)));
        }
        let (z0, z1) = self.z_range;
        if !(z0 < z1) || !z0.is_finite() || !z1.is_finite() {
            return Err(Error::InvalidParameter(format!("empty z range [{z0}, {z1}]")));
        }
        Ok(())
    }

    /// `(A, B)` with `λ² = A e^{z/R} + B e^{-z/R}`.
    pub fn exponential_coefficients(&self) -> (f64, f64) {
        let grow = self.c2 / 2.0;
        let decay = -self.c1 * self.radius * self.radius / (2.0 * self.c2);
        if self.sign > 0.0 {
            (grow, decay)
        } else {
            (decay, grow)
        }
    }

    /// Parameters reproducing the solution through `(y0, y0')` at `z0`.
    pub fn fitted(radius: f64, y0: f64, y0prime: f64, z_range: (f64, f64)) -> Result<Self> {
        let z0 = z_range.0;
        let a = (y0 + radius * y0prime) / 2.0 * (-z0 / radius).exp();
        let b = (y0 - radius * y0prime) / 2.0 * (z0 / radius).exp();
        let c1 = -4.0 * a * b / (radius * radius);
        let (c2, sign) = if a != 0.0 { (2.0 * a, 1.0) } else { (2.0 * b, -1.0) };
        Self::new(radius, c1, c2, sign, z_range)
    }

    /// Rejects parameters with `λ² ≤ 0` somewhere on the range, reporting
    /// the first crossing.
    pub fn check_positive(&self) -> Result<()> {
        let (z0, z1) = self.z_range;
        let mut prev = z0;
        for k in 0..=POSITIVITY_GRID {
            let z = z0 + (z1 - z0) * k as f64 / POSITIVITY_GRID as f64;
            let value = lambda_sq_closed_form(self, z);
            if !(value > 0.0) {
                let z = if k == 0 { z } else { self.crossing(prev, z) };
                return Err(Error::NonPositiveLambda { z, value });
            }
            prev = z;
        }
        Ok(())
    }

    /// Bisects for the zero of `λ²` between a positive and a non-positive
    /// sample.
    fn crossing(&self, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if lambda_sq_closed_form(self, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn params(&self) -> Params {
        Params::from([
            ("R".to_string(), self.radius),
            ("C1".to_string(), self.c1),
            ("C2".to_string(), self.c2),
            ("s".to_string(), self.sign),
        ])
    }
}

pub fn lambda_sq_closed_form(p: &CylinderParams, z: f64) -> f64 {
    let e = (p.sign * z / p.radius).exp();
    (p.c2 * e - p.c1 / p.c2 * p.radius * p.radius / e) / 2.0
}

/// `λ²` as an expression in `z` over the parameters `R, C1, C2, s`.
pub fn lambda_sq_expr() -> Expr {
    Expr::parse("(C2*exp(s*z/R) - C1/C2*R^2*exp(-s*z/R))/2").expect("well formed")
}

/// RK4 trajectory of `y'' = y/R²` against the closed form through the same
/// initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub fitted: CylinderParams,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub closed: Vec<f64>,
    /// `y'² - y²/R²`, constant along exact solutions.
    pub first_integral: f64,
    pub max_deviation: f64,
    pub max_drift: f64,
}

impl OdeSolution {
    pub fn drift_at(&self, k: usize) -> f64 {
        let r = self.fitted.radius;
        self.dy[k] * self.dy[k] - self.y[k] * self.y[k] / (r * r) - self.first_integral
    }
}

pub const MIN_STEPS: usize = 16;

pub fn solve_ode(radius: f64, z_range: (f64, f64), y0: f64, y0prime: f64, steps: usize) -> Result<OdeSolution> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!("at least {MIN_STEPS} steps required, got {steps}")));
    }
    let fitted = CylinderParams::fitted(radius, y0, y0prime, z_range)?;
    let (z0, z1) = z_range;
    let h = (z1 - z0) / steps as f64;
    let k2 = 1.0 / (radius * radius);
    let f = |y: f64, dy: f64| (dy, k2 * y);
    let first_integral = y0prime * y0prime - y0 * y0 * k2;
    let (mut z, mut y, mut dy) = (vec![z0], vec![y0], vec![y0prime]);
    if !(y0 > 0.0) {
        return Err(Error::NonPositiveLambda { z: z0, value: y0 });
    }
    for k in 1..=steps {
        let (a, b) = (y[k - 1], dy[k - 1]);
        let (p1, q1) = f(a, b);
        let (p2, q2) = f(a + 0.5 * h * p1, b + 0.5 * h * q1);
        let (p3, q3) = f(a + 0.5 * h * p2, b + 0.5 * h * q2);
        let (p4, q4) = f(a + h * p3, b + h * q3);
        let yn = a + h / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
        let dyn_ = b + h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        let zn = z0 + h * k as f64;
        if !(yn > 0.0) {
            return Err(Error::NonPositiveLambda { z: zn, value: yn });
        }
        z.push(zn);
        y.push(yn);
        dy.push(dyn_);
    }
    let closed: Vec<f64> = z.iter().map(|&t| lambda_sq_closed_form(&fitted, t)).collect();
    let max_deviation = y.iter().zip(&closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut sol = OdeSolution { fitted, z, y, dy, closed, first_integral, max_deviation, max_drift: 0.0 };
    sol.max_drift = (0..sol.z.len()).fold(0.0f64, |m, k| m.max(sol.drift_at(k).abs()));
    Ok(sol)
}

/// One member of the family as catalog-ready expressions.
#[derive(Debug, Clone)]
pub struct FamilyCase {
    pub params: CylinderParams,
    pub map: SmoothMap,
    pub g: RiemannianMetric,
    pub h: RiemannianMetric,
    pub lambda_sq: Expr,
}

pub fn build_family_case(p: &CylinderParams) -> Result<FamilyCase> {
    p.validate()?;
    p.check_positive()?;
    let params = p.params();
    let coords: Vec<String> = DOMAIN_COORDS.iter().map(|s| s.to_string()).collect();
    let domain = ChartDomain::new(vec![(0.0, 2.0 * PI), p.z_range])?;
    let map = SmoothMap::new(
        coords.clone(),
        vec![Expr::ident("R"), Expr::ident("theta"), Expr::ident("z")],
        domain.clone(),
        params.clone(),
    )?;
    let lambda_sq = lambda_sq_expr();
    let inv = Expr::num(1.0) / lambda_sq.clone();
    let g = RiemannianMetric::diagonal(
        coords,
        vec![Expr::ident("R") * Expr::ident("R") * inv.clone(), inv],
        domain,
        params,
    )?;
    let target = ChartDomain::unbounded(3).excluding(0, 0.0)?;
    let h = RiemannianMetric::diagonal(
        TARGET_COORDS.iter().map(|s| s.to_string()).collect(),
        vec![Expr::num(1.0), Expr::ident("rho") * Expr::ident("rho"), Expr::num(1.0)],
        target,
        Params::new(),
    )?;
    Ok(FamilyCase { params: *p, map, g, h, lambda_sq })
}

/// Admissible members of `R ∈ {0.5, 1, 2}`, `C1 ∈ {-1, 0, 1}`,
/// `C2 ∈ {1, 2}`, both signs, on `z ∈ [0, 1]`.
pub fn parameter_grid() -> Vec<CylinderParams> {
    let mut out = Vec::new();
    for radius in [0.5, 1.0, 2.0] {
        for c1 in [-1.0, 0.0, 1.0] {
            for c2 in [1.0, 2.0] {
                for sign in [1.0, -1.0] {
                    let p = CylinderParams { radius, c1, c2, sign, z_range: (0.0, 1.0) };
                    if p.check_positive().is_ok() {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
