use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{EvalContext, Expr};
use crate::jet::{Jet, MAX_VARS};

use super::chart::ChartDomain;

/// Named real parameters shared by the expressions of one case.
pub type Params = BTreeMap<String, f64>;

/// Relative tolerance on `|g_ij - g_ji|` before a metric is rejected.
const SYMMETRY_TOL: f64 = 1e-12;

/// A Riemannian metric on a coordinate chart, given componentwise by
/// expressions in the chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannianMetric {
    coords: Vec<String>,
    components: Vec<Expr>,
    domain: ChartDomain,
    params: Params,
}

impl RiemannianMetric {
    /// `components` is the full `m x m` matrix in row-major order.
    pub fn new(coords: Vec<String>, components: Vec<Expr>, domain: ChartDomain, params: Params) -> Result<Self> {
        let m = coords.len();
        if m == 0 || m > MAX_VARS {
            return Err(Error::Dimension(format!("chart dimension {m} not in 1..={MAX_VARS}")));
        }
        if components.len() != m * m {
            return Err(Error::Dimension(format!(
                "{} metric components for a {m}-dimensional chart",
                components.len()
            )));
        }
        if domain.dim() != m {
            return Err(Error::Dimension(format!("{}-dimensional domain for {m} coordinates", domain.dim())));
        }
        Ok(Self { coords, components, domain, params })
    }

    pub fn diagonal(coords: Vec<String>, diagonal: Vec<Expr>, domain: ChartDomain, params: Params) -> Result<Self> {
        let m = coords.len();
        if diagonal.len() != m {
            return Err(Error::Dimension(format!("{} diagonal entries for {m} coordinates", diagonal.len())));
        }
        let mut components = vec![Expr::num(0.0); m * m];
        for (i, d) in diagonal.into_iter().enumerate() {
            components[i * m + i] = d;
        }
        Self::new(coords, components, domain, params)
    }

    /// `factor * (dx_1^2 + ... + dx_m^2)`.
    pub fn conformally_flat(coords: Vec<String>, factor: Expr, domain: ChartDomain, params: Params) -> Result<Self> {
        let m = coords.len();
        Self::diagonal(coords, vec![factor; m], domain, params)
    }

    pub fn euclidean(coords: Vec<String>, domain: ChartDomain) -> Result<Self> {
        Self::conformally_flat(coords, Expr::num(1.0), domain, Params::new())
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    /// Literal identity matrix, so Cartesian coordinates on flat space.
    pub fn is_euclidean(&self) -> bool {
        let m = self.dim();
        self.components.iter().enumerate().all(|(k, e)| {
            let want = if k / m == k % m { 1.0 } else { 0.0 };
            matches!(e, Expr::Const(c) if *c == want)
        })
    }

    /// `factor * g` with `factor` an expression in the same coordinates.
    pub fn scaled(&self, factor: &Expr) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| match c {
                Expr::Const(z) if *z == 0.0 => c.clone(),
                _ => factor.clone() * c.clone(),
            })
            .collect();
        Self { components, ..self.clone() }
    }

    pub fn with_params(mut self, params: Params) -> Self {
        self.params = params;
        self
    }

    /// Evaluates all components with the coordinates bound to `vars`.
    pub fn evaluate_on(&self, vars: &[Jet]) -> Result<Vec<Jet>> {
        let point: Vec<f64> = vars.iter().map(Jet::value).collect();
        let ctx = context(&self.coords, vars, &self.params)?;
        self.components
            .iter()
            .map(|c| c.evaluate(&ctx).map_err(|e| Error::eval(e, &point)))
            .collect()
    }

    pub fn values_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(x)?;
        let mut ctx = EvalContext::with_variables(0.0, self.coords.iter().map(String::as_str), x);
        ctx.bind_parameters(&self.params);
        self.components
            .iter()
            .map(|c| c.evaluate(&ctx).map_err(|e| Error::eval(e, x)))
            .collect()
    }

    /// Metric, inverse and Christoffel symbols at `x`, with the metric
    /// carried to `order`.
    pub fn jets_at(&self, x: &[f64], order: usize) -> Result<MetricJets> {
        self.domain.check(x)?;
        let vars = Jet::seed_point_to_order(x, order)?;
        MetricJets::from_components(self.evaluate_on(&vars)?, x)
    }
}

pub(crate) fn context(coords: &[String], vars: &[Jet], params: &Params) -> Result<EvalContext<Jet>> {
    let template = vars
        .first()
        .ok_or_else(|| Error::Dimension("no coordinates".into()))?
        .zero_like();
    let mut ctx = EvalContext::with_variables(template, coords.iter().map(String::as_str), vars);
    ctx.bind_parameters(params);
    Ok(ctx)
}

/// Local jets of a metric at one point: `g`, `g^{-1}` and
/// `Γ^k_ij` stored at `k*m*m + i*m + j`.
///
/// The inverse has the order of `g`; Christoffel symbols one less.
#[derive(Debug, Clone)]
pub struct MetricJets {
    dim: usize,
    point: Vec<f64>,
    g: Vec<Jet>,
    inv: Vec<Jet>,
    gamma: Vec<Jet>,
}

impl MetricJets {
    /// Requires symmetric, positive definite values and jets of order >= 1.
    pub fn from_components(g: Vec<Jet>, point: &[f64]) -> Result<Self> {
        let m = point.len();
        if g.len() != m * m {
            return Err(Error::Dimension(format!("{} components for dimension {m}", g.len())));
        }
        if g.iter().any(|j| j.order() == 0) {
            return Err(Error::Invalid("metric jets must carry first derivatives".into()));
        }
        let scale = g.iter().map(|j| j.value().abs()).fold(1.0, f64::max);
        let mut sym = g;
        for i in 0..m {
            for j in i + 1..m {
                let gap = (sym[i * m + j].value() - sym[j * m + i].value()).abs();
                if gap > SYMMETRY_TOL * scale || gap.is_nan() {
                    return Err(Error::NotSymmetric { point: point.to_vec(), i, j, gap });
                }
                let avg = sym[i * m + j].add(&sym[j * m + i]).scale(0.5);
                sym[i * m + j] = avg.clone();
                sym[j * m + i] = avg;
            }
        }
        let values: Vec<f64> = sym.iter().map(Jet::value).collect();
        if cholesky(&values, m).is_none() {
            return Err(Error::NotPositiveDefinite { point: point.to_vec() });
        }
        let inv = invert(&sym, m);
        let gamma = christoffel(&sym, &inv, m);
        Ok(Self { dim: m, point: point.to_vec(), g: sym, inv, gamma })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn g(&self, i: usize, j: usize) -> &Jet {
        &self.g[i * self.dim + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> &Jet {
        &self.inv[i * self.dim + j]
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn order(&self) -> usize {
        self.g[0].order()
    }

    pub fn metric_values(&self) -> Vec<f64> {
        self.g.iter().map(Jet::value).collect()
    }

    pub fn inverse_values(&self) -> Vec<f64> {
        self.inv.iter().map(Jet::value).collect()
    }

    pub fn christoffel_values(&self) -> Vec<f64> {
        self.gamma.iter().map(Jet::value).collect()
    }

    pub(crate) fn gamma_jets(&self) -> &[Jet] {
        &self.gamma
    }

    pub(crate) fn metric_jets(&self) -> &[Jet] {
        &self.g
    }

    /// `R^l_{kij}` at the base point, stored at `((l*m + k)*m + i)*m + j`,
    /// with `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l`.
    ///
    /// # Panics
    ///
    /// Panics when the metric jets have order below 2.
    pub fn curvature_values(&self) -> Vec<f64> {
        let m = self.dim;
        assert!(self.order() >= 2, "curvature needs second derivatives of the metric");
        let gv = self.christoffel_values();
        let gm = |k: usize, i: usize, j: usize| gv[(k * m + i) * m + j];
        let mut r = vec![0.0; m * m * m * m];
        for l in 0..m {
            for k in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let mut v = self.gamma(l, j, k).d(i) - self.gamma(l, i, k).d(j);
                        for p in 0..m {
                            v += gm(l, i, p) * gm(p, j, k) - gm(l, j, p) * gm(p, i, k);
                        }
                        r[((l * m + k) * m + i) * m + j] = v;
                    }
                }
            }
        }
        r
    }

    /// Sectional curvature of the plane spanned by `∂_i, ∂_j`.
    pub fn sectional_curvature(&self, i: usize, j: usize) -> f64 {
        let m = self.dim;
        let r = self.curvature_values();
        let g = self.metric_values();
        // <R(∂_i, ∂_j)∂_j, ∂_i>
        let num: f64 = (0..m).map(|l| r[((l * m + j) * m + i) * m + j] * g[l * m + i]).sum();
        let area = g[i * m + i] * g[j * m + j] - g[i * m + j] * g[i * m + j];
        num / area
    }

    /// Components of `grad f`, one order below `f`.
    pub fn gradient(&self, f: &Jet) -> Vec<Jet> {
        let m = self.dim;
        let df: Vec<Jet> = (0..m).map(|j| f.derivative(j)).collect();
        (0..m)
            .map(|i| {
                let mut acc = self.inv(i, 0).mul(&df[0]);
                for j in 1..m {
                    acc = acc.add(&self.inv(i, j).mul(&df[j]));
                }
                acc
            })
            .collect()
    }

    /// `Δf = g^{ij}(∂_i∂_j f - Γ^k_ij ∂_k f)`, two orders below `f`.
    pub fn laplacian(&self, f: &Jet) -> Jet {
        let m = self.dim;
        let df: Vec<Jet> = (0..m).map(|j| f.derivative(j)).collect();
        let mut acc: Option<Jet> = None;
        for i in 0..m {
            for j in 0..m {
                let mut hess = df[j].derivative(i);
                for (k, dk) in df.iter().enumerate() {
                    hess = hess.sub(&self.gamma(k, i, j).mul(dk));
                }
                let term = self.inv(i, j).mul(&hess);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
        }
        acc.expect("dimension at least one")
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let m = self.dim;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += self.g(i, j).value() * u[i] * v[j];
            }
        }
        s
    }

    /// `sqrt(det g)` at the base point.
    pub fn volume_density(&self) -> f64 {
        let l = cholesky(&self.metric_values(), self.dim).expect("checked on construction");
        (0..self.dim).map(|i| l[i * self.dim + i]).product()
    }

    /// Jets of `factor * g`; `factor` must be positive at the base point.
    pub fn rescaled(&self, factor: &Jet) -> Result<Self> {
        if factor.value() <= 0.0 || !factor.value().is_finite() {
            return Err(Error::NonPositiveFactor { point: self.point.clone(), value: factor.value() });
        }
        Self::from_components(self.g.iter().map(|c| factor.mul(c)).collect(), &self.point)
    }
}

/// Lower-triangular Cholesky factor, or `None` if not positive definite.
pub fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Some(l)
}

/// Gauss-Jordan inverse without pivoting; valid for positive definite input.
pub(crate) fn invert(a: &[Jet], m: usize) -> Vec<Jet> {
    let mut work = a.to_vec();
    let mut inv: Vec<Jet> = (0..m * m)
        .map(|k| a[0].lift(if k / m == k % m { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..m {
        let pivot = work[col * m + col].recip().expect("positive definite pivot");
        for k in 0..m {
            work[col * m + k] = work[col * m + k].mul(&pivot);
            inv[col * m + k] = inv[col * m + k].mul(&pivot);
        }
        for row in 0..m {
            if row == col {
                continue;
            }
            let f = work[row * m + col].clone();
            if f.taylor_coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            for k in 0..m {
                work[row * m + k] = work[row * m + k].sub(&f.mul(&work[col * m + k]));
                inv[row * m + k] = inv[row * m + k].sub(&f.mul(&inv[col * m + k]));
            }
        }
    }
    inv
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il - ∂_l g_ij)`.
fn christoffel(g: &[Jet], inv: &[Jet], m: usize) -> Vec<Jet> {
    // dg[(l*m + i)*m + j] = ∂_l g_ij
    let dg: Vec<Jet> = (0..m * m * m)
        .map(|idx| g[idx % (m * m)].derivative(idx / (m * m)))
        .collect();
    let d = |l: usize, i: usize, j: usize| &dg[(l * m + i) * m + j];
    // first kind: Γ_{l,ij}
    let mut first = Vec::with_capacity(m * m * m);
    for l in 0..m {
        for i in 0..m {
            for j in 0..m {
                first.push(d(i, j, l).add(d(j, i, l)).sub(d(l, i, j)).scale(0.5));
            }
        }
    }
    let mut out = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let mut acc = inv[k * m].mul(&first[i * m + j]);
                for l in 1..m {
                    acc = acc.add(&inv[k * m + l].mul(&first[(l * m + i) * m + j]));
                }
                out.push(acc);
            }
        }
    }
    out
}
