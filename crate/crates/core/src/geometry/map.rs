use crate::error::{Error, Result};
use crate::expr::{EvalContext, Expr};
use crate::jet::{Composer, Jet, MAX_ORDER};

use super::chart::ChartDomain;
use super::metric::{context, invert, MetricJets, Params, RiemannianMetric};

/// A smooth map between coordinate charts, one expression per target
/// coordinate in the source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    coords: Vec<String>,
    components: Vec<Expr>,
    domain: ChartDomain,
    params: Params,
}

impl SmoothMap {
    pub fn new(coords: Vec<String>, components: Vec<Expr>, domain: ChartDomain, params: Params) -> Result<Self> {
        if domain.dim() != coords.len() {
            return Err(Error::Dimension(format!(
                "{}-dimensional domain for {} coordinates",
                domain.dim(),
                coords.len()
            )));
        }
        if components.is_empty() {
            return Err(Error::Dimension("map without components".into()));
        }
        Ok(Self { coords, components, domain, params })
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn source_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn jets_at(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.domain.check(x)?;
        let vars = Jet::seed_point_to_order(x, order)?;
        eval_components(&self.components, &self.coords, &vars, &self.params)
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

    /// `φ + t V` componentwise.
    pub fn perturbed(&self, field: &[Expr], t: f64) -> Result<Self> {
        if field.len() != self.components.len() {
            return Err(Error::Dimension("variation field has the wrong number of components".into()));
        }
        let components = self
            .components
            .iter()
            .zip(field)
            .map(|(c, v)| c.clone() + Expr::num(t) * v.clone())
            .collect();
        Ok(Self { components, ..self.clone() })
    }
}

pub(crate) fn eval_components(exprs: &[Expr], coords: &[String], vars: &[Jet], params: &Params) -> Result<Vec<Jet>> {
    let point: Vec<f64> = vars.iter().map(Jet::value).collect();
    let ctx = context(coords, vars, params)?;
    exprs
        .iter()
        .map(|c| c.evaluate(&ctx).map_err(|e| Error::eval(e, &point)))
        .collect()
}

/// Local data of a map `φ: (M, g) -> (N, h)` at one point: jets of `φ`,
/// the domain metric, and the target connection and metric pulled back
/// along `φ`.
///
/// Index conventions: `dphi[a*m + i] = ∂_i φ^a`; Christoffel symbols of
/// `h` along `φ` at `c*n*n + a*n + b`.
#[derive(Debug, Clone)]
pub struct MapFrame {
    domain: MetricJets,
    phi: Vec<Jet>,
    dphi: Vec<Jet>,
    target_point: Vec<f64>,
    target_metric: Vec<Jet>,
    target_gamma: Vec<Jet>,
    target_curvature: Vec<f64>,
}

impl MapFrame {
    pub fn new(map: &SmoothMap, g: &RiemannianMetric, h: &RiemannianMetric, x: &[f64]) -> Result<Self> {
        if g.dim() != map.source_dim() {
            return Err(Error::Dimension(format!(
                "map from dimension {} with a metric of dimension {}",
                map.source_dim(),
                g.dim()
            )));
        }
        let domain = g.jets_at(x, MAX_ORDER)?;
        let phi = map.jets_at(x, MAX_ORDER)?;
        Self::from_parts(domain, phi, h)
    }

    /// Assembles a frame from precomputed domain jets and jets of `φ` over
    /// the same point.
    pub fn from_parts(domain: MetricJets, phi: Vec<Jet>, h: &RiemannianMetric) -> Result<Self> {
        let m = domain.dim();
        let n = phi.len();
        if h.dim() != n {
            return Err(Error::Dimension(format!("map into dimension {n} with a target metric of dimension {}", h.dim())));
        }
        if phi.iter().any(|p| p.num_vars() != m) {
            return Err(Error::Dimension("map jets over the wrong number of variables".into()));
        }
        let target_point: Vec<f64> = phi.iter().map(Jet::value).collect();
        h.domain().check(&target_point)?;
        let ys = Jet::seed_point_to_order(&target_point, 3)?;
        let hj = MetricJets::from_components(h.evaluate_on(&ys)?, &target_point)?;
        let target_curvature = hj.curvature_values();
        let composer = Composer::new(&phi, 3)?;
        let target_metric = hj.metric_jets().iter().map(|j| composer.apply(j)).collect();
        let target_gamma = hj.gamma_jets().iter().map(|j| composer.apply(j)).collect();
        let mut dphi = Vec::with_capacity(n * m);
        for p in &phi {
            for i in 0..m {
                dphi.push(p.derivative(i));
            }
        }
        Ok(Self { domain, phi, dphi, target_point, target_metric, target_gamma, target_curvature })
    }

    /// Frame over the induced metric `φ*h`; fails where `φ` is not an
    /// immersion.
    pub fn induced(map: &SmoothMap, h: &RiemannianMetric, x: &[f64]) -> Result<Self> {
        let phi = map.jets_at(x, MAX_ORDER)?;
        let m = map.source_dim();
        let n = phi.len();
        if h.dim() != n {
            return Err(Error::Dimension(format!("map into dimension {n} with a target metric of dimension {}", h.dim())));
        }
        let target: Vec<f64> = phi.iter().map(Jet::value).collect();
        h.domain().check(&target)?;
        let hp = h.evaluate_on(&phi)?;
        let dphi: Vec<Jet> = phi.iter().flat_map(|p| (0..m).map(move |i| p.derivative(i))).collect();
        let mut pull = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut acc: Option<Jet> = None;
                for a in 0..n {
                    for b in 0..n {
                        let t = hp[a * n + b].mul(&dphi[a * m + i]).mul(&dphi[b * m + j]);
                        acc = Some(match acc {
                            None => t,
                            Some(s) => s.add(&t),
                        });
                    }
                }
                pull.push(acc.expect("nonempty"));
            }
        }
        let domain = match MetricJets::from_components(pull, x) {
            Err(Error::NotPositiveDefinite { point }) => return Err(Error::Degenerate { point }),
            other => other?,
        };
        Self::from_parts(domain, phi, h)
    }

    /// Same map and target over a different domain metric at the same point.
    pub fn with_domain(&self, domain: MetricJets) -> Result<Self> {
        if domain.dim() != self.m() || domain.point() != self.domain.point() {
            return Err(Error::Dimension("replacement domain jets at a different point".into()));
        }
        Ok(Self { domain, ..self.clone() })
    }

    pub fn m(&self) -> usize {
        self.domain.dim()
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn point(&self) -> &[f64] {
        self.domain.point()
    }

    pub fn target_point(&self) -> &[f64] {
        &self.target_point
    }

    pub fn domain(&self) -> &MetricJets {
        &self.domain
    }

    pub fn phi(&self) -> &[Jet] {
        &self.phi
    }

    pub fn dphi(&self, a: usize, i: usize) -> &Jet {
        &self.dphi[a * self.m() + i]
    }

    fn target_gamma(&self, c: usize, a: usize, b: usize) -> &Jet {
        let n = self.n();
        &self.target_gamma[(c * n + a) * n + b]
    }

    /// `h_ab ∘ φ`, order three.
    pub fn target_metric(&self, a: usize, b: usize) -> &Jet {
        &self.target_metric[a * self.n() + b]
    }

    /// `h^ab ∘ φ` row-major, order three.
    pub fn target_inverse(&self) -> Vec<Jet> {
        invert(&self.target_metric, self.n())
    }

    pub fn target_metric_values(&self) -> Vec<f64> {
        self.target_metric.iter().map(Jet::value).collect()
    }

    /// `R^l_{kij}` of the target at `φ(x)`, laid out as in
    /// [`MetricJets::curvature_values`].
    pub fn target_curvature(&self) -> &[f64] {
        &self.target_curvature
    }

    pub fn target_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += self.target_metric[a * n + b].value() * u[a] * v[b];
            }
        }
        s
    }

    pub fn target_norm(&self, u: &[f64]) -> f64 {
        self.target_inner(u, u).max(0.0).sqrt()
    }

    /// Pullback metric `φ*h` at the base point, row-major.
    pub fn pullback(&self) -> Vec<f64> {
        let (m, n) = (self.m(), self.n());
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += self.target_metric[a * n + b].value() * self.dphi(a, i).value() * self.dphi(b, j).value();
                    }
                }
                out[i * m + j] = s;
            }
        }
        out
    }

    /// `dφ(v)` for a tangent field `v` on the domain.
    pub fn push_forward(&self, v: &[Jet]) -> Vec<Jet> {
        let m = self.m();
        (0..self.n())
            .map(|a| {
                let mut acc = self.dphi(a, 0).mul(&v[0]);
                for i in 1..m {
                    acc = acc.add(&self.dphi(a, i).mul(&v[i]));
                }
                acc
            })
            .collect()
    }

    /// `(∇_{∂_i} X)^c = ∂_i X^c + Γ^c_ab ∂_i φ^a X^b`, one order below `X`
    /// and at most order two.
    pub fn covariant(&self, x: &[Jet], i: usize) -> Vec<Jet> {
        let n = self.n();
        (0..n)
            .map(|c| {
                let mut acc = x[c].derivative(i);
                for a in 0..n {
                    let da = self.dphi(a, i);
                    for b in 0..n {
                        acc = acc.add(&self.target_gamma(c, a, b).mul(da).mul(&x[b]));
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇_Y X` for a tangent field `Y` on the domain.
    pub fn covariant_along(&self, y: &[Jet], x: &[Jet]) -> Vec<Jet> {
        let mut out: Option<Vec<Jet>> = None;
        for (i, yi) in y.iter().enumerate() {
            let d = self.covariant(x, i);
            let term: Vec<Jet> = d.iter().map(|c| yi.mul(c)).collect();
            out = Some(match out {
                None => term,
                Some(acc) => acc.iter().zip(&term).map(|(a, b)| a.add(b)).collect(),
            });
        }
        out.expect("dimension at least one")
    }

    /// `Σ g^{ij}(∇_i ∇_j X - Γ^k_ij ∇_k X)`, two orders below `X`.
    pub fn rough_laplacian(&self, x: &[Jet]) -> Vec<Jet> {
        let (m, n) = (self.m(), self.n());
        let first: Vec<Vec<Jet>> = (0..m).map(|j| self.covariant(x, j)).collect();
        let mut acc: Option<Vec<Jet>> = None;
        for i in 0..m {
            for j in 0..m {
                let gij = self.domain.inv(i, j);
                let mut second = self.covariant(&first[j], i);
                for (k, fk) in first.iter().enumerate() {
                    let gk = self.domain.gamma(k, i, j);
                    for c in 0..n {
                        second[c] = second[c].sub(&gk.mul(&fk[c]));
                    }
                }
                let term: Vec<Jet> = second.iter().map(|s| gij.mul(s)).collect();
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.iter().zip(&term).map(|(p, q)| p.add(q)).collect(),
                });
            }
        }
        acc.expect("dimension at least one")
    }

    /// `Σ g^{ij} R(dφ ∂_i, X) dφ ∂_j` at the base point.
    pub fn curvature_trace(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m(), self.n());
        let r = &self.target_curvature;
        let mut out = vec![0.0; n];
        for i in 0..m {
            for j in 0..m {
                let gij = self.domain.inv(i, j).value();
                if gij == 0.0 {
                    continue;
                }
                for l in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        let bk = self.dphi(k, j).value();
                        if bk == 0.0 {
                            continue;
                        }
                        for p in 0..n {
                            let ap = self.dphi(p, i).value();
                            for q in 0..n {
                                s += r[((l * n + k) * n + p) * n + q] * ap * x[q] * bk;
                            }
                        }
                    }
                    out[l] += gij * s;
                }
            }
        }
        out
    }

    /// Jacobi operator `J(X) = -(Σ ∇²X - Σ R(dφ, X)dφ)` at the base point.
    /// `X` must carry second derivatives.
    pub fn jacobi(&self, x: &[Jet]) -> Vec<f64> {
        let values: Vec<f64> = x.iter().map(Jet::value).collect();
        let lap = self.rough_laplacian(x);
        let curv = self.curvature_trace(&values);
        lap.iter().zip(&curv).map(|(l, c)| -(l.value() - c)).collect()
    }

    /// Tension field `τ(φ) = trace ∇dφ`, valid to order two.
    pub fn tension(&self) -> Vec<Jet> {
        let (m, n) = (self.m(), self.n());
        let d = &self.domain;
        let mut tau: Vec<Option<Jet>> = vec![None; n];
        for i in 0..m {
            for j in i..m {
                let w = if i == j { 1.0 } else { 2.0 };
                let gij = d.inv(i, j).scale(w);
                for (c, slot) in tau.iter_mut().enumerate() {
                    let mut hess = self.dphi(c, j).derivative(i);
                    for k in 0..m {
                        hess = hess.sub(&d.gamma(k, i, j).mul(self.dphi(c, k)));
                    }
                    for a in 0..n {
                        let mut inner = self.target_gamma(c, a, 0).mul(self.dphi(0, j));
                        for b in 1..n {
                            inner = inner.add(&self.target_gamma(c, a, b).mul(self.dphi(b, j)));
                        }
                        hess = hess.add(&self.dphi(a, i).mul(&inner));
                    }
                    let term = gij.mul(&hess);
                    *slot = Some(match slot.take() {
                        None => term,
                        Some(acc) => acc.add(&term),
                    });
                }
            }
        }
        tau.into_iter().map(|t| t.expect("dimension at least one")).collect()
    }

    /// Bitension field `τ₂(φ) = -J(τ(φ))` at the base point.
    pub fn bitension(&self) -> Vec<f64> {
        self.jacobi(&self.tension()).iter().map(|v| -v).collect()
    }
}

/// A section along a map, one expression per target coordinate in the
/// source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldAlongMap {
    coords: Vec<String>,
    components: Vec<Expr>,
    params: Params,
}

impl FieldAlongMap {
    pub fn new(coords: Vec<String>, components: Vec<Expr>, params: Params) -> Self {
        Self { coords, components, params }
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn jets_at(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        let vars = Jet::seed_point_to_order(x, order)?;
        eval_components(&self.components, &self.coords, &vars, &self.params)
    }
}
