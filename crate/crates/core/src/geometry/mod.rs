//! Riemannian geometry on coordinate charts: metrics, maps between charts,
//! and the tension, Jacobi and bitension operators, all evaluated pointwise
//! from Taylor jets.

mod chart;
mod map;
mod metric;
mod ops;
pub mod quadrature;

pub use chart::{ChartDomain, Hyperplane, EXCLUSION_MARGIN, SAMPLE_SHRINK};
pub(crate) use map::eval_components;
pub use map::{FieldAlongMap, MapFrame, SmoothMap};
pub use metric::{cholesky, MetricJets, Params, RiemannianMetric};
pub use ops::{
    bienergy, bitension_field, bitension_pairing, christoffel_symbols, conformal_jets, conformality,
    curvature_apply, first_variation_check, gradient, jacobi_field, laplacian, pullback_metric, riemann_tensor,
    tension_field, variation_slope, FirstVariation,
};

/// Relative size of a discrepancy: `max|a - b| / max(1, |a|_∞, |b|_∞)`.
pub fn relative_discrepancy(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    diff / scale
}

/// Evaluation context binding the coordinates of `g` to `vars` and its
/// parameters.
pub fn metric_context(
    g: &RiemannianMetric,
    vars: &[crate::jet::Jet],
) -> crate::Result<crate::expr::EvalContext<crate::jet::Jet>> {
    metric::context(g.coords(), vars, g.params())
}
