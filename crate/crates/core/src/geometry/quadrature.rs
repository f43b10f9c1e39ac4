/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact for polynomials
/// of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product rule on a box: every node with its weight.
pub fn box_rule(region: &[(f64, f64)], nodes_per_axis: usize) -> Vec<(Vec<f64>, f64)> {
    let (xs, ws) = gauss_legendre(nodes_per_axis);
    let dim = region.len();
    let total = nodes_per_axis.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut point = Vec::with_capacity(dim);
        let mut weight = 1.0;
        for &(a, b) in region {
            let k = idx % nodes_per_axis;
            idx /= nodes_per_axis;
            let half = 0.5 * (b - a);
            point.push(a + half * (xs[k] + 1.0));
            weight *= half * ws[k];
        }
        out.push((point, weight));
    }
    out
}
