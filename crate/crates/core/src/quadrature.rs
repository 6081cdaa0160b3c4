//! Gauss-Legendre rules on finite intervals.

use serde::{Deserialize, Serialize};

/// Quadrature rule identifier carried by grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    GaussLegendre,
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term Legendre recurrence, seeded with
    /// the Tricomi approximation of each root.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (pn, dpn) = legendre_with_derivative(n, x);
                deriv = dpn;
                let dx = pn / dpn;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    deriv = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterate over `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is the highest exact degree for 5 nodes
        let got = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((got - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2, 7, 64, 512] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.mapped(0.0, 3.0).map(|(_, w)| w).sum();
            assert!((s - 3.0).abs() < 1e-12, "n = {n}: {s}");
            assert!(rule.mapped(0.0, 3.0).all(|(_, w)| w > 0.0));
        }
    }

    #[test]
    fn gaussian_integral() {
        let rule = GaussLegendre::new(128);
        let got = rule.integrate(-10.0, 10.0, |x| (-x * x).exp());
        assert!((got - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
