//! Composite Gauss–Legendre rules with precomputed absolute nodes.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// `panels` equal sub-intervals of `[a, b]`, each carrying an `order`-point
/// Gauss–Legendre rule. Nodes and weights are stored in absolute form.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, order: usize, panels: usize) -> Self {
        let order = NonZeroUsize::new(order.max(1)).unwrap();
        let panels = panels.max(1);
        let rule = GaussLegendre::new(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(order.get() * panels);
        let mut weights = Vec::with_capacity(order.get() * panels);
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    /// A one-point rule at `x` with unit weight.
    pub fn point(x: f64) -> Self {
        Self {
            nodes: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = CompositeRule::new(-1.0, 2.0, 3, 4);
        assert_eq!(r.len(), 12);
        let v = r.integrate(|x| x.powi(5) - x * x);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) / 3.0;
        assert!((v - exact).abs() < 1e-12);
        assert!((r.weights.iter().sum::<f64>() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mass_converges() {
        let r = CompositeRule::new(-8.0, 8.0, 16, 32);
        let v = r.integrate(|x| (-0.5 * x * x).exp()) / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - 1.0).abs() < 1e-14);
    }
}
