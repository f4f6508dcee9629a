//! Gauss-Legendre quadrature.

use crate::num::Real;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<T: Real, F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = T::half() * (b - a);
        let mid = T::half() * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| T::lit(w) * f(mid + half * T::lit(x)))
            .sum::<T>()
            * half
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for n in 1..12 {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let got = gl.integrate(0.0_f64, 2.0, |x| x.powi(deg as i32));
                let want = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-12 * want.max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn weights_sum_to_two() {
        let gl = GaussLegendre::new(24);
        assert!((gl.integrate(-1.0_f64, 1.0, |_| 1.0) - 2.0).abs() < 1e-13);
        assert_eq!(gl.len(), 24);
    }

    #[test]
    fn gaussian_integral() {
        let gl = GaussLegendre::new(48);
        let got = gl.integrate(-6.0_f64, 6.0, |x| (-x * x).exp());
        assert!((got - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
