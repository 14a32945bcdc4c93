//! Product quadrature on the unit sphere: Gauss-Legendre in `cos(theta)`
//! times the uniform (trapezoidal) rule in `phi`.

use std::f64::consts::PI;

use crate::geometry::Direction;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereRule {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereRule {
    /// 256 x 512 nodes: resolves `exp(i k0 r cos(theta))` up to `r ~ 40`
    /// wavelengths to machine precision.
    fn default() -> Self {
        Self { n_theta: 256, n_phi: 512 }
    }
}

/// Precomputed nodes of a [`SphereRule`].
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    rule: SphereRule,
    nodes: Vec<(Direction, f64)>,
}

impl SphereQuadrature {
    pub fn new(rule: SphereRule) -> Self {
        let (u, wu) = gauss_legendre(rule.n_theta);
        let dphi = 2.0 * PI / rule.n_phi as f64;
        let mut nodes = Vec::with_capacity(rule.n_theta * rule.n_phi);
        for (&cos_t, &w) in u.iter().zip(&wu) {
            let theta = cos_t.clamp(-1.0, 1.0).acos();
            for j in 0..rule.n_phi {
                let phi = j as f64 * dphi;
                nodes.push((Direction::from_angles(theta, phi), w * dphi));
            }
        }
        Self { rule, nodes }
    }

    pub fn rule(&self) -> SphereRule {
        self.rule
    }

    pub fn nodes(&self) -> &[(Direction, f64)] {
        &self.nodes
    }

    /// Integral of a real function over the sphere, `d Omega` measure.
    pub fn integrate<F: Fn(&Direction) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|(d, w)| w * f(d)).sum()
    }

    pub fn integrate_complex<F: Fn(&Direction) -> num_complex::Complex64>(&self, f: F) -> num_complex::Complex64 {
        self.nodes.iter().map(|(d, w)| f(d) * *w).sum()
    }
}
