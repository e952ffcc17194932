//! Gauss-Legendre quadrature on `[-l, l]`.
//!
//! All weighted integrals in the norm tables and Galerkin forms reduce to
//! polynomials times the smooth profile, so a single Gauss rule of moderate
//! size integrates everything to near machine precision.

use crate::error::{Error, Result};
use crate::profile::Profile;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Nodes in (-l, l), ascending.
    pub nodes: Vec<f64>,
    /// Positive weights summing to 2l.
    pub weights: Vec<f64>,
    /// Polynomials up to this degree are integrated exactly (2n - 1).
    pub exact_degree: usize,
    /// Interval half-width.
    pub ell: f64,
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root (descending order)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x) by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
        if n % 2 == 1 && i == n / 2 {
            nodes[i] = 0.0;
        }
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to the profile's support [-l, l].
pub fn build_quadrature(p: &Profile, n: usize) -> Result<QuadratureRule> {
    build_quadrature_on(p.ell, n)
}

pub fn build_quadrature_on(ell: f64, n: usize) -> Result<QuadratureRule> {
    if n < 8 {
        return Err(Error::Input("quadrature size must be at least 8".into()));
    }
    let (t, w) = gauss_legendre_reference(n);
    Ok(QuadratureRule {
        nodes: t.iter().map(|&ti| ti * ell).collect(),
        weights: w.iter().map(|&wi| wi * ell).collect(),
        exact_degree: 2 * n - 1,
        ell,
    })
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate a pointwise function over [-l, l].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrate from tabulated node values.
    pub fn integrate_nodes(&self, vals: &[f64]) -> f64 {
        vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}
