//! Chebyshev series on the reference interval `[-1, 1]`.
//!
//! The profile solver represents smooth even functions as truncated series
//! `sum_k c_k T_k(t)`; this module supplies Clenshaw evaluation and exact
//! coefficient-space differentiation.

/// Evaluate `sum_k c[k] T_k(t)` by the Clenshaw recurrence.
pub fn eval(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    // Clenshaw for Chebyshev: f = b1 - t*b2 with the halved first term folded in.
    b1 - t * b2
}

/// Coefficients of the derivative series: if `f = sum c[k] T_k`, returns `d`
/// with `f' = sum d[k] T_k` (length `c.len() - 1`, or empty).
pub fn derive(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return Vec::new();
    }
    let mut d = vec![0.0; n - 1];
    d[n - 2] = 2.0 * (n as f64 - 1.0) * c[n - 1];
    if n >= 3 {
        d[n - 3] = 2.0 * (n as f64 - 2.0) * c[n - 2];
    }
    for k in (0..n.saturating_sub(3)).rev() {
        d[k] = d[k + 2] + 2.0 * (k as f64 + 1.0) * c[k + 1];
    }
    d[0] *= 0.5;
    d
}

/// Positive roots of `T_m` (the Chebyshev-Gauss points in `(0, 1)`),
/// ascending. `m` must be even so that no root sits at `t = 0`.
pub fn positive_gauss_nodes(m: usize) -> Vec<f64> {
    assert!(m % 2 == 0, "need an even Chebyshev degree");
    let mut out: Vec<f64> = (1..=m)
        .map(|i| (std::f64::consts::PI * (2.0 * i as f64 - 1.0) / (2.0 * m as f64)).cos())
        .filter(|&t| t > 0.0)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Expand an even series `sum_j e[j] T_{2j}(t)` into a full series over all
/// `T_k` (odd coefficients zero).
pub fn even_to_full(e: &[f64]) -> Vec<f64> {
    if e.is_empty() {
        return Vec::new();
    }
    let mut full = vec![0.0; 2 * e.len() - 1];
    for (j, &v) in e.iter().enumerate() {
        full[2 * j] = v;
    }
    full
}
