//! The weighted Sobolev scale and its inequality probes.
//!
//! The k-th norm uses degenerate boundary weights,
//!
//! ```text
//! |V|_k^2 = sum_{j=0}^{k} int (l^2 - x^2)^{j+2} (d^j V)^2 dx,
//! ```
//!
//! with semi-norms `[V]_k` the single-`j = k` terms; the metric norms are
//! `|V|_U^2 = int U V^2` and the Hessian form
//! `|V|_{U,2}^2 = (1/5)|V|_U^2 + int Phi (V')^2 + int U^2 (V'')^2`.

use crate::basis::{Basis, Field};
use crate::error::{Error, Result};
use crate::profile::{PhiField, Profile};
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct NormTable {
    pub k_max: usize,
    /// Semi-norm matrices: [V]_j^2 = c' S_j c.
    pub s: Vec<DMatrix<f64>>,
    /// Norm matrices: |V|_k^2 = c' N_k c = sum_{j<=k} c' S_j c.
    pub n: Vec<DMatrix<f64>>,
    /// |V|_U^2 = c' M c.
    pub m: DMatrix<f64>,
    /// |V|_{U,2}^2 = c' A c.
    pub a: DMatrix<f64>,
}

/// Assemble the U-mass matrix and the Hessian quadratic form on the basis.
pub fn assemble_metric_forms(p: &Profile, basis: &Basis) -> (DMatrix<f64>, DMatrix<f64>) {
    let nq = basis.quad.len();
    let phi = PhiField::new(p);
    let mut w_u = vec![0.0; nq];
    let mut w_phi = vec![0.0; nq];
    let mut w_u2 = vec![0.0; nq];
    for (i, &x) in basis.quad.nodes.iter().enumerate() {
        let u = p.eval(x, 0);
        w_u[i] = u;
        w_phi[i] = phi.value(x);
        w_u2[i] = u * u;
    }
    let m = basis.weighted_gram(0, 0, &w_u);
    let a = &m * 0.2 + basis.weighted_gram(1, 1, &w_phi) + basis.weighted_gram(2, 2, &w_u2);
    let a = (&a + a.transpose()) * 0.5;
    (m, a)
}

pub fn build_norm_table(p: &Profile, basis: &Basis, k_max: usize) -> Result<NormTable> {
    if k_max > basis.max_deriv {
        return Err(Error::Input(format!(
            "k_max {k_max} exceeds the basis derivative-table depth {}",
            basis.max_deriv
        )));
    }
    let ell2 = basis.ell * basis.ell;
    let mut s = Vec::with_capacity(k_max + 1);
    let mut n: Vec<DMatrix<f64>> = Vec::with_capacity(k_max + 1);
    for j in 0..=k_max {
        let w: Vec<f64> = basis
            .quad
            .nodes
            .iter()
            .map(|&x| (ell2 - x * x).powi(j as i32 + 2))
            .collect();
        let sj = basis.weighted_gram(j, j, &w);
        let nj = if j == 0 {
            sj.clone()
        } else {
            &n[j - 1] + &sj
        };
        s.push(sj);
        n.push(nj);
    }
    let (m, a) = assemble_metric_forms(p, basis);
    Ok(NormTable { k_max, s, n, m, a })
}

impl NormTable {
    pub fn norm_k(&self, v: &Field, k: usize) -> f64 {
        assert!(k <= self.k_max, "norm index exceeds k_max");
        quad_form(&self.n[k], v).max(0.0).sqrt()
    }

    pub fn seminorm_k(&self, v: &Field, k: usize) -> f64 {
        assert!(k <= self.k_max, "semi-norm index exceeds k_max");
        quad_form(&self.s[k], v).max(0.0).sqrt()
    }

    pub fn norm_u(&self, v: &Field) -> f64 {
        quad_form(&self.m, v).max(0.0).sqrt()
    }

    pub fn norm_u2(&self, v: &Field) -> f64 {
        quad_form(&self.a, v).max(0.0).sqrt()
    }

    pub fn inner_u(&self, v: &Field, w: &Field) -> f64 {
        (v.coeffs.transpose() * &self.m * &w.coeffs)[(0, 0)]
    }
}

fn quad_form(m: &DMatrix<f64>, v: &Field) -> f64 {
    (v.coeffs.transpose() * m * &v.coeffs)[(0, 0)]
}

/// Result of the Hardy probe: `lhs = int (l^2-x^2)^beta V^2` against the
/// two right-hand integrals with gamma = 0.
#[derive(Clone, Copy, Debug)]
pub struct HardyProbe {
    pub lhs: f64,
    /// int V^2 (the gamma = 0 term).
    pub rhs_zeroth: f64,
    /// int (l^2-x^2)^{beta+2} (V')^2.
    pub rhs_deriv: f64,
}

impl HardyProbe {
    pub fn ratio(&self) -> f64 {
        self.lhs / (self.rhs_zeroth + self.rhs_deriv)
    }
}

/// Hardy-type inequality probe near the degenerate boundary. For
/// non-integer beta the weight is evaluated pointwise and the quadrature is
/// no longer exact (report only).
pub fn hardy_probe(basis: &Basis, beta: f64, v: &Field) -> Result<HardyProbe> {
    if beta <= -1.0 {
        return Err(Error::Input(
            "hardy probe requires beta > -1 without boundary vanishing".into(),
        ));
    }
    let ell2 = basis.ell * basis.ell;
    let v0 = basis.node_values(v, 0);
    let v1 = basis.node_values(v, 1);
    let mut lhs = 0.0;
    let mut rhs_zeroth = 0.0;
    let mut rhs_deriv = 0.0;
    for (i, &x) in basis.quad.nodes.iter().enumerate() {
        let w = basis.quad.weights[i];
        let r = ell2 - x * x;
        lhs += w * r.powf(beta) * v0[i] * v0[i];
        rhs_zeroth += w * v0[i] * v0[i];
        rhs_deriv += w * r.powf(beta + 2.0) * v1[i] * v1[i];
    }
    Ok(HardyProbe {
        lhs,
        rhs_zeroth,
        rhs_deriv,
    })
}

/// Interpolation-inequality probe: `[V]_k` against
/// `eps^{-1} [V]_{k-m} + eps [V]_{k+n}`.
#[derive(Clone, Copy, Debug)]
pub struct InterpProbe {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn interp_probe(
    t: &NormTable,
    v: &Field,
    k: usize,
    m: usize,
    n: usize,
    eps: f64,
) -> Result<InterpProbe> {
    if m > k || k + n > t.k_max {
        return Err(Error::Input("interp probe indices out of range".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Input("eps must lie in (0, 1]".into()));
    }
    Ok(InterpProbe {
        lhs: t.seminorm_k(v, k),
        rhs: t.seminorm_k(v, k - m) / eps + eps * t.seminorm_k(v, k + n),
    })
}

/// C^0-embedding probe: sup over a dense grid of
/// `|(l^2-x^2)^n d^d V|` against `|V|_{2d+4-2n}`.
#[derive(Clone, Copy, Debug)]
pub struct EmbedProbe {
    pub sup_weighted: f64,
    pub bound: f64,
    pub k: usize,
}

pub fn c0_embed_probe(t: &NormTable, basis: &Basis, v: &Field, n: usize, d: usize) -> Result<EmbedProbe> {
    let k_signed = 2 * d as i64 + 4 - 2 * n as i64;
    if k_signed < 0 || k_signed as usize > t.k_max {
        return Err(Error::Input("embedding index k out of range".into()));
    }
    let k = k_signed as usize;
    let ell = basis.ell;
    let grid = 1024;
    let mut sup = 0.0f64;
    for i in 0..=grid {
        let x = -ell + 2.0 * ell * i as f64 / grid as f64;
        let w = (ell * ell - x * x).powi(n as i32);
        sup = sup.max((w * basis.eval(v, x, d)).abs());
    }
    Ok(EmbedProbe {
        sup_weighted: sup,
        bound: t.norm_k(v, k),
        k,
    })
}

/// Exact value of `int_{-l}^{l} (l^2 - x^2)^a x^{2c} dx` for integer a, c,
/// via the Beta-function closed form. Used as an independent oracle.
pub fn poly_weight_integral(a: u32, c: u32, ell: f64) -> f64 {
    // int = l^{2a+2c+1} * B(c + 1/2, a + 1)
    //     = l^{2a+2c+1} * Gamma(c+1/2) Gamma(a+1) / Gamma(a+c+3/2)
    // with Gamma(c+1/2) = (2c)! sqrt(pi) / (4^c c!).
    let mut num = std::f64::consts::PI.sqrt(); // Gamma(1/2)
    for i in 0..c {
        num *= i as f64 + 0.5;
    }
    let mut afact = 1.0;
    for i in 1..=a {
        afact *= i as f64;
    }
    let mut den = std::f64::consts::PI.sqrt();
    for i in 0..(a + c + 1) {
        den *= i as f64 + 0.5;
    }
    ell.powi((2 * a + 2 * c + 1) as i32) * num * afact / den
}
