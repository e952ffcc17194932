//! Legendre trial basis on `[-l, l]` and the `Field` coefficient type.
//!
//! Trial functions are `P_k(x/l)` for `k < dim`; differentiation acts in
//! coefficient space (exactly), and all node evaluations are precomputed
//! tables so that derivative evaluations at quadrature nodes are matrix
//! products.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use nalgebra::{DMatrix, DVector};

/// A spatial function V in the trial basis: `V(x) = sum_k coeffs[k] P_k(x/l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub coeffs: DVector<f64>,
}

impl Field {
    pub fn zeros(dim: usize) -> Field {
        Field {
            coeffs: DVector::zeros(dim),
        }
    }

    pub fn constant(c: f64, dim: usize) -> Field {
        let mut f = Field::zeros(dim);
        f.coeffs[0] = c;
        f
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scale(&self, a: f64) -> Field {
        Field {
            coeffs: &self.coeffs * a,
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        Field {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field {
            coeffs: &self.coeffs - &other.coeffs,
        }
    }
}

/// Evaluate a Legendre series `sum c[k] P_k(t)` by the three-term recurrence.
pub fn legval(c: &[f64], t: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let mut acc = c[0];
    if c.len() == 1 {
        return acc;
    }
    let mut p_prev = 1.0; // P_0
    let mut p_cur = t; // P_1
    acc += c[1] * p_cur;
    for (k, &ck) in c.iter().enumerate().skip(2) {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * t * p_cur - (kf - 1.0) * p_prev) / kf;
        p_prev = p_cur;
        p_cur = p_next;
        acc += ck * p_next;
    }
    acc
}

/// Coefficients of the derivative of a Legendre series (with respect to t).
pub fn legder(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return Vec::new();
    }
    let deg = n - 1;
    let mut work = c.to_vec();
    let mut der = vec![0.0; deg];
    for j in (3..=deg).rev() {
        der[j - 1] = (2.0 * j as f64 - 1.0) * work[j];
        work[j - 2] += work[j];
    }
    if deg > 1 {
        der[1] = 3.0 * work[2];
    }
    der[0] = work[1];
    der
}

/// The trial basis together with its quadrature rule and precomputed
/// node-evaluation tables for derivatives `0..=max_deriv`.
#[derive(Clone, Debug)]
pub struct Basis {
    pub ell: f64,
    pub dim: usize,
    pub quad: QuadratureRule,
    pub max_deriv: usize,
    /// `tables[d]` is (n_nodes x dim): d-th x-derivative of basis k at node i.
    tables: Vec<DMatrix<f64>>,
    /// `dmats[d]` is (dim x dim): column k holds the Legendre coefficients
    /// (in t) of the d-th t-derivative of P_k, zero-padded.
    dmats: Vec<DMatrix<f64>>,
}

impl Basis {
    pub fn new(ell: f64, dim: usize, quad: QuadratureRule, max_deriv: usize) -> Result<Basis> {
        if dim < 2 {
            return Err(Error::Input("basis_dim must be at least 2".into()));
        }
        if (quad.ell - ell).abs() > 1e-12 * ell {
            return Err(Error::Input(
                "quadrature rule interval does not match the basis".into(),
            ));
        }
        // derivative coefficient matrices in t
        let mut dmats = Vec::with_capacity(max_deriv + 1);
        let mut cur = DMatrix::<f64>::identity(dim, dim);
        dmats.push(cur.clone());
        for _ in 1..=max_deriv {
            let mut next = DMatrix::<f64>::zeros(dim, dim);
            for k in 0..dim {
                let col: Vec<f64> = cur.column(k).iter().copied().collect();
                let d = legder(&col);
                for (i, &v) in d.iter().enumerate() {
                    next[(i, k)] = v;
                }
            }
            cur = next.clone();
            dmats.push(next);
        }
        // node tables with the 1/l^d chain-rule factor
        let n_nodes = quad.len();
        let mut tables = Vec::with_capacity(max_deriv + 1);
        for (d, dm) in dmats.iter().enumerate() {
            let scale = ell.powi(-(d as i32));
            let mut t = DMatrix::<f64>::zeros(n_nodes, dim);
            for (i, &x) in quad.nodes.iter().enumerate() {
                let ti = x / ell;
                for k in 0..dim {
                    let col: Vec<f64> = dm.column(k).iter().copied().collect();
                    t[(i, k)] = legval(&col, ti) * scale;
                }
            }
            tables.push(t);
        }
        Ok(Basis {
            ell,
            dim,
            quad,
            max_deriv,
            tables,
            dmats,
        })
    }

    /// Node-evaluation table of the d-th derivative (n_nodes x dim).
    pub fn table(&self, d: usize) -> &DMatrix<f64> {
        assert!(d <= self.max_deriv, "derivative order exceeds table depth");
        &self.tables[d]
    }

    /// Values of the d-th derivative of V at all quadrature nodes.
    pub fn node_values(&self, v: &Field, d: usize) -> DVector<f64> {
        self.table(d) * &v.coeffs
    }

    /// Evaluate the d-th derivative of V at an arbitrary point.
    pub fn eval(&self, v: &Field, x: f64, d: usize) -> f64 {
        assert!(d <= self.max_deriv, "derivative order exceeds table depth");
        let c = &self.dmats[d] * &v.coeffs;
        legval(c.as_slice(), x / self.ell) * self.ell.powi(-(d as i32))
    }

    /// Gram matrix `int w(x) (d_r-th deriv of P_i)(d_c-th deriv of P_j) dx`
    /// for a pointwise weight given at the quadrature nodes.
    pub fn weighted_gram(&self, d_row: usize, d_col: usize, weight: &[f64]) -> DMatrix<f64> {
        assert_eq!(weight.len(), self.quad.len());
        let er = self.table(d_row);
        let ec = self.table(d_col);
        let mut scaled = ec.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= weight[i] * self.quad.weights[i];
        }
        let g = er.transpose() * scaled;
        // symmetrize when the construction is symmetric
        if d_row == d_col {
            (&g + g.transpose()) * 0.5
        } else {
            g
        }
    }

    /// The field x (coefficient on P_1 is l since P_1(x/l) = x/l).
    pub fn field_x(&self) -> Field {
        let mut f = Field::zeros(self.dim);
        f.coeffs[1] = self.ell;
        f
    }

    /// Weighted least-squares projection of node values onto the basis:
    /// minimizes `int w (V - vals)^2` over the trial space.
    pub fn project_weighted(&self, weight: &[f64], vals: &DVector<f64>) -> Result<Field> {
        let gram = self.weighted_gram(0, 0, weight);
        let mut wv = vals.clone();
        for i in 0..wv.len() {
            wv[i] *= weight[i] * self.quad.weights[i];
        }
        let rhs = self.table(0).transpose() * wv;
        let chol = nalgebra::Cholesky::new(gram)
            .ok_or_else(|| Error::Input("projection Gram matrix not positive definite".into()))?;
        Ok(Field {
            coeffs: chol.solve(&rhs),
        })
    }
}

/// Standard-normal sample via Box-Muller (keeps the dependency footprint to
/// the bare `rand` core).
pub fn standard_normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A random Field with independent standard-normal coefficients on degrees
/// `0..=degree` (all randomness is caller-seeded).
pub fn random_field(dim: usize, degree: usize, rng: &mut impl rand::Rng) -> Field {
    let mut f = Field::zeros(dim);
    for k in 0..=degree.min(dim - 1) {
        f.coeffs[k] = standard_normal(rng);
    }
    f
}
