//! The linearized Hessian operator `L` in Galerkin form.
//!
//! `L` is assembled from its symmetric quadratic form
//!
//! ```text
//! (V, L W)_U = (1/5) int U V W + int Phi V' W' + int U^2 V'' W'',
//! ```
//!
//! which guarantees discrete symmetry and coercivity; the non-symmetric
//! strong form
//!
//! ```text
//! L V = U V'''' + 4 U' V''' + (6 U'' - U^3) V'' + (4/5) x V' + V/5
//! ```
//!
//! is kept only for pointwise cross-validation. The generalized eigenproblem
//! `A v = lambda M v` is solved by a Cholesky congruence of the mass matrix
//! (so conditioning of `M` is handled by construction) followed by a dense
//! symmetric eigensolve.

use crate::basis::{Basis, Field};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::spaces::{assemble_metric_forms, NormTable};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub struct OperatorForms {
    pub basis_dim: usize,
    /// Mass matrix of (.,.)_U.
    pub m: DMatrix<f64>,
    /// Stiffness matrix of (.,.)_{U,2} = (., L .)_U.
    pub a: DMatrix<f64>,
    m_chol: Cholesky<f64, Dyn>,
}

pub fn assemble_forms(p: &Profile, basis: &Basis) -> Result<OperatorForms> {
    let (m, a) = assemble_metric_forms(p, basis);
    let m_chol = Cholesky::new(m.clone()).ok_or_else(|| {
        Error::Input("mass matrix is not positive definite (quadrature too coarse?)".into())
    })?;
    Ok(OperatorForms {
        basis_dim: basis.dim,
        m,
        a,
        m_chol,
    })
}

impl OperatorForms {
    /// Galerkin action of L: the Field with coefficients M^{-1} A c.
    pub fn apply_l(&self, v: &Field) -> Field {
        Field {
            coeffs: self.m_chol.solve(&(&self.a * &v.coeffs)),
        }
    }

    pub fn inner_u(&self, v: &Field, w: &Field) -> f64 {
        (v.coeffs.transpose() * &self.m * &w.coeffs)[(0, 0)]
    }

    pub fn norm_u(&self, v: &Field) -> f64 {
        self.inner_u(v, v).max(0.0).sqrt()
    }

    pub fn inner_u2(&self, v: &Field, w: &Field) -> f64 {
        (v.coeffs.transpose() * &self.a * &w.coeffs)[(0, 0)]
    }

    pub fn norm_u2(&self, v: &Field) -> f64 {
        self.inner_u2(v, v).max(0.0).sqrt()
    }

    /// Solve M y = r.
    pub fn mass_solve(&self, r: &DVector<f64>) -> DVector<f64> {
        self.m_chol.solve(r)
    }
}

/// Pointwise strong form of L applied to a trial Field.
pub fn apply_l_pointwise(p: &Profile, basis: &Basis, v: &Field, x: f64) -> Result<f64> {
    if x.abs() > p.ell * (1.0 + 1e-12) {
        return Err(Error::Input(format!(
            "x = {x} lies outside the support [-{0}, {0}]",
            p.ell
        )));
    }
    let u = p.eval(x, 0);
    let u1 = p.eval(x, 1);
    let u2 = p.eval(x, 2);
    let v1 = basis.eval(v, x, 1);
    let v2 = basis.eval(v, x, 2);
    let v3 = basis.eval(v, x, 3);
    let v4 = basis.eval(v, x, 4);
    let v0 = basis.eval(v, x, 0);
    Ok(u * v4 + 4.0 * u1 * v3 + (6.0 * u2 - u * u * u) * v2 + 0.8 * x * v1 + 0.2 * v0)
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending generalized eigenvalues of A v = lambda M v.
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal eigenfields.
    pub eigenfields: Vec<Field>,
    /// Relative residuals ||A v - lambda M v|| / ||A v||.
    pub residuals: Vec<f64>,
}

/// The m smallest eigenpairs of the generalized problem A v = lambda M v.
pub fn compute_spectrum(f: &OperatorForms, m: usize) -> Result<SpectrumResult> {
    if m > f.basis_dim {
        return Err(Error::Input("requested more eigenpairs than basis_dim".into()));
    }
    let l = f.m_chol.l();
    // B = L^{-1} A L^{-T}, symmetric positive definite congruence of A
    let x = l
        .solve_lower_triangular(&f.a)
        .ok_or_else(|| Error::Input("singular Cholesky factor".into()))?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Input("singular Cholesky factor".into()))?;
    let b = (&y + y.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..f.basis_dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenfields = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for &idx in order.iter().take(m) {
        let lambda = eig.eigenvalues[idx];
        let yvec: DVector<f64> = eig.eigenvectors.column(idx).into();
        let v = lt
            .solve_upper_triangular(&yvec)
            .ok_or_else(|| Error::Input("singular Cholesky factor".into()))?;
        let av = &f.a * &v;
        let mv = &f.m * &v;
        let res = (&av - lambda * &mv).norm() / av.norm().max(f64::MIN_POSITIVE);
        eigenvalues.push(lambda);
        eigenfields.push(Field { coeffs: v });
        residuals.push(res);
    }
    Ok(SpectrumResult {
        eigenvalues,
        eigenfields,
        residuals,
    })
}

/// Elliptic-equivalence probe: the ratio |L V|_k / |V|_{k+4}, with L V the
/// Galerkin action re-expanded in the trial basis.
pub fn elliptic_equiv_probe(
    f: &OperatorForms,
    t: &NormTable,
    v: &Field,
    k: usize,
) -> Result<f64> {
    if k + 4 > t.k_max {
        return Err(Error::Input("elliptic probe requires k + 4 <= k_max".into()));
    }
    let denom = t.norm_k(v, k + 4);
    if denom == 0.0 {
        return Err(Error::Input("elliptic probe is undefined for V = 0".into()));
    }
    let lv = f.apply_l(v);
    Ok(t.norm_k(&lv, k) / denom)
}
