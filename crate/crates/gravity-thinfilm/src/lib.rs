//! Numerical laboratory for the source-type self-similar solution of the
//! thin-film equation with linearized gravity,
//!
//! ```text
//! h_t + (h h_yyy)_y - (h^3 h_y)_y = 0,        h >= 0, zero contact angle,
//! ```
//!
//! built around the self-similar profile `U` on `[-l, l]` solving
//! `U''' = U^2 U' + x/5` with `U(0) = U0`, `U'(0) = 0`, `U(l) = U'(l) = 0`.
//!
//! The crate provides:
//!
//! * [`profile`]: shooting + spectral collocation construction of `U`,
//!   high-order pointwise evaluation, and verification diagnostics;
//! * [`quadrature`] / [`basis`]: Gauss-Legendre quadrature and a Legendre
//!   trial basis on `[-l, l]` with coefficient-space differentiation;
//! * [`spaces`]: the weighted Sobolev norms `|V|_k` with degenerate weights
//!   `(l^2 - x^2)^{j+2}` and Monte-Carlo probes of the Hardy, interpolation
//!   and C^0-embedding inequalities;
//! * [`operator`]: Galerkin assembly of the quadratic forms behind the
//!   linearized operator `L`, its spectrum, the gap at `1/5`, and the
//!   elliptic-equivalence probe;
//! * [`linear`]: implicit-Euler resolvent stepping of `dV/ds + L V = F`
//!   with decay-rate extraction and discrete a-priori diagnostics;
//! * [`nonlinear`]: the full mass-Lagrangian gradient flow
//!   `dV/ds + grad E[x + V] = 0`, the nonlinearity `N[V] = L V - grad E`,
//!   energy monitoring, and reconstruction of the physical film.
//!
//! All randomness is seeded; all floating-point output is emitted with 17
//! significant digits so runs are reproducible bit-for-bit.

pub mod basis;
pub mod cheb;
pub mod config;
pub mod error;
pub mod jet;
pub mod linear;
pub mod nonlinear;
pub mod ode;
pub mod operator;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod spaces;

pub use error::Error;
