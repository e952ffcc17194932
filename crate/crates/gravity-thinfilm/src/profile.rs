//! Construction of the compactly supported even source-type profile `U`.
//!
//! `U` solves the third-order ODE `U''' = U^2 U' + x/5` on `[0, l]` with
//! `U(0) = U0`, `U'(0) = 0`, and a zero-contact-angle touchdown
//! `U(l) = U'(l) = 0` at an unknown half-width `l`. Integrating once gives
//! the second-order form
//!
//! ```text
//! U'' = q + x^2/10 + (U^3 - U0^3)/3,        q = U''(0),
//! ```
//!
//! which is shot in the single parameter `q`. The bisection bracket locates
//! `q* = U''(0)` and a first estimate of `l`; because the touchdown becomes
//! tangential at `q*`, forward shooting alone cannot place `l` to full
//! precision, so the final representation is polished by a spectral
//! collocation Newton iteration on
//!
//! ```text
//! U(x) = (l^2 - x^2)^2 W(x),     W an even Chebyshev series in x/l,
//! ```
//!
//! with `l` itself an unknown. The quadratic-touchdown factor makes
//! `U(l) = U'(l) = 0` and evenness exact by construction, and removes the
//! catastrophic amplification of coefficient noise in high Chebyshev
//! derivatives at the endpoints.

use crate::cheb;
use crate::error::{Error, Result};
use crate::ode::{self, Control, OdeOptions};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct ProfileParams {
    /// Center height U(0).
    pub u0: f64,
    /// Bracket for the shooting parameter q = U''(0).
    pub q_bracket: (f64, f64),
    /// Adaptive-integrator tolerance for the shooting phase.
    pub ode_tol: f64,
    /// Chebyshev degree of the fitted representation (rounded up to even).
    pub fit_degree: usize,
}

impl ProfileParams {
    /// Defaults for a given center height; the bracket `(-2 U0^3, 0)`
    /// straddles the sign change of the shooting residual on the tested
    /// family 0.5 <= U0 <= 2.
    pub fn for_u0(u0: f64) -> Self {
        ProfileParams {
            u0,
            q_bracket: (-2.0 * u0 * u0 * u0, 0.0),
            ode_tol: 1e-12,
            fit_degree: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0) {
            return Err(Error::Input("U0 must be positive".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(Error::Input("ode_tol must be positive".into()));
        }
        if self.fit_degree < 16 {
            return Err(Error::Input(
                "fit_degree must be at least 16 (accuracy floor)".into(),
            ));
        }
        if !(self.q_bracket.0 < self.q_bracket.1) {
            return Err(Error::Input("q_bracket must be ordered".into()));
        }
        Ok(())
    }
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams::for_u0(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotOutcome {
    /// U reached 0 at some x* > 0.
    TouchedDown,
    /// U stayed positive and descending up to x_max.
    StayedPositive,
    /// U' turned non-negative while U > 0 (the profile flattened out).
    TurnedUp,
}

#[derive(Clone, Debug)]
pub struct ShotResult {
    pub outcome: ShotOutcome,
    /// Touchdown abscissa (for TouchedDown) or the turning point.
    pub ell_candidate: f64,
    /// U' at touchdown (TouchedDown only; 0.0 for TurnedUp).
    pub uprime_at_touchdown: f64,
    /// Accepted-step samples (x, U, U').
    pub trajectory: Vec<[f64; 3]>,
}

impl ShotResult {
    /// Bisection residual r(q): U' at touchdown, with non-touching outcomes
    /// counted as +inf (the "turned up" side of the bracket).
    pub fn residual(&self) -> f64 {
        match self.outcome {
            ShotOutcome::TouchedDown => self.uprime_at_touchdown,
            _ => f64::INFINITY,
        }
    }
}

/// Shoot the integrated profile ODE from `(U, U')(0) = (U0, 0)` with
/// `U''(0) = q`. Event classification keys off the transversal crossing of
/// `U' = 0` rather than the possibly grazing dip of `U` itself, so the
/// outcome is decided correctly arbitrarily close to the critical `q`.
pub fn shoot(u0: f64, q: f64, ode_tol: f64) -> Result<ShotResult> {
    if !(u0 > 0.0) {
        return Err(Error::Input("U0 must be positive".into()));
    }
    let u03 = u0 * u0 * u0;
    let f = move |x: f64, y: &[f64; 2]| [y[1], q + x * x / 10.0 + (y[0] * y[0] * y[0] - u03) / 3.0];
    let x_max = 10.0 * (1.0 + u0);
    let opts = OdeOptions {
        rtol: ode_tol,
        atol: ode_tol * 1e-2,
        h_init: 1e-6,
        h_max: 0.05,
        max_steps: 5_000_000,
    };

    let mut trajectory: Vec<[f64; 3]> = vec![[0.0, u0, 0.0]];
    let mut outcome = ShotOutcome::StayedPositive;
    let mut event_x = x_max;
    let mut event_uprime = 0.0;
    // refinement data: the step bracketing the event
    let mut refine: Option<(f64, [f64; 2], f64)> = None; // (x0, y0, x_hi)

    let result = ode::integrate(&f, 0.0, [u0, 0.0], x_max, &opts, &mut |st| {
        trajectory.push([st.x1, st.y1[0], st.y1[1]]);
        if st.y1[0] <= 0.0 {
            // definite sign change of U within the step
            outcome = ShotOutcome::TouchedDown;
            refine = Some((st.x0, st.y0, st.x1));
            return Control::Stop(st.x1, Box::new(st.y1));
        }
        if st.x0 > 0.0 || st.y1[1] >= 0.0 {
            // look for an ascending crossing of U' inside the step
            if st.y0[1] < 0.0 && st.y1[1] >= 0.0 {
                let g = |x: f64| st.interpolate(x)[1];
                let xc = ode::bisect(&g, st.x0, st.x1, 80);
                let yc = st.interpolate(xc);
                if yc[0] <= 0.0 {
                    // U dipped through zero before U' turned: a touchdown
                    outcome = ShotOutcome::TouchedDown;
                    refine = Some((st.x0, st.y0, xc));
                } else {
                    outcome = ShotOutcome::TurnedUp;
                    event_x = xc;
                    event_uprime = 0.0;
                }
                return Control::Stop(xc, Box::new(yc));
            }
            if st.x0 == 0.0 && st.y1[1] >= 0.0 {
                // U' never went negative: flattens out immediately (q >= 0)
                outcome = ShotOutcome::TurnedUp;
                event_x = st.x1;
                return Control::Stop(st.x1, Box::new(st.y1));
            }
        }
        Control::Continue
    })?;

    if let Some((x0, y0, x_hi)) = refine {
        // polish the touchdown location with a fixed-step reference
        // integrator restarted from the step start (the Hermite interpolant
        // alone is only 4th-order accurate)
        let u_at = |x: f64| -> [f64; 2] {
            if x <= x0 {
                y0
            } else {
                ode::rk4_span(&f, x0, y0, x, 24)
            }
        };
        let g = |x: f64| u_at(x)[0];
        let xs = ode::bisect(&g, x0, x_hi, 80);
        let ys = u_at(xs);
        event_x = xs;
        event_uprime = ys[1];
    } else if outcome == ShotOutcome::StayedPositive {
        event_x = result.0;
        event_uprime = result.1[1];
    }

    Ok(ShotResult {
        outcome,
        ell_candidate: event_x,
        uprime_at_touchdown: event_uprime,
        trajectory,
    })
}

/// The compactly supported profile in its polished representation
/// `U(x) = (l^2 - x^2)^2 W(x/l per Chebyshev argument)`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub ell: f64,
    pub u0: f64,
    /// U''(0) (negative).
    pub u0pp: f64,
    /// Even Chebyshev coefficients of W: W(t) = sum_j cheb_w[j] T_{2j}(t).
    pub cheb_w: Vec<f64>,
    /// Recommended quadrature size for downstream integrals.
    pub quad_hint: usize,
    /// Integrator tolerance used during construction.
    pub ode_tol: f64,
    /// Residual tolerance certified by construction.
    pub residual_tol: f64,
    /// Full Chebyshev series of W and its first four derivatives in t.
    derivs: [Vec<f64>; 5],
}

impl Profile {
    fn finalize(ell: f64, u0: f64, cheb_w: Vec<f64>, ode_tol: f64, residual_tol: f64) -> Profile {
        let full = cheb::even_to_full(&cheb_w);
        let d1 = cheb::derive(&full);
        let d2 = cheb::derive(&d1);
        let d3 = cheb::derive(&d2);
        let d4 = cheb::derive(&d3);
        let derivs = [full, d1, d2, d3, d4];
        let fit_degree = 2 * (cheb_w.len() - 1);
        let mut p = Profile {
            ell,
            u0,
            u0pp: 0.0,
            cheb_w,
            quad_hint: 2 * fit_degree + 32,
            ode_tol,
            residual_tol,
            derivs,
        };
        p.u0pp = p.eval(0.0, 2);
        p
    }

    /// Evaluate `d`-th derivative of W with respect to x at |x| (t >= 0).
    fn w_deriv(&self, t: f64, d: usize) -> f64 {
        cheb::eval(&self.derivs[d], t) / self.ell.powi(d as i32)
    }

    /// Evaluate the d-th derivative of U at x, 0 <= d <= 4. Parity is exact:
    /// the value is computed at |x| and sign-corrected.
    pub fn eval(&self, x: f64, d: usize) -> f64 {
        assert!(d <= 4, "derivative order at most 4");
        let ax = x.abs();
        assert!(
            ax <= self.ell * (1.0 + 1e-9),
            "x = {x} outside the support [-{0}, {0}]",
            self.ell
        );
        let t = (ax / self.ell).min(1.0);
        let ell2 = self.ell * self.ell;
        let r = ell2 - ax * ax;
        // p = (l^2-x^2)^2 and derivatives at |x|
        let p = [
            r * r,
            -4.0 * ax * r,
            -4.0 * ell2 + 12.0 * ax * ax,
            24.0 * ax,
            24.0,
        ];
        let binom: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0],
        ];
        let mut val = 0.0;
        for j in 0..=d {
            val += binom[d][j] * p[j] * self.w_deriv(t, d - j);
        }
        if x < 0.0 && d % 2 == 1 {
            -val
        } else {
            val
        }
    }

    /// Pointwise ODE residual U''' - U^2 U' - x/5.
    pub fn ode_residual(&self, x: f64) -> f64 {
        let u = self.eval(x, 0);
        let u1 = self.eval(x, 1);
        let u3 = self.eval(x, 3);
        u3 - u * u * u1 - x / 5.0
    }

    /// Serialize to a structured text file; round-trips bit-exactly.
    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("# gravity-thinfilm profile v1\n");
        let _ = writeln!(s, "u0 = {:.17e}", self.u0);
        let _ = writeln!(s, "ell = {:.17e}", self.ell);
        let _ = writeln!(s, "u0pp = {:.17e}", self.u0pp);
        let _ = writeln!(s, "ode_tol = {:.17e}", self.ode_tol);
        let _ = writeln!(s, "residual_tol = {:.17e}", self.residual_tol);
        let _ = writeln!(s, "quad_hint = {}", self.quad_hint);
        let coeffs: Vec<String> = self.cheb_w.iter().map(|c| format!("{c:.17e}")).collect();
        let _ = writeln!(s, "cheb_w = {}", coeffs.join(","));
        s
    }

    pub fn from_file(path: &Path) -> Result<Profile> {
        let text = std::fs::read_to_string(path)?;
        Profile::deserialize(&text)
    }

    pub fn deserialize(text: &str) -> Result<Profile> {
        let mut u0 = None;
        let mut ell = None;
        let mut ode_tol = None;
        let mut residual_tol = None;
        let mut quad_hint = None;
        let mut cheb_w: Option<Vec<f64>> = None;
        let mut u0pp_stored = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("malformed profile line: {line}")))?;
            let key = key.trim();
            let value = value.trim();
            let parse = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|e| Error::Input(format!("bad number {v:?} for {key}: {e}")))
            };
            match key {
                "u0" => u0 = Some(parse(value)?),
                "ell" => ell = Some(parse(value)?),
                "u0pp" => u0pp_stored = Some(parse(value)?),
                "ode_tol" => ode_tol = Some(parse(value)?),
                "residual_tol" => residual_tol = Some(parse(value)?),
                "quad_hint" => {
                    quad_hint = Some(value.parse::<usize>().map_err(|e| {
                        Error::Input(format!("bad integer {value:?} for quad_hint: {e}"))
                    })?)
                }
                "cheb_w" => {
                    let mut v = Vec::new();
                    for piece in value.split(',') {
                        v.push(parse(piece.trim())?);
                    }
                    cheb_w = Some(v);
                }
                other => return Err(Error::Input(format!("unknown profile key {other:?}"))),
            }
        }
        let u0 = u0.ok_or_else(|| Error::Input("profile file missing u0".into()))?;
        let ell = ell.ok_or_else(|| Error::Input("profile file missing ell".into()))?;
        let cheb_w = cheb_w.ok_or_else(|| Error::Input("profile file missing cheb_w".into()))?;
        if !(ell > 0.0) || !(u0 > 0.0) || cheb_w.len() < 2 {
            return Err(Error::Input("profile file fails basic validation".into()));
        }
        let mut p = Profile::finalize(
            ell,
            u0,
            cheb_w,
            ode_tol.unwrap_or(1e-12),
            residual_tol.unwrap_or(1e-8),
        );
        if let Some(q) = quad_hint {
            p.quad_hint = q;
        }
        if let Some(stored) = u0pp_stored {
            if (stored - p.u0pp).abs() > 1e-10 * (1.0 + stored.abs()) {
                return Err(Error::Input(
                    "profile file inconsistent: stored u0pp does not match coefficients".into(),
                ));
            }
            p.u0pp = stored;
        }
        Ok(p)
    }
}

/// Accessor for the coercivity coefficient
/// `Phi = 2 (U')^2 - 4 U U'' + U^4` and its first two derivatives.
#[derive(Clone, Debug)]
pub struct PhiField<'a> {
    p: &'a Profile,
}

impl<'a> PhiField<'a> {
    pub fn new(p: &'a Profile) -> Self {
        PhiField { p }
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = self.p.eval(x, 0);
        let u1 = self.p.eval(x, 1);
        let u2 = self.p.eval(x, 2);
        2.0 * u1 * u1 - 4.0 * u * u2 + u.powi(4)
    }

    /// Phi' computed from raw derivatives of the representation (equals
    /// -(4/5) x U up to the ODE residual).
    pub fn deriv(&self, x: f64) -> f64 {
        let u = self.p.eval(x, 0);
        let u1 = self.p.eval(x, 1);
        let u3 = self.p.eval(x, 3);
        -4.0 * u * (u3 - u * u * u1)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let u = self.p.eval(x, 0);
        let u1 = self.p.eval(x, 1);
        let u2 = self.p.eval(x, 2);
        let u3 = self.p.eval(x, 3);
        let u4 = self.p.eval(x, 4);
        -4.0 * u1 * u3 - 4.0 * u * u4 + 12.0 * u * u * u1 * u1 + 4.0 * u.powi(3) * u2
    }
}

/// Report of `verify_profile`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct VerificationReport {
    pub max_ode_residual: f64,
    pub max_phi_identity_residual: f64,
    /// min/max of U / (l^2-x^2)^2 over the grid (boundary layer replaced by
    /// the limit U''(l) / (8 l^2)).
    pub u_ratio: (f64, f64),
    /// min/max of Phi / (l^2-x^2)^3 (limit U''(l) / (60 l^2)).
    pub phi_ratio: (f64, f64),
    pub u_ratio_boundary_limit: f64,
    pub phi_ratio_boundary_limit: f64,
    pub u_positive_on_interior: bool,
    pub upp_at_ell: f64,
}

impl VerificationReport {
    pub fn passes(&self, residual_tol: f64) -> bool {
        self.max_ode_residual < residual_tol
            && self.max_phi_identity_residual < residual_tol
            && self.u_positive_on_interior
            && self.u_ratio.0 > 0.0
            && self.phi_ratio.0 > 0.0
            && self.upp_at_ell > 0.0
    }
}

/// Sup-norm residuals of the ODE and the Phi identity on a dense grid, plus
/// the empirical touchdown-bound constants.
pub fn verify_profile(p: &Profile, grid_size: usize) -> VerificationReport {
    assert!(grid_size >= 64);
    let phi = PhiField::new(p);
    let ell = p.ell;
    let layer = ell * 1e-3;
    let b = p.eval(ell, 2);
    let u_limit = b / (8.0 * ell * ell);
    let phi_limit = b / (60.0 * ell * ell);

    let mut max_ode = 0.0f64;
    let mut max_phi = 0.0f64;
    let mut u_min = u_limit;
    let mut u_max = u_limit;
    let mut phi_min = phi_limit;
    let mut phi_max = phi_limit;
    let mut positive = true;

    for i in 0..=grid_size {
        let x = -ell + 2.0 * ell * i as f64 / grid_size as f64;
        max_ode = max_ode.max(p.ode_residual(x).abs());
        let u = p.eval(x, 0);
        max_phi = max_phi.max((phi.deriv(x) + 0.8 * x * u).abs());
        if x.abs() < ell - layer {
            if u <= 0.0 {
                positive = false;
            }
            let w2 = (ell * ell - x * x).powi(2);
            let ru = u / w2;
            u_min = u_min.min(ru);
            u_max = u_max.max(ru);
            let rphi = phi.value(x) / (w2 * (ell * ell - x * x));
            phi_min = phi_min.min(rphi);
            phi_max = phi_max.max(rphi);
        }
    }

    VerificationReport {
        max_ode_residual: max_ode,
        max_phi_identity_residual: max_phi,
        u_ratio: (u_min, u_max),
        phi_ratio: (phi_min, phi_max),
        u_ratio_boundary_limit: u_limit,
        phi_ratio_boundary_limit: phi_limit,
        u_positive_on_interior: positive,
        upp_at_ell: b,
    }
}

/// Bisect the shooting residual over the q-bracket. Returns the last
/// touching (lower) q, its touchdown abscissa, and the shot.
fn bisect_q(params: &ProfileParams) -> Result<(f64, ShotResult)> {
    let (mut lo, mut hi) = params.q_bracket;
    let r_lo = shoot(params.u0, lo, params.ode_tol)?;
    let r_hi = shoot(params.u0, hi, params.ode_tol)?;
    if !(r_lo.residual() < 0.0) || !(r_hi.residual() > 0.0) {
        return Err(Error::Input(format!(
            "q_bracket ({}, {}) does not straddle the shooting sign change",
            lo, hi
        )));
    }
    let mut best = r_lo;
    while hi - lo > 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let r = shoot(params.u0, mid, params.ode_tol)?;
        if r.residual() < 0.0 {
            lo = mid;
            best = r;
        } else {
            hi = mid;
        }
    }
    Ok((lo, best))
}

/// Solve the full profile problem: bisection for `q*`, then collocation
/// Newton on the weighted Chebyshev representation with `l` unknown.
pub fn solve_profile(params: &ProfileParams) -> Result<Profile> {
    params.validate()?;
    let u0 = params.u0;
    let n = params.fit_degree + params.fit_degree % 2; // even
    let m = n / 2 + 1; // even Chebyshev coefficients of W

    // Phase 1: forward shooting bisection. q is accurate to ~1e-12 but the
    // touchdown abscissa only to ~sqrt of that (tangential touchdown).
    let (q_hat, last_shot) = bisect_q(params)?;
    let ell0 = last_shot.ell_candidate;
    let b_est = q_hat + ell0 * ell0 / 10.0 - u0 * u0 * u0 / 3.0;
    if !(b_est > 0.0) {
        return Err(Error::Input(
            "shooting produced a non-positive touchdown curvature".into(),
        ));
    }

    // Phase 2: initial guess for W by least squares against a reference
    // re-integration of the shot at q_hat.
    let u03 = u0 * u0 * u0;
    let f =
        move |x: f64, y: &[f64; 2]| [y[1], q_hat + x * x / 10.0 + (y[0] * y[0] * y[0] - u03) / 3.0];
    let n_samp = 2 * m + 8;
    let mut ts = Vec::with_capacity(n_samp);
    for j in 0..n_samp {
        // positive Chebyshev-spaced samples in (0, 1]
        ts.push((std::f64::consts::PI * j as f64 / (2 * n_samp) as f64).cos());
    }
    let mut w_samp = Vec::with_capacity(n_samp);
    let mut state = [u0, 0.0];
    let mut x_cur = 0.0;
    // ts descends from 1; integrate in ascending x order
    let mut xs: Vec<f64> = ts.iter().map(|t| t * ell0).collect();
    xs.reverse();
    let mut u_vals = Vec::with_capacity(n_samp);
    for &x in &xs {
        if x > x_cur {
            let steps = ((x - x_cur) / 0.002).ceil() as usize + 1;
            state = ode::rk4_span(&f, x_cur, state, x, steps);
            x_cur = x;
        }
        u_vals.push(state[0]);
    }
    u_vals.reverse(); // back to ts order (descending t)
    for (j, &t) in ts.iter().enumerate() {
        let x = t * ell0;
        let p = (ell0 * ell0 - x * x).powi(2);
        let w = if x > 0.97 * ell0 || u_vals[j] <= 0.0 {
            b_est / (8.0 * ell0 * ell0)
        } else {
            u_vals[j] / p
        };
        w_samp.push(w);
    }
    let design = DMatrix::from_fn(n_samp, m, |r, c| (2.0 * c as f64 * ts[r].acos()).cos());
    let rhs = DVector::from_vec(w_samp);
    let d0 = design
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Input(format!("initial W fit failed: {e}")))?;

    // Phase 3: collocation Newton on z = (d_0..d_{m-1}, l).
    let nodes = cheb::positive_gauss_nodes(n + 2); // (n+2)/2 nodes
    let n_eq = nodes.len() + 1;
    if n_eq != m + 1 {
        return Err(Error::Input(format!(
            "collocation system not square: {n_eq} equations, {} unknowns",
            m + 1
        )));
    }
    let scale = u0 * u0 * u0;
    let residual = |z: &DVector<f64>| -> DVector<f64> {
        let d = &z.as_slice()[..m];
        let ell = z[m];
        let full = cheb::even_to_full(d);
        let c1 = cheb::derive(&full);
        let c2 = cheb::derive(&c1);
        let c3 = cheb::derive(&c2);
        let mut out = DVector::zeros(n_eq);
        let ell2 = ell * ell;
        for (i, &t) in nodes.iter().enumerate() {
            let x = ell * t;
            let w = cheb::eval(&full, t);
            let w1 = cheb::eval(&c1, t) / ell;
            let w2 = cheb::eval(&c2, t) / ell2;
            let w3 = cheb::eval(&c3, t) / (ell2 * ell);
            let r = ell2 - x * x;
            let p = r * r;
            let p1 = -4.0 * x * r;
            let p2 = -4.0 * ell2 + 12.0 * x * x;
            let p3 = 24.0 * x;
            let u = p * w;
            let u1 = p * w1 + p1 * w;
            let u3 = p * w3 + 3.0 * p1 * w2 + 3.0 * p2 * w1 + p3 * w;
            out[i] = (u3 - u * u * u1 - x / 5.0) / scale;
        }
        out[n_eq - 1] = (ell2 * ell2 * cheb::eval(&full, 0.0) - u0) / u0;
        out
    };

    let mut z = DVector::zeros(m + 1);
    for j in 0..m {
        z[j] = d0[j];
    }
    z[m] = ell0;

    let mut converged = false;
    for _iter in 0..60 {
        let r = residual(&z);
        let rn = r.norm();
        if r.amax() < 1e-13 {
            converged = true;
            break;
        }
        // finite-difference Jacobian
        let mut jac = DMatrix::zeros(n_eq, m + 1);
        for j in 0..=m {
            let dz = 1e-7 * (1.0 + z[j].abs());
            let mut zp = z.clone();
            zp[j] += dz;
            let rp = residual(&zp);
            for i in 0..n_eq {
                jac[(i, j)] = (rp[i] - r[i]) / dz;
            }
        }
        let delta = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::Input("collocation Jacobian is singular".into()))?;
        // damped update
        let mut accepted = false;
        let mut alpha = 1.0;
        for _ in 0..8 {
            let zt = &z + alpha * &delta;
            if zt[m] > 0.0 {
                let rt = residual(&zt);
                if rt.norm() < rn {
                    z = zt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::Input(
                "collocation Newton stalled; increase fit_degree or loosen ode_tol".into(),
            ));
        }
    }
    if !converged {
        return Err(Error::Input(
            "collocation Newton did not converge to the residual floor".into(),
        ));
    }

    let cheb_w = z.as_slice()[..m].to_vec();
    let ell = z[m];
    let profile = Profile::finalize(ell, u0, cheb_w, params.ode_tol, 1e-8);

    // Construction-time verification of the Profile invariants.
    let report = verify_profile(&profile, 2048);
    if !report.passes(profile.residual_tol) {
        return Err(Error::Input(format!(
            "profile verification failed: max ODE residual {:.3e}, phi residual {:.3e}",
            report.max_ode_residual, report.max_phi_identity_residual
        )));
    }
    if (profile.eval(0.0, 0) - u0).abs() > 1e-12 * u0 {
        return Err(Error::Input("center condition not met to tolerance".into()));
    }
    if !(profile.u0pp < 0.0) {
        return Err(Error::Input("U''(0) is not negative".into()));
    }
    // consistency with the shooting phase
    if (profile.u0pp - q_hat).abs() > 1e-6 * (1.0 + q_hat.abs()) {
        return Err(Error::Input(format!(
            "collocation drifted from the shooting bracket: q* = {q_hat:.12e} vs U''(0) = {:.12e}",
            profile.u0pp
        )));
    }
    Ok(profile)
}
