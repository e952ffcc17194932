//! Shared fixtures for the integration-test suite: a lazily built default
//! laboratory (profile + basis + norm table + operator forms) and an
//! independent brute-force shooting oracle for the profile problem.
#![allow(dead_code)]

use gravity_thinfilm::basis::Basis;
use gravity_thinfilm::ode::{bisect, rk4_span};
use gravity_thinfilm::operator::{assemble_forms, OperatorForms};
use gravity_thinfilm::profile::{solve_profile, Profile, ProfileParams};
use gravity_thinfilm::quadrature::build_quadrature_on;
use gravity_thinfilm::spaces::{build_norm_table, NormTable};
use std::sync::OnceLock;

pub struct Lab {
    pub profile: Profile,
    pub basis: Basis,
    pub table: NormTable,
    pub forms: OperatorForms,
}

pub fn lab_from_profile(profile: Profile, dim: usize, quad_n: usize, k_max: usize) -> Lab {
    let quad = build_quadrature_on(profile.ell, quad_n).unwrap();
    let basis = Basis::new(profile.ell, dim, quad, k_max.max(4)).unwrap();
    let table = build_norm_table(&profile, &basis, k_max).unwrap();
    let forms = assemble_forms(&profile, &basis).unwrap();
    Lab {
        profile,
        basis,
        table,
        forms,
    }
}

pub fn make_lab(u0: f64, dim: usize, quad_n: usize, k_max: usize) -> Lab {
    let profile = solve_profile(&ProfileParams::for_u0(u0)).unwrap();
    lab_from_profile(profile, dim, quad_n, k_max)
}

/// Default laboratory shared within one test binary: U0 = 1, basis dim 64,
/// 200-point quadrature, k_max = 12.
pub fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| make_lab(1.0, 64, 200, 12))
}

/// Result of the independent reference computation for the profile problem.
pub struct OracleProfile {
    /// U''(0) from the converged backward pass.
    pub q_star: f64,
    /// Support half-width.
    pub ell: f64,
    /// U''(ell).
    pub upp_ell: f64,
    /// U(ell / 2).
    pub u_half: f64,
}

/// One forward fixed-step RK4 shot of the integrated second-order ODE
/// U'' = q + x^2/10 + (U^3 - U0^3)/3 from (U, U')(0) = (U0, 0).
/// Returns (residual, event abscissa): residual is U' at touchdown when U
/// reaches zero, +inf when the profile flattens out with U > 0.
fn forward_classify(u0: f64, q: f64) -> (f64, f64) {
    let u03 = u0 * u0 * u0;
    let f = move |x: f64, y: &[f64; 2]| {
        [y[1], q + x * x / 10.0 + (y[0] * y[0] * y[0] - u03) / 3.0]
    };
    let h = 5e-4;
    let x_max = 12.0 * (1.0 + u0);
    let mut x = 0.0;
    let mut y = [u0, 0.0];
    while x < x_max {
        let y1 = rk4_span(&f, x, y, x + h, 1);
        if y1[0] <= 0.0 {
            // U crossed zero inside the step: refine the crossing
            let gu = |xx: f64| rk4_span(&f, x, y, xx, 8)[0];
            let xs = bisect(&gu, x, x + h, 80);
            let ys = rk4_span(&f, x, y, xs, 8);
            return (ys[1], xs);
        }
        if y[1] < 0.0 && y1[1] >= 0.0 {
            // ascending crossing of U' = 0: decide by the sign of U there
            let gm = |xx: f64| rk4_span(&f, x, y, xx, 8)[1];
            let xm = bisect(&gm, x, x + h, 80);
            let ym = rk4_span(&f, x, y, xm, 8);
            if ym[0] <= 0.0 {
                // U dipped through zero before U' turned
                let gu = |xx: f64| rk4_span(&f, x, y, xx, 8)[0];
                let xs = bisect(&gu, x, xm, 80);
                let ys = rk4_span(&f, x, y, xs, 8);
                return (ys[1], xs);
            }
            return (f64::INFINITY, xm);
        }
        if x > 0.0 && y[1] >= 0.0 && y1[1] >= 0.0 {
            // U' never went negative: immediate flattening
            return (f64::INFINITY, x);
        }
        x += h;
        y = y1;
    }
    (f64::INFINITY, x_max)
}

/// Brute-force reference solve of the profile boundary-value problem,
/// entirely independent of the library's collocation construction:
///
/// 1. bisection in q = U''(0) on the forward shot (touchdown classified at
///    the refined ascending U' = 0 crossing, which stays transversal
///    arbitrarily close to the critical q);
/// 2. a two-parameter Newton iteration on (ell, b = U''(ell)) matching the
///    backward integration of the third-order ODE U''' = U^2 U' + x/5 from
///    the touchdown data (U, U', U'')(ell) = (0, 0, b) to the center
///    conditions (U, U')(0) = (U0, 0).
pub fn shooting_oracle(u0: f64) -> OracleProfile {
    let mut lo = -2.0 * u0 * u0 * u0;
    let mut hi = 0.0;
    let (r_lo, mut ell_est) = forward_classify(u0, lo);
    assert!(r_lo < 0.0, "oracle bracket low end must touch down");
    let (r_hi, _) = forward_classify(u0, hi);
    assert!(r_hi.is_infinite(), "oracle bracket high end must turn up");
    while hi - lo > 1e-15 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let (r, xe) = forward_classify(u0, mid);
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        ell_est = xe;
    }
    let q_forward = 0.5 * (lo + hi);

    // Backward matching in (ell, b).
    let f3 = |x: f64, y: &[f64; 3]| [y[1], y[2], y[0] * y[0] * y[1] + x / 5.0];
    let resid = |ell: f64, b: f64| -> [f64; 3] {
        let steps = (2000.0 * ell).ceil() as usize;
        let y = rk4_span(&f3, ell, [0.0, 0.0, b], 0.0, steps);
        [y[0] - u0, y[1], y[2]]
    };
    let mut ell = ell_est;
    let mut b = q_forward + ell * ell / 10.0 - u0 * u0 * u0 / 3.0;
    for _ in 0..60 {
        let r = resid(ell, b);
        if r[0].abs() < 1e-13 * u0 && r[1].abs() < 1e-13 * u0 {
            break;
        }
        let d_ell = 1e-7 * ell;
        let d_b = 1e-7 * (1.0 + b.abs());
        let r_e = resid(ell + d_ell, b);
        let r_b = resid(ell, b + d_b);
        let j00 = (r_e[0] - r[0]) / d_ell;
        let j01 = (r_b[0] - r[0]) / d_b;
        let j10 = (r_e[1] - r[1]) / d_ell;
        let j11 = (r_b[1] - r[1]) / d_b;
        let det = j00 * j11 - j01 * j10;
        assert!(det.abs() > 1e-12, "oracle Newton system degenerate");
        ell -= (r[0] * j11 - r[1] * j01) / det;
        b -= (j00 * r[1] - j10 * r[0]) / det;
    }
    let r_final = resid(ell, b);
    assert!(
        r_final[0].abs() < 1e-11 * u0 && r_final[1].abs() < 1e-11 * u0,
        "oracle Newton did not converge"
    );
    let q_star = r_final[2];
    assert!(
        (q_star - q_forward).abs() < 1e-8,
        "oracle cross-check failed: backward U''(0) = {q_star:.12e} vs forward bisection {q_forward:.12e}"
    );
    let u_half = rk4_span(&f3, ell, [0.0, 0.0, b], ell / 2.0, 4000)[0];
    OracleProfile {
        q_star,
        ell,
        upp_ell: b,
        u_half,
    }
}
