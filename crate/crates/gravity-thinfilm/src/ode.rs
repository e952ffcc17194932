//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) with
//! event detection, used by the shooting construction of the profile.
//!
//! The integrator is deliberately small: dense output is a cubic Hermite
//! interpolant on each accepted step, and event times located there are
//! polished by re-integration plus a Newton correction in the caller where
//! higher accuracy is needed.

use crate::error::{Error, Result};

/// Dormand-Prince 5(4) Butcher tableau (FSAL).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
/// 4th-order embedded weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-4,
            h_max: 0.05,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted integrator step, handed to the event monitor. The fields
/// give the cubic Hermite data of the step.
#[derive(Clone, Copy, Debug)]
pub struct Step<const N: usize> {
    pub x0: f64,
    pub x1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolation of the solution inside the step.
    pub fn interpolate(&self, x: f64) -> [f64; N] {
        let h = self.x1 - self.x0;
        let t = (x - self.x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = h00 * self.y0[i] + h * h10 * self.f0[i] + h01 * self.y1[i]
                + h * h11 * self.f1[i];
        }
        out
    }
}

/// Verdict of the per-step event monitor.
pub enum Control {
    Continue,
    /// Stop the integration at the given abscissa with the given state.
    Stop(f64, Box<[f64]>),
}

/// Integrate `y' = f(x, y)` from `(x0, y0)` towards `x_end` (forward or
/// backward), calling `monitor` after every accepted step. Returns the final
/// `(x, y)` — either `x_end` or the stop point requested by the monitor.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    opts: &OdeOptions,
    monitor: &mut dyn FnMut(&Step<N>) -> Control,
) -> Result<(f64, [f64; N])> {
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut fy = f(x, &y);
    let mut h = (opts.h_init.min(opts.h_max)).min((x_end - x0).abs().max(1e-30)) * dir;
    let mut k = [[0.0; N]; 7];

    for _ in 0..opts.max_steps {
        if (x - x_end) * dir >= 0.0 {
            return Ok((x, y));
        }
        if (x + h - x_end) * dir > 0.0 {
            h = x_end - x;
        }
        if h.abs() < 1e3 * f64::EPSILON * x.abs().max(1.0) {
            return Err(Error::Input(format!(
                "integrator step-size underflow at x = {x:.6e}"
            )));
        }

        k[0] = fy;
        for s in 0..6 {
            let mut ys = [0.0; N];
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] = y[i] + h * acc;
            }
            k[s + 1] = f(x + C[s] * h, &ys);
        }
        // 5th-order solution is the 6th stage state (FSAL): weights = A[5].
        let mut y5 = [0.0; N];
        let mut err = 0.0f64;
        for i in 0..N {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                if j < 6 {
                    acc5 += A[5][j] * k[j][i];
                }
                acc4 += B4[j] * k[j][i];
            }
            y5[i] = y[i] + h * acc5;
            let e = h * (acc5 - acc4);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
        }

        if err <= 1.0 {
            let step = Step {
                x0: x,
                x1: x + h,
                y0: y,
                y1: y5,
                f0: k[0],
                f1: k[6],
            };
            x += h;
            y = y5;
            fy = k[6]; // FSAL
            match monitor(&step) {
                Control::Continue => {}
                Control::Stop(xs, ys) => {
                    let mut out = [0.0; N];
                    out.copy_from_slice(&ys);
                    return Ok((xs, out));
                }
            }
        }
        // standard PI-free step-size update
        let fac = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * fac).clamp(-opts.h_max.abs(), opts.h_max.abs());
        if h == 0.0 {
            h = dir * 1e-14;
        }
    }
    Err(Error::Input("integrator exceeded max step count".into()))
}

/// Classical fixed-step RK4, used for event polishing and by independent
/// reference computations in the test suite.
pub fn rk4_span<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x1: f64,
    steps: usize,
) -> [f64; N] {
    let h = (x1 - x0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let x = x0 + i as f64 * h;
        let k1 = f(x, &y);
        let mut ya = [0.0; N];
        for i in 0..N {
            ya[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = f(x + 0.5 * h, &ya);
        for i in 0..N {
            ya[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = f(x + 0.5 * h, &ya);
        for i in 0..N {
            ya[i] = y[i] + h * k3[i];
        }
        let k4 = f(x + h, &ya);
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Bisection for a scalar root on [a, b]; `fa` must have opposite sign to
/// `f(b)`. Returns the midpoint after `iters` halvings.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let mut fa = f(a);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa > 0.0) == (fm > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
