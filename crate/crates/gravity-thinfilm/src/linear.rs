//! Implicit-Euler time stepping of the linear evolution `dV/ds + L V = F`.
//!
//! One step solves the resolvent problem `(1/h)(V_j - V_{j-1}) + L V_j =
//! F_{j-1}`, i.e. `(M/h + A) v_j = M (v_{j-1}/h + f_{j-1})`. The scheme is
//! unconditionally contractive in |.|_U with the exact geometric factor
//! `1/(1 + h/5)` on the slowest (constant translation) mode.

use crate::basis::Field;
use crate::error::{Error, Result};
use crate::operator::OperatorForms;
use crate::spaces::NormTable;
use nalgebra::{Cholesky, DMatrix, Dyn};

/// Per-step diagnostics row of a Trajectory.
#[derive(Clone, Debug)]
pub struct DiagRow {
    pub s: f64,
    pub norm_u: f64,
    pub norm_u2: f64,
    /// |V|_k for the configured k-list.
    pub norms_k: Vec<f64>,
    /// Energy E[x + V] (nonlinear runs only).
    pub energy: Option<f64>,
    /// ||N[V]||_U (nonlinear runs only).
    pub nonlin_norm: Option<f64>,
    /// min over nodes of 1 + V' (nonlinear runs only).
    pub margin: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub h: f64,
    pub k_list: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub diagnostics: Vec<DiagRow>,
    /// Present when the run stopped early (e.g. margin violation).
    pub truncated: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub rate: f64,
    pub r2: f64,
    pub samples: usize,
}

impl Trajectory {
    /// Least-squares decay rate of log |V|_U over the window `[s_lo, s_hi]`.
    pub fn fit_decay_rate(&self, window: (f64, f64)) -> Result<RateFit> {
        let mut ss = Vec::new();
        let mut ys = Vec::new();
        for (t, d) in self.times.iter().zip(&self.diagnostics) {
            if *t >= window.0 && *t <= window.1 && d.norm_u > 1e-300 {
                ss.push(*t);
                ys.push(d.norm_u.ln());
            }
        }
        if ss.len() < 10 {
            return Err(Error::Input(
                "decay-rate window contains fewer than 10 usable samples".into(),
            ));
        }
        let n = ss.len() as f64;
        let sm: f64 = ss.iter().sum::<f64>() / n;
        let ym: f64 = ys.iter().sum::<f64>() / n;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let mut syy = 0.0;
        for (s, y) in ss.iter().zip(&ys) {
            sxx += (s - sm) * (s - sm);
            sxy += (s - sm) * (y - ym);
            syy += (y - ym) * (y - ym);
        }
        let slope = sxy / sxx;
        let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        Ok(RateFit {
            rate: -slope,
            r2,
            samples: ss.len(),
        })
    }

    /// Default fit window: the last 40% of the horizon.
    pub fn default_window(&self) -> (f64, f64) {
        let s_end = *self.times.last().unwrap_or(&0.0);
        (0.6 * s_end, s_end)
    }
}

/// Factored solver for one step size h.
pub struct LinearStepper<'a> {
    pub forms: &'a OperatorForms,
    pub h: f64,
    chol: Cholesky<f64, Dyn>,
}

impl<'a> LinearStepper<'a> {
    pub fn new(forms: &'a OperatorForms, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Input("step size must be positive".into()));
        }
        let sys: DMatrix<f64> = &forms.m / h + &forms.a;
        let chol = Cholesky::new(sys)
            .ok_or_else(|| Error::Input("implicit-Euler system not positive definite".into()))?;
        Ok(LinearStepper { forms, h, chol })
    }

    /// One implicit-Euler step with explicit source F_{j-1}.
    pub fn step(&self, v_prev: &Field, f_prev: Option<&Field>) -> Field {
        let mut rhs = &v_prev.coeffs / self.h;
        if let Some(f) = f_prev {
            rhs += &f.coeffs;
        }
        Field {
            coeffs: self.chol.solve(&(&self.forms.m * rhs)),
        }
    }
}

/// Solve the resolvent problem `lambda V + L V = lambda V0 + F`.
pub fn resolvent_solve(
    forms: &OperatorForms,
    lambda: f64,
    v0: &Field,
    f: &Field,
) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(Error::Input("resolvent parameter must be positive".into()));
    }
    let sys: DMatrix<f64> = &forms.m * lambda + &forms.a;
    let chol = Cholesky::new(sys)
        .ok_or_else(|| Error::Input("resolvent system not positive definite".into()))?;
    let rhs = &forms.m * (lambda * &v0.coeffs + &f.coeffs);
    Ok(Field {
        coeffs: chol.solve(&rhs),
    })
}

/// Time-dependent source for evolve_linear.
pub enum Source<'a> {
    Zero,
    Constant(Field),
    TimeDependent(&'a dyn Fn(f64) -> Field),
}

impl Source<'_> {
    fn at(&self, s: f64) -> Option<Field> {
        match self {
            Source::Zero => None,
            Source::Constant(f) => Some(f.clone()),
            Source::TimeDependent(f) => Some(f(s)),
        }
    }
}

/// Run the linear evolution over `ceil(S/h)` steps, recording diagnostics.
pub fn evolve_linear(
    forms: &OperatorForms,
    table: &NormTable,
    v0: &Field,
    source: &Source,
    h: f64,
    s_max: f64,
    k_list: &[usize],
) -> Result<Trajectory> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Input("linear evolution requires 0 < h <= 1".into()));
    }
    if s_max < h {
        return Err(Error::Input("horizon must be at least one step".into()));
    }
    let stepper = LinearStepper::new(forms, h)?;
    let n_steps = (s_max / h).ceil() as usize;
    let mut traj = Trajectory {
        h,
        k_list: k_list.to_vec(),
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        diagnostics: Vec::with_capacity(n_steps + 1),
        truncated: None,
    };
    let mut v = v0.clone();
    record(&mut traj, table, 0.0, &v);
    for j in 1..=n_steps {
        let s_prev = (j - 1) as f64 * h;
        let f_prev = source.at(s_prev);
        v = stepper.step(&v, f_prev.as_ref());
        record(&mut traj, table, j as f64 * h, &v);
    }
    Ok(traj)
}

fn record(traj: &mut Trajectory, table: &NormTable, s: f64, v: &Field) {
    let norms_k = traj.k_list.iter().map(|&k| table.norm_k(v, k)).collect();
    traj.diagnostics.push(DiagRow {
        s,
        norm_u: table.norm_u(v),
        norm_u2: table.norm_u2(v),
        norms_k,
        energy: None,
        nonlin_norm: None,
        margin: None,
    });
    traj.times.push(s);
    traj.states.push(v.clone());
}

/// Discrete a-priori sums of the maximal-regularity diagnostics at tier k:
/// `sup_j (jh)^{k-2} |V_j|^2_{2k+2}` and
/// `sum_j h (jh)^{k-2} |V_j|^2_{2k+4}` (requires 2k+4 <= k_max).
pub fn apriori_sums(traj: &Trajectory, table: &NormTable, k: usize) -> Result<(f64, f64)> {
    if 2 * k + 4 > table.k_max {
        return Err(Error::Input("a-priori tier exceeds k_max".into()));
    }
    let h = traj.h;
    let mut sup = 0.0f64;
    let mut sum = 0.0f64;
    for (j, v) in traj.states.iter().enumerate().skip(1) {
        let w = (j as f64 * h).powi(k as i32 - 2);
        let n1 = table.norm_k(v, 2 * k + 2);
        let n2 = table.norm_k(v, 2 * k + 4);
        sup = sup.max(w * n1 * n1);
        sum += h * w * n2 * n2;
    }
    Ok((sup, sum))
}

/// Exact per-step geometric rate of the slowest mode: log(1 + h/5)/h.
pub fn constant_mode_rate(h: f64) -> f64 {
    (1.0 + h / 5.0).ln() / h
}
