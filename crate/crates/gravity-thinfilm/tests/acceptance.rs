//! Full acceptance suite. One test runs all ten criteria, prints one
//! PASS/FAIL line per criterion, and fails if any criterion fails.

mod common;

use common::{lab, lab_from_profile, shooting_oracle};
use gravity_thinfilm::basis::{random_field, Field};
use gravity_thinfilm::linear::{constant_mode_rate, evolve_linear, Source};
use gravity_thinfilm::nonlinear::{
    energy, eval_nonlinearity, evolve_nonlinear, front_report, gradient_inner,
    reconstruct_physical, LagrangianState, DEFAULT_MARGIN,
};
use gravity_thinfilm::operator::{apply_l_pointwise, compute_spectrum};
use gravity_thinfilm::profile::{solve_profile, verify_profile, Profile, ProfileParams};
use gravity_thinfilm::spaces::{c0_embed_probe, hardy_probe, interp_probe};
use nalgebra::DVector;
use rand::SeedableRng;
use std::time::Instant;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn criterion(out: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    out.push(Outcome { name, pass, detail });
}

#[test]
fn acceptance_criteria() {
    let mut outcomes: Vec<Outcome> = Vec::new();

    // ---------- 1: profile correctness against the independent oracle ----
    let t0 = Instant::now();
    let profile = solve_profile(&ProfileParams::for_u0(1.0)).unwrap();
    let solve_secs = t0.elapsed().as_secs_f64();
    let report = verify_profile(&profile, 4096);
    let uprime_ell = profile.eval(profile.ell, 1).abs();
    let oracle = shooting_oracle(1.0);
    let d_ell = (profile.ell - oracle.ell).abs();
    let d_q = (profile.u0pp - oracle.q_star).abs();
    criterion(
        &mut outcomes,
        "criterion 1",
        report.max_ode_residual < 1e-8
            && uprime_ell < 1e-10
            && report.max_phi_identity_residual < 1e-8
            && solve_secs < 5.0
            && d_ell < 1e-9
            && d_q < 1e-9,
        format!(
            "ode residual {:.2e}, |U'(ell)| {:.1e}, phi identity {:.2e}, solve {:.2}s, oracle gaps ell {:.2e} / U''(0) {:.2e}",
            report.max_ode_residual, uprime_ell, report.max_phi_identity_residual,
            solve_secs, d_ell, d_q
        ),
    );

    // ---------- 2: spectral gap, exact eigenpairs, coercivity Monte-Carlo -
    let l = lab();
    let t0 = Instant::now();
    let spec = compute_spectrum(&l.forms, 6).unwrap();
    let one = Field::constant(1.0, l.basis.dim);
    let e0 = &spec.eigenfields[0];
    let c_star = l.forms.inner_u(e0, &one) / l.forms.inner_u(&one, &one);
    let const_err = l.forms.norm_u(&e0.sub(&one.scale(c_star)));
    let fx = l.basis.field_x();
    let ax = &l.forms.a * &fx.coeffs;
    let mx = &l.forms.m * &fx.coeffs;
    let res_x = (&ax - &mx).norm() / ax.norm();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut min_rayleigh = f64::INFINITY;
    for _ in 0..10_000 {
        let v = random_field(l.basis.dim, 63, &mut rng);
        min_rayleigh = min_rayleigh.min(l.forms.inner_u2(&v, &v) / l.forms.inner_u(&v, &v));
    }
    let secs2 = t0.elapsed().as_secs_f64();
    criterion(
        &mut outcomes,
        "criterion 2",
        (spec.eigenvalues[0] - 0.2).abs() < 1e-8
            && const_err < 1e-6
            && (spec.eigenvalues[1] - 1.0).abs() < 1e-6
            && res_x < 1e-6
            && min_rayleigh >= 0.2 - 1e-9
            && secs2 < 10.0,
        format!(
            "lambda_1 {:.12}, const eigenfield error {:.2e}, lambda_2 {:.9}, x residual {:.2e}, min Rayleigh {:.12}, {:.2}s",
            spec.eigenvalues[0], const_err, spec.eigenvalues[1], res_x, min_rayleigh, secs2
        ),
    );

    // ---------- 3: Galerkin / strong-form consistency ---------------------
    let u_at: Vec<f64> = l.basis.quad.nodes.iter().map(|&x| l.profile.eval(x, 0)).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let v = random_field(l.basis.dim, 40, &mut rng);
        let lhs = &l.forms.a * &v.coeffs;
        let weighted = DVector::from_iterator(
            l.basis.quad.len(),
            l.basis.quad.nodes.iter().enumerate().map(|(i, &x)| {
                apply_l_pointwise(&l.profile, &l.basis, &v, x).unwrap()
                    * u_at[i]
                    * l.basis.quad.weights[i]
            }),
        );
        let rhs = l.basis.table(0).transpose() * weighted;
        worst_rel = worst_rel.max((&lhs - &rhs).norm() / lhs.norm());
    }
    criterion(
        &mut outcomes,
        "criterion 3",
        worst_rel < 1e-9,
        format!("worst relative mismatch over 100 draws {worst_rel:.2e}"),
    );

    // ---------- 4: linear decay rates and Richardson extrapolation --------
    let t0 = Instant::now();
    let mut rates = Vec::new();
    let mut max_rate_err = 0.0f64;
    for &h in &[0.04, 0.02, 0.01] {
        let traj = evolve_linear(&l.forms, &l.table, &one, &Source::Zero, h, 10.0, &[]).unwrap();
        let fit = traj.fit_decay_rate(traj.default_window()).unwrap();
        max_rate_err = max_rate_err.max((fit.rate - constant_mode_rate(h)).abs());
        rates.push(fit.rate);
    }
    let richardson = 2.0 * rates[2] - rates[1];
    let mut mixed = Field::constant(1.0, l.basis.dim);
    mixed.coeffs[1] = l.basis.ell; // V0 = 1 + x
    let traj = evolve_linear(&l.forms, &l.table, &mixed, &Source::Zero, 0.01, 40.0, &[]).unwrap();
    let mixed_rate = traj.fit_decay_rate((24.0, 40.0)).unwrap().rate;
    let secs4 = t0.elapsed().as_secs_f64();
    criterion(
        &mut outcomes,
        "criterion 4",
        max_rate_err < 1e-12
            && (richardson - 0.2).abs() < 1e-4
            && ((mixed_rate - 0.2) / 0.2).abs() < 0.01
            && secs4 < 30.0,
        format!(
            "max rate error {max_rate_err:.2e}, Richardson {richardson:.8} , mixed rate {mixed_rate:.6}, {secs4:.2}s"
        ),
    );

    // ---------- 5: nonlinear stationarity and the translation mode --------
    let n0 = eval_nonlinearity(
        &l.profile,
        &l.basis,
        &l.forms,
        &Field::zeros(l.basis.dim),
        DEFAULT_MARGIN,
    )
    .unwrap();
    let n0_norm = l.forms.norm_u(&n0);
    let h5 = 0.01;
    let traj = evolve_nonlinear(
        &l.profile,
        &l.basis,
        &l.forms,
        &l.table,
        &Field::constant(0.01, l.basis.dim),
        h5,
        5.0,
        DEFAULT_MARGIN,
        0.5,
        &[],
    )
    .unwrap();
    let n_start = traj.diagnostics[0].norm_u;
    let mut worst_step = 0.0f64;
    for (j, d) in traj.diagnostics.iter().enumerate() {
        let exact = n_start / (1.0 + h5 / 5.0).powi(j as i32);
        worst_step = worst_step.max((d.norm_u - exact).abs() / exact);
    }
    criterion(
        &mut outcomes,
        "criterion 5",
        n0_norm < 1e-7 && traj.truncated.is_none() && worst_step < 1e-9,
        format!("|N[0]|_U {n0_norm:.2e}, worst per-step deviation {worst_step:.2e}"),
    );

    // ---------- 6: nonlinear decay from small random data -----------------
    let t0 = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let raw = random_field(l.basis.dim, 10, &mut rng);
    let v0 = raw.scale(0.01 / l.table.norm_k(&raw, 6));
    let traj6 = evolve_nonlinear(
        &l.profile, &l.basis, &l.forms, &l.table, &v0, 0.01, 30.0, DEFAULT_MARGIN, 0.5, &[6],
    )
    .unwrap();
    let secs6 = t0.elapsed().as_secs_f64();
    let rate6 = traj6.fit_decay_rate((18.0, 30.0)).unwrap().rate;
    let mut energy_monotone = true;
    let mut margin_ok = true;
    let mut prev_e = f64::INFINITY;
    for d in &traj6.diagnostics {
        let e = d.energy.unwrap_or(f64::NAN);
        if !(e <= prev_e + 1e-12 * prev_e.abs().max(1.0)) {
            energy_monotone = false;
        }
        prev_e = e;
        if d.margin.unwrap_or(f64::NEG_INFINITY) < DEFAULT_MARGIN {
            margin_ok = false;
        }
    }
    criterion(
        &mut outcomes,
        "criterion 6",
        traj6.truncated.is_none()
            && ((rate6 - 0.2) / 0.2).abs() < 0.02
            && energy_monotone
            && margin_ok
            && secs6 < 120.0,
        format!(
            "late rate {rate6:.6}, energy monotone {energy_monotone}, margin kept {margin_ok}, {secs6:.1}s"
        ),
    );

    // ---------- 7: quadratic smallness of the nonlinearity ----------------
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut ratio_ok = true;
    let mut detail7 = String::new();
    for draw in 0..5 {
        // low-degree, non-constant directions keep the quadratic response of
        // N above the stationarity floor |N[0]|_U ~ 1e-13 at |V|_6 = 1e-4
        // (constants are exactly in the kernel of N); measuring N[V] - N[0]
        // removes that floor itself
        let mut dir = random_field(l.basis.dim, 3, &mut rng);
        dir.coeffs[0] = 0.0;
        let unit = dir.scale(1.0 / l.table.norm_k(&dir, 6));
        let mut ratios = Vec::new();
        for &a in &[1e-2, 1e-3, 1e-4] {
            let v = unit.scale(a);
            let n = eval_nonlinearity(&l.profile, &l.basis, &l.forms, &v, DEFAULT_MARGIN).unwrap();
            ratios.push(l.forms.norm_u(&n.sub(&n0)) / (a * a));
        }
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let spread = (hi - lo) / lo;
        if spread >= 0.2 {
            ratio_ok = false;
        }
        if draw == 0 {
            detail7 = format!("draw 0 ratios {:.4e} / {:.4e} / {:.4e}", ratios[0], ratios[1], ratios[2]);
        }
    }
    criterion(
        &mut outcomes,
        "criterion 7",
        ratio_ok,
        format!("|N[V]|_U / |V|_6^2 spread < 20% over 5 draws; {detail7}"),
    );

    // ---------- 8: physical front velocities and mass conservation --------
    let rows = front_report(&l.profile, &l.basis, &traj6, 25);
    let t_end = rows.last().unwrap().t;
    let target = l.profile.ell / 5.0;
    let mut front_ok = true;
    let mut worst_front = 0.0f64;
    for r in rows.iter().filter(|r| r.t >= t_end / 10.0) {
        let dp = ((r.scaled_plus - target) / target).abs();
        let dm = ((r.scaled_minus + target) / target).abs();
        worst_front = worst_front.max(dp.max(dm));
        if dp >= 0.05 || dm >= 0.05 {
            front_ok = false;
        }
    }
    let mass0 = reconstruct_physical(
        &l.profile,
        &l.basis,
        &LagrangianState::new(traj6.states[0].clone(), 0.0),
        16,
        DEFAULT_MARGIN,
    )
    .unwrap()
    .mass;
    let mut mass_ok = true;
    let mut worst_mass = 0.0f64;
    for (k, v) in traj6.states.iter().enumerate().step_by(250) {
        let m = reconstruct_physical(
            &l.profile,
            &l.basis,
            &LagrangianState::new(v.clone(), traj6.times[k]),
            16,
            DEFAULT_MARGIN,
        )
        .unwrap()
        .mass;
        let rel = ((m - mass0) / mass0).abs();
        worst_mass = worst_mass.max(rel);
        if rel >= 1e-10 {
            mass_ok = false;
        }
    }
    criterion(
        &mut outcomes,
        "criterion 8",
        front_ok && mass_ok,
        format!(
            "worst scaled-velocity deviation {worst_front:.3e} (limit 5e-2), worst mass drift {worst_mass:.2e}"
        ),
    );

    // ---------- 9: gradient consistency via finite differences ------------
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut slopes_ok = true;
    let mut worst_slope = 2.0f64;
    for _ in 0..20 {
        let v = random_field(l.basis.dim, 10, &mut rng).scale(0.01);
        let w = random_field(l.basis.dim, 10, &mut rng).scale(0.01);
        let pairing = gradient_inner(&l.profile, &l.basis, &v, &w);
        let mut ln_eps = Vec::new();
        let mut ln_def = Vec::new();
        for &eps in &[1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)] {
            let ep = energy(&l.profile, &l.basis, &v.add(&w.scale(eps)), DEFAULT_MARGIN).unwrap();
            let em = energy(&l.profile, &l.basis, &v.add(&w.scale(-eps)), DEFAULT_MARGIN).unwrap();
            let defect = ((ep - em) / (2.0 * eps) - pairing).abs();
            ln_eps.push(eps.ln());
            ln_def.push(defect.max(1e-300).ln());
        }
        let n = ln_eps.len() as f64;
        let xm = ln_eps.iter().sum::<f64>() / n;
        let ym = ln_def.iter().sum::<f64>() / n;
        let sxy: f64 = ln_eps.iter().zip(&ln_def).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = ln_eps.iter().map(|x| (x - xm) * (x - xm)).sum();
        let slope = sxy / sxx;
        if (slope - worst_slope).abs() > (worst_slope - 2.0).abs() {
            worst_slope = slope;
        }
        if !(1.9..=2.1).contains(&slope) {
            slopes_ok = false;
        }
    }
    criterion(
        &mut outcomes,
        "criterion 9",
        slopes_ok,
        format!("log-log FD slopes within 2.0 +- 0.1 for 20 pairs (worst {worst_slope:.4})"),
    );

    // ---------- 10: inequality-probe constants under refinement -----------
    let doubled = lab_from_profile(
        Profile::deserialize(&l.profile.serialize()).unwrap(),
        128,
        400,
        12,
    );
    let probes = |lb: &common::Lab, coeff_sets: &[Vec<f64>]| -> (f64, f64, f64) {
        let mut hardy = 0.0f64;
        let mut interp = 0.0f64;
        let mut embed = 0.0f64;
        for cs in coeff_sets {
            let mut v = Field::zeros(lb.basis.dim);
            for (k, &c) in cs.iter().enumerate() {
                v.coeffs[k] = c;
            }
            let hp = hardy_probe(&lb.basis, 1.0, &v).unwrap();
            hardy = hardy.max(hp.ratio());
            let ip = interp_probe(&lb.table, &v, 2, 1, 1, 1.0).unwrap();
            interp = interp.max(ip.lhs / ip.rhs.max(f64::MIN_POSITIVE));
            let cp = c0_embed_probe(&lb.table, &lb.basis, &v, 1, 1).unwrap();
            embed = embed.max(cp.sup_weighted / cp.bound.max(f64::MIN_POSITIVE));
        }
        (hardy, interp, embed)
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let coeff_sets: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let f = random_field(64, 10, &mut rng);
            f.coeffs.iter().take(11).copied().collect()
        })
        .collect();
    let base = probes(l, &coeff_sets);
    let fine = probes(&doubled, &coeff_sets);
    let rel = |a: f64, b: f64| ((a - b) / a).abs();
    let all_finite =
        [base.0, base.1, base.2, fine.0, fine.1, fine.2].iter().all(|c| c.is_finite() && *c > 0.0);
    let stable = rel(base.0, fine.0) < 0.05 && rel(base.1, fine.1) < 0.05 && rel(base.2, fine.2) < 0.05;
    criterion(
        &mut outcomes,
        "criterion 10",
        all_finite && stable,
        format!(
            "hardy {:.6} ({:+.2e}), interp {:.6} ({:+.2e}), embed {:.6} ({:+.2e})",
            base.0,
            fine.0 - base.0,
            base.1,
            fine.1 - base.1,
            base.2,
            fine.2 - base.2
        ),
    );

    // ---------- report -----------------------------------------------------
    let mut failures = 0;
    for o in &outcomes {
        println!("{}: {} ({})", o.name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criterion(s) failed");
}
