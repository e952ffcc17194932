//! Command-line front door: profile solves, spectrum computation,
//! linear/nonlinear evolutions, and a verification suite, driven by a
//! strictly parsed TOML config with flag overrides.

use clap::{Parser, Subcommand};
use gravity_thinfilm::basis::{Basis, Field};
use gravity_thinfilm::config::RunConfig;
use gravity_thinfilm::error::{Error, Result};
use gravity_thinfilm::linear::{constant_mode_rate, evolve_linear, Source, Trajectory};
use gravity_thinfilm::nonlinear::{
    evolve_nonlinear, eval_nonlinearity, front_report, reconstruct_physical, LagrangianState,
};
use gravity_thinfilm::operator::{assemble_forms, compute_spectrum, OperatorForms};
use gravity_thinfilm::profile::{solve_profile, verify_profile, Profile, ProfileParams};
use gravity_thinfilm::quadrature::build_quadrature;
use gravity_thinfilm::report::{fmt17, write_json, Csv};
use gravity_thinfilm::spaces::{build_norm_table, NormTable};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gravity-thinfilm",
    about = "Self-similar profile, spectral gap, and relaxation dynamics of the thin-film equation with gravity"
)]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output].directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the profile ODE and write the serialized profile + report.
    Profile {
        /// Center height U(0) (overrides [profile].u0).
        #[arg(long)]
        u0: Option<f64>,
        /// Chebyshev fit degree (overrides [profile].fit_degree).
        #[arg(long)]
        fit_degree: Option<usize>,
    },
    /// Assemble the Hessian forms and export the low spectrum.
    Spectrum {
        /// Trial-space dimension (overrides [discretization].basis_dim).
        #[arg(long)]
        basis_dim: Option<usize>,
        /// Number of eigenpairs to export.
        #[arg(long, default_value_t = 8)]
        eigenpairs: usize,
        /// Load a previously written profile file instead of re-solving.
        #[arg(long)]
        profile_file: Option<PathBuf>,
    },
    /// Implicit-Euler linear evolution dV/ds + L V = 0.
    Linear {
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        s_max: Option<f64>,
        /// Fail (exit 3) if the fitted rate misses the constant-mode value.
        #[arg(long)]
        check: bool,
    },
    /// Semi-implicit nonlinear evolution dV/ds + grad E[x+V] = 0.
    Nonlinear {
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fail (exit 3) on rate/energy check violations.
        #[arg(long)]
        check: bool,
    },
    /// Run the built-in verification suite (exit 3 on any failure).
    Verify,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

struct Lab {
    cfg: RunConfig,
    out: PathBuf,
    profile: Profile,
    basis: Basis,
    table: NormTable,
    forms: OperatorForms,
}

fn setup(cfg: RunConfig, out: PathBuf, profile: Option<Profile>) -> Result<Lab> {
    std::fs::create_dir_all(&out)?;
    let profile = match profile {
        Some(p) => p,
        None => {
            let mut params = ProfileParams::for_u0(cfg.profile.u0);
            params.ode_tol = cfg.profile.ode_tol;
            params.fit_degree = cfg.profile.fit_degree;
            if let Some(b) = cfg.profile.q_bracket {
                params.q_bracket = b;
            }
            solve_profile(&params)?
        }
    };
    let quad = build_quadrature(&profile, cfg.discretization.quad_n)?;
    let basis = Basis::new(
        profile.ell,
        cfg.discretization.basis_dim,
        quad,
        cfg.discretization.k_max.max(4),
    )?;
    let table = build_norm_table(&profile, &basis, cfg.discretization.k_max)?;
    let forms = assemble_forms(&profile, &basis)?;
    Ok(Lab {
        cfg,
        out,
        profile,
        basis,
        table,
        forms,
    })
}

fn load_config(cli_config: &Option<PathBuf>) -> Result<RunConfig> {
    match cli_config {
        Some(path) => RunConfig::from_file(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.config)?;
    let out = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));

    match cli.cmd {
        Cmd::Profile { u0, fit_degree } => {
            if let Some(u0) = u0 {
                cfg.profile.u0 = u0;
            }
            if let Some(d) = fit_degree {
                cfg.profile.fit_degree = d;
            }
            cfg.validate()?;
            cmd_profile(cfg, out)
        }
        Cmd::Spectrum {
            basis_dim,
            eigenpairs,
            profile_file,
        } => {
            if let Some(d) = basis_dim {
                cfg.discretization.basis_dim = d;
            }
            cfg.validate()?;
            let profile = match &profile_file {
                Some(path) => Some(Profile::from_file(path)?),
                None => None,
            };
            cmd_spectrum(cfg, out, profile, eigenpairs)
        }
        Cmd::Linear { h, s_max, check } => {
            if let Some(h) = h {
                cfg.linear.h = h;
            }
            if let Some(s) = s_max {
                cfg.linear.s_max = s;
            }
            cfg.validate()?;
            cmd_linear(cfg, out, check)
        }
        Cmd::Nonlinear {
            h,
            s_max,
            seed,
            check,
        } => {
            if let Some(h) = h {
                cfg.nonlinear.h = h;
            }
            if let Some(s) = s_max {
                cfg.nonlinear.s_max = s;
            }
            if let Some(seed) = seed {
                cfg.nonlinear.v0.seed = seed;
            }
            cfg.validate()?;
            cmd_nonlinear(cfg, out, check)
        }
        Cmd::Verify => {
            cfg.validate()?;
            cmd_verify(cfg, out)
        }
    }
}

fn cmd_profile(cfg: RunConfig, out: PathBuf) -> Result<()> {
    let mut params = ProfileParams::for_u0(cfg.profile.u0);
    params.ode_tol = cfg.profile.ode_tol;
    params.fit_degree = cfg.profile.fit_degree;
    if let Some(b) = cfg.profile.q_bracket {
        params.q_bracket = b;
    }
    let profile = solve_profile(&params)?;
    std::fs::create_dir_all(&out)?;
    profile.to_file(&out.join("profile.txt"))?;
    let report = verify_profile(&profile, 4096);
    write_json(&out.join("profile_report.json"), &report)?;
    println!(
        "profile: U0 = {}, ell = {}, U0'' = {}",
        fmt17(profile.u0),
        fmt17(profile.ell),
        fmt17(profile.u0pp)
    );
    println!(
        "residuals: ode = {:.3e}, phi identity = {:.3e}",
        report.max_ode_residual, report.max_phi_identity_residual
    );
    if !report.passes(profile.residual_tol) {
        return Err(Error::Check(format!(
            "profile verification failed (ode residual {:.3e} vs tol {:.1e})",
            report.max_ode_residual, profile.residual_tol
        )));
    }
    Ok(())
}

fn cmd_spectrum(cfg: RunConfig, out: PathBuf, profile: Option<Profile>, m: usize) -> Result<()> {
    let lab = setup(cfg, out, profile)?;
    let spec = compute_spectrum(&lab.forms, m.min(lab.basis.dim))?;
    let mut csv = Csv::new(&["index", "eigenvalue", "residual"]);
    for (i, (ev, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        csv.row(&[i.to_string(), fmt17(*ev), fmt17(*r)]);
    }
    csv.write(&lab.out.join("spectrum.csv"))?;
    println!("lambda_1 = {}", fmt17(spec.eigenvalues[0]));

    // checks: gap anchor and the exact eigenpair L x = x
    if (spec.eigenvalues[0] - 0.2).abs() > 1e-6 {
        return Err(Error::Check(format!(
            "lambda_1 = {} misses the spectral gap 0.2",
            fmt17(spec.eigenvalues[0])
        )));
    }
    let fx = lab.basis.field_x();
    let ax = &lab.forms.a * &fx.coeffs;
    let mx = &lab.forms.m * &fx.coeffs;
    let res_x = (&ax - &mx).norm() / ax.norm();
    if res_x > 1e-6 {
        return Err(Error::Check(format!(
            "x-eigenpair residual {res_x:.3e} exceeds 1e-6"
        )));
    }
    println!("x-eigenpair residual = {res_x:.3e}");
    Ok(())
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory, nonlinear: bool) -> Result<()> {
    let mut header: Vec<String> = vec!["s".into(), "norm_u".into(), "norm_u2".into()];
    for k in &traj.k_list {
        header.push(format!("norm_{k}"));
    }
    if nonlinear {
        header.extend(["energy".into(), "nonlin_norm".into(), "margin".into()]);
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for d in &traj.diagnostics {
        let mut row = vec![d.s, d.norm_u, d.norm_u2];
        row.extend(&d.norms_k);
        if nonlinear {
            row.push(d.energy.unwrap_or(f64::NAN));
            row.push(d.nonlin_norm.unwrap_or(f64::NAN));
            row.push(d.margin.unwrap_or(f64::NAN));
        }
        csv.row_floats(&row);
    }
    csv.write(path)?;
    Ok(())
}

#[derive(serde::Serialize)]
struct RateSummary {
    h: f64,
    s_max: f64,
    window: (f64, f64),
    fitted_rate: f64,
    r2: f64,
    constant_mode_rate: f64,
    truncated: Option<String>,
}

fn cmd_linear(cfg: RunConfig, out: PathBuf, check: bool) -> Result<()> {
    let lab = setup(cfg, out, None)?;
    let v0 = lab.cfg.linear.v0.build(&lab.basis, &lab.table)?;
    let traj = evolve_linear(
        &lab.forms,
        &lab.table,
        &v0,
        &Source::Zero,
        lab.cfg.linear.h,
        lab.cfg.linear.s_max,
        &lab.cfg.linear.k_list,
    )?;
    write_trajectory_csv(&lab.out.join("linear_trajectory.csv"), &traj, false)?;
    let window = traj.default_window();
    let fit = traj.fit_decay_rate(window)?;
    let expected = constant_mode_rate(traj.h);
    let summary = RateSummary {
        h: traj.h,
        s_max: lab.cfg.linear.s_max,
        window,
        fitted_rate: fit.rate,
        r2: fit.r2,
        constant_mode_rate: expected,
        truncated: None,
    };
    write_json(&lab.out.join("linear_summary.json"), &summary)?;
    println!(
        "linear: fitted rate = {} (constant-mode rate {})",
        fmt17(fit.rate),
        fmt17(expected)
    );
    if check && lab.cfg.linear.v0.kind == "constant" && (fit.rate - expected).abs() > 1e-10 {
        return Err(Error::Check(format!(
            "fitted rate {} differs from the exact geometric rate {}",
            fmt17(fit.rate),
            fmt17(expected)
        )));
    }
    Ok(())
}

fn cmd_nonlinear(cfg: RunConfig, out: PathBuf, check: bool) -> Result<()> {
    let lab = setup(cfg, out, None)?;
    let nl = &lab.cfg.nonlinear;
    let v0 = nl.v0.build(&lab.basis, &lab.table)?;
    let traj = evolve_nonlinear(
        &lab.profile,
        &lab.basis,
        &lab.forms,
        &lab.table,
        &v0,
        nl.h,
        nl.s_max,
        nl.margin,
        nl.smallness_gate,
        &nl.k_list,
    )?;
    write_trajectory_csv(&lab.out.join("nonlinear_trajectory.csv"), &traj, true)?;

    // physical snapshots + fronts
    if nl.snapshot_stride > 0 {
        let mut snap_csv = Csv::new(&["t", "y", "h"]);
        for (j, state) in traj.states.iter().enumerate().step_by(nl.snapshot_stride) {
            let st = LagrangianState::new(state.clone(), traj.times[j]);
            if let Ok(snap) = reconstruct_physical(&lab.profile, &lab.basis, &st, 64, nl.margin) {
                for (y, hgt) in &snap.samples {
                    snap_csv.row_floats(&[snap.t, *y, *hgt]);
                }
            }
        }
        snap_csv.write(&lab.out.join("snapshots.csv"))?;
        let rows = front_report(&lab.profile, &lab.basis, &traj, nl.snapshot_stride);
        let mut front_csv = Csv::new(&[
            "t",
            "y_minus",
            "y_plus",
            "v_minus",
            "v_plus",
            "scaled_v_minus",
            "scaled_v_plus",
        ]);
        for r in &rows {
            front_csv.row_floats(&[
                r.t,
                r.y_minus,
                r.y_plus,
                r.v_minus,
                r.v_plus,
                r.scaled_minus,
                r.scaled_plus,
            ]);
        }
        front_csv.write(&lab.out.join("fronts.csv"))?;
    }

    let window = traj.default_window();
    let expected = constant_mode_rate(traj.h);
    if let Some(msg) = &traj.truncated {
        let summary = RateSummary {
            h: traj.h,
            s_max: nl.s_max,
            window,
            fitted_rate: f64::NAN,
            r2: f64::NAN,
            constant_mode_rate: expected,
            truncated: traj.truncated.clone(),
        };
        write_json(&lab.out.join("nonlinear_summary.json"), &summary)?;
        return Err(Error::Dynamics(format!("run truncated: {msg}")));
    }
    let fit = traj.fit_decay_rate(window)?;
    let summary = RateSummary {
        h: traj.h,
        s_max: nl.s_max,
        window,
        fitted_rate: fit.rate,
        r2: fit.r2,
        constant_mode_rate: expected,
        truncated: None,
    };
    write_json(&lab.out.join("nonlinear_summary.json"), &summary)?;
    println!(
        "nonlinear: fitted rate = {} (constant-mode rate {})",
        fmt17(fit.rate),
        fmt17(expected)
    );
    if check {
        // energy must be non-increasing along the trajectory
        let energies: Vec<f64> = traj
            .diagnostics
            .iter()
            .filter_map(|d| d.energy)
            .collect();
        for w in energies.windows(2) {
            if w[1] > w[0] + 1e-12 * w[0].abs().max(1.0) {
                return Err(Error::Check(format!(
                    "energy increased along a step: {} -> {}",
                    fmt17(w[0]),
                    fmt17(w[1])
                )));
            }
        }
        if (fit.rate - 0.2).abs() > 0.02 * 0.2 + (expected - 0.2).abs() {
            return Err(Error::Check(format!(
                "fitted nonlinear rate {} misses 0.2 beyond tolerance",
                fmt17(fit.rate)
            )));
        }
    }
    Ok(())
}

fn cmd_verify(cfg: RunConfig, out: PathBuf) -> Result<()> {
    let lab = setup(cfg, out, None)?;
    let mut failures = 0usize;
    let mut check = |name: &str, pass: bool, detail: String| {
        println!("{}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failures += 1;
        }
    };

    let report = verify_profile(&lab.profile, 4096);
    check(
        "profile residuals",
        report.max_ode_residual < 1e-8 && report.max_phi_identity_residual < 1e-8,
        format!(
            "ode {:.2e}, phi {:.2e}",
            report.max_ode_residual, report.max_phi_identity_residual
        ),
    );
    check(
        "profile touchdown bounds",
        report.u_ratio.0 > 0.0 && report.phi_ratio.0 > 0.0 && report.upp_at_ell > 0.0,
        format!(
            "U ratio [{:.3e}, {:.3e}], Phi ratio [{:.3e}, {:.3e}]",
            report.u_ratio.0, report.u_ratio.1, report.phi_ratio.0, report.phi_ratio.1
        ),
    );

    let spec = compute_spectrum(&lab.forms, 4)?;
    check(
        "spectral gap lambda_1 = 0.2",
        (spec.eigenvalues[0] - 0.2).abs() < 1e-8,
        format!("lambda_1 = {}", fmt17(spec.eigenvalues[0])),
    );
    let fx = lab.basis.field_x();
    let ax = &lab.forms.a * &fx.coeffs;
    let mx = &lab.forms.m * &fx.coeffs;
    let res_x = (&ax - &mx).norm() / ax.norm();
    check(
        "dilation eigenpair L x = x",
        res_x < 1e-6,
        format!("residual {res_x:.2e}"),
    );

    let h = 0.02;
    let v0 = Field::constant(1.0, lab.basis.dim);
    let traj = evolve_linear(&lab.forms, &lab.table, &v0, &Source::Zero, h, 5.0, &[2])?;
    let fit = traj.fit_decay_rate(traj.default_window())?;
    check(
        "linear constant-mode rate",
        (fit.rate - constant_mode_rate(h)).abs() < 1e-10,
        format!("rate {}", fmt17(fit.rate)),
    );

    let n0 = eval_nonlinearity(
        &lab.profile,
        &lab.basis,
        &lab.forms,
        &Field::zeros(lab.basis.dim),
        0.1,
    )?;
    check(
        "nonlinear stationarity N[0] = 0",
        lab.forms.norm_u(&n0) < 1e-7,
        format!("|N[0]|_U = {:.2e}", lab.forms.norm_u(&n0)),
    );

    if failures > 0 {
        return Err(Error::Check(format!("{failures} verification check(s) failed")));
    }
    println!("all verification checks passed");
    Ok(())
}
