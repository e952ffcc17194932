//! Integration tests of the quadrature, the weighted norm scale, and the
//! inequality probes against closed-form polynomial integrals.

mod common;

use common::lab;
use gravity_thinfilm::basis::{random_field, Field};
use gravity_thinfilm::quadrature::build_quadrature_on;
use gravity_thinfilm::spaces::{c0_embed_probe, hardy_probe, interp_probe, poly_weight_integral};
use nalgebra::DMatrix;
use rand::SeedableRng;

const MASS_1: f64 = 4.089_748_846_891_056_1; // int U dx at U0 = 1
const X2_MOMENT_1: f64 = 8.174_640_205_816_110_9; // int x^2 U dx at U0 = 1

#[test]
fn quadrature_integrates_polynomials_exactly() {
    let l = lab();
    let ell = l.profile.ell;
    let total: f64 = l.basis.quad.weights.iter().sum();
    assert!((total - 2.0 * ell).abs() < 1e-13 * ell);
    let w2 = l.basis.quad.integrate(|x| (ell * ell - x * x).powi(2));
    let exact = poly_weight_integral(2, 0, ell);
    assert!(((w2 - exact) / exact).abs() < 1e-13);
    let w3x2 = l.basis.quad.integrate(|x| (ell * ell - x * x).powi(3) * x * x);
    let exact = poly_weight_integral(3, 1, ell);
    assert!(((w3x2 - exact) / exact).abs() < 1e-13);
}

#[test]
fn profile_moments_match_frozen_values_and_refine_stably() {
    let l = lab();
    let mass = l.basis.quad.integrate(|x| l.profile.eval(x, 0));
    assert!((mass - MASS_1).abs() < 1e-9, "mass = {mass:.17e}");
    let odd = l.basis.quad.integrate(|x| x * l.profile.eval(x, 0));
    assert!(odd.abs() < 1e-12, "odd moment = {odd:.3e}");
    let x2 = l.basis.quad.integrate(|x| x * x * l.profile.eval(x, 0));
    assert!((x2 - X2_MOMENT_1).abs() < 1e-8, "x^2 moment = {x2:.17e}");
    // refinement stability
    let fine = build_quadrature_on(l.profile.ell, 400).unwrap();
    let mass_fine = fine.integrate(|x| l.profile.eval(x, 0));
    assert!((mass - mass_fine).abs() < 1e-12);
}

#[test]
fn norm_of_constants_has_only_the_zeroth_term() {
    let l = lab();
    let one = Field::constant(1.0, l.basis.dim);
    let expect = poly_weight_integral(2, 0, l.profile.ell).sqrt();
    for k in [0usize, 1, 6, 12] {
        let n = l.table.norm_k(&one, k);
        assert!(((n - expect) / expect).abs() < 1e-13, "k = {k}: {n:.17e}");
    }
    assert_eq!(l.table.norm_k(&Field::zeros(l.basis.dim), 12), 0.0);
}

#[test]
fn norm_of_x_matches_the_closed_form() {
    let l = lab();
    let ell = l.profile.ell;
    let fx = l.basis.field_x();
    let exact = (poly_weight_integral(2, 1, ell) + poly_weight_integral(3, 0, ell)).sqrt();
    let n = l.table.norm_k(&fx, 1);
    assert!(((n - exact) / exact).abs() < 1e-13, "{n:.17e} vs {exact:.17e}");
    // semi-norms of x: [x]_0^2 = int (l^2-x^2)^2 x^2, [x]_1^2 = int (l^2-x^2)^3
    let s0 = l.table.seminorm_k(&fx, 0);
    let s1 = l.table.seminorm_k(&fx, 1);
    assert!(((s0 * s0 - poly_weight_integral(2, 1, ell)) / (s0 * s0)).abs() < 1e-13);
    assert!(((s1 * s1 - poly_weight_integral(3, 0, ell)) / (s1 * s1)).abs() < 1e-13);
    for k in 2..=12usize {
        assert_eq!(l.table.seminorm_k(&fx, k), 0.0, "higher derivatives of x vanish");
    }
}

#[test]
fn norms_decompose_into_seminorms_at_matrix_level() {
    let l = lab();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let v = random_field(l.basis.dim, 20, &mut rng);
        for k in 1..=12usize {
            let nk = l.table.norm_k(&v, k).powi(2);
            let nk1 = l.table.norm_k(&v, k - 1).powi(2);
            let sk = l.table.seminorm_k(&v, k).powi(2);
            assert!(
                (nk - nk1 - sk).abs() <= 1e-12 * nk.max(1.0),
                "k = {k}: {nk} vs {nk1} + {sk}"
            );
        }
    }
}

#[test]
fn metric_matrices_are_spd_and_coercive() {
    let l = lab();
    assert!((&l.table.m - l.table.m.transpose()).norm() < 1e-12 * l.table.m.norm());
    assert!((&l.table.a - l.table.a.transpose()).norm() < 1e-12 * l.table.a.norm());
    assert!(nalgebra::Cholesky::new(l.table.m.clone()).is_some(), "M is SPD");
    // A - (1/5) M is positive semi-definite
    let gap: DMatrix<f64> = &l.table.a - &l.table.m * 0.2;
    let eig = nalgebra::SymmetricEigen::new((&gap + gap.transpose()) * 0.5);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > -1e-10 * l.table.a.norm(), "min eig of A - M/5 = {min:.3e}");
}

#[test]
fn hardy_probe_trivial_and_closed_form_cases() {
    let l = lab();
    let ell = l.profile.ell;
    let one = Field::constant(1.0, l.basis.dim);
    let h = hardy_probe(&l.basis, 0.0, &one).unwrap();
    assert!((h.lhs - 2.0 * ell).abs() < 1e-12 * ell);
    assert!((h.rhs_zeroth - 2.0 * ell).abs() < 1e-12 * ell);
    assert!(h.rhs_deriv.abs() < 1e-12);
    // V = (l^2 - x^2), beta = 1: all three integrals in closed form
    let mut v = Field::zeros(l.basis.dim);
    v.coeffs[0] = ell * ell; // l^2 - x^2 = l^2 P_0 - l^2 (2 P_2 + P_0)/3
    v.coeffs[0] -= ell * ell / 3.0;
    v.coeffs[2] = -2.0 * ell * ell / 3.0;
    let h = hardy_probe(&l.basis, 1.0, &v).unwrap();
    let lhs_exact = poly_weight_integral(3, 0, ell);
    let z_exact = poly_weight_integral(2, 0, ell);
    let d_exact = 4.0 * poly_weight_integral(3, 1, ell);
    assert!(((h.lhs - lhs_exact) / lhs_exact).abs() < 1e-12);
    assert!(((h.rhs_zeroth - z_exact) / z_exact).abs() < 1e-12);
    assert!(((h.rhs_deriv - d_exact) / d_exact).abs() < 1e-12);
    assert!(hardy_probe(&l.basis, -1.5, &one).is_err());
}

#[test]
fn hardy_constant_is_finite_and_quadrature_stable() {
    let l = lab();
    let fine = common::lab_from_profile(
        gravity_thinfilm::profile::Profile::deserialize(&l.profile.serialize()).unwrap(),
        64,
        400,
        12,
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut worst_fine = 0.0f64;
    for _ in 0..200 {
        let v = random_field(64, 10, &mut rng);
        let c = hardy_probe(&l.basis, 1.0, &v).unwrap().ratio();
        let cf = hardy_probe(&fine.basis, 1.0, &v).unwrap().ratio();
        worst = worst.max(c);
        worst_fine = worst_fine.max(cf);
    }
    assert!(worst.is_finite() && worst > 0.0);
    assert!(
        ((worst - worst_fine) / worst).abs() < 1e-10,
        "integer-weight probes are quadrature-exact: {worst} vs {worst_fine}"
    );
}

#[test]
fn interp_probe_examples() {
    let l = lab();
    let ell = l.profile.ell;
    let one = Field::constant(1.0, l.basis.dim);
    let p = interp_probe(&l.table, &one, 2, 1, 1, 1.0).unwrap();
    assert_eq!(p.lhs, 0.0);
    assert!(p.rhs >= 0.0);
    // V = x^2: [V]_2 = 2 sqrt(I(4,0)), [V]_1 = 2 sqrt(I(3,1)), [V]_3 = 0
    let mut v = Field::zeros(l.basis.dim);
    v.coeffs[0] = ell * ell / 3.0;
    v.coeffs[2] = 2.0 * ell * ell / 3.0;
    let p = interp_probe(&l.table, &v, 2, 1, 1, 1.0).unwrap();
    let lhs_exact = 2.0 * poly_weight_integral(4, 0, ell).sqrt();
    let rhs_exact = 2.0 * poly_weight_integral(3, 1, ell).sqrt();
    assert!(((p.lhs - lhs_exact) / lhs_exact).abs() < 1e-12);
    assert!(((p.rhs - rhs_exact) / rhs_exact).abs() < 1e-12);
    assert!(interp_probe(&l.table, &v, 2, 3, 1, 1.0).is_err());
    assert!(interp_probe(&l.table, &v, 10, 1, 4, 1.0).is_err());
    assert!(interp_probe(&l.table, &v, 2, 1, 1, 0.0).is_err());
}

#[test]
fn c0_embedding_probe_examples() {
    let l = lab();
    let ell = l.profile.ell;
    let one = Field::constant(1.0, l.basis.dim);
    let p = c0_embed_probe(&l.table, &l.basis, &one, 2, 0).unwrap();
    assert_eq!(p.k, 0);
    assert!(((p.sup_weighted - ell.powi(4)) / ell.powi(4)).abs() < 1e-12);
    assert!(p.bound > 0.0);
    let fx = l.basis.field_x();
    let p = c0_embed_probe(&l.table, &l.basis, &fx, 1, 1).unwrap();
    assert_eq!(p.k, 4);
    assert!(((p.sup_weighted - ell * ell) / (ell * ell)).abs() < 1e-12);
    // k = 2d + 4 - 2n out of range
    assert!(c0_embed_probe(&l.table, &l.basis, &fx, 3, 0).is_err());
    assert!(c0_embed_probe(&l.table, &l.basis, &fx, 0, 5).is_err());
}

#[test]
fn probe_ratios_are_bounded_over_random_draws() {
    let l = lab();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut sup_ratio = 0.0f64;
    for _ in 0..200 {
        let v = random_field(l.basis.dim, 10, &mut rng);
        let p = c0_embed_probe(&l.table, &l.basis, &v, 1, 1).unwrap();
        assert!(p.bound > 0.0);
        sup_ratio = sup_ratio.max(p.sup_weighted / p.bound);
    }
    assert!(sup_ratio.is_finite() && sup_ratio > 0.0);
}
