mod common;

use common::*;
use lrfd::coherence::recovery_error;
use lrfd::linalg::{norm, normalize_columns, pinv, svt, DenseMatrix, NormKind};
use lrfd::observation::project_omega;
use lrfd::solvers::*;
use lrfd::synth::{add_observation_noise, NoiseSpec};
use lrfd::ObservationSet;
use proptest::prelude::*;

fn planted(m: usize, n: usize, r: usize, frac: f64, seed: u64) -> (DenseMatrix, ObservationSet) {
    (low_rank(m, n, r, seed), ObservationSet::sample_fraction(m, n, frac, seed ^ 0xabc).unwrap())
}

fn op_norm_sq(a: &DenseMatrix) -> f64 {
    norm(a, NormKind::Operator).unwrap().powi(2)
}

/// Central difference of `f` at `z` along every coordinate.
fn numeric_gradient(z: &DenseMatrix, f: impl Fn(&DenseMatrix) -> f64) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(z.rows(), z.cols());
    let h = 1e-5;
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            let mut p = z.clone();
            p[(i, j)] += h;
            let mut q = z.clone();
            q[(i, j)] -= h;
            g[(i, j)] = (f(&p) - f(&q)) / (2.0 * h);
        }
    }
    g
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        let x = gaussian(8, 8, seed);
        let omega = ObservationSet::sample_fraction(8, 8, 0.5, seed).unwrap();
        let l = gaussian(8, 8, seed + 100);
        let lambda = 3.0;
        let g = cono_smooth_gradient(&l, &x, &omega, lambda).unwrap();
        let fd = numeric_gradient(&l, |l| cono_smooth_term(l, &x, &omega, lambda).unwrap());
        assert!(fd.distance(&g).unwrap() / g.frobenius_norm() < 1e-5);

        let a = gaussian(8, 5, seed + 200);
        let z = gaussian(5, 8, seed + 300);
        let g = lrfd_smooth_gradient(&z, &x, &a, &omega, lambda).unwrap();
        let fd = numeric_gradient(&z, |z| lrfd_smooth_term(z, &x, &a, &omega, lambda).unwrap());
        assert!(fd.distance(&g).unwrap() / g.frobenius_norm() < 1e-5);
    }
}

#[test]
fn plain_steps_never_increase_the_objective() {
    for seed in 0..100 {
        let (m, n) = (6 + (seed % 5) as usize, 5 + (seed % 4) as usize);
        let x = gaussian(m, n, seed);
        let omega = ObservationSet::sample_fraction(m, n, 0.6, seed).unwrap();
        let lambda = [0.5, 10.0, 1e3][seed as usize % 3];
        let mut l = project_omega(&x, &omega).unwrap();
        let mut f = cono_objective(&l, &x, &omega, lambda).unwrap();
        let a = gaussian(m, 4, seed + 1);
        let lip = op_norm_sq(&a);
        let mut z = DenseMatrix::zeros(4, n);
        let mut g = lrfd_objective(&z, &x, &a, &omega, lambda).unwrap();
        for _ in 0..20 {
            l = cono_step(&l, &x, &omega, lambda).unwrap();
            let f2 = cono_objective(&l, &x, &omega, lambda).unwrap();
            assert!(f2 <= f + 1e-12 * f.abs().max(1.0), "seed {seed}: {f} -> {f2}");
            f = f2;
            z = lrfd_step(&z, &x, &a, &omega, lambda, lip).unwrap();
            let g2 = lrfd_objective(&z, &x, &a, &omega, lambda).unwrap();
            assert!(g2 <= g + 1e-12 * g.abs().max(1.0), "seed {seed}: {g} -> {g2}");
            g = g2;
        }
    }
}

#[test]
fn identity_dictionary_reproduces_completion_iterates() {
    for seed in 0..20 {
        let (m, n) = (10 + seed as usize, 12);
        let x = gaussian(m, n, seed);
        let omega = ObservationSet::sample_fraction(m, n, 0.5, seed).unwrap();
        let id = DenseMatrix::identity(m);
        let mut l = project_omega(&x, &omega).unwrap();
        let mut z = l.clone();
        for _ in 0..30 {
            l = cono_step(&l, &x, &omega, 5.0).unwrap();
            z = lrfd_step(&z, &x, &id, &omega, 5.0, 1.0).unwrap();
            assert!(l.distance(&z).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn identity_dictionary_solution_matches_completion() {
    for seed in 0..5 {
        let (l0, omega) = planted(30, 25, 3, 0.6, seed);
        let cfg = SolverConfig {
            lambda: 50.0,
            rel_tol: 1e-10,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let c = solve_cono(&l0, &omega, &cfg).unwrap();
        let d = solve_lrfd(&l0, &DenseMatrix::identity(30), &omega, &cfg).unwrap();
        assert!(rel_diff(&d.reconstruction, &c.reconstruction) < 1e-6);
    }
}

#[test]
fn full_observation_is_the_prox() {
    let x = gaussian(7, 9, 3);
    let cfg = SolverConfig::with_lambda(2.0);
    let rep = solve_cono(&x, &ObservationSet::full(7, 9), &cfg).unwrap();
    assert!(rep.solution.distance(&svt(&x, 0.5).unwrap()).unwrap() < 1e-12);
}

#[test]
fn planted_recovery() {
    let (l0, omega) = planted(60, 60, 3, 0.7, 11);
    let rep = solve_cono(&l0, &omega, &SolverConfig::with_lambda(1e6)).unwrap();
    assert!(rep.converged);
    assert!(recovery_error(&rep.reconstruction, &l0).unwrap() < 1e-3);
    assert!(cono_fixed_point_residual(&rep.solution, &l0, &omega, 1e6).unwrap() <= 10.0 * 1e-7);
}

#[test]
fn lrfd_stationarity_and_oracle_dictionary() {
    let (l0, omega) = planted(60, 60, 3, 0.5, 12);
    let a = normalize_columns(&l0).unwrap();
    let cfg = SolverConfig::with_lambda(1e6);
    let rep = solve_lrfd(&l0, &a, &omega, &cfg).unwrap();
    assert!(rep.converged);
    let res = lrfd_fixed_point_residual(&rep.solution, &l0, &a, &omega, 1e6, op_norm_sq(&a)).unwrap();
    assert!(res <= 10.0 * cfg.rel_tol, "residual {res}");
    let target = pinv(&a).unwrap().matmul(&l0).unwrap();
    let err = rep.solution.distance(&target).unwrap() / target.frobenius_norm();
    assert!(err < 1e-4, "Z* vs A⁺L₀: {err}");
    assert!(rel_diff(&rep.reconstruction, &a.matmul(&rep.solution).unwrap()) < 1e-12);
}

#[test]
fn report_invariants() {
    for (seed, accel) in [(1, false), (2, true), (3, false), (4, true)] {
        let (l0, omega) = planted(25, 20, 2, 0.5, seed);
        let cfg = SolverConfig {
            lambda: 1e3,
            acceleration: accel,
            continuation: false,
            max_iters: 400,
            ..SolverConfig::default()
        };
        let rep = solve_cono(&l0, &omega, &cfg).unwrap();
        assert_eq!(rep.objective_trace.len(), rep.iterations);
        if !accel {
            assert!(rep.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        }
        if rep.converged {
            assert!(rep.terminal_relative_change <= cfg.rel_tol);
        }
        let f = cono_objective(&rep.solution, &l0, &omega, 1e3).unwrap();
        assert!((rep.objective - f).abs() <= 1e-9 * f);
    }
}

#[test]
fn non_convergence_is_reported_not_raised() {
    let (l0, omega) = planted(30, 30, 5, 0.4, 5);
    let cfg = SolverConfig {
        lambda: 1e6,
        max_iters: 3,
        ..SolverConfig::default()
    };
    let rep = solve_cono(&l0, &omega, &cfg).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 3);
}

#[test]
fn invalid_inputs() {
    let (l0, omega) = planted(10, 10, 2, 0.5, 1);
    assert!(solve_cono(&l0, &omega, &SolverConfig::with_lambda(0.0)).is_err());
    assert!(solve_cono(&l0, &omega, &SolverConfig { rel_tol: 0.0, ..SolverConfig::default() }).is_err());
    assert!(solve_lrfd(&l0, &DenseMatrix::zeros(10, 3), &omega, &SolverConfig::default()).is_err());
    assert!(solve_lrfd(&l0, &gaussian(9, 3, 1), &omega, &SolverConfig::default()).is_err());
    assert!(solve_cono(&gaussian(9, 10, 1), &omega, &SolverConfig::default()).is_err());
}

#[test]
fn constrained_matches_penalized() {
    for seed in 0..3 {
        let (l0, omega) = planted(40, 40, 3, 0.6, 20 + seed);
        let c = solve_cono_constrained(&l0, &omega, 1e-6).unwrap();
        assert!(c.converged && c.residual_norm <= 1e-6);
        let p = solve_cono(&l0, &omega, &SolverConfig { lambda: 1e6, ..constrained_config() }).unwrap();
        assert!(rel_diff(&c.reconstruction, &p.reconstruction) < 1e-4);
    }
}

#[test]
fn constrained_lrfd_near_recovery() {
    // ‖AZ* − L₀‖_F ≤ 2ε/δ with δ = ρ₀/2.
    for seed in 0..5 {
        let rho = 0.6;
        let (l0, omega) = planted(50, 50, 3, rho, 40 + seed);
        let a = normalize_columns(&l0.hstack(&gaussian(50, 3, seed)).unwrap()).unwrap();
        let sigma = 0.01 * l0.frobenius_norm() / (omega.len() as f64).sqrt();
        let x = add_observation_noise(&l0, &omega, &NoiseSpec { sigma, seed }).unwrap();
        let eps = project_omega(&x.try_sub(&l0).unwrap(), &omega).unwrap().frobenius_norm();
        let rep = solve_lrfd_constrained(&x, &a, &omega, eps).unwrap();
        assert!(rep.residual_norm <= eps);
        let err = rep.reconstruction.distance(&l0).unwrap();
        assert!(err <= 2.0 * eps / (rho / 2.0), "seed {seed}: {err} vs {eps}");
    }
}

#[test]
fn constrained_zero_when_loose() {
    let (l0, omega) = planted(12, 12, 2, 0.5, 3);
    let eps = project_omega(&l0, &omega).unwrap().frobenius_norm();
    let rep = solve_cono_constrained(&l0, &omega, eps).unwrap();
    assert!(rep.solution.is_zero());
    let rep = solve_lrfd_constrained(&l0, &gaussian(12, 4, 1), &omega, eps * 1.01).unwrap();
    assert!(rep.solution.is_zero() && rep.solution.shape() == (4, 12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accelerated_trace_is_monotone((m, n, seed, accel) in (3usize..12, 3usize..12, any::<u64>(), any::<bool>())) {
        let x = gaussian(m, n, seed);
        let omega = ObservationSet::sample_fraction(m, n, 0.5, seed).unwrap();
        let cfg = SolverConfig { lambda: 30.0, max_iters: 200, acceleration: accel, ..SolverConfig::default() };
        let a = gaussian(m, 3, seed ^ 9);
        for rep in [solve_cono(&x, &omega, &cfg).unwrap(), solve_lrfd(&x, &a, &omega, &cfg).unwrap()] {
            prop_assert!(rep.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
            prop_assert!(!rep.converged || rep.terminal_relative_change <= cfg.rel_tol);
        }
    }
}
