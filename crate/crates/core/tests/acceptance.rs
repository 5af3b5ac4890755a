//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and a closing tally. `LRFD_ACCEPTANCE=1,4,8` runs a subset;
//! `LRFD_WORKERS` sets the worker count of the sweeps;
//! `LRFD_ACCEPTANCE_STRICT=1` makes any FAIL a nonzero exit.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use lrfd::bench::{
    run_coherence_sweep, run_fig3_sweep, run_lemma_check, run_phase_diagram, Algorithm, ExperimentGrid,
    ExperimentKind, NEUMANN_PSI_MAX, NEUMANN_TOL,
};
use lrfd::linalg::io::{read_matrix, write_matrix};
use lrfd::linalg::{normalize_columns, pinv, qr_orthonormal, svt, thin_svd, DenseMatrix};
use lrfd::observation::{project_column_space, project_omega, project_omega_complement};
use lrfd::pipeline::estimate_rank;
use lrfd::rng::mix_seed;
use lrfd::solvers::{cono_step, lrfd_step, solve_lrfd, solve_lrfd_constrained, SolverConfig};
use lrfd::synth::{add_observation_noise, gen_subspace_mixture, NoiseSpec, SubspaceMixSpec};
use lrfd::{ObservationSet, SamplingModel, SubspaceBasis};

type Outcome = (bool, String);

fn workers() -> usize {
    std::env::var("LRFD_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn fig3() -> (Outcome, Outcome) {
    let grid = ExperimentGrid::defaults(ExperimentKind::Fig3Sweep);
    let start = Instant::now();
    let rows = run_fig3_sweep(&grid, workers()).expect("fig3 sweep");
    let secs = start.elapsed().as_secs_f64();

    let mut ok1 = secs < 120.0;
    let mut detail = Vec::new();
    for r in rows.iter().filter(|r| r.algorithm == Algorithm::Lrfd) {
        let exact = r.cell.errors.iter().filter(|&&e| e < 1e-3).count();
        ok1 &= exact >= 9;
        detail.push(format!("rank(A)={}: {exact}/{} (max err {:.2e})", r.dictionary_rank, r.cell.trials(), r.cell.max_error()));
    }
    let c1 = (ok1, format!("{}; {secs:.1}s", detail.join(", ")));

    let cono = rows.iter().find(|r| r.algorithm == Algorithm::Cono).expect("baseline row");
    let failed = cono.cell.errors.iter().filter(|&&e| e > 0.5).count();
    let c2 = (
        failed == cono.cell.trials(),
        format!("{failed}/{} above 0.5, mean error {:.3}", cono.cell.trials(), cono.cell.mean_error()),
    );
    (c1, c2)
}

fn coherence_trend() -> Outcome {
    let grid = ExperimentGrid::defaults(ExperimentKind::CoherenceSweep);
    let rows = run_coherence_sweep(&grid, workers()).expect("coherence sweep");
    let mu1: Vec<f64> = rows.iter().map(|r| r.mean_mu1).collect();
    let mu2: Vec<f64> = rows.iter().map(|r| r.mean_mu2).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.cono.mean_error()).collect();
    let mu2_ok = mu2.windows(2).all(|w| w[1] >= w[0]);
    let (lo, hi) = mu1.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    let inversions = err.windows(2).filter(|w| w[1] < w[0]).count();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    (
        mu2_ok && hi / lo < 1.5 && inversions <= 1,
        format!("mu1 [{}] mu2 [{}] cono error [{}]", fmt(&mu1), fmt(&mu2), fmt(&err)),
    )
}

/// Planted rank-4 `L₀` (100×100) and a rank-8 dictionary whose span holds
/// the column space of `L₀`.
fn oracle_instance(seed: u64) -> (DenseMatrix, DenseMatrix) {
    let spec = SubspaceMixSpec::even(100, 100, 1, 4, seed).unwrap();
    let l0 = gen_subspace_mixture(&spec).unwrap();
    let u0 = thin_svd(&l0).unwrap().u;
    let inside = u0.matmul(&gaussian(4, 4, mix_seed(seed, &[1]))).unwrap();
    let a = normalize_columns(&inside.hstack(&gaussian(100, 4, mix_seed(seed, &[2]))).unwrap()).unwrap();
    (l0, a)
}

fn theorem1() -> Outcome {
    let cfg = SolverConfig::with_lambda(1e6);
    let mut exact = 0;
    let mut worst = 0.0f64;
    for t in 0..50 {
        let seed = mix_seed(0x7431, &[t]);
        let (l0, a) = oracle_instance(seed);
        assert_eq!(thin_svd(&a).unwrap().rank(), 8);
        let omega = ObservationSet::sample(100, 100, SamplingModel::Bernoulli { rho: 0.5 }, mix_seed(seed, &[3])).unwrap();
        let rep = solve_lrfd(&l0, &a, &omega, &cfg).unwrap();
        let target = pinv(&a).unwrap().matmul(&l0).unwrap();
        let err = rep.solution.distance(&target).unwrap() / target.frobenius_norm();
        worst = worst.max(err);
        if err < 1e-3 {
            exact += 1;
        }
    }
    (exact >= 48, format!("{exact}/50 with ‖Z*−A⁺L₀‖/‖A⁺L₀‖ < 1e-3, worst {worst:.2e}"))
}

fn theorem2() -> Outcome {
    let (rho, delta) = (0.6, 0.3);
    let mut held = 0;
    let mut worst_ratio = 0.0f64;
    for t in 0..50 {
        let seed = mix_seed(0x7432, &[t]);
        let (l0, a) = oracle_instance(seed);
        let omega = ObservationSet::sample(100, 100, SamplingModel::Bernoulli { rho }, mix_seed(seed, &[3])).unwrap();
        let sigma = 0.01 * l0.frobenius_norm() / (omega.len() as f64).sqrt();
        let x = add_observation_noise(&l0, &omega, &NoiseSpec { sigma, seed }).unwrap();
        let eps = project_omega(&x.try_sub(&l0).unwrap(), &omega).unwrap().frobenius_norm();
        let rep = solve_lrfd_constrained(&x, &a, &omega, eps).unwrap();
        let err = rep.reconstruction.distance(&l0).unwrap();
        let bound = 2.0 * eps / delta;
        worst_ratio = worst_ratio.max(err / bound);
        if rep.residual_norm <= eps && err <= bound {
            held += 1;
        }
    }
    (held == 50, format!("{held}/50 within 2ε/δ, largest error/bound {worst_ratio:.3}"))
}

fn lemmas() -> Outcome {
    let grid = ExperimentGrid::defaults(ExperimentKind::LemmaCheck);
    let rows = run_lemma_check(&grid, workers()).expect("lemma check");
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &rows {
        let (checked, failed) = r.neumann_failures(NEUMANN_PSI_MAX, NEUMANN_TOL);
        let mean = r.norms.iter().sum::<f64>() / r.norms.len() as f64;
        ok &= r.violations() == 0 && failed == 0;
        detail.push(format!(
            "rho={}: lemma1 {}/{} over {:.2} (mean norm {mean:.3}), lemma2 {failed}/{checked} failures",
            r.rho,
            r.violations(),
            r.norms.len(),
            r.bound
        ));
    }
    (ok, detail.join("; "))
}

fn phase() -> (Outcome, Outcome) {
    let grid = ExperimentGrid::defaults(ExperimentKind::PhaseDiagram);
    let start = Instant::now();
    let (cells, summary) = run_phase_diagram(&grid, workers()).expect("phase diagram");
    let secs = start.elapsed().as_secs_f64();
    let c7 = (
        summary.two_stage_cells > summary.cono_cells && secs < 1800.0,
        format!(
            "area alg1 {}/{} vs cono {}/{}; {:.0}s",
            summary.two_stage_cells, summary.cells, summary.cono_cells, summary.cells, secs
        ),
    );
    let full = grid.trials_per_cell;
    let regress: Vec<String> = cells
        .iter()
        .filter(|c| c.cono.successes() == full && c.two_stage.successes() < full)
        .map(|c| format!("({}, {}): {}/{full}", c.rank, c.fraction, c.two_stage.successes()))
        .collect();
    let perfect = cells.iter().filter(|c| c.cono.successes() == full).count();
    let c9 = (
        regress.is_empty(),
        if regress.is_empty() {
            format!("{perfect} cells with cono {full}/{full}, alg1 matches in all")
        } else {
            format!("regressions at {}", regress.join(", "))
        },
    );
    (c7, c9)
}

fn reduction() -> Outcome {
    let mut worst = 0.0f64;
    for t in 0..20u64 {
        let (m, n) = (15 + t as usize, 20);
        let x = gaussian(m, n, t);
        let omega = ObservationSet::sample_fraction(m, n, 0.5, t).unwrap();
        let id = DenseMatrix::identity(m);
        let lambda = 10f64.powi(t as i32 % 4);
        let mut l = project_omega(&x, &omega).unwrap();
        let mut z = l.clone();
        for _ in 0..50 {
            l = cono_step(&l, &x, &omega, lambda).unwrap();
            z = lrfd_step(&z, &x, &id, &omega, lambda, 1.0).unwrap();
            worst = worst.max(l.distance(&z).unwrap());
        }
    }
    (worst <= 1e-10, format!("20 instances × 50 steps, max iterate gap {worst:.1e}"))
}

fn unit_suites() -> Outcome {
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };
    for seed in 0..30u64 {
        let (m, n) = (2 + seed as usize % 9, 2 + (seed as usize * 7) % 11);
        let a = low_rank(m, n, 1 + seed as usize % m.min(n), seed);
        let p = pinv(&a).unwrap();
        let ap = a.matmul(&p).unwrap();
        let pa = p.matmul(&a).unwrap();
        check("MM⁺M = M", rel_diff(&ap.matmul(&a).unwrap(), &a) < 1e-8);
        check("M⁺MM⁺ = M⁺", rel_diff(&pa.matmul(&p).unwrap(), &p) < 1e-8);
        check("(MM⁺)ᵀ = MM⁺", rel_diff(&ap.transpose(), &ap) < 1e-8);
        check("(M⁺M)ᵀ = M⁺M", rel_diff(&pa.transpose(), &pa) < 1e-8);

        let g = gaussian(m, n, seed + 1000);
        let s = thin_svd(&g).unwrap();
        check("svd round trip", rel_diff(&s.reconstruct(), &g) < 1e-10);

        let small = gaussian(1 + seed as usize % 4, 1 + (seed as usize / 4) % 4, seed + 2000);
        check("svt oracle", svt(&small, 0.7).unwrap().distance(&svt_oracle(&small, 0.7)).unwrap() < 1e-5);

        let omega = ObservationSet::sample_fraction(m, n, 0.5, seed).unwrap();
        let po = project_omega(&g, &omega).unwrap();
        let pc = project_omega_complement(&g, &omega).unwrap();
        check("P_Ω idempotent", project_omega(&po, &omega).unwrap() == po);
        check("P_Ω⊥ idempotent", project_omega_complement(&pc, &omega).unwrap() == pc);
        check("P_Ω + P_Ω⊥ = I", po.try_add(&pc).unwrap() == g);
        let u = SubspaceBasis::new(qr_orthonormal(&gaussian(m, 1 + seed as usize % m, seed)).unwrap()).unwrap();
        let pu = project_column_space(&g, &u).unwrap();
        check("P_U idempotent", project_column_space(&pu, &u).unwrap().distance(&pu).unwrap() < 1e-10);

        let mut buf = Vec::new();
        write_matrix(&g, &mut buf).unwrap();
        check("matrix file", read_matrix(buf.as_slice()).unwrap() == g);
        let mut buf = Vec::new();
        omega.write(&mut buf).unwrap();
        check("mask file", ObservationSet::read(buf.as_slice()).unwrap().indices() == omega.indices());
    }
    let big = gaussian(300, 300, 7);
    check("svd round trip 300×300", rel_diff(&thin_svd(&big).unwrap().reconstruct(), &big) < 1e-10);
    check("rank rule (10, 5, 0.001)", estimate_rank(&[10.0, 5.0, 0.001]).unwrap() == 2);
    check("rank rule (1)", estimate_rank(&[1.0]).unwrap() == 1);
    check("rank rule (1, 1, 1)", estimate_rank(&[1.0, 1.0, 1.0]).unwrap() == 3);
    check("rank rule at threshold", estimate_rank(&[2.0, 2e-3, 1e-3]).unwrap() == 1);
    fails.sort();
    fails.dedup();
    (fails.is_empty(), if fails.is_empty() { "all checks green".into() } else { fails.join(", ") })
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("LRFD_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |k: u32| only.as_ref().map_or(true, |v| v.contains(&k));
    let mut passed = 0;
    let mut failed = Vec::new();
    let mut report = |k: u32, name: &str, (ok, detail): Outcome| {
        if ok {
            passed += 1;
        } else {
            failed.push(k.to_string());
        }
        println!("{} [{k}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    if wanted(10) {
        report(10, "unit and property suites", unit_suites());
    }
    if wanted(8) {
        report(8, "identity dictionary reduces to completion", reduction());
    }
    if wanted(1) || wanted(2) {
        let (c1, c2) = fig3();
        if wanted(1) {
            report(1, "coherent rank-1 recovery with [1, W] dictionaries", c1);
        }
        if wanted(2) {
            report(2, "completion fails on the coherent instance", c2);
        }
    }
    if wanted(6) {
        report(6, "operator-norm bound and Neumann inverse", lemmas());
    }
    if wanted(4) {
        report(4, "exact recovery with an oracle dictionary", theorem1());
    }
    if wanted(5) {
        report(5, "noisy recovery within 2ε/δ", theorem2());
    }
    if wanted(3) {
        report(3, "coherence and completion error against subspace count", coherence_trend());
    }
    if wanted(7) || wanted(9) {
        let (c7, c9) = phase();
        if wanted(7) {
            report(7, "two-stage success region dominates completion", c7);
        }
        if wanted(9) {
            report(9, "two-stage never regresses on perfect cells", c9);
        }
    }
    println!(
        "acceptance: {passed} passed, {} failed{}",
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) }
    );
    let strict = std::env::var("LRFD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
