use nalgebra::DMatrix;
use rcg_core::cg::{
    beta, descent_audit, solve, BetaInputs, BetaRule, CgSolver, SdXi, SolverConfig, Status,
};
use rcg_core::linesearch::{LineSearchConfig, Strategy};
use rcg_core::objectives::{make_instance_with, Objective, ProblemData, ProblemKind, ProblemSpec};
use rcg_core::Manifold;

/// Smallest eigenvalue from an eigensolver independent of the library's.
fn lambda_min_oracle(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    m.self_adjoint_eigenvalues(faer::Side::Lower)
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn rayleigh_matrix(f: &rcg_core::objectives::ObjectiveInstance) -> &DMatrix<f64> {
    match f.data() {
        ProblemData::Rayleigh { a } => a,
        _ => unreachable!(),
    }
}

#[test]
fn rayleigh_hz_backtracking_reaches_smallest_eigenvalue() {
    let f = make_instance_with(&ProblemSpec::standard(ProblemKind::Rayleigh), 7).unwrap();
    let cfg = SolverConfig::new(BetaRule::hz(), Strategy::Backtracking);
    let trace = solve(&f, f.manifold().random_point(70), &cfg).unwrap();
    assert_eq!(trace.status, Status::Converged);
    let lmin = lambda_min_oracle(rayleigh_matrix(&f));
    assert!(
        (trace.final_cost() - lmin).abs() <= 1e-8,
        "{} vs {lmin}",
        trace.final_cost()
    );
    assert!((f.rayleigh_minimum().unwrap() - lmin).abs() <= 1e-12);
}

#[test]
fn brockett_hybrid1_strong_wolfe_converges() {
    let f = make_instance_with(&ProblemSpec::standard(ProblemKind::Brockett), 3).unwrap();
    let cfg = SolverConfig::new(BetaRule::Hybrid1, Strategy::StrongWolfe);
    let trace = solve(&f, f.manifold().random_point(30), &cfg).unwrap();
    assert_eq!(trace.status, Status::Converged);
    assert!(trace.final_grad_norm() <= 1e-6);
}

#[test]
fn hz_and_sd_never_need_the_descent_fallback() {
    let specs = [
        ProblemSpec::Rayleigh { n: 30 },
        ProblemSpec::Brockett { n: 12, p: 3 },
        ProblemSpec::Completion {
            m: 15,
            n: 12,
            k: 2,
            observe_prob: 0.6,
        },
        ProblemSpec::OffDiag {
            n: 10,
            p: 3,
            count: 4,
        },
    ];
    let rules = [
        BetaRule::hz(),
        BetaRule::sd(SdXi::HzQuotient),
        BetaRule::sd(SdXi::GradientDifference),
    ];
    for spec in &specs {
        for rule in rules {
            for strategy in [
                Strategy::Backtracking,
                Strategy::StrongWolfe,
                Strategy::RandomArmijo,
            ] {
                let f = make_instance_with(spec, 1).unwrap();
                let cfg = SolverConfig {
                    max_iters: 300,
                    random_seed: 5,
                    ..SolverConfig::new(rule, strategy)
                };
                let trace = solve(&f, f.manifold().random_point(2), &cfg).unwrap();
                assert!(trace.records.iter().all(|r| !r.fallback), "{} {rule}", f.id);
                let audit = descent_audit(&trace, &rule, &cfg).unwrap();
                assert!(
                    audit.holds(1e-10),
                    "{} {rule} {strategy:?}: {:?}",
                    f.id,
                    audit.violations
                );
            }
        }
    }
}

#[test]
fn armijo_steps_decrease_the_cost() {
    let f = make_instance_with(
        &ProblemSpec::OffDiag {
            n: 12,
            p: 3,
            count: 3,
        },
        4,
    )
    .unwrap();
    for strategy in [
        Strategy::Backtracking,
        Strategy::StrongWolfe,
        Strategy::RandomArmijo,
    ] {
        let cfg = SolverConfig {
            max_iters: 200,
            ..SolverConfig::new(BetaRule::Prp, strategy)
        };
        let trace = solve(&f, f.manifold().random_point(8), &cfg).unwrap();
        for w in trace.records.windows(2) {
            assert!(w[0].dir_deriv < 0.0);
            assert!(w[1].f < w[0].f, "{strategy:?} at k = {}", w[1].k);
        }
    }
}

#[test]
fn sd_with_hz_quotient_equals_hz_on_random_tuples() {
    let manifolds = [
        Manifold::sphere(5).unwrap(),
        Manifold::stiefel(6, 2).unwrap(),
        Manifold::fixed_rank(5, 4, 2).unwrap(),
        Manifold::oblique(4, 3).unwrap(),
    ];
    let mut compared = 0;
    for i in 0..1000u64 {
        let m = &manifolds[(i % 4) as usize];
        let x = m.random_point(i);
        let g = m.random_tangent(&x, 3 * i + 1).unwrap();
        let tg = m.random_tangent(&x, 3 * i + 2).unwrap();
        let teta = m.random_tangent(&x, 3 * i + 3).unwrap();
        let inputs = BetaInputs {
            g_new: &g,
            transported_g: &tg,
            transported_eta: &teta,
            g_norm_sq_prev: 0.5 + (i % 7) as f64,
            dir_deriv_prev: -1.0 - (i % 5) as f64,
            eta_norm_prev: 1.0 + (i % 3) as f64,
        };
        let hz = beta(&BetaRule::hz(), &inputs);
        let sd = beta(&BetaRule::sd(SdXi::HzQuotient), &inputs);
        assert!(
            (hz - sd).abs() <= 1e-12 * hz.abs().max(1e-300),
            "{hz} vs {sd}"
        );
        compared += 1;
    }
    assert_eq!(compared, 1000);
}

#[test]
fn runs_are_deterministic() {
    let f = make_instance_with(
        &ProblemSpec::Completion {
            m: 12,
            n: 10,
            k: 2,
            observe_prob: 0.7,
        },
        9,
    )
    .unwrap();
    let cfg = SolverConfig {
        max_iters: 100,
        ..SolverConfig::new(BetaRule::Hybrid1, Strategy::RandomArmijo)
    };
    let a = solve(&f, f.manifold().random_point(1), &cfg).unwrap();
    let b = solve(&f, f.manifold().random_point(1), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zoutendijk_terms_vanish_on_converged_runs() {
    let f = make_instance_with(&ProblemSpec::Rayleigh { n: 40 }, 2).unwrap();
    for rule in [
        BetaRule::Fr,
        BetaRule::Dy,
        BetaRule::hz(),
        BetaRule::Hybrid2,
    ] {
        let trace = solve(
            &f,
            f.manifold().random_point(3),
            &SolverConfig::new(rule, Strategy::StrongWolfe),
        )
        .unwrap();
        assert_eq!(trace.status, Status::Converged, "{rule}");
        let last = trace.last();
        assert!(last.zoutendijk_term <= 1e-12);
        let total: f64 = trace.records.iter().map(|r| r.zoutendijk_term).sum();
        assert!((total - last.zoutendijk_sum).abs() <= 1e-12 * total.max(1.0));
    }
}

#[test]
fn step_by_step_driver_matches_solve() {
    let f = make_instance_with(&ProblemSpec::Brockett { n: 8, p: 2 }, 6).unwrap();
    let cfg = SolverConfig {
        max_iters: 25,
        ..SolverConfig::new(BetaRule::Dy, Strategy::StrongWolfe)
    };
    let x0 = f.manifold().random_point(4);
    let trace = solve(&f, x0.clone(), &cfg).unwrap();
    let mut solver = CgSolver::new(&f, x0, cfg).unwrap();
    while !solver.converged() && solver.state().k < cfg.max_iters {
        solver.step().unwrap();
    }
    assert_eq!(solver.records(), &trace.records[..]);
    let s = solver.state();
    assert!(s.scale_s.is_none_or(|v| v > 0.0 && v <= 1.0));
    assert!((f.cost(&s.x).unwrap() - s.f).abs() == 0.0);
}

#[test]
fn strong_wolfe_with_small_c2_keeps_hybrid_bounds() {
    let f = make_instance_with(&ProblemSpec::Rayleigh { n: 50 }, 12).unwrap();
    let ls = LineSearchConfig {
        c2: 0.4,
        ..Default::default()
    };
    for rule in [
        BetaRule::Fr,
        BetaRule::Hybrid2,
        BetaRule::Dy,
        BetaRule::Hybrid1,
    ] {
        let cfg = SolverConfig {
            linesearch: ls,
            ..SolverConfig::new(rule, Strategy::StrongWolfe)
        };
        let trace = solve(&f, f.manifold().random_point(5), &cfg).unwrap();
        let audit = descent_audit(&trace, &rule, &cfg).unwrap();
        assert!(audit.holds(1e-8), "{rule}: {:?}", audit.violations);
        assert_eq!(audit.skipped_fallback, 0);
    }
}
