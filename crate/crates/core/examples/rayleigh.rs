use rcg_core::cg::{descent_audit, solve, BetaRule, SolverConfig};
use rcg_core::linesearch::Strategy;
use rcg_core::objectives::{make_instance, Objective, ProblemKind};

fn main() -> rcg_core::Result<()> {
    // Smallest eigenvalue of a random 100×100 SPD matrix via the Rayleigh quotient.
    let problem = make_instance(ProblemKind::Rayleigh, 7)?;
    let x0 = problem.manifold().random_point(70);
    let cfg = SolverConfig::new(BetaRule::hz(), Strategy::StrongWolfe);

    let trace = solve(&problem, x0, &cfg)?;
    let last = trace.last();
    println!(
        "{:?} after {} iterations: f = {:.12}, |grad| = {:.2e}",
        trace.status,
        trace.iterations(),
        last.f,
        last.grad_norm
    );
    println!("lambda_min = {:.12}", problem.rayleigh_minimum().unwrap());

    let audit = descent_audit(&trace, &cfg.beta_rule, &cfg)?;
    println!("sufficient descent held on every iteration: {}", audit.holds(1e-10));
    Ok(())
}
