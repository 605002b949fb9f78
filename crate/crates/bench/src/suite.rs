use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rcg_core::cg::{solve, BetaRule, SolverConfig, Status, DEFAULT_MU};
use rcg_core::linesearch::Strategy;
use rcg_core::objectives::{make_instance_with, Objective, ProblemKind, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Offset separating the starting-point seed from the instance seed, so the
/// random start is independent of the problem data.
const X0_SEED_OFFSET: u64 = 0x5851_F42D_4C95_7F2D;

/// A β rule paired with a line-search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub rule: BetaRule,
    pub strategy: Strategy,
}

impl SolverSpec {
    pub fn new(rule: BetaRule, strategy: Strategy) -> Self {
        Self { rule, strategy }
    }

    /// Stable identifier, e.g. `HZ+strong_wolfe`.
    pub fn id(&self) -> String {
        format!("{}+{}", self.rule, self.strategy.as_str())
    }

    /// The rules × strategies grid, rules varying slowest.
    pub fn grid(rules: &[BetaRule], strategies: &[Strategy]) -> Vec<SolverSpec> {
        rules
            .iter()
            .flat_map(|&r| strategies.iter().map(move |&s| SolverSpec::new(r, s)))
            .collect()
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for SolverSpec {
    type Err = BenchError;

    /// Parses `RULE+STRATEGY`.
    fn from_str(s: &str) -> Result<Self> {
        let (rule, strategy) = s.split_once('+').ok_or_else(|| {
            BenchError::InvalidSuite(format!("solver id `{s}` is not RULE+STRATEGY"))
        })?;
        Ok(SolverSpec::new(rule.parse()?, strategy.parse()?))
    }
}

/// Everything needed to reproduce a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub problems: Vec<ProblemSpec>,
    pub solvers: Vec<SolverSpec>,
    /// Instances generated per problem.
    pub reps: usize,
    /// Instance `r` of every problem uses seed `seed + r`.
    pub seed: u64,
    /// `μ` of the HZ and SD rules; ignored by the others.
    pub mu: f64,
    /// Tolerances and line-search parameters shared by all solvers; the β
    /// rule and strategy are overridden per solver.
    pub base: SolverConfig,
}

impl SuiteConfig {
    /// Standard-size instances of `kinds`.
    pub fn standard(
        kinds: &[ProblemKind],
        solvers: Vec<SolverSpec>,
        reps: usize,
        seed: u64,
    ) -> Self {
        Self {
            problems: kinds.iter().map(|&k| ProblemSpec::standard(k)).collect(),
            solvers,
            reps,
            seed,
            mu: DEFAULT_MU,
            base: SolverConfig::default(),
        }
    }

    pub fn solver_config(&self, solver: &SolverSpec, instance_seed: u64) -> SolverConfig {
        SolverConfig {
            beta_rule: solver.rule.with_mu(self.mu),
            strategy: solver.strategy,
            random_seed: instance_seed,
            ..self.base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.solvers.is_empty() || self.reps == 0 {
            return Err(BenchError::InvalidSuite(
                "need at least one problem, one solver and one repetition".into(),
            ));
        }
        let ids: std::collections::HashSet<_> = self.solvers.iter().map(SolverSpec::id).collect();
        if ids.len() != self.solvers.len() {
            return Err(BenchError::InvalidSuite("duplicate solver".into()));
        }
        for s in &self.solvers {
            self.solver_config(s, 0).validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.problems.len() * self.reps * self.solvers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Outcome of one solver on one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub instance_seed: u64,
    pub solver_id: String,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub cost_evals: usize,
    pub grad_evals: usize,
    pub final_grad_norm: f64,
    pub status: Status,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Runs every (problem, repetition, solver) triple and returns the records
/// in that order; runs execute in parallel on the rayon pool. Apart from
/// `wall_time` the result depends on the configuration only.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let tasks: Vec<(ProblemSpec, u64, SolverSpec)> = cfg
        .problems
        .iter()
        .flat_map(|&p| {
            (0..cfg.reps as u64).flat_map(move |r| {
                cfg.solvers
                    .iter()
                    .map(move |&s| (p, cfg.seed.wrapping_add(r), s))
            })
        })
        .collect();
    tasks
        .into_par_iter()
        .map(|(spec, seed, solver)| run_one(cfg, &spec, seed, &solver))
        .collect()
}

fn run_one(
    cfg: &SuiteConfig,
    spec: &ProblemSpec,
    seed: u64,
    solver: &SolverSpec,
) -> Result<RunRecord> {
    let f = make_instance_with(spec, seed)?;
    let x0 = f.manifold().random_point(seed ^ X0_SEED_OFFSET);
    let solver_cfg = cfg.solver_config(solver, seed);
    let start = Instant::now();
    let trace = solve(&f, x0, &solver_cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let last = trace.last();
    Ok(RunRecord {
        problem_id: f.id.clone(),
        instance_seed: seed,
        solver_id: solver.id(),
        iterations: trace.iterations(),
        wall_time,
        cost_evals: last.cost_evals,
        grad_evals: last.grad_evals,
        final_grad_norm: last.grad_norm,
        status: trace.status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SuiteConfig {
        SuiteConfig {
            problems: vec![
                ProblemSpec::Rayleigh { n: 10 },
                ProblemSpec::Brockett { n: 6, p: 2 },
            ],
            solvers: SolverSpec::grid(
                &[BetaRule::Fr, BetaRule::hz(), BetaRule::Hybrid1],
                &[Strategy::StrongWolfe],
            ),
            reps: 1,
            seed: 11,
            mu: DEFAULT_MU,
            base: SolverConfig::default(),
        }
    }

    #[test]
    fn grid_cardinality() {
        let records = run_suite(&tiny()).unwrap();
        assert_eq!(records.len(), 6);
        assert_eq!(tiny().len(), 6);
    }

    #[test]
    fn deterministic_iteration_counts() {
        let a = run_suite(&tiny()).unwrap();
        let b = run_suite(&tiny()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.iterations, x.cost_evals, x.status),
                (y.iterations, y.cost_evals, y.status)
            );
            assert_eq!(x.final_grad_norm, y.final_grad_norm);
        }
    }

    #[test]
    fn solver_ids_round_trip() {
        for s in SolverSpec::grid(
            &BetaRule::BENCHMARK,
            &[Strategy::Backtracking, Strategy::StrongWolfe],
        ) {
            let back: SolverSpec = s.id().parse().unwrap();
            assert_eq!(back.id(), s.id());
        }
        assert!("HZ".parse::<SolverSpec>().is_err());
    }

    #[test]
    fn invalid_suites_are_rejected() {
        let mut cfg = tiny();
        cfg.reps = 0;
        assert!(run_suite(&cfg).is_err());
        let mut cfg = tiny();
        cfg.solvers.push(cfg.solvers[0]);
        assert!(cfg.validate().is_err());
    }
}
