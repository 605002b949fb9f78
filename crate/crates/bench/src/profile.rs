use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::suite::RunRecord;

/// Cost measure compared across solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Outer CG iterations.
    Iterations,
    /// Seconds.
    WallTime,
    /// Cost plus gradient evaluations, line-search probes included.
    CostEvals,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Iterations, Metric::WallTime, Metric::CostEvals];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Iterations => "iterations",
            Metric::WallTime => "wall_time",
            Metric::CostEvals => "cost_evals",
        }
    }

    pub fn of(&self, r: &RunRecord) -> f64 {
        match self {
            Metric::Iterations => r.iterations as f64,
            Metric::WallTime => r.wall_time,
            Metric::CostEvals => (r.cost_evals + r.grad_evals) as f64,
        }
    }

    /// Smallest cost a run is charged: one iteration or evaluation, or one
    /// nanosecond. Keeps ratios finite when a run starts at a stationary
    /// point and needs no work at all.
    pub fn floor(&self) -> f64 {
        match self {
            Metric::Iterations | Metric::CostEvals => 1.0,
            Metric::WallTime => 1e-9,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "iterations" | "iters" => Ok(Metric::Iterations),
            "wall_time" | "time" => Ok(Metric::WallTime),
            "cost_evals" | "evals" => Ok(Metric::CostEvals),
            other => Err(BenchError::InvalidSuite(format!(
                "unknown metric `{other}`"
            ))),
        }
    }
}

/// Performance profile `P_s(τ) = #{p : r_{p,s} ≤ τ} / #P` of one solver,
/// stored as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub solver_id: String,
    pub metric: Metric,
    /// `(τ, P_s(τ))` at every jump, τ strictly increasing. The last entry is
    /// always `(+∞, fraction solved)`.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileCurve {
    pub fn value_at(&self, tau: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&(t, _)| t <= tau);
        if i == 0 {
            0.0
        } else {
            self.breakpoints[i - 1].1
        }
    }

    /// Fraction of problems solved, `lim_{τ→∞} P_s(τ)`.
    pub fn limit(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |&(_, p)| p)
    }

    /// Largest finite breakpoint, if any.
    pub fn max_finite_tau(&self) -> Option<f64> {
        self.breakpoints
            .iter()
            .rev()
            .map(|&(t, _)| t)
            .find(|t| t.is_finite())
    }
}

/// Performance ratios `r_{p,s}` indexed `[problem][solver]`, together with
/// the solver ids in first-appearance order.
///
/// Problems are keyed by `(problem_id, instance_seed)`. Failed runs get
/// `r = ∞`; costs below [`Metric::floor`] are raised to it.
pub fn performance_ratios(
    records: &[RunRecord],
    metric: Metric,
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let mut solvers: Vec<String> = Vec::new();
    let mut solver_index: HashMap<&str, usize> = HashMap::new();
    let mut problem_index: HashMap<(&str, u64), usize> = HashMap::new();
    let mut problems: Vec<(&str, u64)> = Vec::new();
    for r in records {
        if !solver_index.contains_key(r.solver_id.as_str()) {
            solver_index.insert(&r.solver_id, solvers.len());
            solvers.push(r.solver_id.clone());
        }
        let key = (r.problem_id.as_str(), r.instance_seed);
        if let std::collections::hash_map::Entry::Vacant(e) = problem_index.entry(key) {
            e.insert(problems.len());
            problems.push(key);
        }
    }
    let mut t = vec![vec![None; solvers.len()]; problems.len()];
    for r in records {
        let cell = &mut t[problem_index[&(r.problem_id.as_str(), r.instance_seed)]]
            [solver_index[r.solver_id.as_str()]];
        if cell.is_some() {
            return Err(BenchError::IncompleteGrid(format!(
                "duplicate record for {} (seed {}) / {}",
                r.problem_id, r.instance_seed, r.solver_id
            )));
        }
        let value = metric.of(r);
        *cell = Some(if r.converged() && value.is_finite() {
            value.max(metric.floor())
        } else {
            f64::INFINITY
        });
    }
    let mut ratios = Vec::with_capacity(problems.len());
    for (p, row) in t.into_iter().enumerate() {
        let row: Vec<f64> = row
            .into_iter()
            .enumerate()
            .map(|(s, v)| {
                v.ok_or_else(|| {
                    BenchError::IncompleteGrid(format!(
                        "no record for {} (seed {}) / {}",
                        problems[p].0, problems[p].1, solvers[s]
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        ratios.push(
            row.iter()
                .map(|&v| {
                    if v.is_finite() {
                        v / best
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
        );
    }
    Ok((solvers, ratios))
}

/// One profile curve per solver, in first-appearance order of solver ids.
pub fn performance_profile(records: &[RunRecord], metric: Metric) -> Result<Vec<ProfileCurve>> {
    let (solvers, ratios) = performance_ratios(records, metric)?;
    let n = ratios.len() as f64;
    Ok(solvers
        .into_iter()
        .enumerate()
        .map(|(s, solver_id)| {
            let mut r: Vec<f64> = ratios
                .iter()
                .map(|row| row[s])
                .filter(|v| v.is_finite())
                .collect();
            r.sort_by(f64::total_cmp);
            let mut breakpoints: Vec<(f64, f64)> = Vec::new();
            for (i, &tau) in r.iter().enumerate() {
                let p = (i + 1) as f64 / n;
                match breakpoints.last_mut() {
                    Some(last) if last.0 == tau => last.1 = p,
                    _ => breakpoints.push((tau, p)),
                }
            }
            breakpoints.push((f64::INFINITY, r.len() as f64 / n));
            ProfileCurve {
                solver_id,
                metric,
                breakpoints,
            }
        })
        .collect())
}
