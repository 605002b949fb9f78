//! Riemannian conjugate gradient iteration.
//!
//! Starting from `η₀ = −grad f(x₀)`, each iteration picks a step `α_k` by
//! line search, moves to `x_{k+1} = R_{x_k}(α_kη_k)` and sets
//! `η_{k+1} = −g_{k+1} + β_{k+1} T^S_{α_kη_k}(η_k)`, where `T^S` is the
//! scaled vector transport and `β_{k+1}` comes from a [`BetaRule`].

mod audit;
mod beta;
mod trace;

pub use audit::{descent_audit, descent_bound, AuditReport, DescentBound, Violation};
pub use beta::{beta, BetaInputs, BetaRule, SdXi, DEFAULT_MU};
pub use trace::{Status, Trace, TraceRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linesearch::{self, LineSearchConfig, ManifoldPhi, Strategy};
use crate::manifolds::{ManifoldPoint, TangentVector};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub beta_rule: BetaRule,
    pub linesearch: LineSearchConfig,
    pub strategy: Strategy,
    /// Stop once `‖grad f(x_k)‖ ≤ tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Replace a non-descent direction by `−g` and flag the iteration, for
    /// the rules that carry no descent guarantee (PRP, HS). With any other
    /// rule a non-descent direction ends the run at the next line search.
    pub descent_fallback: bool,
    /// Seed for [`Strategy::RandomArmijo`]; unused otherwise.
    pub random_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta_rule: BetaRule::hz(),
            linesearch: LineSearchConfig::default(),
            strategy: Strategy::StrongWolfe,
            tol: 1e-6,
            max_iters: 5000,
            descent_fallback: true,
            random_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(beta_rule: BetaRule, strategy: Strategy) -> Self {
        Self {
            beta_rule,
            strategy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("need tol > 0".into()));
        }
        self.beta_rule.validate()?;
        self.linesearch.validate()
    }
}

/// Solver state at iterate `k`.
#[derive(Debug, Clone)]
pub struct CgState {
    pub k: usize,
    pub x: ManifoldPoint,
    /// `f(x_k)`
    pub f: f64,
    /// `g_k = grad f(x_k)`
    pub g: TangentVector,
    /// Search direction `η_k`.
    pub eta: TangentVector,
    /// `‖g_k‖`
    pub g_norm: f64,
    /// `⟨g_k, η_k⟩`
    pub dir_deriv: f64,
    /// Step `α_{k-1}` that produced `x_k`.
    pub alpha_prev: Option<f64>,
    /// `T^S_{α_{k-1}η_{k-1}}(η_{k-1})`, based at `x_k`.
    pub transported_eta: Option<TangentVector>,
    /// `T^S_{α_{k-1}η_{k-1}}(g_{k-1})`, based at `x_k`.
    pub transported_g: Option<TangentVector>,
    /// Scale `s_{k-1} ∈ (0, 1]` applied to the transported direction.
    pub scale_s: Option<f64>,
    /// `‖g_{k-1}‖`
    pub g_norm_prev: Option<f64>,
    /// `⟨g_{k-1}, η_{k-1}⟩`
    pub dir_deriv_prev: Option<f64>,
}

/// Step-by-step driver of the iteration. [`solve`] wraps it for the
/// common case.
pub struct CgSolver<'a, O: Objective + ?Sized> {
    objective: &'a O,
    cfg: SolverConfig,
    state: CgState,
    rng: ChaCha8Rng,
    records: Vec<TraceRecord>,
    cost_evals: usize,
    grad_evals: usize,
}

impl<'a, O: Objective + ?Sized> CgSolver<'a, O> {
    /// Evaluates `f` and `grad f` at `x0` and sets `η₀ = −g₀`.
    pub fn new(objective: &'a O, x0: ManifoldPoint, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        objective.manifold().check_point(&x0)?;
        let f = objective.cost(&x0)?;
        let g = objective.rgrad(&x0)?;
        let g_norm = g.norm();
        let eta = g.scaled(-1.0);
        let dir_deriv = -g_norm * g_norm;
        let state = CgState {
            k: 0,
            x: x0,
            f,
            g,
            eta,
            g_norm,
            dir_deriv,
            alpha_prev: None,
            transported_eta: None,
            transported_g: None,
            scale_s: None,
            g_norm_prev: None,
            dir_deriv_prev: None,
        };
        let mut solver = Self {
            objective,
            cfg,
            state,
            rng: ChaCha8Rng::seed_from_u64(cfg.random_seed),
            records: Vec::new(),
            cost_evals: 1,
            grad_evals: 1,
        };
        solver.push_record(None, false);
        Ok(solver)
    }

    pub fn state(&self) -> &CgState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn converged(&self) -> bool {
        self.state.g_norm <= self.cfg.tol
    }

    fn push_record(&mut self, beta: Option<f64>, fallback: bool) {
        let s = &self.state;
        let eta_norm = s.eta.norm();
        let term = if eta_norm > 0.0 {
            (s.dir_deriv / eta_norm).powi(2)
        } else {
            0.0
        };
        let sum = self.records.last().map_or(0.0, |r| r.zoutendijk_sum) + term;
        self.records.push(TraceRecord {
            k: s.k,
            f: s.f,
            grad_norm: s.g_norm,
            dir_deriv: s.dir_deriv,
            eta_norm,
            beta,
            alpha: s.alpha_prev,
            scale: s.scale_s,
            fallback,
            cost_evals: self.cost_evals,
            grad_evals: self.grad_evals,
            zoutendijk_term: term,
            zoutendijk_sum: sum,
        });
    }

    fn line_search(&mut self, phi: &mut ManifoldPhi<'a, O>) -> Result<f64> {
        let ls = &self.cfg.linesearch;
        match self.cfg.strategy {
            Strategy::Backtracking => linesearch::backtracking(phi, ls),
            Strategy::StrongWolfe => linesearch::strong_wolfe(phi, ls),
            Strategy::RandomArmijo => linesearch::random_armijo(phi, ls, &mut self.rng),
        }
    }

    /// Performs one iteration and returns its record. On error the state is
    /// left unchanged; evaluations spent by a failed search are still
    /// counted.
    pub fn step(&mut self) -> Result<&TraceRecord> {
        let s = &self.state;
        let mut phi = ManifoldPhi::new(self.objective, s.x.clone(), s.eta.clone(), s.f, &s.g)?;
        let searched = self.line_search(&mut phi);
        let alpha = match searched {
            Ok(alpha) => alpha,
            Err(e) => {
                self.cost_evals += phi.cost_evals();
                self.grad_evals += phi.grad_evals();
                return Err(e);
            }
        };
        let step = phi.accept(alpha)?;
        self.cost_evals += step.cost_evals;
        self.grad_evals += step.grad_evals;

        let s = &self.state;
        let (t_eta, scale) = step.transporter.scaled(&s.eta)?;
        let (t_g, _) = step.transporter.scaled(&s.g)?;
        let g_new = step.grad;
        let b = beta(
            &self.cfg.beta_rule,
            &BetaInputs {
                g_new: &g_new,
                transported_g: &t_g,
                transported_eta: &t_eta,
                g_norm_sq_prev: s.g_norm * s.g_norm,
                dir_deriv_prev: s.dir_deriv,
                eta_norm_prev: s.eta.norm(),
            },
        );
        let g_norm = g_new.norm();
        let mut eta = TangentVector::lincomb(-1.0, &g_new, b, &t_eta)?;
        let mut dir_deriv = g_new.dot(&eta);
        let fallback = self.cfg.descent_fallback
            && !self.cfg.beta_rule.guarantees_descent()
            && !(dir_deriv < 0.0)
            && g_norm > 0.0;
        if fallback {
            eta = g_new.scaled(-1.0);
            dir_deriv = -g_norm * g_norm;
        }

        self.state = CgState {
            k: s.k + 1,
            x: step.point,
            f: step.value,
            eta,
            g_norm,
            dir_deriv,
            alpha_prev: Some(alpha),
            transported_eta: Some(t_eta),
            transported_g: Some(t_g),
            scale_s: Some(scale),
            g_norm_prev: Some(s.g_norm),
            dir_deriv_prev: Some(s.dir_deriv),
            g: g_new,
        };
        self.push_record(Some(b), fallback);
        Ok(self.records.last().expect("record just pushed"))
    }

    /// Iterates until convergence, the iteration cap, or a failed step.
    pub fn run(mut self) -> Trace {
        let mut failure = None;
        let status = loop {
            if self.converged() {
                break Status::Converged;
            }
            if self.state.k >= self.cfg.max_iters {
                break Status::MaxIters;
            }
            if let Err(e) = self.step() {
                failure = Some(e.to_string());
                break Status::LineSearchFailed;
            }
        };
        Trace {
            records: self.records,
            status,
            failure,
        }
    }
}

/// Runs the conjugate gradient method from `x0`. Errors only on an invalid
/// configuration or starting point; solver failures are reported through
/// the trace status.
pub fn solve<O: Objective + ?Sized>(
    objective: &O,
    x0: ManifoldPoint,
    cfg: &SolverConfig,
) -> Result<Trace> {
    Ok(CgSolver::new(objective, x0, *cfg)?.run())
}
