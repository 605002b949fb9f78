use crate::error::Result;
use crate::manifolds::{Manifold, ManifoldPoint, TangentVector, Transporter};
use crate::objectives::Objective;

/// One-dimensional restriction `φ(α) = f(R_x(αη))` used by the line searches.
pub trait Phi {
    /// `φ(0)`
    fn value0(&self) -> f64;
    /// `φ'(0) = ⟨grad f(x), η⟩`
    fn slope0(&self) -> f64;
    fn value(&mut self, alpha: f64) -> f64;
    fn slope(&mut self, alpha: f64) -> f64;
}

/// `φ` given by two closures, for scalar problems and tests.
pub struct ScalarPhi<F, D> {
    f: F,
    df: D,
    value0: f64,
    slope0: f64,
    pub value_evals: usize,
    pub slope_evals: usize,
}

impl<F: FnMut(f64) -> f64, D: FnMut(f64) -> f64> ScalarPhi<F, D> {
    pub fn new(mut f: F, mut df: D) -> Self {
        let value0 = f(0.0);
        let slope0 = df(0.0);
        Self {
            f,
            df,
            value0,
            slope0,
            value_evals: 0,
            slope_evals: 0,
        }
    }
}

impl<F: FnMut(f64) -> f64, D: FnMut(f64) -> f64> Phi for ScalarPhi<F, D> {
    fn value0(&self) -> f64 {
        self.value0
    }

    fn slope0(&self) -> f64 {
        self.slope0
    }

    fn value(&mut self, alpha: f64) -> f64 {
        self.value_evals += 1;
        (self.f)(alpha)
    }

    fn slope(&mut self, alpha: f64) -> f64 {
        self.slope_evals += 1;
        (self.df)(alpha)
    }
}

struct Trial<'m> {
    alpha: f64,
    /// `None` when the retraction failed; the trial then has value `+∞`.
    transporter: Option<Transporter<'m>>,
    value: f64,
    grad: Option<TangentVector>,
    slope: Option<f64>,
}

/// `φ(α) = f(R_x(αη))` and `φ'(α) = ⟨grad f(R_x(αη)), T^R_{αη}(η)⟩` for an
/// objective on a manifold. Every trial step is cached, so re-evaluating a
/// step costs nothing and the evaluation counters are exact.
pub struct ManifoldPhi<'a, O: Objective + ?Sized> {
    objective: &'a O,
    x: ManifoldPoint,
    eta: TangentVector,
    value0: f64,
    slope0: f64,
    trials: Vec<Trial<'a>>,
    cost_evals: usize,
    grad_evals: usize,
}

/// Everything the solver needs from an accepted step.
pub struct AcceptedStep<'m> {
    pub alpha: f64,
    pub point: ManifoldPoint,
    pub value: f64,
    pub grad: TangentVector,
    /// Differentiated retraction along `αη`, targeting `point`.
    pub transporter: Transporter<'m>,
    /// Cost evaluations spent by the whole search, including this step.
    pub cost_evals: usize,
    /// Gradient evaluations spent by the whole search, including this step.
    pub grad_evals: usize,
}

impl<'a, O: Objective + ?Sized> ManifoldPhi<'a, O> {
    /// `value0 = f(x)` and `grad0 = grad f(x)` are supplied by the caller and
    /// not counted as evaluations.
    pub fn new(
        objective: &'a O,
        x: ManifoldPoint,
        eta: TangentVector,
        value0: f64,
        grad0: &TangentVector,
    ) -> Result<Self> {
        let slope0 = objective.manifold().inner(&x, grad0, &eta)?;
        Ok(Self {
            objective,
            x,
            eta,
            value0,
            slope0,
            trials: Vec::new(),
            cost_evals: 0,
            grad_evals: 0,
        })
    }

    pub fn manifold(&self) -> &'a Manifold {
        self.objective.manifold()
    }

    pub fn cost_evals(&self) -> usize {
        self.cost_evals
    }

    pub fn grad_evals(&self) -> usize {
        self.grad_evals
    }

    fn trial_index(&mut self, alpha: f64) -> usize {
        if let Some(i) = self.trials.iter().position(|t| t.alpha == alpha) {
            return i;
        }
        let manifold = self.objective.manifold();
        let step = self.eta.scaled(alpha);
        let (transporter, value) = match manifold.transporter(&self.x, &step) {
            Ok(tr) => {
                self.cost_evals += 1;
                let v = self.objective.cost(tr.target()).unwrap_or(f64::NAN);
                (Some(tr), v)
            }
            Err(_) => (None, f64::INFINITY),
        };
        self.trials.push(Trial {
            alpha,
            transporter,
            value,
            grad: None,
            slope: None,
        });
        self.trials.len() - 1
    }

    fn ensure_grad(&mut self, i: usize) -> Option<TangentVector> {
        if let Some(g) = &self.trials[i].grad {
            return Some(g.clone());
        }
        let tr = self.trials[i].transporter.as_ref()?;
        self.grad_evals += 1;
        let g = self.objective.rgrad(tr.target()).ok()?;
        self.trials[i].grad = Some(g.clone());
        Some(g)
    }

    /// Finalises the search at `alpha`, reusing cached point and gradient.
    pub fn accept(mut self, alpha: f64) -> Result<AcceptedStep<'a>> {
        let i = self.trial_index(alpha);
        let grad = match self.ensure_grad(i) {
            Some(g) => g,
            None => {
                let step = self.eta.scaled(alpha);
                // Surfaces the underlying retraction or gradient error.
                let tr = self.manifold().transporter(&self.x, &step)?;
                self.objective.rgrad(tr.target())?
            }
        };
        let (cost_evals, grad_evals) = (self.cost_evals, self.grad_evals);
        let trial = self.trials.swap_remove(i);
        let transporter = trial
            .transporter
            .expect("gradient implies a retracted point");
        Ok(AcceptedStep {
            alpha,
            point: transporter.target().clone(),
            value: trial.value,
            grad,
            transporter,
            cost_evals,
            grad_evals,
        })
    }
}

impl<O: Objective + ?Sized> Phi for ManifoldPhi<'_, O> {
    fn value0(&self) -> f64 {
        self.value0
    }

    fn slope0(&self) -> f64 {
        self.slope0
    }

    fn value(&mut self, alpha: f64) -> f64 {
        let i = self.trial_index(alpha);
        self.trials[i].value
    }

    fn slope(&mut self, alpha: f64) -> f64 {
        let i = self.trial_index(alpha);
        if let Some(s) = self.trials[i].slope {
            return s;
        }
        let Some(g) = self.ensure_grad(i) else {
            return f64::NAN;
        };
        let tr = self.trials[i]
            .transporter
            .as_ref()
            .expect("gradient implies a point");
        let s = match tr.diff(&self.eta) {
            Ok(t) => self
                .objective
                .manifold()
                .inner(tr.target(), &g, &t)
                .unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        };
        self.trials[i].slope = Some(s);
        s
    }
}
