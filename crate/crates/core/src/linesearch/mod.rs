//! Step-size selection along a retraction curve.
//!
//! Two strategies are provided: backtracking until the Armijo condition holds,
//! and a bracketing search with a zoom phase that returns a step satisfying
//! the strong Wolfe conditions. The curvature term always uses the
//! differentiated retraction `T^R_{αη}(η)`.

mod phi;

pub use phi::{AcceptedStep, ManifoldPhi, Phi, ScalarPhi};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bisection,
    /// Safeguarded quadratic through `φ(lo)`, `φ'(lo)` and `φ(hi)`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchConfig {
    /// Sufficient-decrease constant `c₁`.
    pub c1: f64,
    /// Curvature constant `c₂`.
    pub c2: f64,
    /// Backtracking contraction factor.
    pub rho: f64,
    /// First trial of the backtracking search.
    pub alpha_hi: f64,
    /// First trial of the strong Wolfe search.
    pub alpha0: f64,
    /// Largest step the strong Wolfe bracketing phase may try.
    pub alpha_max: f64,
    /// Growth factor of the bracketing phase, `α_{i+1} = expansion·α_i`.
    pub expansion: f64,
    pub max_iters: usize,
    pub zoom_max_iters: usize,
    pub interpolation: Interpolation,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            rho: 0.5,
            alpha_hi: 1.0,
            alpha0: 1.0,
            alpha_max: 1e3,
            expansion: 2.0,
            max_iters: 60,
            zoom_max_iters: 30,
            interpolation: Interpolation::Bisection,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return fail("need 0 < c1 < c2 < 1");
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return fail("need 0 < rho < 1");
        }
        if !(self.alpha_hi > 0.0) {
            return fail("need alpha_hi > 0");
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= self.alpha_max) {
            return fail("need 0 < alpha0 <= alpha_max");
        }
        if !(self.expansion > 1.0) {
            return fail("need expansion > 1");
        }
        if self.max_iters == 0 || self.zoom_max_iters == 0 {
            return fail("iteration caps must be positive");
        }
        Ok(())
    }
}

/// Which step-size rule a solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Backtracking,
    StrongWolfe,
    /// Backtracking from a random first trial with random contraction
    /// factors. Steps satisfy Armijo only and are otherwise arbitrary.
    RandomArmijo,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Backtracking => "backtracking",
            Strategy::StrongWolfe => "strong_wolfe",
            Strategy::RandomArmijo => "random_armijo",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "backtracking" | "armijo" => Ok(Strategy::Backtracking),
            "strong_wolfe" | "wolfe" => Ok(Strategy::StrongWolfe),
            "random_armijo" => Ok(Strategy::RandomArmijo),
            other => Err(Error::InvalidConfig(format!(
                "unknown line search `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    pub armijo: bool,
    pub wolfe: bool,
    pub strong_wolfe: bool,
}

fn armijo_holds(value: f64, value0: f64, slope0: f64, alpha: f64, c1: f64) -> bool {
    value <= value0 + c1 * alpha * slope0
}

/// Evaluates the Armijo, Wolfe and strong Wolfe conditions at `alpha`.
pub fn check_conditions<P: Phi + ?Sized>(
    phi: &mut P,
    alpha: f64,
    cfg: &LineSearchConfig,
) -> Conditions {
    let (v0, d0) = (phi.value0(), phi.slope0());
    let armijo = armijo_holds(phi.value(alpha), v0, d0, alpha, cfg.c1);
    let d = phi.slope(alpha);
    Conditions {
        armijo,
        wolfe: armijo && d >= cfg.c2 * d0,
        strong_wolfe: armijo && d.abs() <= cfg.c2 * d0.abs(),
    }
}

fn require_descent<P: Phi + ?Sized>(phi: &P) -> Result<()> {
    let d0 = phi.slope0();
    if !(d0 < 0.0) {
        return Err(Error::NotDescent { slope: d0 });
    }
    Ok(())
}

/// Backtracking: the first of `α_hi, ρα_hi, ρ²α_hi, …` passing Armijo.
pub fn backtracking<P: Phi + ?Sized>(phi: &mut P, cfg: &LineSearchConfig) -> Result<f64> {
    require_descent(phi)?;
    let (v0, d0) = (phi.value0(), phi.slope0());
    let mut alpha = cfg.alpha_hi;
    for _ in 0..cfg.max_iters {
        if armijo_holds(phi.value(alpha), v0, d0, alpha, cfg.c1) {
            return Ok(alpha);
        }
        alpha *= cfg.rho;
    }
    Err(Error::LineSearchFailed {
        alpha: alpha / cfg.rho,
        reason: "backtracking iteration cap reached".into(),
    })
}

/// Backtracking with a random first trial in `[α_hi/10, 3α_hi]` and random
/// contraction factors in `[0.1, 0.9]`.
pub fn random_armijo<P: Phi + ?Sized, R: Rng + ?Sized>(
    phi: &mut P,
    cfg: &LineSearchConfig,
    rng: &mut R,
) -> Result<f64> {
    require_descent(phi)?;
    let (v0, d0) = (phi.value0(), phi.slope0());
    let mut alpha = cfg.alpha_hi * 10f64.powf(rng.random_range(-1.0..0.477));
    for _ in 0..cfg.max_iters {
        if armijo_holds(phi.value(alpha), v0, d0, alpha, cfg.c1) {
            return Ok(alpha);
        }
        alpha *= rng.random_range(0.1..0.9);
    }
    Err(Error::LineSearchFailed {
        alpha,
        reason: "randomized backtracking iteration cap reached".into(),
    })
}

/// Bracketing search for a step satisfying the strong Wolfe conditions.
///
/// Trial steps grow geometrically from `alpha0` (capped at `alpha_max`) until
/// either a strong Wolfe step is found or an interval known to contain one
/// is bracketed and handed to [`zoom`].
pub fn strong_wolfe<P: Phi + ?Sized>(phi: &mut P, cfg: &LineSearchConfig) -> Result<f64> {
    require_descent(phi)?;
    let (v0, d0) = (phi.value0(), phi.slope0());
    let mut prev = Sample {
        alpha: 0.0,
        value: v0,
        slope: d0,
    };
    let mut alpha = cfg.alpha0.min(cfg.alpha_max);
    for i in 0..cfg.max_iters {
        let value = phi.value(alpha);
        if !armijo_holds(value, v0, d0, alpha, cfg.c1) || (i > 0 && value >= prev.value) {
            let hi = Sample {
                alpha,
                value,
                slope: f64::NAN,
            };
            return zoom_bracket(phi, prev, hi, cfg);
        }
        let slope = phi.slope(alpha);
        if slope.abs() <= -cfg.c2 * d0 {
            return Ok(alpha);
        }
        let current = Sample {
            alpha,
            value,
            slope,
        };
        if slope >= 0.0 {
            return zoom_bracket(phi, current, prev, cfg);
        }
        if alpha >= cfg.alpha_max {
            return Err(Error::LineSearchFailed {
                alpha,
                reason: "step bound reached without bracketing".into(),
            });
        }
        prev = current;
        alpha = (alpha * cfg.expansion).min(cfg.alpha_max);
    }
    Err(Error::LineSearchFailed {
        alpha: prev.alpha,
        reason: "bracketing iteration cap reached".into(),
    })
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    alpha: f64,
    value: f64,
    slope: f64,
}

/// Zoom phase on the bracket `(alpha_lo, alpha_hi)`.
///
/// `alpha_lo` must satisfy Armijo with the lowest value seen so far and the
/// bracket must contain a strong Wolfe step; `alpha_lo` may be larger than
/// `alpha_hi`.
pub fn zoom<P: Phi + ?Sized>(
    phi: &mut P,
    alpha_lo: f64,
    alpha_hi: f64,
    cfg: &LineSearchConfig,
) -> Result<f64> {
    require_descent(phi)?;
    let lo = if alpha_lo == 0.0 {
        Sample {
            alpha: 0.0,
            value: phi.value0(),
            slope: phi.slope0(),
        }
    } else {
        Sample {
            alpha: alpha_lo,
            value: phi.value(alpha_lo),
            slope: phi.slope(alpha_lo),
        }
    };
    let hi = Sample {
        alpha: alpha_hi,
        value: phi.value(alpha_hi),
        slope: f64::NAN,
    };
    zoom_bracket(phi, lo, hi, cfg)
}

fn interpolate(lo: &Sample, hi: &Sample, how: Interpolation) -> f64 {
    let mid = 0.5 * (lo.alpha + hi.alpha);
    match how {
        Interpolation::Bisection => mid,
        Interpolation::Quadratic => {
            let d = hi.alpha - lo.alpha;
            let curv = hi.value - lo.value - lo.slope * d;
            if !(curv > 0.0) || !lo.slope.is_finite() || !hi.value.is_finite() {
                return mid;
            }
            let t = lo.alpha - lo.slope * d * d / (2.0 * curv);
            let (a, b) = (lo.alpha + 0.1 * d, hi.alpha - 0.1 * d);
            let (min, max) = if a < b { (a, b) } else { (b, a) };
            if t >= min && t <= max {
                t
            } else {
                mid
            }
        }
    }
}

fn zoom_bracket<P: Phi + ?Sized>(
    phi: &mut P,
    mut lo: Sample,
    mut hi: Sample,
    cfg: &LineSearchConfig,
) -> Result<f64> {
    let (v0, d0) = (phi.value0(), phi.slope0());
    for _ in 0..cfg.zoom_max_iters {
        if (hi.alpha - lo.alpha).abs() < 1e-16 {
            return Err(Error::LineSearchFailed {
                alpha: lo.alpha,
                reason: "zoom interval collapsed".into(),
            });
        }
        let alpha = interpolate(&lo, &hi, cfg.interpolation);
        let value = phi.value(alpha);
        if !armijo_holds(value, v0, d0, alpha, cfg.c1) || value >= lo.value {
            hi = Sample {
                alpha,
                value,
                slope: f64::NAN,
            };
            continue;
        }
        let slope = phi.slope(alpha);
        if slope.abs() <= -cfg.c2 * d0 {
            return Ok(alpha);
        }
        if slope * (hi.alpha - lo.alpha) >= 0.0 {
            hi = lo;
        }
        lo = Sample {
            alpha,
            value,
            slope,
        };
    }
    Err(Error::LineSearchFailed {
        alpha: lo.alpha,
        reason: "zoom iteration cap reached".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(c: f64) -> ScalarPhi<impl FnMut(f64) -> f64, impl FnMut(f64) -> f64> {
        ScalarPhi::new(move |a| (a - c) * (a - c), move |a| 2.0 * (a - c))
    }

    /// φ(α) = (1 − 2α)², the restriction of x² at x = 1 along η = −2.
    fn square_line() -> ScalarPhi<impl FnMut(f64) -> f64, impl FnMut(f64) -> f64> {
        ScalarPhi::new(|a| (1.0 - 2.0 * a).powi(2), |a| -4.0 * (1.0 - 2.0 * a))
    }

    #[test]
    fn conditions_at_exact_minimiser() {
        let mut phi = square_line();
        let c = check_conditions(&mut phi, 0.5, &LineSearchConfig::default());
        assert!(c.armijo && c.wolfe && c.strong_wolfe);
    }

    #[test]
    fn ascent_step_fails_armijo() {
        let mut phi = square_line();
        let c = check_conditions(&mut phi, 2.0, &LineSearchConfig::default());
        assert!(!c.armijo && !c.wolfe && !c.strong_wolfe);
    }

    #[test]
    fn backtracking_examples() {
        let cfg = LineSearchConfig::default();
        assert_eq!(backtracking(&mut square_line(), &cfg).unwrap(), 0.5);
        let mut linear = ScalarPhi::new(|a| -a, |_| -1.0);
        assert_eq!(backtracking(&mut linear, &cfg).unwrap(), cfg.alpha_hi);
        assert_eq!(linear.value_evals, 1);
        let mut uphill = ScalarPhi::new(|a| a, |_| 1.0);
        assert!(matches!(
            backtracking(&mut uphill, &cfg),
            Err(Error::NotDescent { .. })
        ));
    }

    #[test]
    fn backtracking_reports_last_step_on_failure() {
        let cfg = LineSearchConfig {
            max_iters: 3,
            ..Default::default()
        };
        // Armijo never holds: φ increases although φ'(0) < 0.
        let mut phi = ScalarPhi::new(|a| if a == 0.0 { 0.0 } else { 1.0 }, |_| -1.0);
        match backtracking(&mut phi, &cfg) {
            Err(Error::LineSearchFailed { alpha, .. }) => assert_eq!(alpha, 0.25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strong_wolfe_accepts_first_trial_at_minimiser() {
        let mut phi = quad(1.0);
        let a = strong_wolfe(&mut phi, &LineSearchConfig::default()).unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(phi.value_evals, 1);
    }

    #[test]
    fn strong_wolfe_zooms_into_short_minimiser() {
        let cfg = LineSearchConfig::default();
        let mut phi = quad(0.05);
        let a = strong_wolfe(&mut phi, &cfg).unwrap();
        assert!(a > 0.0 && a < 1.0);
        assert!((2.0 * (a - 0.05)).abs() <= cfg.c2 * 0.1);
        assert!(check_conditions(&mut quad(0.05), a, &cfg).strong_wolfe);
    }

    #[test]
    fn strong_wolfe_expands_towards_far_minimiser() {
        let cfg = LineSearchConfig::default();
        let a = strong_wolfe(&mut quad(37.0), &cfg).unwrap();
        assert!(check_conditions(&mut quad(37.0), a, &cfg).strong_wolfe);
        assert!(a > 1.0);
    }

    #[test]
    fn strong_wolfe_fails_on_unbounded_decrease() {
        let cfg = LineSearchConfig::default();
        let mut phi = ScalarPhi::new(|a| -a, |_| -1.0);
        assert!(matches!(
            strong_wolfe(&mut phi, &cfg),
            Err(Error::LineSearchFailed { .. })
        ));
    }

    #[test]
    fn zoom_bisection_example() {
        let cfg = LineSearchConfig::default();
        let mut phi = quad(1.0);
        assert_eq!(zoom(&mut phi, 0.0, 2.0, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_interpolation_also_converges() {
        let cfg = LineSearchConfig {
            interpolation: Interpolation::Quadratic,
            ..Default::default()
        };
        for c in [0.01, 0.05, 0.3, 0.7] {
            let a = strong_wolfe(&mut quad(c), &cfg).unwrap();
            assert!(check_conditions(&mut quad(c), a, &cfg).strong_wolfe);
        }
    }

    #[test]
    fn config_validation() {
        assert!(LineSearchConfig::default().validate().is_ok());
        let bad = LineSearchConfig {
            c1: 0.5,
            c2: 0.4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LineSearchConfig {
            alpha0: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
