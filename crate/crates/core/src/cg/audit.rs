use serde::{Deserialize, Serialize};

use super::{BetaRule, SolverConfig, Trace};
use crate::error::{Error, Result};
use crate::linesearch::Strategy;

/// Interval that `⟨g_k, η_k⟩ / ‖g_k‖²` must lie in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentBound {
    /// `-∞` for one-sided bounds.
    pub lower: f64,
    pub upper: f64,
}

impl DescentBound {
    /// Signed distance to the nearest end of the interval; negative
    /// outside.
    pub fn slack(&self, ratio: f64) -> f64 {
        (ratio - self.lower).min(self.upper - ratio)
    }
}

/// The sufficient-descent bound that theory guarantees for this rule and
/// line search, if any.
///
/// - FR, Hybrid2 with strong Wolfe steps and `c₂ < 1/2`:
///   `[−1/(1−c₂), −(1−2c₂)/(1−c₂)]`;
/// - DY with (strong) Wolfe steps: `[−1/(1−c₂), −1/(1+c₂)]`;
/// - Hybrid1 with strong Wolfe steps: `[−(1+c₂)/(1−c₂), −(1−c₂)/(1+c₂)]`;
/// - HZ and SD with any step sizes: `(−∞, −(1 − 1/(4μ))]`.
pub fn descent_bound(rule: &BetaRule, cfg: &SolverConfig) -> Result<DescentBound> {
    let c2 = cfg.linesearch.c2;
    let wolfe = cfg.strategy == Strategy::StrongWolfe;
    let none = |why: &str| {
        Err(Error::NoApplicableBound(format!(
            "{rule} with {}: {why}",
            cfg.strategy.as_str()
        )))
    };
    match *rule {
        BetaRule::Hz { mu } | BetaRule::Sd { mu, .. } => Ok(DescentBound {
            lower: f64::NEG_INFINITY,
            upper: -(1.0 - 1.0 / (4.0 * mu)),
        }),
        BetaRule::Fr | BetaRule::Hybrid2 if wolfe && c2 < 0.5 => Ok(DescentBound {
            lower: -1.0 / (1.0 - c2),
            upper: -(1.0 - 2.0 * c2) / (1.0 - c2),
        }),
        BetaRule::Fr | BetaRule::Hybrid2 if wolfe => none("requires c2 < 1/2"),
        BetaRule::Dy if wolfe => Ok(DescentBound {
            lower: -1.0 / (1.0 - c2),
            upper: -1.0 / (1.0 + c2),
        }),
        BetaRule::Hybrid1 if wolfe => Ok(DescentBound {
            lower: -(1.0 + c2) / (1.0 - c2),
            upper: -(1.0 - c2) / (1.0 + c2),
        }),
        BetaRule::Fr | BetaRule::Hybrid2 | BetaRule::Dy | BetaRule::Hybrid1 => {
            none("requires strong Wolfe steps")
        }
        BetaRule::Prp | BetaRule::Hs => none("no sufficient-descent guarantee exists"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub ratio: f64,
    /// Negative distance to the violated end of the interval.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub bound: DescentBound,
    /// Iterations whose ratio was checked.
    pub checked: usize,
    /// Iterations skipped because the direction was reset to `−g`.
    pub skipped_fallback: usize,
    /// Smallest slack over all checked iterations (`+∞` if none).
    pub min_slack: f64,
    /// Iterations outside the interval, with no tolerance applied.
    pub violations: Vec<Violation>,
}

impl AuditReport {
    /// Whether every checked iteration lies within `tol` of the interval.
    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }
}

/// Checks every recorded iteration against [`descent_bound`]. Iterations
/// whose direction was reset by the descent fallback are not covered by
/// the theory and are counted separately.
pub fn descent_audit(trace: &Trace, rule: &BetaRule, cfg: &SolverConfig) -> Result<AuditReport> {
    let bound = descent_bound(rule, cfg)?;
    let mut report = AuditReport {
        bound,
        checked: 0,
        skipped_fallback: 0,
        min_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for r in &trace.records {
        if r.fallback {
            report.skipped_fallback += 1;
            continue;
        }
        let ratio = r.descent_ratio();
        // A NaN ratio must count as a violation.
        let slack = if ratio.is_nan() {
            f64::NEG_INFINITY
        } else {
            bound.slack(ratio)
        };
        report.checked += 1;
        report.min_slack = report.min_slack.min(slack);
        if slack < 0.0 {
            report.violations.push(Violation {
                k: r.k,
                ratio,
                slack,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linesearch::LineSearchConfig;

    fn cfg(strategy: Strategy, c2: f64) -> SolverConfig {
        SolverConfig {
            strategy,
            linesearch: LineSearchConfig {
                c2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn hz_threshold_at_default_mu() {
        let b = descent_bound(&BetaRule::hz(), &cfg(Strategy::Backtracking, 0.9)).unwrap();
        assert_eq!(b.upper, -0.875);
        assert_eq!(b.lower, f64::NEG_INFINITY);
    }

    #[test]
    fn fr_interval_with_small_c2() {
        let b = descent_bound(&BetaRule::Fr, &cfg(Strategy::StrongWolfe, 0.4)).unwrap();
        assert!((b.upper + 1.0 / 3.0).abs() < 1e-15);
        assert!((b.lower + 1.0 / 0.6).abs() < 1e-15);
        let h1 = descent_bound(&BetaRule::Hybrid1, &cfg(Strategy::StrongWolfe, 0.4)).unwrap();
        assert!((h1.lower + 1.4 / 0.6).abs() < 1e-15);
        assert!((h1.upper + 0.6 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn missing_bounds_are_reported() {
        for (rule, c) in [
            (BetaRule::Prp, cfg(Strategy::StrongWolfe, 0.4)),
            (BetaRule::Fr, cfg(Strategy::StrongWolfe, 0.9)),
            (BetaRule::Hybrid2, cfg(Strategy::Backtracking, 0.4)),
            (BetaRule::Dy, cfg(Strategy::Backtracking, 0.4)),
        ] {
            assert!(matches!(
                descent_bound(&rule, &c),
                Err(Error::NoApplicableBound(_))
            ));
        }
    }

    #[test]
    fn steepest_descent_start_is_inside_every_interval() {
        for rule in [
            BetaRule::Fr,
            BetaRule::Dy,
            BetaRule::Hybrid1,
            BetaRule::Hybrid2,
            BetaRule::hz(),
        ] {
            let b = descent_bound(&rule, &cfg(Strategy::StrongWolfe, 0.4)).unwrap();
            assert!(b.slack(-1.0) > 0.0, "{rule}");
        }
    }
}
