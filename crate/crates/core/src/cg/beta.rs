use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::TangentVector;

/// Default weight of the correction term in the HZ and SD rules.
pub const DEFAULT_MU: f64 = 2.0;

/// Choice of the tangent vector `ξ_{k+1}` in the SD rule
/// `β = ⟨g_{k+1}, ξ⟩ − μ‖ξ‖²⟨g_{k+1}, T^S(η_k)⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdXi {
    /// `ξ = y / (⟨g_{k+1}, T^S(η_k)⟩ − ⟨g_k, η_k⟩)`, which reproduces HZ.
    #[default]
    HzQuotient,
    /// `ξ = y`.
    GradientDifference,
}

/// Formula for the conjugate-gradient coefficient `β_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    Fr,
    Prp,
    Hs,
    Dy,
    Hybrid1,
    Hybrid2,
    Hz { mu: f64 },
    Sd { mu: f64, xi: SdXi },
}

impl BetaRule {
    /// The seven rules compared in the benchmark, with default parameters.
    pub const BENCHMARK: [BetaRule; 7] = [
        BetaRule::Fr,
        BetaRule::Dy,
        BetaRule::Prp,
        BetaRule::Hs,
        BetaRule::Hz { mu: DEFAULT_MU },
        BetaRule::Hybrid1,
        BetaRule::Hybrid2,
    ];

    pub fn hz() -> Self {
        BetaRule::Hz { mu: DEFAULT_MU }
    }

    pub fn sd(xi: SdXi) -> Self {
        BetaRule::Sd { mu: DEFAULT_MU, xi }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BetaRule::Fr => "FR",
            BetaRule::Prp => "PRP",
            BetaRule::Hs => "HS",
            BetaRule::Dy => "DY",
            BetaRule::Hybrid1 => "Hybrid1",
            BetaRule::Hybrid2 => "Hybrid2",
            BetaRule::Hz { .. } => "HZ",
            BetaRule::Sd { .. } => "SD",
        }
    }

    /// Whether some line search makes every direction of this rule a
    /// descent direction. Only PRP and HS have no such guarantee.
    pub fn guarantees_descent(&self) -> bool {
        !matches!(self, BetaRule::Prp | BetaRule::Hs)
    }

    pub fn mu(&self) -> Option<f64> {
        match *self {
            BetaRule::Hz { mu } | BetaRule::Sd { mu, .. } => Some(mu),
            _ => None,
        }
    }

    /// The same rule with `μ` replaced; rules without `μ` are unchanged.
    pub fn with_mu(self, mu: f64) -> Self {
        match self {
            BetaRule::Hz { .. } => BetaRule::Hz { mu },
            BetaRule::Sd { xi, .. } => BetaRule::Sd { mu, xi },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mu() {
            Some(mu) if !(mu > 0.25 && mu.is_finite()) => Err(Error::InvalidConfig(format!(
                "{} needs mu > 1/4, got {mu}",
                self.name()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BetaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BetaRule {
    type Err = Error;

    /// Parses a rule name; `μ` takes its default value.
    fn from_str(s: &str) -> Result<Self> {
        Ok(
            match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
                "fr" => BetaRule::Fr,
                "prp" => BetaRule::Prp,
                "hs" => BetaRule::Hs,
                "dy" => BetaRule::Dy,
                "hybrid1" | "hyb1" => BetaRule::Hybrid1,
                "hybrid2" | "hyb2" => BetaRule::Hybrid2,
                "hz" => BetaRule::hz(),
                "sd" => BetaRule::sd(SdXi::HzQuotient),
                "sdy" | "sdgrad" => BetaRule::sd(SdXi::GradientDifference),
                _ => return Err(Error::InvalidConfig(format!("unknown beta rule `{s}`"))),
            },
        )
    }
}

/// Quantities entering `β_{k+1}`. Tangents are based at `x_{k+1}`; the two
/// scalars refer to iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct BetaInputs<'a> {
    /// `g_{k+1}`
    pub g_new: &'a TangentVector,
    /// `T^S_{α_kη_k}(g_k)`
    pub transported_g: &'a TangentVector,
    /// `T^S_{α_kη_k}(η_k)`
    pub transported_eta: &'a TangentVector,
    /// `‖g_k‖²`
    pub g_norm_sq_prev: f64,
    /// `⟨g_k, η_k⟩`
    pub dir_deriv_prev: f64,
    /// `‖η_k‖`
    pub eta_norm_prev: f64,
}

/// Scalar products from which every rule is assembled.
#[derive(Debug, Clone, Copy)]
struct Products {
    g_sq: f64,
    g_y: f64,
    y_sq: f64,
    g_t: f64,
    denom: f64,
    denom_ok: bool,
}

impl BetaInputs<'_> {
    fn products(&self) -> Products {
        let g = self.g_new;
        let g_sq = g.dot(g);
        let g_t = g.dot(self.transported_eta);
        let y = g.minus(self.transported_g);
        let g_y = g.dot(&y);
        let y_sq = y.dot(&y);
        let denom = g_t - self.dir_deriv_prev;
        let guard = 1e-14 * (g_sq.sqrt() * self.eta_norm_prev).max(1.0);
        Products {
            g_sq,
            g_y,
            y_sq,
            g_t,
            denom,
            denom_ok: denom.abs() >= guard && denom.is_finite(),
        }
    }
}

/// `β_{k+1}` for the given rule. Degenerate denominators and non-finite
/// results yield `β = 0`, i.e. a steepest-descent step.
pub fn beta(rule: &BetaRule, inputs: &BetaInputs<'_>) -> f64 {
    let p = inputs.products();
    let value = match *rule {
        BetaRule::Fr => fr(&p, inputs),
        BetaRule::Prp => prp(&p, inputs),
        BetaRule::Hs => hs(&p),
        BetaRule::Dy => dy(&p),
        BetaRule::Hybrid1 => hs(&p).min(dy(&p)).max(0.0),
        BetaRule::Hybrid2 => fr(&p, inputs).min(prp(&p, inputs)).max(0.0),
        BetaRule::Hz { mu } => {
            if p.denom_ok {
                hs(&p) - mu * p.y_sq * p.g_t / (p.denom * p.denom)
            } else {
                0.0
            }
        }
        BetaRule::Sd { mu, xi } => {
            let (g_xi, xi_sq) = match xi {
                SdXi::HzQuotient if p.denom_ok => (p.g_y / p.denom, p.y_sq / (p.denom * p.denom)),
                SdXi::HzQuotient => return 0.0,
                SdXi::GradientDifference => (p.g_y, p.y_sq),
            };
            g_xi - mu * xi_sq * p.g_t
        }
    };
    if value.is_finite() {
        value
    } else {
        0.0
    }
}

fn fr(p: &Products, inputs: &BetaInputs<'_>) -> f64 {
    p.g_sq / inputs.g_norm_sq_prev
}

fn prp(p: &Products, inputs: &BetaInputs<'_>) -> f64 {
    p.g_y / inputs.g_norm_sq_prev
}

fn hs(p: &Products) -> f64 {
    if p.denom_ok {
        p.g_y / p.denom
    } else {
        0.0
    }
}

fn dy(p: &Products) -> f64 {
    if p.denom_ok {
        p.g_sq / p.denom
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::Manifold;

    struct Tuple {
        g_new: TangentVector,
        tg: TangentVector,
        teta: TangentVector,
        g_sq_prev: f64,
        dd_prev: f64,
        eta_norm_prev: f64,
    }

    impl Tuple {
        fn inputs(&self) -> BetaInputs<'_> {
            BetaInputs {
                g_new: &self.g_new,
                transported_g: &self.tg,
                transported_eta: &self.teta,
                g_norm_sq_prev: self.g_sq_prev,
                dir_deriv_prev: self.dd_prev,
                eta_norm_prev: self.eta_norm_prev,
            }
        }
    }

    fn tuple(seed: u64) -> Tuple {
        let m = Manifold::stiefel(5, 2).unwrap();
        let x = m.random_point(seed);
        Tuple {
            g_new: m.random_tangent(&x, seed + 1).unwrap(),
            tg: m.random_tangent(&x, seed + 2).unwrap(),
            teta: m.random_tangent(&x, seed + 3).unwrap(),
            g_sq_prev: 1.7,
            dd_prev: -2.3,
            eta_norm_prev: 1.9,
        }
    }

    #[test]
    fn fr_of_equal_norms_is_one() {
        let t = tuple(1);
        let t = Tuple {
            g_sq_prev: t.g_new.norm().powi(2),
            ..t
        };
        assert!((beta(&BetaRule::Fr, &t.inputs()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prp_vanishes_when_gradient_is_transported_exactly() {
        let t = tuple(2);
        let t = Tuple {
            tg: t.g_new.clone(),
            ..t
        };
        assert_eq!(beta(&BetaRule::Prp, &t.inputs()), 0.0);
        assert_eq!(beta(&BetaRule::Hs, &t.inputs()), 0.0);
    }

    #[test]
    fn hybrid2_clips_negative_prp() {
        for seed in 0..40 {
            let t = tuple(10 * seed);
            let prp = beta(&BetaRule::Prp, &t.inputs());
            let h2 = beta(&BetaRule::Hybrid2, &t.inputs());
            if prp < 0.0 {
                assert_eq!(h2, 0.0);
            }
            assert!(h2 >= 0.0 && h2 <= beta(&BetaRule::Fr, &t.inputs()));
        }
    }

    #[test]
    fn hz_matches_direct_evaluation() {
        let t = tuple(7);
        // Materialise y and evaluate the formula term by term.
        let y = TangentVector::lincomb(1.0, &t.g_new, -1.0, &t.tg).unwrap();
        let g_t = t.g_new.dot(&t.teta);
        let denom = g_t - t.dd_prev;
        let hs = t.g_new.dot(&y) / denom;
        let expected = hs - 2.0 * y.dot(&y) * g_t / (denom * denom);
        let got = beta(&BetaRule::hz(), &t.inputs());
        assert!((got - expected).abs() <= 1e-13 * expected.abs().max(1.0));
    }

    #[test]
    fn degenerate_denominator_gives_zero() {
        let t = tuple(3);
        let g_t = t.g_new.dot(&t.teta);
        let t = Tuple { dd_prev: g_t, ..t };
        for rule in [
            BetaRule::Hs,
            BetaRule::Dy,
            BetaRule::hz(),
            BetaRule::sd(SdXi::HzQuotient),
        ] {
            assert_eq!(beta(&rule, &t.inputs()), 0.0, "{rule}");
        }
    }

    #[test]
    fn sd_with_gradient_difference() {
        let t = tuple(5);
        let y = TangentVector::lincomb(1.0, &t.g_new, -1.0, &t.tg).unwrap();
        let expected = t.g_new.dot(&y) - 2.0 * y.dot(&y) * t.g_new.dot(&t.teta);
        let got = beta(&BetaRule::sd(SdXi::GradientDifference), &t.inputs());
        assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!("Hybrid2".parse::<BetaRule>().unwrap(), BetaRule::Hybrid2);
        assert_eq!("hz".parse::<BetaRule>().unwrap(), BetaRule::Hz { mu: 2.0 });
        assert!("xyz".parse::<BetaRule>().is_err());
        assert!(BetaRule::Hz { mu: 0.25 }.validate().is_err());
        assert!(BetaRule::hz().with_mu(0.3).validate().is_ok());
        let json = serde_json::to_string(&BetaRule::sd(SdXi::GradientDifference)).unwrap();
        assert_eq!(
            serde_json::from_str::<BetaRule>(&json).unwrap(),
            BetaRule::sd(SdXi::GradientDifference)
        );
    }
}
