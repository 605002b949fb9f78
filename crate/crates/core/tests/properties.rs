use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcg_core::cg::{beta, BetaInputs, BetaRule, SdXi};
use rcg_core::linesearch::{
    backtracking, check_conditions, random_armijo, strong_wolfe, Interpolation, LineSearchConfig,
    ScalarPhi,
};
use rcg_core::Manifold;

/// `φ(α) = a(α − m)² + b(α − m)⁴` with minimiser `m > 0`, so `φ'(0) < 0`.
fn quartic(a: f64, b: f64, m: f64) -> ScalarPhi<impl FnMut(f64) -> f64, impl FnMut(f64) -> f64> {
    ScalarPhi::new(
        move |t| a * (t - m).powi(2) + b * (t - m).powi(4),
        move |t| 2.0 * a * (t - m) + 4.0 * b * (t - m).powi(3),
    )
}

fn manifolds() -> [Manifold; 4] {
    [
        Manifold::sphere(6).unwrap(),
        Manifold::stiefel(5, 2).unwrap(),
        Manifold::fixed_rank(6, 5, 2).unwrap(),
        Manifold::oblique(4, 3).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn backtracking_returns_armijo_step_on_the_grid(
        a in 0.01f64..100.0, b in 0.0f64..10.0, m in 1e-3f64..50.0,
    ) {
        let cfg = LineSearchConfig::default();
        let mut phi = quartic(a, b, m);
        let alpha = backtracking(&mut phi, &cfg).unwrap();
        prop_assert!(check_conditions(&mut phi, alpha, &cfg).armijo);
        let j = (cfg.alpha_hi / alpha).log2().round();
        prop_assert_eq!(cfg.alpha_hi * cfg.rho.powf(j), alpha);
        // The previous grid point, if any, must have been rejected.
        if alpha < cfg.alpha_hi {
            prop_assert!(!check_conditions(&mut phi, alpha / cfg.rho, &cfg).armijo);
        }
    }

    #[test]
    fn strong_wolfe_returns_strong_wolfe_step(
        a in 0.01f64..100.0, b in 0.0f64..10.0, m in 1e-3f64..50.0,
        c2 in 0.1f64..0.9, quadratic in any::<bool>(),
    ) {
        let cfg = LineSearchConfig {
            c2,
            interpolation: if quadratic { Interpolation::Quadratic } else { Interpolation::Bisection },
            ..Default::default()
        };
        let mut phi = quartic(a, b, m);
        let alpha = strong_wolfe(&mut phi, &cfg).unwrap();
        prop_assert!(alpha > 0.0 && alpha <= cfg.alpha_max);
        prop_assert!(check_conditions(&mut phi, alpha, &cfg).strong_wolfe);
    }

    #[test]
    fn random_armijo_is_reproducible_and_armijo(
        a in 0.01f64..100.0, m in 1e-3f64..50.0, seed in any::<u64>(),
    ) {
        let cfg = LineSearchConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_armijo(&mut quartic(a, 0.0, m), &cfg, &mut rng).unwrap()
        };
        let alpha = run(seed);
        prop_assert_eq!(alpha, run(seed));
        prop_assert!(alpha <= 3.0 * cfg.alpha_hi);
        prop_assert!(check_conditions(&mut quartic(a, 0.0, m), alpha, &cfg).armijo);
    }

    #[test]
    fn beta_ranges(which in 0usize..4, seed in 0u64..10_000, dd in -5.0f64..-0.1, gsq in 0.1f64..5.0) {
        let man = &manifolds()[which];
        let x = man.random_point(seed);
        let g = man.random_tangent(&x, seed + 1).unwrap();
        let tg = man.random_tangent(&x, seed + 2).unwrap();
        let te = man.random_tangent(&x, seed + 3).unwrap();
        let inputs = BetaInputs {
            g_new: &g,
            transported_g: &tg,
            transported_eta: &te,
            g_norm_sq_prev: gsq,
            dir_deriv_prev: dd,
            eta_norm_prev: 1.0,
        };
        let b = |r| beta(&r, &inputs);
        let (fr, prp, hs, dy) = (b(BetaRule::Fr), b(BetaRule::Prp), b(BetaRule::Hs), b(BetaRule::Dy));
        prop_assert!(fr >= 0.0);
        let h1 = b(BetaRule::Hybrid1);
        prop_assert!(h1 >= 0.0 && h1 <= dy.max(0.0) + 1e-15 && h1 <= hs.max(0.0) + 1e-15);
        let h2 = b(BetaRule::Hybrid2);
        prop_assert!(h2 >= 0.0 && h2 <= fr && h2 <= prp.max(0.0));
        for rule in [BetaRule::hz(), BetaRule::sd(SdXi::HzQuotient), BetaRule::sd(SdXi::GradientDifference)] {
            prop_assert!(b(rule).is_finite());
        }
    }

    #[test]
    fn scaled_transport_never_increases_norms(which in 0usize..4, seed in 0u64..10_000, t in 0.01f64..3.0) {
        let man = &manifolds()[which];
        let x = man.random_point(seed);
        let eta = man.random_tangent(&x, seed + 1).unwrap().scaled(t);
        let xi = man.random_tangent(&x, seed + 2).unwrap();
        let tr = man.transporter(&x, &eta).unwrap();
        let (moved, s) = tr.scaled(&xi).unwrap();
        let y = tr.target();
        prop_assert!(s > 0.0 && s <= 1.0);
        prop_assert!(man.norm(y, &moved).unwrap() <= man.norm(&x, &xi).unwrap() * (1.0 + 1e-12));
        prop_assert!(man.tangent_residual(y, &moved).unwrap() <= 1e-10);
        prop_assert!(man.point_residual(y).unwrap() <= 1e-10);
    }
}
