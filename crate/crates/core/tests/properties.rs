use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pointint_core::bogolyubov::{
    evolve, form_factor, fuse, fused_params_match_sl2, params_from_sl2, sl2_from_params, BogolyubovParams,
    Sl2Element,
};
use pointint_core::gaussian::{krein_residual, random_form, schur_determinants, Field};
use pointint_core::greenfn::{
    correlator_det, one_point, resolvent_kernel, u_matrix, weinstein_aronszajn_det, PointInteractionConfig,
    SpectralParameter,
};
use pointint_core::linalg::{det, rel_diff, CMatrix};
use pointint_core::oracle::transfer::TransferGreen;
use pointint_core::sampling::{random_complex_mass, random_config, random_config_with_len, random_real_mass, ConfigRanges};
use pointint_core::tau::{
    cross_ratio_tau, ext_subspace, fin_check, friedrichs_subspace, int_subspace, reference_subspace, tau_collapsed,
    tau_via_cross_ratio, tau_via_m, Localization,
};

fn setup(seed: u64, complex: bool) -> (ChaCha8Rng, SpectralParameter, PointInteractionConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = random_config(&mut rng, &ConfigRanges::default());
    let sp = if complex {
        random_complex_mass(&mut rng, (0.2, 4.0), (0.05, 0.7))
    } else {
        random_real_mass(&mut rng, (0.2, 4.0))
    };
    (rng, sp, cfg)
}

fn params<R: Rng>(rng: &mut R, bound: f64) -> BogolyubovParams {
    let mut draw = || C64::new(rng.random_range(-bound..bound), rng.random_range(-bound..bound)) / 2f64.sqrt();
    BogolyubovParams::new(draw(), draw(), draw()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resolvent_is_symmetric(seed in any::<u64>(), complex in any::<bool>(), x in -3.0..8.0f64, y in -3.0..8.0f64) {
        let (_, sp, cfg) = setup(seed, complex);
        let a = resolvent_kernel(&sp, &cfg, x, y).unwrap();
        let b = resolvent_kernel(&sp, &cfg, y, x).unwrap();
        prop_assert!(rel_diff(a, b) < 1e-12);
        let t = TransferGreen::new(&sp, &cfg).unwrap();
        prop_assert!(rel_diff(t.kernel(x, y).unwrap(), t.kernel(y, x).unwrap()) < 1e-12);
    }

    #[test]
    fn derivative_jump_matches_strength(seed in any::<u64>(), y in -3.0..8.0f64) {
        let (_, sp, cfg) = setup(seed, false);
        let h = 1e-4 * cfg.min_gap().unwrap_or(1.0).min(1.0);
        for (&a, &v) in cfg.positions().iter().zip(cfg.strengths()) {
            let g = |x: f64| resolvent_kernel(&sp, &cfg, x, y).unwrap();
            // one-sided second-order stencils, so that a point at y is harmless
            let right = (-3.0 * g(a) + 4.0 * g(a + h) - g(a + 2.0 * h)) / (2.0 * h);
            let left = (3.0 * g(a) - 4.0 * g(a - h) + g(a - 2.0 * h)) / (2.0 * h);
            if (y - a).abs() < 2.0 * h {
                continue;
            }
            let jump = right - left;
            let want = v * g(a);
            prop_assert!((jump - want).norm() < 1e-6 * want.norm().max(1e-3), "jump {jump} want {want}");
        }
    }

    #[test]
    fn away_from_points_the_kernel_solves_the_free_equation(seed in any::<u64>(), t in 0.1..0.9f64) {
        let (_, sp, cfg) = setup(seed, false);
        let a = cfg.positions();
        let (x, y) = if a.len() > 1 { (a[0] + t * (a[1] - a[0]), a[a.len() - 1] + 0.5) } else { (a[0] - 1.0 + t * 0.5, a[0] + 0.5) };
        let dist = a.iter().map(|p| (p - x).abs()).fold(f64::INFINITY, f64::min);
        let m = sp.m().norm();
        // step scaled to the decay length; the kernel carries absolute rounding of order eps/m
        let h = (1e-2 / m).min(0.5 * dist);
        let g = |x: f64| resolvent_kernel(&sp, &cfg, x, y).unwrap();
        let second = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
        let want = sp.m() * sp.m() * g(x);
        let rounding = 1e3 * f64::EPSILON / (m * h * h);
        prop_assert!((second - want).norm() < 1e-4 * want.norm() + rounding);
    }

    #[test]
    fn correlator_matches_determinant_identities(seed in any::<u64>(), complex in any::<bool>()) {
        let (_, sp, cfg) = setup(seed, complex);
        let corr = correlator_det(&sp, &cfg).unwrap();
        let wa = weinstein_aronszajn_det(&sp, &cfg).unwrap();
        prop_assert!(rel_diff(corr.powi(-2), wa) < 1e-12);
        let via_u = det(&u_matrix(&sp, &cfg).unwrap()).unwrap() * cfg.strengths().iter().product::<f64>();
        prop_assert!(rel_diff(via_u, wa) < 1e-12);
    }

    #[test]
    fn correlator_factorizes_at_large_separation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = random_real_mass(&mut rng, (0.2, 4.0));
        let n = rng.random_range(1..=5);
        let step = 40.0 / sp.m().re;
        let pairs: Vec<(f64, f64)> = (0..n).map(|j| (j as f64 * step, rng.random_range(0.2..5.0))).collect();
        let cfg = PointInteractionConfig::from_pairs(&pairs).unwrap();
        let product: C64 = pairs.iter().map(|&(_, v)| one_point(&sp, v).unwrap()).product();
        prop_assert!(rel_diff(correlator_det(&sp, &cfg).unwrap(), product) < 1e-10);
    }

    #[test]
    fn sl2_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (alpha, beta, gamma) = (draw(), draw(), draw());
        prop_assume!(alpha.norm() > 0.1);
        let s = Sl2Element::new(alpha, beta, gamma, (1.0 + beta * gamma) / alpha).unwrap();
        let p = params_from_sl2(&s).unwrap();
        prop_assert!(sl2_from_params(&p).unwrap().max_abs_diff(&s) < 1e-12 * (1.0 + alpha.norm().recip()).powi(2));
        let t = sl2_from_params(&params(&mut rng, 0.9)).unwrap();
        prop_assert!((t.determinant() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn fusion_represents_the_sl2_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (params(&mut rng, 0.8), params(&mut rng, 0.8));
        prop_assert!(fused_params_match_sl2(&p, &q).unwrap() < 1e-10);
        let f = fuse(&p, &BogolyubovParams::identity()).unwrap();
        prop_assert!(f.params.max_abs_diff(&p) < 1e-15 && f.c12 == C64::new(1.0, 0.0));
    }

    #[test]
    fn evolution_is_additive(seed in any::<u64>(), x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params(&mut rng, 0.8);
        let sp = random_complex_mass(&mut rng, (0.2, 2.0), (0.0, 0.7));
        let twice = evolve(&evolve(&p, x1, &sp), x2, &sp);
        let once = evolve(&p, x1 + x2, &sp);
        prop_assert!(twice.max_abs_diff(&once) < 1e-12 * (1.0 + once.nu.norm() + once.lambda.norm()));
    }

    #[test]
    fn odd_total_index_vanishes(seed in any::<u64>(), k in 0usize..40, l in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params(&mut rng, 0.9);
        if (k + l) % 2 == 1 {
            prop_assert_eq!(form_factor(k, l, &p).unwrap(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn tau_routes_and_localization(seed in any::<u64>(), complex in any::<bool>()) {
        let (mut rng, sp, cfg) = setup(seed, complex);
        let loc = Localization::default_for(&cfg);
        let reference = tau_collapsed(&sp, &cfg).unwrap();
        prop_assert!(rel_diff(tau_via_m(&sp, &loc, &cfg).unwrap(), reference) < 1e-10);
        prop_assert!(rel_diff(tau_via_cross_ratio(&sp, &loc, &cfg).unwrap(), reference) < 1e-10);
        let a = cfg.positions();
        let intervals: Vec<(f64, f64)> = (0..a.len())
            .map(|j| {
                let lo = if j == 0 { a[0] - 1.0 } else { 0.5 * (a[j - 1] + a[j]) };
                let hi = if j + 1 == a.len() { a[j] + 1.0 } else { 0.5 * (a[j] + a[j + 1]) };
                (rng.random_range(lo..a[j]), rng.random_range(a[j]..hi))
            })
            .collect();
        if let Ok(other) = Localization::new(&intervals) {
            prop_assert!(rel_diff(tau_via_m(&sp, &other, &cfg).unwrap(), reference) < 1e-10);
        }
    }

    #[test]
    fn cross_ratio_ignores_choice_of_bases(seed in any::<u64>()) {
        let (mut rng, sp, cfg) = setup(seed, true);
        let loc = Localization::default_for(&cfg);
        let subspaces = [
            int_subspace(&sp, &loc, &cfg).unwrap(),
            friedrichs_subspace(&sp, &loc).unwrap(),
            ext_subspace(&sp, &loc).unwrap(),
            reference_subspace(loc.len()).unwrap(),
        ];
        let before = cross_ratio_tau(&subspaces[0], &subspaces[1], &subspaces[2], &subspaces[3]).unwrap();
        let rebased: Vec<_> = subspaces
            .iter()
            .map(|w| {
                let d = w.dim();
                // well-conditioned change of basis: identity plus a small perturbation
                let g = CMatrix::from_fn(d, d, |i, j| {
                    let e = C64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)) / d as f64;
                    if i == j { e + 1.0 } else { e }
                });
                w.rebased(&g).unwrap()
            })
            .collect();
        let after = cross_ratio_tau(&rebased[0], &rebased[1], &rebased[2], &rebased[3]).unwrap();
        prop_assert!(rel_diff(before, after) < 1e-10);
    }

    #[test]
    fn tau_is_the_squared_inverse_normalized_correlator(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_config_with_len(&mut rng, &ConfigRanges::default(), 4);
        let sp = random_real_mass(&mut rng, (0.2, 4.0));
        let (tau, corr) = fin_check(&sp, &cfg).unwrap();
        prop_assert!(rel_diff(tau, corr) < 1e-10);
    }

    #[test]
    fn gaussian_identities(seed in any::<u64>(), complex in any::<bool>(), definite in any::<bool>(), m in 1usize..6, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = if complex { Field::Complex } else { Field::Real };
        let q = random_form(&mut rng, field, m, n, definite);
        let d = schur_determinants(&q).unwrap();
        prop_assert!(d.residual() < 1e-10 * d.joint.norm());
        prop_assert!(krein_residual(&q).unwrap() < 1e-10);
    }
}
