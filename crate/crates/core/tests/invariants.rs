use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robust_beam::analytic::solve_analytic;
use robust_beam::channel::{
    check_feasible, complex_gaussian, ellipsoid_quadratic_form, rate_of, worst_case_channel, worst_case_interference,
    EllipsoidSampler, Scenario,
};
use robust_beam::experiments::{gen_scenario, CovMode, ExperimentConfig};
use robust_beam::linalg::{CVector, C64};
use robust_beam::socp::solve_scenario_socp;

fn scenario(iso: bool, seed: u64, p_bar_db: f64, p_t_db: f64, epsilon: f64, l_ratio: f64) -> Scenario {
    let cfg = ExperimentConfig {
        p_bar_db,
        p_t_db,
        epsilon,
        l_ratio,
        seed,
        cov_mode: if iso { CovMode::Isotropic { sigma: 1.0 } } else { CovMode::RandomWishart },
        ..ExperimentConfig::default()
    };
    gen_scenario(&cfg, 0).unwrap()
}

/// The largest feasible power for direction `v`.
fn max_power(v: &CVector, sc: &Scenario) -> f64 {
    sc.p_bar().min(sc.p_t() / worst_case_interference(1.0, v, sc.uncertainty()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_ellipsoid_point_exceeds_the_worst_case(
        seed in any::<u64>(), iso in any::<bool>(), eps in 0.01f64..2.0, l in 1.0f64..3.0,
    ) {
        let sc = scenario(iso, seed, 5.0, 0.0, eps, l);
        let m = sc.uncertainty();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = complex_gaussian(&mut rng, sc.dim()).normalize();
        let closed = worst_case_interference(1.0, &v, m);

        let h_max = worst_case_channel(&v, m);
        prop_assert!((ellipsoid_quadratic_form(&h_max, m) - m.epsilon()).abs() <= 1e-9 * m.epsilon());
        prop_assert!((h_max.dotc(&v).norm_sqr() - closed).abs() <= 1e-9 * closed);

        let mut sampler = EllipsoidSampler::new(m, false);
        for _ in 0..200 {
            let h = sampler.sample(&mut rng);
            prop_assert!(h.dotc(&v).norm_sqr() <= closed * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rate_and_interference_ignore_common_phase(
        seed in any::<u64>(), phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let sc = scenario(false, seed, 5.0, 0.0, 0.3, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = complex_gaussian(&mut rng, sc.dim()).normalize();
        let w = &v * C64::from_polar(1.0, phi);
        let (r1, r2) = (rate_of(2.0, &v, sc.hs()), rate_of(2.0, &w, sc.hs()));
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1.max(1.0));
        let (i1, i2) = (worst_case_interference(2.0, &v, sc.uncertainty()), worst_case_interference(2.0, &w, sc.uncertainty()));
        prop_assert!((i1 - i2).abs() <= 1e-12 * i1);
    }

    #[test]
    fn isotropic_solvers_are_feasible_agree_and_beat_random_beams(
        seed in any::<u64>(), p_bar_db in 0.0f64..10.0, p_t_db in -10.0f64..5.0,
        eps in 0.05f64..1.0, l in 1.0f64..3.0,
    ) {
        let sc = scenario(true, seed, p_bar_db, p_t_db, eps, l);
        let a = solve_analytic(&sc).unwrap();
        let s = solve_scenario_socp(&sc).unwrap();
        prop_assert!(check_feasible(&a, &sc, 1e-9).is_feasible());
        prop_assert!(check_feasible(&s, &sc, 1e-6).is_feasible());
        prop_assert!((a.rate - s.rate).abs() <= 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        for _ in 0..100 {
            let v = complex_gaussian(&mut rng, sc.dim()).normalize();
            prop_assert!(rate_of(max_power(&v, &sc), &v, sc.hs()) <= a.rate + 1e-12);
        }
    }

    #[test]
    fn socp_is_feasible_for_general_covariance(
        seed in any::<u64>(), p_bar_db in 0.0f64..10.0, eps in 0.05f64..1.0,
    ) {
        let sc = scenario(false, seed, p_bar_db, 0.0, eps, 2.0);
        let s = solve_scenario_socp(&sc).unwrap();
        prop_assert!(check_feasible(&s, &sc, 1e-6).is_feasible());
        prop_assert!(s.rate <= (sc.p_bar() * sc.hs().norm_squared()).ln_1p() + 1e-9);
    }
}
