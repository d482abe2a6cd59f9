//! Property-based invariants for the sampling and planning layers.

use proptest::prelude::*;

use qtail::dist::{sample, ClipSpec, DistSpec};
use qtail::gg1::{self, Gg1Params, Metric};
use qtail::planner::{self, MaxWeightDriftSpec};
use qtail::seed::SeedStream;

fn dist_strategy() -> impl Strategy<Value = DistSpec> {
    prop_oneof![
        prop::collection::vec(0.01f64..1.0, 1..8).prop_map(|w| {
            let total: f64 = w.iter().sum();
            DistSpec::BoundedDiscrete {
                pmf: w.into_iter().map(|x| x / total).collect(),
            }
        }),
        (0.05f64..5.0).prop_map(|rate| DistSpec::Exponential { rate }),
        (0.0f64..10.0).prop_map(|value| DistSpec::Deterministic { value }),
        prop::collection::vec(0.0f64..10.0, 1..8).prop_map(|mut v| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            DistSpec::InverseCdfTable { values: v }
        }),
    ]
}

proptest! {
    #[test]
    fn quantile_is_monotone(dist in dist_strategy(), u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        prop_assert!(dist.quantile(lo) <= dist.quantile(hi));
    }

    #[test]
    fn clipping_dominates(dist in dist_strategy(), u in 0.0f64..1.0, level in 0.1f64..20.0) {
        let draw = qtail::seed::UniformDraw { value: u, bit_width: 53 };
        let clipped = sample(&dist, &ClipSpec::at(level), draw);
        let raw = sample(&dist, &ClipSpec::none(), draw);
        prop_assert!(clipped <= raw);
        prop_assert!(clipped <= level);
        prop_assert!(clipped >= 0.0);
    }

    #[test]
    fn horizon_satisfies_both_guarantees(beta in 1e-4f64..3.0, log_eps in -8.0f64..-0.5) {
        let eps_tot = 10f64.powf(log_eps);
        let m = planner::choose_horizon(beta, eps_tot).unwrap();
        prop_assert!(m >= 1);
        prop_assert!(planner::truncation_bias_bound(beta, m) <= 0.5 * eps_tot);
    }

    #[test]
    fn eta_solution_is_exact_root(
        epsilon in 0.05f64..0.9,
        nu_extra in 0.1f64..4.0,
        small_set_m in 0.5f64..8.0,
        p_regen in 0.05f64..0.95,
    ) {
        let nu = epsilon + nu_extra;
        let spec = MaxWeightDriftSpec { epsilon, nu, small_set_m, p_regen };
        let tail = planner::solve_eta(&spec).unwrap();
        let (theta, kappa) = planner::hajek_constants(&spec).unwrap();
        let slope = small_set_m * (1.0 + theta * nu / kappa);
        let eta_star = (1.0 / (1.0 - p_regen)).ln() / slope;
        // The defining product equals 1 at the closed-form root.
        let product = (1.0 - p_regen) * (eta_star * slope).exp();
        prop_assert!((product - 1.0).abs() <= 1e-12);
        prop_assert!(tail.eta <= 0.5 * kappa.min(eta_star) + 1e-15);
        prop_assert!(tail.c_tau.is_finite() && tail.c_tau > 0.0);
    }

    #[test]
    fn truncated_hits_monotone_in_horizon(seed in 0u64..500, m1 in 1u64..40, m2 in 1u64..40) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let base = Gg1Params {
            arrival: DistSpec::Deterministic { value: 0.6 },
            service: DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
            clip: ClipSpec::none(),
            threshold_d: 1.0,
            horizon_m: lo,
            metric: Metric::WaitingTime,
        };
        let mut s1 = SeedStream::fork_cycle(seed, 0);
        let short = gg1::evaluate_truncated_cycle(&mut s1, &base);
        let mut long_params = base.clone();
        long_params.horizon_m = hi;
        let mut s2 = SeedStream::fork_cycle(seed, 0);
        let long = gg1::evaluate_truncated_cycle(&mut s2, &long_params);
        // Same seed: the shorter horizon observes a prefix of the same path.
        prop_assert!(long.r_m >= short.r_m);
        prop_assert!(long.tau_m >= short.tau_m);
    }
}
