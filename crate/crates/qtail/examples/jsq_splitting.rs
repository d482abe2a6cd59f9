//! Splitting-based regeneration for a two-server JSQ system with clipped
//! exponential draws: the minorization mass, the observed acceptance
//! frequency, and agreement between cycle-based and long-run estimates.
//!
//! Run with: cargo run --release --example jsq_splitting

use qtail::dist::DistSpec;
use qtail::harness;
use qtail::jsq::{evaluate_jsq_cycle, minorization_delta, JsqParams};
use qtail::seed::SeedStream;

fn main() {
    let params = JsqParams {
        k: 2,
        lambda: 0.5,
        clip_b: 16.0,
        service: DistSpec::Exponential { rate: 1.0 },
        split_eps: 0.5,
        threshold_d: 2.0,
        arrival_cap: 256,
    };
    let (lambda_b, mu_b) = params.clipped_rates();
    println!(
        "clipped rates: lambda_B = {lambda_b:.4}, mu_B = {mu_b:.4}, stable = {}",
        params.clipped_stable()
    );

    let delta = minorization_delta(params.lambda, params.split_eps);
    let mut tests = 0u64;
    let mut successes = 0u64;
    for cycle in 0..20_000u64 {
        let mut s = SeedStream::fork_cycle(1, cycle);
        let stats = evaluate_jsq_cycle(&mut s, &params);
        tests += stats.tests_performed;
        if stats.regen_completed {
            successes += 1;
        }
    }
    println!(
        "splitting test: delta = {delta:.5}, observed acceptance {:.5} over {tests} tests",
        successes as f64 / tests as f64
    );

    let ratio = harness::jsq_ratio_estimate(2, &params, 40_000);
    let long = harness::jsq_long_run(3, &params, 400_000, 40);
    println!(
        "response tail P(resp > {}): cycles {:.5} (se {:.1e}), long run {:.5} (se {:.1e})",
        params.threshold_d, ratio.p_hat, ratio.se, long.p_hat, long.se
    );

    let mut capped = params.clone();
    capped.arrival_cap = 8;
    let check = harness::jsq_truncation_surrogate(4, &capped, 20_000, 1 << 13);
    println!(
        "arrival-cap audit: neglected mass {:.2e} <= surrogate {:.2e} (incomplete fraction {:.2e})",
        check.direct, check.surrogate, check.incomplete_fraction
    );
    assert!(check.holds);
}
