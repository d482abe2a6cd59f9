//! Delay-tail estimation for a two-queue MaxWeight scheduler, with the
//! return-time tail bound derived from a user-supplied drift certificate.
//!
//! Run with: cargo run --release --example maxweight_delay

use qtail::harness;
use qtail::maxweight::WirelessParams;
use qtail::planner::{solve_eta, MaxWeightDriftSpec};

fn main() {
    // Bernoulli(0.3) arrivals per queue, unit channel rates, watch both
    // queues for delays of at least 3 slots.
    let params = WirelessParams {
        arrival_pmfs: vec![vec![0.7, 0.3], vec![0.7, 0.3]],
        channel_pmfs: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        subset_i: vec![0, 1],
        threshold_d: 3,
        horizon_m: 256,
    };
    // Total backlog falls by 0.4 per slot in mean outside the empty state,
    // jumps are bounded by 2, and the chain rebuilds from backlog <= 1 with
    // probability at least 0.4.
    let drift = MaxWeightDriftSpec {
        epsilon: 0.4,
        nu: 2.0,
        small_set_m: 1.0,
        p_regen: 0.4,
    };
    let tail = solve_eta(&drift).unwrap();
    println!(
        "return-time tail: P(tau > n) <= {:.3} * exp(-{:.5} n)",
        tail.c_tau, tail.eta
    );

    let check = harness::verify_regeneration_tail_wireless(
        3,
        &params,
        &tail,
        &[4, 8, 16, 32, 64],
        50_000,
        1 << 15,
        1e-3,
    )
    .unwrap();
    println!("tail bound holds: {}", check.holds);

    let (p_lower, trials) = harness::estimate_emptying_probability(4, &params, 1, 200_000, 1e-3).unwrap();
    println!("emptying probability from the small set: >= {p_lower:.3} ({trials} visits)");

    let ratio = harness::wireless_ratio_estimate(5, &params, 100_000).unwrap();
    let long = harness::wireless_long_run(6, &params, 2_000_000, 50).unwrap();
    println!(
        "delay tail P(delay >= {}): cycles {:.5} (se {:.1e}), long run {:.5} (se {:.1e})",
        params.threshold_d, ratio.p_hat, ratio.se, long.p_hat, long.se
    );
    assert!(check.holds);
    assert!((ratio.p_hat - long.p_hat).abs() < 3.0 * (ratio.se + long.se).max(1e-3));
}
