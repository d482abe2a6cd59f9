//! Audit the analytic bounds behind truncation on coupled sample paths:
//! the cycle-length tail P(tau > n) <= e^{-beta n} and the horizon bias
//! |p - p_M| <= e^{-beta M} / (1 - e^{-beta}).
//!
//! Run with: cargo run --release --example truncation_audit

use qtail::dist::{ClipSpec, DistSpec};
use qtail::gg1::{Gg1Params, Metric};
use qtail::harness;
use qtail::planner;

fn main() {
    let params = Gg1Params {
        arrival: DistSpec::Deterministic { value: 0.6 },
        service: DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
        clip: ClipSpec::none(),
        threshold_d: 1.0,
        horizon_m: 64,
        metric: Metric::WaitingTime,
    };
    let drift = planner::beta_bounded(0.6, 0.5, 0.6, 1.0).unwrap();
    println!("drift delta = {:.3}, beta = {:.5}", drift.delta, drift.beta);

    let tail = harness::verify_regeneration_tail_gg1(
        1,
        &params,
        drift.beta,
        &[1, 2, 4, 8, 16, 32, 64, 128],
        100_000,
        1_000_000,
        1e-3,
    )
    .unwrap();
    println!("\ncycle-length tail check (holds = {}):", tail.holds);
    for i in 0..tail.grid.len() {
        println!(
            "  n = {:>4}: empirical {:.4}  bound {:.4}",
            tail.grid[i], tail.empirical[i], tail.bound[i]
        );
    }

    let bias = harness::verify_truncation_bias(
        2,
        &params,
        drift.beta,
        &[8, 16, 32, 64, 128],
        200_000,
        1_000_000,
    )
    .unwrap();
    println!("\ntruncation bias check (holds = {}):", bias.holds);
    for i in 0..bias.grid.len() {
        println!(
            "  M = {:>4}: |p - p_M| = {:.2e}  bound {:.2e}",
            bias.grid[i], bias.empirical[i], bias.bound[i]
        );
    }
    assert!(tail.holds && bias.holds);
}
