//! Plan truncation horizons and accuracy budgets for a single queue.
//!
//! Shows both planning paths: bounded supports (drift span from the raw
//! maxima) and unbounded supports (clip level chosen first, drift then
//! recomputed on the clipped laws).
//!
//! Run with: cargo run --example plan_horizon

use qtail::dist::{DistSpec, TailClass};
use qtail::planner::plan_gg1;

fn main() {
    let eps_tot = 1e-4;

    let bounded = plan_gg1(
        &DistSpec::Deterministic { value: 1.4 },
        &DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
        &TailClass::Bounded { max: 1.4 },
        &TailClass::Bounded { max: 1.0 },
        eps_tot,
    )
    .unwrap();
    println!("bounded-support plan:");
    println!("{}", serde_json::to_string_pretty(&bounded).unwrap());
    assert!(bounded.budget_ok());

    let clipped = plan_gg1(
        &DistSpec::Exponential { rate: 0.5 },
        &DistSpec::Exponential { rate: 1.0 },
        &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 0.5 },
        &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 1.0 },
        eps_tot,
    )
    .unwrap();
    println!("\nclipped plan for exponential inputs:");
    println!("{}", serde_json::to_string_pretty(&clipped).unwrap());
    assert!(clipped.budget_ok());
    println!(
        "\nclip level {:.2} keeps clipping bias at {:.2e}; horizon {} splits eps_Q = {:.2e}",
        clipped.clip_b.unwrap(),
        clipped.clipping_bound,
        clipped.horizon_m,
        clipped.eps_q
    );
}
