//! Query-count scaling of emulated amplitude estimation against the
//! classical Hoeffding baseline, plus a full tail estimate whose numerator
//! comes from the amplified estimator.
//!
//! Run with: cargo run --release --example qae_vs_mc

use qtail::dist::{ClipSpec, DistSpec};
use qtail::gg1::{Gg1Params, Metric};
use qtail::harness::{self, QaeTailConfig};
use qtail::qae::{iqae_estimate, mc_sample_size};
use qtail::seed::SeedStream;

fn main() {
    let a_true = 0.01;
    println!("amplitude {a_true}: oracle queries per accuracy target");
    println!("{:>8}  {:>12}  {:>12}", "eps", "iqae", "mc");
    for eps in [1e-2, 3e-3, 1e-3, 3e-4] {
        let mut s = SeedStream::fork_cycle(1, 0);
        let r = iqae_estimate(a_true, eps, 0.05, 128, &mut s).unwrap();
        println!(
            "{eps:>8.0e}  {:>12}  {:>12}",
            r.oracle_queries,
            mc_sample_size(eps, 0.05)
        );
    }

    let params = Gg1Params {
        arrival: DistSpec::Deterministic { value: 0.6 },
        service: DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
        clip: ClipSpec::none(),
        threshold_d: 1.0,
        horizon_m: 64,
        metric: Metric::WaitingTime,
    };
    let cfg = QaeTailConfig {
        bits_m: 16,
        eps_q: 1e-4,
        delta: 0.05,
        shots_per_round: 128,
        denominator_cycles: 50_000,
    };
    let est = harness::estimate_tail_qae(2, &params, &cfg).unwrap();
    let mc = harness::gg1_ratio_estimate(2, &params, 50_000);
    println!("\namplified tail estimate: {:.5} ({} oracle queries)", est.p_hat, est.oracle_queries);
    println!("classical tail estimate: {:.5} (se {:.1e})", mc.p_hat, mc.se);
    println!(
        "amplitude {:.6} vs exact {:.6} (|err| <= eps_Q = {:.0e} holds: {})",
        est.amplitude,
        est.amplitude_true,
        est.eps_q,
        (est.amplitude - est.amplitude_true).abs() <= est.eps_q
    );
}
