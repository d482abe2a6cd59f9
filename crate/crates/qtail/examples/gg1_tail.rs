//! Estimate a waiting-time tail probability for M/M/1 and compare against
//! the closed form P(W >= d) = rho e^{-mu (1 - rho) d}.
//!
//! Run with: cargo run --release --example gg1_tail

use qtail::dist::{ClipSpec, DistSpec};
use qtail::gg1::{Gg1Params, Metric};
use qtail::harness;

fn main() {
    let (lambda, mu, d) = (0.5, 1.0, 4.0);
    let params = Gg1Params {
        arrival: DistSpec::Exponential { rate: lambda },
        service: DistSpec::Exponential { rate: mu },
        clip: ClipSpec::at(30.0),
        threshold_d: d,
        horizon_m: 400,
        metric: Metric::WaitingTime,
    };

    let rho = lambda / mu;
    let analytic = rho * (-mu * (1.0 - rho) * d).exp();

    let ratio = harness::gg1_ratio_estimate(7, &params, 100_000);
    let long = harness::gg1_long_run(8, &params, 1_000_000, 50);

    println!("analytic tail:        {analytic:.5}");
    println!(
        "cycle-ratio estimate: {:.5} (se {:.1e}, {} cycles)",
        ratio.p_hat, ratio.se, ratio.cycles
    );
    println!(
        "long-run estimate:    {:.5} (se {:.1e}, {} customers)",
        long.p_hat, long.se, long.samples
    );
    assert!((ratio.p_hat - analytic).abs() < 5e-3);
    assert!((long.p_hat - analytic).abs() < 5e-3);
}
