//! Qubit and gate accounting for a reversible truncated-cycle oracle at a
//! planned horizon, across a range of error budgets.
//!
//! Run with: cargo run --example resource_counts

use qtail::dist::{DistSpec, TailClass};
use qtail::planner::plan_gg1;
use qtail::qae::resource_report;

fn main() {
    // The reference point: horizon 129 with 4-bit service registers.
    let r = resource_report(16, 129, 4, 4, 8, 1e-4, 0.05);
    println!("reference oracle at M = 129, B_S = 4:");
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
    assert_eq!((r.workload_bits, r.history_bits, r.hit_bits), (14, 1806, 8));

    println!("\nplanned horizons and totals per error budget:");
    println!("{:>8}  {:>6}  {:>10}  {:>14}", "eps_tot", "M", "qubits", "qae gates");
    for k in 2..=6 {
        let eps = 10f64.powi(-k);
        let plan = plan_gg1(
            &DistSpec::Deterministic { value: 1.4 },
            &DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
            &TailClass::Bounded { max: 1.4 },
            &TailClass::Bounded { max: 1.0 },
            eps,
        )
        .unwrap();
        let rep = resource_report(16, plan.horizon_m, 4, 4, 8, plan.eps_q, 0.05);
        println!(
            "{eps:>8.0e}  {:>6}  {:>10}  {:>14}",
            plan.horizon_m, rep.total_qubits, rep.qae_gate_total
        );
    }
}
