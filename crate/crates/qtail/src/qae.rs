//! Amplitude-estimation emulation and resource accounting.
//!
//! The estimation target is the mean of a [0, 1]-valued functional over the
//! uniform distribution on 2^m seed words. `exact_amplitude` computes that
//! mean by brute-force enumeration; `iqae_estimate` emulates iterative
//! amplitude estimation purely through its measurement statistics, sampling
//! Bernoulli shots whose success probability is the amplified quantity
//! sin^2((2k+1) arcsin sqrt(a)); `mc_baseline_estimate` is the classical
//! benchmark at the Hoeffding sample size. `resource_report` counts the
//! qubits and gate applications a reversible implementation of the cycle
//! oracle would need.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::SeedStream;

#[derive(Debug, Error, PartialEq)]
pub enum QaeError {
    #[error("seed space 2^{0} too large to enumerate (limit 2^24)")]
    SeedSpaceTooLarge(u32),
    #[error("invalid estimation input: {0}")]
    BadInput(&'static str),
    #[error("interval refinement stalled after {0} rounds")]
    RoundLimit(u64),
}

/// Maximum seed-register width for exhaustive enumeration.
pub const MAX_ENUM_BITS: u32 = 24;

/// Exact amplitude a = 2^-m * sum_w f(w) over all m-bit seed words.
pub fn exact_amplitude<F>(bits_m: u32, f: F) -> Result<f64, QaeError>
where
    F: Fn(u64) -> f64 + Sync,
{
    if bits_m == 0 || bits_m > MAX_ENUM_BITS {
        return Err(QaeError::SeedSpaceTooLarge(bits_m));
    }
    let n = 1u64 << bits_m;
    let total: f64 = (0..n)
        .into_par_iter()
        .fold(|| 0.0f64, |acc, w| {
            let y = f(w);
            debug_assert!((0.0..=1.0).contains(&y), "functional must map into [0,1]");
            acc + y
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok(total / n as f64)
}

/// Success probability of one shot after k amplification rounds:
/// sin^2((2k+1) arcsin sqrt(a)).
pub fn grover_shot_probability(a: f64, k: u64) -> f64 {
    assert!((0.0..=1.0).contains(&a));
    let theta = a.sqrt().asin();
    let s = ((2 * k + 1) as f64 * theta).sin();
    s * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqaeResult {
    pub a_hat: f64,
    pub a_lower: f64,
    pub a_upper: f64,
    /// Total oracle applications, counting 2k+1 per shot at power k.
    pub oracle_queries: u64,
    pub rounds: u64,
    pub shots_taken: u64,
}

const ROUND_LIMIT: u64 = 100_000;

// Largest K = 4k + 2 fitting the current angle interval such that the
// amplified interval [K theta_l, K theta_u] sits inside one semicircle
// modulo 2 pi. Returns (k, upper_semicircle); keeps the old pair when no
// larger K qualifies.
fn find_next_k(k: u64, theta_l: f64, theta_u: f64, up: bool) -> (u64, bool) {
    let pi = std::f64::consts::PI;
    let two_pi = 2.0 * pi;
    let k_old = 4 * k + 2;
    let mut cand = ((pi / (theta_u - theta_l)).floor() as u64).max(2);
    cand -= (cand + 2) % 4;
    while cand >= 2 * k_old {
        let c = cand as f64;
        let q_l = (c * theta_l) % two_pi;
        let q_u = (c * theta_u) % two_pi;
        if q_u >= q_l {
            if q_u <= pi {
                return ((cand - 2) / 4, true);
            }
            if q_l >= pi {
                return ((cand - 2) / 4, false);
            }
        }
        if cand < 4 + 2 {
            break;
        }
        cand -= 4;
    }
    (k, up)
}

/// Iterative amplitude estimation emulated at the level of measurement
/// outcomes. `a_true` drives the shot statistics; the returned interval
/// [a_lower, a_upper] has half-width at most eps and covers a_true with
/// probability at least 1 - delta.
pub fn iqae_estimate(
    a_true: f64,
    eps: f64,
    delta: f64,
    shots_per_round: u64,
    stream: &mut SeedStream,
) -> Result<IqaeResult, QaeError> {
    if !(0.0..=1.0).contains(&a_true) {
        return Err(QaeError::BadInput("amplitude must lie in [0, 1]"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(QaeError::BadInput("eps must lie in (0, 0.5)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QaeError::BadInput("delta must lie in (0, 1)"));
    }
    if shots_per_round == 0 {
        return Err(QaeError::BadInput("need at least one shot per round"));
    }
    let pi = std::f64::consts::PI;
    let two_pi = 2.0 * pi;
    // Confidence is split evenly over a worst-case round count.
    let t_max = ((pi / (4.0 * eps)).log2().ceil() as u64).max(1) + 1;
    let alpha = delta / t_max as f64;

    let (mut theta_l, mut theta_u) = (0.0f64, 0.5 * pi);
    let (mut k, mut up) = (0u64, true);
    let mut ones_at_k = 0u64;
    let mut shots_at_k = 0u64;
    let mut queries = 0u64;
    let mut shots_total = 0u64;
    let mut rounds = 0u64;

    loop {
        let a_l = theta_l.sin().powi(2);
        let a_u = theta_u.sin().powi(2);
        if a_u - a_l <= 2.0 * eps {
            return Ok(IqaeResult {
                a_hat: 0.5 * (a_l + a_u),
                a_lower: a_l,
                a_upper: a_u,
                oracle_queries: queries,
                rounds,
                shots_taken: shots_total,
            });
        }
        rounds += 1;
        if rounds > ROUND_LIMIT {
            return Err(QaeError::RoundLimit(ROUND_LIMIT));
        }

        let (k_next, up_next) = find_next_k(k, theta_l, theta_u, up);
        if k_next != k {
            k = k_next;
            up = up_next;
            ones_at_k = 0;
            shots_at_k = 0;
        }

        let p = grover_shot_probability(a_true, k);
        for _ in 0..shots_per_round {
            if stream.draw_f64() < p {
                ones_at_k += 1;
            }
        }
        shots_at_k += shots_per_round;
        shots_total += shots_per_round;
        queries += shots_per_round * (2 * k + 1);

        let p_hat = ones_at_k as f64 / shots_at_k as f64;
        let half = ((2.0 / alpha).ln() / (2.0 * shots_at_k as f64)).sqrt();
        let p_lo = (p_hat - half).max(0.0);
        let p_hi = (p_hat + half).min(1.0);

        // Invert cos(K theta) = 1 - 2p on the active semicircle.
        let (q_lo, q_hi) = if up {
            ((1.0 - 2.0 * p_lo).clamp(-1.0, 1.0).acos(), (1.0 - 2.0 * p_hi).clamp(-1.0, 1.0).acos())
        } else {
            (
                two_pi - (1.0 - 2.0 * p_hi).clamp(-1.0, 1.0).acos(),
                two_pi - (1.0 - 2.0 * p_lo).clamp(-1.0, 1.0).acos(),
            )
        };
        let big_k = (4 * k + 2) as f64;
        let rev = (big_k * theta_l / two_pi).floor();
        let cand_l = (two_pi * rev + q_lo) / big_k;
        let cand_u = (two_pi * rev + q_hi) / big_k;
        theta_l = theta_l.max(cand_l);
        theta_u = theta_u.min(cand_u);
        if theta_u < theta_l {
            // Shot noise can momentarily invert the interval; collapse it.
            let mid = 0.5 * (theta_l + theta_u);
            theta_l = mid;
            theta_u = mid;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub a_hat: f64,
    pub shots: u64,
    /// One oracle application per shot.
    pub oracle_queries: u64,
}

/// Hoeffding sample size N = ceil(ln(2/delta) / (2 eps^2)).
pub fn mc_sample_size(eps: f64, delta: f64) -> u64 {
    assert!(eps > 0.0 && delta > 0.0 && delta < 1.0);
    ((2.0 / delta).ln() / (2.0 * eps * eps)).ceil() as u64
}

/// Classical baseline: N unamplified Bernoulli(a) shots.
pub fn mc_baseline_estimate(
    a_true: f64,
    eps: f64,
    delta: f64,
    stream: &mut SeedStream,
) -> Result<McResult, QaeError> {
    if !(0.0..=1.0).contains(&a_true) {
        return Err(QaeError::BadInput("amplitude must lie in [0, 1]"));
    }
    let n = mc_sample_size(eps, delta);
    let mut ones = 0u64;
    for _ in 0..n {
        if stream.draw_f64() < a_true {
            ones += 1;
        }
    }
    Ok(McResult {
        a_hat: ones as f64 / n as f64,
        shots: n,
        oracle_queries: n,
    })
}

fn ceil_log2(x: u64) -> u64 {
    assert!(x >= 1);
    (64 - (x - 1).leading_zeros() as u64).min(63) * u64::from(x > 1)
}

/// Register and gate counts for a reversible cycle oracle over horizon M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub seed_bits_m: u64,
    pub horizon_m: u64,
    /// Step counter register, addressing 2M draw slots.
    pub counter_bits: u64,
    pub arrival_bits: u64,
    pub service_bits: u64,
    /// Workload register: ceil(log2 M) + service bits + 2.
    pub workload_bits: u64,
    /// Uncomputation history: one workload snapshot per step.
    pub history_bits: u64,
    /// Hit-count register over M + 1 values.
    pub hit_bits: u64,
    pub output_bits: u64,
    /// Scratch for reversible arithmetic: two workload registers.
    pub ancilla_bits: u64,
    pub flag_bits: u64,
    pub total_qubits: u64,
    pub per_step_gates: u64,
    /// Gate count of one full cycle oracle application.
    pub oracle_gate_depth: u64,
    /// Total gates of the amplitude-estimation run at accuracy eps_q.
    pub qae_gate_total: u64,
}

/// Count qubits and gates for one truncated-cycle oracle plus the
/// amplitude-estimation schedule at accuracy eps_q and confidence alpha_q.
pub fn resource_report(
    seed_bits_m: u64,
    horizon_m: u64,
    arrival_bits: u64,
    service_bits: u64,
    output_bits: u64,
    eps_q: f64,
    alpha_q: f64,
) -> ResourceReport {
    assert!(horizon_m >= 1 && eps_q > 0.0 && alpha_q > 0.0 && alpha_q < 1.0);
    let counter_bits = ceil_log2(2 * horizon_m);
    let workload_bits = ceil_log2(horizon_m) + service_bits + 2;
    let history_bits = horizon_m * workload_bits;
    let hit_bits = ceil_log2(horizon_m + 1);
    let ancilla_bits = 2 * workload_bits;
    let flag_bits = 1;
    let total_qubits = seed_bits_m
        + counter_bits
        + arrival_bits
        + service_bits
        + workload_bits
        + history_bits
        + hit_bits
        + output_bits
        + ancilla_bits
        + flag_bits;
    let per_step_gates = workload_bits + arrival_bits + service_bits + hit_bits;
    let oracle_gate_depth = horizon_m * per_step_gates;
    let applications = ((1.0 / eps_q) * (1.0 / alpha_q).ln()).ceil() as u64;
    ResourceReport {
        seed_bits_m,
        horizon_m,
        counter_bits,
        arrival_bits,
        service_bits,
        workload_bits,
        history_bits,
        hit_bits,
        output_bits,
        ancilla_bits,
        flag_bits,
        total_qubits,
        per_step_gates,
        oracle_gate_depth,
        qae_gate_total: applications * oracle_gate_depth,
    }
}
