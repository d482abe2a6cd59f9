//! Estimation and verification harness.
//!
//! Estimators come in two flavors for each model: a regenerative ratio
//! estimator over independent truncated cycles and a long-run trajectory
//! estimator with batch-means standard errors, used to cross-check the
//! cycle construction. Verification routines compare empirical quantities
//! against the planner's analytic bounds on coupled sample paths.
//!
//! Cycle batches are evaluated in parallel, but every cycle's randomness is
//! a pure function of (master_seed, cycle_index) and reductions run over the
//! collected per-cycle vector in index order, so results are byte-identical
//! at any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::TailClass;
use crate::gg1::{self, Gg1Params, Metric};
use crate::jsq::{self, JsqParams};
use crate::maxweight::{self, WirelessError, WirelessParams};
use crate::planner::HorizonPlan;
use crate::qae::{self, QaeError};
use crate::seed::SeedStream;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cycle evaluation failed: {0}")]
    Cycle(#[from] gg1::CycleError),
    #[error("wireless evaluation failed: {0}")]
    Wireless(#[from] WirelessError),
    #[error("amplitude estimation failed: {0}")]
    Qae(#[from] QaeError),
    #[error("invalid harness input: {0}")]
    BadInput(&'static str),
}

/// Conservative upper normal quantile: P(Z > z) <= e^{-z^2/2} gives
/// z = sqrt(2 ln(1/alpha)).
pub fn gaussian_slack(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0);
    (2.0 * (1.0 / alpha).ln()).sqrt()
}

fn par_cycles<T, F>(master_seed: u64, n_cycles: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeedStream) -> T + Sync,
{
    (0..n_cycles)
        .into_par_iter()
        .map(|i| {
            let mut stream = SeedStream::fork_cycle(master_seed, i);
            f(&mut stream)
        })
        .collect()
}

/// Ratio-of-means estimate with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub numerator_mean: f64,
    pub denominator_mean: f64,
    pub cycles: u64,
}

fn ratio_from_pairs(pairs: &[(f64, f64)]) -> RatioEstimate {
    let n = pairs.len() as f64;
    let num: f64 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let den: f64 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let p_hat = if den > 0.0 { num / den } else { 0.0 };
    let resid: f64 = pairs
        .iter()
        .map(|(r, t)| {
            let e = r - p_hat * t;
            e * e
        })
        .sum::<f64>()
        / n;
    let se = if den > 0.0 {
        (resid / n).sqrt() / den
    } else {
        f64::INFINITY
    };
    RatioEstimate {
        p_hat,
        se,
        numerator_mean: num,
        denominator_mean: den,
        cycles: pairs.len() as u64,
    }
}

/// P(workload threshold exceeded) as E[R_M] / E[tau_M] over truncated cycles.
pub fn gg1_ratio_estimate(master_seed: u64, params: &Gg1Params, n_cycles: u64) -> RatioEstimate {
    let pairs = par_cycles(master_seed, n_cycles, |s| {
        let c = gg1::evaluate_truncated_cycle(s, params);
        (c.r_m as f64, c.tau_m as f64)
    });
    ratio_from_pairs(&pairs)
}

/// Long-run estimate with batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRunEstimate {
    pub p_hat: f64,
    pub se: f64,
    pub batches: u64,
    pub samples: u64,
}

fn batch_ratio(batch_pairs: &[(f64, f64)]) -> LongRunEstimate {
    let total_n: f64 = batch_pairs.iter().map(|p| p.0).sum();
    let total_d: f64 = batch_pairs.iter().map(|p| p.1).sum();
    let p_hat = if total_d > 0.0 { total_n / total_d } else { 0.0 };
    let means: Vec<f64> = batch_pairs
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(v, d)| v / d)
        .collect();
    let b = means.len() as f64;
    let se = if b >= 2.0 {
        let m = means.iter().sum::<f64>() / b;
        let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    } else {
        f64::INFINITY
    };
    LongRunEstimate {
        p_hat,
        se,
        batches: means.len() as u64,
        samples: total_d as u64,
    }
}

/// Single long workload trajectory ignoring regeneration structure; the
/// fraction of customers at or above the threshold, batch-means error bars.
pub fn gg1_long_run(
    master_seed: u64,
    params: &Gg1Params,
    n_customers: u64,
    n_batches: u64,
) -> LongRunEstimate {
    assert!(n_batches >= 2 && n_customers >= n_batches);
    let mut stream = SeedStream::fork_cycle(master_seed, 0);
    let mut w = 0.0f64;
    let per = n_customers / n_batches;
    let mut batches = Vec::with_capacity(n_batches as usize);
    for _ in 0..n_batches {
        let mut hits = 0u64;
        for _ in 0..per {
            let a = crate::dist::sample(&params.arrival, &params.clip, stream.draw_uniform());
            let s = crate::dist::sample(&params.service, &params.clip, stream.draw_uniform());
            w = gg1::lindley_step(w, s, a);
            let hit = match params.metric {
                Metric::WaitingTime => w >= params.threshold_d,
                Metric::ResponseTime => w + s >= params.threshold_d,
            };
            if hit {
                hits += 1;
            }
        }
        batches.push((hits as f64, per as f64));
    }
    batch_ratio(&batches)
}

/// Delay-violation fraction for watched queues as E[J_M] / E[N_M].
pub fn wireless_ratio_estimate(
    master_seed: u64,
    params: &WirelessParams,
    n_cycles: u64,
) -> Result<RatioEstimate, HarnessError> {
    let per: Vec<Result<(f64, f64), WirelessError>> = par_cycles(master_seed, n_cycles, |s| {
        maxweight::evaluate_wireless_cycle(s, params).map(|c| (c.j_m as f64, c.n_m as f64))
    });
    let pairs = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ratio_from_pairs(&pairs))
}

/// Long slotted trajectory for the scheduler; per-batch violation fraction
/// among watched arrivals whose departure falls inside the run.
pub fn wireless_long_run(
    master_seed: u64,
    params: &WirelessParams,
    n_slots: u64,
    n_batches: u64,
) -> Result<LongRunEstimate, HarnessError> {
    assert!(n_batches >= 2 && n_slots >= n_batches);
    // Expand the buffer capacity to the run length.
    let mut expanded = params.clone();
    expanded.horizon_m = n_slots;
    let mut state = maxweight::WirelessState::new(&expanded);
    let mut stream = SeedStream::fork_cycle(master_seed, 0);
    let per = n_slots / n_batches;
    let mut batches = Vec::with_capacity(n_batches as usize);
    let mut t = 0u64;
    for _ in 0..n_batches {
        let mut viol = 0u64;
        let mut dep = 0u64;
        for _ in 0..per {
            let before: u64 = watched_jobs(&state, &expanded);
            let (arr, v) = state.step(t, &expanded, &mut stream)?;
            let after: u64 = watched_jobs(&state, &expanded);
            dep += before + arr - after;
            viol += v;
            t += 1;
        }
        batches.push((viol as f64, dep as f64));
    }
    Ok(batch_ratio(&batches))
}

fn watched_jobs(state: &maxweight::WirelessState, params: &WirelessParams) -> u64 {
    params.subset_i.iter().map(|&i| state.queues[i]).sum()
}

/// Response-time violation fraction as E[J] / E[N] over splitting cycles.
pub fn jsq_ratio_estimate(master_seed: u64, params: &JsqParams, n_cycles: u64) -> RatioEstimate {
    let pairs = par_cycles(master_seed, n_cycles, |s| {
        let c = jsq::evaluate_jsq_cycle(s, params);
        (c.j_ra as f64, c.n_a as f64)
    });
    ratio_from_pairs(&pairs)
}

/// Plain long-run trajectory for the JSQ system.
pub fn jsq_long_run(
    master_seed: u64,
    params: &JsqParams,
    n_arrivals: u64,
    n_batches: u64,
) -> LongRunEstimate {
    assert!(n_batches >= 2 && n_arrivals >= n_batches);
    let mut stream = SeedStream::fork_cycle(master_seed, 0);
    let flags = jsq::simulate_long_run(&mut stream, params, n_arrivals);
    let per = (flags.len() as u64 / n_batches) as usize;
    let batches: Vec<(f64, f64)> = flags
        .chunks(per)
        .take(n_batches as usize)
        .map(|c| (c.iter().filter(|f| **f).count() as f64, c.len() as f64))
        .collect();
    batch_ratio(&batches)
}

/// Tail estimate whose cycle numerator comes from emulated amplitude
/// estimation over an m-bit seed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaeTailEstimate {
    pub p_hat: f64,
    /// Estimated amplitude E[R_M] / M over the seed space.
    pub amplitude: f64,
    /// Exact amplitude from enumeration, kept for auditing.
    pub amplitude_true: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub oracle_queries: u64,
    pub eps_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaeTailConfig {
    /// Seed-register width; the amplitude is exact over 2^bits_m words.
    pub bits_m: u32,
    pub eps_q: f64,
    pub delta: f64,
    pub shots_per_round: u64,
    /// Classical cycles for the denominator E[tau_M].
    pub denominator_cycles: u64,
}

/// Estimate P(threshold exceeded) = M E[Y] / E[tau_M] with the numerator
/// obtained by amplitude estimation at accuracy eps_q.
pub fn estimate_tail_qae(
    master_seed: u64,
    params: &Gg1Params,
    cfg: &QaeTailConfig,
) -> Result<QaeTailEstimate, HarnessError> {
    if cfg.denominator_cycles < 2 {
        return Err(HarnessError::BadInput("need at least two denominator cycles"));
    }
    let a_true = qae::exact_amplitude(cfg.bits_m, |w| {
        let mut s = SeedStream::from_seed_word(w, cfg.bits_m);
        gg1::evaluate_truncated_cycle(&mut s, params).y
    })?;
    let mut shot_stream = SeedStream::fork_cycle(master_seed ^ 0xabcd_1234_5678_90ef, 0);
    let iqae = qae::iqae_estimate(a_true, cfg.eps_q, cfg.delta, cfg.shots_per_round, &mut shot_stream)?;
    let denom = gg1_ratio_estimate(master_seed, params, cfg.denominator_cycles);
    let m = params.horizon_m as f64;
    let numerator = m * iqae.a_hat;
    Ok(QaeTailEstimate {
        p_hat: numerator / denom.denominator_mean,
        amplitude: iqae.a_hat,
        amplitude_true: a_true,
        numerator,
        denominator: denom.denominator_mean,
        oracle_queries: iqae.oracle_queries,
        eps_q: cfg.eps_q,
    })
}

/// Error pieces consumed by one planned run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps_tot: f64,
    pub truncation: f64,
    pub clipping: f64,
    pub estimation: f64,
}

impl ErrorBudget {
    pub fn within_budget(&self) -> bool {
        self.truncation + self.clipping + self.estimation <= self.eps_tot + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    /// Certification target 10^-k.
    pub threshold: f64,
    /// Statistical point estimate.
    pub p_hat: f64,
    /// Upper confidence limit including truncation and clipping bias.
    pub p_upper: f64,
    pub budget: ErrorBudget,
    pub certified: bool,
    pub cycles: u64,
}

/// Certify P(threshold exceeded) <= 10^-digits_k at confidence 1 - alpha,
/// charging the plan's truncation and clipping bounds against the estimate.
pub fn certify_gg1(
    master_seed: u64,
    params: &Gg1Params,
    plan: &HorizonPlan,
    digits_k: u32,
    n_cycles: u64,
    alpha: f64,
) -> CertificationReport {
    let est = gg1_ratio_estimate(master_seed, params, n_cycles);
    let z = gaussian_slack(alpha);
    let stat = z * est.se;
    let p_upper = est.p_hat + stat + plan.truncation_bound + plan.clipping_bound;
    let threshold = 10f64.powi(-(digits_k as i32));
    CertificationReport {
        threshold,
        p_hat: est.p_hat,
        p_upper,
        budget: ErrorBudget {
            eps_tot: plan.eps_tot,
            truncation: plan.truncation_bound,
            clipping: plan.clipping_bound,
            estimation: stat,
        },
        certified: p_upper <= threshold,
        cycles: n_cycles,
    }
}

/// Empirical-versus-analytic comparison on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub bound: Vec<f64>,
    pub slack: Vec<f64>,
    pub holds: bool,
}

/// Check P(tau > n) <= e^{-beta n} on a grid with Bonferroni-adjusted
/// Hoeffding slack at level alpha.
pub fn verify_regeneration_tail_gg1(
    master_seed: u64,
    params: &Gg1Params,
    beta: f64,
    grid: &[u64],
    n_cycles: u64,
    cap: u64,
    alpha: f64,
) -> Result<BoundCheckReport, HarnessError> {
    let taus: Vec<u64> = par_cycles(master_seed, n_cycles, |s| {
        gg1::evaluate_full_cycle(s, params, cap).map(|c| c.tau)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(tail_check(&taus, grid, n_cycles, alpha, |n| {
        (-beta * n as f64).exp()
    }))
}

/// Same check for the scheduler return time against c_tau e^{-eta n}.
pub fn verify_regeneration_tail_wireless(
    master_seed: u64,
    params: &WirelessParams,
    tail: &crate::planner::HajekTail,
    grid: &[u64],
    n_cycles: u64,
    cap: u64,
    alpha: f64,
) -> Result<BoundCheckReport, HarnessError> {
    let taus: Vec<u64> = par_cycles(master_seed, n_cycles, |s| {
        maxweight::evaluate_full_wireless_cycle(s, params, cap).map(|c| c.t_m)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let (c_tau, eta) = (tail.c_tau, tail.eta);
    Ok(tail_check(&taus, grid, n_cycles, alpha, |n| {
        (c_tau * (-eta * n as f64).exp()).min(1.0)
    }))
}

fn tail_check<F: Fn(u64) -> f64>(
    taus: &[u64],
    grid: &[u64],
    n_cycles: u64,
    alpha: f64,
    bound_at: F,
) -> BoundCheckReport {
    let slack_val = ((2.0 * grid.len() as f64 / alpha).ln() / (2.0 * n_cycles as f64)).sqrt();
    let mut rep = BoundCheckReport {
        grid: Vec::new(),
        empirical: Vec::new(),
        bound: Vec::new(),
        slack: Vec::new(),
        holds: true,
    };
    for &n in grid {
        let emp = taus.iter().filter(|&&t| t > n).count() as f64 / taus.len() as f64;
        let b = bound_at(n);
        rep.grid.push(n as f64);
        rep.empirical.push(emp);
        rep.bound.push(b);
        rep.slack.push(slack_val);
        if emp > b + slack_val {
            rep.holds = false;
        }
    }
    rep
}

/// Compare the truncated ratio estimate against the untruncated one on
/// coupled sample paths, per horizon, against the geometric bias bound.
pub fn verify_truncation_bias(
    master_seed: u64,
    params: &Gg1Params,
    beta: f64,
    horizons: &[u64],
    n_cycles: u64,
    cap: u64,
) -> Result<BoundCheckReport, HarnessError> {
    let full: Vec<(f64, f64)> = par_cycles(master_seed, n_cycles, |s| {
        gg1::evaluate_full_cycle(s, params, cap).map(|c| (c.r as f64, c.tau as f64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let full_est = ratio_from_pairs(&full);

    let mut rep = BoundCheckReport {
        grid: Vec::new(),
        empirical: Vec::new(),
        bound: Vec::new(),
        slack: Vec::new(),
        holds: true,
    };
    for &m in horizons {
        let mut truncated = params.clone();
        truncated.horizon_m = m;
        // Same cycle indices, so each truncated path is a prefix of the
        // corresponding full path.
        let est = gg1_ratio_estimate(master_seed, &truncated, n_cycles);
        let emp = (full_est.p_hat - est.p_hat).abs();
        let bound = crate::planner::truncation_bias_bound(beta, m);
        let slack = 3.0 * (full_est.se + est.se);
        rep.grid.push(m as f64);
        rep.empirical.push(emp);
        rep.bound.push(bound);
        rep.slack.push(slack);
        if emp > bound + slack {
            rep.holds = false;
        }
    }
    Ok(rep)
}

/// Compare clipped and unclipped truncated estimates on coupled paths
/// against the per-horizon clipping bias bound.
pub fn verify_clipping_bias(
    master_seed: u64,
    params: &Gg1Params,
    clip_levels: &[f64],
    arrival_tail: &TailClass,
    service_tail: &TailClass,
    n_cycles: u64,
) -> BoundCheckReport {
    let mut unclipped = params.clone();
    unclipped.clip = crate::dist::ClipSpec::none();
    let base = gg1_ratio_estimate(master_seed, &unclipped, n_cycles);

    let mut rep = BoundCheckReport {
        grid: Vec::new(),
        empirical: Vec::new(),
        bound: Vec::new(),
        slack: Vec::new(),
        holds: true,
    };
    for &b in clip_levels {
        let mut clipped = params.clone();
        clipped.clip = crate::dist::ClipSpec::at(b);
        let est = gg1_ratio_estimate(master_seed, &clipped, n_cycles);
        let emp = (base.p_hat - est.p_hat).abs();
        let bound = crate::dist::clipping_bias_bound(
            params.horizon_m,
            arrival_tail.exceed_bound(b),
            service_tail.exceed_bound(b),
        )
        .min(1.0);
        let slack = 3.0 * (base.se + est.se);
        rep.grid.push(b);
        rep.empirical.push(emp);
        rep.bound.push(bound);
        rep.slack.push(slack);
        if emp > bound + slack {
            rep.holds = false;
        }
    }
    rep
}

/// Cauchy-Schwarz audit of the arrival-cap truncation for the JSQ model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsCheck {
    /// Mean violation mass in cycles exceeding the arrival cap.
    pub direct: f64,
    /// sqrt(E[J^2] P(N > cap)) on the same sample.
    pub surrogate: f64,
    pub incomplete_fraction: f64,
    pub holds: bool,
}

/// On untruncated splitting cycles, the neglected violation mass
/// E[J 1{N > cap}] is dominated by sqrt(E[J^2] P(N > cap)); the inequality
/// holds exactly on empirical moments, so this is an accounting audit of
/// which surrogate the planner may use.
pub fn jsq_truncation_surrogate(
    master_seed: u64,
    params: &JsqParams,
    n_cycles: u64,
    full_cap: u64,
) -> CsCheck {
    let mut full = params.clone();
    full.arrival_cap = full_cap;
    let stats = par_cycles(master_seed, n_cycles, |s| jsq::evaluate_jsq_cycle(s, &full));
    let n = stats.len() as f64;
    let mut neglect = 0.0;
    let mut j2 = 0.0;
    let mut over = 0.0;
    for c in &stats {
        let j = c.j_ra as f64;
        j2 += j * j / n;
        if c.n_a > params.arrival_cap {
            neglect += j / n;
            over += 1.0 / n;
        }
    }
    let surrogate = (j2 * over).sqrt();
    CsCheck {
        direct: neglect,
        surrogate,
        incomplete_fraction: over,
        holds: neglect <= surrogate + 1e-12,
    }
}

/// Pooled lower confidence bound on the one-slot emptying probability from
/// small-set states (total backlog at most `small_set_m`).
pub fn estimate_emptying_probability(
    master_seed: u64,
    params: &WirelessParams,
    small_set_m: u64,
    n_slots: u64,
    alpha: f64,
) -> Result<(f64, u64), HarnessError> {
    let mut expanded = params.clone();
    expanded.horizon_m = n_slots;
    let mut state = maxweight::WirelessState::new(&expanded);
    let mut stream = SeedStream::fork_cycle(master_seed, 0);
    let mut trials = 0u64;
    let mut empties = 0u64;
    for t in 0..n_slots {
        let in_small_set = state.queues.iter().sum::<u64>() <= small_set_m;
        state.step(t, &expanded, &mut stream)?;
        if in_small_set {
            trials += 1;
            if state.all_empty() {
                empties += 1;
            }
        }
    }
    if trials == 0 {
        return Err(HarnessError::BadInput("no small-set visits observed"));
    }
    let p_hat = empties as f64 / trials as f64;
    let lower = (p_hat - ((1.0 / alpha).ln() / (2.0 * trials as f64)).sqrt()).max(0.0);
    Ok((lower, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ClipSpec, DistSpec};

    fn mm1_params(horizon: u64) -> Gg1Params {
        Gg1Params {
            arrival: DistSpec::Exponential { rate: 0.5 },
            service: DistSpec::Exponential { rate: 1.0 },
            clip: ClipSpec::none(),
            threshold_d: 4.0,
            horizon_m: horizon,
            metric: Metric::WaitingTime,
        }
    }

    #[test]
    fn mm1_ratio_matches_analytic_tail() {
        // P(W >= d) = rho e^{-mu(1 - rho) d} = 0.5 e^{-2}.
        let want = 0.5 * (-2.0f64).exp();
        let est = gg1_ratio_estimate(1, &mm1_params(400), 40_000);
        assert!(
            (est.p_hat - want).abs() < 4.0 * est.se.max(1e-3),
            "got {} want {want} se {}",
            est.p_hat,
            est.se
        );
    }

    #[test]
    fn ratio_estimate_deterministic_across_thread_counts() {
        let params = mm1_params(200);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| gg1_ratio_estimate(9, &params, 2_000));
        let b = pool4.install(|| gg1_ratio_estimate(9, &params, 2_000));
        assert_eq!(a, b);
    }

    #[test]
    fn long_run_agrees_with_ratio() {
        let params = mm1_params(400);
        let ratio = gg1_ratio_estimate(2, &params, 20_000);
        let long = gg1_long_run(3, &params, 200_000, 20);
        let gap = (ratio.p_hat - long.p_hat).abs();
        assert!(
            gap < 4.0 * (ratio.se + long.se).max(1e-3),
            "ratio {} long {} gap {gap}",
            ratio.p_hat,
            long.p_hat
        );
    }

    #[test]
    fn qae_pipeline_matches_mc_pipeline() {
        let mut params = mm1_params(64);
        params.threshold_d = 2.0;
        let cfg = QaeTailConfig {
            bits_m: 14,
            eps_q: 2e-4,
            delta: 0.05,
            shots_per_round: 128,
            denominator_cycles: 20_000,
        };
        let qae = estimate_tail_qae(5, &params, &cfg).unwrap();
        assert!((qae.amplitude - qae.amplitude_true).abs() <= 5.0 * cfg.eps_q);
        let mc = gg1_ratio_estimate(5, &params, 40_000);
        assert!(
            (qae.p_hat - mc.p_hat).abs() < 0.02,
            "qae {} mc {}",
            qae.p_hat,
            mc.p_hat
        );
    }

    #[test]
    fn regeneration_tail_bound_holds_for_bounded_walk() {
        // Bounded increments: A = 0.6 deterministic, S in {0, 1} fair.
        let params = Gg1Params {
            arrival: DistSpec::Deterministic { value: 0.6 },
            service: DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
            clip: ClipSpec::none(),
            threshold_d: 10.0,
            horizon_m: 64,
            metric: Metric::WaitingTime,
        };
        let drift = crate::planner::beta_bounded(0.6, 0.5, 0.6, 1.0).unwrap();
        let rep = verify_regeneration_tail_gg1(
            4,
            &params,
            drift.beta,
            &[1, 2, 4, 8, 16, 32],
            20_000,
            100_000,
            1e-3,
        )
        .unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn truncation_bias_within_bound() {
        let params = Gg1Params {
            arrival: DistSpec::Deterministic { value: 0.6 },
            service: DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.5] },
            clip: ClipSpec::none(),
            threshold_d: 1.0,
            horizon_m: 64,
            metric: Metric::WaitingTime,
        };
        let drift = crate::planner::beta_bounded(0.6, 0.5, 0.6, 1.0).unwrap();
        let rep = verify_truncation_bias(6, &params, drift.beta, &[4, 8, 16, 32], 20_000, 100_000)
            .unwrap();
        assert!(rep.holds, "{rep:?}");
        // Bias shrinks as the horizon grows.
        assert!(rep.empirical.first().unwrap() >= rep.empirical.last().unwrap());
    }

    #[test]
    fn clipping_bias_within_bound() {
        let params = mm1_params(32);
        let rep = verify_clipping_bias(
            7,
            &params,
            &[4.0, 8.0, 16.0],
            &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 0.5 },
            &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 1.0 },
            10_000,
        );
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn certification_reaches_small_thresholds() {
        // Heavily stable queue with a large threshold: the true tail is far
        // below 1e-3 and the run certifies it.
        let params = Gg1Params {
            arrival: DistSpec::Exponential { rate: 0.2 },
            service: DistSpec::Exponential { rate: 1.0 },
            clip: ClipSpec::at(40.0),
            threshold_d: 14.0,
            horizon_m: 0,
            metric: Metric::WaitingTime,
        };
        let plan = crate::planner::plan_gg1(
            &params.arrival,
            &params.service,
            &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 0.2 },
            &TailClass::SubExponential { k_factor: 1.0, lambda_rate: 1.0 },
            1e-5,
        )
        .unwrap();
        let mut run = params.clone();
        run.horizon_m = plan.horizon_m;
        run.clip = ClipSpec::at(plan.clip_b.unwrap());
        let rep = certify_gg1(8, &run, &plan, 3, 200_000, 1e-3);
        assert!(rep.budget.within_budget() || rep.budget.estimation > plan.eps_tot);
        assert!(rep.certified, "{rep:?}");
        assert!(rep.p_upper <= 1e-3);
    }

    #[test]
    fn jsq_surrogate_dominates_direct() {
        let params = JsqParams {
            k: 2,
            lambda: 0.5,
            clip_b: 16.0,
            service: DistSpec::Exponential { rate: 1.0 },
            split_eps: 0.5,
            threshold_d: 2.0,
            arrival_cap: 8,
        };
        let check = jsq_truncation_surrogate(10, &params, 5_000, 1 << 14);
        assert!(check.holds);
        assert!(check.surrogate >= check.direct);
        assert!(check.incomplete_fraction < 1.0);
    }

    #[test]
    fn emptying_probability_positive_for_light_traffic() {
        let params = WirelessParams {
            arrival_pmfs: vec![vec![0.7, 0.3], vec![0.7, 0.3]],
            channel_pmfs: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            subset_i: vec![0],
            threshold_d: 2,
            horizon_m: 64,
        };
        let (lower, trials) = estimate_emptying_probability(11, &params, 2, 50_000, 1e-3).unwrap();
        assert!(trials > 1_000);
        assert!(lower > 0.0);
    }

    #[test]
    fn wireless_estimators_agree() {
        let params = WirelessParams {
            arrival_pmfs: vec![vec![0.7, 0.3], vec![0.7, 0.3]],
            channel_pmfs: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            subset_i: vec![0, 1],
            threshold_d: 3,
            horizon_m: 256,
        };
        let ratio = wireless_ratio_estimate(12, &params, 20_000).unwrap();
        let long = wireless_long_run(13, &params, 400_000, 20).unwrap();
        let gap = (ratio.p_hat - long.p_hat).abs();
        assert!(
            gap < 4.0 * (ratio.se + long.se).max(2e-3),
            "ratio {} long {} gap {gap}",
            ratio.p_hat,
            long.p_hat
        );
    }

    #[test]
    fn jsq_estimators_agree() {
        let params = JsqParams {
            k: 2,
            lambda: 0.5,
            clip_b: 16.0,
            service: DistSpec::Exponential { rate: 1.0 },
            split_eps: 0.5,
            threshold_d: 3.0,
            arrival_cap: 256,
        };
        let ratio = jsq_ratio_estimate(14, &params, 20_000);
        let long = jsq_long_run(15, &params, 200_000, 20);
        let gap = (ratio.p_hat - long.p_hat).abs();
        assert!(
            gap < 4.0 * (ratio.se + long.se).max(2e-3),
            "ratio {} long {} gap {gap}",
            ratio.p_hat,
            long.p_hat
        );
    }
}
