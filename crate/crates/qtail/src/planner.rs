//! Horizon and accuracy planning from drift bounds.
//!
//! Given a negative-drift model of the workload process, the planner turns a
//! total error budget eps_tot into the pieces an estimation run needs: a
//! truncation horizon M with geometric bias bound, optional clipping levels,
//! and the per-estimate amplitude accuracy eps_Q that keeps the end-to-end
//! error within budget.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{self, DistSpec, TailClass};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("drift is nonnegative; geometric cycle-length decay unavailable")]
    NonnegativeDrift,
    #[error("invalid planning input: {0}")]
    BadInput(&'static str),
    #[error("renewal-rate bound degenerate: denominator {denom} is not positive")]
    RateDegenerate { denom: f64 },
    #[error("chernoff rate undefined: need 0 < alpha < 1/lambda, got alpha={alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("clipped planning failed to converge after {0} iterations")]
    NoConvergence(usize),
}

/// Geometric decay constants for the cycle-length tail of a single queue
/// with bounded increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants {
    /// Mean drift toward zero, E[A] - E[S]; must be positive.
    pub delta: f64,
    /// Decay exponent: P(tau > n) <= e^{-beta n}.
    pub beta: f64,
}

/// beta = 2 delta^2 / (a_max + s_max)^2 for bounded increments.
pub fn beta_bounded(mean_a: f64, mean_s: f64, a_max: f64, s_max: f64) -> Result<DriftConstants, PlanError> {
    let delta = mean_a - mean_s;
    if !(delta > 0.0) {
        return Err(PlanError::NonnegativeDrift);
    }
    if !(a_max > 0.0 && s_max >= 0.0) {
        return Err(PlanError::BadInput("supports must be positive"));
    }
    let span = a_max + s_max;
    Ok(DriftConstants {
        delta,
        beta: 2.0 * delta * delta / (span * span),
    })
}

/// Clipped variant: increments live in [-B, B], so the span is 2B and the
/// drift uses clipped means.
pub fn beta_clipped(arrival: &DistSpec, service: &DistSpec, clip_b: f64) -> Result<DriftConstants, PlanError> {
    if !(clip_b > 0.0) {
        return Err(PlanError::BadInput("clip level must be positive"));
    }
    let delta = arrival.clipped_mean(clip_b) - service.clipped_mean(clip_b);
    if !(delta > 0.0) {
        return Err(PlanError::NonnegativeDrift);
    }
    let span = 2.0 * clip_b;
    Ok(DriftConstants {
        delta,
        beta: 2.0 * delta * delta / (span * span),
    })
}

/// Total truncation bias over all horizons past M:
/// sum_{n > M} e^{-beta n} <= e^{-beta M} / (1 - e^{-beta}).
pub fn truncation_bias_bound(beta: f64, horizon_m: u64) -> f64 {
    assert!(beta > 0.0);
    (-beta * horizon_m as f64).exp() / (-(-beta).exp_m1())
}

/// Smallest integer M with e^{-beta M} <= beta * eps_tot / 4, which keeps
/// the truncation bias below eps_tot / 2.
pub fn choose_horizon(beta: f64, eps_tot: f64) -> Result<u64, PlanError> {
    if !(beta > 0.0) {
        return Err(PlanError::BadInput("beta must be positive"));
    }
    if !(eps_tot > 0.0 && eps_tot < 1.0) {
        return Err(PlanError::BadInput("eps_tot must lie in (0, 1)"));
    }
    let mut m = ((4.0 / (beta * eps_tot)).ln() / beta).ceil().max(1.0) as u64;
    // The closed form implies bias <= eps_tot / 2 only while
    // 1 - e^{-beta} >= beta / 2; for steeper decay, extend the horizon
    // until the geometric-sum bound itself clears the half budget.
    while truncation_bias_bound(beta, m) > 0.5 * eps_tot {
        m += 1;
    }
    Ok(m)
}

/// Per-amplitude accuracy after splitting the budget: eps_tot/(2M) when
/// only truncation competes with the estimate, eps_tot/(4M) when clipping
/// takes its own quarter share.
pub fn allocate_qae_accuracy(eps_tot: f64, horizon_m: u64, clipped: bool) -> f64 {
    assert!(eps_tot > 0.0 && horizon_m >= 1);
    let share = if clipped { 4.0 } else { 2.0 };
    eps_tot / (share * horizon_m as f64)
}

/// Foster-Lyapunov drift inputs for a multi-queue scheduler: outside a set
/// of diameter `small_set_m`, the Lyapunov function falls by at least
/// `epsilon` in mean and its jumps are bounded by `nu`; from the small set
/// the chain rebuilds from zero with probability at least `p_regen`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxWeightDriftSpec {
    pub epsilon: f64,
    pub nu: f64,
    pub small_set_m: f64,
    pub p_regen: f64,
}

/// Geometric tail constants for the return time: P(tau > n) <= c_tau e^{-eta n}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HajekTail {
    pub theta: f64,
    pub kappa: f64,
    pub eta: f64,
    pub c_tau: f64,
}

/// theta = epsilon / nu^2 and kappa = epsilon^2 / (2 nu^2), the exponential
/// moment constants of the drift bound.
pub fn hajek_constants(spec: &MaxWeightDriftSpec) -> Result<(f64, f64), PlanError> {
    if !(spec.epsilon > 0.0 && spec.nu > 0.0) {
        return Err(PlanError::BadInput("epsilon and nu must be positive"));
    }
    if !(spec.epsilon <= spec.nu) {
        return Err(PlanError::BadInput("mean drift cannot exceed the jump bound"));
    }
    let theta = spec.epsilon / (spec.nu * spec.nu);
    let kappa = spec.epsilon * spec.epsilon / (2.0 * spec.nu * spec.nu);
    Ok((theta, kappa))
}

/// Solve for the tail rate: eta* is the root of
/// (1 - p) e^{eta m} e^{(eta / kappa) theta m nu} = 1, the usable rate is
/// min(kappa, eta*)/2, and c_tau is the prefactor evaluated at that rate.
pub fn solve_eta(spec: &MaxWeightDriftSpec) -> Result<HajekTail, PlanError> {
    if !(spec.p_regen > 0.0 && spec.p_regen < 1.0) {
        return Err(PlanError::BadInput("p_regen must lie in (0, 1)"));
    }
    if !(spec.small_set_m > 0.0) {
        return Err(PlanError::BadInput("small set diameter must be positive"));
    }
    let (theta, kappa) = hajek_constants(spec)?;
    let m = spec.small_set_m;
    // ln[(1-p) e^{eta m (1 + theta nu / kappa)}] = 0.
    let slope = m * (1.0 + theta * spec.nu / kappa);
    let eta_star = (1.0 / (1.0 - spec.p_regen)).ln() / slope;
    let eta = 0.5 * kappa.min(eta_star);
    let denom = 1.0 - (1.0 - spec.p_regen) * (eta * slope).exp();
    if !(denom > 0.0) {
        return Err(PlanError::RateDegenerate { denom });
    }
    let c_tau = (eta * m).exp() / denom;
    Ok(HajekTail {
        theta,
        kappa,
        eta,
        c_tau,
    })
}

/// Chernoff rate for a Poisson(lambda)-driven busy-period bound evaluated
/// at workload fraction alpha: I(alpha) = ln(1/(lambda alpha)) - (1 - lambda alpha).
pub fn poisson_chernoff_rate(lambda: f64, alpha: f64) -> Result<f64, PlanError> {
    if !(lambda > 0.0) {
        return Err(PlanError::BadInput("lambda must be positive"));
    }
    if !(alpha > 0.0 && lambda * alpha < 1.0) {
        return Err(PlanError::InvalidAlpha { alpha });
    }
    let la = lambda * alpha;
    Ok((1.0 / la).ln() - (1.0 - la))
}

/// Grid search for the alpha maximizing I(alpha)/alpha on (0, 1/lambda),
/// the per-unit-time decay rate of the busy-period tail.
pub fn optimal_alpha(lambda: f64, grid: usize) -> Result<(f64, f64), PlanError> {
    if grid < 2 {
        return Err(PlanError::BadInput("grid must have at least two points"));
    }
    let hi = 1.0 / lambda;
    let mut best = None;
    for i in 1..grid {
        let alpha = hi * i as f64 / grid as f64;
        let rate = poisson_chernoff_rate(lambda, alpha)? / alpha;
        match best {
            Some((_, r)) if r >= rate => {}
            _ => best = Some((alpha, rate)),
        }
    }
    best.ok_or(PlanError::BadInput("empty grid"))
}

/// Fully resolved plan for one estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub drift: DriftConstants,
    pub horizon_m: u64,
    /// Clipping level, when the raw supports are unbounded.
    pub clip_b: Option<f64>,
    pub eps_tot: f64,
    /// Truncation bias consumed by the horizon choice.
    pub truncation_bound: f64,
    /// Clipping bias consumed by the clip level, zero when unclipped.
    pub clipping_bound: f64,
    /// Accuracy target per amplitude estimate.
    pub eps_q: f64,
}

impl HorizonPlan {
    /// Audit that the planned error pieces fit inside eps_tot.
    pub fn budget_ok(&self) -> bool {
        let qae_total = self.eps_q * if self.clip_b.is_some() { 4.0 } else { 2.0 } * self.horizon_m as f64;
        self.truncation_bound + self.clipping_bound <= 0.5 * self.eps_tot + 1e-12
            && qae_total <= self.eps_tot + 1e-9
    }
}

/// Plan a single-queue run. Bounded supports use the raw drift span; if
/// either tail class is unbounded, a clip level is chosen first and the
/// drift recomputed on the clipped laws, iterating because the clip level
/// itself depends on the horizon.
pub fn plan_gg1(
    arrival: &DistSpec,
    service: &DistSpec,
    arrival_tail: &TailClass,
    service_tail: &TailClass,
    eps_tot: f64,
) -> Result<HorizonPlan, PlanError> {
    if !(eps_tot > 0.0 && eps_tot < 1.0) {
        return Err(PlanError::BadInput("eps_tot must lie in (0, 1)"));
    }
    let bounded = matches!(
        (arrival_tail, service_tail),
        (TailClass::Bounded { .. }, TailClass::Bounded { .. })
    );
    if bounded {
        let (a_max, s_max) = match (arrival_tail, service_tail) {
            (TailClass::Bounded { max: a }, TailClass::Bounded { max: s }) => (*a, *s),
            _ => unreachable!(),
        };
        let drift = beta_bounded(arrival.mean(), service.mean(), a_max, s_max)?;
        let horizon_m = choose_horizon(drift.beta, eps_tot)?;
        return Ok(HorizonPlan {
            drift,
            horizon_m,
            clip_b: None,
            eps_tot,
            truncation_bound: truncation_bias_bound(drift.beta, horizon_m),
            clipping_bound: 0.0,
            eps_q: allocate_qae_accuracy(eps_tot, horizon_m, false),
        });
    }

    // Clipping takes a quarter of the budget; B grows with M, and M shrinks
    // as B sharpens the drift, so iterate to a fixed point.
    let eps_clip = 0.25 * eps_tot;
    let mut horizon_m = 1u64;
    for _ in 0..64 {
        let clip_b = clip_for(arrival_tail, horizon_m, 0.5 * eps_clip)
            .max(clip_for(service_tail, horizon_m, 0.5 * eps_clip));
        let drift = beta_clipped(arrival, service, clip_b)?;
        let next_m = choose_horizon(drift.beta, eps_tot)?;
        if next_m == horizon_m {
            let p_a = arrival_tail.exceed_bound(clip_b);
            let p_s = service_tail.exceed_bound(clip_b);
            let clipping_bound = dist::clipping_bias_bound(horizon_m, p_a, p_s);
            return Ok(HorizonPlan {
                drift,
                horizon_m,
                clip_b: Some(clip_b),
                eps_tot,
                truncation_bound: truncation_bias_bound(drift.beta, horizon_m),
                clipping_bound,
                eps_q: allocate_qae_accuracy(eps_tot, horizon_m, true),
            });
        }
        horizon_m = next_m.max(horizon_m);
    }
    Err(PlanError::NoConvergence(64))
}

fn clip_for(tail: &TailClass, horizon_m: u64, eps_clip: f64) -> f64 {
    match tail {
        TailClass::Bounded { max } => *max,
        TailClass::SubGaussian { .. } => dist::clip_level_subgaussian(tail, horizon_m, eps_clip),
        TailClass::SubExponential { .. } => dist::clip_level_subexp(tail, horizon_m, eps_clip),
    }
}
