//! Truncated regeneration cycles for a single-server FIFO queue.
//!
//! One cycle is a pure function of its seed stream: per arrival the stream
//! yields the inter-arrival draw (odd call index) then the service draw (even
//! call index), the waiting time advances through the Lindley recursion, and
//! the cycle ends at the first return to zero or at the horizon.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{sample, ClipSpec, DistSpec};
use crate::seed::SeedStream;

#[derive(Debug, Error, PartialEq)]
pub enum CycleError {
    /// The untruncated oracle hit its safety cap before regenerating. The
    /// caller must enlarge the cap; silently truncating here would corrupt
    /// ground-truth bias measurements.
    #[error("cycle did not regenerate within the safety cap of {cap} arrivals")]
    CapExceeded { cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Count arrivals with W_n >= d.
    WaitingTime,
    /// Count arrivals with W_n + S_n >= d (sojourn of arrival n).
    ResponseTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gg1Params {
    pub arrival: DistSpec,
    pub service: DistSpec,
    #[serde(default)]
    pub clip: ClipSpec,
    pub threshold_d: f64,
    pub horizon_m: u64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::WaitingTime
}

impl Gg1Params {
    pub fn validate(&self) -> Result<(), crate::dist::DistError> {
        self.arrival.validate()?;
        self.service.validate()?;
        self.clip.validate()?;
        assert!(self.horizon_m >= 1, "horizon must be at least 1");
        assert!(self.threshold_d >= 0.0);
        Ok(())
    }
}

/// Statistics of one truncated cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    /// min(tau, M): arrivals simulated.
    pub tau_m: u64,
    /// Threshold violations counted up to tau_m.
    pub r_m: u64,
    /// r_m / M, the bounded per-cycle output in [0, 1].
    pub y: f64,
    pub truncated: bool,
    /// Uniform draws consumed; exactly 2 * tau_m.
    pub calls_used: u64,
}

/// Statistics of one full (untruncated) cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullCycleStats {
    pub tau: u64,
    pub r: u64,
    pub calls_used: u64,
}

/// One step of the waiting-time recursion: (W + S - A)^+.
pub fn lindley_step(w: f64, s: f64, a: f64) -> f64 {
    debug_assert!(w >= 0.0 && s >= 0.0 && a >= 0.0);
    (w + s - a).max(0.0)
}

// Shared dynamics; returns (steps run, violations, regenerated?).
fn run_cycle(stream: &mut SeedStream, params: &Gg1Params, horizon: u64) -> (u64, u64, bool) {
    let mut w = 0.0;
    let mut r = 0u64;
    let mut n = 0u64;
    while n < horizon {
        n += 1;
        let a = sample(&params.arrival, &params.clip, stream.draw_uniform());
        let s = sample(&params.service, &params.clip, stream.draw_uniform());
        w = lindley_step(w, s, a);
        let hit = match params.metric {
            Metric::WaitingTime => w >= params.threshold_d,
            Metric::ResponseTime => w + s >= params.threshold_d,
        };
        if hit {
            r += 1;
        }
        if w == 0.0 {
            return (n, r, true);
        }
    }
    (n, r, false)
}

/// Evaluate one truncated cycle from a fresh stream.
pub fn evaluate_truncated_cycle(stream: &mut SeedStream, params: &Gg1Params) -> CycleStats {
    debug_assert_eq!(stream.call_index(), 0, "cycle requires a fresh stream");
    let (tau_m, r_m, regenerated) = run_cycle(stream, params, params.horizon_m);
    CycleStats {
        tau_m,
        r_m,
        y: r_m as f64 / params.horizon_m as f64,
        truncated: !regenerated,
        calls_used: 2 * tau_m,
    }
}

/// Untruncated oracle for bias measurements: same dynamics with the horizon
/// replaced by a safety cap that must not bind.
pub fn evaluate_full_cycle(
    stream: &mut SeedStream,
    params: &Gg1Params,
    safety_cap: u64,
) -> Result<FullCycleStats, CycleError> {
    debug_assert_eq!(stream.call_index(), 0, "cycle requires a fresh stream");
    let (tau, r, regenerated) = run_cycle(stream, params, safety_cap);
    if !regenerated {
        return Err(CycleError::CapExceeded { cap: safety_cap });
    }
    Ok(FullCycleStats {
        tau,
        r,
        calls_used: 2 * tau,
    })
}
