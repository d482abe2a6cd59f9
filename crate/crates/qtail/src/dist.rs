//! Distribution specifications, inverse-CDF sampling, clipping, and
//! tail-class parameters used by every simulator and by the clipping-level
//! planners.
//!
//! All quantiles follow the left-continuous lower-quantile convention; for
//! discrete tables, ties at a CDF boundary resolve toward the lower support
//! point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::UniformDraw;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("pmf must sum to 1 within 1e-12 (got {0})")]
    PmfSum(f64),
    #[error("pmf entries must be nonnegative and finite")]
    PmfEntry,
    #[error("rate must be strictly positive")]
    NonPositiveRate,
    #[error("deterministic value must be nonnegative and finite")]
    BadValue,
    #[error("inverse-CDF table must be nonempty, nonnegative, and nondecreasing")]
    BadTable,
    #[error("clip level must be strictly positive when clipping is enabled")]
    BadClipLevel,
    #[error("tail parameters out of range: {0}")]
    BadTail(&'static str),
}

/// A sampleable nonnegative distribution, keyed by inverse-CDF transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistSpec {
    /// Pmf table over the support {0, 1, ..., pmf.len()-1}.
    BoundedDiscrete { pmf: Vec<f64> },
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    /// Equi-spaced lower-quantile table: quantile(u) = values[floor(u * n)].
    InverseCdfTable { values: Vec<f64> },
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            DistSpec::BoundedDiscrete { pmf } => {
                if pmf.is_empty() || pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(DistError::PmfEntry);
                }
                let sum: f64 = pmf.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(DistError::PmfSum(sum));
                }
                Ok(())
            }
            DistSpec::Exponential { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(DistError::NonPositiveRate);
                }
                Ok(())
            }
            DistSpec::Deterministic { value } => {
                if !value.is_finite() || *value < 0.0 {
                    return Err(DistError::BadValue);
                }
                Ok(())
            }
            DistSpec::InverseCdfTable { values } => {
                if values.is_empty()
                    || values.iter().any(|v| !v.is_finite() || *v < 0.0)
                    || values.windows(2).any(|w| w[1] < w[0])
                {
                    return Err(DistError::BadTable);
                }
                Ok(())
            }
        }
    }

    /// Left-continuous lower quantile at u in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u));
        match self {
            DistSpec::BoundedDiscrete { pmf } => discrete_quantile(pmf, u) as f64,
            DistSpec::Exponential { rate } => -(-u).ln_1p() / rate,
            DistSpec::Deterministic { value } => *value,
            DistSpec::InverseCdfTable { values } => {
                let idx = ((u * values.len() as f64) as usize).min(values.len() - 1);
                values[idx]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistSpec::BoundedDiscrete { pmf } => {
                pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
            }
            DistSpec::Exponential { rate } => 1.0 / rate,
            DistSpec::Deterministic { value } => *value,
            DistSpec::InverseCdfTable { values } => {
                values.iter().sum::<f64>() / values.len() as f64
            }
        }
    }

    /// E[min(X, b)], the mean after clipping at level b.
    pub fn clipped_mean(&self, b: f64) -> f64 {
        match self {
            DistSpec::BoundedDiscrete { pmf } => pmf
                .iter()
                .enumerate()
                .map(|(k, p)| (k as f64).min(b) * p)
                .sum(),
            DistSpec::Exponential { rate } => (1.0 - (-rate * b).exp()) / rate,
            DistSpec::Deterministic { value } => value.min(b),
            DistSpec::InverseCdfTable { values } => {
                values.iter().map(|v| v.min(b)).sum::<f64>() / values.len() as f64
            }
        }
    }

    /// P(X > b), used for analytic clipping-bias bounds.
    pub fn exceed_prob(&self, b: f64) -> f64 {
        match self {
            DistSpec::BoundedDiscrete { pmf } => pmf
                .iter()
                .enumerate()
                .filter(|(k, _)| *k as f64 > b)
                .map(|(_, p)| p)
                .sum(),
            DistSpec::Exponential { rate } => (-rate * b).exp(),
            DistSpec::Deterministic { value } => {
                if *value > b {
                    1.0
                } else {
                    0.0
                }
            }
            DistSpec::InverseCdfTable { values } => {
                values.iter().filter(|v| **v > b).count() as f64 / values.len() as f64
            }
        }
    }

    /// Largest attainable value, when the support is bounded.
    pub fn max_support(&self) -> Option<f64> {
        match self {
            DistSpec::BoundedDiscrete { pmf } => Some((pmf.len() - 1) as f64),
            DistSpec::Exponential { .. } => None,
            DistSpec::Deterministic { value } => Some(*value),
            DistSpec::InverseCdfTable { values } => values.last().copied(),
        }
    }
}

/// Lower quantile for a pmf over {0..len-1}: the smallest k with F(k) >= u.
pub fn discrete_quantile(pmf: &[f64], u: f64) -> usize {
    let mut cdf = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        cdf += p;
        if cdf >= u {
            return k;
        }
    }
    pmf.len() - 1
}

/// Clipping of draws at a fixed level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub level: f64,
    pub enabled: bool,
}

impl ClipSpec {
    pub fn none() -> Self {
        ClipSpec {
            level: f64::INFINITY,
            enabled: false,
        }
    }

    pub fn at(level: f64) -> Self {
        ClipSpec {
            level,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if self.enabled && !(self.level > 0.0) {
            return Err(DistError::BadClipLevel);
        }
        Ok(())
    }
}

impl Default for ClipSpec {
    fn default() -> Self {
        ClipSpec::none()
    }
}

/// min(quantile(u), B) when clipping is enabled, else quantile(u).
pub fn sample(dist: &DistSpec, clip: &ClipSpec, u: UniformDraw) -> f64 {
    let x = dist.quantile(u.value);
    if clip.enabled {
        x.min(clip.level)
    } else {
        x
    }
}

/// Tail class of one input stream, driving the clipping-level choosers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailClass {
    Bounded { max: f64 },
    SubGaussian { mean: f64, sigma2: f64 },
    SubExponential { k_factor: f64, lambda_rate: f64 },
}

impl TailClass {
    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            TailClass::Bounded { max } => {
                if !(*max > 0.0) {
                    return Err(DistError::BadTail("bounded max must be positive"));
                }
            }
            TailClass::SubGaussian { sigma2, .. } => {
                if !(*sigma2 > 0.0) {
                    return Err(DistError::BadTail("sigma2 must be positive"));
                }
            }
            TailClass::SubExponential {
                k_factor,
                lambda_rate,
            } => {
                if !(*k_factor >= 1.0) || !(*lambda_rate > 0.0) {
                    return Err(DistError::BadTail("need K >= 1 and lambda_rate > 0"));
                }
            }
        }
        Ok(())
    }

    /// Tail-class upper bound on P(X > b).
    pub fn exceed_bound(&self, b: f64) -> f64 {
        match self {
            TailClass::Bounded { max } => {
                if b >= *max {
                    0.0
                } else {
                    1.0
                }
            }
            TailClass::SubGaussian { mean, sigma2 } => {
                if b <= *mean {
                    1.0
                } else {
                    (-(b - mean).powi(2) / (2.0 * sigma2)).exp()
                }
            }
            TailClass::SubExponential {
                k_factor,
                lambda_rate,
            } => (k_factor * (-lambda_rate * b).exp()).min(1.0),
        }
    }
}

/// Per-stream clipping level under a sub-Gaussian tail:
/// B = mean + sigma * sqrt(2 ln(2 M^2 / eps_clip)).
/// The caller takes the max over its arrival and service streams.
pub fn clip_level_subgaussian(tail: &TailClass, horizon_m: u64, eps_clip: f64) -> f64 {
    let (mean, sigma2) = match tail {
        TailClass::SubGaussian { mean, sigma2 } => (*mean, *sigma2),
        _ => panic!("clip_level_subgaussian requires a sub-Gaussian tail class"),
    };
    assert!(eps_clip > 0.0 && eps_clip < 1.0, "eps_clip must lie in (0,1)");
    assert!(horizon_m >= 1);
    let m = horizon_m as f64;
    mean + sigma2.sqrt() * (2.0 * (2.0 * m * m / eps_clip).ln()).sqrt()
}

/// Per-stream clipping level under a sub-exponential tail:
/// B = (1/lambda_rate) * ln(2 M^2 K / eps_clip).
pub fn clip_level_subexp(tail: &TailClass, horizon_m: u64, eps_clip: f64) -> f64 {
    let (k_factor, lambda_rate) = match tail {
        TailClass::SubExponential {
            k_factor,
            lambda_rate,
        } => (*k_factor, *lambda_rate),
        _ => panic!("clip_level_subexp requires a sub-exponential tail class"),
    };
    assert!(eps_clip > 0.0 && eps_clip < 1.0, "eps_clip must lie in (0,1)");
    assert!(horizon_m >= 1);
    let m = horizon_m as f64;
    (2.0 * m * m * k_factor / eps_clip).ln() / lambda_rate
}

/// Bound M^2 (P(A > B) + P(S > B)) on the truncated-count clipping bias.
pub fn clipping_bias_bound(horizon_m: u64, p_a_exceed: f64, p_s_exceed: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p_a_exceed) && (0.0..=1.0).contains(&p_s_exceed));
    let m = horizon_m as f64;
    m * m * (p_a_exceed + p_s_exceed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;

    fn u(v: f64) -> UniformDraw {
        UniformDraw {
            value: v,
            bit_width: 53,
        }
    }

    #[test]
    fn exponential_quantile_hand_values() {
        let d = DistSpec::Exponential { rate: 1.0 };
        let clip = ClipSpec::at(5.0);
        assert_eq!(sample(&d, &clip, u(0.0)), 0.0);
        let two = sample(&d, &clip, u(1.0 - (-2.0f64).exp()));
        assert!((two - 2.0).abs() < 1e-12);
        // Raw quantile ~13.8 is clipped to the level.
        assert_eq!(sample(&d, &clip, u(0.999999)), 5.0);
        assert!((d.quantile(0.999999) - 13.8155).abs() < 1e-3);
    }

    #[test]
    fn clip_disabled_passes_through() {
        let d = DistSpec::Exponential { rate: 1.0 };
        let raw = sample(&d, &ClipSpec::none(), u(0.999999));
        assert!(raw > 13.0);
    }

    #[test]
    fn discrete_quantile_ties_go_low() {
        let pmf = [0.5, 0.5];
        assert_eq!(discrete_quantile(&pmf, 0.3), 0);
        assert_eq!(discrete_quantile(&pmf, 0.5), 0);
        assert_eq!(discrete_quantile(&pmf, 0.7), 1);
    }

    #[test]
    fn subgaussian_clip_level_hand_value() {
        let tail = TailClass::SubGaussian {
            mean: 1.0,
            sigma2: 1.0,
        };
        let b = clip_level_subgaussian(&tail, 100, 1e-3);
        let want = 1.0 + (2.0 * (2.0e7f64).ln()).sqrt();
        assert!((b - want).abs() < 1e-9);
        assert!((b - 6.799).abs() < 1e-3);
        // Degenerate concentration collapses to the mean.
        let tiny = TailClass::SubGaussian {
            mean: 1.0,
            sigma2: 1e-24,
        };
        assert!((clip_level_subgaussian(&tiny, 100, 1e-3) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn subgaussian_clip_level_round_trip() {
        let tail = TailClass::SubGaussian {
            mean: 1.0,
            sigma2: 1.0,
        };
        let m = 100u64;
        let eps = 1e-3;
        let b = clip_level_subgaussian(&tail, m, eps);
        let mass = (m * m) as f64 * tail.exceed_bound(b);
        assert!(mass <= eps / 2.0 + 1e-12);
    }

    #[test]
    fn subexp_clip_level_hand_value() {
        let tail = TailClass::SubExponential {
            k_factor: 1.0,
            lambda_rate: 1.0,
        };
        let b = clip_level_subexp(&tail, 100, 1e-3);
        assert!((b - (2.0e7f64).ln()).abs() < 1e-9);
        assert!((b - 16.811).abs() < 1e-3);
        let mass = 1e4 * tail.exceed_bound(b);
        assert!(mass <= 1e-3 / 2.0 + 1e-12);
    }

    #[test]
    #[should_panic]
    fn subexp_rejects_eps_clip_at_least_one() {
        let tail = TailClass::SubExponential {
            k_factor: 1.0,
            lambda_rate: 1.0,
        };
        clip_level_subexp(&tail, 1, 2.0);
    }

    #[test]
    fn clipping_bias_bound_hand_values() {
        assert!((clipping_bias_bound(10, 1e-4, 0.0) - 0.01).abs() < 1e-15);
        assert_eq!(clipping_bias_bound(10, 0.0, 0.0), 0.0);
        assert!((clipping_bias_bound(1, 0.3, 0.2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_malformed_specs() {
        assert!(DistSpec::BoundedDiscrete { pmf: vec![0.5, 0.4] }
            .validate()
            .is_err());
        assert!(DistSpec::Exponential { rate: 0.0 }.validate().is_err());
        assert!(DistSpec::InverseCdfTable {
            values: vec![2.0, 1.0]
        }
        .validate()
        .is_err());
        assert!(DistSpec::BoundedDiscrete {
            pmf: vec![0.25, 0.25, 0.5]
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn clipped_exponential_empirical_mean_matches_analytic() {
        let d = DistSpec::Exponential { rate: 1.0 };
        let b = 16.8;
        let clip = ClipSpec::at(b);
        let n = 1_000_000u64;
        let mut s = SeedStream::fork_cycle(2024, 0);
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample(&d, &clip, s.draw_uniform());
        }
        let mean = sum / n as f64;
        let want = d.clipped_mean(b);
        // Var of Exp(1) is 1; 3 sigma band for the sample mean.
        let band = 3.0 / (n as f64).sqrt();
        assert!(
            (mean - want).abs() < band,
            "mean {mean} vs analytic {want} (band {band})"
        );
    }

    #[test]
    fn quantile_monotone_and_clip_dominance_spot() {
        let d = DistSpec::BoundedDiscrete {
            pmf: vec![0.2, 0.3, 0.5],
        };
        let mut last = -1.0;
        for i in 0..100 {
            let q = d.quantile(i as f64 / 100.0);
            assert!(q >= last);
            last = q;
        }
    }
}
