//! Run configuration: JSON-backed settings for planning and estimation.
//!
//! Configurations are strict: unknown fields are rejected and validation
//! failures carry a JSON-pointer path to the offending field plus the
//! machine-readable code `INVALID_CONFIG`. A SHA-256 hash of the canonical
//! serialized form ties every report back to the exact configuration that
//! produced it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dist::{DistSpec, TailClass};
use crate::gg1::{Gg1Params, Metric};
use crate::jsq::JsqParams;
use crate::maxweight::WirelessParams;
use crate::planner::MaxWeightDriftSpec;

pub const INVALID_CONFIG: &str = "INVALID_CONFIG";

#[derive(Debug, Error, PartialEq)]
#[error("{code} at {pointer}: {message}", code = INVALID_CONFIG)]
pub struct ConfigError {
    /// JSON-pointer path of the offending field.
    pub pointer: String,
    pub message: String,
}

fn bad(pointer: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    MonteCarlo,
    AmplitudeEstimation,
}

/// Settings for the amplitude-estimation numerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaeSettings {
    /// Seed-register width; the amplitude is defined over 2^bits_m words.
    pub bits_m: u32,
    pub delta: f64,
    #[serde(default = "default_shots")]
    pub shots_per_round: u64,
}

fn default_shots() -> u64 {
    128
}

fn default_metric() -> Metric {
    Metric::WaitingTime
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    /// Single queue driven by the waiting-time recursion.
    Gg1 {
        arrival: DistSpec,
        service: DistSpec,
        arrival_tail: TailClass,
        service_tail: TailClass,
        threshold_d: f64,
        #[serde(default = "default_metric")]
        metric: Metric,
    },
    /// Slotted multi-queue scheduler with per-slot channel rates.
    Wireless {
        arrival_pmfs: Vec<Vec<f64>>,
        channel_pmfs: Vec<Vec<f64>>,
        subset_i: Vec<usize>,
        threshold_d: u64,
        horizon_m: u64,
        /// Drift inputs for return-time tail planning, when known.
        #[serde(default)]
        drift: Option<MaxWeightDriftSpec>,
    },
    /// Continuous-time join-the-shortest-queue with clipped draws.
    Jsq {
        k: usize,
        lambda: f64,
        clip_b: f64,
        service: DistSpec,
        split_eps: f64,
        threshold_d: f64,
        arrival_cap: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    /// Worker threads; absent means the library default.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Total error budget driving horizon and accuracy planning.
    pub eps_tot: f64,
    #[serde(default = "default_cycles")]
    pub cycles: u64,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub qae: Option<QaeSettings>,
    pub model: ModelConfig,
}

fn default_cycles() -> u64 {
    10_000
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| bad("/", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.eps_tot > 0.0 && self.eps_tot < 1.0) {
            return Err(bad("/eps_tot", "must lie in (0, 1)"));
        }
        if self.cycles < 1 {
            return Err(bad("/cycles", "must be at least 1"));
        }
        if let Some(t) = self.threads {
            if t < 1 {
                return Err(bad("/threads", "must be at least 1"));
            }
        }
        if let Some(q) = &self.qae {
            if q.bits_m == 0 || q.bits_m > crate::qae::MAX_ENUM_BITS {
                return Err(bad(
                    "/qae/bits_m",
                    format!("must lie in [1, {}]", crate::qae::MAX_ENUM_BITS),
                ));
            }
            if !(q.delta > 0.0 && q.delta < 1.0) {
                return Err(bad("/qae/delta", "must lie in (0, 1)"));
            }
            if q.shots_per_round == 0 {
                return Err(bad("/qae/shots_per_round", "must be at least 1"));
            }
        }
        if self.estimator == EstimatorKind::AmplitudeEstimation && self.qae.is_none() {
            return Err(bad("/qae", "required when estimator is amplitude_estimation"));
        }
        self.validate_model()
    }

    fn validate_model(&self) -> Result<(), ConfigError> {
        match &self.model {
            ModelConfig::Gg1 {
                arrival,
                service,
                threshold_d,
                ..
            } => {
                arrival
                    .validate()
                    .map_err(|e| bad("/model/arrival", e.to_string()))?;
                service
                    .validate()
                    .map_err(|e| bad("/model/service", e.to_string()))?;
                if !(*threshold_d >= 0.0) {
                    return Err(bad("/model/threshold_d", "must be nonnegative"));
                }
                if !(arrival.mean() > service.mean()) {
                    return Err(bad(
                        "/model/arrival",
                        "mean inter-arrival must exceed mean service",
                    ));
                }
                Ok(())
            }
            ModelConfig::Wireless { .. } => {
                let params = self.wireless_params().expect("variant checked");
                params
                    .validate()
                    .map_err(|e| bad("/model", e.to_string()))?;
                Ok(())
            }
            ModelConfig::Jsq { .. } => {
                let params = self.jsq_params().expect("variant checked");
                params.validate().map_err(|e| bad("/model", e.to_string()))?;
                if !params.clipped_stable() {
                    return Err(bad("/model/lambda", "clipped system is not stable"));
                }
                Ok(())
            }
        }
    }

    /// Build queue parameters at the given horizon and clip level.
    pub fn gg1_params(&self, horizon_m: u64, clip_b: Option<f64>) -> Option<Gg1Params> {
        match &self.model {
            ModelConfig::Gg1 {
                arrival,
                service,
                threshold_d,
                metric,
                ..
            } => Some(Gg1Params {
                arrival: arrival.clone(),
                service: service.clone(),
                clip: clip_b.map_or(crate::dist::ClipSpec::none(), crate::dist::ClipSpec::at),
                threshold_d: *threshold_d,
                horizon_m,
                metric: *metric,
            }),
            _ => None,
        }
    }

    pub fn wireless_params(&self) -> Option<WirelessParams> {
        match &self.model {
            ModelConfig::Wireless {
                arrival_pmfs,
                channel_pmfs,
                subset_i,
                threshold_d,
                horizon_m,
                ..
            } => Some(WirelessParams {
                arrival_pmfs: arrival_pmfs.clone(),
                channel_pmfs: channel_pmfs.clone(),
                subset_i: subset_i.clone(),
                threshold_d: *threshold_d,
                horizon_m: *horizon_m,
            }),
            _ => None,
        }
    }

    pub fn jsq_params(&self) -> Option<JsqParams> {
        match &self.model {
            ModelConfig::Jsq {
                k,
                lambda,
                clip_b,
                service,
                split_eps,
                threshold_d,
                arrival_cap,
            } => Some(JsqParams {
                k: *k,
                lambda: *lambda,
                clip_b: *clip_b,
                service: service.clone(),
                split_eps: *split_eps,
                threshold_d: *threshold_d,
                arrival_cap: *arrival_cap,
            }),
            _ => None,
        }
    }

    /// Apply environment overrides: QTAIL_SEED and QTAIL_THREADS.
    pub fn apply_env<F>(&mut self, get: F) -> Result<(), ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        if let Some(v) = get("QTAIL_SEED") {
            self.master_seed = v
                .parse()
                .map_err(|_| bad("/master_seed", format!("QTAIL_SEED not a u64: {v}")))?;
        }
        if let Some(v) = get("QTAIL_THREADS") {
            let t: usize = v
                .parse()
                .map_err(|_| bad("/threads", format!("QTAIL_THREADS not a count: {v}")))?;
            if t < 1 {
                return Err(bad("/threads", "QTAIL_THREADS must be at least 1"));
            }
            self.threads = Some(t);
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gg1_json() -> String {
        r#"{
            "master_seed": 42,
            "eps_tot": 0.001,
            "cycles": 5000,
            "model": {
                "kind": "gg1",
                "arrival": {"kind": "exponential", "rate": 0.5},
                "service": {"kind": "exponential", "rate": 1.0},
                "arrival_tail": {"kind": "sub-exponential", "k_factor": 1.0, "lambda_rate": 0.5},
                "service_tail": {"kind": "sub-exponential", "k_factor": 1.0, "lambda_rate": 1.0},
                "threshold_d": 4.0
            }
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_json_str(&gg1_json()).unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.cycles, 5000);
        assert_eq!(cfg.estimator, EstimatorKind::MonteCarlo);
        let back = serde_json::to_string(&cfg).unwrap();
        let again = RunConfig::from_json_str(&back).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = gg1_json().replace("\"master_seed\": 42,", "\"master_seed\": 42, \"bogus\": 1,");
        let err = RunConfig::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains(INVALID_CONFIG));
    }

    #[test]
    fn pointer_paths_in_errors() {
        let text = gg1_json().replace("0.001", "2.5");
        let err = RunConfig::from_json_str(&text).unwrap_err();
        assert_eq!(err.pointer, "/eps_tot");

        let text = gg1_json().replace("\"threshold_d\": 4.0", "\"threshold_d\": -1.0");
        let err = RunConfig::from_json_str(&text).unwrap_err();
        assert_eq!(err.pointer, "/model/threshold_d");
    }

    #[test]
    fn unstable_queue_rejected() {
        let text = gg1_json().replace("\"rate\": 0.5", "\"rate\": 2.0");
        let err = RunConfig::from_json_str(&text).unwrap_err();
        assert_eq!(err.pointer, "/model/arrival");
    }

    #[test]
    fn qae_requires_settings() {
        let text = gg1_json().replace(
            "\"cycles\": 5000,",
            "\"cycles\": 5000, \"estimator\": \"amplitude_estimation\",",
        );
        let err = RunConfig::from_json_str(&text).unwrap_err();
        assert_eq!(err.pointer, "/qae");
    }

    #[test]
    fn env_overrides() {
        let mut cfg = RunConfig::from_json_str(&gg1_json()).unwrap();
        cfg.apply_env(|k| match k {
            "QTAIL_SEED" => Some("7".to_string()),
            "QTAIL_THREADS" => Some("3".to_string()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.threads, Some(3));

        let err = cfg.apply_env(|k| (k == "QTAIL_SEED").then(|| "abc".to_string()));
        assert!(err.is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::from_json_str(&gg1_json()).unwrap();
        let b = RunConfig::from_json_str(&gg1_json()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.master_seed = 43;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn schema_file_matches_config_shape() {
        let text = include_str!("../schema/runconfig.schema.json");
        let schema: serde_json::Value = serde_json::from_str(text).unwrap();
        let props = schema["properties"].as_object().unwrap();
        for key in ["master_seed", "eps_tot", "cycles", "estimator", "qae", "model", "threads"] {
            assert!(props.contains_key(key), "schema missing {key}");
        }
        let required = schema["required"].as_array().unwrap();
        assert!(required.iter().any(|v| v == "master_seed"));
        assert!(required.iter().any(|v| v == "model"));
    }
}
