//! TOML run configuration.
//!
//! ```toml
//! [dataset]
//! root = "fixtures/spider_mini"
//! split = "dev"
//!
//! [pipeline]
//! max_example_correction_rounds = 1
//! enable_error_correction = true
//! gold_table_row_cap = 50
//! workers = 4
//!
//! [limits]
//! timeout_secs = 30.0
//! max_rows = 10000
//!
//! [generator]
//! model = "gpt-3.5-turbo-16k"
//! url = "https://api.openai.com/v1/chat/completions"
//! api_key_env = "OPENAI_API_KEY"
//! temperature = 0.0
//! max_tokens = 512
//!
//! [corrector]
//! model = "gpt-4-turbo"
//!
//! [retry]
//! max_attempts = 5
//! base_delay_ms = 500
//! max_delay_ms = 30000
//! ```
//!
//! Every section and key is optional. Corrector keys that are absent fall
//! back to the generator's. Relative dataset paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spidereval_core::dataset::Split;
use spidereval_core::exec::{EquivalenceOptions, ExecLimits};
use spidereval_pipeline::{PipelineConfig, RetryPolicy, Sampling};

pub const DEFAULT_URL: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {}: {source}", .path.display())]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub generator: EndpointSection,
    #[serde(default)]
    pub corrector: EndpointSection,
    #[serde(default)]
    pub retry: RetrySection,
    /// Digest of the file as written, before path resolution.
    #[serde(skip)]
    loaded_digest: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub root: Option<PathBuf>,
    pub split: Option<String>,
    /// Split file to read instead of the standard one under `root`.
    pub split_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub max_example_correction_rounds: u32,
    pub enable_error_correction: bool,
    pub gold_table_row_cap: usize,
    pub workers: usize,
    pub strict_ordering: bool,
    pub relative_tolerance: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineSection {
            max_example_correction_rounds: p.max_example_correction_rounds,
            enable_error_correction: p.enable_error_correction,
            gold_table_row_cap: p.gold_table_row_cap,
            workers: 4,
            strict_ordering: p.equivalence.strict_ordering,
            relative_tolerance: p.equivalence.relative_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsSection {
    pub timeout_secs: f64,
    pub max_rows: usize,
}

impl Default for LimitsSection {
    fn default() -> Self {
        let l = ExecLimits::default();
        LimitsSection {
            timeout_secs: l.timeout.as_secs_f64(),
            max_rows: l.max_rows,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSection {
    pub model: Option<String>,
    pub url: Option<String>,
    pub api_key_env: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrySection {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetrySection {
    fn default() -> Self {
        let r = RetryPolicy::default();
        RetrySection {
            max_attempts: r.max_attempts,
            base_delay_ms: r.base_delay.as_millis() as u64,
            max_delay_ms: r.max_delay.as_millis() as u64,
        }
    }
}

/// Endpoint settings after corrector fallback and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedEndpoint {
    pub model: String,
    pub url: String,
    pub api_key_env: Option<String>,
    pub sampling: Sampling,
    pub timeout: Duration,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        config.loaded_digest = Some(config.digest());
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.dataset.root, &mut config.dataset.split_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Config, ConfigError> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.split()?;
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.limits.timeout_secs.is_finite() && self.limits.timeout_secs > 0.0) {
            return bad("limits.timeout_secs must be positive");
        }
        if self.limits.max_rows == 0 {
            return bad("limits.max_rows must be positive");
        }
        if self.pipeline.workers == 0 {
            return bad("pipeline.workers must be positive");
        }
        if !(self.pipeline.relative_tolerance >= 0.0 && self.pipeline.relative_tolerance.is_finite()) {
            return bad("pipeline.relative_tolerance must be a finite non-negative number");
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be at least 1");
        }
        for (name, e) in [("generator", &self.generator), ("corrector", &self.corrector)] {
            if let Some(t) = e.temperature {
                if !(0.0..=2.0).contains(&t) {
                    return Err(ConfigError::Invalid(format!("{name}.temperature must lie in [0, 2]")));
                }
            }
            if e.max_tokens == Some(0) {
                return Err(ConfigError::Invalid(format!("{name}.max_tokens must be positive")));
            }
            if let Some(t) = e.timeout_secs {
                if !(t.is_finite() && t > 0.0) {
                    return Err(ConfigError::Invalid(format!("{name}.timeout_secs must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn split(&self) -> Result<Split, ConfigError> {
        match self.dataset.split.as_deref().unwrap_or("dev") {
            "dev" => Ok(Split::Dev),
            "train" => Ok(Split::Train),
            other => Err(ConfigError::Invalid(format!("unknown split {other:?}"))),
        }
    }

    pub fn limits(&self) -> ExecLimits {
        ExecLimits {
            timeout: Duration::from_secs_f64(self.limits.timeout_secs),
            max_rows: self.limits.max_rows,
        }
    }

    pub fn equivalence(&self) -> EquivalenceOptions {
        EquivalenceOptions {
            relative_tolerance: self.pipeline.relative_tolerance,
            strict_ordering: self.pipeline.strict_ordering,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            max_example_correction_rounds: self.pipeline.max_example_correction_rounds,
            enable_error_correction: self.pipeline.enable_error_correction,
            limits: self.limits(),
            gold_table_row_cap: self.pipeline.gold_table_row_cap,
            equivalence: self.equivalence(),
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.retry.max_attempts,
            base_delay: Duration::from_millis(self.retry.base_delay_ms),
            max_delay: Duration::from_millis(self.retry.max_delay_ms),
        }
    }

    pub fn generator(&self) -> ResolvedEndpoint {
        resolve(&self.generator, &EndpointSection::default(), "generator")
    }

    pub fn corrector(&self) -> ResolvedEndpoint {
        resolve(&self.corrector, &self.generator, "corrector")
    }

    /// Hex sha256 of the canonical TOML rendering. Relative paths count as
    /// written in the file.
    pub fn digest(&self) -> String {
        if let Some(d) = &self.loaded_digest {
            return d.clone();
        }
        let text = toml::to_string(self).expect("config always serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn resolve(e: &EndpointSection, fallback: &EndpointSection, default_model: &str) -> ResolvedEndpoint {
    let defaults = Sampling::default();
    ResolvedEndpoint {
        model: e
            .model
            .clone()
            .or_else(|| fallback.model.clone())
            .unwrap_or_else(|| default_model.to_string()),
        url: e
            .url
            .clone()
            .or_else(|| fallback.url.clone())
            .unwrap_or_else(|| DEFAULT_URL.to_string()),
        api_key_env: e
            .api_key_env
            .clone()
            .or_else(|| fallback.api_key_env.clone())
            .or_else(|| Some(DEFAULT_API_KEY_ENV.to_string()))
            .filter(|v| !v.is_empty()),
        sampling: Sampling {
            temperature: e.temperature.or(fallback.temperature).unwrap_or(defaults.temperature),
            max_tokens: e.max_tokens.or(fallback.max_tokens).unwrap_or(defaults.max_tokens),
        },
        timeout: Duration::from_secs_f64(e.timeout_secs.or(fallback.timeout_secs).unwrap_or(120.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c: Config = toml::from_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.pipeline(), PipelineConfig::default());
        assert_eq!(c.split().unwrap(), Split::Dev);
        assert_eq!(c.generator().model, "generator");
        assert_eq!(c.corrector().api_key_env.as_deref(), Some(DEFAULT_API_KEY_ENV));
    }

    #[test]
    fn corrector_falls_back_to_generator() {
        let c: Config = toml::from_str(
            "[generator]\nmodel = \"g\"\nurl = \"http://h\"\nmax_tokens = 100\n[corrector]\nmodel = \"c\"\n",
        )
        .unwrap();
        let r = c.corrector();
        assert_eq!((r.model.as_str(), r.url.as_str(), r.sampling.max_tokens), ("c", "http://h", 100));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[dataset]\nsplit = \"test\"",
            "[pipeline]\nworkers = 0",
            "[limits]\ntimeout_secs = -1.0",
            "[generator]\ntemperature = 3.0",
            "[retry]\nmax_attempts = 0",
        ] {
            let c: Config = toml::from_str(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
        assert!(toml::from_str::<Config>("[pipeline]\nrounds = 2").is_err());
    }

    #[test]
    fn digest_is_stable() {
        let c = Config::default();
        assert_eq!(c.digest(), Config::default().digest());
        let mut d = c.clone();
        d.pipeline.workers = 9;
        assert_ne!(c.digest(), d.digest());
    }
}
