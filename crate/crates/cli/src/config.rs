//! Flat configuration document.
//!
//! The whole configuration lives in one flat JSON object; every field can be
//! overridden by a command-line flag of the same name (kebab-cased). Fields
//! absent from the file take the defaults below, which mirror the reference
//! run: 48184 windows, detection ratio 1/4, corruption calibrated to a 5.47%
//! error ratio, and a 10% abort threshold.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use qdba_core::agreement::ConsistencyParams;
use qdba_core::harness::{SessionConfig, TraitorSpec};
use qdba_core::quantum::NoiseModel;
use qdba_core::{Party, Plan, StrategyKind};

/// Strategy selection by name; parameters ride in `strategy_flip` and
/// `strategy_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    Honest,
    ConflictingCommander,
    ForgingLieutenant,
    FalseBotLieutenant,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Role {
    A,
    B,
    C,
}

impl From<Role> for Party {
    fn from(role: Role) -> Party {
        match role {
            Role::A => Party::A,
            Role::B => Party::B,
            Role::C => Party::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Raw source windows per session.
    pub windows: usize,
    pub p_corrupt: f64,
    pub p_detect: f64,
    /// Correlation test rounds; derived from the raw length when null.
    pub tests: Option<usize>,
    pub qer_threshold: f64,
    pub min_entries: usize,
    /// Claimed-length tolerance; null disables the length check.
    pub length_tolerance: Option<f64>,
    pub error_tolerance: f64,
    /// The commander's plan, 0 or 1.
    pub plan: u8,
    pub traitor_role: Option<Role>,
    pub traitor_strategy: Option<StrategyName>,
    /// For `forging-lieutenant`: announce the flipped plan.
    pub strategy_flip: bool,
    /// For `random`: the adversary's own stream seed.
    pub strategy_seed: Option<u64>,
    pub per_party_subset: Option<usize>,
    pub allow_outside_model: bool,
    pub transcript_out: Option<PathBuf>,
    pub stats_out: Option<PathBuf>,
    pub lists_out: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            windows: 48_184,
            p_corrupt: qdba_core::quantum::DEFAULT_P_CORRUPT,
            p_detect: qdba_core::quantum::DEFAULT_P_DETECT,
            tests: None,
            qer_threshold: 0.10,
            min_entries: 300,
            length_tolerance: Some(qdba_core::agreement::DEFAULT_LENGTH_TOLERANCE),
            error_tolerance: qdba_core::agreement::DEFAULT_ERROR_TOLERANCE,
            plan: 1,
            traitor_role: None,
            traitor_strategy: None,
            strategy_flip: true,
            strategy_seed: None,
            per_party_subset: None,
            allow_outside_model: false,
            transcript_out: None,
            stats_out: None,
            lists_out: None,
        }
    }
}

/// Errors loading or interpreting a configuration document. The message
/// always names the offending field.
#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Field(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigFileError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the core session configuration, validating every field.
    pub fn session_config(&self) -> Result<SessionConfig, ConfigFileError> {
        let noise = NoiseModel::new(self.p_corrupt, self.p_detect)
            .map_err(|e| ConfigFileError::Field(e.to_string()))?;
        let consistency = ConsistencyParams::new(self.length_tolerance, self.error_tolerance)
            .map_err(|e| ConfigFileError::Field(e.to_string()))?;
        let plan = Plan::from_value(self.plan)
            .map_err(|e| ConfigFileError::Field(format!("plan: {e}")))?;
        let traitors = match (self.traitor_role, self.traitor_strategy) {
            (None, None) => Vec::new(),
            (Some(role), Some(name)) => vec![TraitorSpec {
                role: role.into(),
                strategy: self.strategy_kind(name),
            }],
            (Some(_), None) => {
                return Err(ConfigFileError::Field(
                    "traitor_role set without traitor_strategy".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(ConfigFileError::Field(
                    "traitor_strategy set without traitor_role".into(),
                ))
            }
        };
        let session = SessionConfig {
            windows: self.windows,
            noise,
            tests: self.tests,
            qer_threshold: self.qer_threshold,
            min_entries: self.min_entries,
            consistency,
            plan,
            traitors,
            allow_outside_model: self.allow_outside_model,
            per_party_subset: self.per_party_subset,
            record_transcript: self.transcript_out.is_some(),
        };
        session
            .validate()
            .map_err(|e| ConfigFileError::Field(e.to_string()))?;
        Ok(session)
    }

    fn strategy_kind(&self, name: StrategyName) -> StrategyKind {
        match name {
            StrategyName::Honest => StrategyKind::Honest,
            StrategyName::ConflictingCommander => StrategyKind::ConflictingCommander,
            StrategyName::ForgingLieutenant => StrategyKind::ForgingLieutenant {
                flip: self.strategy_flip,
            },
            StrategyName::FalseBotLieutenant => StrategyKind::FalseBotLieutenant,
            StrategyName::Random => StrategyKind::Random {
                seed: self.strategy_seed.unwrap_or(self.seed),
            },
        }
    }
}

/// Per-field command-line overrides; flag names match the config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub windows: Option<usize>,
    #[arg(long, global = true)]
    pub p_corrupt: Option<f64>,
    #[arg(long, global = true)]
    pub p_detect: Option<f64>,
    #[arg(long, global = true)]
    pub tests: Option<usize>,
    #[arg(long, global = true)]
    pub qer_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub min_entries: Option<usize>,
    #[arg(long, global = true)]
    pub length_tolerance: Option<f64>,
    /// Disable the claimed-length check entirely.
    #[arg(long, global = true)]
    pub no_length_check: bool,
    #[arg(long, global = true)]
    pub error_tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub plan: Option<u8>,
    #[arg(long, global = true, value_enum)]
    pub traitor_role: Option<Role>,
    #[arg(long, global = true, value_enum)]
    pub traitor_strategy: Option<StrategyName>,
    #[arg(long, global = true)]
    pub strategy_flip: Option<bool>,
    #[arg(long, global = true)]
    pub strategy_seed: Option<u64>,
    #[arg(long, global = true)]
    pub per_party_subset: Option<usize>,
    #[arg(long, global = true)]
    pub allow_outside_model: bool,
    #[arg(long, global = true)]
    pub transcript_out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub stats_out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lists_out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut Config) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(value) = self.$field.clone() {
                    config.$field = Some(value);
                }
            };
            ($field:ident, direct) => {
                if let Some(value) = self.$field.clone() {
                    config.$field = value;
                }
            };
        }
        take!(seed, direct);
        take!(windows, direct);
        take!(p_corrupt, direct);
        take!(p_detect, direct);
        take!(tests);
        take!(qer_threshold, direct);
        take!(min_entries, direct);
        take!(length_tolerance);
        if self.no_length_check {
            config.length_tolerance = None;
        }
        take!(error_tolerance, direct);
        take!(plan, direct);
        take!(traitor_role);
        take!(traitor_strategy);
        take!(strategy_flip, direct);
        take!(strategy_seed);
        take!(per_party_subset);
        if self.allow_outside_model {
            config.allow_outside_model = true;
        }
        take!(transcript_out);
        take!(stats_out);
        take!(lists_out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let mut config = Config::default();
        config.seed = 99;
        config.traitor_role = Some(Role::B);
        config.traitor_strategy = Some(StrategyName::ForgingLieutenant);
        config.length_tolerance = None;
        let parsed: Config = serde_json::from_str(&config.render()).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn defaults_build_a_valid_session_config() {
        let session = Config::default().session_config().unwrap();
        assert_eq!(session.windows, 48_184);
        assert_eq!(session.plan, Plan::One);
        assert!(session.traitors.is_empty());
    }

    #[test]
    fn field_errors_name_the_field() {
        let mut config = Config::default();
        config.p_corrupt = 1.5;
        let err = config.session_config().unwrap_err().to_string();
        assert!(err.contains("p_corrupt"), "message: {err}");
        let mut config = Config::default();
        config.plan = 7;
        let err = config.session_config().unwrap_err().to_string();
        assert!(err.contains("plan"), "message: {err}");
        let mut config = Config::default();
        config.traitor_role = Some(Role::B);
        let err = config.session_config().unwrap_err().to_string();
        assert!(err.contains("traitor_strategy"), "message: {err}");
    }

    #[test]
    fn overrides_replace_only_given_fields() {
        let mut config = Config::default();
        let overrides = Overrides {
            seed: Some(5),
            p_corrupt: Some(0.0),
            no_length_check: true,
            ..Overrides::default()
        };
        overrides.apply(&mut config);
        assert_eq!(config.seed, 5);
        assert_eq!(config.p_corrupt, 0.0);
        assert_eq!(config.length_tolerance, None);
        assert_eq!(config.windows, 48_184);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<Config>(r#"{"sede": 3}"#).unwrap_err();
        assert!(err.to_string().contains("sede"));
    }
}
