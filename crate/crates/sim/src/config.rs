//! Experiment configuration: one TOML file with an `[experiment]` section
//! describing the sweep and one section per parameter group. Every key is
//! optional and falls back to the reference deployment.
//!
//! ```toml
//! [experiment]
//! mode = "algorithms"
//! algorithms = ["optimal", "sequential-rb", "fixed-power"]
//! sweep = "eta_hue_db"
//! values = [0.0, 10.0, 20.0]
//! snapshots = 1000
//! seed = 1
//!
//! [system]
//! n_low = 3
//! rrh_p_max_dbm = 20.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hcran_core::baselines::scenario::{PicoConfig, ScenarioKind};
use hcran_core::baselines::Algorithm;
use hcran_core::optimizer::{InnerConfig, OuterConfig};
use hcran_core::system::SystemConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config{}: {source}", origin(path))]
    Parse {
        path: Option<PathBuf>,
        source: toml::de::Error,
    },
    #[error("invalid config{}: key `{key}`: {reason}", origin(path))]
    Invalid {
        path: Option<PathBuf>,
        key: String,
        reason: String,
    },
}

fn origin(path: &Option<PathBuf>) -> String {
    path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default()
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: None,
            key: key.to_owned(),
            reason: reason.into(),
        }
    }

    fn at(self, file: &Path) -> Self {
        match self {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: Some(file.to_owned()),
                source,
            },
            ConfigError::Invalid { key, reason, .. } => ConfigError::Invalid {
                path: Some(file.to_owned()),
                key,
                reason,
            },
            other => other,
        }
    }
}

/// What each snapshot is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Resource allocation algorithms on the reference RRH.
    Algorithms,
    /// Network architectures.
    Scenarios,
}

/// Parameter varied across the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Number of low-QoS UEs.
    #[serde(rename = "M")]
    LowQosUes,
    #[serde(rename = "eta_hue_db")]
    EtaHueDb,
    #[serde(rename = "p_max_r_dbm")]
    RrhPMaxDbm,
    #[serde(rename = "omega1_ratio")]
    Omega1Ratio,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::LowQosUes => "M",
            SweepVariable::EtaHueDb => "eta_hue_db",
            SweepVariable::RrhPMaxDbm => "p_max_r_dbm",
            SweepVariable::Omega1Ratio => "omega1_ratio",
        }
    }

    /// Copy of `base` with this variable set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig, ConfigError> {
        let mut sys = base.clone();
        match self {
            SweepVariable::LowQosUes => {
                if !(value >= 0.0) || value.fract() != 0.0 {
                    return Err(ConfigError::invalid(
                        "experiment.values",
                        format!("M must be a nonnegative integer, got {value}"),
                    ));
                }
                sys.n_low = value as usize;
            }
            SweepVariable::EtaHueDb => sys.eta_hue_db = value,
            SweepVariable::RrhPMaxDbm => sys.rrh_p_max_dbm = value,
            SweepVariable::Omega1Ratio => sys.omega1_ratio = value,
        }
        Ok(sys)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    pub scenarios: Vec<ScenarioKind>,
    pub sweep: SweepVariable,
    pub values: Vec<f64>,
    pub snapshots: u64,
    /// Master seed of the channel draws.
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            mode: Mode::Algorithms,
            algorithms: Algorithm::ALL.to_vec(),
            scenarios: ScenarioKind::ALL.to_vec(),
            sweep: SweepVariable::EtaHueDb,
            values: vec![0.0],
            snapshots: 1000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub system: SystemConfig,
    pub pico: PicoConfig,
    pub outer: OuterConfig,
    pub inner: InnerConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        text.parse::<Self>().map_err(|e| e.at(path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("every config field has a TOML representation")
    }

    /// Checks every invariant the runner relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ex = &self.experiment;
        if ex.values.is_empty() {
            return Err(ConfigError::invalid("experiment.values", "at least one sweep value is required"));
        }
        if ex.values.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::invalid("experiment.values", "sweep values must be finite"));
        }
        if ex.snapshots == 0 {
            return Err(ConfigError::invalid("experiment.snapshots", "must be at least 1"));
        }
        if ex.seed > i64::MAX as u64 {
            return Err(ConfigError::invalid("experiment.seed", "must fit in a signed 64-bit integer"));
        }
        match ex.mode {
            Mode::Algorithms if ex.algorithms.is_empty() => {
                return Err(ConfigError::invalid("experiment.algorithms", "at least one algorithm is required"));
            }
            Mode::Scenarios if ex.scenarios.is_empty() => {
                return Err(ConfigError::invalid("experiment.scenarios", "at least one scenario is required"));
            }
            _ => {}
        }
        self.outer
            .validate()
            .map_err(|e| ConfigError::invalid("outer", e.to_string()))?;
        self.inner
            .validate()
            .map_err(|e| ConfigError::invalid("inner", e.to_string()))?;
        self.pico
            .power_model()
            .map_err(|e| ConfigError::invalid("pico", e.to_string()))?;
        for &v in &ex.values {
            let sys = ex.sweep.apply(&self.system, v)?;
            sys.deployment()
                .map_err(|e| ConfigError::invalid("system", format!("at {} = {v}: {e}", ex.sweep)))?;
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|source| ConfigError::Parse { path: None, source })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let cfg: ExperimentConfig = "".parse().unwrap();
        assert_eq!(cfg.system, SystemConfig::default());
        assert_eq!(cfg.system.k_total, 25);
        assert_eq!(cfg.system.n_high, 10);
        assert_eq!(cfg.system.hpn_p_max_dbm, 43.0);
        assert_eq!(cfg.system.eta_r_bps, 128e3);
        assert_eq!(cfg.experiment.snapshots, 1000);
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"
            [experiment]
            mode = "scenarios"
            scenarios = ["2-tier-hcran", "1-tier-hpn"]
            sweep = "M"
            values = [1.0, 2.0, 3.0]
            snapshots = 7
            seed = 42

            [system]
            rrh_p_max_dbm = 23.5
            omega1_ratio = 0.4

            [inner]
            l_max = 50
        "#;
        let a: ExperimentConfig = text.parse().unwrap();
        let b: ExperimentConfig = a.to_toml().parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(b.experiment.scenarios, [ScenarioKind::TwoTierHcran, ScenarioKind::OneTierHpn]);
        assert_eq!(b.inner.l_max, 50);
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = "[experiment]\nsnapshots = 3\nseed = = 4\n".parse::<ExperimentConfig>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = "[system]\nk_totl = 3\n".parse::<ExperimentConfig>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("k_totl") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn wrong_type_is_reported_with_key() {
        let err = "[experiment]\nsnapshots = \"many\"\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(err.to_string().contains("snapshots"), "{err}");
    }

    #[test]
    fn invalid_values_name_their_key() {
        for (text, key) in [
            ("[experiment]\nsnapshots = 0\n", "experiment.snapshots"),
            ("[experiment]\nvalues = []\n", "experiment.values"),
            ("[experiment]\nsweep = \"M\"\nvalues = [1.5]\n", "experiment.values"),
            ("[outer]\ni_max = 0\n", "outer"),
        ] {
            match text.parse::<ExperimentConfig>() {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_names_path() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/exp.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/exp.toml"));
    }

    #[test]
    fn sweep_sets_its_field() {
        let base = SystemConfig::default();
        assert_eq!(SweepVariable::LowQosUes.apply(&base, 7.0).unwrap().n_low, 7);
        assert_eq!(SweepVariable::RrhPMaxDbm.apply(&base, 30.0).unwrap().rrh_p_max_dbm, 30.0);
        assert_eq!(SweepVariable::Omega1Ratio.apply(&base, 0.2).unwrap().omega1_ratio, 0.2);
        assert_eq!(SweepVariable::EtaHueDb.apply(&base, 12.0).unwrap().eta_hue_db, 12.0);
    }
}
