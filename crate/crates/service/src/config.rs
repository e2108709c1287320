//! Service configuration: a TOML file, then environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "GUIDANCE_CONFIG";

/// Overrides applied after the file, as `(variable, key)`.
pub const ENV_OVERRIDES: [(&str, &str); 6] = [
    ("GUIDANCE_DATA_DIR", "data_dir"),
    ("GUIDANCE_LISTEN", "listen"),
    ("GUIDANCE_SALT", "salt"),
    ("GUIDANCE_P_TREAT", "p_treat"),
    ("GUIDANCE_ARMED", "guidance_armed"),
    ("GUIDANCE_DEMO_MODE", "demo_mode"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    /// Holds `events.jsonl` and `rulesets/`.
    pub data_dir: PathBuf,
    pub listen: String,
    pub salt: String,
    pub p_treat: f64,
    /// Kill switch: when false every user gets an empty result.
    pub guidance_armed: bool,
    /// Allows the `?arm=` override used by the composer demo.
    pub demo_mode: bool,
    pub follow_up_days: u32,
    /// Inactivity after which the next evaluation opens a new draft session.
    pub session_gap_minutes: u32,
    /// `fsync` each append in addition to flushing it to the OS.
    pub sync_writes: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            listen: "127.0.0.1:8080".into(),
            salt: "post-guidance".into(),
            p_treat: 0.5,
            guidance_armed: true,
            demo_mode: false,
            follow_up_days: 28,
            session_gap_minutes: 30,
            sync_writes: false,
        }
    }
}

fn parse_bool(var: &str, value: &str) -> Result<bool, ServiceError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(ServiceError::Config(format!("{var}: expected a boolean, got `{value}`"))),
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies the variables in [`ENV_OVERRIDES`] as read by `lookup`.
    pub fn apply_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        for (var, key) in ENV_OVERRIDES {
            let Some(value) = lookup(var) else { continue };
            match key {
                "data_dir" => self.data_dir = PathBuf::from(value),
                "listen" => self.listen = value,
                "salt" => self.salt = value,
                "p_treat" => {
                    self.p_treat = value
                        .trim()
                        .parse()
                        .map_err(|_| ServiceError::Config(format!("{var}: expected a number, got `{value}`")))?
                }
                "guidance_armed" => self.guidance_armed = parse_bool(var, &value)?,
                "demo_mode" => self.demo_mode = parse_bool(var, &value)?,
                _ => unreachable!("every override names a field"),
            }
        }
        Ok(())
    }

    /// The file at `path` (or at `$GUIDANCE_CONFIG`, or defaults), then the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut config = match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::from_file(&p)?,
            None => Self::default(),
        };
        config.apply_overrides(|var| std::env::var(var).ok())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if !(0.0..=1.0).contains(&self.p_treat) {
            return Err(ServiceError::Config(format!("p_treat must lie in [0, 1], got {}", self.p_treat)));
        }
        if self.follow_up_days == 0 {
            return Err(ServiceError::Config("follow_up_days must be positive".into()));
        }
        if self.session_gap_minutes == 0 {
            return Err(ServiceError::Config("session_gap_minutes must be positive".into()));
        }
        Ok(())
    }

    pub fn events_path(&self) -> PathBuf {
        self.data_dir.join("events.jsonl")
    }

    pub fn rulesets_dir(&self) -> PathBuf {
        self.data_dir.join("rulesets")
    }
}
