use std::path::{Path, PathBuf};

use serde::Deserialize;

pub const PORT_ENV: &str = "THEMISTO_PORT";
pub const DEFAULT_PORT: u16 = 8642;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Trained model file. Without one the service answers without the
    /// deep-learning candidate.
    pub model_path: Option<PathBuf>,
    /// Knowledge base in JSONL form; the bundled seed KB when absent.
    pub kb_path: Option<PathBuf>,
    pub notebook_root: PathBuf,
    pub port: u16,
    pub host: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            model_path: None,
            kb_path: None,
            notebook_root: PathBuf::from("."),
            port: DEFAULT_PORT,
            host: "127.0.0.1".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{PORT_ENV}={value} is not a port number")]
    BadPort { value: String },
}

impl ServiceConfig {
    /// Parse a `.json` or `.toml` config file. Relative paths inside it are
    /// taken relative to the current directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let invalid = |message: String| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        };
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| invalid(e.to_string()))
        }
    }

    pub fn apply_env(mut self, port: Option<String>) -> Result<Self, ConfigError> {
        if let Some(value) = port {
            self.port = value.trim().parse().map_err(|_| ConfigError::BadPort { value })?;
        }
        Ok(self)
    }

    pub fn with_env(self) -> Result<Self, ConfigError> {
        self.apply_env(std::env::var(PORT_ENV).ok())
    }
}
