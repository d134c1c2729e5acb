//! Server configuration: TOML file, then `MOBILITY_*` environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use mobility_core::crypto::{DEFAULT_KEY_BITS, PRIVATE_KEY_FILE, PUBLIC_KEY_FILE};
use mobility_core::notify::DEFAULT_HOMEPAGE;
use mobility_core::traffic::REFRESH_INTERVAL_S;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid value for {var}: `{value}`")]
    Env { var: &'static str, value: String },
}

/// Where one traffic input comes from. Absent means disabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Url(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// `id#timestamp#current#predicted` feed.
    pub state_feed: Option<Source>,
    /// `Tram;Descripció;Coordenades` geometry CSV.
    pub sections: Option<Source>,
    /// Incidence JSON; a URL is queried with the DGT parameter set.
    pub incidences: Option<Source>,
    pub refresh_s: u64,
    /// Per-request timeout for live sources.
    pub timeout_s: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { state_feed: None, sections: None, incidences: None, refresh_s: REFRESH_INTERVAL_S, timeout_s: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub db_path: PathBuf,
    pub private_key: PathBuf,
    pub public_key: PathBuf,
    /// Size used when no key exists yet.
    pub key_bits: usize,
    /// Click-through URL of pushed messages.
    pub homepage: String,
    pub traffic: TrafficConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            db_path: PathBuf::from("data/mobility.db"),
            private_key: Path::new("data/certs").join(PRIVATE_KEY_FILE),
            public_key: Path::new("data/certs").join(PUBLIC_KEY_FILE),
            key_bits: DEFAULT_KEY_BITS,
            homepage: DEFAULT_HOMEPAGE.into(),
            traffic: TrafficConfig::default(),
        }
    }
}

impl ServerConfig {
    /// Everything under one directory; handy for tests and local runs.
    pub fn in_dir(dir: &Path) -> Self {
        ServerConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 0)),
            db_path: dir.join("mobility.db"),
            private_key: dir.join(PRIVATE_KEY_FILE),
            public_key: dir.join(PUBLIC_KEY_FILE),
            ..ServerConfig::default()
        }
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
    }

    /// Reads `path` if given (defaults otherwise) and applies the process
    /// environment on top.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
                Self::from_toml(&text, p)?
            }
            None => ServerConfig::default(),
        };
        config.apply_env(std::env::vars())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (key, value) in vars {
            let bad = |var| ConfigError::Env { var, value: value.clone() };
            match key.as_str() {
                "MOBILITY_LISTEN" => self.listen = value.parse().map_err(|_| bad("MOBILITY_LISTEN"))?,
                "MOBILITY_DB" => self.db_path = PathBuf::from(&value),
                "MOBILITY_PRIVATE_KEY" => self.private_key = PathBuf::from(&value),
                "MOBILITY_PUBLIC_KEY" => self.public_key = PathBuf::from(&value),
                "MOBILITY_KEY_BITS" => self.key_bits = value.parse().map_err(|_| bad("MOBILITY_KEY_BITS"))?,
                "MOBILITY_HOMEPAGE" => self.homepage = value.clone(),
                _ => {}
            }
        }
        Ok(())
    }
}
