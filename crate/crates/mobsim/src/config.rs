//! Client configuration file (TOML).

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveTime};
use mobility_core::activity::{location_profile, LocationPriority, PoiIndex, TableRouteOracle};
use mobility_core::model::GeoPoint;
use serde::Deserialize;
use thiserror::Error;

use crate::trace::{Leg, TraceSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Optional user details sent, encrypted, at registration.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: Option<String>,
    pub surname: Option<String>,
    pub birthdate: Option<NaiveDate>,
    pub gender: Option<String>,
    pub mail: Option<String>,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClientConfig {
    pub server_url: String,
    pub prefs_path: PathBuf,
    pub silence_feature: bool,
    pub app_version: u32,
    pub profile: Option<Profile>,
    pub location_priority: LocationPriority,
    pub poi_file: Option<PathBuf>,
    pub routes_file: Option<PathBuf>,
    pub seed: u64,
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub start_lat: f64,
    pub start_lon: f64,
    /// Replaces the default walk/drive/walk scenario.
    pub legs: Option<Vec<Leg>>,
    pub timeout_s: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        let scenario = TraceSpec::default_scenario(0, 20);
        ClientConfig {
            server_url: "http://127.0.0.1:8080".into(),
            prefs_path: PathBuf::from("mobsim-prefs.xml"),
            silence_feature: true,
            app_version: 1,
            profile: None,
            location_priority: LocationPriority::BalancedPowerAccuracy,
            poi_file: None,
            routes_file: None,
            seed: 0,
            date: scenario.date,
            start_time: scenario.start_time,
            start_lat: scenario.start.lat(),
            start_lon: scenario.start.lon(),
            legs: None,
            timeout_s: 30,
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

impl ClientConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::from_toml(&read(p)?),
            None => Ok(Self::default()),
        }
    }

    /// Sampling interval of the configured location priority.
    pub fn sample_interval_s(&self) -> Result<u32, ConfigError> {
        location_profile(self.location_priority).interval_s.ok_or_else(|| {
            ConfigError::Invalid(format!(
                "location priority `{}` has no fixed update interval",
                self.location_priority.as_str()
            ))
        })
    }

    pub fn trace_spec(&self) -> Result<TraceSpec, ConfigError> {
        let interval = self.sample_interval_s()?;
        let mut spec = TraceSpec::default_scenario(self.seed, interval);
        spec.start = GeoPoint::new(self.start_lat, self.start_lon).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        spec.date = self.date;
        spec.start_time = self.start_time;
        if let Some(legs) = &self.legs {
            spec.legs = legs.clone();
        }
        Ok(spec)
    }

    pub fn poi_index(&self) -> Result<PoiIndex, ConfigError> {
        match &self.poi_file {
            Some(p) => PoiIndex::from_csv(&read(p)?).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display()))),
            None => Ok(PoiIndex::default()),
        }
    }

    pub fn route_oracle(&self) -> Result<TableRouteOracle, ConfigError> {
        match &self.routes_file {
            Some(p) => {
                TableRouteOracle::from_csv(&read(p)?).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))
            }
            None => Ok(TableRouteOracle::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mobility_core::model::ActivityClass;

    #[test]
    fn full_file() {
        let c = ClientConfig::from_toml(
            r#"
server_url = "http://10.0.0.2:8080"
prefs_path = "/tmp/p.xml"
silence_feature = false
app_version = 3
location_priority = "high_accuracy"
seed = 42
date = "2015-07-01"
start_time = "23:50:00"

[profile]
name = "Ana"
birthdate = "1990-04-02"
weight = 61.5

[[legs]]
activity = "bicycle"
duration_s = 600

[[legs]]
activity = "on_foot"
duration_s = 142
speed_kmh = 1.26
"#,
        )
        .unwrap();
        assert_eq!(c.sample_interval_s().unwrap(), 5);
        let spec = c.trace_spec().unwrap();
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.legs[1], Leg::at_speed(ActivityClass::OnFoot, 142, 1.26));
        assert_eq!(c.profile.unwrap().birthdate, NaiveDate::from_ymd_opt(1990, 4, 2));
    }

    #[test]
    fn defaults_and_rejections() {
        let c = ClientConfig::from_toml("").unwrap();
        assert_eq!(c, ClientConfig::default());
        assert_eq!(c.sample_interval_s().unwrap(), 20);
        assert!(ClientConfig::from_toml("sever_url = \"x\"").is_err());
        let low = ClientConfig::from_toml("location_priority = \"low_power\"").unwrap();
        assert!(low.trace_spec().is_err());
        let off = ClientConfig { start_lat: 91.0, ..ClientConfig::default() };
        assert!(off.trace_spec().is_err());
    }
}
