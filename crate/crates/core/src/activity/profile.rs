use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ActivityError;

/// Location-request priority modes of the fused location provider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationPriority {
    HighAccuracy,
    BalancedPowerAccuracy,
    LowPower,
    NoPower,
}

impl LocationPriority {
    pub const ALL: [LocationPriority; 4] = [
        LocationPriority::HighAccuracy,
        LocationPriority::BalancedPowerAccuracy,
        LocationPriority::LowPower,
        LocationPriority::NoPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LocationPriority::HighAccuracy => "high_accuracy",
            LocationPriority::BalancedPowerAccuracy => "balanced_power_accuracy",
            LocationPriority::LowPower => "low_power",
            LocationPriority::NoPower => "no_power",
        }
    }
}

impl FromStr for LocationPriority {
    type Err = ActivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LocationPriority::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ActivityError::UnknownPriority(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryDrain {
    PercentPerHour(f64),
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accuracy {
    Meters(f64),
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationProfile {
    pub priority: LocationPriority,
    /// Update interval; `None` where the mode has no fixed cadence.
    pub interval_s: Option<u32>,
    pub battery_drain: BatteryDrain,
    pub accuracy: Accuracy,
}

pub fn location_profile(priority: LocationPriority) -> LocationProfile {
    let (interval_s, battery_drain, accuracy) = match priority {
        LocationPriority::HighAccuracy => {
            (Some(5), BatteryDrain::PercentPerHour(7.25), Accuracy::Meters(10.0))
        }
        LocationPriority::BalancedPowerAccuracy => {
            (Some(20), BatteryDrain::PercentPerHour(0.6), Accuracy::Meters(100.0))
        }
        // city-level, 10 km
        LocationPriority::LowPower => (None, BatteryDrain::Small, Accuracy::Meters(10_000.0)),
        LocationPriority::NoPower => (None, BatteryDrain::Small, Accuracy::Variable),
    };
    LocationProfile { priority, interval_s, battery_drain, accuracy }
}
