use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Transport mode label.
///
/// The first five (still, on_foot, bicycle, vehicle, unknown) are what the
/// on-device recognizer reports; bus, tram, train and metro are produced by
/// refinement heuristics on top of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Still,
    OnFoot,
    Bicycle,
    Vehicle,
    Bus,
    Tram,
    Train,
    Metro,
    Unknown,
}

impl ActivityClass {
    pub const ALL: [ActivityClass; 9] = [
        ActivityClass::Still,
        ActivityClass::OnFoot,
        ActivityClass::Bicycle,
        ActivityClass::Vehicle,
        ActivityClass::Bus,
        ActivityClass::Tram,
        ActivityClass::Train,
        ActivityClass::Metro,
        ActivityClass::Unknown,
    ];

    /// Classes the recognizer itself can emit, in tie-break order.
    pub const BASE: [ActivityClass; 5] = [
        ActivityClass::Still,
        ActivityClass::OnFoot,
        ActivityClass::Bicycle,
        ActivityClass::Vehicle,
        ActivityClass::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityClass::Still => "still",
            ActivityClass::OnFoot => "on_foot",
            ActivityClass::Bicycle => "bicycle",
            ActivityClass::Vehicle => "vehicle",
            ActivityClass::Bus => "bus",
            ActivityClass::Tram => "tram",
            ActivityClass::Train => "train",
            ActivityClass::Metro => "metro",
            ActivityClass::Unknown => "unknown",
        }
    }

    pub fn is_base(self) -> bool {
        Self::BASE.contains(&self)
    }

    /// Motorised modes, including the refined public-transport ones.
    pub fn is_motorized(self) -> bool {
        matches!(
            self,
            ActivityClass::Vehicle
                | ActivityClass::Bus
                | ActivityClass::Tram
                | ActivityClass::Train
                | ActivityClass::Metro
        )
    }
}

impl fmt::Display for ActivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivityClass::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ModelError::UnknownActivity(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in ActivityClass::ALL {
            assert_eq!(a.as_str().parse::<ActivityClass>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.as_str()));
        }
    }

    #[test]
    fn unknown_name_is_reported() {
        let err = "skateboard".parse::<ActivityClass>().unwrap_err();
        assert!(err.to_string().contains("skateboard"));
    }
}
