use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Wi-Fi power value meaning "no Wi-Fi signal available".
pub const WIFI_UNAVAILABLE_DBM: i32 = -200;

/// GSM and Wi-Fi signal power (dBm) measured when a fix was taken.
///
/// Rendered as `<gsm>V<wifi>`, e.g. `-105V-55`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SignalPower {
    gsm_dbm: i32,
    wifi_dbm: i32,
}

impl SignalPower {
    pub fn new(gsm_dbm: i32, wifi_dbm: i32) -> Result<Self, ModelError> {
        if gsm_dbm <= 0 && (WIFI_UNAVAILABLE_DBM..=0).contains(&wifi_dbm) {
            Ok(SignalPower { gsm_dbm, wifi_dbm })
        } else {
            Err(ModelError::InvalidPower(format!("{gsm_dbm}V{wifi_dbm}")))
        }
    }

    pub fn gsm_dbm(&self) -> i32 {
        self.gsm_dbm
    }

    /// Raw Wi-Fi value, including the -200 sentinel.
    pub fn wifi_dbm(&self) -> i32 {
        self.wifi_dbm
    }

    /// Wi-Fi power, or `None` when the sentinel says no signal.
    pub fn wifi(&self) -> Option<i32> {
        (self.wifi_dbm != WIFI_UNAVAILABLE_DBM).then_some(self.wifi_dbm)
    }
}

impl fmt::Display for SignalPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}V{}", self.gsm_dbm, self.wifi_dbm)
    }
}

impl FromStr for SignalPower {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_power_string(s)
    }
}

impl TryFrom<String> for SignalPower {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_power_string(&s)
    }
}

impl From<SignalPower> for String {
    fn from(p: SignalPower) -> Self {
        p.to_string()
    }
}

pub fn parse_power_string(text: &str) -> Result<SignalPower, ModelError> {
    let bad = || ModelError::InvalidPower(text.to_string());
    let (gsm, wifi) = text.split_once('V').ok_or_else(bad)?;
    let gsm = parse_dbm(gsm).ok_or_else(bad)?;
    let wifi = parse_dbm(wifi).ok_or_else(bad)?;
    SignalPower::new(gsm, wifi).map_err(|_| bad())
}

// Plain optional sign plus digits; i32::from_str also accepts a leading '+'.
fn parse_dbm(s: &str) -> Option<i32> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}
