use serde::{Deserialize, Serialize};

use crate::model::ActivityClass;

/// Stored-previous code meaning no ringer mode has been saved.
pub const NOTHING_STORED: i32 = 5;

/// Ringer mode with the platform's integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingerMode {
    Silent = 0,
    Vibrate = 1,
    Normal = 2,
}

impl RingerMode {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_code(code: i32) -> Option<Self> {
        match code {
            0 => Some(RingerMode::Silent),
            1 => Some(RingerMode::Vibrate),
            2 => Some(RingerMode::Normal),
            _ => None,
        }
    }

    /// Code for the stored-previous preference; `None` is [`NOTHING_STORED`].
    pub fn stored_code(stored: Option<RingerMode>) -> i32 {
        stored.map_or(NOTHING_STORED, RingerMode::code)
    }

    /// Decodes a stored-previous preference. Codes other than 0, 1, 2 and
    /// [`NOTHING_STORED`] are rejected.
    pub fn from_stored_code(code: i32) -> Option<Option<RingerMode>> {
        if code == NOTHING_STORED {
            Some(None)
        } else {
            RingerMode::from_code(code).map(Some)
        }
    }
}

/// One step of silence mode.
///
/// While the feature is on, a vehicle detection saves the current mode (if
/// nothing is saved yet) and silences the phone; any other detection puts
/// back the saved mode, if there is one, and clears the slot.
pub fn silence_transition(
    current: RingerMode,
    stored_previous: Option<RingerMode>,
    detected: ActivityClass,
    feature_on: bool,
) -> (RingerMode, Option<RingerMode>) {
    if !feature_on {
        return (current, stored_previous);
    }
    if detected == ActivityClass::Vehicle {
        (RingerMode::Silent, stored_previous.or(Some(current)))
    } else {
        (stored_previous.unwrap_or(current), None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivityClass::*;
    use RingerMode::*;

    #[test]
    fn vehicle_saves_and_silences() {
        assert_eq!(silence_transition(Normal, None, Vehicle, true), (Silent, Some(Normal)));
    }

    #[test]
    fn leaving_vehicle_restores() {
        assert_eq!(silence_transition(Silent, Some(Normal), OnFoot, true), (Normal, None));
    }

    #[test]
    fn nothing_saved_is_a_no_op() {
        assert_eq!(silence_transition(Vibrate, None, Still, true), (Vibrate, None));
    }

    #[test]
    fn feature_off_never_changes() {
        assert_eq!(silence_transition(Normal, None, Vehicle, false), (Normal, None));
        assert_eq!(silence_transition(Silent, Some(Normal), Still, false), (Silent, Some(Normal)));
    }

    #[test]
    fn refined_transit_is_not_vehicle() {
        assert_eq!(silence_transition(Normal, None, Bus, true), (Normal, None));
    }

    #[test]
    fn stored_codes() {
        assert_eq!(RingerMode::stored_code(None), 5);
        assert_eq!(RingerMode::from_stored_code(5), Some(None));
        assert_eq!(RingerMode::from_stored_code(1), Some(Some(Vibrate)));
        assert_eq!(RingerMode::from_stored_code(3), None);
    }
}
