use serde::{Deserialize, Serialize};

use super::ActivityError;
use crate::model::ActivityClass;

/// Seconds between two consultations of the recognizer.
pub const SAMPLE_PERIOD_S: u32 = 20;
/// Length of one majority-vote window.
pub const WINDOW_S: u32 = 120;

/// The recognizer's most probable activity at one consultation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivitySample {
    activity: ActivityClass,
    confidence: u8,
    at: i64,
}

impl ActivitySample {
    /// `at` is in seconds on any monotonic scale.
    pub fn new(activity: ActivityClass, confidence: u8, at: i64) -> Result<Self, ActivityError> {
        if !activity.is_base() {
            return Err(ActivityError::NotBase(activity));
        }
        if confidence > 100 {
            return Err(ActivityError::InvalidConfidence(confidence));
        }
        Ok(ActivitySample { activity, confidence, at })
    }

    pub fn activity(&self) -> ActivityClass {
        self.activity
    }

    pub fn confidence(&self) -> u8 {
        self.confidence
    }

    pub fn at(&self) -> i64 {
        self.at
    }
}

fn tie_rank(a: ActivityClass) -> usize {
    ActivityClass::BASE
        .iter()
        .position(|b| *b == a)
        .unwrap_or(ActivityClass::BASE.len())
}

/// Most repeated activity of a window.
///
/// Ties go to the larger summed confidence, then to the class that comes
/// first in still, on_foot, bicycle, vehicle, unknown. An empty window is
/// `unknown`.
pub fn classify_window(samples: &[ActivitySample]) -> ActivityClass {
    let mut tally: Vec<(ActivityClass, usize, u32)> = Vec::new();
    for s in samples {
        match tally.iter_mut().find(|(a, _, _)| *a == s.activity) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 += u32::from(s.confidence);
            }
            None => tally.push((s.activity, 1, u32::from(s.confidence))),
        }
    }
    tally
        .into_iter()
        .max_by(|x, y| {
            (x.1, x.2)
                .cmp(&(y.1, y.2))
                .then_with(|| tie_rank(y.0).cmp(&tie_rank(x.0)))
        })
        .map_or(ActivityClass::Unknown, |(a, _, _)| a)
}
