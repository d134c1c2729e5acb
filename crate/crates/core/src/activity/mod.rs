//! Activity classification on top of the recognizer's periodic samples,
//! transport-mode refinement, silence mode and location-request profiles.

mod classify;
mod profile;
mod refine;
mod silence;

pub use classify::{classify_window, ActivitySample, SAMPLE_PERIOD_S, WINDOW_S};
pub use profile::{location_profile, Accuracy, BatteryDrain, LocationPriority, LocationProfile};
pub use refine::{
    refine_activity, OracleError, PoiIndex, RefineConfig, RouteOracle, StopKind, TableRouteOracle,
};
pub use silence::{silence_transition, RingerMode, NOTHING_STORED};

use thiserror::Error;

use crate::model::ActivityClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActivityError {
    #[error("confidence {0} outside 0..=100")]
    InvalidConfidence(u8),
    #[error("`{0}` is not reported by the recognizer")]
    NotBase(ActivityClass),
    #[error("unknown stop kind `{0}`")]
    UnknownStopKind(String),
    #[error("unknown location priority `{0}`")]
    UnknownPriority(String),
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
}

/// Reads simple comma-separated lines, skipping blanks, `#` comments and a
/// header whose first field is `header`.
fn read_records(text: &str, header: &str) -> Result<Vec<(u64, Vec<String>)>, ActivityError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| ActivityError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) || (out.is_empty() && rec.get(0) == Some(header)) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}
