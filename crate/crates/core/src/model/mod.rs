//! Domain types for location samples and activity segments.
//!
//! A segment is a run of consecutive location samples that share one
//! detected activity. The on-device segment files (JSON) are read and
//! written by [`format`]; their metrics (distance, duration, mean speed)
//! are derived by [`segment_metrics`].

mod activity;
pub mod format;
mod geo;
mod power;
mod segment;

pub use activity::ActivityClass;
pub use format::{
    parse_segment, parse_segments, serialize_segment, ParsedSegment, StoredFields, SEGMENT_KEYS,
};
pub use geo::{haversine_distance, GeoPoint, EARTH_RADIUS_M};
pub use power::{parse_power_string, SignalPower, WIFI_UNAVAILABLE_DBM};
pub use segment::{
    elapsed_seconds, format_clock, parse_clock, segment_metrics, LocationSample, Segment,
    SegmentMetrics, SECONDS_PER_DAY,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("invalid time of day `{0}` (expected HH:MM:SS)")]
    InvalidTime(String),
    #[error("invalid power string `{0}` (expected <gsm>V<wifi>)")]
    InvalidPower(String),
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("insufficient samples")]
    InsufficientSamples,
    #[error("sample times out of order at index {0}")]
    TimesOutOfOrder(usize),
    #[error("stride mismatch: location array of length {len} is not a multiple of {stride}")]
    StrideMismatch { len: usize, stride: usize },
    #[error("sample {0} has no signal power")]
    MissingPower(usize),
    #[error("malformed segment: {0}")]
    Malformed(String),
}
