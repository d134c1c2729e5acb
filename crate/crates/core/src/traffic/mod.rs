//! Barcelona traffic-state feed, road section geometry, DGT incidences and
//! the colored map layer built from them.

mod feed;
mod incidences;
mod layer;

use thiserror::Error;

pub use feed::{
    parse_section_coords, parse_sections_csv, parse_state_feed, render_section_coords, RoadSection,
    SectionState, SectionTable, StateFeed,
};
pub use incidences::{
    decode_description, fetch_incidences, parse_incidences, FixtureIncidenceSource, Incidence,
    IncidenceSource, ParsedIncidences, DGT_PARAMS, DGT_URL, ICON_BASE_URL,
};
pub use layer::{join_traffic_map, state_color, SectionLine, TrafficLayer, STATE_COLORS};

/// Feed refresh period of the upstream sources.
pub const REFRESH_INTERVAL_S: u64 = 300;

/// Default upstream for the per-section state feed.
pub const STATE_FEED_URL: &str = "http://www.bcn.cat/transit/dades/dadestrams.dat";

/// Traffic condition codes, 0 (no data) through 6 (closed).
pub const STATE_NAMES: [&str; 7] =
    ["no data", "very fluid", "fluid", "dense", "very dense", "congested", "closed"];

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("state {0} out of range 0-6")]
    StateOutOfRange(i64),
    #[error("bad coordinate fragment `{0}`")]
    BadFragment(String),
    #[error("section {id} has {len} points, need at least 2")]
    ShortPath { id: u32, len: usize },
}

/// A non-fatal problem found while parsing a feed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedWarning {
    /// 1-based line (or CSV record) number.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for FeedWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Failure of a live or fixture source.
#[derive(Debug, Error)]
#[error("source unavailable: {0}")]
pub struct SourceError(pub String);
