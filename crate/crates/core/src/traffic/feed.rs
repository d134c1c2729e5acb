use chrono::NaiveDateTime;
use serde::Serialize;

use super::{FeedWarning, TrafficError};
use crate::model::GeoPoint;

const FEED_TIME_FORMAT: &str = "%Y%m%d%H%M%S";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionState {
    pub section_id: u32,
    pub at: NaiveDateTime,
    pub current: u8,
    pub predicted_15min: u8,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateFeed {
    pub states: Vec<SectionState>,
    pub warnings: Vec<FeedWarning>,
}

fn parse_state_line(line: &str) -> Result<SectionState, String> {
    let fields: Vec<&str> = line.split('#').map(str::trim).collect();
    let [id, at, current, predicted] = fields[..] else {
        return Err(format!("expected 4 `#`-separated fields, found {}", fields.len()));
    };
    let section_id = match id.parse::<u32>() {
        Ok(0) | Err(_) => return Err(format!("bad section id `{id}`")),
        Ok(n) => n,
    };
    let at = NaiveDateTime::parse_from_str(at, FEED_TIME_FORMAT)
        .map_err(|_| format!("bad timestamp `{at}`"))?;
    let state = |s: &str| match s.parse::<u8>() {
        Ok(v) if v <= 6 => Ok(v),
        _ => Err(format!("bad state `{s}`")),
    };
    Ok(SectionState { section_id, at, current: state(current)?, predicted_15min: state(predicted)? })
}

/// Parses `id#YYYYMMDDHHMMSS#current#predicted` lines. Never fails: blank
/// lines are skipped and malformed ones become warnings.
pub fn parse_state_feed(text: &str) -> StateFeed {
    let mut feed = StateFeed::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_state_line(line) {
            Ok(s) => feed.states.push(s),
            Err(message) => feed.warnings.push(FeedWarning { line: i + 1, message }),
        }
    }
    feed
}

/// Parses a geometry cell of `lon,lat,0` triples into points. Triples are
/// split on `,0` the way the upstream sheet is consumed, so values below 1
/// in magnitude cannot be represented.
pub fn parse_section_coords(cell: &str) -> Result<Vec<GeoPoint>, TrafficError> {
    let bad = |f: &str| TrafficError::BadFragment(f.to_string());
    let mut out = Vec::new();
    for fragment in cell.split(",0") {
        let fragment = fragment.trim();
        if fragment.is_empty() {
            continue;
        }
        let (lon, lat) = fragment.split_once(',').ok_or_else(|| bad(fragment))?;
        let lon: f64 = lon.trim().parse().map_err(|_| bad(fragment))?;
        let lat: f64 = lat.trim().parse().map_err(|_| bad(fragment))?;
        out.push(GeoPoint::new(lat, lon).map_err(|_| bad(fragment))?);
    }
    Ok(out)
}

/// Inverse of [`parse_section_coords`].
pub fn render_section_coords(path: &[GeoPoint]) -> String {
    path.iter().map(|p| format!("{},{},0", p.lon(), p.lat())).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadSection {
    section_id: u32,
    description: String,
    path: Vec<GeoPoint>,
}

impl RoadSection {
    pub fn new(section_id: u32, description: impl Into<String>, path: Vec<GeoPoint>) -> Result<Self, TrafficError> {
        if path.len() < 2 {
            return Err(TrafficError::ShortPath { id: section_id, len: path.len() });
        }
        Ok(RoadSection { section_id, description: description.into(), path })
    }

    pub fn section_id(&self) -> u32 {
        self.section_id
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn path(&self) -> &[GeoPoint] {
        &self.path
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SectionTable {
    pub sections: Vec<RoadSection>,
    pub warnings: Vec<FeedWarning>,
}

/// Reads the `Tram;Descripció;Coordenades` export. Rows that fail to parse
/// or carry fewer than two points are skipped with a warning.
pub fn parse_sections_csv(text: &str) -> SectionTable {
    let mut table = SectionTable::default();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    for (i, record) in reader.records().enumerate() {
        // record 1 is the header
        let line = i + 2;
        let mut warn = |message: String| table.warnings.push(FeedWarning { line, message });
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                warn(e.to_string());
                continue;
            }
        };
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() < 3 {
            warn(format!("expected 3 fields, found {}", record.len()));
            continue;
        }
        let Ok(id) = record[0].trim().parse::<u32>() else {
            warn(format!("bad section id `{}`", &record[0]));
            continue;
        };
        let section = parse_section_coords(&record[2])
            .and_then(|path| RoadSection::new(id, record[1].trim(), path));
        match section {
            Ok(s) => table.sections.push(s),
            Err(e) => warn(e.to_string()),
        }
    }
    table
}
