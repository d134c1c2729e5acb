use std::collections::HashMap;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Incidence, RoadSection, SectionState, TrafficError};
use crate::model::GeoPoint;

/// Polyline color per state code, index = state.
pub const STATE_COLORS: [&str; 7] =
    ["#9E9E9E", "#1B5E20", "#4CAF50", "#FF9800", "#F44336", "#B71C1C", "#000000"];

pub fn state_color(state: i64) -> Result<&'static str, TrafficError> {
    usize::try_from(state)
        .ok()
        .and_then(|i| STATE_COLORS.get(i).copied())
        .ok_or(TrafficError::StateOutOfRange(state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionLine {
    pub section_id: u32,
    pub description: String,
    pub path: Vec<GeoPoint>,
    /// Current state; 0 when the feed had nothing for this section.
    pub state: u8,
    pub predicted_15min: Option<u8>,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrafficLayer {
    pub polylines: Vec<SectionLine>,
    pub markers: Vec<Incidence>,
}

/// Left-joins sections with their latest state. When a section appears
/// more than once in the feed the last line wins.
pub fn join_traffic_map(sections: &[RoadSection], states: &[SectionState], incidences: &[Incidence]) -> TrafficLayer {
    let latest: HashMap<u32, &SectionState> = states.iter().map(|s| (s.section_id, s)).collect();
    let polylines = sections
        .iter()
        .map(|section| {
            let state = latest.get(&section.section_id());
            let current = state.map_or(0, |s| s.current);
            SectionLine {
                section_id: section.section_id(),
                description: section.description().to_string(),
                path: section.path().to_vec(),
                state: current,
                predicted_15min: state.map(|s| s.predicted_15min),
                color: STATE_COLORS[usize::from(current)],
            }
        })
        .collect();
    TrafficLayer { polylines, markers: incidences.to_vec() }
}

fn lon_lat(p: &GeoPoint) -> Value {
    json!([p.lon(), p.lat()])
}

impl TrafficLayer {
    /// GeoJSON FeatureCollection: one LineString per section carrying its
    /// `stroke` color, one Point per incidence.
    pub fn to_geojson(&self) -> Value {
        let lines = self.polylines.iter().map(|l| {
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": l.path.iter().map(lon_lat).collect::<Vec<_>>(),
                },
                "properties": {
                    "kind": "section",
                    "section_id": l.section_id,
                    "description": l.description,
                    "state": l.state,
                    "predicted_15min": l.predicted_15min,
                    "stroke": l.color,
                    "color": l.color,
                },
            })
        });
        let points = self.markers.iter().map(|m| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": lon_lat(&m.point) },
                "properties": {
                    "kind": "incidence",
                    "title": "Incidencia",
                    "description": m.description,
                    "icon": m.icon_name,
                    "icon_url": m.icon_url(),
                },
            })
        });
        json!({ "type": "FeatureCollection", "features": lines.chain(points).collect::<Vec<_>>() })
    }
}
