//! Analyst query surface: request validation, per-segment map payload with
//! activity colors, and CSV export.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{GeoPoint, ModelError};
use crate::store::{ActivityFilter, LocationQuery, LocationRow, DATE_FORMAT, TIME_FORMAT};

pub const MISSING_FIELDS_MESSAGE: &str = "All fields must be filled out";
pub const NO_MARKERS_MESSAGE: &str = "No se ha encontrado ningun marcador";
pub const CSV_HEADER: [&str; 6] = ["seg_id", "activity", "lat", "lon", "date", "time"];
pub const DEFAULT_ACTIVITY_COLOR: &str = "#3e8bff";
pub const AGE_LIMITS: (u32, u32) = (14, 99);

pub fn activity_color(activity: &str) -> &'static str {
    match activity {
        "still" => "#FF00FF",
        "on_foot" => "#FF9900",
        "vehicle" => "#333300",
        "bicycle" => "#00FF00",
        "bus" => "#0099CC",
        _ => DEFAULT_ACTIVITY_COLOR,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("{MISSING_FIELDS_MESSAGE}")]
    MissingFields,
    #[error("invalid {field}: `{value}`")]
    InvalidField { field: &'static str, value: String },
    #[error("age out of range {}-{}", AGE_LIMITS.0, AGE_LIMITS.1)]
    AgeOutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Map,
    Csv,
}

/// Raw form fields as received; empty strings count as missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryForm {
    pub age_min: Option<String>,
    pub age_max: Option<String>,
    pub activity: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub format: Option<String>,
}

/// Accepts `YYYY-MM-DD`, optionally followed by `T` or a space and
/// `HH:MM` or `HH:MM:SS`. A bare date means the start of the day, or its
/// last second when `end_of_day` is set.
pub fn parse_bound(text: &str, end_of_day: bool) -> Option<NaiveDateTime> {
    let text = text.trim();
    if let Ok(d) = NaiveDate::parse_from_str(text, DATE_FORMAT) {
        let t = if end_of_day { NaiveTime::from_hms_opt(23, 59, 59) } else { NaiveTime::from_hms_opt(0, 0, 0) };
        return t.map(|t| d.and_time(t));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
}

fn field(v: &Option<String>) -> Option<&str> {
    v.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

impl QueryForm {
    pub fn parse(&self) -> Result<(LocationQuery, OutputFormat), QueryError> {
        let (Some(age_min), Some(age_max), Some(activity), Some(from), Some(to)) = (
            field(&self.age_min),
            field(&self.age_max),
            field(&self.activity),
            field(&self.from),
            field(&self.to),
        ) else {
            return Err(QueryError::MissingFields);
        };
        let invalid = |field, value: &str| QueryError::InvalidField { field, value: value.to_string() };
        let age = |name, v: &str| v.parse::<u32>().map_err(|_| invalid(name, v));
        let (age_min, age_max) = (age("age_min", age_min)?, age("age_max", age_max)?);
        let in_limits = |a| (AGE_LIMITS.0..=AGE_LIMITS.1).contains(&a);
        if !in_limits(age_min) || !in_limits(age_max) {
            return Err(QueryError::AgeOutOfRange);
        }
        let format = match field(&self.format) {
            None | Some("map") => OutputFormat::Map,
            Some("csv") => OutputFormat::Csv,
            Some(other) => return Err(invalid("format", other)),
        };
        let query = LocationQuery {
            age_min,
            age_max,
            activity: ActivityFilter::parse(activity),
            from: parse_bound(from, false).ok_or_else(|| invalid("from", from))?,
            to: parse_bound(to, true).ok_or_else(|| invalid("to", to))?,
        };
        Ok((query, format))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentLine {
    pub seg_id: i64,
    pub activity: String,
    pub color: &'static str,
    pub path: Vec<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub point: GeoPoint,
    pub seg_id: i64,
    pub activity: String,
    pub date: NaiveDate,
    pub time: NaiveTime,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MapPayload {
    pub polylines: Vec<SegmentLine>,
    pub markers: Vec<Marker>,
}

fn marker(row: &LocationRow) -> Result<Marker, ModelError> {
    Ok(Marker {
        point: GeoPoint::new(row.lat, row.lon)?,
        seg_id: row.seg_id,
        activity: row.activity.clone(),
        date: row.date,
        time: row.time,
    })
}

/// Groups runs of rows sharing a seg_id into one polyline each, with
/// markers on the first and last location of every run.
pub fn build_map_payload(rows: &[LocationRow]) -> Result<MapPayload, ModelError> {
    let mut payload = MapPayload::default();
    for run in rows.chunk_by(|a, b| a.seg_id == b.seg_id) {
        let (first, last) = (&run[0], &run[run.len() - 1]);
        payload.polylines.push(SegmentLine {
            seg_id: first.seg_id,
            activity: first.activity.clone(),
            color: activity_color(&first.activity),
            path: run.iter().map(|r| GeoPoint::new(r.lat, r.lon)).collect::<Result<_, _>>()?,
        });
        payload.markers.push(marker(first)?);
        if run.len() > 1 {
            payload.markers.push(marker(last)?);
        }
    }
    Ok(payload)
}

impl MapPayload {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// GeoJSON FeatureCollection. An empty payload carries the no-marker
    /// message as a `message` member.
    pub fn to_geojson(&self) -> Value {
        let lines = self.polylines.iter().map(|l| {
            let coords: Vec<Value> = l.path.iter().map(|p| json!([p.lon(), p.lat()])).collect();
            let geometry = if coords.len() == 1 {
                json!({ "type": "Point", "coordinates": coords[0] })
            } else {
                json!({ "type": "LineString", "coordinates": coords })
            };
            json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": { "kind": "segment", "seg_id": l.seg_id, "activity": l.activity, "color": l.color },
            })
        });
        let markers = self.markers.iter().map(|m| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [m.point.lon(), m.point.lat()] },
                "properties": {
                    "kind": "marker",
                    "seg_id": m.seg_id,
                    "activity": m.activity,
                    "color": activity_color(&m.activity),
                    "date": m.date.format(DATE_FORMAT).to_string(),
                    "time": m.time.format(TIME_FORMAT).to_string(),
                },
            })
        });
        let mut fc = json!({ "type": "FeatureCollection", "features": lines.chain(markers).collect::<Vec<_>>() });
        if self.is_empty() {
            fc["message"] = json!(NO_MARKERS_MESSAGE);
        }
        fc
    }
}

/// One CSV line per location, in query order.
pub fn export_csv(rows: &[LocationRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.seg_id.to_string(),
            r.activity.clone(),
            r.lat.to_string(),
            r.lon.to_string(),
            r.date.format(DATE_FORMAT).to_string(),
            r.time.format(TIME_FORMAT).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(seg_id: i64, loc_id: i64, activity: &str) -> LocationRow {
        LocationRow {
            lat: 41.0 + loc_id as f64 * 1e-4,
            lon: 2.0,
            time: NaiveTime::from_hms_opt(10, 0, loc_id as u32 % 60).unwrap(),
            date: NaiveDate::from_ymd_opt(2015, 6, 19).unwrap(),
            activity: activity.to_string(),
            seg_id,
            loc_id,
        }
    }

    fn form(pairs: [&str; 5]) -> QueryForm {
        let f = |s: &str| Some(s.to_string());
        QueryForm {
            age_min: f(pairs[0]),
            age_max: f(pairs[1]),
            activity: f(pairs[2]),
            from: f(pairs[3]),
            to: f(pairs[4]),
            format: None,
        }
    }

    #[test]
    fn colors() {
        assert_eq!(activity_color("vehicle"), "#333300");
        assert_eq!(activity_color("still"), "#FF00FF");
        assert_eq!(activity_color("on_foot"), "#FF9900");
        assert_eq!(activity_color("bicycle"), "#00FF00");
        assert_eq!(activity_color("bus"), "#0099CC");
        assert_eq!(activity_color("metro"), "#3e8bff");
    }

    #[test]
    fn one_vehicle_segment() {
        let rows: Vec<_> = (1..=4).map(|i| row(7, i, "vehicle")).collect();
        let p = build_map_payload(&rows).unwrap();
        assert_eq!(p.polylines.len(), 1);
        assert_eq!(p.polylines[0].color, "#333300");
        assert_eq!(p.polylines[0].path.len(), 4);
        assert_eq!(p.markers.len(), 2);
        assert_eq!(p.markers[0].point.lat(), rows[0].lat);
        assert_eq!(p.markers[1].point.lat(), rows[3].lat);
        let gj = p.to_geojson();
        assert!(gj.get("message").is_none());
        assert_eq!(gj["features"][0]["properties"]["color"], "#333300");
        assert_eq!(gj["features"][2]["properties"]["date"], "2015-06-19");
    }

    #[test]
    fn empty_payload_message() {
        let p = build_map_payload(&[]).unwrap();
        assert!(p.is_empty());
        let gj = p.to_geojson();
        assert_eq!(gj["message"], NO_MARKERS_MESSAGE);
        assert_eq!(gj["features"], json!([]));
    }

    #[test]
    fn single_location_segment_is_point() {
        let p = build_map_payload(&[row(1, 1, "still")]).unwrap();
        assert_eq!(p.markers.len(), 1);
        assert_eq!(p.to_geojson()["features"][0]["geometry"]["type"], "Point");
    }

    #[test]
    fn csv_export() {
        assert_eq!(export_csv(&[]), "seg_id,activity,lat,lon,date,time\n");
        let rows: Vec<_> = (1..=6).map(|i| row(3, i, "on_foot")).collect();
        let text = export_csv(&rows);
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().nth(1).unwrap(), "3,on_foot,41.0001,2,2015-06-19,10:00:01");
        let odd = export_csv(&[row(1, 1, "a,b")]);
        assert!(odd.lines().nth(1).unwrap().starts_with("1,\"a,b\","));
    }

    #[test]
    fn form_validation() {
        let ok = form(["20", "40", "All", "2015-06-01", "2015-06-30T12:00"]).parse().unwrap().0;
        assert_eq!(ok.activity, ActivityFilter::All);
        assert_eq!(ok.from.to_string(), "2015-06-01 00:00:00");
        assert_eq!(ok.to.to_string(), "2015-06-30 12:00:00");
        let end = form(["20", "40", "bus", "2015-06-01", "2015-06-30"]).parse().unwrap().0;
        assert_eq!(end.to.to_string(), "2015-06-30 23:59:59");
        assert_eq!(end.activity, ActivityFilter::Only("bus".into()));

        let err = form(["20", "40", "", "2015-06-01", "2015-06-30"]).parse().unwrap_err();
        assert_eq!(err.to_string(), "All fields must be filled out");
        assert_eq!(QueryForm::default().parse().unwrap_err(), QueryError::MissingFields);
        assert_eq!(form(["13", "40", "All", "2015-06-01", "2015-06-30"]).parse().unwrap_err(), QueryError::AgeOutOfRange);
        assert!(matches!(
            form(["20", "40", "All", "June", "2015-06-30"]).parse(),
            Err(QueryError::InvalidField { field: "from", .. })
        ));
        let mut csv = form(["20", "40", "All", "2015-06-01", "2015-06-30"]);
        csv.format = Some("csv".into());
        assert_eq!(csv.parse().unwrap().1, OutputFormat::Csv);
        csv.format = Some("xml".into());
        assert!(csv.parse().is_err());
    }

    proptest! {
        #[test]
        fn grouping_is_a_partition(segs in prop::collection::vec((1i64..6, 1usize..5), 0..12)) {
            let mut rows = Vec::new();
            let mut loc = 0;
            for (seg, n) in segs {
                for _ in 0..n {
                    loc += 1;
                    rows.push(row(seg, loc, "still"));
                }
            }
            let p = build_map_payload(&rows).unwrap();
            let flat: Vec<f64> = p.polylines.iter().flat_map(|l| l.path.iter().map(|g| g.lat())).collect();
            prop_assert_eq!(flat, rows.iter().map(|r| r.lat).collect::<Vec<_>>());
            for w in p.polylines.windows(2) {
                prop_assert_ne!(w[0].seg_id, w[1].seg_id);
            }
        }
    }
}
