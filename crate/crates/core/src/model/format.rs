//! The terminal's segment file format.
//!
//! A segment is a JSON object whose `location` member is a flat array of
//! `lat, lon, "HH:MM:SS"` triples, or `lat, lon, "HH:MM:SS", "<gsm>V<wifi>"`
//! quadruples when signal power was recorded. Files written by the terminal
//! spell the speed key as `speed (Km\h)` with a bare backslash, which is not
//! a valid JSON escape; the reader tolerates it and the writer escapes it.

use std::borrow::Cow;

use serde_json::{Map, Number, Value};

use super::{
    format_clock, parse_clock, parse_power_string, segment_metrics, ActivityClass, GeoPoint,
    LocationSample, ModelError, Segment, SegmentMetrics,
};

pub const KEY_ACTIVITY: &str = "activity";
pub const KEY_DISTANCE: &str = "distance (m)";
pub const KEY_DURATION: &str = "duration (s)";
pub const KEY_SPEED: &str = "speed (Km\\h)";
pub const KEY_FIRST_TIME: &str = "first time";
pub const KEY_LAST_TIME: &str = "last time";
pub const KEY_LOCATION: &str = "location";

/// Key order used when writing a new segment.
pub const SEGMENT_KEYS: [&str; 7] = [
    KEY_ACTIVITY,
    KEY_DISTANCE,
    KEY_DURATION,
    KEY_SPEED,
    KEY_FIRST_TIME,
    KEY_LAST_TIME,
    KEY_LOCATION,
];

/// Values exactly as they appeared in a parsed file; `None` when absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoredFields {
    pub activity: Option<ActivityClass>,
    pub distance_m: Option<f64>,
    pub duration_s: Option<u32>,
    pub speed_kmh: Option<f64>,
    pub first_time: Option<chrono::NaiveTime>,
    pub last_time: Option<chrono::NaiveTime>,
}

/// A segment read from a file, with both the stored and the recomputed
/// metrics.
///
/// `segment` carries the stored metric wherever the file had one and the
/// recomputed value otherwise; a missing activity becomes `unknown`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSegment {
    pub segment: Segment,
    pub stored: StoredFields,
    pub recomputed: SegmentMetrics,
    keys: Vec<&'static str>,
    with_power: bool,
}

impl ParsedSegment {
    /// Keys present in the source object, in source order.
    pub fn keys(&self) -> &[&'static str] {
        &self.keys
    }

    pub fn has_power(&self) -> bool {
        self.with_power
    }

    /// Stored vs recomputed duration when they differ.
    pub fn duration_mismatch(&self) -> Option<(u32, u32)> {
        self.stored
            .duration_s
            .filter(|d| *d != self.recomputed.duration_s)
            .map(|d| (d, self.recomputed.duration_s))
    }

    /// Re-serializes with the source's key set, key order and stored values.
    pub fn to_json(&self) -> String {
        let mut full = render_fields(&self.segment, self.with_power)
            .expect("parsed samples carry power when the layout says so");
        if let Some(t) = self.stored.first_time {
            full.insert(KEY_FIRST_TIME.into(), Value::String(format_clock(t)));
        }
        if let Some(t) = self.stored.last_time {
            full.insert(KEY_LAST_TIME.into(), Value::String(format_clock(t)));
        }
        let mut out = Map::new();
        for key in &self.keys {
            if let Some(v) = full.remove(*key) {
                out.insert((*key).to_string(), v);
            }
        }
        to_pretty(&Value::Object(out))
    }
}

/// Writes a segment as a JSON object with all seven keys.
///
/// With `include_power` every sample must carry a [`SignalPower`](super::SignalPower).
pub fn serialize_segment(segment: &Segment, include_power: bool) -> Result<String, ModelError> {
    Ok(to_pretty(&Value::Object(render_fields(segment, include_power)?)))
}

fn render_fields(segment: &Segment, include_power: bool) -> Result<Map<String, Value>, ModelError> {
    let stride = if include_power { 4 } else { 3 };
    let mut location = Vec::with_capacity(segment.locations().len() * stride);
    for (i, s) in segment.locations().iter().enumerate() {
        location.push(float(s.point.lat()));
        location.push(float(s.point.lon()));
        location.push(Value::String(format_clock(s.time)));
        if include_power {
            let p = s.power.ok_or(ModelError::MissingPower(i))?;
            location.push(Value::String(p.to_string()));
        }
    }
    let mut m = Map::new();
    m.insert(KEY_ACTIVITY.into(), Value::String(segment.activity().as_str().into()));
    m.insert(KEY_DISTANCE.into(), float(segment.distance_m()));
    m.insert(KEY_DURATION.into(), Value::from(segment.duration_s()));
    m.insert(KEY_SPEED.into(), float(segment.speed_kmh()));
    m.insert(KEY_FIRST_TIME.into(), Value::String(format_clock(segment.first_time())));
    m.insert(KEY_LAST_TIME.into(), Value::String(format_clock(segment.last_time())));
    m.insert(KEY_LOCATION.into(), Value::Array(location));
    Ok(m)
}

fn float(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("in-memory JSON value serializes")
}

/// Parses a single segment object, or a `{"segments": [...]}` wrapper
/// holding exactly one segment.
pub fn parse_segment(text: &str) -> Result<ParsedSegment, ModelError> {
    let mut all = parse_segments(text)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        n => Err(ModelError::Malformed(format!("expected one segment, found {n}"))),
    }
}

/// Parses every segment in a file: a bare object, a `{"segments": [...]}`
/// wrapper, or a top-level array.
pub fn parse_segments(text: &str) -> Result<Vec<ParsedSegment>, ModelError> {
    let text = escape_stray_backslashes(text);
    let root: Value =
        serde_json::from_str(&text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let items = match root {
        Value::Object(mut obj) if obj.contains_key("segments") => match obj.remove("segments") {
            Some(Value::Array(items)) => items,
            _ => return Err(ModelError::Malformed("`segments` is not an array".into())),
        },
        Value::Object(obj) => vec![Value::Object(obj)],
        Value::Array(items) => items,
        _ => return Err(ModelError::Malformed("expected a JSON object".into())),
    };
    items
        .iter()
        .map(|item| match item {
            Value::Object(obj) => parse_object(obj),
            _ => Err(ModelError::Malformed("segment entry is not an object".into())),
        })
        .collect()
}

fn parse_object(obj: &Map<String, Value>) -> Result<ParsedSegment, ModelError> {
    let mut stored = StoredFields::default();
    let mut keys = Vec::new();
    let mut location = None;
    for (key, value) in obj {
        let key: &'static str = match SEGMENT_KEYS.iter().find(|k| **k == key) {
            Some(k) => k,
            None => continue,
        };
        keys.push(key);
        match key {
            KEY_ACTIVITY => stored.activity = Some(str_field(key, value)?.parse()?),
            KEY_DISTANCE => stored.distance_m = Some(f64_field(key, value)?),
            KEY_DURATION => stored.duration_s = Some(u32_field(key, value)?),
            KEY_SPEED => stored.speed_kmh = Some(f64_field(key, value)?),
            KEY_FIRST_TIME => stored.first_time = Some(parse_clock(str_field(key, value)?)?),
            KEY_LAST_TIME => stored.last_time = Some(parse_clock(str_field(key, value)?)?),
            _ => {
                location = Some(value.as_array().ok_or_else(|| {
                    ModelError::Malformed("`location` is not an array".into())
                })?)
            }
        }
    }
    let location = location.ok_or_else(|| ModelError::Malformed("missing `location`".into()))?;
    let (samples, with_power) = parse_location_array(location)?;
    let recomputed = segment_metrics(&samples)?;
    let distance_m = stored.distance_m.unwrap_or(recomputed.distance_m);
    let duration_s = stored.duration_s.unwrap_or(recomputed.duration_s);
    let speed_kmh = stored
        .speed_kmh
        .unwrap_or_else(|| SegmentMetrics::speed_for(distance_m, duration_s));
    let segment = Segment::with_metrics(
        stored.activity.unwrap_or(ActivityClass::Unknown),
        samples,
        SegmentMetrics { distance_m, duration_s, speed_kmh },
    )?;
    Ok(ParsedSegment { segment, stored, recomputed, keys, with_power })
}

/// Stride 4 is chosen only when the length allows it and every fourth
/// entry is a power string; otherwise stride 3.
fn detect_stride(entries: &[Value]) -> usize {
    let quadruples = !entries.is_empty()
        && entries.len().is_multiple_of(4)
        && entries
            .iter()
            .skip(3)
            .step_by(4)
            .all(|v| v.as_str().is_some_and(|s| parse_power_string(s).is_ok()));
    if quadruples {
        4
    } else {
        3
    }
}

fn parse_location_array(entries: &[Value]) -> Result<(Vec<LocationSample>, bool), ModelError> {
    let stride = detect_stride(entries);
    if !entries.len().is_multiple_of(stride) {
        return Err(ModelError::StrideMismatch { len: entries.len(), stride });
    }
    let samples = entries
        .chunks(stride)
        .enumerate()
        .map(|(i, c)| {
            let coord = |v: &Value| {
                v.as_f64().ok_or_else(|| {
                    ModelError::Malformed(format!("location {i}: expected a number, got {v}"))
                })
            };
            let point = GeoPoint::new(coord(&c[0])?, coord(&c[1])?)?;
            let time = c[2].as_str().ok_or_else(|| {
                ModelError::Malformed(format!("location {i}: expected a time string"))
            })?;
            let power = match c.get(3) {
                Some(v) => Some(parse_power_string(v.as_str().unwrap_or_default())?),
                None => None,
            };
            Ok(LocationSample::new(point, parse_clock(time)?, power))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok((samples, stride == 4))
}

fn str_field<'a>(key: &str, v: &'a Value) -> Result<&'a str, ModelError> {
    v.as_str().ok_or_else(|| ModelError::Malformed(format!("`{key}` is not a string")))
}

fn f64_field(key: &str, v: &Value) -> Result<f64, ModelError> {
    v.as_f64().ok_or_else(|| ModelError::Malformed(format!("`{key}` is not a number")))
}

fn u32_field(key: &str, v: &Value) -> Result<u32, ModelError> {
    let bad = || ModelError::Malformed(format!("`{key}` is not a whole number of seconds"));
    match v.as_u64() {
        Some(n) => u32::try_from(n).map_err(|_| bad()),
        None => {
            let f = v.as_f64().ok_or_else(bad)?;
            if f.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&f) {
                Ok(f as u32)
            } else {
                Err(bad())
            }
        }
    }
}

/// Doubles any backslash inside a string literal that does not start a
/// valid JSON escape, so `"speed (Km\h)"` reads as the key `speed (Km\h)`.
fn escape_stray_backslashes(text: &str) -> Cow<'_, str> {
    if !text.contains('\\') {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 8);
    let mut in_string = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                in_string = !in_string;
                out.push(c);
            }
            '\\' if in_string => match chars.peek() {
                Some(&n @ ('"' | '\\' | '/' | 'b' | 'f' | 'n' | 'r' | 't' | 'u')) => {
                    out.push('\\');
                    out.push(n);
                    chars.next();
                }
                _ => out.push_str("\\\\"),
            },
            _ => out.push(c),
        }
    }
    Cow::Owned(out)
}
