use chrono::{NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{haversine_distance, ActivityClass, GeoPoint, ModelError, SignalPower};

pub const SECONDS_PER_DAY: u32 = 86_400;

/// One timestamped fix as recorded by the terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationSample {
    pub point: GeoPoint,
    #[serde(with = "clock")]
    pub time: NaiveTime,
    pub power: Option<SignalPower>,
}

impl LocationSample {
    pub fn new(point: GeoPoint, time: NaiveTime, power: Option<SignalPower>) -> Self {
        LocationSample { point, time, power }
    }
}

/// Parses a strict `HH:MM:SS` time of day.
pub fn parse_clock(s: &str) -> Result<NaiveTime, ModelError> {
    let b = s.as_bytes();
    if b.len() != 8 || b[2] != b':' || b[5] != b':' {
        return Err(ModelError::InvalidTime(s.to_string()));
    }
    NaiveTime::parse_from_str(s, "%H:%M:%S").map_err(|_| ModelError::InvalidTime(s.to_string()))
}

pub fn format_clock(t: NaiveTime) -> String {
    format!("{:02}:{:02}:{:02}", t.hour(), t.minute(), t.second())
}

/// Whole seconds from `first` to `last` on the same day; a `last` earlier
/// than `first` is taken to have crossed midnight.
pub fn elapsed_seconds(first: NaiveTime, last: NaiveTime) -> u32 {
    let a = first.num_seconds_from_midnight();
    let b = last.num_seconds_from_midnight();
    if b >= a {
        b - a
    } else {
        b + SECONDS_PER_DAY - a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub distance_m: f64,
    pub duration_s: u32,
    pub speed_kmh: f64,
}

impl SegmentMetrics {
    /// Mean speed in km/h, or 0 for a zero duration.
    pub fn speed_for(distance_m: f64, duration_s: u32) -> f64 {
        if duration_s == 0 {
            0.0
        } else {
            3.6 * distance_m / f64::from(duration_s)
        }
    }
}

/// Path length, elapsed time and mean speed of a sample sequence.
pub fn segment_metrics(samples: &[LocationSample]) -> Result<SegmentMetrics, ModelError> {
    check_samples(samples)?;
    let distance_m = samples
        .windows(2)
        .map(|w| haversine_distance(w[0].point, w[1].point))
        .sum();
    let duration_s = elapsed_seconds(samples[0].time, samples[samples.len() - 1].time);
    Ok(SegmentMetrics {
        distance_m,
        duration_s,
        speed_kmh: SegmentMetrics::speed_for(distance_m, duration_s),
    })
}

// At least two samples; times non-decreasing apart from one midnight wrap.
fn check_samples(samples: &[LocationSample]) -> Result<(), ModelError> {
    if samples.len() < 2 {
        return Err(ModelError::InsufficientSamples);
    }
    let mut wrapped = false;
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].time < w[0].time {
            if wrapped {
                return Err(ModelError::TimesOutOfOrder(i + 1));
            }
            wrapped = true;
        }
    }
    if wrapped && samples[samples.len() - 1].time >= samples[0].time {
        return Err(ModelError::TimesOutOfOrder(samples.len() - 1));
    }
    Ok(())
}

/// Consecutive samples sharing one activity, with their metrics.
///
/// The metrics are normally computed from the samples, but a segment read
/// from a terminal file keeps the values the terminal stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    activity: ActivityClass,
    locations: Vec<LocationSample>,
    metrics: SegmentMetrics,
}

impl Segment {
    pub fn from_samples(
        activity: ActivityClass,
        locations: Vec<LocationSample>,
    ) -> Result<Self, ModelError> {
        let metrics = segment_metrics(&locations)?;
        Ok(Segment { activity, locations, metrics })
    }

    /// Builds a segment with externally supplied metrics.
    pub fn with_metrics(
        activity: ActivityClass,
        locations: Vec<LocationSample>,
        metrics: SegmentMetrics,
    ) -> Result<Self, ModelError> {
        check_samples(&locations)?;
        Ok(Segment { activity, locations, metrics })
    }

    pub fn activity(&self) -> ActivityClass {
        self.activity
    }

    pub fn locations(&self) -> &[LocationSample] {
        &self.locations
    }

    pub fn metrics(&self) -> SegmentMetrics {
        self.metrics
    }

    pub fn distance_m(&self) -> f64 {
        self.metrics.distance_m
    }

    pub fn duration_s(&self) -> u32 {
        self.metrics.duration_s
    }

    pub fn speed_kmh(&self) -> f64 {
        self.metrics.speed_kmh
    }

    pub fn first_time(&self) -> NaiveTime {
        self.locations[0].time
    }

    pub fn last_time(&self) -> NaiveTime {
        self.locations[self.locations.len() - 1].time
    }

    /// True when a midnight lies between the first and last sample.
    pub fn crosses_midnight(&self) -> bool {
        self.last_time() < self.first_time()
    }
}

mod clock {
    use chrono::NaiveTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_clock(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_clock(&s).map_err(serde::de::Error::custom)
    }
}
