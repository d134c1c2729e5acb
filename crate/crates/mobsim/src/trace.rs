//! Seeded synthetic mobility traces: positions, signal power, accuracy and
//! recognizer labels sampled on a fixed grid.

use chrono::{Duration, NaiveDate, NaiveTime};
use mobility_core::activity::ActivitySample;
use mobility_core::model::{ActivityClass, GeoPoint, LocationSample, SignalPower, EARTH_RADIUS_M, WIFI_UNAVAILABLE_DBM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probability that the recognizer reports a wrong class for a sample.
pub const LABEL_NOISE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("leg {0} has zero duration")]
    ZeroLengthLeg(usize),
    #[error("leg {index} has invalid speed {speed}")]
    InvalidSpeed { index: usize, speed: f64 },
    #[error("sample interval must be positive")]
    ZeroInterval,
    #[error("trace has no legs")]
    NoLegs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    pub activity: ActivityClass,
    pub duration_s: u32,
    /// Fixed speed; drawn from the activity's band when absent.
    #[serde(default)]
    pub speed_kmh: Option<f64>,
}

impl Leg {
    pub fn new(activity: ActivityClass, duration_s: u32) -> Self {
        Leg { activity, duration_s, speed_kmh: None }
    }

    pub fn at_speed(activity: ActivityClass, duration_s: u32, speed_kmh: f64) -> Self {
        Leg { activity, duration_s, speed_kmh: Some(speed_kmh) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub seed: u64,
    pub start: GeoPoint,
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub legs: Vec<Leg>,
    pub sample_interval_s: u32,
}

impl TraceSpec {
    /// Walk, drive, walk through central Barcelona starting at 08:00.
    pub fn default_scenario(seed: u64, sample_interval_s: u32) -> Self {
        TraceSpec {
            seed,
            start: GeoPoint::new(41.400971, 2.165102).expect("valid start point"),
            date: NaiveDate::from_ymd_opt(2015, 6, 1).expect("valid date"),
            start_time: NaiveTime::from_hms_opt(8, 0, 0).expect("valid time"),
            legs: vec![
                Leg::new(ActivityClass::OnFoot, 300),
                Leg::new(ActivityClass::Vehicle, 600),
                Leg::new(ActivityClass::OnFoot, 240),
            ],
            sample_interval_s,
        }
    }

    pub fn total_duration_s(&self) -> u64 {
        self.legs.iter().map(|l| u64::from(l.duration_s)).sum()
    }
}

/// One grid point of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    /// Seconds since the trace start.
    pub offset_s: u64,
    pub location: LocationSample,
    pub activity: ActivitySample,
    pub accuracy_m: f64,
    /// The leg's true activity.
    pub truth: ActivityClass,
}

/// Plausible speed range in km/h for a leg of `activity`.
pub fn speed_band(activity: ActivityClass) -> (f64, f64) {
    match activity {
        ActivityClass::Still => (0.0, 0.0),
        ActivityClass::OnFoot => (1.0, 6.0),
        ActivityClass::Bicycle => (10.0, 25.0),
        ActivityClass::Vehicle => (10.0, 80.0),
        ActivityClass::Bus | ActivityClass::Tram => (10.0, 40.0),
        ActivityClass::Train => (40.0, 120.0),
        ActivityClass::Metro => (25.0, 60.0),
        ActivityClass::Unknown => (0.0, 5.0),
    }
}

/// What the on-device recognizer can tell about a true activity.
pub fn recognized_as(activity: ActivityClass) -> ActivityClass {
    if activity.is_motorized() {
        ActivityClass::Vehicle
    } else {
        activity
    }
}

fn destination(from: GeoPoint, bearing_rad: f64, distance_m: f64) -> GeoPoint {
    let delta = distance_m / EARTH_RADIUS_M;
    let (phi1, lambda1) = (from.lat().to_radians(), from.lon().to_radians());
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing_rad.cos()).asin();
    let lambda2 = lambda1
        + (bearing_rad.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    let lon = (lambda2.to_degrees() + 540.0) % 360.0 - 180.0;
    GeoPoint::new(phi2.to_degrees().clamp(-90.0, 90.0), lon).expect("normalized coordinates")
}

fn round7(p: GeoPoint) -> GeoPoint {
    let r = |x: f64| (x * 1e7).round() / 1e7;
    GeoPoint::new(r(p.lat()), r(p.lon())).expect("rounding keeps coordinates in range")
}

struct LegPlan {
    start_s: u64,
    end_s: u64,
    activity: ActivityClass,
    speed_ms: f64,
    bearing_rad: f64,
}

/// Generates one sample every `sample_interval_s` seconds over the whole
/// trace. Positions follow each leg's heading at its speed; the same spec
/// always yields the same trace.
pub fn generate_trace(spec: &TraceSpec) -> Result<Vec<TraceSample>, TraceError> {
    if spec.legs.is_empty() {
        return Err(TraceError::NoLegs);
    }
    if spec.sample_interval_s == 0 {
        return Err(TraceError::ZeroInterval);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plans = Vec::with_capacity(spec.legs.len());
    let mut t = 0u64;
    for (index, leg) in spec.legs.iter().enumerate() {
        if leg.duration_s == 0 {
            return Err(TraceError::ZeroLengthLeg(index));
        }
        let (lo, hi) = speed_band(leg.activity);
        let drawn = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let speed = leg.speed_kmh.unwrap_or(drawn);
        if !speed.is_finite() || speed < 0.0 {
            return Err(TraceError::InvalidSpeed { index, speed });
        }
        let bearing_rad = rng.gen_range(0.0..std::f64::consts::TAU);
        plans.push(LegPlan {
            start_s: t,
            end_s: t + u64::from(leg.duration_s),
            activity: leg.activity,
            speed_ms: speed / 3.6,
            bearing_rad,
        });
        t += u64::from(leg.duration_s);
    }
    let total = t;
    let step = u64::from(spec.sample_interval_s);

    let mut out = Vec::new();
    let mut pos = spec.start;
    let mut now = 0u64;
    let mut offset = 0u64;
    while offset < total {
        // move from `now` to `offset`, one straight piece per overlapped leg
        for plan in &plans {
            let (a, b) = (now.max(plan.start_s), offset.min(plan.end_s));
            if b > a && plan.speed_ms > 0.0 {
                let wobble = rng.gen_range(-0.15..0.15);
                pos = destination(pos, plan.bearing_rad + wobble, plan.speed_ms * (b - a) as f64);
            }
        }
        now = offset;
        pos = round7(pos);

        let plan = plans.iter().find(|p| offset < p.end_s).expect("offset inside the trace");
        let truth = plan.activity;
        let accuracy_m = if truth == ActivityClass::Metro {
            rng.gen_range(150.0..=400.0)
        } else {
            rng.gen_range(5.0..=30.0)
        };
        let gsm = rng.gen_range(-110..=-60);
        let wifi = if truth.is_motorized() { WIFI_UNAVAILABLE_DBM } else { rng.gen_range(-90..=-30) };
        let power = SignalPower::new(gsm, wifi).expect("generated power in range");

        let seen = recognized_as(truth);
        let (label, confidence) = if rng.gen_bool(LABEL_NOISE) {
            let others: Vec<_> = ActivityClass::BASE.into_iter().filter(|c| *c != seen).collect();
            (others[rng.gen_range(0..others.len())], rng.gen_range(10..=40))
        } else {
            (seen, rng.gen_range(60..=100))
        };

        let time = spec.start_time + Duration::seconds(offset as i64);
        out.push(TraceSample {
            offset_s: offset,
            location: LocationSample::new(pos, time, Some(power)),
            activity: ActivitySample::new(label, confidence, offset as i64).expect("base label, confidence <= 100"),
            accuracy_m,
            truth,
        });
        offset += step;
    }
    Ok(out)
}

/// Calendar date of a trace sample.
pub fn sample_date(spec: &TraceSpec, offset_s: u64) -> NaiveDate {
    use chrono::Timelike;
    let from_midnight = u64::from(spec.start_time.num_seconds_from_midnight()) + offset_s;
    spec.date + chrono::Days::new(from_midnight / 86_400)
}
