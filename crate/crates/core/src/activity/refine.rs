use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{read_records, ActivityError};
use crate::model::{haversine_distance, ActivityClass, GeoPoint, LocationSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Bus,
    Tram,
    Train,
    MetroEntrance,
}

impl StopKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StopKind::Bus => "bus",
            StopKind::Tram => "tram",
            StopKind::Train => "train",
            StopKind::MetroEntrance => "metro_entrance",
        }
    }

    /// The refined activity a confirmed ride between two stops of this
    /// kind maps to.
    fn ride(self) -> Option<ActivityClass> {
        match self {
            StopKind::Bus => Some(ActivityClass::Bus),
            StopKind::Tram => Some(ActivityClass::Tram),
            StopKind::Train => Some(ActivityClass::Train),
            StopKind::MetroEntrance => None,
        }
    }
}

impl fmt::Display for StopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopKind {
    type Err = ActivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [StopKind::Bus, StopKind::Tram, StopKind::Train, StopKind::MetroEntrance]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ActivityError::UnknownStopKind(s.to_string()))
    }
}

/// Public-transport stop positions.
#[derive(Debug, Clone, Default)]
pub struct PoiIndex {
    stops: Vec<(GeoPoint, StopKind)>,
}

impl PoiIndex {
    pub fn new(stops: Vec<(GeoPoint, StopKind)>) -> Self {
        PoiIndex { stops }
    }

    /// Loads `kind,lat,lon` lines.
    pub fn from_csv(text: &str) -> Result<Self, ActivityError> {
        let stops = read_records(text, "kind")?
            .into_iter()
            .map(|(line, f)| {
                if f.len() != 3 {
                    return Err(csv_err(line, "expected kind,lat,lon"));
                }
                let kind = f[0].parse()?;
                Ok((point(line, &f[1], &f[2])?, kind))
            })
            .collect::<Result<_, _>>()?;
        Ok(PoiIndex { stops })
    }

    pub fn stops(&self) -> &[(GeoPoint, StopKind)] {
        &self.stops
    }

    /// Closest stop of `kind` within `radius_m` of `at`.
    pub fn nearest(&self, kind: StopKind, at: GeoPoint, radius_m: f64) -> Option<GeoPoint> {
        self.stops
            .iter()
            .filter(|(_, k)| *k == kind)
            .map(|(p, _)| (*p, haversine_distance(*p, at)))
            .filter(|(_, d)| *d <= radius_m)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("route lookup failed: {0}")]
pub struct OracleError(pub String);

/// Answers whether a transit route of some kind links two stops.
pub trait RouteOracle {
    fn route_exists(&self, kind: StopKind, from: GeoPoint, to: GeoPoint) -> Result<bool, OracleError>;
}

/// Route oracle backed by a fixed table; unlisted pairs have no route.
#[derive(Debug, Clone, Default)]
pub struct TableRouteOracle {
    routes: Vec<(StopKind, GeoPoint, GeoPoint, bool)>,
}

const SAME_POINT_DEG: f64 = 1e-6;

fn same_point(a: GeoPoint, b: GeoPoint) -> bool {
    (a.lat() - b.lat()).abs() <= SAME_POINT_DEG && (a.lon() - b.lon()).abs() <= SAME_POINT_DEG
}

impl TableRouteOracle {
    pub fn new(routes: Vec<(StopKind, GeoPoint, GeoPoint, bool)>) -> Self {
        TableRouteOracle { routes }
    }

    /// Loads `kind,lat1,lon1,lat2,lon2,exists` lines.
    pub fn from_csv(text: &str) -> Result<Self, ActivityError> {
        let routes = read_records(text, "kind")?
            .into_iter()
            .map(|(line, f)| {
                if f.len() != 6 {
                    return Err(csv_err(line, "expected kind,lat1,lon1,lat2,lon2,exists"));
                }
                let exists = match f[5].to_ascii_lowercase().as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => return Err(csv_err(line, &format!("bad exists flag `{other}`"))),
                };
                Ok((f[0].parse()?, point(line, &f[1], &f[2])?, point(line, &f[3], &f[4])?, exists))
            })
            .collect::<Result<_, _>>()?;
        Ok(TableRouteOracle { routes })
    }
}

impl RouteOracle for TableRouteOracle {
    fn route_exists(&self, kind: StopKind, from: GeoPoint, to: GeoPoint) -> Result<bool, OracleError> {
        Ok(self.routes.iter().any(|(k, a, b, exists)| {
            *exists
                && *k == kind
                && ((same_point(*a, from) && same_point(*b, to))
                    || (same_point(*a, to) && same_point(*b, from)))
        }))
    }
}

fn csv_err(line: u64, reason: &str) -> ActivityError {
    ActivityError::Csv { line, reason: reason.to_string() }
}

fn point(line: u64, lat: &str, lon: &str) -> Result<GeoPoint, ActivityError> {
    let parse = |s: &str| s.parse::<f64>().map_err(|_| csv_err(line, &format!("bad coordinate `{s}`")));
    GeoPoint::new(parse(lat)?, parse(lon)?).map_err(|e| csv_err(line, &e.to_string()))
}

/// Thresholds for [`refine_activity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Median reported accuracy above which a motorised window is taken
    /// to be underground.
    pub metro_accuracy_m: f64,
    /// How close a window endpoint must be to a stop.
    pub poi_radius_m: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { metro_accuracy_m: 100.0, poi_radius_m: 50.0 }
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

/// Upgrades a window's majority-vote class to a public-transport mode.
///
/// Applies only when `base` is vehicle, still or unknown. A median
/// accuracy above the metro threshold gives metro. Otherwise, if both
/// window endpoints are near distinct stops of one kind and the oracle
/// knows a route of that kind between them, that kind is returned. An
/// oracle failure skips the stop check.
pub fn refine_activity(
    base: ActivityClass,
    window: &[LocationSample],
    gps_accuracy_m: &[f64],
    poi: &PoiIndex,
    route_oracle: &dyn RouteOracle,
    config: &RefineConfig,
) -> ActivityClass {
    if !matches!(base, ActivityClass::Vehicle | ActivityClass::Still | ActivityClass::Unknown) {
        return base;
    }
    if median(gps_accuracy_m).is_some_and(|m| m > config.metro_accuracy_m) {
        return ActivityClass::Metro;
    }
    let (Some(first), Some(last)) = (window.first(), window.last()) else {
        return base;
    };
    if window.len() < 2 {
        return base;
    }
    for kind in [StopKind::Bus, StopKind::Tram, StopKind::Train] {
        let from = poi.nearest(kind, first.point, config.poi_radius_m);
        let to = poi.nearest(kind, last.point, config.poi_radius_m);
        let (Some(from), Some(to)) = (from, to) else { continue };
        if same_point(from, to) {
            continue;
        }
        match route_oracle.route_exists(kind, from, to) {
            Ok(true) => return kind.ride().unwrap_or(base),
            Ok(false) => {}
            Err(e) => {
                tracing::warn!(error = %e, "route oracle unavailable, skipping stop heuristic");
                return base;
            }
        }
    }
    base
}
