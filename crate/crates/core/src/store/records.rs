use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::model::SignalPower;

/// Flag value of a segment whose locations all persisted.
pub const UPLOADED: &str = "OK";
/// Flag value of a segment still waiting for its locations.
pub const PENDING: &str = "PENDING";

pub const DATE_FORMAT: &str = "%Y-%m-%d";
pub const TIME_FORMAT: &str = "%H:%M:%S";
pub const DATETIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Birth date stored for users who never filled in a profile.
pub fn anonymous_birth_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1900, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub usu_id: i64,
    pub usu_hash: String,
    pub usu_regid: String,
    pub usu_nombre: String,
    pub usu_apellido: String,
    pub usu_peso: f64,
    pub usu_nacimiento: NaiveDate,
    pub usu_genero: String,
    pub usu_mail: String,
}

/// Optional profile fields; absent ones keep their stored (or default) value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub nombre: Option<String>,
    pub apellido: Option<String>,
    pub peso: Option<f64>,
    pub nacimiento: Option<NaiveDate>,
    pub genero: Option<String>,
    pub mail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub seg_id: i64,
    pub seg_activity: String,
    pub seg_distance: f64,
    pub seg_duration: u32,
    pub seg_speed: f64,
    pub seg_firsttime: NaiveDateTime,
    pub seg_lasttime: NaiveDateTime,
    pub usu_hash: String,
    pub seg_subido: String,
}

impl SegmentRecord {
    pub fn is_uploaded(&self) -> bool {
        self.seg_subido == UPLOADED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub loc_id: i64,
    pub loc_power: Option<String>,
    pub seg_id: i64,
    pub loc_latitude: f64,
    pub loc_longitude: f64,
    pub loc_time: NaiveTime,
    pub loc_date: NaiveDate,
}

/// A location row to insert. Coordinates are raw; the database rejects
/// out-of-range values.
#[derive(Debug, Clone, PartialEq)]
pub struct NewLocation {
    pub latitude: f64,
    pub longitude: f64,
    pub time: NaiveTime,
    pub date: NaiveDate,
    pub power: Option<SignalPower>,
}

/// One row of the analyst query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRow {
    pub lat: f64,
    pub lon: f64,
    pub time: NaiveTime,
    pub date: NaiveDate,
    pub activity: String,
    pub seg_id: i64,
    pub loc_id: i64,
}
