//! Relational persistence of users, segments and locations.
//!
//! Backed by an embedded SQLite file. Writes go through one connection
//! behind a mutex; reads on a file-backed store use their own connections
//! and see a consistent snapshot (WAL mode).

mod query;
mod records;

use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime};
use rusqlite::{params, Connection, OpenFlags, OptionalExtension, Row};
use thiserror::Error;

use crate::model::{parse_segments, ActivityClass, ModelError, Segment, SegmentMetrics};

pub use query::{year_age, ActivityFilter, LocationQuery};
pub use records::{
    anonymous_birth_date, LocationRecord, LocationRow, NewLocation, SegmentRecord, UserProfile,
    UserRecord, DATETIME_FORMAT, DATE_FORMAT, PENDING, TIME_FORMAT, UPLOADED,
};

/// Schema migrations, applied in order and tracked in `user_version`.
const MIGRATIONS: &[&str] = &[include_str!("../../migrations/0001_init.sql")];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("user hash must not be empty")]
    EmptyHash,
    #[error("no such user")]
    NoSuchUser,
    #[error("no such segment {0}")]
    NoSuchSegment(i64),
    #[error("segment {0} has no locations")]
    NoLocations(i64),
    #[error("invalid range")]
    InvalidRange,
    #[error("corrupt row: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),
}

pub struct Store {
    writer: Mutex<Connection>,
    path: Option<PathBuf>,
    readers: Mutex<Vec<Connection>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path).finish_non_exhaustive()
    }
}

fn configure(conn: &Connection) -> rusqlite::Result<()> {
    conn.pragma_update(None, "foreign_keys", true)?;
    conn.busy_timeout(std::time::Duration::from_secs(5))
}

fn migrate(conn: &mut Connection) -> rusqlite::Result<()> {
    let version: usize = conn.pragma_query_value(None, "user_version", |r| r.get(0))?;
    for (i, sql) in MIGRATIONS.iter().enumerate().skip(version) {
        let tx = conn.transaction()?;
        tx.execute_batch(sql)?;
        tx.pragma_update(None, "user_version", i + 1)?;
        tx.commit()?;
    }
    Ok(())
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        configure(&conn)?;
        migrate(&mut conn)?;
        Ok(Store {
            writer: Mutex::new(conn),
            path: Some(path.to_path_buf()),
            readers: Mutex::new(Vec::new()),
        })
    }

    pub fn open_in_memory() -> Result<Self, StoreError> {
        let mut conn = Connection::open_in_memory()?;
        configure(&conn)?;
        migrate(&mut conn)?;
        Ok(Store { writer: Mutex::new(conn), path: None, readers: Mutex::new(Vec::new()) })
    }

    fn writer(&self) -> MutexGuard<'_, Connection> {
        self.writer.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn read<T>(&self, f: impl FnOnce(&Connection) -> Result<T, StoreError>) -> Result<T, StoreError> {
        let Some(path) = &self.path else {
            return f(&self.writer());
        };
        let pooled = self.readers.lock().unwrap_or_else(|p| p.into_inner()).pop();
        let conn = match pooled {
            Some(c) => c,
            None => {
                let c = Connection::open_with_flags(
                    path,
                    OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
                )?;
                configure(&c)?;
                c
            }
        };
        let out = f(&conn);
        self.readers.lock().unwrap_or_else(|p| p.into_inner()).push(conn);
        out
    }

    /// Inserts a user with anonymous defaults, or on a known hash updates
    /// the registration id and any supplied profile fields.
    pub fn upsert_user(
        &self,
        usu_hash: &str,
        usu_regid: &str,
        profile: &UserProfile,
    ) -> Result<UserRecord, StoreError> {
        if usu_hash.is_empty() {
            return Err(StoreError::EmptyHash);
        }
        let conn = self.writer();
        conn.execute(
            "INSERT INTO tbl_usuarios (usu_hash, usu_regid, usu_nombre, usu_apellido, usu_peso,
                                       usu_nacimiento, usu_genero, usu_mail)
             VALUES (?1, ?2, COALESCE(?3, 'not_set'), COALESCE(?4, 'not_set'), COALESCE(?5, 0.00),
                     COALESCE(?6, '1900-01-01'), COALESCE(?7, 'not_s'), COALESCE(?8, 'notset@notset.com'))
             ON CONFLICT (usu_hash) DO UPDATE SET
                 usu_regid = excluded.usu_regid,
                 usu_nombre = COALESCE(?3, usu_nombre),
                 usu_apellido = COALESCE(?4, usu_apellido),
                 usu_peso = COALESCE(?5, usu_peso),
                 usu_nacimiento = COALESCE(?6, usu_nacimiento),
                 usu_genero = COALESCE(?7, usu_genero),
                 usu_mail = COALESCE(?8, usu_mail)",
            params![
                usu_hash,
                usu_regid,
                profile.nombre,
                profile.apellido,
                profile.peso,
                profile.nacimiento.map(|d| d.format(DATE_FORMAT).to_string()),
                profile.genero,
                profile.mail,
            ],
        )?;
        user_by_hash(&conn, usu_hash)?.ok_or(StoreError::NoSuchUser)
    }

    pub fn user(&self, usu_hash: &str) -> Result<Option<UserRecord>, StoreError> {
        self.read(|c| user_by_hash(c, usu_hash))
    }

    pub fn users(&self) -> Result<Vec<UserRecord>, StoreError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("SELECT {USER_COLS} FROM tbl_usuarios ORDER BY usu_id"))?;
            let rows = stmt.query_map([], |r| Ok(user_from_row(r)))?;
            rows.map(|r| r?).collect()
        })
    }

    /// Creates a segment row with its flag pending.
    pub fn insert_segment(
        &self,
        owner_hash: &str,
        activity: ActivityClass,
        metrics: SegmentMetrics,
        first: NaiveDateTime,
        last: NaiveDateTime,
    ) -> Result<SegmentRecord, StoreError> {
        let conn = self.writer();
        if user_by_hash(&conn, owner_hash)?.is_none() {
            return Err(StoreError::NoSuchUser);
        }
        conn.execute(
            "INSERT INTO tbl_Segmento (seg_activity, seg_distance, seg_duration, seg_speed,
                                       seg_firsttime, seg_lasttime, usu_hash, seg_subido)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
            params![
                activity.as_str(),
                metrics.distance_m,
                metrics.duration_s,
                metrics.speed_kmh,
                first.format(DATETIME_FORMAT).to_string(),
                last.format(DATETIME_FORMAT).to_string(),
                owner_hash,
                PENDING,
            ],
        )?;
        let id = conn.last_insert_rowid();
        segment_by_id(&conn, id)?.ok_or(StoreError::NoSuchSegment(id))
    }

    /// Inserts all locations of a segment and flips its flag to uploaded,
    /// in one transaction. Any failing row rolls everything back. An empty
    /// list inserts nothing and leaves the flag pending.
    pub fn insert_locations(&self, seg_id: i64, locations: &[NewLocation]) -> Result<usize, StoreError> {
        let mut conn = self.writer();
        let tx = conn.transaction()?;
        if segment_by_id(&tx, seg_id)?.is_none() {
            return Err(StoreError::NoSuchSegment(seg_id));
        }
        {
            let mut stmt = tx.prepare_cached(
                "INSERT INTO tbl_Location (loc_power, seg_id, loc_latitude, loc_longitude, loc_time, loc_date)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            )?;
            for loc in locations {
                stmt.execute(params![
                    loc.power.map(|p| p.to_string()),
                    seg_id,
                    loc.latitude,
                    loc.longitude,
                    loc.time.format(TIME_FORMAT).to_string(),
                    loc.date.format(DATE_FORMAT).to_string(),
                ])?;
            }
        }
        if !locations.is_empty() {
            tx.execute("UPDATE tbl_Segmento SET seg_subido = ?1 WHERE seg_id = ?2", params![UPLOADED, seg_id])?;
        }
        tx.commit()?;
        Ok(locations.len())
    }

    /// Marks a segment uploaded; refuses when it has no locations.
    pub fn mark_uploaded(&self, seg_id: i64) -> Result<(), StoreError> {
        let conn = self.writer();
        if segment_by_id(&conn, seg_id)?.is_none() {
            return Err(StoreError::NoSuchSegment(seg_id));
        }
        let n: i64 =
            conn.query_row("SELECT COUNT(*) FROM tbl_Location WHERE seg_id = ?1", [seg_id], |r| r.get(0))?;
        if n == 0 {
            return Err(StoreError::NoLocations(seg_id));
        }
        conn.execute("UPDATE tbl_Segmento SET seg_subido = ?1 WHERE seg_id = ?2", params![UPLOADED, seg_id])?;
        Ok(())
    }

    /// Persists a whole segment recorded on `date` (the date of its first
    /// sample): segment row, then all locations atomically.
    pub fn store_segment(
        &self,
        owner_hash: &str,
        segment: &Segment,
        date: NaiveDate,
    ) -> Result<(SegmentRecord, usize), StoreError> {
        let mut day = date;
        let mut prev: Option<NaiveTime> = None;
        let locations: Vec<NewLocation> = segment
            .locations()
            .iter()
            .map(|s| {
                if prev.is_some_and(|p| s.time < p) {
                    day = day.succ_opt().unwrap_or(day);
                }
                prev = Some(s.time);
                NewLocation {
                    latitude: s.point.lat(),
                    longitude: s.point.lon(),
                    time: s.time,
                    date: day,
                    power: s.power,
                }
            })
            .collect();
        let first = date.and_time(segment.first_time());
        let last = day.and_time(segment.last_time());
        let seg = self.insert_segment(owner_hash, segment.activity(), segment.metrics(), first, last)?;
        let n = self.insert_locations(seg.seg_id, &locations)?;
        let seg = self.segment(seg.seg_id)?.ok_or(StoreError::NoSuchSegment(seg.seg_id))?;
        Ok((seg, n))
    }

    pub fn segment(&self, seg_id: i64) -> Result<Option<SegmentRecord>, StoreError> {
        self.read(|c| segment_by_id(c, seg_id))
    }

    pub fn segments(&self) -> Result<Vec<SegmentRecord>, StoreError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("SELECT {SEGMENT_COLS} FROM tbl_Segmento ORDER BY seg_id"))?;
            let rows = stmt.query_map([], |r| Ok(segment_from_row(r)))?;
            rows.map(|r| r?).collect()
        })
    }

    pub fn locations(&self, seg_id: i64) -> Result<Vec<LocationRecord>, StoreError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!(
                "SELECT {LOCATION_COLS} FROM tbl_Location WHERE seg_id = ?1 ORDER BY loc_id"
            ))?;
            let rows = stmt.query_map([seg_id], |r| Ok(location_from_row(r)))?;
            rows.map(|r| r?).collect()
        })
    }

    pub fn all_locations(&self) -> Result<Vec<LocationRecord>, StoreError> {
        self.read(|c| {
            let mut stmt = c.prepare(&format!("SELECT {LOCATION_COLS} FROM tbl_Location ORDER BY loc_id"))?;
            let rows = stmt.query_map([], |r| Ok(location_from_row(r)))?;
            rows.map(|r| r?).collect()
        })
    }

    pub fn location_count(&self) -> Result<usize, StoreError> {
        self.read(|c| {
            let n: i64 = c.query_row("SELECT COUNT(*) FROM tbl_Location", [], |r| r.get(0))?;
            Ok(n as usize)
        })
    }

    /// Distinct segment activity names, sorted.
    pub fn distinct_activities(&self) -> Result<Vec<String>, StoreError> {
        self.read(|c| {
            let mut stmt = c.prepare("SELECT DISTINCT seg_activity FROM tbl_Segmento ORDER BY seg_activity")?;
            let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
            Ok(rows.collect::<Result<_, _>>()?)
        })
    }

    /// Locations joined with their segment and user, filtered by age,
    /// activity and location date-time; ordered by segment then location.
    pub fn query_locations(&self, q: &LocationQuery, today: NaiveDate) -> Result<Vec<LocationRow>, StoreError> {
        q.validate()?;
        let activity = match &q.activity {
            ActivityFilter::All => None,
            ActivityFilter::Only(a) => Some(a.as_str()),
        };
        self.read(|c| {
            let mut stmt = c.prepare_cached(
                "SELECT a.loc_latitude, a.loc_longitude, a.loc_time, a.loc_date, b.seg_activity, b.seg_id, a.loc_id
                 FROM tbl_Location a
                 JOIN tbl_Segmento b ON a.seg_id = b.seg_id
                 JOIN tbl_usuarios d ON b.usu_hash = d.usu_hash
                 WHERE (?1 - CAST(substr(d.usu_nacimiento, 1, 4) AS INTEGER)) BETWEEN ?2 AND ?3
                   AND (?4 IS NULL OR b.seg_activity = ?4)
                   AND (a.loc_date || ' ' || a.loc_time) BETWEEN ?5 AND ?6
                 ORDER BY b.seg_id, a.loc_id",
            )?;
            let rows = stmt.query_map(
                params![
                    today.year(),
                    q.age_min,
                    q.age_max,
                    activity,
                    q.from.format(DATETIME_FORMAT).to_string(),
                    q.to.format(DATETIME_FORMAT).to_string(),
                ],
                |r| {
                    Ok((|| {
                        Ok(LocationRow {
                            lat: r.get(0)?,
                            lon: r.get(1)?,
                            time: parse_time(&r.get::<_, String>(2)?)?,
                            date: parse_date(&r.get::<_, String>(3)?)?,
                            activity: r.get(4)?,
                            seg_id: r.get(5)?,
                            loc_id: r.get(6)?,
                        })
                    })())
                },
            )?;
            rows.map(|r| r?).collect()
        })
    }
}

/// Loads every segment of a segment file for one user.
pub fn load_segment_file(
    store: &Store,
    text: &str,
    owner_hash: &str,
    date: NaiveDate,
) -> Result<Vec<SegmentRecord>, StoreError> {
    parse_segments(text)?
        .iter()
        .map(|p| store.store_segment(owner_hash, &p.segment, date).map(|(s, _)| s))
        .collect()
}

const USER_COLS: &str = "usu_id, usu_hash, usu_regid, usu_nombre, usu_apellido, usu_peso, \
                         usu_nacimiento, usu_genero, usu_mail";
const SEGMENT_COLS: &str = "seg_id, seg_activity, seg_distance, seg_duration, seg_speed, \
                            seg_firsttime, seg_lasttime, usu_hash, seg_subido";
const LOCATION_COLS: &str = "loc_id, loc_power, seg_id, loc_latitude, loc_longitude, loc_time, loc_date";

fn parse_date(s: &str) -> Result<NaiveDate, StoreError> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|_| StoreError::Corrupt(format!("date `{s}`")))
}

fn parse_time(s: &str) -> Result<NaiveTime, StoreError> {
    NaiveTime::parse_from_str(s, TIME_FORMAT).map_err(|_| StoreError::Corrupt(format!("time `{s}`")))
}

fn parse_datetime(s: &str) -> Result<NaiveDateTime, StoreError> {
    NaiveDateTime::parse_from_str(s, DATETIME_FORMAT)
        .map_err(|_| StoreError::Corrupt(format!("timestamp `{s}`")))
}

fn user_by_hash(conn: &Connection, hash: &str) -> Result<Option<UserRecord>, StoreError> {
    conn.query_row(
        &format!("SELECT {USER_COLS} FROM tbl_usuarios WHERE usu_hash = ?1"),
        [hash],
        |r| Ok(user_from_row(r)),
    )
    .optional()?
    .transpose()
}

fn segment_by_id(conn: &Connection, id: i64) -> Result<Option<SegmentRecord>, StoreError> {
    conn.query_row(
        &format!("SELECT {SEGMENT_COLS} FROM tbl_Segmento WHERE seg_id = ?1"),
        [id],
        |r| Ok(segment_from_row(r)),
    )
    .optional()?
    .transpose()
}

fn user_from_row(r: &Row<'_>) -> Result<UserRecord, StoreError> {
    Ok(UserRecord {
        usu_id: r.get(0)?,
        usu_hash: r.get(1)?,
        usu_regid: r.get(2)?,
        usu_nombre: r.get(3)?,
        usu_apellido: r.get(4)?,
        usu_peso: r.get(5)?,
        usu_nacimiento: parse_date(&r.get::<_, String>(6)?)?,
        usu_genero: r.get(7)?,
        usu_mail: r.get(8)?,
    })
}

fn segment_from_row(r: &Row<'_>) -> Result<SegmentRecord, StoreError> {
    Ok(SegmentRecord {
        seg_id: r.get(0)?,
        seg_activity: r.get(1)?,
        seg_distance: r.get(2)?,
        seg_duration: r.get(3)?,
        seg_speed: r.get(4)?,
        seg_firsttime: parse_datetime(&r.get::<_, String>(5)?)?,
        seg_lasttime: parse_datetime(&r.get::<_, String>(6)?)?,
        usu_hash: r.get(7)?,
        seg_subido: r.get(8)?,
    })
}

fn location_from_row(r: &Row<'_>) -> Result<LocationRecord, StoreError> {
    Ok(LocationRecord {
        loc_id: r.get(0)?,
        loc_power: r.get(1)?,
        seg_id: r.get(2)?,
        loc_latitude: r.get(3)?,
        loc_longitude: r.get(4)?,
        loc_time: parse_time(&r.get::<_, String>(5)?)?,
        loc_date: parse_date(&r.get::<_, String>(6)?)?,
    })
}
