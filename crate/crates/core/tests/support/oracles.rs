//! Brute-force reference implementations and hand tables.

use std::collections::HashMap;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime};
use mobility_core::activity::RingerMode;
use mobility_core::model::{ActivityClass, SegmentMetrics};
use mobility_core::store::{
    ActivityFilter, LocationQuery, LocationRow, NewLocation, Store, UserProfile,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Mode of a uniform-confidence window by explicit counting; ties go to
/// the class listed first.
pub fn brute_force_mode(window: &[ActivityClass]) -> ActivityClass {
    const ORDER: [ActivityClass; 5] = [
        ActivityClass::Still,
        ActivityClass::OnFoot,
        ActivityClass::Bicycle,
        ActivityClass::Vehicle,
        ActivityClass::Unknown,
    ];
    let mut best = ActivityClass::Unknown;
    let mut best_count = 0;
    for class in ORDER {
        let count = window.iter().filter(|c| **c == class).count();
        if count > best_count {
            best = class;
            best_count = count;
        }
    }
    best
}

/// Every silence-mode case as (current, stored, vehicle?, feature) ->
/// (mode, stored). Codes: 0 silent, 1 vibrate, 2 normal, 5 nothing stored.
pub const SILENCE_TABLE: [((i32, i32, bool, bool), (i32, i32)); 48] = [
    // feature off: nothing moves
    ((0, 5, true, false), (0, 5)),
    ((0, 0, true, false), (0, 0)),
    ((0, 1, true, false), (0, 1)),
    ((0, 2, true, false), (0, 2)),
    ((1, 5, true, false), (1, 5)),
    ((1, 0, true, false), (1, 0)),
    ((1, 1, true, false), (1, 1)),
    ((1, 2, true, false), (1, 2)),
    ((2, 5, true, false), (2, 5)),
    ((2, 0, true, false), (2, 0)),
    ((2, 1, true, false), (2, 1)),
    ((2, 2, true, false), (2, 2)),
    ((0, 5, false, false), (0, 5)),
    ((0, 0, false, false), (0, 0)),
    ((0, 1, false, false), (0, 1)),
    ((0, 2, false, false), (0, 2)),
    ((1, 5, false, false), (1, 5)),
    ((1, 0, false, false), (1, 0)),
    ((1, 1, false, false), (1, 1)),
    ((1, 2, false, false), (1, 2)),
    ((2, 5, false, false), (2, 5)),
    ((2, 0, false, false), (2, 0)),
    ((2, 1, false, false), (2, 1)),
    ((2, 2, false, false), (2, 2)),
    // vehicle: save the current mode if the slot is empty, then silence
    ((0, 5, true, true), (0, 0)),
    ((0, 0, true, true), (0, 0)),
    ((0, 1, true, true), (0, 1)),
    ((0, 2, true, true), (0, 2)),
    ((1, 5, true, true), (0, 1)),
    ((1, 0, true, true), (0, 0)),
    ((1, 1, true, true), (0, 1)),
    ((1, 2, true, true), (0, 2)),
    ((2, 5, true, true), (0, 2)),
    ((2, 0, true, true), (0, 0)),
    ((2, 1, true, true), (0, 1)),
    ((2, 2, true, true), (0, 2)),
    // anything else: restore the saved mode if any, clear the slot
    ((0, 5, false, true), (0, 5)),
    ((0, 0, false, true), (0, 5)),
    ((0, 1, false, true), (1, 5)),
    ((0, 2, false, true), (2, 5)),
    ((1, 5, false, true), (1, 5)),
    ((1, 0, false, true), (0, 5)),
    ((1, 1, false, true), (1, 5)),
    ((1, 2, false, true), (2, 5)),
    ((2, 5, false, true), (2, 5)),
    ((2, 0, false, true), (0, 5)),
    ((2, 1, false, true), (1, 5)),
    ((2, 2, false, true), (2, 5)),
];

pub fn mode(code: i32) -> RingerMode {
    RingerMode::from_code(code).expect("valid ringer code")
}

pub fn stored(code: i32) -> Option<RingerMode> {
    RingerMode::from_stored_code(code).expect("valid stored code")
}

/// A store populated with exactly 200 location rows spread over users of
/// different birth years, several activities and dates.
pub struct QueryFixture {
    pub store: Store,
    pub today: NaiveDate,
    pub births: HashMap<String, NaiveDate>,
}

const ACTIVITIES: [ActivityClass; 6] = [
    ActivityClass::Still,
    ActivityClass::OnFoot,
    ActivityClass::Bicycle,
    ActivityClass::Vehicle,
    ActivityClass::Bus,
    ActivityClass::Metro,
];

pub fn query_fixture(seed: u64) -> QueryFixture {
    let mut rng = StdRng::seed_from_u64(seed);
    let store = Store::open_in_memory().expect("in-memory store");
    let today = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
    let mut births = HashMap::new();
    let mut users = Vec::new();
    for i in 0..8 {
        let hash = format!("user{i:02}");
        let profile = if i == 0 {
            UserProfile::default()
        } else {
            let birth = NaiveDate::from_ymd_opt(rng.gen_range(1930..=2001), rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap();
            UserProfile { nacimiento: Some(birth), ..Default::default() }
        };
        let rec = store.upsert_user(&hash, "regid", &profile).unwrap();
        births.insert(hash.clone(), rec.usu_nacimiento);
        users.push(hash);
    }
    let mut remaining = 200usize;
    while remaining > 0 {
        let n = rng.gen_range(1..=12).min(remaining);
        let owner = &users[rng.gen_range(0..users.len())];
        let activity = ACTIVITIES[rng.gen_range(0..ACTIVITIES.len())];
        let date = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap() + Duration::days(rng.gen_range(0..30));
        let mut t = NaiveTime::from_hms_opt(rng.gen_range(0..23), rng.gen_range(0..60), 0).unwrap();
        let mut locs = Vec::new();
        for _ in 0..n {
            locs.push(NewLocation {
                latitude: 41.3 + rng.gen_range(0.0..0.2),
                longitude: 2.1 + rng.gen_range(0.0..0.1),
                time: t,
                date,
                power: None,
            });
            t = t.overflowing_add_signed(Duration::seconds(20)).0.min(NaiveTime::from_hms_opt(23, 59, 59).unwrap());
        }
        let first = date.and_time(locs[0].time);
        let last = date.and_time(locs[n - 1].time);
        let metrics = SegmentMetrics { distance_m: 0.0, duration_s: 0, speed_kmh: 0.0 };
        let seg = store.insert_segment(owner, activity, metrics, first, last).unwrap();
        store.insert_locations(seg.seg_id, &locs).unwrap();
        remaining -= n;
    }
    QueryFixture { store, today, births }
}

pub fn random_query(rng: &mut impl Rng) -> LocationQuery {
    let a = rng.gen_range(0..=130u32);
    let b = rng.gen_range(0..=130u32);
    let activity = match rng.gen_range(0..8) {
        0 | 1 => ActivityFilter::All,
        7 => ActivityFilter::Only("train".into()),
        i => ActivityFilter::Only(ACTIVITIES[i - 2].as_str().to_string()),
    };
    let base = NaiveDate::from_ymd_opt(2015, 5, 25).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let x = base + Duration::seconds(rng.gen_range(0..45 * 86_400));
    let y = base + Duration::seconds(rng.gen_range(0..45 * 86_400));
    LocationQuery { age_min: a.min(b), age_max: a.max(b), activity, from: x.min(y), to: x.max(y) }
}

/// Filters every stored row in memory.
pub fn brute_force_query(fx: &QueryFixture, q: &LocationQuery) -> Vec<LocationRow> {
    let segments: HashMap<i64, _> =
        fx.store.segments().unwrap().into_iter().map(|s| (s.seg_id, s)).collect();
    let mut rows: Vec<LocationRow> = fx
        .store
        .all_locations()
        .unwrap()
        .into_iter()
        .filter_map(|l| {
            let seg = &segments[&l.seg_id];
            let age = i64::from(fx.today.year()) - i64::from(fx.births[&seg.usu_hash].year());
            let at: NaiveDateTime = l.loc_date.and_time(l.loc_time);
            let keep = age >= i64::from(q.age_min)
                && age <= i64::from(q.age_max)
                && q.activity.matches(&seg.seg_activity)
                && at >= q.from
                && at <= q.to;
            keep.then(|| LocationRow {
                lat: l.loc_latitude,
                lon: l.loc_longitude,
                time: l.loc_time,
                date: l.loc_date,
                activity: seg.seg_activity.clone(),
                seg_id: l.seg_id,
                loc_id: l.loc_id,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.seg_id, r.loc_id));
    rows
}
