//! Acceptance run: one PASS/FAIL line per criterion.

#[path = "../../core/tests/support/mod.rs"]
mod support;
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{client_config, prefs_dir, LiveServer};
use mobility_core::activity::{classify_window, silence_transition, ActivitySample, RingerMode};
use mobility_core::crypto::{bench_decrypt_ops, decrypt_field, encrypt_field, generate_keypair, CryptoError};
use mobility_core::model::{parse_power_string, parse_segment, ActivityClass, SegmentMetrics, SEGMENT_KEYS};
use mobility_core::store::UPLOADED;
use mobility_core::traffic::{parse_sections_csv, parse_state_feed};
use mobsim::{prepare, run_upload, Preferences};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::oracles::{brute_force_mode, brute_force_query, mode, query_fixture, random_query, stored, SILENCE_TABLE};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn segment_arithmetic() -> Outcome {
    let t0 = Instant::now();
    let speed = SegmentMetrics::speed_for(49.69776445992602, 142);
    let elapsed = t0.elapsed();
    let err = rel(speed, 1.2599432);
    ensure!(err < 1e-5, "speed {speed} km/h, relative error {err:e}");
    ensure!(elapsed < Duration::from_millis(1), "took {elapsed:?}");
    Ok(format!("speed {speed:.7} km/h, relative error {err:.1e}, {elapsed:?}"))
}

fn golden_parse() -> Outcome {
    let p = parse_segment(support::ON_FOOT_SEGMENT).map_err(|e| e.to_string())?;
    ensure!(p.keys() == &SEGMENT_KEYS[..], "key set {:?}", p.keys());
    let text = p.to_json();
    ensure!(text.contains(r#""speed (Km\\h)": 1.2599432"#), "speed key or value not preserved");
    let again = parse_segment(&text).map_err(|e| e.to_string())?;
    ensure!(again.segment == p.segment && again.stored == p.stored, "on_foot segment changed in round trip");
    ensure!(again.to_json() == text, "on_foot re-serialization not byte-identical");

    let w = parse_segment(support::POWER_SEGMENT).map_err(|e| e.to_string())?;
    ensure!(w.has_power(), "power layout not detected");
    let powers: Vec<String> = w.segment.locations().iter().map(|l| l.power.unwrap().to_string()).collect();
    ensure!(powers[0] == "-105V-55" && powers[1] == "-85V-200", "powers {powers:?}");
    let text = w.to_json();
    let again = parse_segment(&text).map_err(|e| e.to_string())?;
    ensure!(again.segment == w.segment && again.keys() == w.keys(), "power segment changed in round trip");
    ensure!(again.to_json() == text, "power re-serialization not byte-identical");
    for s in ["-105V-55", "-85V-200"] {
        let back = parse_power_string(s).map_err(|e| e.to_string())?.to_string();
        ensure!(back == s, "{s} came back as {back}");
    }
    Ok(format!("{} + {} samples round-trip byte-identical", p.segment.locations().len(), w.segment.locations().len()))
}

fn feed_fixture() -> Outcome {
    let feed = parse_state_feed(support::STATE_FEED);
    ensure!(feed.states.len() == 16, "{} states", feed.states.len());
    ensure!(feed.warnings.is_empty(), "warnings {:?}", feed.warnings);
    let s = &feed.states[0];
    ensure!((s.section_id, s.current, s.predicted_15min) == (1, 4, 3), "line 1 gave {s:?}");
    let table = parse_sections_csv(support::SECTIONS_CSV);
    let tram1 = table.sections.iter().find(|t| t.section_id() == 1).ok_or("no section 1")?;
    let p = tram1.path()[0];
    ensure!((p.lat(), p.lon()) == (41.3841912394771, 2.11203535639414), "first point {p:?}");
    Ok("16 states, line 1 = (1, 4, 3), section 1 starts at (41.3841912394771, 2.11203535639414)".into())
}

fn crypto() -> Outcome {
    let k2 = generate_keypair(2048).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(2048);
    for i in 0..1000 {
        let len = match i {
            0 => 0,
            1 => 245,
            _ => rng.gen_range(0..=245),
        };
        let plain: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let field = encrypt_field(&plain, k2.public_der()).map_err(|e| format!("encrypt {len} bytes: {e}"))?;
        ensure!(field.as_str().len() == 512, "ciphertext hex length {}", field.as_str().len());
        let back = decrypt_field(&field, &k2).map_err(|e| format!("decrypt {len} bytes: {e}"))?;
        ensure!(back == plain, "round trip {i} ({len} bytes) differs");
    }
    match encrypt_field(&[0u8; 246], k2.public_der()) {
        Err(CryptoError::FieldTooLong { len: 246, max: 245 }) => {}
        other => return Err(format!("246 bytes gave {other:?}")),
    }
    let k4 = generate_keypair(4096).map_err(|e| e.to_string())?;
    let ops = 200;
    let m2 = bench_decrypt_ops(&k2, ops).mean_latency().ok_or("no 2048 samples")?;
    let m4 = bench_decrypt_ops(&k4, ops).mean_latency().ok_or("no 4096 samples")?;
    let ratio = m4.as_secs_f64() / m2.as_secs_f64();
    ensure!(ratio >= 2.0, "4096/2048 mean decrypt ratio {ratio:.2} ({m4:?} vs {m2:?})");
    Ok(format!("1000 round trips, 246 bytes rejected, mean decrypt {m2:?} vs {m4:?} over {ops} ops, ratio {ratio:.2}"))
}

fn lat_lon_multiset(csv: &str) -> BTreeMap<(u64, u64), usize> {
    let mut m = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let lat: f64 = f[2].parse().unwrap();
        let lon: f64 = f[3].parse().unwrap();
        *m.entry((lat.to_bits(), lon.to_bits())).or_insert(0) += 1;
    }
    m
}

fn end_to_end() -> Outcome {
    let t0 = Instant::now();
    let server = LiveServer::fresh(2048);
    let (_d, dir) = prefs_dir();
    let cfg = client_config(&server.url, &dir, 20150601, None);
    let prepared = prepare(&cfg).map_err(|e| e.to_string())?;
    let mut prefs = Preferences::open(&cfg.prefs_path).map_err(|e| e.to_string())?;
    let client = server.client();
    let report = run_upload(&cfg, &prepared, &mut prefs, &client).map_err(|e| e.to_string())?;

    let envelopes: Vec<String> = std::iter::once(&report.registration)
        .chain(report.segments.iter().map(|s| &s.outcome))
        .map(|o| serde_json::to_string(o).unwrap())
        .collect();
    let expected = r#"{"success":1,"message":"Inserted"}"#;
    ensure!(envelopes.iter().all(|e| e == expected), "envelopes {envelopes:?}");

    let store = &server.state().store;
    let generated = prepared.samples.len();
    let stored_rows = store.location_count().map_err(|e| e.to_string())?;
    ensure!(stored_rows == generated, "stored {stored_rows} rows, generated {generated}");
    let segs = store.segments().map_err(|e| e.to_string())?;
    ensure!(segs.len() == prepared.segments.len(), "{} segments stored, {} planned", segs.len(), prepared.segments.len());
    ensure!(segs.iter().all(|s| s.seg_subido == UPLOADED), "segment flags {:?}", segs.iter().map(|s| &s.seg_subido).collect::<Vec<_>>());

    let params = [("age_min", "14"), ("age_max", "99"), ("activity", "All"), ("from", "2015-06-01"), ("to", "2015-06-01"), ("format", "csv")];
    let first = lat_lon_multiset(&client.query(&params).map_err(|e| e.to_string())?);
    let second = lat_lon_multiset(&client.query(&params).map_err(|e| e.to_string())?);
    ensure!(first == second, "query results differ between runs");
    let mut truth = BTreeMap::new();
    for s in &prepared.samples {
        *truth.entry((s.location.point.lat().to_bits(), s.location.point.lon().to_bits())).or_insert(0) += 1;
    }
    ensure!(first == truth, "queried (lat, lon) multiset differs from the generated trace");
    drop(server);
    let elapsed = t0.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{generated} samples, {} segments OK, {} envelopes Inserted, {elapsed:.2?}", segs.len(), envelopes.len()))
}

fn oracle_suites() -> Outcome {
    let base = ActivityClass::BASE;
    for n in 0..5usize.pow(6) {
        let window: Vec<ActivityClass> = (0..6).map(|i| base[n / 5usize.pow(i) % 5]).collect();
        let samples: Vec<ActivitySample> =
            window.iter().enumerate().map(|(i, a)| ActivitySample::new(*a, 80, 20 * i as i64).unwrap()).collect();
        let got = classify_window(&samples);
        let want = brute_force_mode(&window);
        ensure!(got == want, "window {window:?}: {got} vs {want}");
    }
    for ((cur, st, vehicle, on), want) in SILENCE_TABLE {
        let detected = if vehicle { ActivityClass::Vehicle } else { ActivityClass::OnFoot };
        let (m, s) = silence_transition(mode(cur), stored(st), detected, on);
        let got = (m.code(), RingerMode::stored_code(s));
        ensure!(got == want, "silence case {:?}: {got:?} vs {want:?}", (cur, st, vehicle, on));
    }
    let fx = query_fixture(7);
    let rows = fx.store.location_count().map_err(|e| e.to_string())?;
    ensure!(rows == 200, "fixture has {rows} rows");
    let mut rng = StdRng::seed_from_u64(11);
    for i in 0..100 {
        let q = random_query(&mut rng);
        let got = fx.store.query_locations(&q, fx.today).map_err(|e| e.to_string())?;
        ensure!(got == brute_force_query(&fx, &q), "query {i} {q:?} differs from brute force");
    }
    Ok(format!("{} windows, {} silence cases, 100 queries over 200 rows", 5usize.pow(6), SILENCE_TABLE.len()))
}

fn envelope_bits() -> Outcome {
    let server = LiveServer::fresh(2048);
    let agent = ureq::Agent::config_builder().http_status_as_error(false).build().new_agent();
    let post = |path: &str, fields: &[(&str, &str)]| -> Result<String, String> {
        let mut r = agent.post(format!("{}{path}", server.url)).send_form(fields.iter().copied()).map_err(|e| e.to_string())?;
        r.body_mut().read_to_string().map_err(|e| e.to_string())
    };
    let der = server.client().public_key().map_err(|e| e.to_string())?;
    let enc = |s: &str| encrypt_field(s.as_bytes(), &der).map(|c| c.as_str().to_string()).map_err(|e| e.to_string());

    let inserted = post("/register", &[("usu_hash_enc", &enc("envelopeuser")?), ("reg_id_enc", &enc("regid-1")?)])?;
    ensure!(inserted == r#"{"success":1,"message":"Inserted"}"#, "register gave {inserted}");
    let missing = post("/register", &[("usu_hash_enc", &enc("envelopeuser")?)])?;
    ensure!(missing == r#"{"success":0,"message":"Required field(s) is missing"}"#, "missing field gave {missing}");
    let segment = r#"{"activity":"still","location":[41.0,2.0,"10:00:00",41.0,2.0,"10:00:20"]}"#;
    let oops = post("/segments", &[("usu_hash_enc", &enc("nobody")?), ("segment", segment)])?;
    ensure!(oops == r#"{"success":0,"message":"Oops! An error occurred."}"#, "unknown user gave {oops}");
    Ok("Inserted / Required field(s) is missing / Oops! An error occurred.".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("segment arithmetic", segment_arithmetic),
        ("golden parse", golden_parse),
        ("feed fixture", feed_fixture),
        ("crypto", crypto),
        ("end-to-end upload", end_to_end),
        ("oracle suites", oracle_suites),
        ("envelope bit-exactness", envelope_bits),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
