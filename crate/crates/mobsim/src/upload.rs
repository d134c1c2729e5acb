//! The client flow: identity, registration, segmentation, silence mode and
//! encrypted segment upload.

use chrono::NaiveDate;
use mobility_core::activity::RingerMode;
use mobility_core::crypto::PublicKey;
use mobility_core::model::{serialize_segment, ActivityClass, ParsedSegment};
use mobility_core::store::DATE_FORMAT;
use rand::distributions::{Alphanumeric, DistString};
use serde::Serialize;

use crate::client::{Client, ClientError, Envelope};
use crate::config::{ClientConfig, ConfigError, Profile};
use crate::prefs::{self, Preferences, PrefsError};
use crate::segmenter::{apply_silence, build_segments, decide_windows, PlannedSegment, RingerEvent, SilenceState, WindowDecision};
use crate::trace::{generate_trace, sample_date, TraceSample, TraceSpec};

pub const USER_HASH_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Prefs(#[from] PrefsError),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
    #[error("segmentation failed: {0}")]
    Segments(#[from] mobility_core::model::ModelError),
}

/// A generated and segmented trace.
#[derive(Debug, Clone)]
pub struct PreparedTrace {
    pub spec: TraceSpec,
    pub samples: Vec<TraceSample>,
    pub windows: Vec<WindowDecision>,
    pub segments: Vec<PlannedSegment>,
}

impl PreparedTrace {
    pub fn segment_date(&self, seg: &PlannedSegment) -> NaiveDate {
        sample_date(&self.spec, seg.first_offset_s)
    }

    /// The trace as a segment file, `{"segments": [...]}`.
    pub fn to_segment_file(&self) -> String {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| serialize_segment(&s.segment, true).expect("generated samples carry power"))
            .collect();
        format!("{{\"segments\": [\n{}\n]}}\n", parts.join(",\n"))
    }
}

pub fn prepare(config: &ClientConfig) -> Result<PreparedTrace, SetupError> {
    let spec = config.trace_spec()?;
    let samples = generate_trace(&spec)?;
    let windows = decide_windows(
        &samples,
        spec.sample_interval_s,
        &config.poi_index()?,
        &config.route_oracle()?,
        &Default::default(),
    );
    let segments = build_segments(&samples, &windows)?;
    Ok(PreparedTrace { spec, samples, windows, segments })
}

/// Result of one request.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Envelope(Envelope),
    Error { error: String },
}

impl Outcome {
    fn from_result(r: Result<Envelope, ClientError>) -> Self {
        match r {
            Ok(e) => Outcome::Envelope(e),
            Err(e) => Outcome::Error { error: e.to_string() },
        }
    }

    fn error(e: impl ToString) -> Self {
        Outcome::Error { error: e.to_string() }
    }

    pub fn is_inserted(&self) -> bool {
        matches!(self, Outcome::Envelope(e) if e.is_inserted())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentOutcome {
    pub activity: ActivityClass,
    pub samples: usize,
    pub date: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UploadReport {
    pub server: String,
    pub generated_samples: usize,
    pub uploaded_samples: usize,
    pub registration: Outcome,
    pub segments: Vec<SegmentOutcome>,
    pub ringer: Vec<RingerEvent>,
}

impl UploadReport {
    pub fn all_inserted(&self) -> bool {
        self.registration.is_inserted() && self.segments.iter().all(|s| s.outcome.is_inserted())
    }

    /// 0 when everything was inserted, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_inserted() {
            0
        } else {
            1
        }
    }
}

/// The persisted user hash, created on first use.
pub fn user_hash(prefs: &mut Preferences) -> Result<String, PrefsError> {
    let existing = prefs.get_string(prefs::USER_HASH, "");
    if !existing.is_empty() {
        return Ok(existing);
    }
    let hash = Alphanumeric.sample_string(&mut rand::thread_rng(), USER_HASH_LEN);
    prefs.put_string(prefs::USER_HASH, hash.clone());
    prefs.commit()?;
    Ok(hash)
}

/// The stored registration id when it was obtained by this app version,
/// otherwise a fresh one from the broker.
pub fn registration_id(prefs: &mut Preferences, client: &Client, app_version: u32) -> Result<String, ClientError> {
    let stored = prefs.get_string(prefs::REG_ID, "");
    let version = prefs.get_int(prefs::APP_VERSION, i32::MIN);
    if !stored.is_empty() && i64::from(version) == i64::from(app_version) {
        return Ok(stored);
    }
    let regid = client.issue_regid()?;
    prefs.put_string(prefs::REG_ID, regid.clone());
    prefs.put_int(prefs::APP_VERSION, app_version as i32);
    prefs.commit().map_err(|e| ClientError::Transport(format!("saving preferences: {e}")))?;
    Ok(regid)
}

pub fn silence_state(prefs: &Preferences, feature_on: bool) -> SilenceState {
    let ringer = RingerMode::from_code(prefs.get_int(prefs::RINGER_MODE, RingerMode::Normal.code()))
        .unwrap_or(RingerMode::Normal);
    let stored = RingerMode::from_stored_code(prefs.get_int(prefs::PREVIOUS_RINGER, RingerMode::stored_code(None)))
        .unwrap_or(None);
    SilenceState { feature_on, ringer, stored }
}

fn save_silence(prefs: &mut Preferences, state: &SilenceState) -> Result<(), PrefsError> {
    prefs.put_string(prefs::SILENCE, if state.feature_on { "ON" } else { "OFF" });
    prefs.put_int(prefs::RINGER_MODE, state.ringer.code());
    prefs.put_int(prefs::PREVIOUS_RINGER, RingerMode::stored_code(state.stored));
    prefs.commit()
}

fn encrypt(key: &PublicKey, text: &str) -> Result<String, String> {
    key.encrypt_field(text.as_bytes()).map(|c| c.as_str().to_string()).map_err(|e| e.to_string())
}

fn registration_form(key: &PublicKey, hash: &str, regid: &str, profile: Option<&Profile>, app_version: u32) -> Result<Vec<(&'static str, String)>, String> {
    let mut fields = vec![
        ("usu_hash_enc", encrypt(key, hash)?),
        ("reg_id_enc", encrypt(key, regid)?),
        ("app_version", app_version.to_string()),
    ];
    if let Some(p) = profile {
        let plain = [
            ("nombre_enc", p.name.clone()),
            ("apellido_enc", p.surname.clone()),
            ("peso_enc", p.weight.map(|w| w.to_string())),
            ("nacimiento_enc", p.birthdate.map(|d| d.format(DATE_FORMAT).to_string())),
            ("genero_enc", p.gender.clone()),
            ("mail_enc", p.mail.clone()),
        ];
        for (name, value) in plain {
            if let Some(v) = value {
                fields.push((name, encrypt(key, &v)?));
            }
        }
    }
    Ok(fields)
}

/// Encrypts and posts a registration request.
pub fn register(
    client: &Client,
    key: &PublicKey,
    hash: &str,
    regid: &str,
    profile: Option<&Profile>,
    app_version: u32,
) -> Outcome {
    match registration_form(key, hash, regid, profile, app_version) {
        Ok(fields) => {
            let borrowed: Vec<(&str, &str)> = fields.iter().map(|(k, v)| (*k, v.as_str())).collect();
            Outcome::from_result(client.register(&borrowed))
        }
        Err(e) => Outcome::error(format!("encryption failed: {e}")),
    }
}

struct UploadItem {
    activity: ActivityClass,
    samples: usize,
    date: NaiveDate,
    json: Result<String, String>,
}

/// Generates, segments and uploads the configured trace. Silence mode runs
/// locally first, so the ringer timeline is reported even when the server
/// is unreachable.
pub fn run_upload(
    config: &ClientConfig,
    prepared: &PreparedTrace,
    prefs: &mut Preferences,
    client: &Client,
) -> Result<UploadReport, SetupError> {
    let mut state = silence_state(prefs, config.silence_feature);
    let mut save_error = None;
    let ringer = apply_silence(&mut state, &prepared.samples, &prepared.windows, |s| {
        if let Err(e) = save_silence(prefs, s) {
            save_error.get_or_insert(e);
        }
    });
    if let Some(e) = save_error {
        return Err(e.into());
    }
    let items = prepared
        .segments
        .iter()
        .map(|s| UploadItem {
            activity: s.segment.activity(),
            samples: s.segment.locations().len(),
            date: prepared.segment_date(s),
            json: serialize_segment(&s.segment, true).map_err(|e| e.to_string()),
        })
        .collect();
    upload(config, prefs, client, items, prepared.samples.len(), ringer)
}

/// Uploads segments read from a segment file, all dated `date`.
pub fn run_upload_file(
    config: &ClientConfig,
    segments: &[ParsedSegment],
    date: NaiveDate,
    prefs: &mut Preferences,
    client: &Client,
) -> Result<UploadReport, SetupError> {
    let items = segments
        .iter()
        .map(|p| UploadItem {
            activity: p.segment.activity(),
            samples: p.segment.locations().len(),
            date,
            json: Ok(p.to_json()),
        })
        .collect();
    let total = segments.iter().map(|p| p.segment.locations().len()).sum();
    upload(config, prefs, client, items, total, Vec::new())
}

fn upload(
    config: &ClientConfig,
    prefs: &mut Preferences,
    client: &Client,
    items: Vec<UploadItem>,
    generated_samples: usize,
    ringer: Vec<RingerEvent>,
) -> Result<UploadReport, SetupError> {
    let hash = user_hash(prefs)?;
    let key = client
        .public_key()
        .and_then(|der| PublicKey::from_der(&der).map_err(|e| ClientError::Decode(e.to_string())));

    let (registration, hash_enc) = match &key {
        Ok(key) => {
            let reg = match registration_id(prefs, client, config.app_version) {
                Ok(regid) => register(client, key, &hash, &regid, config.profile.as_ref(), config.app_version),
                Err(e) => Outcome::error(e),
            };
            (reg, encrypt(key, &hash))
        }
        Err(e) => (Outcome::error(e), Err(format!("public key unavailable: {e}"))),
    };

    let mut uploaded_samples = 0;
    let segments = items
        .into_iter()
        .map(|item| {
            let outcome = match (&hash_enc, &item.json) {
                (Ok(h), Ok(json)) => {
                    Outcome::from_result(client.upload_segment(h, json, &item.date.format(DATE_FORMAT).to_string()))
                }
                (Err(e), _) | (_, Err(e)) => Outcome::error(e),
            };
            if outcome.is_inserted() {
                uploaded_samples += item.samples;
            }
            SegmentOutcome {
                activity: item.activity,
                samples: item.samples,
                date: item.date.format(DATE_FORMAT).to_string(),
                outcome,
            }
        })
        .collect();
    Ok(UploadReport {
        server: client.base_url().to_string(),
        generated_samples,
        uploaded_samples,
        registration,
        segments,
        ringer,
    })
}
