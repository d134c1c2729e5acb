//! Synthetic mobility client: seeded trace generation, activity
//! segmentation with silence mode, encrypted upload and load testing.

pub mod client;
pub mod config;
pub mod loadtest;
pub mod prefs;
pub mod segmenter;
pub mod trace;
pub mod upload;

pub use client::{Client, ClientError, Envelope};
pub use config::{ClientConfig, ConfigError, Profile};
pub use loadtest::{load_test, LoadTestError, LoadTestPlan, LoadTestReport};
pub use prefs::Preferences;
pub use trace::{generate_trace, Leg, TraceSample, TraceSpec};
pub use upload::{prepare, run_upload, run_upload_file, PreparedTrace, UploadReport};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARTIAL_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
}
