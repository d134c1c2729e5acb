//! Fixed-cadence encrypted registration load against a running server.

use std::time::{Duration, Instant};

use mobility_core::crypto::PublicKey;
use serde::Serialize;
use thiserror::Error;

use crate::client::{Client, ClientError, ServerStats};
use crate::upload::{register, Outcome};

#[derive(Debug, Error)]
pub enum LoadTestError {
    #[error("server key is {actual} bits, expected {expected}")]
    KeyBits { expected: usize, actual: usize },
    #[error("period must be positive")]
    ZeroPeriod,
    #[error(transparent)]
    Client(#[from] ClientError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencySummary {
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    /// `None` for an empty sample.
    pub fn of(latencies_ms: &[f64]) -> Option<Self> {
        if latencies_ms.is_empty() {
            return None;
        }
        let mut v = latencies_ms.to_vec();
        v.sort_by(f64::total_cmp);
        // nearest-rank percentile
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(LatencySummary {
            min_ms: v[0],
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p50_ms: rank(0.5),
            p95_ms: rank(0.95),
            max_ms: v[v.len() - 1],
        })
    }
}

/// Difference of the server counters over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServerDelta {
    pub cpu_s: f64,
    pub requests: u64,
    pub decrypt_ops: u64,
    pub decrypt_cpu_s: f64,
    pub decrypt_wall_s: f64,
    /// Mean wall time of one server-side decryption.
    pub mean_decrypt_ms: Option<f64>,
}

impl ServerDelta {
    pub fn between(before: &ServerStats, after: &ServerStats) -> Self {
        let decrypt_ops = after.decrypt_ops.saturating_sub(before.decrypt_ops);
        let decrypt_wall_s = after.decrypt_wall_s - before.decrypt_wall_s;
        ServerDelta {
            cpu_s: after.process_cpu_s - before.process_cpu_s,
            requests: after.requests.saturating_sub(before.requests),
            decrypt_ops,
            decrypt_cpu_s: after.decrypt_cpu_s - before.decrypt_cpu_s,
            decrypt_wall_s,
            mean_decrypt_ms: (decrypt_ops > 0).then(|| decrypt_wall_s * 1000.0 / decrypt_ops as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadTestReport {
    pub key_bits: Option<usize>,
    pub period_s: f64,
    pub duration_s: f64,
    pub requests: usize,
    pub succeeded: usize,
    pub failures: Vec<String>,
    pub latency: Option<LatencySummary>,
    pub latencies_ms: Vec<f64>,
    pub server: Option<ServerDelta>,
}

impl LoadTestReport {
    fn empty(period: Duration, duration: Duration) -> Self {
        LoadTestReport {
            key_bits: None,
            period_s: period.as_secs_f64(),
            duration_s: duration.as_secs_f64(),
            requests: 0,
            succeeded: 0,
            failures: Vec::new(),
            latency: None,
            latencies_ms: Vec::new(),
            server: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.succeeded == self.requests {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadTestPlan {
    pub period: Duration,
    pub duration: Duration,
    /// Abort unless the server key has this size.
    pub key_bits: Option<usize>,
    pub user_hash: String,
    pub app_version: u32,
}

impl LoadTestPlan {
    /// Requests sent: one at the start of each whole period.
    pub fn request_count(&self) -> usize {
        (self.duration.as_nanos() / self.period.as_nanos().max(1)) as usize
    }
}

/// Sends one encrypted registration every period. Each request encrypts
/// its fields afresh, as a terminal would.
pub fn load_test(client: &Client, plan: &LoadTestPlan) -> Result<LoadTestReport, LoadTestError> {
    if plan.period.is_zero() {
        return Err(LoadTestError::ZeroPeriod);
    }
    let mut report = LoadTestReport::empty(plan.period, plan.duration);
    let n = plan.request_count();
    if n == 0 {
        return Ok(report);
    }
    let key = PublicKey::from_der(&client.public_key()?).map_err(|e| ClientError::Decode(e.to_string()))?;
    if let Some(expected) = plan.key_bits.filter(|b| *b != key.bits()) {
        return Err(LoadTestError::KeyBits { expected, actual: key.bits() });
    }
    report.key_bits = Some(key.bits());
    let regid = client.issue_regid()?;
    let before = client.stats().ok();

    let start = Instant::now();
    for i in 0..n {
        let due = start + plan.period * i as u32;
        if let Some(wait) = due.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
        let t0 = Instant::now();
        let outcome = register(client, &key, &plan.user_hash, &regid, None, plan.app_version);
        report.latencies_ms.push(t0.elapsed().as_secs_f64() * 1000.0);
        report.requests += 1;
        match outcome {
            o if o.is_inserted() => report.succeeded += 1,
            Outcome::Envelope(e) => report.failures.push(format!("request {i}: {} {}", e.success, e.message)),
            Outcome::Error { error } => report.failures.push(format!("request {i}: {error}")),
        }
    }

    report.latency = LatencySummary::of(&report.latencies_ms);
    report.server = match (before, client.stats().ok()) {
        (Some(b), Some(a)) => Some(ServerDelta::between(&b, &a)),
        _ => None,
    };
    Ok(report)
}
