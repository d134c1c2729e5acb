use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use mobility_core::cpu::thread_cpu_time;
use mobility_core::crypto::{CipherField, CryptoError, KeyPairHandle};
use mobility_core::notify::Broker;
use mobility_core::store::Store;
use mobility_core::traffic::TrafficLayer;
use serde::Serialize;

/// Counters behind `/admin/stats`.
#[derive(Debug, Default)]
pub struct Stats {
    decrypt_ops: AtomicU64,
    decrypt_cpu_ns: AtomicU64,
    decrypt_wall_ns: AtomicU64,
    requests: AtomicU64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct StatsSnapshot {
    pub key_bits: Option<usize>,
    pub process_cpu_s: f64,
    pub requests: u64,
    pub decrypt_ops: u64,
    pub decrypt_cpu_s: f64,
    pub decrypt_wall_s: f64,
}

impl Stats {
    pub fn count_request(&self) {
        self.requests.fetch_add(1, Ordering::Relaxed);
    }

    fn record_decrypt(&self, cpu: Duration, wall: Duration) {
        self.decrypt_ops.fetch_add(1, Ordering::Relaxed);
        self.decrypt_cpu_ns.fetch_add(cpu.as_nanos() as u64, Ordering::Relaxed);
        self.decrypt_wall_ns.fetch_add(wall.as_nanos() as u64, Ordering::Relaxed);
    }

    pub fn snapshot(&self, key_bits: Option<usize>) -> StatsSnapshot {
        let secs = |a: &AtomicU64| a.load(Ordering::Relaxed) as f64 / 1e9;
        StatsSnapshot {
            key_bits,
            process_cpu_s: mobility_core::cpu::process_cpu_time().as_secs_f64(),
            requests: self.requests.load(Ordering::Relaxed),
            decrypt_ops: self.decrypt_ops.load(Ordering::Relaxed),
            decrypt_cpu_s: secs(&self.decrypt_cpu_ns),
            decrypt_wall_s: secs(&self.decrypt_wall_ns),
        }
    }
}

#[derive(Debug)]
pub struct AppState {
    pub store: Store,
    pub broker: Broker,
    pub stats: Stats,
    key: RwLock<Option<Arc<KeyPairHandle>>>,
    traffic: RwLock<Arc<TrafficLayer>>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    pub fn new(store: Store, broker: Broker) -> Self {
        AppState {
            store,
            broker,
            stats: Stats::default(),
            key: RwLock::new(None),
            traffic: RwLock::new(Arc::new(TrafficLayer::default())),
        }
    }

    pub fn key(&self) -> Option<Arc<KeyPairHandle>> {
        self.key.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn set_key(&self, key: KeyPairHandle) {
        *self.key.write().unwrap_or_else(|p| p.into_inner()) = Some(Arc::new(key));
    }

    pub fn traffic(&self) -> Arc<TrafficLayer> {
        self.traffic.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn set_traffic(&self, layer: TrafficLayer) {
        *self.traffic.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(layer);
    }

    /// Decrypts one hex field to UTF-8 text, recording its cost.
    pub fn decrypt_text(&self, key: &KeyPairHandle, hex: &str) -> Result<String, CryptoError> {
        let field = CipherField::new(hex.trim())?;
        let (cpu0, wall0) = (thread_cpu_time(), std::time::Instant::now());
        let plain = key.decrypt_field(&field);
        self.stats.record_decrypt(thread_cpu_time().saturating_sub(cpu0), wall0.elapsed());
        String::from_utf8(plain?).map_err(|_| CryptoError::DecryptionFailed)
    }
}
