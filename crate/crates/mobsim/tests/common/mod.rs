#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use mobility_core::crypto::KeyPairHandle;
use mobility_server::{ServerConfig, ServerHandle};
use mobsim::{Client, ClientConfig, Leg};
use tempfile::TempDir;

/// A service instance on an ephemeral port with its own database.
pub struct LiveServer {
    pub rt: tokio::runtime::Runtime,
    pub handle: Option<ServerHandle>,
    pub dir: TempDir,
    pub url: String,
}

impl LiveServer {
    /// Starts with a freshly generated key of `bits`.
    pub fn fresh(bits: usize) -> Self {
        Self::start(bits, None)
    }

    pub fn with_key(key: &KeyPairHandle) -> Self {
        Self::start(key.bits(), Some(key))
    }

    fn start(bits: usize, key: Option<&KeyPairHandle>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServerConfig::in_dir(dir.path());
        config.key_bits = bits;
        if let Some(k) = key {
            k.save(&config.private_key, &config.public_key).unwrap();
        }
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        let handle = rt.block_on(async {
            let h = mobility_server::start(config).await.unwrap();
            assert!(h.wait_for_key().await, "server key not ready");
            h
        });
        let url = handle.base_url();
        LiveServer { rt, handle: Some(handle), dir, url }
    }

    pub fn state(&self) -> &mobility_server::SharedState {
        &self.handle.as_ref().unwrap().state
    }

    pub fn client(&self) -> Client {
        Client::new(&self.url, Duration::from_secs(30))
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

impl Drop for LiveServer {
    fn drop(&mut self) {
        if let Some(h) = self.handle.take() {
            self.rt.block_on(h.shutdown());
        }
    }
}

/// Client configuration writing its preferences under `dir`.
pub fn client_config(url: &str, dir: &Path, seed: u64, legs: Option<Vec<Leg>>) -> ClientConfig {
    ClientConfig {
        server_url: url.to_string(),
        prefs_path: dir.join("prefs.xml"),
        seed,
        legs,
        profile: Some(mobsim::Profile {
            name: Some("Test".into()),
            birthdate: chrono::NaiveDate::from_ymd_opt(1990, 5, 17),
            ..Default::default()
        }),
        ..ClientConfig::default()
    }
}

pub fn prefs_dir() -> (TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().to_path_buf();
    (d, p)
}
