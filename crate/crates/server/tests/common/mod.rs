#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use mobility_core::crypto::{encrypt_field, generate_keypair, KeyPairHandle};
use mobility_server::{ServerConfig, ServerHandle};
use tempfile::TempDir;

pub const ON_FOOT_SEGMENT: &str = include_str!("../../../core/tests/fixtures/segment_on_foot.json");
pub const POWER_SEGMENT: &str = include_str!("../../../core/tests/fixtures/segment_with_power.json");
pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");

/// One 2048-bit key shared by every server in the test binary.
pub fn shared_key() -> &'static KeyPairHandle {
    static KEY: OnceLock<KeyPairHandle> = OnceLock::new();
    KEY.get_or_init(|| generate_keypair(2048).unwrap())
}

pub struct TestServer {
    pub rt: tokio::runtime::Runtime,
    pub handle: Option<ServerHandle>,
    pub dir: TempDir,
    pub url: String,
    pub agent: ureq::Agent,
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().new_agent()
}

impl TestServer {
    pub fn start() -> Self {
        Self::start_with(|_| {})
    }

    pub fn start_with(tweak: impl FnOnce(&mut ServerConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ServerConfig::in_dir(dir.path());
        shared_key().save(&config.private_key, &config.public_key).unwrap();
        tweak(&mut config);
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        let handle = rt.block_on(async {
            let h = mobility_server::start(config).await.unwrap();
            assert!(h.wait_for_key().await);
            h
        });
        let url = handle.base_url();
        TestServer { rt, handle: Some(handle), dir, url, agent: agent() }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.url)
    }

    pub fn post_form(&self, path: &str, fields: &[(&str, &str)]) -> (u16, String) {
        let mut r = self.agent.post(self.url(path)).send_form(fields.iter().copied()).unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        let mut r = self.agent.get(self.url(path)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    pub fn get_bytes(&self, path: &str) -> (u16, Vec<u8>) {
        let mut r = self.agent.get(self.url(path)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_vec().unwrap())
    }

    pub fn post_json(&self, path: &str, body: &serde_json::Value) -> (u16, String) {
        let mut r = self
            .agent
            .post(self.url(path))
            .header("content-type", "application/json")
            .send(body.to_string())
            .unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    pub fn enc(&self, plaintext: &str) -> String {
        encrypt_field(plaintext.as_bytes(), shared_key().public_der()).unwrap().as_str().to_string()
    }

    pub fn register(&self, hash: &str, regid: &str) -> String {
        let (h, r) = (self.enc(hash), self.enc(regid));
        self.post_form("/register", &[("usu_hash_enc", &h), ("reg_id_enc", &r)]).1
    }

    pub fn db_path(&self) -> PathBuf {
        self.path().join("mobility.db")
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(h) = self.handle.take() {
            self.rt.block_on(h.shutdown());
        }
    }
}
