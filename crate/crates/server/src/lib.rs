//! HTTP service for the mobility platform: public-key distribution,
//! encrypted registration and segment upload, analyst queries, the traffic
//! layer and the push broker.

pub mod config;
pub mod envelope;
pub mod routes;
pub mod state;
pub mod traffic;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use mobility_core::crypto::{generate_keypair, CryptoError, KeyPairHandle};
use mobility_core::notify::Broker;
use mobility_core::store::{Store, StoreError};
use thiserror::Error;
use tokio::sync::oneshot;

pub use config::ServerConfig;
pub use envelope::ApiResponse;
pub use state::{AppState, SharedState, StatsSnapshot};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("cannot create {path}: {source}")]
    Dir { path: std::path::PathBuf, source: std::io::Error },
}

fn ensure_parent(path: &Path) -> Result<(), ServerError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir)
            .map_err(|source| ServerError::Dir { path: dir.to_path_buf(), source }),
        _ => Ok(()),
    }
}

/// Loads the private key if present, otherwise generates and saves a new
/// pair of `config.key_bits`.
pub fn load_or_generate_key(config: &ServerConfig) -> Result<KeyPairHandle, ServerError> {
    if config.private_key.exists() {
        let key = KeyPairHandle::load(&config.private_key)?;
        if key.bits() != config.key_bits {
            tracing::warn!(found = key.bits(), configured = config.key_bits, "existing key size differs from configuration; using existing key");
        }
        if std::fs::read(&config.public_key).ok().as_deref() != Some(key.public_der()) {
            ensure_parent(&config.public_key)?;
            key.save(&config.private_key, &config.public_key)?;
        }
        return Ok(key);
    }
    tracing::info!(bits = config.key_bits, "generating key pair");
    let key = generate_keypair(config.key_bits)?;
    ensure_parent(&config.private_key)?;
    ensure_parent(&config.public_key)?;
    key.save(&config.private_key, &config.public_key)?;
    Ok(key)
}

/// A running server; dropping the handle leaves it running until the
/// process ends, `shutdown` stops it.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub state: SharedState,
    shutdown: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl ServerHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = self.task.await;
    }

    /// Waits until the key pair is loaded (or generation failed).
    pub async fn wait_for_key(&self) -> bool {
        for _ in 0..6000 {
            if self.state.key().is_some() {
                return true;
            }
            if self.task.is_finished() {
                return false;
            }
            tokio::time::sleep(std::time::Duration::from_millis(10)).await;
        }
        false
    }
}

/// Opens the store, binds the listener and starts serving. Key loading or
/// generation and the traffic refresher run in the background; until the
/// key is ready the DER endpoint answers 503.
pub async fn start(config: ServerConfig) -> Result<ServerHandle, ServerError> {
    ensure_parent(&config.db_path)?;
    let store = Store::open(&config.db_path)?;
    let state: SharedState = Arc::new(AppState::new(store, Broker::new(config.homepage.clone())));

    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServerError::Bind { addr: config.listen, source })?;
    let addr = listener.local_addr().map_err(|source| ServerError::Bind { addr: config.listen, source })?;

    tokio::spawn({
        let state = state.clone();
        let config = config.clone();
        async move {
            match tokio::task::spawn_blocking(move || load_or_generate_key(&config)).await {
                Ok(Ok(key)) => {
                    tracing::info!(bits = key.bits(), "key pair ready");
                    state.set_key(key);
                }
                Ok(Err(e)) => tracing::error!("key setup failed: {e}"),
                Err(e) => tracing::error!("key setup task failed: {e}"),
            }
        }
    });
    let traffic_task = tokio::spawn(traffic::refresh_loop(state.clone(), config.traffic.clone()));

    let (tx, rx) = oneshot::channel::<()>();
    let app = routes::router(state.clone());
    let task = tokio::spawn(async move {
        let served = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
        traffic_task.abort();
        if let Err(e) = served {
            tracing::error!("server error: {e}");
        }
    });
    tracing::info!(%addr, "listening");
    Ok(ServerHandle { addr, state, shutdown: Some(tx), task })
}
