//! Blocking HTTP client for the ingestion service.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INSERTED: &str = "Inserted";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Decode(String),
}

/// The service's two-key response object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub success: u8,
    pub message: String,
}

impl Envelope {
    pub fn is_inserted(&self) -> bool {
        self.success == 1 && self.message == INSERTED
    }
}

pub struct Client {
    base: String,
    agent: ureq::Agent,
}

type Response = ureq::http::Response<ureq::Body>;

fn transport(e: ureq::Error) -> ClientError {
    ClientError::Transport(e.to_string())
}

fn read_text(mut resp: Response) -> Result<(u16, String), ClientError> {
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(transport)?;
    Ok((status, body))
}

fn ok_text(resp: Response) -> Result<String, ClientError> {
    match read_text(resp)? {
        (200..=299, body) => Ok(body),
        (status, body) => Err(ClientError::Status { status, body }),
    }
}

fn json<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, ClientError> {
    serde_json::from_str(body).map_err(|e| ClientError::Decode(format!("{e}: {body}")))
}

impl Client {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Client { base: base_url.trim_end_matches('/').to_string(), agent }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn post_form(&self, path: &str, fields: &[(&str, &str)]) -> Result<Envelope, ClientError> {
        let resp = self.agent.post(&self.url(path)).send_form(fields.iter().copied()).map_err(transport)?;
        // error statuses still carry an envelope
        let (status, body) = read_text(resp)?;
        json::<Envelope>(&body).map_err(|_| ClientError::Status { status, body })
    }

    /// DER-encoded public key.
    pub fn public_key(&self) -> Result<Vec<u8>, ClientError> {
        let mut resp = self.agent.get(&self.url("/certs/public.der")).call().map_err(transport)?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ClientError::Status { status, body });
        }
        resp.body_mut().read_to_vec().map_err(transport)
    }

    /// Asks the push broker for a fresh registration id.
    pub fn issue_regid(&self) -> Result<String, ClientError> {
        #[derive(Deserialize)]
        struct Issued {
            registration_id: String,
        }
        let resp = self.agent.post(&self.url("/gcm/register")).send_empty().map_err(transport)?;
        Ok(json::<Issued>(&ok_text(resp)?)?.registration_id)
    }

    pub fn register(&self, fields: &[(&str, &str)]) -> Result<Envelope, ClientError> {
        self.post_form("/register", fields)
    }

    pub fn upload_segment(&self, usu_hash_enc: &str, segment_json: &str, date: &str) -> Result<Envelope, ClientError> {
        self.post_form("/segments", &[("usu_hash_enc", usu_hash_enc), ("segment", segment_json), ("date", date)])
    }

    /// Raw body of the analyst query endpoint.
    pub fn query(&self, params: &[(&str, &str)]) -> Result<String, ClientError> {
        let resp = self.agent.get(&self.url("/query")).query_pairs(params.iter().copied()).call().map_err(transport)?;
        ok_text(resp)
    }

    pub fn stats(&self) -> Result<ServerStats, ClientError> {
        let resp = self.agent.get(&self.url("/admin/stats")).call().map_err(transport)?;
        json(&ok_text(resp)?)
    }

    pub fn inbox(&self, regid: &str) -> Result<Vec<serde_json::Value>, ClientError> {
        let resp = self.agent.get(&self.url(&format!("/inbox/{regid}"))).call().map_err(transport)?;
        json(&ok_text(resp)?)
    }
}

/// Counters exposed by the service's stats endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize, Serialize)]
pub struct ServerStats {
    pub key_bits: Option<usize>,
    pub process_cpu_s: f64,
    pub requests: u64,
    pub decrypt_ops: u64,
    pub decrypt_cpu_s: f64,
    pub decrypt_wall_s: f64,
}
