//! In-process push broker: device registration ids, titled messages with a
//! click-through URL, and per-device inboxes drained by polling.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use rand::distributions::{Alphanumeric, DistString};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_HOMEPAGE: &str = "http://mobilitapp.noip.me";
const REGID_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NotifyError {
    #[error("registration id must not be empty")]
    EmptyRegid,
    #[error("unknown device")]
    UnknownDevice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushMessage {
    pub title: String,
    pub body: String,
    pub click_url: String,
    pub to_regid: String,
    pub delivered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushTarget {
    All,
    Device(String),
}

impl PushTarget {
    /// `"all"` (any case) targets every device; anything else is a regid.
    pub fn parse(s: &str) -> Self {
        if s.eq_ignore_ascii_case("all") {
            PushTarget::All
        } else {
            PushTarget::Device(s.to_string())
        }
    }
}

#[derive(Debug)]
struct Device {
    usu_hash: String,
    app_version: u32,
    inbox: VecDeque<PushMessage>,
}

#[derive(Debug, Default)]
struct State {
    // keyed by regid
    devices: HashMap<String, Device>,
    // usu_hash -> regid
    by_hash: HashMap<String, String>,
    // registration order, for deterministic fan-out
    order: Vec<String>,
}

#[derive(Debug)]
pub struct Broker {
    homepage: String,
    state: Mutex<State>,
}

impl Default for Broker {
    fn default() -> Self {
        Broker::new(DEFAULT_HOMEPAGE)
    }
}

impl Broker {
    pub fn new(homepage: impl Into<String>) -> Self {
        Broker { homepage: homepage.into(), state: Mutex::new(State::default()) }
    }

    pub fn homepage(&self) -> &str {
        &self.homepage
    }

    fn state(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Hands out a fresh device token. It becomes routable once
    /// registered against a user hash.
    pub fn issue_regid(&self) -> String {
        Alphanumeric.sample_string(&mut rand::thread_rng(), REGID_LEN)
    }

    /// Registers `regid` for `usu_hash`. Idempotent; a new regid for the
    /// same hash replaces (and drops) the old one. Returns whether the
    /// registration was new.
    pub fn register_device(&self, regid: &str, usu_hash: &str, app_version: u32) -> Result<bool, NotifyError> {
        if regid.is_empty() {
            return Err(NotifyError::EmptyRegid);
        }
        let mut st = self.state();
        let st = &mut *st;
        if let Some(dev) = st.devices.get_mut(regid) {
            if dev.usu_hash == usu_hash {
                dev.app_version = app_version;
                return Ok(false);
            }
            st.by_hash.remove(&dev.usu_hash);
            dev.usu_hash = usu_hash.to_string();
            dev.app_version = app_version;
        } else {
            st.devices.insert(
                regid.to_string(),
                Device { usu_hash: usu_hash.to_string(), app_version, inbox: VecDeque::new() },
            );
            st.order.push(regid.to_string());
        }
        if let Some(old) = st.by_hash.insert(usu_hash.to_string(), regid.to_string()) {
            if old != regid {
                st.devices.remove(&old);
                st.order.retain(|r| *r != old);
            }
        }
        Ok(true)
    }

    /// True when `regid` is routable and was registered with
    /// `current_version`; a version change makes a registration stale.
    pub fn is_registered(&self, regid: &str, current_version: u32) -> bool {
        self.state().devices.get(regid).is_some_and(|d| d.app_version == current_version)
    }

    pub fn regid_for(&self, usu_hash: &str) -> Option<String> {
        self.state().by_hash.get(usu_hash).cloned()
    }

    pub fn device_count(&self) -> usize {
        self.state().devices.len()
    }

    /// Queues a message on every targeted device and returns how many
    /// received it. Unknown regids receive nothing.
    pub fn push(&self, title: &str, body: &str, target: &PushTarget) -> usize {
        let mut st = self.state();
        let st = &mut *st;
        let now = Utc::now();
        let targets: Vec<String> = match target {
            PushTarget::All => st.order.clone(),
            PushTarget::Device(r) if st.devices.contains_key(r) => vec![r.clone()],
            PushTarget::Device(_) => Vec::new(),
        };
        for regid in &targets {
            if let Some(dev) = st.devices.get_mut(regid) {
                dev.inbox.push_back(PushMessage {
                    title: title.to_string(),
                    body: body.to_string(),
                    click_url: self.homepage.clone(),
                    to_regid: regid.clone(),
                    delivered_at: now,
                });
            }
        }
        targets.len()
    }

    /// Removes and returns all pending messages for `regid`, oldest first.
    pub fn poll_inbox(&self, regid: &str) -> Result<Vec<PushMessage>, NotifyError> {
        let mut st = self.state();
        let dev = st.devices.get_mut(regid).ok_or(NotifyError::UnknownDevice)?;
        Ok(dev.inbox.drain(..).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn register_twice_is_single() {
        let b = Broker::default();
        assert_eq!(b.register_device("r1", "h1", 3), Ok(true));
        assert_eq!(b.register_device("r1", "h1", 3), Ok(false));
        assert_eq!(b.device_count(), 1);
        assert_eq!(b.push("t", "b", &PushTarget::All), 1);
    }

    #[test]
    fn new_regid_replaces_old() {
        let b = Broker::default();
        b.register_device("r1", "h1", 1).unwrap();
        b.register_device("r2", "h1", 1).unwrap();
        assert_eq!(b.push("t", "b", &PushTarget::Device("r1".into())), 0);
        assert_eq!(b.poll_inbox("r1"), Err(NotifyError::UnknownDevice));
        assert_eq!(b.regid_for("h1").as_deref(), Some("r2"));
        assert_eq!(b.device_count(), 1);
    }

    #[test]
    fn regid_moving_to_other_hash() {
        let b = Broker::default();
        b.register_device("r1", "h1", 1).unwrap();
        b.register_device("r1", "h2", 1).unwrap();
        assert_eq!(b.regid_for("h1"), None);
        assert_eq!(b.regid_for("h2").as_deref(), Some("r1"));
        assert_eq!(b.device_count(), 1);
    }

    #[test]
    fn version_bump_makes_stale() {
        let b = Broker::default();
        b.register_device("r1", "h1", 4).unwrap();
        assert!(b.is_registered("r1", 4));
        assert!(!b.is_registered("r1", 5));
        assert!(!b.is_registered("nope", 4));
    }

    #[test]
    fn empty_regid_rejected() {
        assert_eq!(Broker::default().register_device("", "h", 1), Err(NotifyError::EmptyRegid));
    }

    #[test]
    fn push_all_and_unknown() {
        let b = Broker::new("http://example.org/");
        for i in 0..3 {
            b.register_device(&format!("r{i}"), &format!("h{i}"), 1).unwrap();
        }
        assert_eq!(b.push("New version", "Update now", &PushTarget::parse("all")), 3);
        assert_eq!(b.push("t", "b", &PushTarget::parse("ghost")), 0);
        let msgs = b.poll_inbox("r2").unwrap();
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].title, "New version");
        assert_eq!(msgs[0].click_url, "http://example.org/");
        assert_eq!(msgs[0].to_regid, "r2");
        assert!(b.poll_inbox("r2").unwrap().is_empty());
    }

    #[test]
    fn issued_regids_are_distinct() {
        let b = Broker::default();
        let (a, c) = (b.issue_regid(), b.issue_regid());
        assert_eq!(a.len(), REGID_LEN);
        assert_ne!(a, c);
        assert_eq!(b.poll_inbox(&a), Err(NotifyError::UnknownDevice));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Push(usize),
        PushAll,
        Poll(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![(0usize..3).prop_map(Op::Push), Just(Op::PushAll), (0usize..3).prop_map(Op::Poll)]
    }

    proptest! {
        #[test]
        fn interleaved_push_poll_is_fifo(ops in prop::collection::vec(op(), 0..60)) {
            let b = Broker::default();
            for i in 0..3 {
                b.register_device(&format!("r{i}"), &format!("h{i}"), 1).unwrap();
            }
            let mut model: Vec<VecDeque<String>> = vec![VecDeque::new(); 3];
            for (n, op) in ops.iter().enumerate() {
                let title = format!("m{n}");
                match op {
                    Op::Push(i) => {
                        b.push(&title, "", &PushTarget::Device(format!("r{i}")));
                        model[*i].push_back(title);
                    }
                    Op::PushAll => {
                        b.push(&title, "", &PushTarget::All);
                        model.iter_mut().for_each(|q| q.push_back(title.clone()));
                    }
                    Op::Poll(i) => {
                        let got: Vec<String> = b.poll_inbox(&format!("r{i}")).unwrap().into_iter().map(|m| m.title).collect();
                        prop_assert_eq!(got, model[*i].drain(..).collect::<Vec<_>>());
                    }
                }
            }
        }
    }
}
