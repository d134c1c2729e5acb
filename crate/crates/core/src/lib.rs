//! Mobility telemetry platform: segment model, activity engine, field
//! encryption, persistence, traffic feeds, analyst queries and the push
//! broker.

pub mod model;
pub mod activity;
pub mod cpu;
pub mod crypto;
pub mod store;
pub mod traffic;
pub mod query;
pub mod notify;
