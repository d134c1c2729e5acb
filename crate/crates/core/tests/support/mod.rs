//! Independent oracles shared by integration and acceptance tests.
#![allow(dead_code)]

pub mod asn1;
pub mod oracles;

pub const ON_FOOT_SEGMENT: &str = include_str!("../fixtures/segment_on_foot.json");
pub const POWER_SEGMENT: &str = include_str!("../fixtures/segment_with_power.json");
pub const STATE_FEED: &str = include_str!("../fixtures/dadestrams.dat");
pub const SECTIONS_CSV: &str = include_str!("../fixtures/trams.csv");
