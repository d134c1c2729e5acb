use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::StoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivityFilter {
    All,
    Only(String),
}

impl ActivityFilter {
    /// `"All"` selects every activity; anything else is an exact name.
    pub fn parse(s: &str) -> Self {
        if s == "All" {
            ActivityFilter::All
        } else {
            ActivityFilter::Only(s.to_string())
        }
    }

    pub fn matches(&self, activity: &str) -> bool {
        match self {
            ActivityFilter::All => true,
            ActivityFilter::Only(a) => a == activity,
        }
    }
}

/// Analyst filter over users' ages, segment activity and location time.
///
/// Age is the difference of calendar years between the query date and the
/// birth date, so it is off by one before a birthday.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationQuery {
    pub age_min: u32,
    pub age_max: u32,
    pub activity: ActivityFilter,
    pub from: NaiveDateTime,
    pub to: NaiveDateTime,
}

impl LocationQuery {
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.age_min > self.age_max || self.from > self.to {
            return Err(StoreError::InvalidRange);
        }
        Ok(())
    }
}

/// Calendar-year age difference.
pub fn year_age(birth: NaiveDate, today: NaiveDate) -> i64 {
    use chrono::Datelike;
    i64::from(today.year()) - i64::from(birth.year())
}
