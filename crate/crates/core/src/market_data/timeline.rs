use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slot length of a uniform timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    QuarterHour,
    Hour,
    /// Reserve capacity products are auctioned in 4-hour blocks.
    FourHours,
    Week,
}

impl Resolution {
    pub fn minutes(self) -> i64 {
        match self {
            Resolution::QuarterHour => 15,
            Resolution::Hour => 60,
            Resolution::FourHours => 240,
            Resolution::Week => 7 * 24 * 60,
        }
    }

    pub fn duration(self) -> Duration {
        Duration::minutes(self.minutes())
    }

    pub fn hours(self) -> f64 {
        self.minutes() as f64 / 60.0
    }

    /// Slots per day for sub-daily resolutions.
    pub fn slots_per_day(self) -> Option<usize> {
        match self {
            Resolution::Week => None,
            r => Some((24 * 60 / r.minutes()) as usize),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "15min" | "15m" | "quarter_hour" | "pt15m" => Ok(Resolution::QuarterHour),
            "1h" | "60min" | "hour" | "pt1h" => Ok(Resolution::Hour),
            "4h" | "four_hours" | "pt4h" => Ok(Resolution::FourHours),
            "1w" | "week" | "p1w" => Ok(Resolution::Week),
            other => Err(Error::Config(format!("unknown resolution {other:?}"))),
        }
    }
}

/// Uniform, contiguous sequence of `len` slots starting at `start` (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timeline {
    pub start: DateTime<Utc>,
    pub resolution: Resolution,
    pub len: usize,
}

impl Timeline {
    pub fn new(start: DateTime<Utc>, resolution: Resolution, len: usize) -> Self {
        Timeline {
            start,
            resolution,
            len,
        }
    }

    /// `days` whole days of 15-minute slots starting at UTC midnight of `first_day`.
    pub fn quarter_hours(first_day: NaiveDate, days: usize) -> Self {
        let start = first_day.and_hms_opt(0, 0, 0).unwrap().and_utc();
        Timeline::new(start, Resolution::QuarterHour, days * 96)
    }

    pub fn dt_hours(&self) -> f64 {
        self.resolution.hours()
    }

    pub fn slot_start(&self, i: usize) -> DateTime<Utc> {
        self.start + Duration::minutes(self.resolution.minutes() * i as i64)
    }

    pub fn slot_end(&self, i: usize) -> DateTime<Utc> {
        self.slot_start(i + 1)
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.slot_start(self.len)
    }

    /// Index of the slot starting exactly at `t`.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let mins = (t - self.start).num_minutes();
        let step = self.resolution.minutes();
        if (t - self.start).num_seconds() % 60 != 0 || mins < 0 || mins % step != 0 {
            return None;
        }
        let i = (mins / step) as usize;
        (i < self.len).then_some(i)
    }

    /// Index of the slot containing `t`.
    pub fn index_containing(&self, t: DateTime<Utc>) -> Option<usize> {
        if t < self.start {
            return None;
        }
        let i = ((t - self.start).num_seconds() / (self.resolution.minutes() * 60)) as usize;
        (i < self.len).then_some(i)
    }

    pub fn sub(&self, offset: usize, len: usize) -> Timeline {
        Timeline::new(self.slot_start(offset), self.resolution, len)
    }

    pub fn total_hours(&self) -> f64 {
        self.len as f64 * self.dt_hours()
    }
}
