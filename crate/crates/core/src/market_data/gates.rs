//! Gate-closure timing rules and the CET/CEST clock.

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Utc, Weekday};
use serde::{Deserialize, Serialize};

use super::series::MarketTag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarketArea {
    #[serde(rename = "DE")]
    De,
    #[serde(rename = "CH")]
    Ch,
}

impl MarketArea {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DE" => Ok(MarketArea::De),
            "CH" => Ok(MarketArea::Ch),
            other => Err(Error::Config(format!("unknown market {other:?}"))),
        }
    }
}

/// Local wall-clock time on the day before delivery (D-1), in minutes after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DayAheadTime(pub u32);

impl DayAheadTime {
    pub const fn hm(h: u32, m: u32) -> Self {
        DayAheadTime(h * 60 + m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateClosureRules {
    pub fcr_close: DayAheadTime,
    pub afrr_close: DayAheadTime,
    pub da_close: DayAheadTime,
    pub xbid_open: DayAheadTime,
    /// Minutes before physical delivery at which continuous trading of a slot stops.
    pub xbid_lead_min: i64,
}

impl GateClosureRules {
    pub fn de() -> Self {
        GateClosureRules {
            fcr_close: DayAheadTime::hm(8, 0),
            afrr_close: DayAheadTime::hm(9, 0),
            da_close: DayAheadTime::hm(12, 0),
            xbid_open: DayAheadTime::hm(15, 0),
            xbid_lead_min: 30,
        }
    }

    pub fn ch() -> Self {
        GateClosureRules {
            xbid_lead_min: 60,
            ..Self::de()
        }
    }

    pub fn for_market(area: MarketArea) -> Self {
        match area {
            MarketArea::De => Self::de(),
            MarketArea::Ch => Self::ch(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fcr_close < self.afrr_close
            && self.afrr_close < self.da_close
            && self.da_close < self.xbid_open)
        {
            return Err(Error::Config(
                "gate closures must satisfy fcr < afrr < da < xbid_open".into(),
            ));
        }
        if ![30, 60].contains(&self.xbid_lead_min) {
            return Err(Error::Config(format!(
                "xbid lead must be 30 or 60 minutes, got {}",
                self.xbid_lead_min
            )));
        }
        Ok(())
    }

    pub fn xbid_lead(&self) -> Duration {
        Duration::minutes(self.xbid_lead_min)
    }

    /// UTC instant of a D-1 gate for delivery day `day` (local calendar date).
    pub fn gate_for_day(&self, gate: DayAheadTime, day: NaiveDate) -> DateTime<Utc> {
        let d1 = day.pred_opt().expect("date in range");
        let local = d1.and_hms_opt(gate.0 / 60, gate.0 % 60, 0).unwrap();
        cet_to_utc(local)
    }

    /// Public availability of a market value for the delivery slot
    /// `[slot_start, slot_end)`: auction results at their clearing gate,
    /// continuous-trading realizations once the slot has been delivered.
    /// Delivery days follow the timeline's UTC day boundaries.
    pub fn available_at(
        &self,
        tag: MarketTag,
        slot_start: DateTime<Utc>,
        slot_end: DateTime<Utc>,
    ) -> DateTime<Utc> {
        let day = slot_start.date_naive();
        match tag {
            MarketTag::Fcr => self.gate_for_day(self.fcr_close, day),
            MarketTag::AfrrUp | MarketTag::AfrrDn => self.gate_for_day(self.afrr_close, day),
            MarketTag::Da => self.gate_for_day(self.da_close, day),
            MarketTag::Xbid => slot_end,
            // weekly tenders are published before the week starts
            MarketTag::SrlUp | MarketTag::SrlDn => slot_start,
        }
    }
}

fn last_sunday(year: i32, month: u32) -> NaiveDate {
    let first_next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .unwrap();
    let mut d = first_next.pred_opt().unwrap();
    while d.weekday() != Weekday::Sun {
        d = d.pred_opt().unwrap();
    }
    d
}

/// UTC offset (hours) of central European time at a UTC instant.
/// Summer time runs from 01:00 UTC on the last Sunday of March to 01:00 UTC
/// on the last Sunday of October.
pub fn cet_offset_hours(t: DateTime<Utc>) -> i64 {
    let y = t.year();
    let start = last_sunday(y, 3).and_hms_opt(1, 0, 0).unwrap().and_utc();
    let end = last_sunday(y, 10).and_hms_opt(1, 0, 0).unwrap().and_utc();
    if t >= start && t < end {
        2
    } else {
        1
    }
}

pub fn utc_to_cet(t: DateTime<Utc>) -> NaiveDateTime {
    t.naive_utc() + Duration::hours(cet_offset_hours(t))
}

/// Local CET/CEST wall time to UTC. Nonexistent spring-forward times resolve
/// as standard time; ambiguous autumn times resolve to the first occurrence.
pub fn cet_to_utc(local: NaiveDateTime) -> DateTime<Utc> {
    let summer = Utc.from_utc_datetime(&(local - Duration::hours(2)));
    if cet_offset_hours(summer) == 2 {
        return summer;
    }
    Utc.from_utc_datetime(&(local - Duration::hours(1)))
}
