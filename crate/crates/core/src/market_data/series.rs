use std::fmt;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::timeline::{Resolution, Timeline};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarketTag {
    #[serde(rename = "FCR")]
    Fcr,
    #[serde(rename = "aFRR_up")]
    AfrrUp,
    #[serde(rename = "aFRR_dn")]
    AfrrDn,
    #[serde(rename = "DA")]
    Da,
    #[serde(rename = "XBID")]
    Xbid,
    #[serde(rename = "SRL_up")]
    SrlUp,
    #[serde(rename = "SRL_dn")]
    SrlDn,
}

impl MarketTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MarketTag::Fcr => "FCR",
            MarketTag::AfrrUp => "aFRR_up",
            MarketTag::AfrrDn => "aFRR_dn",
            MarketTag::Da => "DA",
            MarketTag::Xbid => "XBID",
            MarketTag::SrlUp => "SRL_up",
            MarketTag::SrlDn => "SRL_dn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let all = [
            MarketTag::Fcr,
            MarketTag::AfrrUp,
            MarketTag::AfrrDn,
            MarketTag::Da,
            MarketTag::Xbid,
            MarketTag::SrlUp,
            MarketTag::SrlDn,
        ];
        all.into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown market tag {s:?}")))
    }
}

impl fmt::Display for MarketTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the per-slot values came from. Downstream reports carry this through
/// so an uncorrected SRL series is never mistaken for a volume-weighted one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Provenance {
    #[default]
    AsGiven,
    VwaCorrected,
    ArithmeticMeanUncorrected,
    /// Free-form source convention, e.g. how 15-minute intraday prices were
    /// aggregated from trades upstream.
    Convention(String),
}

/// One value per slot on a uniform timeline. Gap slots hold `NaN` and are
/// listed in `gaps`; every other value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub timeline: Timeline,
    pub values: Vec<f64>,
    pub gaps: Vec<usize>,
    pub tag: MarketTag,
    pub provenance: Provenance,
}

impl PriceSeries {
    pub fn new(timeline: Timeline, values: Vec<f64>, tag: MarketTag) -> Result<Self> {
        if values.len() != timeline.len {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: timeline.len,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at slot {i}")));
        }
        Ok(PriceSeries {
            timeline,
            values,
            gaps: Vec::new(),
            tag,
            provenance: Provenance::AsGiven,
        })
    }

    /// Series from optional values; `None` slots become explicit gaps.
    pub fn from_options(timeline: Timeline, values: Vec<Option<f64>>, tag: MarketTag) -> Result<Self> {
        if values.len() != timeline.len {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: timeline.len,
            });
        }
        let mut gaps = Vec::new();
        let mut out = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(x) if x.is_finite() => out.push(x),
                Some(_) => return Err(Error::Domain(format!("non-finite value at slot {i}"))),
                None => {
                    gaps.push(i);
                    out.push(f64::NAN);
                }
            }
        }
        Ok(PriceSeries {
            timeline,
            values: out,
            gaps,
            tag,
            provenance: Provenance::AsGiven,
        })
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().filter(|v| v.is_finite())
    }

    pub fn slice(&self, offset: usize, len: usize) -> PriceSeries {
        let values = self.values[offset..offset + len].to_vec();
        let gaps = self
            .gaps
            .iter()
            .filter(|&&g| g >= offset && g < offset + len)
            .map(|g| g - offset)
            .collect();
        PriceSeries {
            timeline: self.timeline.sub(offset, len),
            values,
            gaps,
            tag: self.tag,
            provenance: self.provenance.clone(),
        }
    }

    /// Number of whole days on a sub-daily timeline.
    pub fn n_days(&self) -> usize {
        match self.timeline.resolution.slots_per_day() {
            Some(spd) => self.len() / spd,
            None => 0,
        }
    }

    /// Values of day `d` when the day has no gaps.
    pub fn day(&self, d: usize) -> Option<&[f64]> {
        let spd = self.timeline.resolution.slots_per_day()?;
        let lo = d * spd;
        let hi = lo + spd;
        if hi > self.len() || self.gaps.iter().any(|&g| g >= lo && g < hi) {
            return None;
        }
        Some(&self.values[lo..hi])
    }

    /// Resolve gaps according to `policy`. Forward fill only bridges runs of
    /// at most `max_run` slots; longer runs remain gaps (and make their day
    /// unusable under skip-day semantics).
    pub fn apply_gap_policy(&self, policy: GapPolicy) -> GapResolution {
        match policy {
            GapPolicy::SkipDay => {
                let skipped_days = match self.timeline.resolution.slots_per_day() {
                    Some(spd) => {
                        let mut d: Vec<usize> = self.gaps.iter().map(|g| g / spd).collect();
                        d.dedup();
                        d
                    }
                    None => Vec::new(),
                };
                GapResolution {
                    series: self.clone(),
                    filled: 0,
                    skipped_days,
                }
            }
            GapPolicy::ForwardFill { max_run } => {
                let max_run = max_run.min(2);
                let mut s = self.clone();
                let mut remaining = Vec::new();
                let mut filled = 0;
                let mut i = 0;
                while i < s.gaps.len() {
                    let start = s.gaps[i];
                    let mut j = i;
                    while j + 1 < s.gaps.len() && s.gaps[j + 1] == s.gaps[j] + 1 {
                        j += 1;
                    }
                    let run = j - i + 1;
                    if start > 0 && run <= max_run {
                        let v = s.values[start - 1];
                        for k in start..start + run {
                            s.values[k] = v;
                        }
                        filled += run;
                    } else {
                        remaining.extend_from_slice(&s.gaps[i..=j]);
                    }
                    i = j + 1;
                }
                s.gaps = remaining;
                let skipped_days = match s.timeline.resolution.slots_per_day() {
                    Some(spd) => {
                        let mut d: Vec<usize> = s.gaps.iter().map(|g| g / spd).collect();
                        d.dedup();
                        d
                    }
                    None => Vec::new(),
                };
                GapResolution {
                    series: s,
                    filled,
                    skipped_days,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    SkipDay,
    ForwardFill { max_run: usize },
}

impl GapPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "skip-day" | "skip_day" => Ok(GapPolicy::SkipDay),
            "forward-fill" | "forward_fill" => Ok(GapPolicy::ForwardFill { max_run: 2 }),
            other => Err(Error::Config(format!("unknown gap policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapResolution {
    pub series: PriceSeries,
    pub filled: usize,
    pub skipped_days: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicationMode {
    /// Each record lands on the slot starting at its timestamp.
    Exact,
    /// Hourly records are copied onto their four quarter-hour slots.
    HourlyToQuarter,
}

impl ReplicationMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(ReplicationMode::Exact),
            "hourly-to-quarter" | "hourly_to_quarter" => Ok(ReplicationMode::HourlyToQuarter),
            other => Err(Error::Config(format!("unknown replication mode {other:?}"))),
        }
    }
}

/// Result of [`align_to_grid`]: the series plus everything that did not fit.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub series: PriceSeries,
    /// Slots with no input record.
    pub gaps: Vec<usize>,
    /// Input timestamps that do not fall on a slot of the timeline.
    pub outside: Vec<DateTime<Utc>>,
    /// Records overwritten by a later record for the same timestamp.
    pub duplicates: usize,
}

pub fn align_to_grid(
    raw: &[(DateTime<Utc>, f64)],
    timeline: Timeline,
    tag: MarketTag,
    mode: ReplicationMode,
) -> Result<Alignment> {
    if raw.is_empty() {
        return Err(Error::EmptySeries(format!("{tag}: no input records")));
    }
    if mode == ReplicationMode::HourlyToQuarter && timeline.resolution != Resolution::QuarterHour {
        return Err(Error::Config(
            "hourly-to-quarter replication needs a 15-minute timeline".into(),
        ));
    }
    let mut records: Vec<(usize, DateTime<Utc>, f64)> =
        raw.iter().enumerate().map(|(i, &(t, v))| (i, t, v)).collect();
    // stable on input order, so the last record of a timestamp wins
    records.sort_by_key(|&(i, t, _)| (t, i));

    let mut slots: Vec<Option<f64>> = vec![None; timeline.len];
    let mut outside = Vec::new();
    let mut duplicates = 0;
    let mut prev: Option<DateTime<Utc>> = None;
    for &(_, t, v) in &records {
        if prev == Some(t) {
            duplicates += 1;
        }
        prev = Some(t);
        if !v.is_finite() {
            return Err(Error::Domain(format!("{tag}: non-finite value at {t}")));
        }
        let targets: Vec<usize> = match mode {
            ReplicationMode::Exact => timeline.index_of(t).into_iter().collect(),
            ReplicationMode::HourlyToQuarter => (0..4)
                .filter_map(|k| timeline.index_of(t + Duration::minutes(15 * k)))
                .collect(),
        };
        if targets.is_empty() {
            outside.push(t);
        }
        for i in targets {
            slots[i] = Some(v);
        }
    }
    if duplicates > 0 {
        log::warn!("{tag}: {duplicates} duplicate timestamps resolved last-write-wins");
    }
    let series = PriceSeries::from_options(timeline, slots, tag)?;
    let gaps = series.gaps.clone();
    Ok(Alignment {
        series,
        gaps,
        outside,
        duplicates,
    })
}

/// One accepted bid of a pay-as-bid tender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidRecord {
    pub price: f64,
    pub volume: f64,
}

impl BidRecord {
    pub fn new(price: f64, volume: f64) -> Result<Self> {
        if !price.is_finite() {
            return Err(Error::Domain("bid price must be finite".into()));
        }
        if !(volume > 0.0) {
            return Err(Error::Domain(format!("bid volume must be > 0, got {volume}")));
        }
        Ok(BidRecord { price, volume })
    }
}

/// Volume-weighted average price of accepted bids.
pub fn vwa_price(bids: &[BidRecord]) -> Result<f64> {
    if bids.is_empty() {
        return Err(Error::Domain("vwa of an empty bid list".into()));
    }
    let vol: f64 = bids.iter().map(|b| b.volume).sum();
    if !(vol > 0.0) {
        return Err(Error::Domain("zero total bid volume".into()));
    }
    Ok(bids.iter().map(|b| b.price * b.volume).sum::<f64>() / vol)
}

/// Weekly tender prices from per-bid records, volume-weighted when volumes
/// exist. Each entry is the bid list of one tender period.
pub fn tender_series(
    timeline: Timeline,
    tenders: &[Vec<BidRecord>],
    tag: MarketTag,
    have_volumes: bool,
) -> Result<PriceSeries> {
    let values = tenders
        .iter()
        .map(|bids| {
            if bids.is_empty() {
                Ok(None)
            } else if have_volumes {
                vwa_price(bids).map(Some)
            } else {
                Ok(Some(bids.iter().map(|b| b.price).sum::<f64>() / bids.len() as f64))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = if have_volumes {
        Provenance::VwaCorrected
    } else {
        Provenance::ArithmeticMeanUncorrected
    };
    Ok(PriceSeries::from_options(timeline, values, tag)?.with_provenance(provenance))
}
