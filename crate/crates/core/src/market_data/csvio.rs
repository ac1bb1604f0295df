use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};

use super::features::FeatureRecord;
use super::gates::cet_to_utc;
use super::series::{BidRecord, PriceSeries};
use crate::error::{Error, Result};

/// Clock of timestamps that carry no explicit offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum SourceZone {
    #[default]
    Utc,
    Cet,
}

impl SourceZone {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "UTC" | "Z" => Ok(SourceZone::Utc),
            "CET" | "CEST" | "EUROPE/BERLIN" | "EUROPE/ZURICH" => Ok(SourceZone::Cet),
            other => Err(Error::Config(format!("unsupported source timezone {other:?}"))),
        }
    }
}

pub fn parse_timestamp(s: &str, zone: SourceZone) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    let naive = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .or_else(|_| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").map(|d| d.and_hms_opt(0, 0, 0).unwrap())
        })
        .map_err(|_| Error::Timestamp(s.to_string()))?;
    Ok(match zone {
        SourceZone::Utc => naive.and_utc(),
        SourceZone::Cet => cet_to_utc(naive),
    })
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, false)
}

/// One parsed input row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRow {
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    pub volume: Option<f64>,
    pub available_at: Option<DateTime<Utc>>,
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

pub fn read_rows<R: Read>(reader: R, zone: SourceZone) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts = column(&headers, &["timestamp", "week_start"])
        .ok_or_else(|| Error::Config("missing timestamp column".into()))?;
    let val = column(&headers, &["value", "price", "level"])
        .ok_or_else(|| Error::Config("missing value column".into()))?;
    let vol = column(&headers, &["volume"]);
    let avail = column(&headers, &["available_at"]);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let value: f64 = rec[val]
            .parse()
            .map_err(|_| Error::Domain(format!("row {}: bad value {:?}", line + 2, &rec[val])))?;
        let volume = match vol {
            Some(c) if !rec[c].is_empty() => Some(
                rec[c]
                    .parse()
                    .map_err(|_| Error::Domain(format!("row {}: bad volume", line + 2)))?,
            ),
            _ => None,
        };
        let available_at = match avail {
            Some(c) if !rec[c].is_empty() => Some(parse_timestamp(&rec[c], zone)?),
            _ => None,
        };
        out.push(RawRow {
            timestamp: parse_timestamp(&rec[ts], zone)?,
            value,
            volume,
            available_at,
        });
    }
    Ok(out)
}

pub fn read_rows_path(path: &Path, zone: SourceZone) -> Result<Vec<RawRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(f, zone)
}

/// Group bid rows by timestamp (one tender per timestamp) in time order.
pub fn bids_by_tender(rows: &[RawRow]) -> Result<Vec<(DateTime<Utc>, Vec<BidRecord>)>> {
    let mut sorted: Vec<&RawRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.timestamp);
    let mut out: Vec<(DateTime<Utc>, Vec<BidRecord>)> = Vec::new();
    for r in sorted {
        let bid = BidRecord::new(r.value, r.volume.unwrap_or(1.0))?;
        match out.last_mut() {
            Some((t, v)) if *t == r.timestamp => v.push(bid),
            _ => out.push((r.timestamp, vec![bid])),
        }
    }
    Ok(out)
}

/// Series CSV with shortest round-trip floats, so re-reading is bit-exact.
/// Gap slots are written with an empty value.
pub fn write_series<W: Write>(series: &PriceSeries, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["timestamp", "value"])?;
    for i in 0..series.len() {
        let v = series.value(i).map(|v| v.to_string()).unwrap_or_default();
        wtr.write_record([format_timestamp(series.timeline.slot_start(i)), v])?;
    }
    wtr.flush().map_err(|e| Error::io("<series>", e))?;
    Ok(())
}

pub fn write_feature<W: Write>(f: &FeatureRecord, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["timestamp", "value", "available_at"])?;
    for i in 0..f.timeline.len {
        wtr.write_record([
            format_timestamp(f.timeline.slot_start(i)),
            f.get(i).map(|v| v.to_string()).unwrap_or_default(),
            format_timestamp(f.available_at[i]),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<feature>", e))?;
    Ok(())
}

/// Rows whose value cell is empty are gap markers and are skipped.
pub fn read_series_rows<R: Read>(reader: R, zone: SourceZone) -> Result<Vec<(DateTime<Utc>, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts = column(&headers, &["timestamp", "week_start"])
        .ok_or_else(|| Error::Config("missing timestamp column".into()))?;
    let val = column(&headers, &["value", "price", "level"])
        .ok_or_else(|| Error::Config("missing value column".into()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec[val].is_empty() {
            continue;
        }
        let v: f64 = rec[val]
            .parse()
            .map_err(|_| Error::Domain(format!("bad value {:?}", &rec[val])))?;
        out.push((parse_timestamp(&rec[ts], zone)?, v));
    }
    Ok(out)
}
