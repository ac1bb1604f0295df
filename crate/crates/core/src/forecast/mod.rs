//! Forecasters behind a leakage-safe interface, and synthetic forecasts with
//! a controlled Kendall rank correlation.

mod ar;
mod benchmarks;
pub mod synth;

use std::io::Write;

use chrono::{DateTime, Utc};

pub use ar::{ArFit, LinearAr};
pub use benchmarks::{DaAnchor, DaProfile, Hybrid, Oracle, Persistence};
pub use synth::{synth_alpha, synth_copula, synth_rank_perturb, SynthMethod, SynthOutput, SynthTarget};

use crate::error::{Error, Result};
use crate::market_data::csvio::format_timestamp;
use crate::market_data::{availability_filter, FeatureRecord, Filtered, PriceSeries, Timeline};
use crate::report::{fmt9, Table};
use crate::row;

pub const XBID: &str = "XBID";
pub const DA: &str = "DA";

/// All features of a run on one shared timeline, including values that are
/// not yet public at a given issue time. Forecasters never see this
/// directly; they receive a filtered window.
#[derive(Debug, Clone)]
pub struct FeatureStore {
    pub timeline: Timeline,
    pub features: Vec<FeatureRecord>,
}

impl FeatureStore {
    pub fn new(timeline: Timeline, features: Vec<FeatureRecord>) -> Result<Self> {
        for f in &features {
            if f.timeline != timeline {
                return Err(Error::Domain(format!("feature {} is not on the store timeline", f.name)));
            }
        }
        Ok(FeatureStore { timeline, features })
    }

    pub fn get(&self, name: &str) -> Option<&FeatureRecord> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Slots `[start, end)` of every feature, masked at `issue_time`.
    pub fn view(&self, issue_time: DateTime<Utc>, start: usize, end: usize) -> Filtered {
        let end = end.min(self.timeline.len);
        let start = start.min(end);
        let sub = self.timeline.sub(start, end - start);
        let clipped: Vec<FeatureRecord> = self
            .features
            .iter()
            .map(|f| FeatureRecord {
                name: f.name.clone(),
                timeline: sub,
                values: f.values[start..end].to_vec(),
                available_at: f.available_at[start..end].to_vec(),
            })
            .collect();
        availability_filter(&clipped, issue_time)
    }
}

/// A point forecaster. Implementations only read the filtered view they are
/// given; `view` starts `lookback_slots()` before the first target slot.
pub trait Forecaster: Send + Sync {
    fn name(&self) -> &str;

    fn lookback_slots(&self) -> usize {
        0
    }

    fn predict(&self, view: &Filtered, issue_time: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>>;
}

/// Forecast for `target` as issued at `issue_time`.
pub fn issue_forecast(
    f: &dyn Forecaster,
    store: &FeatureStore,
    issue_time: DateTime<Utc>,
    target: Timeline,
) -> Result<Vec<f64>> {
    let first = store
        .timeline
        .index_of(target.start)
        .ok_or_else(|| Error::Domain("forecast target is not on the store timeline".into()))?;
    let view = store.view(issue_time, first.saturating_sub(f.lookback_slots()), first + target.len);
    let out = f.predict(&view, issue_time, target)?;
    if out.len() != target.len {
        return Err(Error::LengthMismatch {
            left: out.len(),
            right: target.len,
        });
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Gap {
            what: format!("{} forecast", f.name()),
            slot: i,
        });
    }
    Ok(out)
}

/// Position of the target's first slot inside the view.
pub(crate) fn target_offset(view_tl: &Timeline, target: &Timeline) -> Result<usize> {
    view_tl
        .index_of(target.start)
        .or_else(|| (view_tl.end() == target.start).then_some(view_tl.len))
        .ok_or_else(|| Error::Domain("target outside forecast view".into()))
}

pub(crate) fn feature<'a>(view: &'a Filtered, name: &str) -> Result<&'a FeatureRecord> {
    view.by_name(name)
        .ok_or_else(|| Error::InsufficientData(format!("feature {name} not provided")))
}

/// Rows of the forecast dump.
#[derive(Debug, Clone, Default)]
pub struct ForecastLog {
    rows: Vec<(DateTime<Utc>, DateTime<Utc>, f64, String)>,
}

impl ForecastLog {
    pub fn record(&mut self, name: &str, issue_time: DateTime<Utc>, target: Timeline, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self.rows.push((issue_time, target.slot_start(i), v, name.to_string()));
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["issue_time", "target_time", "value", "forecaster"]);
        for (i, tt, v, n) in &self.rows {
            t.push(row![format_timestamp(*i), format_timestamp(*tt), fmt9(*v), n.as_str()]);
        }
        t
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        self.to_table().write(w)
    }
}

/// Series wrapper for a finished forecast.
pub fn as_series(values: Vec<f64>, target: Timeline, like: &PriceSeries) -> Result<PriceSeries> {
    PriceSeries::new(target, values, like.tag)
}
