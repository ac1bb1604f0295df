use chrono::{DateTime, Utc};

use super::gates::GateClosureRules;
use super::series::PriceSeries;
use super::timeline::Timeline;
use crate::error::{Error, Result};

/// A named per-slot feature with the instant each value becomes public.
/// Masked or missing slots are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub name: String,
    pub timeline: Timeline,
    pub values: Vec<Option<f64>>,
    pub available_at: Vec<DateTime<Utc>>,
}

impl FeatureRecord {
    pub fn new(
        name: impl Into<String>,
        timeline: Timeline,
        values: Vec<Option<f64>>,
        available_at: Vec<DateTime<Utc>>,
    ) -> Result<Self> {
        if values.len() != timeline.len {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: timeline.len,
            });
        }
        if available_at.len() != timeline.len {
            return Err(Error::LengthMismatch {
                left: available_at.len(),
                right: timeline.len,
            });
        }
        if available_at.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("available_at must be nondecreasing".into()));
        }
        Ok(FeatureRecord {
            name: name.into(),
            timeline,
            values,
            available_at,
        })
    }

    /// Feature view of a market series with availability from gate rules.
    pub fn from_series(series: &PriceSeries, gates: &GateClosureRules) -> Self {
        let tl = series.timeline;
        let available_at = (0..tl.len)
            .map(|i| gates.available_at(series.tag, tl.slot_start(i), tl.slot_end(i)))
            .collect();
        FeatureRecord {
            name: series.tag.as_str().to_string(),
            timeline: tl,
            values: (0..tl.len).map(|i| series.value(i)).collect(),
            available_at,
        }
    }

    /// Known at the slot's own start (calendar features, forward-known inputs).
    pub fn known_at_start(name: impl Into<String>, timeline: Timeline, values: Vec<f64>) -> Result<Self> {
        let avail = (0..timeline.len).map(|i| timeline.slot_start(i)).collect();
        Self::new(name, timeline, values.into_iter().map(Some).collect(), avail)
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub fn n_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// Filtered views plus the number of slots masked by the filter.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub features: Vec<FeatureRecord>,
    pub removed: usize,
}

impl Filtered {
    pub fn by_name(&self, name: &str) -> Option<&FeatureRecord> {
        self.features.iter().find(|f| f.name == name)
    }
}

/// Mask every slot whose value is not public at `issue_time`.
pub fn availability_filter(features: &[FeatureRecord], issue_time: DateTime<Utc>) -> Filtered {
    let mut removed = 0;
    let features = features
        .iter()
        .map(|f| {
            let mut g = f.clone();
            for (v, &t) in g.values.iter_mut().zip(&f.available_at) {
                if t > issue_time && v.is_some() {
                    *v = None;
                    removed += 1;
                }
            }
            g
        })
        .collect();
    Filtered { features, removed }
}
