use chrono::{DateTime, Duration, Utc};

use super::{feature, target_offset, Forecaster, DA, XBID};
use crate::error::{Error, Result};
use crate::market_data::{Filtered, PriceSeries, Timeline};

/// Realized prices. The only forecaster that bypasses the availability
/// filter: it is the perfect-foresight reference, not a forecast.
#[derive(Debug, Clone)]
pub struct Oracle {
    realized: PriceSeries,
}

impl Oracle {
    pub fn new(realized: PriceSeries) -> Self {
        Oracle { realized }
    }
}

impl Forecaster for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(&self, _view: &Filtered, _issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let first = self
            .realized
            .timeline
            .index_of(target.start)
            .ok_or_else(|| Error::Domain("oracle target outside realized series".into()))?;
        (first..first + target.len)
            .map(|i| {
                self.realized.value(i).ok_or(Error::Gap {
                    what: "realized".into(),
                    slot: i,
                })
            })
            .collect()
    }
}

/// Yesterday's price in the same slot. Values not yet public at issue time
/// are forward-filled from the previous target slot, at most `max_fill` in a row.
#[derive(Debug, Clone)]
pub struct Persistence {
    pub slots_per_day: usize,
    pub max_fill: usize,
}

impl Default for Persistence {
    fn default() -> Self {
        Persistence {
            slots_per_day: 96,
            max_fill: 2,
        }
    }
}

impl Forecaster for Persistence {
    fn name(&self) -> &str {
        "persistence"
    }

    fn lookback_slots(&self) -> usize {
        self.slots_per_day
    }

    fn predict(&self, view: &Filtered, _issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let x = feature(view, XBID)?;
        let off = target_offset(&x.timeline, &target)?;
        let mut out = Vec::with_capacity(target.len);
        let mut run = 0;
        for k in 0..target.len {
            let j = off + k;
            let v = j.checked_sub(self.slots_per_day).and_then(|i| x.get(i));
            match (v, out.last()) {
                (Some(v), _) => {
                    run = 0;
                    out.push(v);
                }
                (None, Some(&prev)) if run < self.max_fill => {
                    run += 1;
                    out.push(prev);
                }
                _ => {
                    return Err(Error::Gap {
                        what: "persistence lag".into(),
                        slot: k,
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Day-ahead clearing price of the hour, copied to its quarter-hours.
#[derive(Debug, Clone, Default)]
pub struct DaAnchor;

impl Forecaster for DaAnchor {
    fn name(&self) -> &str {
        "da_anchor"
    }

    fn predict(&self, view: &Filtered, _issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let da = feature(view, DA)?;
        let off = target_offset(&da.timeline, &target)?;
        (0..target.len)
            .map(|k| {
                da.get(off + k).ok_or(Error::Gap {
                    what: "DA".into(),
                    slot: k,
                })
            })
            .collect()
    }
}

/// Learned model for slots within `horizon` of issue time (closed), anchor beyond.
pub struct Hybrid<M, A> {
    pub ml: M,
    pub anchor: A,
    pub horizon: Duration,
}

impl<M: Forecaster, A: Forecaster> Hybrid<M, A> {
    pub fn new(ml: M, anchor: A, horizon_hours: f64) -> Self {
        Hybrid {
            ml,
            anchor,
            horizon: Duration::seconds((horizon_hours * 3600.0).round() as i64),
        }
    }
}

impl<M: Forecaster, A: Forecaster> Forecaster for Hybrid<M, A> {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn lookback_slots(&self) -> usize {
        self.ml.lookback_slots().max(self.anchor.lookback_slots())
    }

    fn predict(&self, view: &Filtered, issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let n_ml = (0..target.len)
            .take_while(|&k| target.slot_start(k) - issue <= self.horizon)
            .count();
        let mut out = Vec::with_capacity(target.len);
        if n_ml > 0 {
            out.extend(self.ml.predict(view, issue, target.sub(0, n_ml))?);
        }
        if n_ml < target.len {
            // the anchor's view is the same window, shifted target
            out.extend(self.anchor.predict(view, issue, target.sub(n_ml, target.len - n_ml))?);
        }
        Ok(out)
    }
}

/// Hour-of-day mean of the day-ahead price over the last `days` visible days.
/// Used for the multi-day horizon of the daily schedule.
#[derive(Debug, Clone)]
pub struct DaProfile {
    pub days: usize,
    pub slots_per_day: usize,
}

impl Default for DaProfile {
    fn default() -> Self {
        DaProfile {
            days: 7,
            slots_per_day: 96,
        }
    }
}

impl Forecaster for DaProfile {
    fn name(&self) -> &str {
        "da_profile"
    }

    fn lookback_slots(&self) -> usize {
        // targets may lie several days ahead; the view must reach back far
        // enough to contain `days` complete visible days
        (self.days + 5) * self.slots_per_day
    }

    fn predict(&self, view: &Filtered, _issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let da = feature(view, DA)?;
        let spd = self.slots_per_day;
        let slot_min = 24 * 60 / spd as i64;
        let sod = |t: DateTime<Utc>| -> usize {
            ((t - t.date_naive().and_hms_opt(0, 0, 0).unwrap().and_utc()).num_minutes() / slot_min) as usize
        };
        let v0 = sod(da.timeline.start);
        let last = (0..da.timeline.len)
            .rev()
            .find(|&i| da.get(i).is_some())
            .ok_or_else(|| Error::InsufficientData("no visible DA prices".into()))?;
        // end (exclusive, view index) of the last complete visible day
        let day_end = (last + 1 + v0) / spd * spd;
        if day_end < spd + v0 {
            return Err(Error::InsufficientData("no complete DA day visible".into()));
        }
        let day_end = day_end - v0;
        let n_days = (day_end / spd).min(self.days);
        let mut profile = vec![0.0; spd];
        for (s, p) in profile.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut n = 0;
            for d in 1..=n_days {
                if let Some(v) = da.get(day_end - d * spd + s) {
                    acc += v;
                    n += 1;
                }
            }
            if n == 0 {
                return Err(Error::InsufficientData("DA profile slot without history".into()));
            }
            *p = acc / n as f64;
        }
        Ok((0..target.len)
            .map(|k| profile[sod(target.slot_start(k))])
            .collect())
    }
}
