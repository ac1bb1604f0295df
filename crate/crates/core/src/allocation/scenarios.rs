use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Product;
use crate::error::{Error, Result};
use crate::market_data::{PriceSeries, Resolution, Timeline};
use crate::stats::{quantile_sorted, total_cmp};

pub const BLOCK_HOURS: f64 = 4.0;
pub const BLOCKS_PER_DAY: usize = 6;
pub const BLOCKS_PER_WEEK: usize = 7 * BLOCKS_PER_DAY;

/// Sorted historical clearing prices of one product and block of day.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearingDistribution {
    sorted: Vec<f64>,
    pub window_weeks: usize,
}

impl ClearingDistribution {
    pub fn new(mut prices: Vec<f64>, window_weeks: usize) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InsufficientData("empty clearing distribution".into()));
        }
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("non-finite clearing price".into()));
        }
        prices.sort_by(total_cmp);
        Ok(ClearingDistribution {
            sorted: prices,
            window_weeks,
        })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Bid at `percentile` (0..100) of the window.
    pub fn quantile(&self, percentile: f64) -> f64 {
        quantile_sorted(&self.sorted, percentile / 100.0)
    }
}

/// Share of historical clearing prices at or above `bid`.
pub fn acceptance_probability(bid: f64, dist: &ClearingDistribution) -> f64 {
    let s = dist.sorted();
    let below = s.partition_point(|&p| p < bid);
    (s.len() - below) as f64 / s.len() as f64
}

/// Capacity clearing prices (EUR/MW/h) per product on a 4-hour block timeline.
#[derive(Debug, Clone)]
pub struct BlockPrices {
    pub timeline: Timeline,
    pub prices: [Vec<f64>; 3],
}

impl BlockPrices {
    pub fn new(timeline: Timeline, fcr: Vec<f64>, up: Vec<f64>, dn: Vec<f64>) -> Result<Self> {
        if timeline.resolution != Resolution::FourHours {
            return Err(Error::Domain("capacity prices must be on 4-hour blocks".into()));
        }
        for v in [&fcr, &up, &dn] {
            if v.len() != timeline.len {
                return Err(Error::LengthMismatch {
                    left: v.len(),
                    right: timeline.len,
                });
            }
        }
        Ok(BlockPrices {
            timeline,
            prices: [fcr, up, dn],
        })
    }

    pub fn from_series(fcr: &PriceSeries, up: &PriceSeries, dn: &PriceSeries) -> Result<Self> {
        for s in [fcr, up, dn] {
            if let Some(&g) = s.gaps.first() {
                return Err(Error::Gap {
                    what: s.tag.to_string(),
                    slot: g,
                });
            }
        }
        Self::new(fcr.timeline, fcr.values.clone(), up.values.clone(), dn.values.clone())
    }

    pub fn week(&self, p: Product, w: usize) -> &[f64] {
        &self.prices[p.index()][w * BLOCKS_PER_WEEK..(w + 1) * BLOCKS_PER_WEEK]
    }

    pub fn n_weeks(&self) -> usize {
        self.timeline.len / BLOCKS_PER_WEEK
    }
}

/// Weekly history aligned by week index: capacity blocks and 15-minute
/// intraday prices starting at the same instant.
#[derive(Debug, Clone)]
pub struct MarketHistory {
    pub blocks: BlockPrices,
    pub xbid: PriceSeries,
}

impl MarketHistory {
    pub fn new(blocks: BlockPrices, xbid: PriceSeries) -> Result<Self> {
        if blocks.timeline.start != xbid.timeline.start {
            return Err(Error::Domain("capacity and intraday histories start at different times".into()));
        }
        if xbid.timeline.resolution != Resolution::QuarterHour {
            return Err(Error::Domain("intraday history must be 15-minute".into()));
        }
        Ok(MarketHistory { blocks, xbid })
    }

    pub fn n_weeks(&self) -> usize {
        self.blocks.n_weeks().min(self.xbid.len() / (7 * 96))
    }

    /// Per product and block of day, prices of the `window` weeks before `week`.
    pub fn distributions(&self, week: usize, window: usize) -> Result<Vec<Vec<ClearingDistribution>>> {
        let lo = week.saturating_sub(window);
        if lo >= week {
            return Err(Error::InsufficientData(format!("no history before week {week}")));
        }
        Product::ALL
            .iter()
            .map(|&p| {
                (0..BLOCKS_PER_DAY)
                    .map(|b| {
                        let vals = (lo..week)
                            .flat_map(|w| self.blocks.week(p, w).iter().skip(b).step_by(BLOCKS_PER_DAY))
                            .copied()
                            .collect();
                        ClearingDistribution::new(vals, week - lo)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn representative_day(&self, week: usize) -> Result<Vec<f64>> {
        let lo = week * 7 * 96;
        let w = self.xbid.slice(lo, 7 * 96);
        if !w.is_complete() {
            return Err(Error::Gap {
                what: "XBID week".into(),
                slot: w.gaps[0],
            });
        }
        Ok(representative_day(&w.values))
    }

    pub fn scenario(&self, week: usize) -> Result<Scenario> {
        Ok(Scenario {
            source_week: week,
            capacity: [
                self.blocks.week(Product::Fcr, week).to_vec(),
                self.blocks.week(Product::AfrrUp, week).to_vec(),
                self.blocks.week(Product::AfrrDn, week).to_vec(),
            ],
            xbid_day: self.representative_day(week)?,
        })
    }
}

/// Hourly means of the week's day with the median intraday spread.
pub fn representative_day(week_quarter_hours: &[f64]) -> Vec<f64> {
    let days: Vec<&[f64]> = week_quarter_hours.chunks(96).collect();
    let mut order: Vec<(f64, usize)> = days
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mx = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mn = d.iter().cloned().fold(f64::INFINITY, f64::min);
            (mx - mn, i)
        })
        .collect();
    order.sort_by(|a, b| total_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let day = days[order[(order.len() - 1) / 2].1];
    day.chunks(4).map(|h| h.iter().sum::<f64>() / h.len() as f64).collect()
}

/// One sampled week: capacity clearing prices per block and an intraday day.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// History week the scenario was drawn from; identifies its intraday day.
    pub source_week: usize,
    /// Per product, 42 block clearing prices, EUR/MW/h.
    pub capacity: [Vec<f64>; 3],
    /// 24 hourly intraday prices.
    pub xbid_day: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::InsufficientData("empty scenario set".into()));
        }
        for s in &scenarios {
            if s.capacity.iter().any(|c| c.len() != BLOCKS_PER_WEEK) {
                return Err(Error::Domain("scenario capacity path must have 42 blocks".into()));
            }
        }
        Ok(ScenarioSet { scenarios })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

/// Resample `n` whole weeks from the `window` weeks preceding `week`.
pub fn block_bootstrap(history: &MarketHistory, week: usize, window: usize, n: usize, seed: u64) -> Result<ScenarioSet> {
    let lo = week.saturating_sub(window);
    if lo >= week {
        return Err(Error::InsufficientData(format!("no history before week {week}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = (0..n)
        .map(|_| history.scenario(rng.random_range(lo..week)))
        .collect::<Result<Vec<_>>>()?;
    ScenarioSet::new(scenarios)
}
