//! Layer-1 weekly capacity allocation across FCR, aFRR and intraday trading.

mod optimizer;
mod scenarios;

use serde::{Deserialize, Serialize};

pub use optimizer::{
    expected_week_revenue, optimize_allocation, optimize_allocation_unit, unit_capacity_revenue, AllocationLimits, XbidTerm,
};
pub use scenarios::{
    acceptance_probability, block_bootstrap, representative_day, BlockPrices, ClearingDistribution,
    MarketHistory, Scenario, ScenarioSet, BLOCKS_PER_DAY, BLOCKS_PER_WEEK, BLOCK_HOURS,
};

use crate::battery::BatterySpec;
use crate::error::{Error, Result};

/// Sustained-activation duration of each reserve product, hours.
pub const FCR_HOURS: f64 = 0.5;
pub const AFRR_HOURS: f64 = 1.0;

/// Reserve capacity products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Product {
    Fcr,
    AfrrUp,
    AfrrDn,
}

impl Product {
    pub const ALL: [Product; 3] = [Product::Fcr, Product::AfrrUp, Product::AfrrDn];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Product::Fcr => "FCR",
            Product::AfrrUp => "aFRR_up",
            Product::AfrrDn => "aFRR_dn",
        }
    }
}

/// State-of-charge reserve for worst-case activation of the given reserves.
pub fn soc_buffer(p_fcr: f64, p_afrr: f64, e_max: f64) -> Result<f64> {
    if p_fcr < 0.0 || p_afrr < 0.0 {
        return Err(Error::Domain("reserve power must be >= 0".into()));
    }
    if !(e_max > 0.0) {
        return Err(Error::Domain("e_max must be > 0".into()));
    }
    let b = (p_fcr * FCR_HOURS + p_afrr * AFRR_HOURS) / e_max;
    if b > 1.0 + 1e-12 {
        return Err(Error::InfeasibleReserve { buffer: b });
    }
    Ok(b)
}

/// MW committed per market for one week and the resulting soc band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeeklyAllocation {
    pub p_fcr: f64,
    pub p_afrr_up: f64,
    pub p_afrr_dn: f64,
    pub p_xbid: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl WeeklyAllocation {
    /// Discharge-side activations (FCR, aFRR up) need stored energy below
    /// the band; charge-side activations (FCR, aFRR down) need headroom above it.
    pub fn new(p_fcr: f64, p_afrr_up: f64, p_afrr_dn: f64, spec: &BatterySpec) -> Result<Self> {
        let soc_min = soc_buffer(p_fcr, p_afrr_up, spec.e_max)?;
        let soc_max = 1.0 - soc_buffer(p_fcr, p_afrr_dn, spec.e_max)?;
        if soc_min > soc_max + 1e-12 {
            return Err(Error::InfeasibleReserve {
                buffer: soc_min + (1.0 - soc_max),
            });
        }
        let p_xbid = spec.p_max - p_fcr - p_afrr_up.max(p_afrr_dn);
        if p_xbid < -1e-9 {
            return Err(Error::Infeasible(format!(
                "reserve power {} exceeds p_max {}",
                p_fcr + p_afrr_up.max(p_afrr_dn),
                spec.p_max
            )));
        }
        Ok(WeeklyAllocation {
            p_fcr,
            p_afrr_up,
            p_afrr_dn,
            p_xbid: p_xbid.max(0.0),
            soc_min,
            soc_max: soc_max.max(soc_min),
        })
    }

    /// Everything to intraday trading.
    pub fn energy_only(spec: &BatterySpec) -> Self {
        WeeklyAllocation {
            p_fcr: 0.0,
            p_afrr_up: 0.0,
            p_afrr_dn: 0.0,
            p_xbid: spec.p_max,
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }

    pub fn mw(&self, p: Product) -> f64 {
        match p {
            Product::Fcr => self.p_fcr,
            Product::AfrrUp => self.p_afrr_up,
            Product::AfrrDn => self.p_afrr_dn,
        }
    }
}

/// How the bid percentile of a week is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BidStrategy {
    StaticQuantile { percentile: f64 },
    RegimePolicy { policy: crate::regime::BidPolicy },
}

impl Default for BidStrategy {
    fn default() -> Self {
        BidStrategy::StaticQuantile { percentile: 40.0 }
    }
}

impl BidStrategy {
    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (20.0..=60.0).contains(&p);
        match self {
            BidStrategy::StaticQuantile { percentile } if !ok(*percentile) => Err(Error::Config(format!(
                "bid percentile {percentile} outside [20, 60]"
            ))),
            BidStrategy::RegimePolicy { policy } if !policy.percentiles.iter().all(|&p| ok(p)) => {
                Err(Error::Config("policy percentile outside [20, 60]".into()))
            }
            _ => Ok(()),
        }
    }

    /// Percentile for a week in regime `state` (ignored by the static mode).
    pub fn percentile(&self, state: Option<usize>) -> f64 {
        match self {
            BidStrategy::StaticQuantile { percentile } => *percentile,
            BidStrategy::RegimePolicy { policy } => state
                .and_then(|s| policy.percentiles.get(s).copied())
                .unwrap_or(crate::regime::FALLBACK_PERCENTILE),
        }
    }
}
