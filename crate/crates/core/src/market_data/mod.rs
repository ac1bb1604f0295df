//! Market and exogenous time series: alignment, gap handling, gate-closure
//! timing and availability filtering.

pub mod csvio;
pub mod features;
pub mod gates;
pub mod series;
pub mod timeline;

pub use features::{availability_filter, FeatureRecord, Filtered};
pub use gates::{GateClosureRules, MarketArea};
pub use series::{
    align_to_grid, tender_series, vwa_price, Alignment, BidRecord, GapPolicy, MarketTag, PriceSeries,
    Provenance, ReplicationMode,
};
pub use timeline::{Resolution, Timeline};
