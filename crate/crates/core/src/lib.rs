//! Multi-market battery storage trading: weekly reserve allocation, daily
//! scheduling and 15-minute dynamic-programming dispatch, plus the
//! forecast-value metrics used to evaluate forecasters by the revenue they
//! enable rather than by their error.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocation;
pub mod battery;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod dispatch;
pub mod evaluation;
pub mod error;
pub mod exec;
pub mod forecast;
pub mod hydro;
pub mod market_data;
pub mod regime;
pub mod report;
pub mod stats;
pub mod synthetic;
pub mod system;

pub use error::{Error, Result};
pub use exec::Execution;
