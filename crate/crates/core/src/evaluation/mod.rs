//! Forecast-quality and decision-value metrics, the tau-sufficiency scan and
//! the attribution harness.

pub mod bench;
pub mod kendall;
pub mod metrics;
pub mod scan;

pub use bench::{run_benchmarks, volatility_split, BenchConfig, BenchResult, DayRecord, VolatilityRow};
pub use kendall::kendall_tau;
pub use metrics::{cvar, mae, mean_vcr, ranking_inconsistency, rmse, vcr, EvalReport, Vcr};
pub use scan::{estimate_tau_star, net_revenue, tau_scan, DayDispatch, ScanPoint, TauScanConfig, TauScanResult, VCR_THRESHOLD};
