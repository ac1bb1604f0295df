//! Decision value of synthetic forecasts as a function of their Kendall tau.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::battery::BatterySpec;
use crate::dispatch::{DpEngine, DpGrid, Terminal};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::forecast::synth::{calibrate, draw, SynthMethod, SynthTarget};
use crate::market_data::PriceSeries;
use crate::report::{fmt9, Table};
use crate::row;

pub const VCR_THRESHOLD: f64 = 0.97;
pub const MIN_SCAN_DAYS: usize = 30;
pub const MIN_REPS: usize = 30;

/// Per-day dispatch used to value a forecast: one DP over the day's slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DayDispatch {
    pub spec: BatterySpec,
    pub grid: DpGrid,
    pub soc_init: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for DayDispatch {
    fn default() -> Self {
        DayDispatch {
            spec: BatterySpec::default(),
            grid: DpGrid::default(),
            soc_init: 0.0,
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }
}

impl DayDispatch {
    pub fn engine(&self, dt: f64) -> Result<DpEngine> {
        DpEngine::new(&self.spec, dt, self.soc_min, self.soc_max, self.grid)
    }

    /// Net realized revenue of the plan made on `forecast`.
    pub fn realized(&self, engine: &DpEngine, forecast: &[f64], realized: &[f64]) -> Result<f64> {
        let plan = engine.solve(forecast, self.soc_init, Terminal::Free)?;
        Ok(net_revenue(&plan.actions, realized, engine.dt, &self.spec))
    }
}

pub fn net_revenue(actions: &[f64], prices: &[f64], dt: f64, spec: &BatterySpec) -> f64 {
    actions
        .iter()
        .zip(prices)
        .map(|(a, p)| p * a * dt - spec.deg_cost * a.max(0.0) * dt)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauScanConfig {
    pub grid: Vec<f64>,
    pub n_reps: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub dispatch: DayDispatch,
}

impl Default for TauScanConfig {
    fn default() -> Self {
        TauScanConfig {
            grid: (0..25).map(|i| i as f64 / 24.0).collect(),
            n_reps: 40,
            tolerance: 0.03,
            seed: 1,
            dispatch: DayDispatch::default(),
        }
    }
}

impl TauScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("tau grid must be nonempty and strictly increasing".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("tau scan needs at least one replicate".into()));
        }
        if self.n_reps < MIN_REPS {
            log::warn!("tau scan with {} replicates per point (< {MIN_REPS})", self.n_reps);
        }
        self.dispatch.grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub target_tau: f64,
    pub achieved_tau_mean: f64,
    /// Mean over replicates of the day-averaged VCR.
    pub vcr_mean: f64,
    /// Normal-approximation 95% half-width over replicates.
    pub vcr_ci: f64,
    pub n_reps: usize,
    /// Days the generator could not reach the target on.
    pub failed_days: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauScanResult {
    pub method: SynthMethod,
    pub points: Vec<ScanPoint>,
    /// First grid point with mean VCR at or above the threshold.
    pub tau_star: Option<f64>,
    /// Linear interpolation of the threshold crossing between grid points.
    pub tau_star_interp: Option<f64>,
    pub n_days: usize,
    /// Days with a nonpositive oracle revenue, left out of every mean.
    pub excluded_days: usize,
}

impl TauScanResult {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["target_tau", "achieved_tau_mean", "vcr_mean", "vcr_ci", "n_reps", "method"]);
        for p in &self.points {
            t.push(row![
                p.target_tau,
                p.achieved_tau_mean,
                p.vcr_mean,
                p.vcr_ci,
                p.n_reps,
                self.method.as_str()
            ]);
        }
        t
    }

    pub fn summary_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_else(|| "NA".into());
        vec![
            self.method.as_str().to_string(),
            opt(self.tau_star),
            opt(self.tau_star_interp),
            self.n_days.to_string(),
            self.excluded_days.to_string(),
        ]
    }
}

/// Threshold crossing of a VCR curve: first grid point at or above
/// `threshold`, and the linearly interpolated crossing before it.
pub fn estimate_tau_star(points: &[(f64, f64)], threshold: f64) -> (Option<f64>, Option<f64>) {
    let Some(i) = points.iter().position(|&(_, v)| v >= threshold) else {
        return (None, None);
    };
    let first = points[i].0;
    if i == 0 {
        return (Some(first), Some(first));
    }
    let (t0, v0) = points[i - 1];
    let (t1, v1) = points[i];
    let interp = if v1 > v0 { t0 + (threshold - v0) / (v1 - v0) * (t1 - t0) } else { t1 };
    (Some(first), Some(interp.clamp(t0, t1)))
}

struct DayOutcome {
    /// Per grid point: per replicate (forecast revenue, achieved tau); empty
    /// when the generator failed on this day.
    draws: Vec<Vec<(f64, f64)>>,
    oracle: f64,
}

/// Tau-sufficiency scan over whole days of 15-minute prices.
pub fn tau_scan(prices: &PriceSeries, method: SynthMethod, cfg: &TauScanConfig, exec: Execution) -> Result<TauScanResult> {
    cfg.validate()?;
    let n_days = prices.n_days();
    if n_days < MIN_SCAN_DAYS {
        return Err(Error::InsufficientData(format!(
            "tau scan needs {MIN_SCAN_DAYS} days, got {n_days}"
        )));
    }
    let spd = prices.len() / n_days;
    let engine = cfg.dispatch.engine(prices.timeline.dt_hours())?;
    let days: Vec<usize> = (0..n_days).filter(|&d| prices.day(d).is_some()).collect();
    if days.len() < n_days {
        log::warn!("tau scan: {} days with gaps skipped", n_days - days.len());
    }

    let outcomes = exec.map(&days, |&d| -> Result<DayOutcome> {
        let y = &prices.values[d * spd..(d + 1) * spd];
        let oracle = cfg.dispatch.realized(&engine, y, y)?;
        let mut draws = Vec::with_capacity(cfg.grid.len());
        for (g, &target) in cfg.grid.iter().enumerate() {
            let tgt = SynthTarget {
                target_tau: target,
                tolerance: cfg.tolerance,
                method,
                seed: derive_seed(cfg.seed, &[g as u64, d as u64]),
            };
            let cal = match calibrate(y, &tgt) {
                Ok(c) => c,
                Err(Error::Unreachable { best, .. }) => {
                    log::warn!("tau scan: day {d} target {target}: unreachable (best {best:.3})");
                    draws.push(Vec::new());
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut reps = Vec::with_capacity(cfg.n_reps);
            for r in 0..cfg.n_reps {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[g as u64, d as u64, r as u64, 1]));
                match draw(y, &cal, &mut rng) {
                    Ok(out) => reps.push((cfg.dispatch.realized(&engine, &out.values, y)?, out.achieved_tau)),
                    Err(Error::Unreachable { .. }) => {
                        reps.clear();
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            draws.push(reps);
        }
        Ok(DayOutcome { draws, oracle })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let used: Vec<&DayOutcome> = outcomes.iter().filter(|o| o.oracle > 0.0).collect();
    let excluded_days = outcomes.len() - used.len();

    let mut points = Vec::with_capacity(cfg.grid.len());
    for (g, &target) in cfg.grid.iter().enumerate() {
        let ok: Vec<&&DayOutcome> = used.iter().filter(|o| !o.draws[g].is_empty()).collect();
        let failed_days = used.len() - ok.len();
        let mut rep_vcr = Vec::with_capacity(cfg.n_reps);
        let mut tau_acc = 0.0;
        for r in 0..cfg.n_reps {
            if ok.is_empty() {
                break;
            }
            let mut acc = 0.0;
            for o in &ok {
                let (rev, tau) = o.draws[g][r];
                acc += rev / o.oracle;
                tau_acc += tau;
            }
            rep_vcr.push(acc / ok.len() as f64);
        }
        let n = rep_vcr.len();
        let (vcr_mean, vcr_ci, achieved) = if n == 0 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let m = rep_vcr.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (rep_vcr.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            (m, 1.96 * sd / (n as f64).sqrt(), tau_acc / (n * ok.len()) as f64)
        };
        points.push(ScanPoint {
            target_tau: target,
            achieved_tau_mean: achieved,
            vcr_mean,
            vcr_ci,
            n_reps: n,
            failed_days,
            flagged: failed_days > 0,
        });
    }
    let curve: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.vcr_mean.is_finite())
        .map(|p| (p.target_tau, p.vcr_mean))
        .collect();
    let (tau_star, tau_star_interp) = estimate_tau_star(&curve, VCR_THRESHOLD);
    Ok(TauScanResult {
        method,
        points,
        tau_star,
        tau_star_interp,
        n_days: used.len(),
        excluded_days,
    })
}
