use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::total_cmp;

pub fn mae(f: &[f64], y: &[f64]) -> Result<f64> {
    same_len(f, y)?;
    Ok(f.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / f.len() as f64)
}

pub fn rmse(f: &[f64], y: &[f64]) -> Result<f64> {
    same_len(f, y)?;
    Ok((f.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / f.len() as f64).sqrt())
}

fn same_len(f: &[f64], y: &[f64]) -> Result<()> {
    if f.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: y.len(),
        });
    }
    if f.is_empty() {
        return Err(Error::EmptySeries("error metric of empty series".into()));
    }
    Ok(())
}

/// Value capture ratio of one evaluation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vcr {
    pub raw: f64,
    /// `raw` clamped to [0, 1] for reporting.
    pub clamped: f64,
}

/// `None` when the oracle earns nothing: the ratio is undefined and the
/// window is excluded from aggregation.
pub fn vcr(revenue_f: f64, revenue_oracle: f64) -> Option<Vcr> {
    if !(revenue_oracle > 0.0) {
        return None;
    }
    let raw = revenue_f / revenue_oracle;
    Some(Vcr {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// Mean VCR over windows with a positive oracle; returns (mean, n_used, n_excluded).
pub fn mean_vcr(pairs: &[(f64, f64)]) -> (f64, usize, usize) {
    let vals: Vec<f64> = pairs.iter().filter_map(|&(f, o)| vcr(f, o)).map(|v| v.raw).collect();
    let n = vals.len();
    let mean = if n == 0 { f64::NAN } else { vals.iter().sum::<f64>() / n as f64 };
    (mean, n, pairs.len() - n)
}

/// Forecast quality and decision value of one forecaster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub name: String,
    pub mae: f64,
    pub rmse: f64,
    pub tau: f64,
    pub vcr: f64,
    pub n_days: usize,
    pub excluded_days: usize,
}

/// Share of forecaster pairs where the lower-MAE forecaster also has the
/// lower VCR.
pub fn ranking_inconsistency(reports: &[EvalReport]) -> Result<f64> {
    let n = reports.len();
    if n < 2 {
        return Err(Error::InsufficientData("ranking inconsistency needs two reports".into()));
    }
    let mut bad = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && reports[i].mae < reports[j].mae && reports[i].vcr < reports[j].vcr {
                bad += 1;
            }
        }
    }
    Ok(bad as f64 / (n * (n - 1) / 2) as f64)
}

/// Mean of the worst `ceil(level·n)` weekly revenues.
pub fn cvar(revenues: &[f64], level: f64) -> Result<f64> {
    if revenues.is_empty() {
        return Err(Error::EmptySeries("cvar of no revenues".into()));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::Config(format!("cvar level {level} outside (0, 1]")));
    }
    if (revenues.len() as f64) < 1.0 / level {
        log::warn!("cvar: {} observations are fewer than 1/level", revenues.len());
    }
    let mut s = revenues.to_vec();
    s.sort_by(total_cmp);
    let k = ((level * s.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(s[..k].iter().sum::<f64>() / k as f64)
}
