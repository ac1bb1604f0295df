use chrono::{DateTime, Utc};
use nalgebra::{DMatrix, DVector};

use super::{feature, target_offset, FeatureStore, Forecaster, DA, XBID};
use crate::error::{Error, Result};
use crate::market_data::{Filtered, Timeline};

const LAGS: [usize; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 96];
/// intercept + lags
const P: usize = 1 + LAGS.len();
const RIDGE: f64 = 1e-3;

/// How the coefficients were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArFit {
    LeastSquares,
    /// Design was rank deficient; a fixed ridge penalty was added.
    Ridge,
    /// Too little history for any complete row; mean of the window.
    InterceptOnly,
}

/// Linear autoregression of the intraday premium over the day-ahead price on
/// its own lags. Multi-step forecasts feed predictions back as lags, so far
/// horizons relax towards the day-ahead curve.
#[derive(Debug, Clone)]
pub struct LinearAr {
    pub coef: Vec<f64>,
    pub fit: ArFit,
    pub n_rows: usize,
}

fn premium(y: &[Option<f64>], da: &[Option<f64>], i: usize) -> Option<f64> {
    Some(y[i]? - da[i]?)
}

fn design_row(y: &[Option<f64>], da: &[Option<f64>], t: usize) -> Option<[f64; P]> {
    let mut row = [0.0; P];
    row[0] = 1.0;
    for (k, &l) in LAGS.iter().enumerate() {
        row[1 + k] = premium(y, da, t.checked_sub(l)?)?;
    }
    da[t]?;
    Some(row)
}

impl LinearAr {
    /// Fit on slots `[start, end)` of the store using only values public at
    /// the start of slot `end`.
    pub fn fit(store: &FeatureStore, start: usize, end: usize) -> Result<Self> {
        if end <= start {
            return Err(Error::InsufficientData("empty training window".into()));
        }
        let issue = store.timeline.slot_start(end);
        let view = store.view(issue, start, end);
        let x = feature(&view, XBID)?;
        let da = feature(&view, DA)?;
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for t in 0..x.timeline.len {
            let Some(yt) = premium(&x.values, &da.values, t) else { continue };
            if let Some(r) = design_row(&x.values, &da.values, t) {
                rows.push(r);
                ys.push(yt);
            }
        }
        if rows.len() < 2 * P {
            let vals: Vec<f64> = (0..x.timeline.len).filter_map(|t| premium(&x.values, &da.values, t)).collect();
            if vals.is_empty() {
                return Err(Error::InsufficientData("no visible training prices".into()));
            }
            let mut coef = vec![0.0; P];
            coef[0] = vals.iter().sum::<f64>() / vals.len() as f64;
            log::warn!("AR: {} complete rows, using intercept-only model", rows.len());
            return Ok(LinearAr {
                coef,
                fit: ArFit::InterceptOnly,
                n_rows: rows.len(),
            });
        }
        let n = rows.len();
        let xm = DMatrix::from_fn(n, P, |i, j| rows[i][j]);
        let yv = DVector::from_vec(ys);
        let xtx = xm.transpose() * &xm;
        let xty = xm.transpose() * &yv;
        let svals = xtx.clone().symmetric_eigenvalues();
        let max = svals.iter().cloned().fold(0.0f64, f64::max);
        let min = svals.iter().cloned().fold(f64::INFINITY, f64::min);
        let (mat, fit) = if min > 1e-10 * max {
            (xtx, ArFit::LeastSquares)
        } else {
            log::warn!("AR: rank-deficient design, ridge penalty {RIDGE}");
            (xtx + DMatrix::identity(P, P) * RIDGE, ArFit::Ridge)
        };
        let coef = match mat.clone().cholesky() {
            Some(c) => c.solve(&xty),
            None => mat
                .lu()
                .solve(&xty)
                .ok_or_else(|| Error::Domain("AR normal equations singular".into()))?,
        };
        Ok(LinearAr {
            coef: coef.iter().copied().collect(),
            fit,
            n_rows: n,
        })
    }

    fn eval(&self, row: &[f64; P]) -> f64 {
        row.iter().zip(&self.coef).map(|(a, b)| a * b).sum()
    }
}

impl Forecaster for LinearAr {
    fn name(&self) -> &str {
        "learned_ar"
    }

    fn lookback_slots(&self) -> usize {
        2 * 96 + 8
    }

    fn predict(&self, view: &Filtered, _issue: DateTime<Utc>, target: Timeline) -> Result<Vec<f64>> {
        let x = feature(view, XBID)?;
        let da = feature(view, DA)?;
        let off = target_offset(&x.timeline, &target)?;
        let end = off + target.len;
        let mut y: Vec<Option<f64>> = x.values[..end.min(x.values.len())].to_vec();
        y.resize(end, None);
        let mut u: Vec<Option<f64>> = (0..end).map(|i| premium(&y, &da.values, i)).collect();
        // roll forward from the last public price
        let start = (0..off).rev().find(|&i| y[i].is_some()).map_or(0, |i| i + 1);
        for t in start..end {
            let mut row = [0.0; P];
            row[0] = 1.0;
            for (k, &l) in LAGS.iter().enumerate() {
                // unseen premia are taken as zero: the day-ahead price itself
                row[1 + k] = t.checked_sub(l).and_then(|i| u[i]).unwrap_or(0.0);
            }
            let d = da.get(t).ok_or(Error::Gap {
                what: "DA".into(),
                slot: t,
            })?;
            let ut = self.eval(&row);
            u[t] = Some(ut);
            y[t] = Some(d + ut);
        }
        Ok(y[off..end].iter().map(|v| v.expect("filled by rollout")).collect())
    }
}
