//! Swiss hydrology pipeline: seasonal anomaly of reservoir filling, regime
//! labels, and the statistics linking them to reserve revenue.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::report::Table;
use crate::row;

type PairStat<'a> = &'a dyn Fn(&[f64], &[f64]) -> Result<f64>;
use crate::stats::{average_ranks, mean, pearson};

pub const LOW_THRESHOLD: f64 = -0.8;
pub const HIGH_THRESHOLD: f64 = 0.7;
const SD_FLOOR: f64 = 1e-9;

/// ISO week number with week 53 folded into 52.
pub fn week_of_year(d: NaiveDate) -> u32 {
    d.iso_week().week().min(52)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalySeries {
    pub week_start: Vec<NaiveDate>,
    pub z: Vec<f64>,
}

/// Standardize each week against the mean and (population) sd of its
/// week-of-year over the whole span.
pub fn seasonal_zscore(week_start: &[NaiveDate], levels: &[f64]) -> Result<AnomalySeries> {
    if week_start.len() != levels.len() {
        return Err(Error::LengthMismatch {
            left: week_start.len(),
            right: levels.len(),
        });
    }
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in week_start.iter().enumerate() {
        groups.entry(week_of_year(*d)).or_default().push(i);
    }
    if let Some((w, _)) = groups.iter().find(|(_, g)| g.len() < 2) {
        return Err(Error::InsufficientData(format!(
            "week {w} has a single observation; climatology needs two years"
        )));
    }
    let mut z = vec![0.0; levels.len()];
    for idx in groups.values() {
        let vals: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
        let mu = mean(&vals);
        let sd = (vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        if sd < SD_FLOOR {
            // a week-of-year that never varies carries no anomaly
            log::warn!("seasonal z-score: week-of-year with zero spread set to z = 0");
            continue;
        }
        for &i in idx {
            z[i] = (levels[i] - mu) / sd;
        }
    }
    Ok(AnomalySeries {
        week_start: week_start.to_vec(),
        z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HydroRegime {
    Low,
    Medium,
    High,
}

impl HydroRegime {
    pub const ALL: [HydroRegime; 3] = [HydroRegime::Low, HydroRegime::Medium, HydroRegime::High];

    pub fn as_str(self) -> &'static str {
        match self {
            HydroRegime::Low => "LOW_HYDRO",
            HydroRegime::Medium => "MEDIUM",
            HydroRegime::High => "HIGH_HYDRO",
        }
    }
}

/// Strict thresholds: exactly -0.8 or 0.7 is MEDIUM.
pub fn classify(z: f64) -> HydroRegime {
    if z > HIGH_THRESHOLD {
        HydroRegime::High
    } else if z < LOW_THRESHOLD {
        HydroRegime::Low
    } else {
        HydroRegime::Medium
    }
}

pub fn classify_regime(z: &AnomalySeries) -> Vec<HydroRegime> {
    z.z.iter().map(|&v| classify(v)).collect()
}

/// Correlation with a two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Two-sided p-value of a correlation via the t-approximation, n − 2 dof.
fn corr_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive dof");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 5 {
        return Err(Error::InsufficientData("spearman needs at least 5 pairs".into()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry);
    if !rho.is_finite() {
        return Err(Error::Domain("spearman undefined: constant ranks".into()));
    }
    Ok(Correlation {
        rho,
        p_value: corr_p(rho, x.len()),
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Univariate least squares of `y` on `x` with a two-sided t-test of the slope.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData("regression needs at least 3 points".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("regressor has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        .max(0.0);
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let df = (n - 2) as f64;
    let slope_se = if df > 0.0 { (sse / df / sxx).sqrt() } else { f64::NAN };
    let p_value = if df == 0.0 {
        f64::NAN
    } else if slope_se == 0.0 {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive dof");
        (2.0 * (1.0 - dist.cdf((slope / slope_se).abs()))).clamp(0.0, 1.0)
    };
    Ok(RegressionResult {
        slope,
        intercept,
        slope_se,
        r2,
        p_value,
        n,
    })
}

/// Two-sided permutation p-value of `stat(x, y)`: share of `n_perm` seeded
/// shuffles of `y` whose |stat| reaches the observed one, with the observed
/// arrangement counted.
pub fn permutation_p<F>(x: &[f64], y: &[f64], n_perm: usize, seed: u64, stat: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64>,
{
    let obs = stat(x, y)?.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut yy = y.to_vec();
    let mut hits = 0usize;
    for _ in 0..n_perm {
        yy.shuffle(&mut rng);
        if stat(x, &yy)?.abs() >= obs - 1e-12 {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_perm + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: usize,
    pub corr: Correlation,
}

/// Spearman correlation of `z` leading `price` by 0..=max_lag weeks. Lags
/// with fewer than 10 overlapping weeks are omitted.
pub fn leadlag_scan(z: &[f64], price: &[f64], max_lag: usize) -> Result<Vec<LagCorrelation>> {
    if z.len() != price.len() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: price.len(),
        });
    }
    let n = z.len();
    let mut out = Vec::new();
    for lag in 0..=max_lag {
        if n < lag + 10 {
            continue;
        }
        match spearman(&z[..n - lag], &price[lag..]) {
            Ok(corr) => out.push(LagCorrelation { lag, corr }),
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Lag with the largest |rho|; ties keep the shorter lag.
pub fn peak_lag(scan: &[LagCorrelation]) -> Option<usize> {
    let mut best: Option<&LagCorrelation> = None;
    for l in scan {
        if best.is_none_or(|b| l.corr.rho.abs() > b.corr.rho.abs()) {
            best = Some(l);
        }
    }
    best.map(|b| b.lag)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub regime: HydroRegime,
    pub n_weeks: usize,
    pub mean_srl_price: f64,
    pub mean_revenue: f64,
    pub mean_da_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeTable {
    /// One row per regime, LOW to HIGH; empty groups have n = 0 and NaN means.
    pub rows: Vec<RegimeRow>,
    /// Mean revenue of HIGH over LOW weeks.
    pub high_low_ratio: f64,
}

pub fn regime_table(regimes: &[HydroRegime], srl_price: &[f64], revenue: &[f64], da_price: &[f64]) -> Result<RegimeTable> {
    let n = regimes.len();
    for v in [srl_price, revenue, da_price] {
        if v.len() != n {
            return Err(Error::LengthMismatch { left: v.len(), right: n });
        }
    }
    let group_mean = |r: HydroRegime, v: &[f64]| -> f64 {
        let vals: Vec<f64> = (0..n).filter(|&i| regimes[i] == r).map(|i| v[i]).collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            mean(&vals)
        }
    };
    let rows: Vec<RegimeRow> = HydroRegime::ALL
        .iter()
        .map(|&r| RegimeRow {
            regime: r,
            n_weeks: regimes.iter().filter(|&&x| x == r).count(),
            mean_srl_price: group_mean(r, srl_price),
            mean_revenue: group_mean(r, revenue),
            mean_da_price: group_mean(r, da_price),
        })
        .collect();
    let high_low_ratio = rows[2].mean_revenue / rows[0].mean_revenue;
    Ok(RegimeTable { rows, high_low_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroConfig {
    pub max_lag: usize,
    /// Permutation resamples for the slope and correlation p-values; 0 keeps
    /// the t-approximation only.
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for HydroConfig {
    fn default() -> Self {
        HydroConfig {
            max_lag: 8,
            n_perm: 0,
            seed: 1,
        }
    }
}

/// Statistics of one revenue definition against the anomaly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevenueLink {
    pub name: String,
    pub ols: RegressionResult,
    pub spearman: Correlation,
    pub perm_p_slope: Option<f64>,
    pub perm_p_spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroReport {
    pub anomaly: AnomalySeries,
    pub regimes: Vec<HydroRegime>,
    pub table: RegimeTable,
    /// Downward-reserve revenue first, then total revenue.
    pub links: Vec<RevenueLink>,
    pub leadlag: Vec<LagCorrelation>,
    pub peak_lag: Option<usize>,
}

/// Anomaly, regimes, grouped table, revenue regressions and the lead-lag
/// scan of the reserve price.
pub fn run_hydro(data: &crate::dataset::HydroData, cfg: &HydroConfig) -> Result<HydroReport> {
    data.validate()?;
    let anomaly = seasonal_zscore(&data.week_start, &data.level)?;
    let regimes = classify_regime(&anomaly);
    let table = regime_table(&regimes, &data.srl_dn, &data.revenue, &data.da)?;
    let mut links = Vec::new();
    for (k, (name, rev)) in [("srl_dn", &data.revenue), ("total", &data.total_revenue)].into_iter().enumerate() {
        let perm = |salt: u64, f: PairStat| -> Result<Option<f64>> {
            if cfg.n_perm == 0 {
                return Ok(None);
            }
            let seed = crate::exec::derive_seed(cfg.seed, &[k as u64, salt]);
            permutation_p(&anomaly.z, rev, cfg.n_perm, seed, f).map(Some)
        };
        links.push(RevenueLink {
            name: name.to_string(),
            ols: ols_fit(&anomaly.z, rev)?,
            spearman: spearman(&anomaly.z, rev)?,
            perm_p_slope: perm(0, &|x, y| ols_fit(x, y).map(|r| r.slope))?,
            perm_p_spearman: perm(1, &|x, y| spearman(x, y).map(|c| c.rho))?,
        });
    }
    let leadlag = leadlag_scan(&anomaly.z, &data.srl_dn, cfg.max_lag)?;
    let peak = peak_lag(&leadlag);
    Ok(HydroReport {
        anomaly,
        regimes,
        table,
        links,
        leadlag,
        peak_lag: peak,
    })
}

impl HydroReport {
    pub fn regime_csv(&self) -> Table {
        let mut t = Table::new(&["regime", "n_weeks", "mean_srl_price", "mean_revenue_eur", "mean_da_price"]);
        for r in &self.table.rows {
            t.push(row![r.regime.as_str(), r.n_weeks, r.mean_srl_price, r.mean_revenue, r.mean_da_price]);
        }
        t
    }

    pub fn stats_csv(&self) -> Table {
        let mut t = Table::new(&["statistic", "revenue", "value", "std_error", "p_value", "perm_p_value", "n"]);
        t.push(row!["high_low_ratio", "srl_dn", self.table.high_low_ratio, None, None, None, self.anomaly.z.len()]);
        for l in &self.links {
            t.push(row!["ols_slope", l.name.as_str(), l.ols.slope, l.ols.slope_se, l.ols.p_value, l.perm_p_slope, l.ols.n]);
            t.push(row!["ols_r2", l.name.as_str(), l.ols.r2, None, None, None, l.ols.n]);
            t.push(row![
                "spearman_rho",
                l.name.as_str(),
                l.spearman.rho,
                None,
                l.spearman.p_value,
                l.perm_p_spearman,
                l.spearman.n
            ]);
        }
        t
    }

    pub fn leadlag_csv(&self) -> Table {
        let mut t = Table::new(&["lag_weeks", "rho", "p_value", "n", "peak"]);
        for l in &self.leadlag {
            let peak = if Some(l.lag) == self.peak_lag { "yes" } else { "no" };
            t.push(row![l.lag, l.corr.rho, l.corr.p_value, l.corr.n, peak]);
        }
        t
    }

    /// Plot data: anomaly against both revenue definitions.
    pub fn scatter_csv(&self, data: &crate::dataset::HydroData) -> Table {
        let mut t = Table::new(&["week_start", "z", "regime", "revenue", "total_revenue"]);
        for i in 0..self.anomaly.z.len() {
            t.push(row![
                self.anomaly.week_start[i].to_string(),
                self.anomaly.z[i],
                self.regimes[i].as_str(),
                data.revenue[i],
                data.total_revenue[i]
            ]);
        }
        t
    }
}
