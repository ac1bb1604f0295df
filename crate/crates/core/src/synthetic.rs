//! Seeded synthetic market data: regime-switching intraday prices with
//! drifting daily shapes, a day-ahead price that sees the shape but not the
//! intraday noise, reserve capacity prices per 4-hour block, and a weekly
//! Swiss hydrology panel.

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::allocation::BlockPrices;
use crate::dataset::{HydroData, MarketData};
use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::market_data::{MarketTag, PriceSeries, Resolution, Timeline};

/// Regime multipliers, in the order low-vol, normal, post-crisis, crisis.
const VOL: [f64; 4] = [0.6, 1.0, 1.4, 2.2];
const LEVEL: [f64; 4] = [0.85, 1.0, 1.25, 1.8];
const FCR: [f64; 4] = [0.6, 1.0, 1.6, 3.0];
const AFRR_ACCEPT: [f64; 4] = [0.75, 0.6, 0.45, 0.3];
/// Harmonic weights of the daily shape (periods 24, 12, 8 h).
const HARMONICS: [f64; 3] = [1.0, 0.6, 0.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthDataConfig {
    /// First delivery day; a Monday keeps weeks aligned with ISO weeks.
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    /// Randomly permute whole days of intraday and day-ahead prices, which
    /// breaks day-to-day persistence of the daily shape.
    pub shuffle_days: bool,
    /// EUR/MWh.
    pub base_level: f64,
    /// Amplitude of the first harmonic of the daily shape, EUR/MWh.
    pub shape_amplitude: f64,
    /// Stationary sd of the 15-minute intraday deviation, EUR/MWh.
    pub noise_sd: f64,
    /// Lag-one autocorrelation of the intraday deviation.
    pub noise_phi: f64,
    /// Daily random-walk step of the harmonic phases, radians.
    pub phase_drift: f64,
    /// Day-ahead price noise around the hourly shape, EUR/MWh.
    pub da_noise_sd: f64,
    /// Daily probability of a scarcity and, independently, a surplus event
    /// covering one or two whole hours at a uniformly drawn time of day.
    pub event_prob: f64,
    /// Mean absolute size of an event, EUR/MWh (exponentially distributed).
    pub event_mean: f64,
    /// Share of an event the day-ahead price anticipates.
    pub event_da_share: f64,
    /// Mean FCR clearing price in the normal regime, EUR/MW/h.
    pub fcr_level: f64,
    pub afrr_level: f64,
    /// Weekly probability of staying in the current regime.
    pub regime_stay: f64,
    pub hydro_weeks: usize,
}

impl Default for SynthDataConfig {
    fn default() -> Self {
        SynthDataConfig {
            start: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            days: 364,
            seed: 7,
            shuffle_days: false,
            base_level: 90.0,
            shape_amplitude: 20.0,
            noise_sd: 10.0,
            noise_phi: 0.95,
            phase_drift: 0.6,
            da_noise_sd: 1.0,
            event_prob: 1.0,
            event_mean: 100.0,
            event_da_share: 1.0,
            fcr_level: 30.0,
            afrr_level: 12.0,
            regime_stay: 0.85,
            hydro_weeks: 260,
        }
    }
}

impl SynthDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::Config("synthetic data needs at least one day".into()));
        }
        if !(0.0..1.0).contains(&self.noise_phi) {
            return Err(Error::Config("noise_phi must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.event_prob) || !(0.0..=1.0).contains(&self.event_da_share) {
            return Err(Error::Config("event_prob and event_da_share must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.regime_stay) {
            return Err(Error::Config("regime_stay must lie in [0, 1]".into()));
        }
        for (name, v) in [
            ("shape_amplitude", self.shape_amplitude),
            ("noise_sd", self.noise_sd),
            ("da_noise_sd", self.da_noise_sd),
            ("phase_drift", self.phase_drift),
            ("event_mean", self.event_mean),
            ("fcr_level", self.fcr_level),
            ("afrr_level", self.afrr_level),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Generated market plus the hidden regime of every week.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub data: MarketData,
    pub week_regime: Vec<usize>,
    /// Source day of each delivery day (identity unless shuffled).
    pub day_order: Vec<usize>,
}

fn regime_path(n: usize, stay: f64, rng: &mut impl Rng) -> Vec<usize> {
    let mut r = 1usize;
    (0..n)
        .map(|w| {
            if w > 0 && rng.random::<f64>() >= stay {
                r = match r {
                    0 => 1,
                    3 => 2,
                    _ if rng.random::<bool>() => r + 1,
                    _ => r - 1,
                };
            }
            r
        })
        .collect()
}

pub fn generate_market(cfg: &SynthDataConfig) -> Result<SyntheticMarket> {
    cfg.validate()?;
    let days = cfg.days;
    let n_weeks = days.div_ceil(7);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[1]));
    let week_regime = regime_path(n_weeks, cfg.regime_stay, &mut rng);
    let regime = |d: usize| week_regime[d / 7];

    let mut phases: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let drift = Normal::new(0.0, cfg.phase_drift.max(1e-12)).unwrap();
    let mut level_dev = 0.0;
    let mut eps = 0.0;
    let innov = (1.0 - cfg.noise_phi * cfg.noise_phi).sqrt();
    let mut erng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[4]));
    let mut xbid_days: Vec<Vec<f64>> = Vec::with_capacity(days);
    let mut da_days: Vec<Vec<f64>> = Vec::with_capacity(days);
    for d in 0..days {
        let r = regime(d);
        if d > 0 {
            for p in phases.iter_mut() {
                *p += drift.sample(&mut rng);
            }
        }
        level_dev = 0.7 * level_dev + 5.0 * rng.sample::<f64, _>(StandardNormal);
        let doy = (cfg.start + Duration::days(d as i64)).ordinal0() as f64;
        let level = cfg.base_level * LEVEL[r] * (1.0 + 0.1 * (std::f64::consts::TAU * (doy - 15.0) / 365.0).cos())
            + level_dev;
        let amp = cfg.shape_amplitude * VOL[r];
        let shape = |h: f64| -> f64 {
            HARMONICS
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(k, (w, ph))| w * (std::f64::consts::TAU * (k + 1) as f64 * h / 24.0 + ph).cos())
                .sum::<f64>()
                * amp
        };
        let sd = cfg.noise_sd * VOL[r];
        let mut events = [0.0; 96];
        for sign in [1.0, -1.0] {
            if erng.random::<f64>() < cfg.event_prob {
                let len = 4 * erng.random_range(1..3usize);
                let st = 4 * erng.random_range(0..=(96 - len) / 4);
                let size = -erng.random::<f64>().ln() * cfg.event_mean;
                for e in &mut events[st..st + len] {
                    *e += sign * size;
                }
            }
        }
        let mut x = Vec::with_capacity(96);
        for s in 0..96 {
            eps = cfg.noise_phi * eps + innov * sd * rng.sample::<f64, _>(StandardNormal);
            x.push(level + shape((s as f64 + 0.5) / 4.0) + events[s] + eps);
        }
        let da: Vec<f64> = (0..24)
            .map(|h| {
                let mean_shape = (0..4).map(|q| shape(h as f64 + (q as f64 + 0.5) / 4.0)).sum::<f64>() / 4.0;
                let mean_event = events[4 * h..4 * h + 4].iter().sum::<f64>() / 4.0;
                level
                    + mean_shape
                    + cfg.event_da_share * mean_event
                    + cfg.da_noise_sd * VOL[r] * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        xbid_days.push(x);
        da_days.push(da);
    }

    let mut day_order: Vec<usize> = (0..days).collect();
    if cfg.shuffle_days {
        let mut srng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[2]));
        day_order.shuffle(&mut srng);
    }
    let start = cfg.start.and_hms_opt(0, 0, 0).unwrap().and_utc();
    let xbid: Vec<f64> = day_order.iter().flat_map(|&d| xbid_days[d].iter().copied()).collect();
    let da: Vec<f64> = day_order.iter().flat_map(|&d| da_days[d].iter().copied()).collect();
    let xbid = PriceSeries::new(Timeline::new(start, Resolution::QuarterHour, days * 96), xbid, MarketTag::Xbid)?;
    let da = PriceSeries::new(Timeline::new(start, Resolution::Hour, days * 24), da, MarketTag::Da)?;

    // reserve capacity: lognormal around a regime level with a block-of-day pattern
    let mut crng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[3]));
    let n_blocks = days * 6;
    let mut fcr = Vec::with_capacity(n_blocks);
    let mut up = Vec::with_capacity(n_blocks);
    let mut dn = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let r = regime(b / 6);
        let tod = 1.0 + 0.2 * (std::f64::consts::TAU * (b % 6) as f64 / 6.0).sin();
        let ln = |rng: &mut ChaCha8Rng, s: f64| (s * rng.sample::<f64, _>(StandardNormal) - 0.5 * s * s).exp();
        fcr.push(cfg.fcr_level * FCR[r] * tod * ln(&mut crng, 0.25));
        up.push(cfg.afrr_level * FCR[r].sqrt() * tod * ln(&mut crng, 0.5));
        dn.push(cfg.afrr_level * FCR[r].sqrt() * (2.0 - tod) * ln(&mut crng, 0.5));
    }
    let blocks = BlockPrices::new(Timeline::new(start, Resolution::FourHours, n_blocks), fcr, up, dn)?;
    let afrr_acceptance = (0..days / 7)
        .map(|w| (AFRR_ACCEPT[week_regime[w]] + 0.05 * crng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
        .collect();
    Ok(SyntheticMarket {
        data: MarketData::new(xbid, da, blocks, afrr_acceptance)?,
        week_regime,
        day_order,
    })
}

/// Weekly reservoir filling with a seasonal cycle and a persistent anomaly;
/// the downward reserve price responds to the anomaly `lag` weeks later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroSynthConfig {
    pub weeks: usize,
    pub seed: u64,
    /// Price response per unit anomaly, EUR/MW/h.
    pub effect: f64,
    pub lag: usize,
    pub noise_sd: f64,
    /// Weekly persistence of the anomaly.
    pub phi: f64,
    /// MW offered in the downward reserve.
    pub mw: f64,
}

impl Default for HydroSynthConfig {
    fn default() -> Self {
        HydroSynthConfig {
            weeks: 260,
            seed: 11,
            effect: 6.0,
            lag: 3,
            noise_sd: 3.0,
            phi: 0.9,
            mw: 5.0,
        }
    }
}

pub fn generate_hydro(cfg: &HydroSynthConfig, start: NaiveDate) -> Result<HydroData> {
    if cfg.weeks < 2 * 52 {
        return Err(Error::Config("hydro panel needs at least two years of weeks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[4]));
    let innov = (1.0 - cfg.phi * cfg.phi).sqrt();
    let mut a = rng.sample::<f64, _>(StandardNormal);
    let mut anomaly = Vec::with_capacity(cfg.weeks);
    for _ in 0..cfg.weeks {
        anomaly.push(a);
        a = cfg.phi * a + innov * rng.sample::<f64, _>(StandardNormal);
    }
    let mut out = HydroData {
        week_start: Vec::new(),
        level: Vec::new(),
        srl_dn: Vec::new(),
        revenue: Vec::new(),
        total_revenue: Vec::new(),
        da: Vec::new(),
    };
    for (w, &an) in anomaly.iter().enumerate() {
        let d = start + Duration::weeks(w as i64);
        let woy = d.iso_week().week() as f64;
        let seasonal = 50.0 + 30.0 * (std::f64::consts::TAU * (woy - 27.0) / 52.0).sin();
        out.week_start.push(d);
        out.level.push((seasonal + 8.0 * an).clamp(0.0, 100.0));
        let driver = w.checked_sub(cfg.lag).map_or(0.0, |i| anomaly[i]);
        let price = (12.0 + cfg.effect * driver + cfg.noise_sd * rng.sample::<f64, _>(StandardNormal)).max(0.0);
        out.srl_dn.push(price);
        let srl_rev = price * cfg.mw * 168.0;
        out.revenue.push(srl_rev);
        // other markets: unrelated to the anomaly
        out.total_revenue.push(srl_rev + (4000.0 + 800.0 * rng.sample::<f64, _>(StandardNormal)).max(0.0));
        out.da.push(90.0 - 5.0 * an + 4.0 * rng.sample::<f64, _>(StandardNormal));
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let cfg = SynthDataConfig {
            days: 28,
            ..Default::default()
        };
        let a = generate_market(&cfg).unwrap();
        let b = generate_market(&cfg).unwrap();
        assert_eq!(a.data.xbid.values, b.data.xbid.values);
        assert_eq!(a.data.n_days(), 28);
        assert_eq!(a.data.n_weeks(), 4);
        assert_eq!(a.data.da.len(), 28 * 24);
        assert_eq!(a.data.blocks.timeline.len, 28 * 6);
        assert_eq!(a.data.afrr_acceptance.len(), 4);
        assert!(a.data.xbid.is_complete());
    }

    #[test]
    fn shuffle_permutes_whole_days() {
        let base = SynthDataConfig {
            days: 21,
            ..Default::default()
        };
        let plain = generate_market(&base).unwrap();
        let shuf = generate_market(&SynthDataConfig {
            shuffle_days: true,
            ..base
        })
        .unwrap();
        assert_ne!(shuf.day_order, plain.day_order);
        for (d, &src) in shuf.day_order.iter().enumerate() {
            assert_eq!(shuf.data.xbid_day(d).values, plain.data.xbid_day(src).values);
            assert_eq!(shuf.data.da_day(d).values, plain.data.da_day(src).values);
        }
    }

    #[test]
    fn hydro_panel() {
        let h = generate_hydro(&HydroSynthConfig::default(), NaiveDate::from_ymd_opt(2020, 1, 6).unwrap()).unwrap();
        assert_eq!(h.len(), 260);
        assert!(h.level.iter().all(|&l| (0.0..=100.0).contains(&l)));
        assert!(generate_hydro(
            &HydroSynthConfig {
                weeks: 60,
                ..Default::default()
            },
            NaiveDate::from_ymd_opt(2020, 1, 6).unwrap()
        )
        .is_err());
    }
}
