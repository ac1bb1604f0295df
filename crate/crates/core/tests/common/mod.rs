//! Brute-force oracles and fixtures shared by the integration tests and the
//! acceptance run. The oracles are written from the definitions, independent
//! of the library code.

#![allow(dead_code)]

use bess_core::battery::BatterySpec;
use bess_core::dispatch::Terminal;
use bess_core::forecast::FeatureStore;
use bess_core::hydro::{seasonal_zscore, week_of_year, AnomalySeries};
use bess_core::regime::RegimeModel;
use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Best value over all sequences in {-p_max, 0, +p_max}^T that keep the state
/// of charge within [lo, hi] and, if given, end within `band.1` of `band.0`.
pub fn dp_enumerate(
    prices: &[f64],
    spec: &BatterySpec,
    dt: f64,
    lo: f64,
    hi: f64,
    soc0: f64,
    band: Option<(f64, f64)>,
) -> f64 {
    let t = prices.len();
    let mut best = f64::NEG_INFINITY;
    let total = 3usize.pow(t as u32);
    for code in 0..total {
        let mut c = code;
        let mut soc = soc0;
        let mut value = 0.0;
        let mut ok = true;
        for &p in prices {
            let level = (c % 3) as f64 - 1.0;
            c /= 3;
            let delta = level * spec.p_max;
            // discharge drains stored energy through eta_d, charge fills through eta_c
            let d_energy = if delta > 0.0 {
                -delta * dt / spec.eta_d
            } else {
                -delta * dt * spec.eta_c
            };
            soc += d_energy / spec.e_max;
            if soc < lo - 1e-9 || soc > hi + 1e-9 {
                ok = false;
                break;
            }
            value += p * delta * dt - spec.deg_cost * delta.max(0.0) * dt;
        }
        if let (true, Some((target, tol))) = (ok, band) {
            ok = (soc - target).abs() <= tol + 1e-9;
        }
        if ok && value > best {
            best = value;
        }
    }
    best
}

/// Concordant minus discordant pairs by direct pair counting.
pub fn kendall_pairs(f: &[f64], y: &[f64]) -> f64 {
    let n = f.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (f[i] - f[j]).signum() * (y[i] - y[j]).signum();
            if f[i] != f[j] && y[i] != y[j] {
                s += a as i64;
            }
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Rank of each element: 1 + number smaller + half the number of other equal ones.
fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let eq = x.iter().filter(|&&w| w == v).count() as f64;
            less + (eq + 1.0) / 2.0
        })
        .collect()
}

fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_direct(&ranks_by_counting(x), &ranks_by_counting(y))
}

/// (slope, intercept) from the 2x2 normal equations.
pub fn ols_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Mean of the k = ceil(level n) smallest values, found by repeated minimum extraction.
pub fn cvar_oracle(xs: &[f64], level: f64) -> f64 {
    let mut k = 1;
    while (k as f64) < level * xs.len() as f64 - 1e-9 {
        k += 1;
    }
    let mut left = xs.to_vec();
    let mut total = 0.0;
    for _ in 0..k {
        let (i, v) = left
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        total += v;
        left.remove(i);
    }
    total / k as f64
}

pub fn vwa_oracle(prices: &[f64], volumes: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..prices.len() {
        num += prices[i] * volumes[i];
        den += volumes[i];
    }
    num / den
}

/// Textbook rainflow on the reversal sequence: repeatedly remove the first
/// inner range not larger than both neighbours as a full cycle; what remains
/// is counted as half cycles, with equal residual halves paired into a full
/// cycle. Returns sorted (depth, weight) pairs.
pub fn rainflow_oracle(path: &[f64]) -> Vec<(f64, f64)> {
    let mut r: Vec<f64> = Vec::new();
    for &x in path {
        if r.last() == Some(&x) {
            continue;
        }
        let n = r.len();
        if n >= 2 && (r[n - 1] - r[n - 2]) * (x - r[n - 1]) > 0.0 {
            r[n - 1] = x;
        } else {
            r.push(x);
        }
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    'scan: loop {
        for i in 1..r.len().saturating_sub(2) {
            let prev = (r[i] - r[i - 1]).abs();
            let inner = (r[i + 1] - r[i]).abs();
            let next = (r[i + 2] - r[i + 1]).abs();
            if inner <= prev && inner <= next {
                out.push((inner, 1.0));
                r.drain(i..i + 2);
                continue 'scan;
            }
        }
        break;
    }
    let mut halves: Vec<f64> = r.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    halves.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < halves.len() {
        if i + 1 < halves.len() && halves[i] == halves[i + 1] {
            out.push((halves[i], 1.0));
            i += 2;
        } else {
            out.push((halves[i], 0.5));
            i += 1;
        }
    }
    out.retain(|c| c.0 > 0.0);
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

/// A random strictly increasing map with f(0) = 0, built from odd monotone pieces.
pub fn odd_increasing(rng: &mut impl Rng) -> impl Fn(f64) -> f64 {
    let a: f64 = rng.random_range(0.05..5.0);
    let b: f64 = if rng.random::<bool>() { rng.random_range(0.0..1e-3) } else { 0.0 };
    let c: f64 = if rng.random::<bool>() { rng.random_range(0.0..3.0) } else { 0.0 };
    let s: f64 = rng.random_range(20.0..200.0);
    move |x: f64| a * x + b * x * x * x + c * s * (x / s).sinh()
}

/// Every slot of a 96-slot day in a form the oracles can compare bitwise.
pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Random DP instance whose every action lands exactly on a 21-point grid.
pub fn grid_exact_instance(rng: &mut impl Rng) -> (BatterySpec, f64, Vec<f64>, f64, Terminal) {
    let dt = [1.0, 0.5, 0.25][rng.random_range(0..3)];
    let energy_per_slot = [1.0, 2.0, 3.0, 5.0][rng.random_range(0..4)];
    let spec = BatterySpec {
        p_max: energy_per_slot / dt,
        e_max: 10.0,
        eta_c: [1.0, 0.5][rng.random_range(0..2)],
        eta_d: [1.0, 0.5][rng.random_range(0..2)],
        deg_cost: rng.random_range(0..=8) as f64,
        dod_exponent: 1.5,
    };
    let t = rng.random_range(1..=8);
    let prices = (0..t).map(|_| rng.random_range(-30..=120) as f64).collect();
    let soc0 = rng.random_range(0..=20) as f64 * 0.05;
    let terminal = if rng.random::<bool>() {
        Terminal::Free
    } else {
        Terminal::Band { target: soc0 }
    };
    (spec, dt, prices, soc0, terminal)
}

/// Seasonal filling curve plus an AR(1) anomaly over 260 Mondays from
/// 2019-01-07, run through the pipeline's z-score.
pub fn hydro_anomaly(rng: &mut impl Rng, phi: f64) -> AnomalySeries {
    let dates = mondays(HYDRO_WEEKS);
    let eps = Normal::new(0.0, 1.0).unwrap();
    let mut a = 0.0;
    let levels: Vec<f64> = dates
        .iter()
        .map(|d| {
            a = phi * a + eps.sample(rng);
            let season = 50.0 + 35.0 * ((week_of_year(*d) as f64 - 12.0) / 52.0 * std::f64::consts::TAU).sin();
            season + 4.0 * a
        })
        .collect();
    seasonal_zscore(&dates, &levels).unwrap()
}

pub const HYDRO_WEEKS: usize = 260;

pub fn mondays(n: usize) -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(2019, 1, 7).unwrap();
    (0..n).map(|i| first + Duration::weeks(i as i64)).collect()
}

/// Copy of the store with every value that is not yet public at `issue`
/// replaced by garbage.
pub fn poisoned(store: &FeatureStore, issue: DateTime<Utc>, rng: &mut impl Rng) -> FeatureStore {
    let mut s = store.clone();
    for f in &mut s.features {
        for (v, &t) in f.values.iter_mut().zip(&f.available_at) {
            if t > issue {
                *v = Some(rng.random_range(-1e6..1e6));
            }
        }
    }
    s
}

/// Sticky hidden chain with Gaussian emissions centred on `means[state]`.
pub fn sample_chain(means: &[Vec<f64>], sd: f64, stay: f64, n: usize, seed: u64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let k = means.len();
    let mut s = 0;
    let mut states = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.random::<f64>() > stay {
            s = (s + rng.random_range(1..k)) % k;
        }
        states.push(s);
        obs.push(means[s].iter().map(|m| m + noise.sample(&mut rng)).collect());
    }
    (states, obs)
}

pub fn log_path(m: &RegimeModel, obs: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut lp = m.pi[path[0]].ln() + m.log_emission(path[0], &obs[0]);
    for t in 1..path.len() {
        lp += m.a[path[t - 1]][path[t]].ln() + m.log_emission(path[t], &obs[t]);
    }
    lp
}
