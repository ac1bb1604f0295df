//! Synthetic forecasts with a controlled Kendall rank correlation to the
//! realized prices.
//!
//! Generation is split into a calibration step (find the mixing parameter
//! for a target tau on one day) and a draw step, so a scan can calibrate once
//! per day and grid point and then draw many replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::evaluation::kendall_tau;
use crate::stats::{average_ranks, mean, median, std_pop};

pub const MIN_LEN: usize = 10;
pub const DEFAULT_TOLERANCE: f64 = 0.03;
const PROBES: usize = 31;
const BISECTION_STEPS: usize = 60;
const MAX_DRAWS: usize = 2000;
const PROBE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMethod {
    AlphaInterp,
    RankPerturb,
    GaussCopula,
}

impl SynthMethod {
    pub const ALL: [SynthMethod; 3] = [SynthMethod::AlphaInterp, SynthMethod::RankPerturb, SynthMethod::GaussCopula];

    pub fn as_str(self) -> &'static str {
        match self {
            SynthMethod::AlphaInterp => "alpha_interp",
            SynthMethod::RankPerturb => "rank_perturb",
            SynthMethod::GaussCopula => "gauss_copula",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthesis method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthTarget {
    pub target_tau: f64,
    pub tolerance: f64,
    pub method: SynthMethod,
    pub seed: u64,
}

impl SynthTarget {
    pub fn new(target_tau: f64, method: SynthMethod, seed: u64) -> Self {
        SynthTarget {
            target_tau,
            tolerance: DEFAULT_TOLERANCE,
            method,
            seed,
        }
    }

    /// A target of exactly 1 is the exact-copy limit and is allowed even
    /// though `1 + tolerance` exceeds the tau range.
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("synthesis tolerance must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.target_tau) {
            return Err(Error::Config(format!("target tau {} outside [0, 1]", self.target_tau)));
        }
        if self.target_tau < 1.0 && self.target_tau + self.tolerance > 1.0 {
            return Err(Error::Config(format!(
                "target tau {} plus tolerance {} exceeds 1",
                self.target_tau, self.tolerance
            )));
        }
        Ok(())
    }

    fn exact(&self) -> bool {
        self.target_tau >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub values: Vec<f64>,
    pub achieved_tau: f64,
    /// α for alpha interpolation, ρ_s for the copula, accepted moves for the
    /// rank walk.
    pub param: f64,
}

/// Result of calibrating a generator on one realized day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub target: SynthTarget,
    pub param: f64,
    pub probe_tau: f64,
}

fn check_input(y: &[f64], tgt: &SynthTarget) -> Result<()> {
    tgt.validate()?;
    if y.len() < MIN_LEN {
        return Err(Error::InsufficientData(format!(
            "synthetic forecast needs at least {MIN_LEN} values, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("realized prices contain non-finite values".into()));
    }
    Ok(())
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Scaled noise `mean + sd·z` matching the realized day's level and spread.
struct AlphaMix {
    mu: f64,
    sd: f64,
}

impl AlphaMix {
    fn new(y: &[f64]) -> Self {
        AlphaMix {
            mu: mean(y),
            sd: std_pop(y),
        }
    }

    fn apply(&self, y: &[f64], alpha: f64, z: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(z)
            .map(|(&v, &e)| alpha * v + (1.0 - alpha) * (self.mu + self.sd * e))
            .collect()
    }
}

struct Copula {
    scores: Vec<f64>,
    sorted: Vec<f64>,
    normal: Normal,
}

impl Copula {
    fn new(y: &[f64]) -> Self {
        let normal = Normal::standard();
        let n = y.len() as f64;
        let scores = average_ranks(y)
            .into_iter()
            .map(|r| normal.inverse_cdf((r - 0.5) / n))
            .collect();
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        Copula { scores, sorted, normal }
    }

    fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    fn apply(&self, rho_s: f64, z: &[f64]) -> Vec<f64> {
        let rho = 2.0 * (std::f64::consts::PI * rho_s / 6.0).sin();
        let rho = rho.clamp(-1.0, 1.0);
        let w = (1.0 - rho * rho).max(0.0).sqrt();
        self.scores
            .iter()
            .zip(z)
            .map(|(&u, &e)| {
                let x = if rho >= 1.0 { u } else { rho * u + w * e };
                self.quantile(self.normal.cdf(x))
            })
            .collect()
    }
}

/// Bisection on a mixing parameter in [0, 1] whose probe-median tau
/// increases with the parameter. Returns (param, median tau).
fn bisect<F: FnMut(f64) -> Result<f64>>(target: f64, tol: f64, mut tau_at: F) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = (f64::NAN, f64::NAN);
    let consider = |p: f64, t: f64, best: &mut (f64, f64)| {
        if best.1.is_nan() || (t - target).abs() < (best.1 - target).abs() {
            *best = (p, t);
        }
    };
    let t_lo = tau_at(lo)?;
    consider(lo, t_lo, &mut best);
    if t_lo >= target {
        return Ok(best);
    }
    let t_hi = tau_at(hi)?;
    consider(hi, t_hi, &mut best);
    if t_hi <= target {
        return finish(target, tol, best);
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let t = tau_at(mid)?;
        consider(mid, t, &mut best);
        if (t - target).abs() <= 0.25 * tol {
            break;
        }
        if t < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    finish(target, tol, best)
}

fn finish(target: f64, tol: f64, best: (f64, f64)) -> Result<(f64, f64)> {
    if (best.1 - target).abs() > tol {
        return Err(Error::Unreachable { target, best: best.1 });
    }
    Ok(best)
}

/// Probe noise shared by every bisection step (common random numbers), so
/// the probe-median tau is a deterministic, near-monotone function of the
/// parameter.
fn probe_noise(seed: u64, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PROBE_SALT);
    (0..PROBES).map(|_| normals(&mut rng, n)).collect()
}

fn probe_median<G: Fn(&[f64]) -> Vec<f64>>(y: &[f64], noise: &[Vec<f64>], gen: G) -> Result<f64> {
    let taus = noise
        .iter()
        .map(|z| kendall_tau(&gen(z), y))
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&taus))
}

pub fn calibrate(y: &[f64], tgt: &SynthTarget) -> Result<Calibration> {
    check_input(y, tgt)?;
    let cal = |param, probe_tau| Calibration {
        target: *tgt,
        param,
        probe_tau,
    };
    if tgt.exact() {
        return Ok(cal(1.0, kendall_tau(y, y)?));
    }
    match tgt.method {
        SynthMethod::AlphaInterp => {
            let mix = AlphaMix::new(y);
            let noise = probe_noise(tgt.seed, y.len());
            let (a, t) = bisect(tgt.target_tau, tgt.tolerance, |a| {
                probe_median(y, &noise, |z| mix.apply(y, a, z))
            })?;
            Ok(cal(a, t))
        }
        SynthMethod::GaussCopula => {
            let cop = Copula::new(y);
            let noise = probe_noise(tgt.seed, y.len());
            let (r, t) = bisect(tgt.target_tau, tgt.tolerance, |r| probe_median(y, &noise, |z| cop.apply(r, z)))?;
            Ok(cal(r, t))
        }
        SynthMethod::RankPerturb => {
            let top = kendall_tau(y, y)?;
            if top < tgt.target_tau - tgt.tolerance {
                return Err(Error::Unreachable {
                    target: tgt.target_tau,
                    best: top,
                });
            }
            Ok(cal(f64::NAN, tgt.target_tau))
        }
    }
}

/// One draw from a calibrated generator. Draws whose measured tau falls
/// outside the tolerance are rejected and redrawn.
pub fn draw(y: &[f64], cal: &Calibration, rng: &mut impl Rng) -> Result<SynthOutput> {
    let tgt = &cal.target;
    if tgt.exact() {
        return Ok(SynthOutput {
            values: y.to_vec(),
            achieved_tau: kendall_tau(y, y)?,
            param: 1.0,
        });
    }
    if tgt.method == SynthMethod::RankPerturb {
        return rank_walk(y, tgt, rng);
    }
    let mix = AlphaMix::new(y);
    let cop = (tgt.method == SynthMethod::GaussCopula).then(|| Copula::new(y));
    let mut best_tau = f64::NAN;
    for _ in 0..MAX_DRAWS {
        let z = normals(rng, y.len());
        let values = match &cop {
            Some(c) => c.apply(cal.param, &z),
            None => mix.apply(y, cal.param, &z),
        };
        let tau = kendall_tau(&values, y)?;
        if (tau - tgt.target_tau).abs() <= tgt.tolerance {
            return Ok(SynthOutput {
                values,
                achieved_tau: tau,
                param: cal.param,
            });
        }
        if best_tau.is_nan() || (tau - tgt.target_tau).abs() < (best_tau - tgt.target_tau).abs() {
            best_tau = tau;
        }
    }
    Err(Error::Unreachable {
        target: tgt.target_tau,
        best: best_tau,
    })
}

fn sgn(x: f64) -> i64 {
    (x > 0.0) as i64 - (x < 0.0) as i64
}

/// Random walk over adjacent transpositions in the forecast's value order.
/// Swapping the k-th and (k+1)-th smallest forecast values flips the
/// concordance of exactly one pair of slots, so tau is tracked in O(1).
fn rank_walk(y: &[f64], tgt: &SynthTarget, rng: &mut impl Rng) -> Result<SynthOutput> {
    let n = y.len();
    let pairs = (n * (n - 1) / 2) as f64;
    let mut s = y.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let mut cd = crate::evaluation::kendall::concordance(&s, y)?;
    let jitter = rng.random_range(-0.5..=0.5) * tgt.tolerance;
    let aim = (tgt.target_tau + jitter).clamp(-1.0, 1.0);
    let aim_cd = aim * pairs;
    let max_steps = 200 * n * n + 10_000;
    let mut moves = 0usize;
    for _ in 0..max_steps {
        if (cd as f64 - aim_cd).abs() <= 1.0 {
            break;
        }
        let k = rng.random_range(0..n - 1);
        let (a, b) = (order[k], order[k + 1]);
        let before = sgn(y[a] - y[b]) * sgn(s[a] - s[b]);
        let delta = -2 * before;
        let toward = if (cd as f64) > aim_cd { delta < 0 } else { delta > 0 };
        if !toward {
            continue;
        }
        s.swap(a, b);
        order.swap(k, k + 1);
        cd += delta;
        moves += 1;
    }
    let tau = cd as f64 / pairs;
    if (tau - tgt.target_tau).abs() > tgt.tolerance {
        return Err(Error::Unreachable {
            target: tgt.target_tau,
            best: tau,
        });
    }
    Ok(SynthOutput {
        values: s,
        achieved_tau: tau,
        param: moves as f64,
    })
}

/// Calibrate and draw once, seeded from the target.
pub fn synthesize(y: &[f64], tgt: &SynthTarget) -> Result<SynthOutput> {
    let cal = calibrate(y, tgt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tgt.seed);
    draw(y, &cal, &mut rng)
}

pub fn synth_alpha(y: &[f64], tgt: &SynthTarget) -> Result<SynthOutput> {
    synthesize(
        y,
        &SynthTarget {
            method: SynthMethod::AlphaInterp,
            ..*tgt
        },
    )
}

pub fn synth_rank_perturb(y: &[f64], tgt: &SynthTarget) -> Result<SynthOutput> {
    synthesize(
        y,
        &SynthTarget {
            method: SynthMethod::RankPerturb,
            ..*tgt
        },
    )
}

pub fn synth_copula(y: &[f64], tgt: &SynthTarget) -> Result<SynthOutput> {
    synthesize(
        y,
        &SynthTarget {
            method: SynthMethod::GaussCopula,
            ..*tgt
        },
    )
}
