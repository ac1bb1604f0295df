use crate::error::{Error, Result};
use crate::stats::{mean, std_pop};

pub const N_FEATURES: usize = 4;
/// Weeks consumed by the rolling window before the first feature row.
pub const WARMUP_WEEKS: usize = 4;
const WINDOW: usize = 4;

/// Column means and standard deviations of a training span.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; N_FEATURES],
    pub sd: [f64; N_FEATURES],
}

impl Standardizer {
    pub fn fit(rows: &[[f64; N_FEATURES]]) -> Self {
        let mut m = [0.0; N_FEATURES];
        let mut s = [1.0; N_FEATURES];
        for k in 0..N_FEATURES {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            m[k] = mean(&col);
            let sd = std_pop(&col);
            s[k] = if sd > 1e-12 { sd } else { 1.0 };
        }
        Standardizer { mean: m, sd: s }
    }

    pub fn apply(&self, row: &[f64; N_FEATURES]) -> Vec<f64> {
        (0..N_FEATURES).map(|k| (row[k] - self.mean[k]) / self.sd[k]).collect()
    }
}

/// Weekly regime features: 4-week rolling mean and standard deviation of
/// the FCR price, week-over-week change, aFRR acceptance rate.
#[derive(Debug, Clone)]
pub struct RegimeFeatures {
    /// Input week index of each row.
    pub weeks: Vec<usize>,
    pub raw: Vec<[f64; N_FEATURES]>,
    pub standardized: Vec<Vec<f64>>,
    pub standardizer: Standardizer,
}

impl RegimeFeatures {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Rows restandardized with another span's parameters.
    pub fn with_standardizer(&self, s: &Standardizer) -> RegimeFeatures {
        RegimeFeatures {
            weeks: self.weeks.clone(),
            raw: self.raw.clone(),
            standardized: self.raw.iter().map(|r| s.apply(r)).collect(),
            standardizer: s.clone(),
        }
    }

    /// Rows whose input week is before `week`.
    pub fn before(&self, week: usize) -> RegimeFeatures {
        let n = self.weeks.partition_point(|&w| w < week);
        RegimeFeatures {
            weeks: self.weeks[..n].to_vec(),
            raw: self.raw[..n].to_vec(),
            standardized: self.standardized[..n].to_vec(),
            standardizer: self.standardizer.clone(),
        }
    }
}

pub fn compute_features(fcr_weekly: &[f64], afrr_acceptance: &[f64]) -> Result<RegimeFeatures> {
    if fcr_weekly.len() != afrr_acceptance.len() {
        return Err(Error::LengthMismatch {
            left: fcr_weekly.len(),
            right: afrr_acceptance.len(),
        });
    }
    if fcr_weekly.len() < WARMUP_WEEKS + 1 {
        return Err(Error::InsufficientData(format!(
            "regime features need >= {} weeks, got {}",
            WARMUP_WEEKS + 1,
            fcr_weekly.len()
        )));
    }
    let mut weeks = Vec::new();
    let mut raw = Vec::new();
    for w in WARMUP_WEEKS..fcr_weekly.len() {
        let win = &fcr_weekly[w + 1 - WINDOW..=w];
        raw.push([mean(win), std_pop(win), fcr_weekly[w] - fcr_weekly[w - 1], afrr_acceptance[w]]);
        weeks.push(w);
    }
    let standardizer = Standardizer::fit(&raw);
    let standardized = raw.iter().map(|r| standardizer.apply(r)).collect();
    Ok(RegimeFeatures {
        weeks,
        raw,
        standardized,
        standardizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_series() {
        let f = compute_features(&[7.0; 10], &[0.5; 10]).unwrap();
        assert_eq!(f.len(), 6);
        for r in &f.raw {
            assert_eq!(r[1], 0.0);
            assert_eq!(r[2], 0.0);
        }
    }

    #[test]
    fn step_spikes_wow_change() {
        let mut x = vec![10.0; 12];
        for v in x.iter_mut().skip(7) {
            *v = 30.0;
        }
        let f = compute_features(&x, &[0.5; 12]).unwrap();
        let (i, _) = f
            .raw
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[2].total_cmp(&b.1[2]))
            .unwrap();
        assert_eq!(f.weeks[i], 7);
    }

    #[test]
    fn rolling_mean_matches_direct_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..50.0)).collect();
        let f = compute_features(&x, &vec![0.3; 40]).unwrap();
        for (r, &w) in f.raw.iter().zip(&f.weeks) {
            let direct = (x[w] + x[w - 1] + x[w - 2] + x[w - 3]) / 4.0;
            assert!((r[0] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short() {
        assert!(compute_features(&[1.0; 4], &[0.0; 4]).is_err());
    }
}
