use crate::allocation::{ClearingDistribution, BLOCKS_PER_DAY, BLOCK_HOURS};
use crate::error::Result;

pub const FALLBACK_PERCENTILE: f64 = 40.0;
pub const PERCENTILE_GRID: [f64; 9] = [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0];

/// Bid percentile per regime state.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BidPolicy {
    pub percentiles: Vec<f64>,
}

impl BidPolicy {
    pub fn constant(n_states: usize, p: f64) -> Self {
        BidPolicy {
            percentiles: vec![p; n_states],
        }
    }
}

/// One training week: its regime, realized block clearing prices and the
/// per-block-of-day distributions its bids were drawn from.
#[derive(Debug, Clone)]
pub struct PolicyWeek {
    pub state: usize,
    pub clearing: Vec<f64>,
    pub dists: Vec<ClearingDistribution>,
}

/// Pay-as-bid revenue per MW of bidding `percentile` in every block of the weeks.
pub fn policy_revenue<'a>(weeks: impl IntoIterator<Item = &'a PolicyWeek>, percentile: f64) -> f64 {
    let mut total = 0.0;
    for w in weeks {
        let bids: Vec<f64> = w.dists.iter().map(|d| d.quantile(percentile)).collect();
        for (i, &c) in w.clearing.iter().enumerate() {
            let bid = bids[i % BLOCKS_PER_DAY];
            if bid <= c {
                total += bid * BLOCK_HOURS;
            }
        }
    }
    total
}

/// Per state, the grid percentile with the highest in-sample revenue; ties
/// go to the percentile closest to 40. Unobserved states fall back to 40.
pub fn optimize_bid_policy(weeks: &[PolicyWeek], n_states: usize) -> Result<BidPolicy> {
    let mut out = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let mine: Vec<&PolicyWeek> = weeks.iter().filter(|w| w.state == s).collect();
        if mine.is_empty() {
            log::warn!("bid policy: state {s} unobserved, using percentile {FALLBACK_PERCENTILE}");
            out.push(FALLBACK_PERCENTILE);
            continue;
        }
        let mut best = (f64::NEG_INFINITY, FALLBACK_PERCENTILE);
        for &p in &PERCENTILE_GRID {
            let r = policy_revenue(mine.iter().copied(), p);
            let tol = 1e-9 * r.abs().max(1.0);
            let closer = (p - 40.0).abs() < (best.1 - 40.0).abs();
            if r > best.0 + tol || ((r - best.0).abs() <= tol && closer) {
                best = (r, p);
            }
        }
        out.push(best.1);
    }
    Ok(BidPolicy { percentiles: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist() -> Vec<ClearingDistribution> {
        // quantile(p) = p for every block of day
        (0..BLOCKS_PER_DAY)
            .map(|_| ClearingDistribution::new((0..=100).map(|x| x as f64).collect(), 1).unwrap())
            .collect()
    }

    #[test]
    fn high_clearing_chooses_60() {
        let w = PolicyWeek {
            state: 0,
            clearing: vec![80.0; 42],
            dists: dist(),
        };
        let p = optimize_bid_policy(&[w], 1).unwrap();
        assert_eq!(p.percentiles, vec![60.0]);
    }

    #[test]
    fn tradeoff_fixture_picks_30() {
        // half the blocks clear at 30, half at 100: bidding 30 earns 30 on
        // all 42, bidding 60 earns 60 on 21 (1260 vs 1260 tie is avoided by 29.9)
        let clearing: Vec<f64> = (0..42).map(|i| if i % 2 == 0 { 30.0 } else { 55.0 }).collect();
        let w = PolicyWeek {
            state: 0,
            clearing,
            dists: dist(),
        };
        let oracle = PERCENTILE_GRID
            .iter()
            .map(|&p| (policy_revenue([&w], p), p))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        let p = optimize_bid_policy(&[w], 1).unwrap();
        assert_eq!(oracle.1, 30.0);
        assert_eq!(p.percentiles[0], 30.0);
    }

    #[test]
    fn unobserved_state_falls_back() {
        let w = PolicyWeek {
            state: 0,
            clearing: vec![10.0; 42],
            dists: dist(),
        };
        let p = optimize_bid_policy(&[w], 2).unwrap();
        assert_eq!(p.percentiles[1], 40.0);
    }
}
