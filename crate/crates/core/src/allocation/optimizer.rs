use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::scenarios::{ClearingDistribution, Scenario, ScenarioSet, BLOCKS_PER_DAY, BLOCK_HOURS};
use super::{Product, WeeklyAllocation, FCR_HOURS};
use crate::battery::BatterySpec;
use crate::dispatch::{DpEngine, DpGrid, Terminal};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationLimits {
    /// Search resolution, MW.
    pub step_mw: f64,
    /// Largest share of the soc range the symmetric FCR buffer (both sides)
    /// may occupy; 0.5 limits a 1-hour battery to half its power in FCR.
    pub fcr_band_cap: f64,
    /// Minimum MW left for intraday trading.
    pub xbid_floor: f64,
    /// DP grid of the representative-day intraday term.
    pub grid: DpGrid,
}

impl Default for AllocationLimits {
    fn default() -> Self {
        AllocationLimits {
            step_mw: 0.1,
            fcr_band_cap: 0.5,
            xbid_floor: 0.0,
            grid: DpGrid::new(51, 11),
        }
    }
}

type Key = (u64, u64);

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced (band energy : power) ratio in micro-units.
fn ratio_key(band_mwh: f64, p_mw: f64) -> Key {
    let a = (band_mwh * 1e6).round() as u64;
    let b = (p_mw * 1e6).round() as u64;
    let g = gcd(a, b).max(1);
    (a / g, b / g)
}

/// Weekly intraday value of a residual battery on a scenario's
/// representative day. The DP is positively homogeneous in (power, band
/// energy), so values are computed once per energy/power ratio at unit power
/// and cached per history week.
#[derive(Debug, Clone)]
pub struct XbidTerm {
    spec: BatterySpec,
    grid: DpGrid,
    cache: HashMap<(usize, Key), f64>,
}

impl XbidTerm {
    pub fn new(spec: &BatterySpec, grid: DpGrid) -> Self {
        XbidTerm {
            spec: *spec,
            grid,
            cache: HashMap::new(),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    /// Daily value at unit power with band energy `num/den` MWh.
    fn unit_value(spec: &BatterySpec, grid: DpGrid, day: &[f64], key: Key) -> Result<f64> {
        if key.0 == 0 {
            return Ok(0.0);
        }
        let unit = BatterySpec {
            p_max: 1.0,
            e_max: key.0 as f64 / key.1 as f64,
            ..*spec
        };
        let dt = 24.0 / day.len() as f64;
        let e = DpEngine::new(&unit, dt, 0.0, 1.0, grid)?;
        Ok(e.solve(day, 0.0, Terminal::Free)?.planned_value)
    }

    fn ensure(&mut self, scenarios: &ScenarioSet, keys: &BTreeSet<Key>, exec: Execution) -> Result<()> {
        let mut days: BTreeMap<usize, &Scenario> = BTreeMap::new();
        for s in &scenarios.scenarios {
            days.entry(s.source_week).or_insert(s);
        }
        let todo: Vec<(usize, Key)> = days
            .keys()
            .flat_map(|&w| keys.iter().map(move |&k| (w, k)))
            .filter(|wk| !self.cache.contains_key(wk))
            .collect();
        let (spec, grid) = (self.spec, self.grid);
        let vals = exec.map(&todo, |&(w, k)| Self::unit_value(&spec, grid, &days[&w].xbid_day, k));
        for (wk, v) in todo.into_iter().zip(vals) {
            self.cache.insert(wk, v?);
        }
        Ok(())
    }

    /// Expected weekly intraday value over the scenarios, EUR.
    pub fn expected(&mut self, scenarios: &ScenarioSet, p_xbid: f64, band_mwh: f64) -> Result<f64> {
        if p_xbid <= 0.0 || band_mwh <= 0.0 {
            return Ok(0.0);
        }
        let key = ratio_key(band_mwh, p_xbid);
        self.ensure(scenarios, &BTreeSet::from([key]), Execution::Sequential)?;
        Ok(self.mean_from_cache(scenarios, key, p_xbid))
    }

    fn mean_from_cache(&self, scenarios: &ScenarioSet, key: Key, p_xbid: f64) -> f64 {
        let total: f64 = scenarios
            .scenarios
            .iter()
            .map(|s| 7.0 * p_xbid * self.cache[&(s.source_week, key)])
            .sum();
        total / scenarios.len() as f64
    }
}

/// Expected weekly pay-as-bid revenue per MW of each product.
pub fn unit_capacity_revenue(
    percentile: f64,
    scenarios: &ScenarioSet,
    dists: &[Vec<ClearingDistribution>],
) -> [f64; 3] {
    let mut out = [0.0; 3];
    for p in Product::ALL {
        let bids: Vec<f64> = (0..BLOCKS_PER_DAY).map(|b| dists[p.index()][b].quantile(percentile)).collect();
        let total: f64 = scenarios
            .scenarios
            .iter()
            .map(|s| {
                s.capacity[p.index()]
                    .iter()
                    .enumerate()
                    .map(|(i, &clear)| {
                        let bid = bids[i % BLOCKS_PER_DAY];
                        if bid <= clear {
                            bid * BLOCK_HOURS
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .sum();
        out[p.index()] = total / scenarios.len() as f64;
    }
    out
}

fn band_mwh(a: &WeeklyAllocation, spec: &BatterySpec) -> f64 {
    ((a.soc_max - a.soc_min) * spec.e_max).max(0.0)
}

/// Mean over scenarios of capacity revenue (accepted when the bid does not
/// exceed the scenario's clearing price) plus the intraday term.
pub fn expected_week_revenue(
    alloc: &WeeklyAllocation,
    percentile: f64,
    scenarios: &ScenarioSet,
    dists: &[Vec<ClearingDistribution>],
    spec: &BatterySpec,
    xbid: &mut XbidTerm,
) -> Result<f64> {
    let check = WeeklyAllocation::new(alloc.p_fcr, alloc.p_afrr_up, alloc.p_afrr_dn, spec)?;
    if alloc.p_xbid > check.p_xbid + 1e-9 {
        return Err(Error::Infeasible("p_xbid exceeds the residual power".into()));
    }
    let unit = unit_capacity_revenue(percentile, scenarios, dists);
    let cap: f64 = Product::ALL.iter().map(|&p| alloc.mw(p) * unit[p.index()]).sum();
    Ok(cap + xbid.expected(scenarios, alloc.p_xbid, band_mwh(alloc, spec))?)
}

/// Grid search over (p_fcr, p_afrr_up, p_afrr_dn); the residual goes to
/// intraday trading. Ties keep the first point in ascending order.
pub fn optimize_allocation(
    scenarios: &ScenarioSet,
    percentile: f64,
    dists: &[Vec<ClearingDistribution>],
    spec: &BatterySpec,
    limits: &AllocationLimits,
    xbid: &mut XbidTerm,
    exec: Execution,
) -> Result<(WeeklyAllocation, f64)> {
    let unit = unit_capacity_revenue(percentile, scenarios, dists);
    optimize_allocation_unit(scenarios, unit, spec, limits, xbid, exec)
}

/// Grid search with the expected weekly capacity revenue per MW of each
/// product given directly.
pub fn optimize_allocation_unit(
    scenarios: &ScenarioSet,
    unit: [f64; 3],
    spec: &BatterySpec,
    limits: &AllocationLimits,
    xbid: &mut XbidTerm,
    exec: Execution,
) -> Result<(WeeklyAllocation, f64)> {
    if !(limits.step_mw > 0.0) {
        return Err(Error::Config("allocation step must be > 0".into()));
    }
    let step = limits.step_mw;
    let n_power = (spec.p_max / step + 1e-9).floor() as usize;
    let fcr_cap = limits.fcr_band_cap * spec.e_max / (2.0 * FCR_HOURS);
    let n_fcr = ((fcr_cap.min(spec.p_max) / step) + 1e-9).floor() as usize;

    let mut candidates = Vec::new();
    for f in 0..=n_fcr {
        for u in 0..=n_power {
            for d in 0..=n_power {
                let (pf, pu, pd) = (f as f64 * step, u as f64 * step, d as f64 * step);
                let Ok(a) = WeeklyAllocation::new(pf, pu, pd, spec) else { continue };
                if a.p_xbid + 1e-9 < limits.xbid_floor {
                    continue;
                }
                candidates.push(a);
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::Infeasible("no feasible allocation on the grid".into()));
    }
    let keys: BTreeSet<Key> = candidates
        .iter()
        .filter(|a| a.p_xbid > 0.0 && band_mwh(a, spec) > 0.0)
        .map(|a| ratio_key(band_mwh(a, spec), a.p_xbid))
        .collect();
    xbid.ensure(scenarios, &keys, exec)?;

    let mut best: Option<(WeeklyAllocation, f64)> = None;
    for a in candidates {
        let cap: f64 = Product::ALL.iter().map(|&p| a.mw(p) * unit[p.index()]).sum();
        let band = band_mwh(&a, spec);
        let x = if a.p_xbid > 0.0 && band > 0.0 {
            xbid.mean_from_cache(scenarios, ratio_key(band, a.p_xbid), a.p_xbid)
        } else {
            0.0
        };
        let v = cap + x;
        match best {
            Some((_, b)) if v <= b + 1e-9 * b.abs().max(1.0) => {}
            _ => best = Some((a, v)),
        }
    }
    Ok(best.expect("nonempty candidates"))
}
