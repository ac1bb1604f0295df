//! Backward induction over a uniform state-of-charge grid.

use crate::battery::{soc_step, BatterySpec};
use crate::error::{Error, Result};

/// Value of infeasible terminal states. Finite so that interpolation stays
/// well defined.
pub const NEG: f64 = -1e18;

const POS_EPS: f64 = 1e-9;
/// Relative margin a candidate must beat the incumbent by; keeps tie-breaking
/// deterministic under summation noise.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DpGrid {
    pub soc_points: usize,
    pub action_levels: usize,
}

impl Default for DpGrid {
    fn default() -> Self {
        DpGrid {
            soc_points: 101,
            action_levels: 21,
        }
    }
}

impl DpGrid {
    pub fn new(soc_points: usize, action_levels: usize) -> Self {
        DpGrid {
            soc_points,
            action_levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.action_levels < 3 || self.action_levels.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "action grid must be odd and >= 3, got {}",
                self.action_levels
            )));
        }
        if self.soc_points < 11 {
            return Err(Error::Config(format!(
                "soc grid needs >= 11 points, got {}",
                self.soc_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    /// No value attached to end-of-horizon energy.
    Free,
    /// End within one grid step of `target`.
    Band { target: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Action {
    delta: f64,
    dsoc: f64,
    /// Grid offset split into integer and fractional part.
    off: isize,
    frac: f64,
    /// Grid indices from which this action stays inside the band.
    j_lo: usize,
    j_hi: usize,
    /// Degradation charged per slot, EUR.
    deg: f64,
}

/// Precomputed transition structure for one (battery, band, grid, dt).
#[derive(Debug, Clone)]
pub struct DpEngine {
    pub spec: BatterySpec,
    pub dt: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    n: usize,
    h: f64,
    /// Actions in tie-break order: 0, then increasing |delta| with charge first.
    actions: Vec<Action>,
}

/// Output of one DP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DpPlan {
    pub actions: Vec<f64>,
    /// Slot-boundary soc, `actions.len() + 1` values.
    pub soc: Vec<f64>,
    /// Σ forecast reward along the emitted path, net of in-DP degradation.
    pub planned_value: f64,
    /// Interpolated V_0 at the initial soc.
    pub v0: f64,
}

impl DpEngine {
    pub fn new(spec: &BatterySpec, dt: f64, soc_min: f64, soc_max: f64, grid: DpGrid) -> Result<Self> {
        grid.validate()?;
        spec.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Domain("slot length must be positive".into()));
        }
        if !(0.0..=1.0).contains(&soc_min) || !(0.0..=1.0).contains(&soc_max) {
            return Err(Error::Domain(format!("soc bounds [{soc_min}, {soc_max}] outside [0, 1]")));
        }
        if soc_min > soc_max {
            return Err(Error::Domain(format!("soc_min {soc_min} > soc_max {soc_max}")));
        }
        let n = grid.soc_points;
        let h = (soc_max - soc_min) / (n - 1) as f64;
        let m = (grid.action_levels / 2) as i64;
        let mut order: Vec<i64> = vec![0];
        for k in 1..=m {
            order.push(-k);
            order.push(k);
        }
        let mut actions = Vec::with_capacity(order.len());
        for k in order {
            let delta = spec.p_max * k as f64 / m as f64;
            let dsoc = soc_step(0.0, delta, dt, spec);
            let deg = spec.deg_cost * delta.max(0.0) * dt;
            if h == 0.0 {
                if k == 0 {
                    actions.push(Action { delta, dsoc, off: 0, frac: 0.0, j_lo: 0, j_hi: n - 1, deg });
                }
                continue;
            }
            let mut o = dsoc / h;
            if (o - o.round()).abs() < POS_EPS {
                o = o.round();
            }
            let off = o.floor() as isize;
            let frac = o - off as f64;
            let top = (n - 1) as f64;
            // j + o within [0, n-1]
            let lo = (-o - POS_EPS).ceil().max(0.0);
            let hi = (top - o + POS_EPS).floor().min(top);
            if lo > hi {
                continue;
            }
            actions.push(Action {
                delta,
                dsoc,
                off,
                frac,
                j_lo: lo as usize,
                j_hi: hi as usize,
                deg,
            });
        }
        Ok(DpEngine {
            spec: *spec,
            dt,
            soc_min,
            soc_max,
            n,
            h,
            actions,
        })
    }

    pub fn soc_points(&self) -> usize {
        self.n
    }

    fn terminal_values(&self, terminal: Terminal) -> Vec<f64> {
        match terminal {
            Terminal::Free => vec![0.0; self.n],
            Terminal::Band { target } => (0..self.n)
                .map(|j| {
                    let s = self.soc_min + j as f64 * self.h;
                    if (s - target).abs() <= self.h * (1.0 + 1e-9) + 1e-12 {
                        0.0
                    } else {
                        NEG
                    }
                })
                .collect(),
        }
    }

    /// Value function table, `(T + 1) × n`, row t = V_t.
    pub fn value_table(&self, prices: &[f64], terminal: Terminal) -> Vec<f64> {
        let n = self.n;
        let t_len = prices.len();
        let mut v = vec![0.0; (t_len + 1) * n];
        v[t_len * n..].copy_from_slice(&self.terminal_values(terminal));
        for t in (0..t_len).rev() {
            let (head, tail) = v.split_at_mut((t + 1) * n);
            let cur = &mut head[t * n..];
            let next = &tail[..n];
            let p = prices[t];
            // the idle action comes first and is feasible everywhere
            let (idle, rest) = self.actions.split_first().expect("idle action");
            debug_assert!(idle.delta == 0.0 && idle.j_lo == 0 && idle.j_hi == n - 1);
            for j in 0..n {
                cur[j] = next[j] - idle.deg;
            }
            for a in rest {
                let r = p * a.delta * self.dt - a.deg;
                let (lo, hi) = (a.j_lo, a.j_hi);
                let base = (lo as isize + a.off) as usize;
                let cand = &next[base..=base + (hi - lo) + usize::from(a.frac != 0.0)];
                let cur = &mut cur[lo..=hi];
                if a.frac == 0.0 {
                    for (c, &nx) in cur.iter_mut().zip(cand) {
                        *c = keep_better(r + nx, *c);
                    }
                } else {
                    let f = a.frac;
                    for (i, c) in cur.iter_mut().enumerate() {
                        *c = keep_better(r + (1.0 - f) * cand[i] + f * cand[i + 1], *c);
                    }
                }
            }
        }
        v
    }

    fn interp(&self, row: &[f64], soc: f64) -> f64 {
        if self.h == 0.0 {
            return row[0];
        }
        let mut pos = ((soc - self.soc_min) / self.h).clamp(0.0, (self.n - 1) as f64);
        if (pos - pos.round()).abs() < POS_EPS {
            pos = pos.round();
        }
        let k = pos.floor() as usize;
        let f = pos - k as f64;
        if f == 0.0 || k + 1 >= self.n {
            row[k.min(self.n - 1)]
        } else {
            (1.0 - f) * row[k] + f * row[k + 1]
        }
    }

    /// Optimal plan for `prices` starting from `soc_init`.
    pub fn solve(&self, prices: &[f64], soc_init: f64, terminal: Terminal) -> Result<DpPlan> {
        if prices.is_empty() {
            return Err(Error::EmptySeries("dispatch horizon is empty".into()));
        }
        if let Some(i) = prices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Gap {
                what: "forecast".into(),
                slot: i,
            });
        }
        if soc_init < self.soc_min - 1e-9 || soc_init > self.soc_max + 1e-9 {
            return Err(Error::Domain(format!(
                "soc_init {soc_init} outside [{}, {}]",
                self.soc_min, self.soc_max
            )));
        }
        let n = self.n;
        let v = self.value_table(prices, terminal);
        let mut s = soc_init.clamp(self.soc_min, self.soc_max);
        let v0 = self.interp(&v[..n], s);
        let mut actions = Vec::with_capacity(prices.len());
        let mut soc = Vec::with_capacity(prices.len() + 1);
        soc.push(s);
        let mut planned = 0.0;
        for (t, &p) in prices.iter().enumerate() {
            let next = &v[(t + 1) * n..(t + 2) * n];
            let mut best = f64::NEG_INFINITY;
            let mut choice = None;
            for a in &self.actions {
                let s2 = s + a.dsoc;
                if s2 < self.soc_min - POS_EPS || s2 > self.soc_max + POS_EPS {
                    continue;
                }
                let c = p * a.delta * self.dt - a.deg + self.interp(next, s2);
                if better(c, best) {
                    best = c;
                    choice = Some(a);
                }
            }
            let a = choice.expect("zero action is always feasible");
            planned += p * a.delta * self.dt - a.deg;
            s = (s + a.dsoc).clamp(self.soc_min, self.soc_max);
            actions.push(a.delta);
            soc.push(s);
        }
        Ok(DpPlan {
            actions,
            soc,
            planned_value: planned,
            v0,
        })
    }
}

/// Branch-free form of [`better`] for finite values.
#[inline(always)]
fn keep_better(c: f64, best: f64) -> f64 {
    if c > best + TIE_EPS * best.abs().max(1.0) {
        c
    } else {
        best
    }
}

#[inline]
fn better(c: f64, best: f64) -> bool {
    if best == f64::NEG_INFINITY {
        return c > best;
    }
    c > best + TIE_EPS * best.abs().max(1.0)
}
