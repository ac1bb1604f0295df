//! Three-layer orchestration (weekly reserve allocation, daily day-ahead
//! schedule, rolling intraday dispatch) and the layer-by-layer revenue
//! attribution harness.

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::allocation::{
    block_bootstrap, optimize_allocation, optimize_allocation_unit, AllocationLimits, BidStrategy, MarketHistory,
    Product, ScenarioSet, WeeklyAllocation, XbidTerm, BLOCKS_PER_DAY, BLOCK_HOURS,
};
use crate::battery::BatterySpec;
use crate::dataset::MarketData;
use crate::dispatch::{rolling_intrinsic, solve_daily_mpc, DpEngine, DpGrid, DpTemplate, MpcConfig, RollConfig, Terminal};
use crate::error::{Error, Result};
use crate::evaluation::{cvar, vcr};
use crate::exec::{derive_seed, Execution};
use crate::forecast::{issue_forecast, DaAnchor, DaProfile, FeatureStore, Forecaster, Hybrid, LinearAr, Oracle, Persistence};
use crate::market_data::{GateClosureRules, MarketTag, PriceSeries, Resolution, Timeline};
use crate::regime::{
    compute_features, fit_baum_welch, optimize_bid_policy, viterbi_path, BidPolicy, FitConfig, PolicyWeek,
    WARMUP_WEEKS,
};
use crate::report::Table;
use crate::row;

/// Intraday forecaster of Layer 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    Oracle,
    Persistence,
    DaAnchor,
    LearnedAr,
    Hybrid,
}

impl ForecasterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ForecasterKind::Oracle => "oracle",
            ForecasterKind::Persistence => "persistence",
            ForecasterKind::DaAnchor => "da_anchor",
            ForecasterKind::LearnedAr => "learned_ar",
            ForecasterKind::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub spec: BatterySpec,
    pub limits: AllocationLimits,
    pub mpc: MpcConfig,
    /// Intraday DP grid.
    pub grid: DpGrid,
    pub n_scenarios: usize,
    pub window_weeks: usize,
    /// Days at the start of the data the learned forecaster is fitted on.
    pub train_days: usize,
    pub hybrid_hours: f64,
    pub regime_states: usize,
    pub hmm_restarts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub gates: GateClosureRules,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            spec: BatterySpec::default(),
            limits: AllocationLimits::default(),
            mpc: MpcConfig::default(),
            grid: DpGrid::default(),
            n_scenarios: 30,
            window_weeks: 52,
            train_days: 28,
            hybrid_hours: 8.0,
            regime_states: crate::regime::N_STATES,
            hmm_restarts: 10,
            seed: 1,
            gates: GateClosureRules::de(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.gates.validate()?;
        if self.n_scenarios == 0 || self.window_weeks == 0 {
            return Err(Error::Config("n_scenarios and window_weeks must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mpc.lambda) || self.mpc.horizon_days == 0 {
            return Err(Error::Config("mpc lambda must lie in [0, 1] and horizon_days >= 1".into()));
        }
        if self.regime_states == 0 {
            return Err(Error::Config("regime_states must be >= 1".into()));
        }
        Ok(())
    }
}

/// How Layer 1 bids reserve capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reserves {
    /// Energy trading only.
    Off,
    Static { percentile: f64 },
    /// HMM regime of the previous week selects the percentile.
    Regime,
    /// Realized clearing prices known in advance; every bid clears at the
    /// clearing price.
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayAhead {
    Off,
    /// Later days of the horizon come from the recent day-ahead profile.
    Forecast,
    /// Later days of the horizon are the realized day-ahead prices.
    Perfect,
}

/// Which layers run and with what foresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layers {
    pub reserves: Reserves,
    pub day_ahead: DayAhead,
    pub intraday: ForecasterKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeekResult {
    pub week: usize,
    pub week_start: NaiveDate,
    pub allocation: WeeklyAllocation,
    pub percentile: Option<f64>,
    pub state: Option<usize>,
    pub expected_eur: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub day: usize,
    pub date: NaiveDate,
    pub capacity_eur: f64,
    /// Settlement of the day-ahead positions.
    pub da_eur: f64,
    /// Intraday settlement of the physical dispatch against the day-ahead positions.
    pub xbid_eur: f64,
    pub degradation_eur: f64,
    pub total_eur: f64,
    pub schedule: Option<crate::dispatch::Schedule>,
    /// Empty when the day ran; otherwise why it was skipped.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub weeks: Vec<WeekResult>,
    pub days: Vec<DayResult>,
    pub policy: Option<BidPolicy>,
}

impl Simulation {
    pub fn total_eur(&self) -> f64 {
        self.days.iter().map(|d| d.total_eur).sum()
    }

    pub fn weekly_eur(&self) -> Vec<f64> {
        self.weeks
            .iter()
            .map(|w| self.days.iter().filter(|d| d.day / 7 == w.week).map(|d| d.total_eur).sum())
            .collect()
    }

    pub fn allocation_table(&self) -> Table {
        let mut t = Table::new(&[
            "week_start",
            "p_fcr",
            "p_afrr_up",
            "p_afrr_dn",
            "p_xbid",
            "soc_min",
            "bid_percentile",
            "expected_revenue_eur",
        ]);
        for w in &self.weeks {
            let a = &w.allocation;
            t.push(row![
                w.week_start.to_string(),
                a.p_fcr,
                a.p_afrr_up,
                a.p_afrr_dn,
                a.p_xbid,
                a.soc_min,
                w.percentile,
                w.expected_eur
            ]);
        }
        t
    }

    pub fn revenue_table(&self) -> Table {
        let mut t = Table::new(&[
            "date",
            "capacity_eur",
            "da_eur",
            "xbid_eur",
            "degradation_eur",
            "total_eur",
            "status",
        ]);
        for d in &self.days {
            t.push(row![
                d.date.to_string(),
                d.capacity_eur,
                d.da_eur,
                d.xbid_eur,
                d.degradation_eur,
                d.total_eur,
                d.status.as_str()
            ]);
        }
        t
    }
}

fn day_date(data: &MarketData, d: usize) -> NaiveDate {
    data.start().date_naive() + Duration::days(d as i64)
}

/// Builds the Layer-3 forecaster; learned models are fitted on the first
/// `cfg.train_days` days.
pub fn build_forecaster(
    kind: ForecasterKind,
    data: &MarketData,
    store: &FeatureStore,
    cfg: &SystemConfig,
) -> Result<Box<dyn Forecaster>> {
    let fit = || -> Result<LinearAr> {
        if cfg.train_days < 2 || cfg.train_days > data.n_days() {
            return Err(Error::Config(format!(
                "train_days {} must lie in [2, {}]",
                cfg.train_days,
                data.n_days()
            )));
        }
        LinearAr::fit(store, 0, cfg.train_days * 96)
    };
    Ok(match kind {
        ForecasterKind::Oracle => Box::new(Oracle::new(data.xbid.clone())),
        ForecasterKind::Persistence => Box::new(Persistence {
            slots_per_day: 96,
            max_fill: (cfg.gates.xbid_lead_min / 15) as usize,
        }),
        ForecasterKind::DaAnchor => Box::new(DaAnchor),
        ForecasterKind::LearnedAr => Box::new(fit()?),
        ForecasterKind::Hybrid => Box::new(Hybrid::new(fit()?, DaAnchor, cfg.hybrid_hours)),
    })
}

/// Walk-forward regime bids: the HMM and the per-state percentiles are
/// fitted on weeks before `first_week`; week `w` then uses the Viterbi state
/// of week `w - 1` decoded from weeks before `w` only.
pub struct RegimeBidding {
    pub policy: BidPolicy,
    /// Indexed by week; `None` where no feature row precedes the week.
    pub states: Vec<Option<usize>>,
}

pub fn regime_bidding(
    data: &MarketData,
    history: &MarketHistory,
    first_week: usize,
    cfg: &SystemConfig,
    exec: Execution,
) -> Result<RegimeBidding> {
    let n_weeks = data.n_weeks();
    let fcr = data.fcr_weekly_mean();
    let acc = &data.afrr_acceptance[..n_weeks.min(data.afrr_acceptance.len())];
    let feats = compute_features(&fcr[..acc.len()], acc)?;
    let train = feats.before(first_week);
    let fit_cfg = FitConfig {
        n_states: cfg.regime_states,
        restarts: cfg.hmm_restarts,
        ..FitConfig::default()
    };
    if train.len() < 4 * fit_cfg.n_states {
        return Err(Error::InsufficientData(format!(
            "regime policy needs {} feature weeks before week {first_week}, got {}",
            4 * fit_cfg.n_states,
            train.len()
        )));
    }
    let feats = feats.with_standardizer(&train.standardizer);
    let train = feats.before(first_week);
    let fit = fit_baum_welch(&train.standardized, &fit_cfg, derive_seed(cfg.seed, &[7]), exec)?;
    // state known when week w is allocated: last decoded state of the weeks before w
    let states: Vec<Option<usize>> = (0..n_weeks)
        .map(|w| {
            let prefix = feats.before(w);
            viterbi_path(&fit.model, &prefix.standardized).last().copied()
        })
        .collect();
    let mut weeks = Vec::new();
    for w in (WARMUP_WEEKS + 1)..first_week.min(n_weeks) {
        let Some(state) = states[w] else { continue };
        let dists = history.distributions(w, cfg.window_weeks)?;
        weeks.push(PolicyWeek {
            state,
            clearing: history.blocks.week(Product::Fcr, w).to_vec(),
            dists: dists[Product::Fcr.index()].clone(),
        });
    }
    let policy = optimize_bid_policy(&weeks, fit_cfg.n_states)?;
    Ok(RegimeBidding { policy, states })
}

struct Context<'a> {
    data: &'a MarketData,
    history: MarketHistory,
    store: FeatureStore,
    forecaster: Box<dyn Forecaster>,
    roll: RollConfig,
    cfg: &'a SystemConfig,
    layers: Layers,
    regime: Option<RegimeBidding>,
}

/// Runs weeks `first_week..` of `data` through the enabled layers. Weeks are
/// independent: each starts at the lower edge of its soc band.
pub fn simulate(
    data: &MarketData,
    cfg: &SystemConfig,
    layers: Layers,
    first_week: usize,
    exec: Execution,
) -> Result<Simulation> {
    cfg.validate()?;
    if let Reserves::Static { percentile } = layers.reserves {
        BidStrategy::StaticQuantile { percentile }.validate()?;
    }
    let n_weeks = data.n_weeks();
    if first_week >= n_weeks {
        return Err(Error::InsufficientData(format!(
            "simulation starts at week {first_week} but the data has {n_weeks} whole weeks"
        )));
    }
    let store = data.feature_store(&cfg.gates)?;
    let forecaster = build_forecaster(layers.intraday, data, &store, cfg)?;
    if matches!(layers.intraday, ForecasterKind::LearnedAr | ForecasterKind::Hybrid)
        && cfg.train_days > first_week * 7
    {
        log::warn!("learned forecaster is fitted on days that are also simulated");
    }
    let history = data.history()?;
    let regime = match layers.reserves {
        Reserves::Regime => Some(regime_bidding(data, &history, first_week, cfg, exec)?),
        _ => None,
    };
    let ctx = Context {
        data,
        history,
        store,
        forecaster,
        roll: RollConfig::new(cfg.gates.xbid_lead_min)?,
        cfg,
        layers,
        regime,
    };
    let weeks: Vec<usize> = (first_week..n_weeks).collect();
    let results = exec.map(&weeks, |&w| run_week(&ctx, w));
    let mut out = Simulation {
        weeks: Vec::new(),
        days: Vec::new(),
        policy: ctx.regime.as_ref().map(|r| r.policy.clone()),
    };
    for r in results {
        let (week, days) = r?;
        out.weeks.push(week);
        out.days.extend(days);
    }
    Ok(out)
}

fn allocate(ctx: &Context, w: usize) -> Result<WeekResult> {
    let cfg = ctx.cfg;
    let spec = &cfg.spec;
    let mut res = WeekResult {
        week: w,
        week_start: day_date(ctx.data, 7 * w),
        allocation: WeeklyAllocation::energy_only(spec),
        percentile: None,
        state: None,
        expected_eur: None,
    };
    let mut xbid = XbidTerm::new(spec, cfg.limits.grid);
    let percentile = match ctx.layers.reserves {
        Reserves::Off => return Ok(res),
        Reserves::Perfect => {
            let week = ScenarioSet::new(vec![ctx.history.scenario(w)?])?;
            let unit = Product::ALL.map(|p| week.scenarios[0].capacity[p.index()].iter().sum::<f64>() * BLOCK_HOURS);
            let (a, v) = optimize_allocation_unit(&week, unit, spec, &cfg.limits, &mut xbid, Execution::Sequential)?;
            res.allocation = a;
            res.expected_eur = Some(v);
            return Ok(res);
        }
        Reserves::Static { percentile } => percentile,
        Reserves::Regime => {
            let rb = ctx.regime.as_ref().expect("regime bidding prepared");
            res.state = rb.states[w];
            BidStrategy::RegimePolicy {
                policy: rb.policy.clone(),
            }
            .percentile(res.state)
        }
    };
    if w == 0 {
        log::warn!("week 0 has no capacity history; trading energy only");
        return Ok(res);
    }
    let dists = ctx.history.distributions(w, cfg.window_weeks)?;
    let scenarios = block_bootstrap(
        &ctx.history,
        w,
        cfg.window_weeks,
        cfg.n_scenarios,
        derive_seed(cfg.seed, &[1, w as u64]),
    )?;
    let (a, v) = optimize_allocation(&scenarios, percentile, &dists, spec, &cfg.limits, &mut xbid, Execution::Sequential)?;
    res.allocation = a;
    res.percentile = Some(percentile);
    res.expected_eur = Some(v);
    Ok(res)
}

/// Realized pay-as-bid capacity revenue of one day of week `w`.
fn capacity_day(ctx: &Context, wr: &WeekResult, d: usize) -> Result<f64> {
    let a = &wr.allocation;
    if Product::ALL.iter().all(|&p| a.mw(p) == 0.0) {
        return Ok(0.0);
    }
    let perfect = ctx.layers.reserves == Reserves::Perfect;
    let dists = if perfect {
        None
    } else {
        Some(ctx.history.distributions(wr.week, ctx.cfg.window_weeks)?)
    };
    let pct = wr.percentile.unwrap_or(f64::NAN);
    let mut total = 0.0;
    for p in Product::ALL {
        let clear = ctx.history.blocks.week(p, wr.week);
        for b in 0..BLOCKS_PER_DAY {
            let c = clear[(d % 7) * BLOCKS_PER_DAY + b];
            let bid = match &dists {
                None => c,
                Some(ds) => ds[p.index()][b].quantile(pct),
            };
            if bid <= c {
                total += bid * a.mw(p) * BLOCK_HOURS;
            }
        }
    }
    Ok(total)
}

/// Hourly day-ahead forecasts for the days after `d`.
fn da_horizon(ctx: &Context, d: usize) -> Result<Vec<PriceSeries>> {
    let data = ctx.data;
    let more = ctx.cfg.mpc.horizon_days.saturating_sub(1);
    match ctx.layers.day_ahead {
        DayAhead::Off => Ok(Vec::new()),
        DayAhead::Perfect => Ok((d + 1..(d + 1 + more).min(data.n_days())).map(|k| data.da_day(k)).collect()),
        DayAhead::Forecast => {
            let n = more.min(data.n_days().saturating_sub(d + 1));
            if n == 0 {
                return Ok(Vec::new());
            }
            let issue = ctx.cfg.gates.gate_for_day(ctx.cfg.gates.da_close, day_date(data, d));
            let target = data.xbid.timeline.sub((d + 1) * 96, n * 96);
            let q = issue_forecast(&DaProfile::default(), &ctx.store, issue, target)?;
            let start = target.start;
            Ok(q.chunks(96)
                .enumerate()
                .map(|(k, day)| {
                    let hourly = day.chunks(4).map(|h| h.iter().sum::<f64>() / 4.0).collect();
                    let tl = Timeline::new(start + Duration::days(k as i64), Resolution::Hour, 24);
                    PriceSeries::new(tl, hourly, MarketTag::Da).expect("24 hourly values")
                })
                .collect())
        }
    }
}

struct DayOutcome {
    da_eur: f64,
    xbid_eur: f64,
    degradation_eur: f64,
    schedule: crate::dispatch::Schedule,
    end_soc: f64,
}

fn run_day(ctx: &Context, a: &WeeklyAllocation, d: usize, soc: f64) -> Result<DayOutcome> {
    let cfg = ctx.cfg;
    let realized = ctx.data.xbid_day(d);
    let energy = cfg.spec.with_power(a.p_xbid);
    let mut positions = vec![0.0; 24];
    let mut da_eur = 0.0;
    let mut terminal = Terminal::Free;
    if ctx.layers.day_ahead != DayAhead::Off {
        let da = ctx.data.da_day(d);
        let plan = solve_daily_mpc(&da, &da_horizon(ctx, d)?, &cfg.mpc, a, &cfg.spec, soc)?;
        positions = plan.schedule.actions.clone();
        da_eur = plan.schedule.revenue;
        terminal = Terminal::Band {
            target: plan.terminal_soc,
        };
    }
    let template = DpTemplate {
        spec: energy,
        soc_init: soc.clamp(a.soc_min, a.soc_max),
        soc_min: a.soc_min,
        soc_max: a.soc_max,
        grid: cfg.grid,
        terminal,
    };
    let schedule = if a.p_xbid > 0.0 && a.soc_max > a.soc_min {
        rolling_intrinsic(ctx.forecaster.as_ref(), &ctx.store, &realized, &ctx.roll, &template, None)?
    } else {
        let s0 = template.soc_init;
        crate::dispatch::Schedule::build(
            realized.timeline,
            vec![0.0; 96],
            vec![s0; 97],
            realized.values.clone(),
            realized.values.clone(),
            0.0,
            &energy,
        )?
    };
    let dt = realized.timeline.dt_hours();
    let xbid_eur = schedule
        .actions
        .iter()
        .zip(&realized.values)
        .enumerate()
        .map(|(q, (act, p))| p * (act - positions[q / 4]) * dt)
        .sum();
    Ok(DayOutcome {
        da_eur,
        xbid_eur,
        degradation_eur: schedule.degradation_eur,
        end_soc: *schedule.trajectory.soc.last().expect("nonempty trajectory"),
        schedule,
    })
}

fn run_week(ctx: &Context, w: usize) -> Result<(WeekResult, Vec<DayResult>)> {
    let wr = allocate(ctx, w)?;
    let mut soc = wr.allocation.soc_min;
    let mut days = Vec::with_capacity(7);
    for d in 7 * w..(7 * w + 7).min(ctx.data.n_days()) {
        let capacity_eur = capacity_day(ctx, &wr, d)?;
        let mut r = DayResult {
            day: d,
            date: day_date(ctx.data, d),
            capacity_eur,
            da_eur: 0.0,
            xbid_eur: 0.0,
            degradation_eur: 0.0,
            total_eur: capacity_eur,
            schedule: None,
            status: String::new(),
        };
        match run_day(ctx, &wr.allocation, d, soc) {
            Ok(o) => {
                r.da_eur = o.da_eur;
                r.xbid_eur = o.xbid_eur;
                r.degradation_eur = o.degradation_eur;
                r.total_eur += o.da_eur + o.xbid_eur - o.degradation_eur;
                r.schedule = Some(o.schedule);
                soc = o.end_soc;
            }
            Err(e) => {
                log::warn!("day {}: skipped: {e}", r.date);
                r.status = format!("skipped: {e}");
            }
        }
        days.push(r);
    }
    Ok((wr, days))
}

/// Naive day-ahead spread: charge in the six cheapest hours and discharge in
/// the six most expensive, at the power that fills or empties the battery
/// over six hours; actions are clipped to the available energy in time order.
pub fn naive_da_spread(da: &[f64], spec: &BatterySpec) -> Result<crate::dispatch::Schedule> {
    if da.len() != 24 {
        return Err(Error::Domain("naive spread needs 24 hourly prices".into()));
    }
    let mut order: Vec<usize> = (0..24).collect();
    order.sort_by(|&i, &j| da[i].total_cmp(&da[j]).then(i.cmp(&j)));
    let p_ch = spec.p_max.min(spec.e_max / (6.0 * spec.eta_c));
    let p_dis = spec.p_max.min(spec.e_max * spec.eta_d / 6.0);
    let mut plan = [0.0; 24];
    for &h in &order[..6] {
        plan[h] = -p_ch;
    }
    for &h in &order[18..] {
        plan[h] = p_dis;
    }
    let mut soc = vec![0.0];
    let mut actions = Vec::with_capacity(24);
    let mut s = 0.0;
    for &want in &plan {
        // largest feasible action in the planned direction
        let a = if want > 0.0 {
            want.min(s * spec.e_max * spec.eta_d)
        } else if want < 0.0 {
            -(-want).min((1.0 - s) * spec.e_max / spec.eta_c)
        } else {
            0.0
        };
        s = crate::battery::soc_step(s, a, 1.0, spec).clamp(0.0, 1.0);
        actions.push(a);
        soc.push(s);
    }
    let tl = Timeline::new(chrono::DateTime::UNIX_EPOCH, Resolution::Hour, 24);
    crate::dispatch::Schedule::build(tl, actions, soc, da.to_vec(), da.to_vec(), 0.0, spec)
}

/// Perfect-foresight DP on the realized hourly day-ahead prices.
pub fn da_oracle(da: &[f64], spec: &BatterySpec, grid: DpGrid) -> Result<f64> {
    let e = DpEngine::new(spec, 1.0, 0.0, 1.0, grid)?;
    let plan = e.solve(da, 0.0, Terminal::Free)?;
    Ok(crate::evaluation::net_revenue(&plan.actions, da, 1.0, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Leading weeks used only for fitting (forecaster, regime model, bid policy).
    pub train_weeks: usize,
    pub static_percentile: f64,
    /// Layer-3 forecaster of every configuration before the full system.
    pub baseline_forecaster: ForecasterKind,
    /// Layer-3 forecaster of the full system.
    pub full_forecaster: ForecasterKind,
    pub cvar_level: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            train_weeks: 26,
            static_percentile: 40.0,
            baseline_forecaster: ForecasterKind::DaAnchor,
            full_forecaster: ForecasterKind::Hybrid,
            cvar_level: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub configuration: String,
    pub revenue_per_day: f64,
    pub vcr: f64,
    pub delta_vcr: Option<f64>,
    /// Mean of the worst weekly revenues, EUR; negative when they are losses.
    pub cvar: f64,
    pub oracle: String,
    pub n_days: usize,
    /// Outside the incremental chain, or not evaluable on this data.
    pub flagged: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationResult {
    pub rows: Vec<AblationRow>,
}

impl AblationResult {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.configuration == name)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "configuration",
            "revenue_per_day_eur",
            "vcr",
            "delta_vcr",
            "cvar5_eur",
            "oracle",
            "n_days",
            "flagged",
            "note",
        ]);
        for r in &self.rows {
            t.push(row![
                r.configuration.as_str(),
                r.revenue_per_day,
                r.vcr,
                r.delta_vcr,
                r.cvar,
                r.oracle.as_str(),
                r.n_days,
                if r.flagged { "yes" } else { "no" },
                r.note.as_str()
            ]);
        }
        t
    }
}

pub const ABLATION_CHAIN: [&str; 6] = [
    "naive_da_spread",
    "dp_only",
    "l1_static_q40",
    "l1_regime",
    "full_system",
    "full_system_oracle",
];
pub const LAYER23: &str = "layer2_3";

/// Per-day revenues of a run, for VCR totals and weekly CVaR.
struct Series {
    days: Vec<(usize, f64)>,
}

impl Series {
    fn total(&self) -> f64 {
        self.days.iter().map(|d| d.1).sum()
    }

    fn weekly(&self) -> Vec<f64> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for &(d, r) in &self.days {
            match out.last_mut() {
                Some((w, acc)) if *w == d / 7 => *acc += r,
                _ => out.push((d / 7, r)),
            }
        }
        out.into_iter().map(|x| x.1).collect()
    }
}

fn from_sim(s: &Simulation) -> Series {
    Series {
        days: s.days.iter().map(|d| (d.day, d.total_eur)).collect(),
    }
}

/// Evaluates the configurations on the weeks after `train_weeks`, each
/// against the perfect-foresight run with the same market participation.
pub fn run_ablation(
    data: &MarketData,
    cfg: &SystemConfig,
    ab: &AblationConfig,
    exec: Execution,
) -> Result<AblationResult> {
    cfg.validate()?;
    if !(ab.cvar_level > 0.0 && ab.cvar_level <= 1.0) {
        return Err(Error::Config("cvar_level must lie in (0, 1]".into()));
    }
    let n_weeks = data.n_weeks();
    if n_weeks < ab.train_weeks + 4 {
        return Err(Error::InsufficientData(format!(
            "ablation needs {} training plus 4 evaluation weeks, data has {n_weeks}",
            ab.train_weeks
        )));
    }
    let cfg = SystemConfig {
        train_days: ab.train_weeks * 7,
        ..*cfg
    };
    let first = ab.train_weeks;
    let days: Vec<usize> = (7 * first..7 * n_weeks).collect();
    let spec = cfg.spec;

    // energy-only baselines, one independent day each starting empty
    let store = data.feature_store(&cfg.gates)?;
    let roll = RollConfig::new(cfg.gates.xbid_lead_min)?;
    let template = DpTemplate {
        grid: cfg.grid,
        ..DpTemplate::new(spec)
    };
    let baseline = build_forecaster(ab.baseline_forecaster, data, &store, &cfg)?;
    let oracle = Oracle::new(data.xbid.clone());
    let per_day = exec.map(&days, |&d| -> Result<[f64; 4]> {
        let da = data.da_day(d);
        let naive = naive_da_spread(&da.values, &spec)?.net_revenue();
        let da_best = da_oracle(&da.values, &spec, cfg.grid)?;
        let xb = data.xbid_day(d);
        let dp = rolling_intrinsic(baseline.as_ref(), &store, &xb, &roll, &template, None)?.net_revenue();
        let xo = rolling_intrinsic(&oracle, &store, &xb, &roll, &template, None)?.net_revenue();
        Ok([naive, da_best, dp, xo])
    });
    let per_day = per_day.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |k: usize| Series {
        days: days.iter().zip(&per_day).map(|(&d, r)| (d, r[k])).collect(),
    };

    let layers = |reserves, day_ahead, intraday| Layers {
        reserves,
        day_ahead,
        intraday,
    };
    let base = ab.baseline_forecaster;
    let runs: Vec<(&str, Layers)> = vec![
        ("l1_static_q40", layers(Reserves::Static { percentile: ab.static_percentile }, DayAhead::Forecast, base)),
        ("l1_regime", layers(Reserves::Regime, DayAhead::Forecast, base)),
        ("full_system", layers(Reserves::Regime, DayAhead::Forecast, ab.full_forecaster)),
        ("full_system_oracle", layers(Reserves::Perfect, DayAhead::Perfect, ForecasterKind::Oracle)),
        (LAYER23, layers(Reserves::Off, DayAhead::Forecast, base)),
        ("energy_oracle", layers(Reserves::Off, DayAhead::Perfect, ForecasterKind::Oracle)),
    ];
    let mut sims: Vec<(&str, std::result::Result<Series, String>)> = Vec::new();
    for (name, l) in runs {
        log::info!("ablation: {name}");
        sims.push((
            name,
            simulate(data, &cfg, l, first, exec).map(|s| from_sim(&s)).map_err(|e| {
                log::warn!("ablation {name} not evaluable: {e}");
                e.to_string()
            }),
        ));
    }
    let sim = |name: &str| &sims.iter().find(|s| s.0 == name).expect("configured run").1;

    let mut rows = Vec::new();
    let mut push = |name: &str, s: std::result::Result<&Series, String>, o: std::result::Result<&Series, String>, oname: &str, flagged: bool| {
        let mut row = AblationRow {
            configuration: name.to_string(),
            revenue_per_day: f64::NAN,
            vcr: f64::NAN,
            delta_vcr: None,
            cvar: f64::NAN,
            oracle: oname.to_string(),
            n_days: 0,
            flagged,
            note: String::new(),
        };
        match (s, o) {
            (Ok(s), Ok(o)) => {
                row.n_days = s.days.len();
                row.revenue_per_day = s.total() / s.days.len() as f64;
                row.cvar = cvar(&s.weekly(), ab.cvar_level).unwrap_or(f64::NAN);
                match vcr(s.total(), o.total()) {
                    Some(v) => row.vcr = v.raw,
                    None => {
                        row.flagged = true;
                        row.note = "oracle revenue not positive".into();
                    }
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                row.flagged = true;
                row.note = e;
            }
        }
        rows.push(row);
    };
    let (naive, da_best, dp, xo) = (col(0), col(1), col(2), col(3));
    push("naive_da_spread", Ok(&naive), Ok(&da_best), "da_oracle", false);
    push("dp_only", Ok(&dp), Ok(&xo), "xbid_oracle", false);
    let full = sim("full_system_oracle").as_ref().map_err(|e| e.clone());
    for name in ["l1_static_q40", "l1_regime", "full_system", "full_system_oracle"] {
        push(name, sim(name).as_ref().map_err(|e| e.clone()), full.clone(), "full_system_oracle", false);
    }
    let energy = sim("energy_oracle").as_ref().map_err(|e| e.clone());
    push(LAYER23, sim(LAYER23).as_ref().map_err(|e| e.clone()), energy, "energy_oracle", true);
    if let Some(r) = rows.last_mut() {
        if r.note.is_empty() {
            r.note = "outside the incremental chain".into();
        }
    }
    for i in 1..ABLATION_CHAIN.len() {
        let prev = rows[i - 1].vcr;
        let cur = rows[i].vcr;
        if prev.is_finite() && cur.is_finite() {
            rows[i].delta_vcr = Some(cur - prev);
        }
    }
    debug_assert!(rows.iter().take(6).map(|r| r.configuration.as_str()).eq(ABLATION_CHAIN));
    Ok(AblationResult { rows })
}
