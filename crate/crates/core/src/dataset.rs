//! The market inputs a run works on, and their CSV layout on disk.

use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, Utc};

use crate::allocation::{BlockPrices, MarketHistory, Product, BLOCKS_PER_WEEK};
use crate::error::{Error, Result};
use crate::forecast::FeatureStore;
use crate::market_data::csvio::{format_timestamp, parse_timestamp, read_series_rows, write_series, SourceZone};
use crate::market_data::{
    align_to_grid, FeatureRecord, GateClosureRules, MarketTag, PriceSeries, ReplicationMode, Resolution, Timeline,
};

pub const XBID_FILE: &str = "xbid.csv";
pub const DA_FILE: &str = "da.csv";
pub const FCR_FILE: &str = "fcr.csv";
pub const AFRR_UP_FILE: &str = "afrr_up.csv";
pub const AFRR_DN_FILE: &str = "afrr_dn.csv";
pub const ACCEPTANCE_FILE: &str = "afrr_acceptance.csv";
pub const RESERVOIR_FILE: &str = "reservoir.csv";
pub const SRL_FILE: &str = "srl.csv";

/// Intraday, day-ahead and reserve-capacity prices on a common start,
/// covering whole days from UTC midnight.
#[derive(Debug, Clone)]
pub struct MarketData {
    pub xbid: PriceSeries,
    pub da: PriceSeries,
    pub blocks: BlockPrices,
    /// Weekly share of aFRR bids accepted.
    pub afrr_acceptance: Vec<f64>,
}

impl MarketData {
    pub fn new(xbid: PriceSeries, da: PriceSeries, blocks: BlockPrices, afrr_acceptance: Vec<f64>) -> Result<Self> {
        let start = xbid.timeline.start;
        if xbid.timeline.resolution != Resolution::QuarterHour || da.timeline.resolution != Resolution::Hour {
            return Err(Error::Domain("intraday must be 15-minute and day-ahead hourly".into()));
        }
        if start.time() != chrono::NaiveTime::MIN {
            return Err(Error::Domain("market data must start at UTC midnight".into()));
        }
        if da.timeline.start != start || blocks.timeline.start != start {
            return Err(Error::Domain("market series start at different times".into()));
        }
        if !xbid.len().is_multiple_of(96) || xbid.len() / 4 != da.len() || xbid.len() / 16 != blocks.timeline.len {
            return Err(Error::Domain(format!(
                "market series cover different spans: {} quarter-hours, {} hours, {} blocks",
                xbid.len(),
                da.len(),
                blocks.timeline.len
            )));
        }
        Ok(MarketData {
            xbid,
            da,
            blocks,
            afrr_acceptance,
        })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.xbid.timeline.start
    }

    pub fn n_days(&self) -> usize {
        self.xbid.len() / 96
    }

    pub fn n_weeks(&self) -> usize {
        self.n_days() / 7
    }

    pub fn xbid_day(&self, d: usize) -> PriceSeries {
        self.xbid.slice(d * 96, 96)
    }

    pub fn da_day(&self, d: usize) -> PriceSeries {
        self.da.slice(d * 24, 24)
    }

    /// Day-ahead prices copied to their quarter-hours.
    pub fn da_quarter(&self) -> PriceSeries {
        let values = self.da.values.iter().flat_map(|&v| [v; 4]).collect();
        PriceSeries::new(self.xbid.timeline, values, MarketTag::Da).expect("same span")
    }

    /// Intraday and day-ahead features with gate-closure availability.
    pub fn feature_store(&self, gates: &GateClosureRules) -> Result<FeatureStore> {
        let x = FeatureRecord::from_series(&self.xbid, gates);
        let d = FeatureRecord::from_series(&self.da_quarter(), gates);
        FeatureStore::new(self.xbid.timeline, vec![x, d])
    }

    pub fn history(&self) -> Result<MarketHistory> {
        MarketHistory::new(self.blocks.clone(), self.xbid.clone())
    }

    /// Mean FCR clearing price of each week.
    pub fn fcr_weekly_mean(&self) -> Vec<f64> {
        (0..self.n_weeks())
            .map(|w| {
                let b = self.blocks.week(Product::Fcr, w);
                b.iter().sum::<f64>() / BLOCKS_PER_WEEK as f64
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut out = Vec::new();
        let mut put = |name: &str, s: &PriceSeries| -> Result<()> {
            let p = dir.join(name);
            write_series(s, File::create(&p).map_err(|e| Error::io(&p, e))?)?;
            out.push(p);
            Ok(())
        };
        put(XBID_FILE, &self.xbid)?;
        put(DA_FILE, &self.da)?;
        let tl = self.blocks.timeline;
        for (p, name, tag) in [
            (Product::Fcr, FCR_FILE, MarketTag::Fcr),
            (Product::AfrrUp, AFRR_UP_FILE, MarketTag::AfrrUp),
            (Product::AfrrDn, AFRR_DN_FILE, MarketTag::AfrrDn),
        ] {
            put(name, &PriceSeries::new(tl, self.blocks.prices[p.index()].clone(), tag)?)?;
        }
        let weeks = Timeline::new(self.start(), Resolution::Week, self.afrr_acceptance.len());
        put(
            ACCEPTANCE_FILE,
            &PriceSeries::new(weeks, self.afrr_acceptance.clone(), MarketTag::AfrrUp)?,
        )?;
        Ok(out)
    }

    pub fn load(dir: &Path, zone: SourceZone) -> Result<Self> {
        let xbid = load_series(&dir.join(XBID_FILE), Resolution::QuarterHour, MarketTag::Xbid, zone)?;
        let start = xbid.timeline.start;
        let days = xbid.len().div_ceil(96);
        let on = |res: Resolution, per_day: usize| Timeline::new(start, res, days * per_day);
        let xbid = realign(&xbid, on(Resolution::QuarterHour, 96))?;
        let da = realign(
            &load_series(&dir.join(DA_FILE), Resolution::Hour, MarketTag::Da, zone)?,
            on(Resolution::Hour, 24),
        )?;
        let blk = |name: &str, tag| -> Result<Vec<f64>> {
            let s = load_series(&dir.join(name), Resolution::FourHours, tag, zone)?;
            let s = realign(&s, on(Resolution::FourHours, 6))?;
            if let Some(&g) = s.gaps.first() {
                return Err(Error::Gap {
                    what: name.to_string(),
                    slot: g,
                });
            }
            Ok(s.values)
        };
        let blocks = BlockPrices::new(
            on(Resolution::FourHours, 6),
            blk(FCR_FILE, MarketTag::Fcr)?,
            blk(AFRR_UP_FILE, MarketTag::AfrrUp)?,
            blk(AFRR_DN_FILE, MarketTag::AfrrDn)?,
        )?;
        let acc = load_series(&dir.join(ACCEPTANCE_FILE), Resolution::Week, MarketTag::AfrrUp, zone)?;
        MarketData::new(xbid, da, blocks, acc.values)
    }
}

fn realign(s: &PriceSeries, tl: Timeline) -> Result<PriceSeries> {
    let raw: Vec<(DateTime<Utc>, f64)> = (0..s.len())
        .filter_map(|i| s.value(i).map(|v| (s.timeline.slot_start(i), v)))
        .collect();
    Ok(align_to_grid(&raw, tl, s.tag, ReplicationMode::Exact)?.series)
}

/// A series CSV placed on the uniform grid spanned by its first and last rows.
pub fn load_series(path: &Path, res: Resolution, tag: MarketTag, zone: SourceZone) -> Result<PriceSeries> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_series_rows(f, zone)?;
    let first = rows
        .iter()
        .map(|r| r.0)
        .min()
        .ok_or_else(|| Error::EmptySeries(path.display().to_string()))?;
    let last = rows.iter().map(|r| r.0).max().unwrap();
    let len = ((last - first).num_minutes() / res.minutes()) as usize + 1;
    let al = align_to_grid(&rows, Timeline::new(first, res, len), tag, ReplicationMode::Exact)?;
    if !al.outside.is_empty() {
        return Err(Error::Domain(format!(
            "{}: {} timestamps off the {}-minute grid",
            path.display(),
            al.outside.len(),
            res.minutes()
        )));
    }
    Ok(al.series)
}

/// Weekly Swiss hydrology and secondary-reserve data.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroData {
    pub week_start: Vec<NaiveDate>,
    /// Reservoir filling, % of capacity.
    pub level: Vec<f64>,
    /// Downward secondary reserve price, EUR/MW/h.
    pub srl_dn: Vec<f64>,
    /// Weekly downward-reserve revenue, EUR.
    pub revenue: Vec<f64>,
    /// Weekly revenue across all markets, EUR.
    pub total_revenue: Vec<f64>,
    /// Weekly mean day-ahead price, EUR/MWh.
    pub da: Vec<f64>,
}

impl HydroData {
    pub fn len(&self) -> usize {
        self.week_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.week_start.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for v in [&self.level, &self.srl_dn, &self.revenue, &self.total_revenue, &self.da] {
            if v.len() != n {
                return Err(Error::LengthMismatch { left: v.len(), right: n });
            }
        }
        if self.level.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::Domain("reservoir levels must be nonnegative".into()));
        }
        if self.week_start.windows(2).any(|w| w[1] - w[0] != Duration::days(7)) {
            return Err(Error::Domain("hydro weeks must be consecutive".into()));
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stamp = |d: &NaiveDate| format_timestamp(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
        let p1 = dir.join(RESERVOIR_FILE);
        let mut w = csv::Writer::from_writer(File::create(&p1).map_err(|e| Error::io(&p1, e))?);
        w.write_record(["week_start", "level"])?;
        for (d, l) in self.week_start.iter().zip(&self.level) {
            w.write_record([stamp(d), l.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&p1, e))?;
        let p2 = dir.join(SRL_FILE);
        let mut w = csv::Writer::from_writer(File::create(&p2).map_err(|e| Error::io(&p2, e))?);
        w.write_record(["week_start", "price", "revenue", "total_revenue", "da"])?;
        for i in 0..self.len() {
            w.write_record([
                stamp(&self.week_start[i]),
                self.srl_dn[i].to_string(),
                self.revenue[i].to_string(),
                self.total_revenue[i].to_string(),
                self.da[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&p2, e))?;
        Ok(vec![p1, p2])
    }

    /// Reads `reservoir.csv` (`week_start,level`) and `srl.csv`
    /// (`week_start,price[,revenue][,total_revenue][,da]`), joined on week.
    /// Missing revenue defaults to the price times the hours of a week,
    /// missing total revenue to the reserve revenue and missing DA to NaN.
    pub fn load(dir: &Path) -> Result<Self> {
        let levels = read_weekly(&dir.join(RESERVOIR_FILE), &["level"])?;
        let srl = read_weekly(&dir.join(SRL_FILE), &["price", "revenue", "total_revenue", "da"])?;
        let mut out = HydroData {
            week_start: Vec::new(),
            level: Vec::new(),
            srl_dn: Vec::new(),
            revenue: Vec::new(),
            total_revenue: Vec::new(),
            da: Vec::new(),
        };
        for (d, lv) in &levels {
            let Some((_, s)) = srl.iter().find(|(w, _)| w == d) else { continue };
            let price = s[0].ok_or_else(|| Error::Domain(format!("missing SRL price for week {d}")))?;
            out.week_start.push(*d);
            out.level.push(lv[0].ok_or_else(|| Error::Domain(format!("missing level for week {d}")))?);
            out.srl_dn.push(price);
            let rev = s[1].unwrap_or(price * 168.0);
            out.revenue.push(rev);
            out.total_revenue.push(s[2].unwrap_or(rev));
            out.da.push(s[3].unwrap_or(f64::NAN));
        }
        out.validate()?;
        Ok(out)
    }
}

type WeeklyRow = (NaiveDate, Vec<Option<f64>>);

fn read_weekly(path: &Path, cols: &[&str]) -> Result<Vec<WeeklyRow>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let headers = rdr.headers()?.clone();
    let find = |n: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(n));
    let ts = find("week_start").ok_or_else(|| Error::Config(format!("{}: missing week_start", path.display())))?;
    let idx: Vec<Option<usize>> = cols.iter().map(|c| find(c)).collect();
    if idx[0].is_none() {
        return Err(Error::Config(format!("{}: missing {} column", path.display(), cols[0])));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let d = parse_timestamp(&rec[ts], SourceZone::Utc)?.date_naive();
        let vals = idx
            .iter()
            .map(|c| match c {
                Some(c) if !rec[*c].is_empty() => rec[*c]
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Domain(format!("{}: bad number {:?}", path.display(), &rec[*c]))),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((d, vals));
    }
    Ok(out)
}
