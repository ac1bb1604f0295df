//! The command layer behind the `bess` binary: load or generate inputs, run
//! one pipeline, write CSVs and a manifest into the output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::dataset::{HydroData, MarketData};
use crate::error::{Error, Result};
use crate::evaluation::{run_benchmarks, tau_scan, volatility_split, BenchConfig};
use crate::evaluation::bench::volatility_table;
use crate::hydro::run_hydro;
use crate::report::Table;
use crate::row;
use crate::synthetic::{generate_hydro, generate_market};
use crate::system::{run_ablation, simulate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    TauScan,
    Ablate,
    Hydro,
    Eval,
    SynthData,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TauScan => "tau-scan",
            Command::Ablate => "ablate",
            Command::Hydro => "hydro",
            Command::Eval => "eval",
            Command::SynthData => "synth-data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    /// Relative to the output directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// What a command read and wrote. Holds no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn file_name(cmd: Command) -> String {
        format!("{}.manifest.toml", cmd.as_str())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path, shown: String) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: shown,
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Writes below one directory and records every file.
struct Out {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Out {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.files.push(FileDigest {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn table(&mut self, rel: &str, t: &Table) -> Result<()> {
        self.bytes(rel, &t.to_bytes())
    }

    /// Records files some other writer put below the directory.
    fn adopt(&mut self, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let rel = p
                .strip_prefix(&self.dir)
                .map_err(|_| Error::Domain(format!("{} is outside the output directory", p.display())))?;
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            self.files.push(digest_file(p, rel)?);
        }
        Ok(())
    }
}

fn market_input(cfg: &RunConfig, inputs: &mut Vec<FileDigest>) -> Result<MarketData> {
    match &cfg.data.market_dir {
        Some(dir) => {
            let data = MarketData::load(dir, cfg.zone()?)?;
            for f in [
                crate::dataset::XBID_FILE,
                crate::dataset::DA_FILE,
                crate::dataset::FCR_FILE,
                crate::dataset::AFRR_UP_FILE,
                crate::dataset::AFRR_DN_FILE,
                crate::dataset::ACCEPTANCE_FILE,
            ] {
                let p = dir.join(f);
                inputs.push(digest_file(&p, p.display().to_string())?);
            }
            Ok(data)
        }
        None => Ok(generate_market(&cfg.synth)?.data),
    }
}

fn hydro_input(cfg: &RunConfig, inputs: &mut Vec<FileDigest>) -> Result<HydroData> {
    match &cfg.data.hydro_dir {
        Some(dir) => {
            let data = HydroData::load(dir)?;
            for f in [crate::dataset::RESERVOIR_FILE, crate::dataset::SRL_FILE] {
                let p = dir.join(f);
                inputs.push(digest_file(&p, p.display().to_string())?);
            }
            Ok(data)
        }
        None => generate_hydro(&cfg.hydro_synth, cfg.synth.start),
    }
}

/// Hash of the effective configuration without its output directory, so
/// the same run written to two places has the same manifest.
pub fn config_hash(cfg: &RunConfig) -> String {
    let c = RunConfig {
        out: PathBuf::new(),
        ..cfg.clone()
    };
    sha256_hex(c.to_toml().as_bytes())
}

/// Resolves and validates `cfg`, runs `cmd` and writes its manifest.
pub fn run(cmd: Command, cfg: RunConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let cfg = cfg.resolve()?;
    let mut out = Out::new(&cfg.out)?;
    let mut inputs = Vec::new();
    let mut notes = Vec::new();
    match cmd {
        Command::Simulate => cmd_simulate(&cfg, &mut out, &mut inputs, &mut notes)?,
        Command::TauScan => cmd_tau_scan(&cfg, &mut out, &mut inputs, &mut notes)?,
        Command::Ablate => cmd_ablate(&cfg, &mut out, &mut inputs, &mut notes)?,
        Command::Hydro => cmd_hydro(&cfg, &mut out, &mut inputs, &mut notes)?,
        Command::Eval => cmd_eval(&cfg, &mut out, &mut inputs, &mut notes)?,
        Command::SynthData => cmd_synth_data(&cfg, &mut out, &mut notes)?,
    }
    let manifest = RunManifest {
        command: cmd.as_str().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(&cfg),
        inputs,
        outputs: out.files.clone(),
        notes,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    let p = cfg.out.join(RunManifest::file_name(cmd));
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    Ok(manifest)
}

fn cmd_simulate(cfg: &RunConfig, out: &mut Out, inputs: &mut Vec<FileDigest>, notes: &mut Vec<String>) -> Result<()> {
    let data = market_input(cfg, inputs)?;
    let o = &cfg.simulate;
    let sim = simulate(&data, &cfg.system, o.layers(), o.first_week, cfg.execution())?;
    out.table("allocation.csv", &sim.allocation_table())?;
    out.table("revenue.csv", &sim.revenue_table())?;
    if o.write_schedules {
        for d in &sim.days {
            if let Some(s) = &d.schedule {
                out.table(&format!("schedules/{}.csv", d.date), &s.to_table())?;
            }
        }
    }
    let n = sim.days.len();
    let sum = |f: fn(&crate::system::DayResult) -> f64| sim.days.iter().map(f).sum::<f64>();
    let skipped = sim.days.iter().filter(|d| !d.status.is_empty()).count();
    let mut t = Table::new(&["metric", "value"]);
    t.push(row!["weeks", sim.weeks.len()]);
    t.push(row!["days", n]);
    t.push(row!["skipped_days", skipped]);
    t.push(row!["capacity_eur", sum(|d| d.capacity_eur)]);
    t.push(row!["da_eur", sum(|d| d.da_eur)]);
    t.push(row!["xbid_eur", sum(|d| d.xbid_eur)]);
    t.push(row!["degradation_eur", sum(|d| d.degradation_eur)]);
    t.push(row!["total_eur", sim.total_eur()]);
    t.push(row!["revenue_per_day_eur", sim.total_eur() / n.max(1) as f64]);
    if let Some(p) = &sim.policy {
        for (s, pct) in p.percentiles.iter().enumerate() {
            t.push(row![format!("policy_percentile_state_{s}"), *pct]);
        }
    }
    out.table("summary.csv", &t)?;
    if skipped > 0 {
        notes.push(format!("{skipped} days skipped; see revenue.csv status"));
    }
    Ok(())
}

fn cmd_tau_scan(cfg: &RunConfig, out: &mut Out, inputs: &mut Vec<FileDigest>, notes: &mut Vec<String>) -> Result<()> {
    let data = market_input(cfg, inputs)?;
    let mut summary = Table::new(&["method", "tau_star", "tau_star_interp", "n_days", "excluded_days"]);
    for &m in &cfg.tau_scan.methods {
        log::info!("tau scan: {}", m.as_str());
        let r = tau_scan(&data.xbid, m, &cfg.tau_scan.scan, cfg.execution())?;
        out.table(&format!("tau_scan_{}.csv", m.as_str()), &r.to_table())?;
        summary.push(r.summary_row().into_iter().map(crate::report::Cell::from).collect());
        let flagged = r.points.iter().filter(|p| p.flagged).count();
        if flagged > 0 {
            notes.push(format!("{}: {flagged} grid points flagged", m.as_str()));
        }
    }
    out.table("tau_star_summary.csv", &summary)?;
    notes.push("vcr_ci is the half-width of a normal-approximation 95% interval over replicates".into());
    Ok(())
}

fn cmd_ablate(cfg: &RunConfig, out: &mut Out, inputs: &mut Vec<FileDigest>, notes: &mut Vec<String>) -> Result<()> {
    let data = market_input(cfg, inputs)?;
    let r = run_ablation(&data, &cfg.system, &cfg.ablate, cfg.execution())?;
    out.table("ablation.csv", &r.to_table())?;
    for row in r.rows.iter().filter(|r| r.flagged) {
        notes.push(format!("{} flagged: {}", row.configuration, row.note));
    }
    Ok(())
}

fn cmd_hydro(cfg: &RunConfig, out: &mut Out, inputs: &mut Vec<FileDigest>, _notes: &mut Vec<String>) -> Result<()> {
    let data = hydro_input(cfg, inputs)?;
    let r = run_hydro(&data, &cfg.hydro)?;
    out.table("hydro_regimes.csv", &r.regime_csv())?;
    out.table("hydro_stats.csv", &r.stats_csv())?;
    out.table("hydro_leadlag.csv", &r.leadlag_csv())?;
    out.table("hydro_scatter.csv", &r.scatter_csv(&data))?;
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, out: &mut Out, inputs: &mut Vec<FileDigest>, notes: &mut Vec<String>) -> Result<()> {
    let data = market_input(cfg, inputs)?;
    let bc = BenchConfig {
        train_days: cfg.eval.train_days,
        hybrid_hours: cfg.eval.hybrid_hours,
        spec: cfg.system.spec,
        grid: cfg.system.grid,
        gates: cfg.system.gates,
    };
    let r = run_benchmarks(&data, &bc, cfg.execution())?;
    out.table("eval.csv", &r.to_table())?;
    let mut s = Table::new(&["metric", "value"]);
    s.push(row!["ranking_inconsistency", r.ri]);
    s.push(row!["skipped", r.skipped.len()]);
    out.table("eval_summary.csv", &s)?;
    let mut d = Table::new(&["forecaster", "day", "revenue_eur", "oracle_revenue_eur", "mae", "rmse", "tau"]);
    for x in &r.days {
        d.push(row![x.forecaster.as_str(), x.day, x.revenue, x.oracle_revenue, x.mae, x.rmse, x.tau]);
    }
    out.table("eval_days.csv", &d)?;
    if !r.skipped.is_empty() {
        let mut t = Table::new(&["forecaster", "day", "reason"]);
        for (f, day, why) in &r.skipped {
            t.push(row![f.as_str(), *day, why.as_str()]);
        }
        out.table("eval_skipped.csv", &t)?;
    }
    match volatility_split(&r.days, &data) {
        Ok(rows) => out.table("eval_volatility.csv", &volatility_table(&rows))?,
        Err(e) => notes.push(format!("volatility split not produced: {e}")),
    }
    Ok(())
}

fn cmd_synth_data(cfg: &RunConfig, out: &mut Out, _notes: &mut Vec<String>) -> Result<()> {
    let m = generate_market(&cfg.synth)?;
    let files = m.data.save(&out.dir.join("market"))?;
    out.adopt(&files)?;
    let mut t = Table::new(&["week", "regime"]);
    for (w, r) in m.week_regime.iter().enumerate() {
        t.push(row![w, *r]);
    }
    out.table("market/regimes.csv", &t)?;
    let h = generate_hydro(&cfg.hydro_synth, cfg.synth.start)?;
    let files = h.save(&out.dir.join("hydro"))?;
    out.adopt(&files)?;
    Ok(())
}
