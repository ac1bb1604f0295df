//! Run configuration (TOML) shared by every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::TauScanConfig;
use crate::exec::{derive_seed, Execution};
use crate::forecast::SynthMethod;
use crate::hydro::HydroConfig;
use crate::market_data::csvio::SourceZone;
use crate::market_data::{GateClosureRules, MarketArea};
use crate::synthetic::{HydroSynthConfig, SynthDataConfig};
use crate::system::{AblationConfig, DayAhead, ForecasterKind, Layers, Reserves, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Directory with xbid.csv, da.csv, fcr.csv, afrr_up.csv, afrr_dn.csv and
    /// afrr_acceptance.csv; synthetic data is generated when absent.
    pub market_dir: Option<PathBuf>,
    /// Directory with reservoir.csv and srl.csv.
    pub hydro_dir: Option<PathBuf>,
    /// Clock of naive timestamps in the input files: "UTC" or "CET".
    pub timezone: String,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            market_dir: None,
            hydro_dir: None,
            timezone: "UTC".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReserveMode {
    Off,
    Static,
    Regime,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayAheadMode {
    Off,
    Forecast,
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    pub first_week: usize,
    pub reserves: ReserveMode,
    pub percentile: f64,
    pub day_ahead: DayAheadMode,
    pub forecaster: ForecasterKind,
    /// Write one schedule CSV per delivery day.
    pub write_schedules: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            first_week: 0,
            reserves: ReserveMode::Static,
            percentile: 40.0,
            day_ahead: DayAheadMode::Forecast,
            forecaster: ForecasterKind::DaAnchor,
            write_schedules: true,
        }
    }
}

impl SimulateOptions {
    pub fn layers(&self) -> Layers {
        Layers {
            reserves: match self.reserves {
                ReserveMode::Off => Reserves::Off,
                ReserveMode::Static => Reserves::Static {
                    percentile: self.percentile,
                },
                ReserveMode::Regime => Reserves::Regime,
                ReserveMode::Perfect => Reserves::Perfect,
            },
            day_ahead: match self.day_ahead {
                DayAheadMode::Off => DayAhead::Off,
                DayAheadMode::Forecast => DayAhead::Forecast,
                DayAheadMode::Perfect => DayAhead::Perfect,
            },
            intraday: self.forecaster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauScanOptions {
    pub methods: Vec<SynthMethod>,
    pub scan: TauScanConfig,
}

impl Default for TauScanOptions {
    fn default() -> Self {
        TauScanOptions {
            methods: SynthMethod::ALL.to_vec(),
            scan: TauScanConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub train_days: usize,
    pub hybrid_hours: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            train_days: 28,
            hybrid_hours: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Every stochastic component draws from a stream derived
    /// from it; seeds inside the sections are overwritten.
    pub seed: u64,
    /// "DE" or "CH": selects the gate-closure preset.
    pub market: String,
    pub out: PathBuf,
    /// Run every data-parallel loop on the calling thread.
    pub sequential: bool,
    pub data: DataPaths,
    pub synth: SynthDataConfig,
    pub hydro_synth: HydroSynthConfig,
    pub system: SystemConfig,
    pub simulate: SimulateOptions,
    pub tau_scan: TauScanOptions,
    pub ablate: AblationConfig,
    pub eval: EvalOptions,
    pub hydro: HydroConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            market: "DE".into(),
            out: PathBuf::from("out"),
            sequential: false,
            data: DataPaths::default(),
            synth: SynthDataConfig::default(),
            hydro_synth: HydroSynthConfig::default(),
            system: SystemConfig::default(),
            simulate: SimulateOptions::default(),
            tau_scan: TauScanOptions::default(),
            ablate: AblationConfig::default(),
            eval: EvalOptions::default(),
            hydro: HydroConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML of the effective configuration; hashed into the manifest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn market_area(&self) -> Result<MarketArea> {
        MarketArea::parse(&self.market)
    }

    pub fn zone(&self) -> Result<SourceZone> {
        SourceZone::parse(&self.data.timezone)
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    /// Pushes the master seed and the market preset into the sections.
    pub fn resolve(mut self) -> Result<Self> {
        let gates = GateClosureRules::for_market(self.market_area()?);
        self.system.gates = gates;
        let s = self.seed;
        self.synth.seed = derive_seed(s, &[1]);
        self.hydro_synth.seed = derive_seed(s, &[2]);
        self.system.seed = derive_seed(s, &[3]);
        self.tau_scan.scan.seed = derive_seed(s, &[4]);
        self.hydro.seed = derive_seed(s, &[5]);
        Ok(self)
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        self.market_area()?;
        self.zone()?;
        for (name, p) in [("market_dir", &self.data.market_dir), ("hydro_dir", &self.data.hydro_dir)] {
            if let Some(p) = p {
                if !p.is_dir() {
                    return Err(Error::Config(format!("data.{name} {} is not a directory", p.display())));
                }
            }
        }
        self.synth.validate()?;
        self.system.validate()?;
        self.tau_scan.scan.validate()?;
        if self.tau_scan.methods.is_empty() {
            return Err(Error::Config("tau_scan.methods is empty".into()));
        }
        let o = &self.simulate;
        if o.reserves == ReserveMode::Static {
            crate::allocation::BidStrategy::StaticQuantile { percentile: o.percentile }.validate()?;
        }
        if self.eval.train_days < 2 || !(self.eval.hybrid_hours >= 0.0) {
            return Err(Error::Config("eval.train_days must be >= 2 and hybrid_hours >= 0".into()));
        }
        if self.out.as_os_str().is_empty() {
            return Err(Error::Config("output directory is empty".into()));
        }
        Ok(())
    }
}
