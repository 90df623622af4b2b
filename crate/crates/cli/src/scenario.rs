//! Scenario and study files.

use std::path::Path;

use peakon_core::{MollifierFamily, MollifierSpec, PeakonState, SimConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Scenarios shipped with the binary, addressable by name.
const STOCK: &[(&str, &str)] = &[
    ("fig1a", include_str!("../scenarios/fig1a.toml")),
    ("fig1b", include_str!("../scenarios/fig1b.toml")),
    ("fig1a_regularized", include_str!("../scenarios/fig1a_regularized.toml")),
    ("fig2", include_str!("../scenarios/fig2.toml")),
    ("fig3", include_str!("../scenarios/fig3.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    MchConservative,
    MchNonconservative,
    MchRegularized,
    Ch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    TrajectoryCsv,
    EnergyCsv,
    EventsJson,
    ReportJson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub system: System,
    pub momenta: Vec<f64>,
    pub positions: Vec<f64>,
    pub mollifier: Option<MollifierSpec>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<Output>,
}

fn all_outputs() -> Vec<Output> {
    vec![Output::TrajectoryCsv, Output::EnergyCsv, Output::EventsJson, Output::ReportJson]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub schema_version: u32,
    pub name: String,
    pub momenta: Vec<f64>,
    pub positions: Vec<f64>,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub family: MollifierFamily,
    #[serde(default = "default_probe_offset")]
    pub probe_offset: f64,
    #[serde(default)]
    pub sim: SimConfig,
}

fn default_probe_offset() -> f64 {
    0.5
}

/// Reads `source` from disk, falling back to a stock scenario of that name.
pub fn load_text(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| CliError::io(path, e));
    }
    STOCK
        .iter()
        .find(|(name, _)| *name == source)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| {
            let msg = format!("no such file or bundled scenario (bundled: {})", stock_names().collect::<Vec<_>>().join(", "));
            CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, msg))
        })
}

pub fn stock_names() -> impl Iterator<Item = &'static str> {
    STOCK.iter().map(|(n, _)| *n)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| CliError::Schema(e.to_string().trim_end().to_string()))
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Schema(format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = parse(text)?;
        check_version(s.schema_version)?;
        match (s.system, &s.mollifier) {
            (System::MchRegularized, None) => {
                return Err(CliError::Schema("system mch_regularized needs a [mollifier] table".into()))
            }
            (System::MchRegularized, Some(_)) | (_, None) => {}
            (_, Some(_)) => {
                return Err(CliError::Schema("[mollifier] is only allowed with system mch_regularized".into()))
            }
        }
        if s.outputs.is_empty() {
            return Err(CliError::Schema("outputs must list at least one artifact".into()));
        }
        Ok(s)
    }

    pub fn initial_state(&self) -> Result<PeakonState> {
        let s = PeakonState::new(self.positions.clone(), self.momenta.clone())?;
        s.require_ordered()?;
        Ok(s)
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let s: StudyFile = parse(text)?;
        check_version(s.schema_version)?;
        Ok(s)
    }

    pub fn initial_state(&self) -> Result<PeakonState> {
        let s = PeakonState::new(self.positions.clone(), self.momenta.clone())?;
        s.require_ordered()?;
        Ok(s)
    }
}
