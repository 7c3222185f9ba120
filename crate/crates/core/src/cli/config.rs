//! Layered TOML configuration with one section per module.

use crate::base::Tolerances;
use crate::error::{BblError, Result};
use crate::simulator::RunConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tolerances: Tolerances,
    pub lambda0: Lambda0Section,
    pub modulation: ModulationSection,
    pub ansatz: AnsatzSection,
    pub simulate: SimulateSection,
    pub fit: FitSection,
    pub boundcheck: BoundSection,
    pub adjust: AdjustSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lambda0Section {
    pub n: usize,
    /// Truncation radius of the quarter plane.
    pub radius: f64,
    /// Largest cell size; the cell at the origin is a tenth of it.
    pub grid: f64,
    pub ratio: f64,
    pub nu_fraction: f64,
}

impl Default for Lambda0Section {
    fn default() -> Self {
        Self { n: 5, radius: 40.0, grid: 0.4, ratio: 1.1, nu_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationSection {
    pub l: u32,
    #[serde(rename = "T")]
    pub big_t: f64,
    /// Defaults to `|ln T|`.
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r_cut: Option<f64>,
    pub n: usize,
    pub decades: f64,
    pub per_decade: usize,
}

impl Default for ModulationSection {
    fn default() -> Self {
        Self { l: 0, big_t: 0.01, r_cut: None, n: 5, decades: 2.0, per_decade: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzSection {
    pub l: u32,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub delta: f64,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r_cut: Option<f64>,
    /// The window ends at `T / 10` and spans this many decades.
    pub decades: f64,
    pub samples: usize,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self { l: 0, big_t: 0.01, delta: 0.25, r_cut: None, decades: 2.0, samples: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub h_max: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 5, nr: 3, nz: 501, r_max: 1.0, h_max: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Exact self-similar profile of the fractional problem.
    TypeI,
    /// Bare single-bubble ansatz at `t0`.
    Ansatz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub alpha: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub l: u32,
    pub t0: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: InitialKind::TypeI, alpha: 0.5, p: 5.0 / 3.0, big_t: 0.01, l: 0, t0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_threshold: Option<f64>,
}

impl Default for StopSection {
    fn default() -> Self {
        Self { t_end: None, sup_threshold: Some(1e4) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub grid: GridSection,
    pub initial: InitialSection,
    pub run: RunConfig,
    pub stop: StopSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub window_fraction: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { window_fraction: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSection {
    pub n: usize,
}

impl Default for BoundSection {
    fn default() -> Self {
        Self { n: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjustSection {
    /// Gauss-Hermite nodes per axis for the independent derivative check.
    pub nodes: usize,
}

impl Default for AdjustSection {
    fn default() -> Self {
        Self { nodes: 8 }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            lambda0: Lambda0Section::default(),
            modulation: ModulationSection::default(),
            ansatz: AnsatzSection::default(),
            simulate: SimulateSection::default(),
            fit: FitSection::default(),
            boundcheck: BoundSection::default(),
            adjust: AdjustSection::default(),
        }
    }
}

/// Keys that are valid but absent from the serialized defaults.
const OPTIONAL_KEYS: [&str; 4] = ["modulation.R", "ansatz.R", "simulate.stop.t_end", "simulate.stop.sup_threshold"];

fn collect_keys(prefix: &str, v: &toml::Value, out: &mut BTreeSet<String>) {
    if let toml::Value::Table(t) = v {
        for (k, child) in t {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            collect_keys(&key, child, out);
            out.insert(key);
        }
    }
}

impl Config {
    /// Parses TOML text. Every key not in the schema is reported at once.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e: toml::de::Error| BblError::Config(e.to_string()))?;
        let value = toml::Value::Table(table);
        let mut known = BTreeSet::new();
        let defaults = toml::Value::try_from(Config::default()).map_err(|e| BblError::Config(e.to_string()))?;
        collect_keys("", &defaults, &mut known);
        known.extend(OPTIONAL_KEYS.iter().map(|s| s.to_string()));
        let mut given = BTreeSet::new();
        collect_keys("", &value, &mut given);
        // children of an unknown table are not reported separately
        let unknown: Vec<&String> = given
            .iter()
            .filter(|k| !known.contains(*k))
            .filter(|k| k.rsplit_once('.').is_none_or(|(parent, _)| known.contains(parent)))
            .collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(BblError::Config(format!("unknown keys: {}", list.join(", "))));
        }
        value.try_into().map_err(|e: toml::de::Error| BblError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
