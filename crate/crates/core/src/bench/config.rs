use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::{CoverageParams, Distribution, GdcParams, IdcParams};
use crate::dmarrt::DmaRrtParams;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::invariants::TaskClass;
use crate::sim::{MapId, SimParams};
use crate::swarm::{PbcParams, PfParams};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "pf")]
    Pf,
    #[serde(rename = "pbc")]
    Pbc,
    #[serde(rename = "dmarrt")]
    DmaRrt,
    #[serde(rename = "idc")]
    Idc,
    #[serde(rename = "gdc")]
    Gdc,
    #[serde(rename = "idc+wires")]
    IdcWires,
    /// Plain proportional controller toward the goal, no avoidance.
    #[serde(rename = "p")]
    P,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 7] = [
        AlgorithmId::Pf,
        AlgorithmId::Pbc,
        AlgorithmId::DmaRrt,
        AlgorithmId::Idc,
        AlgorithmId::Gdc,
        AlgorithmId::IdcWires,
        AlgorithmId::P,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Pf => "pf",
            AlgorithmId::Pbc => "pbc",
            AlgorithmId::DmaRrt => "dmarrt",
            AlgorithmId::Idc => "idc",
            AlgorithmId::Gdc => "gdc",
            AlgorithmId::IdcWires => "idc+wires",
            AlgorithmId::P => "p",
        }
    }

    pub fn task(self) -> TaskClass {
        match self {
            AlgorithmId::Pf | AlgorithmId::Pbc | AlgorithmId::DmaRrt | AlgorithmId::P => TaskClass::Navigation,
            AlgorithmId::Idc | AlgorithmId::Gdc | AlgorithmId::IdcWires => TaskClass::Coverage,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PParams {
    pub k_p: f64,
}

impl Default for PParams {
    fn default() -> Self {
        Self { k_p: 1.0 }
    }
}

/// Parameter blocks for every algorithm; a trial reads only its own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmParams {
    pub pf: PfParams,
    pub pbc: PbcParams,
    pub dmarrt: DmaRrtParams,
    pub idc: IdcParams,
    pub gdc: GdcParams,
    pub p: PParams,
}

macro_rules! param_files {
    ($($algo:literal / $map:literal),* $(,)?) => {
        fn param_file(algorithm: &str, map: &str) -> Option<&'static str> {
            match (algorithm, map) {
                $(($algo, $map) => Some(include_str!(concat!("../../params/", $algo, "_", $map, ".toml"))),)*
                _ => None,
            }
        }
    };
}

param_files!(
    "pf" / "empty_dense", "pf" / "empty_spread", "pf" / "uniform", "pf" / "corridor", "pf" / "concave",
    "pbc" / "empty_dense", "pbc" / "empty_spread", "pbc" / "uniform", "pbc" / "corridor", "pbc" / "concave",
    "dmarrt" / "empty_dense", "dmarrt" / "empty_spread", "dmarrt" / "uniform", "dmarrt" / "corridor", "dmarrt" / "concave",
    "idc" / "empty_dense", "idc" / "empty_spread", "idc" / "uniform", "idc" / "corridor", "idc" / "concave",
    "gdc" / "empty_dense", "gdc" / "empty_spread", "gdc" / "uniform", "gdc" / "corridor", "gdc" / "concave",
);

impl AlgorithmParams {
    /// Defaults overlaid with the shipped tuning file for `(algorithm, map)`.
    /// `idc+wires` shares the GDC tuning.
    pub fn tuned(algorithm: AlgorithmId, map: MapId) -> Result<Self> {
        let key = match algorithm {
            AlgorithmId::IdcWires => "gdc",
            other => other.as_str(),
        };
        match param_file(key, map.as_str()) {
            Some(src) => Self::from_toml(src),
            None => Ok(Self::default()),
        }
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(format!("parameter file: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommsParams {
    /// Delivery delay in physics ticks.
    pub latency_ticks: u64,
    /// Radius within which every robot is assumed reachable (m).
    pub comm_radius: f64,
}

impl Default for CommsParams {
    fn default() -> Self {
        Self {
            latency_ticks: 1,
            comm_radius: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub map: MapId,
    pub scale: f64,
    pub robots: usize,
    pub algorithm: AlgorithmId,
    pub params: AlgorithmParams,
    pub seed: u64,
    pub cutoff_s: f64,
    pub control_period: f64,
    pub metric_rate_hz: f64,
    pub sim: SimParams,
    pub coverage: CoverageParams,
    pub comms: CommsParams,
    /// Success criterion; must match the algorithm's task when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<TaskClass>,
    /// Explicit start positions instead of seeded spawning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<Vec2>>,
    /// Advisory flag for trials where nothing moves for `stall_window_s`.
    pub stall_window_s: f64,
}

impl ScenarioConfig {
    /// Desk defaults with the tuned parameter block for `(algorithm, map)`.
    pub fn new(map: MapId, algorithm: AlgorithmId, robots: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            map,
            scale: 1.0,
            robots,
            algorithm,
            params: AlgorithmParams::tuned(algorithm, map)?,
            seed,
            cutoff_s: 600.0,
            control_period: 0.1,
            metric_rate_hz: 1.0,
            sim: SimParams::default(),
            coverage: CoverageParams::default(),
            comms: CommsParams::default(),
            success: None,
            starts: None,
            stall_window_s: 30.0,
        })
    }

    pub fn task(&self) -> TaskClass {
        self.algorithm.task()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(task) = self.success {
            if task != self.task() {
                return Err(Error::Config(format!(
                    "algorithm `{}` solves {:?} but the success criterion is {:?}",
                    self.algorithm,
                    self.task(),
                    task
                )));
            }
        }
        if !(self.scale > 0.0) {
            return Err(Error::Config("scale must be positive".into()));
        }
        if !(self.sim.dt > 0.0) || !(self.control_period >= self.sim.dt) || !(self.metric_rate_hz > 0.0) {
            return Err(Error::Config("need dt > 0, control_period >= dt and a positive metric rate".into()));
        }
        if !(self.cutoff_s >= 0.0) {
            return Err(Error::Config("cutoff must be non-negative".into()));
        }
        if self.robots == 0 {
            return Err(Error::Config("at least one robot is required".into()));
        }
        if let Some(starts) = &self.starts {
            if starts.len() != self.robots {
                return Err(Error::Config(format!("{} start positions for {} robots", starts.len(), self.robots)));
            }
        }
        match self.algorithm {
            AlgorithmId::Pf => self.params.pf.validate(self.sim.sense_radius)?,
            AlgorithmId::Pbc => self.params.pbc.validate(self.sim.collision_radius)?,
            AlgorithmId::DmaRrt => self.params.dmarrt.validate()?,
            AlgorithmId::Idc => self.params.idc.pbc.validate(self.sim.collision_radius)?,
            AlgorithmId::Gdc | AlgorithmId::IdcWires => {
                self.gdc_params().validate()?;
                self.params.gdc.pbc.validate(self.sim.collision_radius)?;
            }
            AlgorithmId::P => {}
        }
        Ok(())
    }

    /// GDC block with the distribution implied by the algorithm id.
    pub fn gdc_params(&self) -> GdcParams {
        let mut p = self.params.gdc.clone();
        p.distribution = match self.algorithm {
            AlgorithmId::IdcWires => Distribution::StateWires,
            _ => Distribution::LeaderPoint,
        };
        p
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_tuning_file_parses() {
        for algo in AlgorithmId::ALL {
            for map in MapId::ALL {
                AlgorithmParams::tuned(algo, map).unwrap();
            }
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for algo in AlgorithmId::ALL {
            assert_eq!(algo.as_str().parse::<AlgorithmId>().unwrap(), algo);
            let json = serde_json::to_string(&algo).unwrap();
            assert_eq!(json, format!("\"{}\"", algo.as_str()));
        }
        assert!("astar".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::new(MapId::Uniform, AlgorithmId::Idc, 4, 1).unwrap();
        let b = ScenarioConfig::new(MapId::Uniform, AlgorithmId::Idc, 4, 1).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), a.with_seed(2).config_hash());
        let mut c = a.clone();
        c.params.idc.k_c += 1e-9;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn mismatched_success_criterion_is_rejected() {
        let mut cfg = ScenarioConfig::new(MapId::EmptyDense, AlgorithmId::Idc, 4, 1).unwrap();
        cfg.success = Some(TaskClass::Navigation);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.success = Some(TaskClass::Coverage);
        assert!(cfg.validate().is_ok());
    }
}
