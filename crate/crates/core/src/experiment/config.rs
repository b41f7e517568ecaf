use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{Category, FeatureId, FieldKind};
use crate::dist::{DistConfig, TrainParams, WireEncoding};
use crate::svm::{KernelParams, SmoConfig};
use crate::wsn::{Energy, EnergyModel, TopologyConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("no dataset given; pass --dataset PATH or set dataset in the config file")]
    MissingDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdsCount {
    /// Derive from range and density.
    Auto,
    Fixed(usize),
}

impl FromStr for IdsCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(IdsCount::Auto)
        } else {
            s.parse()
                .map(IdsCount::Fixed)
                .map_err(|_| "expected an integer or auto".to_string())
        }
    }
}

/// Which attack records compromised nodes replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackTraffic {
    Dos,
    Probe,
    Any,
}

impl AttackTraffic {
    pub fn includes(self, cat: Category) -> bool {
        match self {
            AttackTraffic::Dos => cat == Category::Dos,
            AttackTraffic::Probe => cat == Category::Probe,
            AttackTraffic::Any => matches!(cat, Category::Dos | Category::Probe),
        }
    }
}

impl FromStr for AttackTraffic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dos" => Ok(AttackTraffic::Dos),
            "probe" => Ok(AttackTraffic::Probe),
            "any" => Ok(AttackTraffic::Any),
            _ => Err("expected dos, probe or any".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub category_map: Option<PathBuf>,
    pub features: Vec<FeatureId>,
    /// Starting pool for feature ranking.
    pub rank_features: Vec<FeatureId>,
    pub c: f64,
    pub sigma: f64,
    pub squared_norm: bool,
    pub n_nodes: usize,
    pub n_clusters: usize,
    pub area: f64,
    pub comm_range: f64,
    pub n_ids: IdsCount,
    pub normal_per_agent: usize,
    pub anomalous_per_agent: usize,
    pub probe_fraction: f64,
    pub seeds: Vec<u64>,
    pub e_tx_uj: f64,
    pub e_rx_uj: f64,
    pub instructions_per_bit: u64,
    pub node_energy_j: f64,
    pub head_energy_j: f64,
    pub max_passes: usize,
    /// N values swept by `compare`.
    pub compare_n: Vec<usize>,
    pub holdout_per_category: usize,
    pub attack_fraction: f64,
    pub silent_fraction: f64,
    pub attack_traffic: AttackTraffic,
    pub ticks: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainParams::default();
        ExperimentConfig {
            dataset: None,
            category_map: None,
            features: FeatureId::default_selection(),
            rank_features: [
                "src_bytes",
                "dst_bytes",
                "count",
                "srv_count",
                "same_srv_rate",
                "diff_srv_rate",
                "srv_diff_host_rate",
                "dst_host_count",
                "dst_host_srv_count",
            ]
            .iter()
            .map(|n| FeatureId::from_name(n).expect("known field"))
            .collect(),
            c: train.c,
            sigma: train.kernel.sigma,
            squared_norm: train.kernel.squared_norm,
            n_nodes: 100,
            n_clusters: 3,
            area: 10_000.0,
            comm_range: 33.6,
            n_ids: IdsCount::Auto,
            normal_per_agent: 50,
            anomalous_per_agent: 50,
            probe_fraction: 0.3,
            seeds: vec![1, 2, 3, 4, 5],
            e_tx_uj: 50.0,
            e_rx_uj: 25.0,
            instructions_per_bit: 900,
            node_energy_j: 2.0,
            head_energy_j: 10.0,
            max_passes: 20,
            compare_n: vec![4, 8, 12, 16, 18],
            holdout_per_category: 200,
            attack_fraction: 0.1,
            silent_fraction: 0.05,
            attack_traffic: AttackTraffic::Dos,
            ticks: 40,
        }
    }
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse list item {s:?}")))
        .collect()
}

fn features(value: &str) -> Result<Vec<FeatureId>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let f = FeatureId::from_name(s).map_err(|e| e.to_string())?;
            match f.kind() {
                FieldKind::Numeric => Ok(f),
                FieldKind::Symbolic => Err(format!("{s} is symbolic")),
            }
        })
        .collect()
}

fn boolean(value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn num<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| "not a number".to_string())
}

impl ExperimentConfig {
    /// Parse `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: idx + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let wrap = |r: Result<(), String>| {
            r.map_err(|reason| ConfigError::Value {
                key: key.to_string(),
                value: value.to_string(),
                reason,
            })
        };
        wrap(match key {
            "dataset" => {
                self.dataset = Some(PathBuf::from(value));
                Ok(())
            }
            "category_map" => {
                self.category_map = Some(PathBuf::from(value));
                Ok(())
            }
            "features" => features(value).map(|v| self.features = v),
            "rank_features" => features(value).map(|v| self.rank_features = v),
            "c" => num(value).map(|v| self.c = v),
            "sigma" => num(value).map(|v| self.sigma = v),
            "squared_norm" => boolean(value).map(|v| self.squared_norm = v),
            "n_nodes" => num(value).map(|v| self.n_nodes = v),
            "n_clusters" => num(value).map(|v| self.n_clusters = v),
            "area" => num(value).map(|v| self.area = v),
            "comm_range" => num(value).map(|v| self.comm_range = v),
            "n_ids" => value.parse().map(|v| self.n_ids = v),
            "normal_per_agent" => num(value).map(|v| self.normal_per_agent = v),
            "anomalous_per_agent" => num(value).map(|v| self.anomalous_per_agent = v),
            "probe_fraction" => num(value).map(|v| self.probe_fraction = v),
            "seeds" => list(value).map(|v| self.seeds = v),
            "e_tx_uj" => num(value).map(|v| self.e_tx_uj = v),
            "e_rx_uj" => num(value).map(|v| self.e_rx_uj = v),
            "instructions_per_bit" => num(value).map(|v| self.instructions_per_bit = v),
            "node_energy_j" => num(value).map(|v| self.node_energy_j = v),
            "head_energy_j" => num(value).map(|v| self.head_energy_j = v),
            "max_passes" => num(value).map(|v| self.max_passes = v),
            "compare_n" => list(value).map(|v| self.compare_n = v),
            "holdout_per_category" => num(value).map(|v| self.holdout_per_category = v),
            "attack_fraction" => num(value).map(|v| self.attack_fraction = v),
            "silent_fraction" => num(value).map(|v| self.silent_fraction = v),
            "attack_traffic" => value.parse().map(|v| self.attack_traffic = v),
            "ticks" => num(value).map(|v| self.ticks = v),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let fraction = |v: f64| (0.0..=1.0).contains(&v);
        if self.features.is_empty() {
            return bad("features must not be empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        if !positive(self.c) || !positive(self.sigma) {
            return bad("c and sigma must be positive");
        }
        if self.n_nodes == 0 || self.n_clusters == 0 || self.n_clusters > self.n_nodes {
            return bad("need 1 <= n_clusters <= n_nodes");
        }
        if !positive(self.area) || !positive(self.comm_range) {
            return bad("area and comm_range must be positive");
        }
        if self.n_ids == IdsCount::Fixed(0) || self.compare_n.contains(&0) {
            return bad("IDS counts must be at least 1");
        }
        if self.normal_per_agent == 0 || self.anomalous_per_agent == 0 {
            return bad("per-agent training sizes must be positive");
        }
        if ![self.probe_fraction, self.attack_fraction, self.silent_fraction]
            .into_iter()
            .all(fraction)
            || self.attack_fraction + self.silent_fraction > 1.0
        {
            return bad("fractions must lie in [0, 1] and attack + silent must not exceed 1");
        }
        if !(self.e_tx_uj >= 0.0 && self.e_rx_uj >= 0.0) || !positive(self.node_energy_j) {
            return bad("energy constants must be non-negative and node energy positive");
        }
        if self.head_energy_j <= self.node_energy_j {
            return bad("cluster heads must start with more energy than ordinary nodes");
        }
        if self.max_passes == 0 || self.ticks == 0 {
            return bad("max_passes and ticks must be positive");
        }
        Ok(())
    }

    pub fn kernel(&self) -> KernelParams {
        KernelParams {
            sigma: self.sigma,
            squared_norm: self.squared_norm,
        }
    }

    pub fn dist_config(&self) -> DistConfig {
        DistConfig {
            train: TrainParams {
                c: self.c,
                kernel: self.kernel(),
                smo: SmoConfig::default(),
            },
            max_passes: self.max_passes,
            wire: WireEncoding::default(),
        }
    }

    pub fn topology_config(&self) -> TopologyConfig {
        TopologyConfig {
            n_nodes: self.n_nodes,
            area: self.area,
            comm_range: self.comm_range,
            n_clusters: self.n_clusters,
            node_energy: Energy::from_joules(self.node_energy_j),
            head_energy: Energy::from_joules(self.head_energy_j),
        }
    }

    pub fn energy_model(&self) -> EnergyModel {
        EnergyModel {
            tx_per_byte: Energy::from_microjoules(self.e_tx_uj),
            rx_per_byte: Energy::from_microjoules(self.e_rx_uj),
            instructions_per_bit: self.instructions_per_bit,
        }
    }
}
