use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ClusterConfig, LinkBudget, LinkConfig};
use crate::error::{Error, Result};
use crate::optimizer::Utility;
use crate::queueing::Splitting;
use crate::topology::{line_layout, line_network, two_child_layout, two_child_tree, DuplexMode, RoutingTree, TreeJson};

/// Full description of a Monte Carlo run. Every field has a default, so an
/// empty JSON object is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub channel: ChannelConfig,
    pub qos: QosConfig,
    pub duplex: DuplexConfig,
    pub mc: McConfig,
    pub output: OutputConfig,
    pub analysis: AnalysisConfig,
    pub validation: ValidationConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[default]
    Line,
    TwoChild,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    /// Number of IAB nodes in a line network.
    #[serde(rename = "K")]
    pub num_iab: usize,
    /// UEs per base station.
    pub w: usize,
    pub spacing_m: f64,
    pub ue_radius_m: f64,
    /// UEs are kept outside this radius; the UMa model starts at 10 m.
    pub ue_min_radius_m: f64,
    /// Tree JSON with BS positions, for `kind = custom`.
    pub tree_file: Option<PathBuf>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            kind: TopologyKind::Line,
            num_iab: 3,
            w: 5,
            spacing_m: 200.0,
            ue_radius_m: 100.0,
            ue_min_radius_m: 10.0,
            tree_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_bs_ant: usize,
    pub n_ue_ant: usize,
    pub ptx_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub h_bs_m: f64,
    pub h_ue_m: f64,
    pub h_relay_rx_m: f64,
    pub max_clusters: usize,
    pub max_rays: usize,
    pub ray_spread_deg: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let l = LinkConfig::default();
        ChannelConfig {
            carrier_hz: l.budget.carrier_hz,
            bandwidth_hz: l.budget.bandwidth_hz,
            n_bs_ant: l.n_bs_ant,
            n_ue_ant: l.n_ue_ant,
            ptx_dbm: l.budget.ptx_dbm,
            noise_psd_dbm_hz: l.budget.noise_psd_dbm_hz,
            noise_figure_db: l.budget.noise_figure_db,
            h_bs_m: l.h_bs_m,
            h_ue_m: l.h_ue_m,
            h_relay_rx_m: l.h_relay_rx_m,
            max_clusters: l.clusters.max_clusters,
            max_rays: l.clusters.max_rays,
            ray_spread_deg: l.clusters.ray_spread_rad.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosConfig {
    pub eta: f64,
    /// Delay threshold for the rate sweep and queue validation.
    pub delta_s: f64,
    /// Thresholds for the delay sweep.
    pub delta_sweep_s: Vec<f64>,
    /// Minimum rates for the minimum-delay sweep.
    pub lambda_min_pps: Vec<f64>,
    pub packet_bytes: f64,
    pub utility: Utility,
}

impl Default for QosConfig {
    fn default() -> Self {
        QosConfig {
            eta: 0.9,
            delta_s: 3.5e-3,
            delta_sweep_s: vec![2e-3, 2.5e-3, 3e-3, 3.5e-3, 4e-3, 5e-3, 7.5e-3, 10e-3],
            lambda_min_pps: vec![0.0, 50.0, 100.0, 200.0, 400.0, 800.0],
            packet_bytes: 10_000.0,
            utility: Utility::Log,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuplexConfig {
    pub modes: Vec<DuplexMode>,
    /// RINR values for FD relays; `"-inf"` is perfect cancellation.
    #[serde(with = "db_list")]
    pub rinr_db_sweep: Vec<f64>,
}

impl Default for DuplexConfig {
    fn default() -> Self {
        DuplexConfig {
            modes: vec![DuplexMode::HalfDuplex, DuplexMode::FullDuplex],
            rinr_db_sweep: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_drops: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_drops: 20, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Any of `csv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("results"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f.eq_ignore_ascii_case(format))
    }
}

/// Line-network parameters for the closed-form sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub access_snr_db: f64,
    pub backhaul_snr_db: Vec<f64>,
    pub w: usize,
    #[serde(rename = "K")]
    pub num_iab: usize,
    pub delta_target_s: f64,
    pub lambda_min_pps: Vec<f64>,
    /// Upper end of the depth scan.
    pub k_limit: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            access_snr_db: 5.0,
            backhaul_snr_db: vec![8.4, 10.4, 12.4, 14.4, 16.4, 18.4],
            w: 5,
            num_iab: 3,
            delta_target_s: 10e-3,
            lambda_min_pps: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            k_limit: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Minimum packets per simulation.
    pub n_packets: usize,
    /// Grow the run until the least-loaded queue expects this many sojourns.
    pub target_queue_samples: usize,
    /// Hard cap on packets per simulation.
    pub max_packets: usize,
    pub splitting: Splitting,
    /// Drops simulated (the first ones of the run).
    pub drops: usize,
    /// RINR for the FD operating point.
    #[serde(with = "db_value")]
    pub rinr_db: f64,
    /// Queues with fewer sojourn samples are left out of the KS statistics.
    pub min_queue_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            n_packets: 100_000,
            target_queue_samples: 100_000,
            max_packets: 20_000_000,
            splitting: Splitting::DestinationTag,
            drops: 1,
            rinr_db: -15.0,
            min_queue_samples: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let t = &self.topology;
        if t.w == 0 && t.kind != TopologyKind::Custom {
            return bad("topology.w must be at least 1");
        }
        if !(t.spacing_m > 0.0) {
            return bad("topology.spacing_m must be positive");
        }
        if !(t.ue_radius_m > t.ue_min_radius_m && t.ue_min_radius_m >= 0.0) {
            return bad("topology.ue_radius_m must exceed ue_min_radius_m");
        }
        if t.kind == TopologyKind::Custom && t.tree_file.is_none() {
            return bad("topology.tree_file is required for custom topologies");
        }
        let c = &self.channel;
        if c.n_bs_ant == 0 || c.n_ue_ant == 0 {
            return bad("antenna counts must be positive");
        }
        if c.max_clusters == 0 || c.max_rays == 0 {
            return bad("cluster and ray counts must be positive");
        }
        self.link_config().budget.validate()?;
        let q = &self.qos;
        if !(q.eta > 0.0 && q.eta < 1.0) {
            return bad("qos.eta must lie in (0, 1)");
        }
        if !(q.delta_s > 0.0) || q.delta_sweep_s.iter().any(|d| !(*d > 0.0)) {
            return bad("delay thresholds must be positive");
        }
        if q.lambda_min_pps.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return bad("qos.lambda_min_pps must be finite and non-negative");
        }
        if !(q.packet_bytes > 0.0) {
            return bad("qos.packet_bytes must be positive");
        }
        q.utility.validate()?;
        if self.duplex.modes.is_empty() {
            return bad("duplex.modes is empty");
        }
        if self
            .duplex
            .rinr_db_sweep
            .iter()
            .any(|r| r.is_nan() || *r == f64::INFINITY)
        {
            return bad("RINR values must be finite or -inf");
        }
        if self.mc.n_drops == 0 {
            return bad("mc.n_drops must be at least 1");
        }
        let a = &self.analysis;
        if a.w == 0 || a.k_limit == 0 {
            return bad("analysis.w and analysis.k_limit must be positive");
        }
        if !(a.delta_target_s > 0.0) {
            return bad("analysis.delta_target_s must be positive");
        }
        let v = &self.validation;
        if v.n_packets == 0 || v.max_packets < v.n_packets {
            return bad("validation needs 0 < n_packets <= max_packets");
        }
        Ok(())
    }

    pub fn packet_bits(&self) -> f64 {
        8.0 * self.qos.packet_bytes
    }

    pub fn link_config(&self) -> LinkConfig {
        let c = &self.channel;
        LinkConfig {
            budget: LinkBudget {
                ptx_dbm: c.ptx_dbm,
                bandwidth_hz: c.bandwidth_hz,
                noise_psd_dbm_hz: c.noise_psd_dbm_hz,
                noise_figure_db: c.noise_figure_db,
                carrier_hz: c.carrier_hz,
            },
            n_bs_ant: c.n_bs_ant,
            n_ue_ant: c.n_ue_ant,
            h_bs_m: c.h_bs_m,
            h_ue_m: c.h_ue_m,
            h_relay_rx_m: c.h_relay_rx_m,
            clusters: ClusterConfig {
                max_clusters: c.max_clusters,
                max_rays: c.max_rays,
                ray_spread_rad: c.ray_spread_deg.to_radians(),
                ..ClusterConfig::default()
            },
            packet_bits: self.packet_bits(),
        }
    }

    /// Routing tree and BS coordinates (in `base_stations()` order).
    pub fn build_topology(&self) -> Result<(RoutingTree, Vec<[f64; 2]>)> {
        let t = &self.topology;
        match t.kind {
            TopologyKind::Line => Ok((line_network(t.num_iab, t.w), line_layout(t.num_iab, t.spacing_m))),
            TopologyKind::TwoChild => Ok((two_child_tree(t.w), two_child_layout(t.spacing_m))),
            TopologyKind::Custom => {
                let path = t.tree_file.as_ref().expect("validated");
                let s = std::fs::read_to_string(path)?;
                let tree = serde_json::from_str::<TreeJson>(&s)?.into_tree()?;
                let pos = tree
                    .positions()
                    .ok_or_else(|| Error::Config("custom tree file needs vertex positions".into()))?;
                let bs = tree.base_stations().iter().map(|&v| pos[v]).collect();
                Ok((tree, bs))
            }
        }
    }
}

fn encode_db(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(if x > 0.0 { "inf" } else { "-inf" })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DbRepr {
    Num(f64),
    Text(String),
}

impl DbRepr {
    fn value<E: serde::de::Error>(self) -> std::result::Result<f64, E> {
        match self {
            DbRepr::Num(x) => Ok(x),
            DbRepr::Text(s) => match s.trim() {
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                "inf" | "Infinity" => Ok(f64::INFINITY),
                other => other.parse().map_err(E::custom),
            },
        }
    }
}

pub(crate) mod db_value {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        encode_db(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        DbRepr::deserialize(d)?.value()
    }
}

/// `Option<f64>` in dB; `None` is `null`.
pub(crate) mod opt_db {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        x.map(encode_db).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        Option::<DbRepr>::deserialize(d)?.map(DbRepr::value).transpose()
    }
}

pub(crate) mod db_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        xs.iter().map(|x| encode_db(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        Vec::<DbRepr>::deserialize(d)?.into_iter().map(DbRepr::value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.topology.spacing_m, 200.0);
        assert_eq!(cfg.channel.n_bs_ant, 64);
        assert_eq!(cfg.qos.eta, 0.9);
        assert_eq!(cfg.packet_bits(), 80_000.0);
    }

    #[test]
    fn rinr_sentinel_round_trips() {
        let cfg = ExperimentConfig::from_json(r#"{"duplex":{"rinr_db_sweep":["-inf",-10,0.5]}}"#).unwrap();
        assert_eq!(cfg.duplex.rinr_db_sweep, vec![f64::NEG_INFINITY, -10.0, 0.5]);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_values_are_rejected() {
        for s in [
            r#"{"qos":{"eta":1.0}}"#,
            r#"{"mc":{"n_drops":0}}"#,
            r#"{"topology":{"kind":"custom"}}"#,
            r#"{"duplex":{"rinr_db_sweep":["inf"]}}"#,
            r#"{"topology":{"colour":1}}"#,
        ] {
            assert!(ExperimentConfig::from_json(s).is_err(), "{s}");
        }
    }

    #[test]
    fn topologies_build() {
        let mut cfg = ExperimentConfig::default();
        let (t, bs) = cfg.build_topology().unwrap();
        assert_eq!(t.num_iab(), 3);
        assert_eq!(bs.len(), 4);
        cfg.topology.kind = TopologyKind::TwoChild;
        let (t, bs) = cfg.build_topology().unwrap();
        assert_eq!(t.num_iab(), 6);
        assert_eq!(bs.len(), 7);
    }
}
