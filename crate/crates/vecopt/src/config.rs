//! Structured-text configuration files.
//!
//! Three TOML formats: a topology file listing nodes, rates and links; a
//! task file listing processing demands and the data-rate ratio; and a power
//! parameter file with one record per processor tier and per network node
//! kind. Loading converts each into the core types, re-running all core
//! validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vecopt_core::power::{FixedPnParams, NetParams, PowerParams, VnParams};
use vecopt_core::topology::{
    Link, Medium, Node, NodeKind, Processor, Tier, Topology, PACKET_SIZE_BITS,
};
use vecopt_core::workload::TaskSet;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("{0}")]
    Invalid(String),
}

const NODE_KINDS: [NodeKind; 10] = [
    NodeKind::Source,
    NodeKind::ApWired,
    NodeKind::ApWireless,
    NodeKind::Onu,
    NodeKind::Olt,
    NodeKind::MetroSwitch,
    NodeKind::MetroRouter,
    NodeKind::CoreRouter,
    NodeKind::CoreSwitch,
    NodeKind::Vehicular,
];

fn parse_kind(s: &str) -> Result<NodeKind, ConfigError> {
    NODE_KINDS
        .into_iter()
        .find(|k| k.label() == s)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown node kind {s:?}")))
}

fn parse_tier(s: &str) -> Result<Tier, ConfigError> {
    Tier::ALL
        .into_iter()
        .find(|t| t.label() == s)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown processor tier {s:?}")))
}

fn medium_label(m: Medium) -> &'static str {
    match m {
        Medium::Fibre => "fibre",
        Medium::FreeSpace => "free_space",
    }
}

fn parse_medium(s: &str) -> Result<Medium, ConfigError> {
    match s {
        "fibre" => Ok(Medium::Fibre),
        "free_space" => Ok(Medium::FreeSpace),
        _ => Err(ConfigError::Invalid(format!("unknown link medium {s:?}"))),
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source: Box::new(source),
    })
}

/// Serialized network description.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(default = "default_packet_size")]
    pub packet_size_bits: f64,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
}

fn default_packet_size() -> f64 {
    PACKET_SIZE_BITS
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub kind: String,
    pub service_rate_bps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processor: Option<ProcessorEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessorEntry {
    pub tier: String,
    #[serde(default)]
    pub offset_m: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub a: String,
    pub b: String,
    pub distance_m: f64,
    pub medium: String,
}

impl TopologyFile {
    pub fn into_topology(&self) -> Result<Topology, ConfigError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for e in &self.nodes {
            let processor = match &e.processor {
                None => None,
                Some(p) => Some(Processor {
                    tier: parse_tier(&p.tier)?,
                    offset_m: p.offset_m,
                }),
            };
            nodes.push(Node {
                name: e.name.clone(),
                kind: parse_kind(&e.kind)?,
                service_rate_bps: e.service_rate_bps,
                processor,
            });
        }
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();
        let mut links = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let a = *index
                .get(l.a.as_str())
                .ok_or_else(|| ConfigError::Invalid(format!("link endpoint {:?} unknown", l.a)))?;
            let b = *index
                .get(l.b.as_str())
                .ok_or_else(|| ConfigError::Invalid(format!("link endpoint {:?} unknown", l.b)))?;
            links.push(Link {
                a: vecopt_core::topology::NodeId(a),
                b: vecopt_core::topology::NodeId(b),
                distance_m: l.distance_m,
                medium: parse_medium(&l.medium)?,
            });
        }
        Topology::new(self.packet_size_bits, nodes, links)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn from_topology(t: &Topology) -> TopologyFile {
        let nodes = t
            .nodes()
            .iter()
            .map(|n| NodeEntry {
                name: n.name.clone(),
                kind: n.kind.label().into(),
                service_rate_bps: n.service_rate_bps,
                processor: n.processor.map(|p| ProcessorEntry {
                    tier: p.tier.label().into(),
                    offset_m: p.offset_m,
                }),
            })
            .collect();
        let links = t
            .links()
            .iter()
            .map(|l| LinkEntry {
                a: t.nodes()[l.a.0].name.clone(),
                b: t.nodes()[l.b.0].name.clone(),
                distance_m: l.distance_m,
                medium: medium_label(l.medium).into(),
            })
            .collect();
        TopologyFile {
            packet_size_bits: t.packet_size_bits(),
            nodes,
            links,
        }
    }
}

pub fn load_topology_file(path: &Path) -> Result<TopologyFile, ConfigError> {
    parse_toml(path, &read(path)?)
}

/// Serialized workload: one record per task plus the shared data-rate ratio.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TasksFile {
    /// Mb/s of traffic per MIPS of demand.
    pub drr: f64,
    pub tasks: Vec<TaskEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: usize,
    pub demand_mips: f64,
}

impl TasksFile {
    pub fn into_task_set(&self) -> Result<TaskSet, ConfigError> {
        for w in self.tasks.windows(2) {
            if w[1].id <= w[0].id {
                return Err(ConfigError::Invalid(format!(
                    "task ids must increase; {} follows {}",
                    w[1].id, w[0].id
                )));
            }
        }
        let demands: Vec<f64> = self.tasks.iter().map(|t| t.demand_mips).collect();
        TaskSet::new(&demands, self.drr).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn from_task_set(ts: &TaskSet) -> TasksFile {
        TasksFile {
            drr: ts.drr_mbps_per_mips(),
            tasks: ts
                .tasks()
                .iter()
                .map(|t| TaskEntry {
                    id: t.id.0 + 1,
                    demand_mips: t.demand_mips,
                })
                .collect(),
        }
    }
}

pub fn load_task_set(path: &Path) -> Result<TaskSet, ConfigError> {
    let file: TasksFile = parse_toml(path, &read(path)?)?;
    file.into_task_set()
}

/// Serialized power model: one record per processor tier, one per node kind.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFile {
    pub vn: VnEntry,
    pub nf: FixedEntry,
    pub lf: FixedEntry,
    pub mf: FixedEntry,
    pub cc: FixedEntry,
    #[serde(default)]
    pub net: BTreeMap<String, NetEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VnEntry {
    pub capacity_mips: f64,
    pub ingress_cap_bps: f64,
    pub adapter_w: f64,
    pub energy_per_mips_w: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FixedEntry {
    pub capacity_mips: f64,
    pub idle_w: f64,
    pub energy_per_mips_w: f64,
    pub pue: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NetEntry {
    pub idle_w: f64,
    pub energy_per_bit_w: f64,
    pub pue: f64,
}

fn to_fixed(e: &FixedEntry) -> FixedPnParams {
    FixedPnParams {
        capacity_mips: e.capacity_mips,
        idle_w: e.idle_w,
        energy_per_mips_w: e.energy_per_mips_w,
        pue: e.pue,
    }
}

fn from_fixed(p: &FixedPnParams) -> FixedEntry {
    FixedEntry {
        capacity_mips: p.capacity_mips,
        idle_w: p.idle_w,
        energy_per_mips_w: p.energy_per_mips_w,
        pue: p.pue,
    }
}

impl PowerFile {
    pub fn into_params(&self) -> Result<PowerParams, ConfigError> {
        for key in self.net.keys() {
            parse_kind(key)?;
        }
        let net = |kind: NodeKind| -> NetParams {
            match self.net.get(kind.label()) {
                Some(e) => NetParams {
                    idle_w: e.idle_w,
                    energy_per_bit_w: e.energy_per_bit_w,
                    pue: e.pue,
                },
                None => NetParams::ZERO,
            }
        };
        Ok(PowerParams {
            vn: VnParams {
                capacity_mips: self.vn.capacity_mips,
                ingress_cap_bps: self.vn.ingress_cap_bps,
                adapter_w: self.vn.adapter_w,
                energy_per_mips_w: self.vn.energy_per_mips_w,
            },
            nf: to_fixed(&self.nf),
            lf: to_fixed(&self.lf),
            mf: to_fixed(&self.mf),
            cc: to_fixed(&self.cc),
            net_source: net(NodeKind::Source),
            net_ap_wired: net(NodeKind::ApWired),
            net_ap_wireless: net(NodeKind::ApWireless),
            net_onu: net(NodeKind::Onu),
            net_olt: net(NodeKind::Olt),
            net_metro_switch: net(NodeKind::MetroSwitch),
            net_metro_router: net(NodeKind::MetroRouter),
            net_core_router: net(NodeKind::CoreRouter),
            net_core_switch: net(NodeKind::CoreSwitch),
            net_vehicular: net(NodeKind::Vehicular),
        })
    }

    pub fn from_params(p: &PowerParams) -> PowerFile {
        let mut net = BTreeMap::new();
        for kind in NODE_KINDS {
            let n = p.net_for(kind);
            net.insert(
                kind.label().to_string(),
                NetEntry {
                    idle_w: n.idle_w,
                    energy_per_bit_w: n.energy_per_bit_w,
                    pue: n.pue,
                },
            );
        }
        PowerFile {
            vn: VnEntry {
                capacity_mips: p.vn.capacity_mips,
                ingress_cap_bps: p.vn.ingress_cap_bps,
                adapter_w: p.vn.adapter_w,
                energy_per_mips_w: p.vn.energy_per_mips_w,
            },
            nf: from_fixed(&p.nf),
            lf: from_fixed(&p.lf),
            mf: from_fixed(&p.mf),
            cc: from_fixed(&p.cc),
            net,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("power file serializes")
    }
}

pub fn load_power_params(path: &Path) -> Result<PowerParams, ConfigError> {
    let file: PowerFile = parse_toml(path, &read(path)?)?;
    file.into_params()
}

/// The embedded default power parameter file.
pub fn default_power_file() -> PowerFile {
    PowerFile::from_params(&PowerParams::default_calibrated())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vecopt_core::topology::default_architecture;

    #[test]
    fn topology_round_trips_through_toml() {
        let t = default_architecture(8, 1e9);
        let file = TopologyFile::from_topology(&t);
        let text = toml::to_string_pretty(&file).unwrap();
        let parsed: TopologyFile = toml::from_str(&text).unwrap();
        let rebuilt = parsed.into_topology().unwrap();
        assert_eq!(rebuilt.nodes().len(), t.nodes().len());
        assert_eq!(rebuilt.links().len(), t.links().len());
        assert_eq!(rebuilt.processor_hosts(), t.processor_hosts());
        assert_eq!(
            rebuilt.node_by_name("ap_wireless"),
            t.node_by_name("ap_wireless")
        );
    }

    #[test]
    fn tasks_file_checks_id_order() {
        let bad: TasksFile = toml::from_str(
            "drr = 0.1\n[[tasks]]\nid = 2\ndemand_mips = 100.0\n[[tasks]]\nid = 1\ndemand_mips = 200.0\n",
        )
        .unwrap();
        assert!(bad.into_task_set().is_err());

        let good: TasksFile = toml::from_str(
            "drr = 0.1\n[[tasks]]\nid = 1\ndemand_mips = 100.0\n[[tasks]]\nid = 2\ndemand_mips = 200.0\n",
        )
        .unwrap();
        let ts = good.into_task_set().unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.tasks()[1].data_rate_bps, 20e6);
    }

    #[test]
    fn power_file_round_trips_the_defaults() {
        let file = default_power_file();
        let text = file.to_toml();
        let parsed: PowerFile = toml::from_str(&text).unwrap();
        let params = parsed.into_params().unwrap();
        assert_eq!(params, PowerParams::default_calibrated());
        assert_eq!(file.to_toml(), PowerFile::from_params(&params).to_toml());
    }

    #[test]
    fn unknown_net_kind_is_rejected() {
        let mut file = default_power_file();
        file.net.insert(
            "router9000".into(),
            NetEntry {
                idle_w: 1.0,
                energy_per_bit_w: 0.0,
                pue: 1.0,
            },
        );
        assert!(file.into_params().is_err());
    }
}
