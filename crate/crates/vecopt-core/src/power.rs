//! Power consumption of processing and network equipment.
//!
//! Fixed processing locations draw an idle baseline plus an energy-per-MIPS
//! term, scaled by the site's power usage effectiveness, and only when at
//! least one task runs there. Vehicular processors draw a network adapter
//! constant plus energy per MIPS, with no idle or PUE terms since the
//! vehicle is powered anyway. Network equipment draws an idle baseline plus
//! energy per transported bit, again under PUE, on every node that carries
//! traffic. Sources and vehicles have zero network draw by default: sources
//! are accounted to the user, the vehicle's radio is the adapter term.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::delay::{bits_to_packets, node_arrivals, DelayError};
use crate::topology::{NodeId, NodeKind, Tier, Topology};
use crate::workload::TaskSet;

/// Power model of one fixed processing location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPnParams {
    pub capacity_mips: f64,
    pub idle_w: f64,
    pub energy_per_mips_w: f64,
    pub pue: f64,
}

/// Power model of a vehicular processor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VnParams {
    pub capacity_mips: f64,
    /// Most traffic one vehicle can accept, bits per second.
    pub ingress_cap_bps: f64,
    pub adapter_w: f64,
    pub energy_per_mips_w: f64,
}

/// Power model of one network node kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetParams {
    pub idle_w: f64,
    pub energy_per_bit_w: f64,
    pub pue: f64,
}

impl NetParams {
    pub const ZERO: NetParams = NetParams {
        idle_w: 0.0,
        energy_per_bit_w: 0.0,
        pue: 0.0,
    };
}

/// Complete power parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerParams {
    pub vn: VnParams,
    pub nf: FixedPnParams,
    pub lf: FixedPnParams,
    pub mf: FixedPnParams,
    pub cc: FixedPnParams,
    pub net_source: NetParams,
    pub net_ap_wired: NetParams,
    pub net_ap_wireless: NetParams,
    pub net_onu: NetParams,
    pub net_olt: NetParams,
    pub net_metro_switch: NetParams,
    pub net_metro_router: NetParams,
    pub net_core_router: NetParams,
    pub net_core_switch: NetParams,
    pub net_vehicular: NetParams,
}

impl PowerParams {
    /// Defaults sized so the allocation studies reproduce their reference
    /// behaviour: vehicles win on power at light demand, the neighbour fog
    /// in the mid range, the local fog beyond it, and the deeper tiers only
    /// when delay terms force them.
    pub fn default_calibrated() -> Self {
        let net = NetParams {
            idle_w: 2.0,
            energy_per_bit_w: 5e-9,
            pue: 1.5,
        };
        PowerParams {
            vn: VnParams {
                capacity_mips: 1000.0,
                ingress_cap_bps: 72.2e6,
                adapter_w: 3.0,
                energy_per_mips_w: 0.004,
            },
            nf: FixedPnParams {
                capacity_mips: 5600.0,
                idle_w: 13.0,
                energy_per_mips_w: 0.004,
                pue: 1.5,
            },
            lf: FixedPnParams {
                capacity_mips: 1e6,
                idle_w: 45.0,
                energy_per_mips_w: 0.005,
                pue: 1.3,
            },
            mf: FixedPnParams {
                capacity_mips: 1e6,
                idle_w: 80.0,
                energy_per_mips_w: 0.003,
                pue: 1.6,
            },
            cc: FixedPnParams {
                capacity_mips: 1e6,
                idle_w: 200.0,
                energy_per_mips_w: 0.0025,
                pue: 1.7,
            },
            net_source: NetParams::ZERO,
            net_ap_wired: net,
            net_ap_wireless: net,
            net_onu: net,
            net_olt: net,
            net_metro_switch: net,
            net_metro_router: net,
            net_core_router: net,
            net_core_switch: net,
            net_vehicular: NetParams::ZERO,
        }
    }

    /// Parameters of the fixed tier, `None` for the vehicular tier.
    pub fn fixed_for(&self, tier: Tier) -> Option<&FixedPnParams> {
        match tier {
            Tier::Vn => None,
            Tier::Nf => Some(&self.nf),
            Tier::Lf => Some(&self.lf),
            Tier::Mf => Some(&self.mf),
            Tier::Cc => Some(&self.cc),
        }
    }

    /// Network power model of a node kind.
    pub fn net_for(&self, kind: NodeKind) -> &NetParams {
        match kind {
            NodeKind::Source => &self.net_source,
            NodeKind::ApWired => &self.net_ap_wired,
            NodeKind::ApWireless => &self.net_ap_wireless,
            NodeKind::Onu => &self.net_onu,
            NodeKind::Olt => &self.net_olt,
            NodeKind::MetroSwitch => &self.net_metro_switch,
            NodeKind::MetroRouter => &self.net_metro_router,
            NodeKind::CoreRouter => &self.net_core_router,
            NodeKind::CoreSwitch => &self.net_core_switch,
            NodeKind::Vehicular => &self.net_vehicular,
        }
    }
}

/// Total power split by origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerBreakdown {
    pub vn_w: f64,
    pub nf_w: f64,
    pub lf_w: f64,
    pub mf_w: f64,
    pub cc_w: f64,
    pub net_w: f64,
    pub total_w: f64,
}

/// Power computation failure.
#[derive(Clone, Debug, PartialEq)]
pub enum PowerError {
    Load(DelayError),
}

impl fmt::Display for PowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerError::Load(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for PowerError {}

impl From<DelayError> for PowerError {
    fn from(e: DelayError) -> Self {
        PowerError::Load(e)
    }
}

/// MIPS placed on each processor host, in host id order.
pub fn demand_per_host(task_set: &TaskSet, targets: &[NodeId]) -> BTreeMap<NodeId, f64> {
    let mut mips: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (task, &dest) in task_set.tasks().iter().zip(targets) {
        *mips.entry(dest).or_insert(0.0) += task.demand_mips;
    }
    mips
}

/// Total consumption of an allocation.
///
/// The total sums central cloud, metro fog, local fog, neighbour fog,
/// vehicular and network contributions in that order.
pub fn total_power(
    topology: &Topology,
    task_set: &TaskSet,
    targets: &[NodeId],
    params: &PowerParams,
) -> Result<PowerBreakdown, PowerError> {
    let loads = node_arrivals(topology, task_set, targets)?;
    let mips = demand_per_host(task_set, targets);

    let mut tier_w = BTreeMap::from([
        (Tier::Nf, 0.0),
        (Tier::Lf, 0.0),
        (Tier::Mf, 0.0),
        (Tier::Cc, 0.0),
    ]);
    let mut vn_w = 0.0;
    for (&host, &m) in &mips {
        if m <= 0.0 {
            continue;
        }
        let tier = topology
            .processor_at(host)
            .expect("targets validated by node_arrivals")
            .tier;
        match params.fixed_for(tier) {
            None => vn_w += params.vn.adapter_w + params.vn.energy_per_mips_w * m,
            Some(p) => {
                *tier_w.get_mut(&tier).expect("fixed tier") +=
                    p.pue * (p.idle_w + p.energy_per_mips_w * m);
            }
        }
    }

    let mut net_w = 0.0;
    for (&node, &lambda) in &loads {
        if lambda <= 0.0 {
            continue;
        }
        let p = params.net_for(topology.node(node).expect("load key is a node").kind);
        if p.pue == 0.0 && p.idle_w == 0.0 && p.energy_per_bit_w == 0.0 {
            continue;
        }
        net_w += p.pue * (p.idle_w + p.energy_per_bit_w * lambda);
    }

    let (cc_w, mf_w, lf_w, nf_w) = (
        tier_w[&Tier::Cc],
        tier_w[&Tier::Mf],
        tier_w[&Tier::Lf],
        tier_w[&Tier::Nf],
    );
    let total_w = cc_w + mf_w + lf_w + nf_w + vn_w + net_w;
    Ok(PowerBreakdown {
        vn_w,
        nf_w,
        lf_w,
        mf_w,
        cc_w,
        net_w,
        total_w,
    })
}

/// A way an allocation violates the model's limits.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    LengthMismatch {
        targets: usize,
        tasks: usize,
    },
    NotAProcessor {
        task: usize,
        node: NodeId,
    },
    FixedCapacityExceeded {
        tier: Tier,
        used_mips: f64,
        capacity_mips: f64,
    },
    VehicleCapacityExceeded {
        node: NodeId,
        used_mips: f64,
        capacity_mips: f64,
    },
    VehicleIngressExceeded {
        node: NodeId,
        used_bps: f64,
        capacity_bps: f64,
    },
    UnstableNode {
        node: NodeId,
        arrival_bps: f64,
        service_rate_bps: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { targets, tasks } => {
                write!(f, "{targets} targets for {tasks} tasks")
            }
            Violation::NotAProcessor { task, node } => {
                write!(f, "task {task} assigned to non-processor node {node}")
            }
            Violation::FixedCapacityExceeded {
                tier,
                used_mips,
                capacity_mips,
            } => {
                write!(
                    f,
                    "{} overloaded: {used_mips} of {capacity_mips} MIPS",
                    tier.label()
                )
            }
            Violation::VehicleCapacityExceeded {
                node,
                used_mips,
                capacity_mips,
            } => {
                write!(
                    f,
                    "vehicle {node} overloaded: {used_mips} of {capacity_mips} MIPS"
                )
            }
            Violation::VehicleIngressExceeded {
                node,
                used_bps,
                capacity_bps,
            } => {
                write!(
                    f,
                    "vehicle {node} ingress {used_bps} b/s exceeds {capacity_bps} b/s"
                )
            }
            Violation::UnstableNode {
                node,
                arrival_bps,
                service_rate_bps,
            } => {
                write!(
                    f,
                    "node {node} unstable: {arrival_bps} b/s at {service_rate_bps} b/s port"
                )
            }
        }
    }
}

/// Checks capacities and queue stability; an empty list means feasible.
///
/// Stability is required at every node a flow charges for queuing delay.
pub fn feasible(
    topology: &Topology,
    task_set: &TaskSet,
    targets: &[NodeId],
    params: &PowerParams,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if targets.len() != task_set.len() {
        out.push(Violation::LengthMismatch {
            targets: targets.len(),
            tasks: task_set.len(),
        });
        return out;
    }
    for (i, &dest) in targets.iter().enumerate() {
        if topology.processor_at(dest).is_none() {
            out.push(Violation::NotAProcessor {
                task: i,
                node: dest,
            });
        }
    }
    if !out.is_empty() {
        return out;
    }

    let mips = demand_per_host(task_set, targets);
    let mut tier_mips: BTreeMap<Tier, f64> = BTreeMap::new();
    for (&host, &m) in &mips {
        let tier = topology.processor_at(host).expect("checked above").tier;
        if tier != Tier::Vn {
            *tier_mips.entry(tier).or_insert(0.0) += m;
        }
    }
    for tier in [Tier::Nf, Tier::Lf, Tier::Mf, Tier::Cc] {
        if let (Some(&used), Some(p)) = (tier_mips.get(&tier), params.fixed_for(tier)) {
            if used > p.capacity_mips {
                out.push(Violation::FixedCapacityExceeded {
                    tier,
                    used_mips: used,
                    capacity_mips: p.capacity_mips,
                });
            }
        }
    }

    let mut vehicle_rate: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (task, &dest) in task_set.tasks().iter().zip(targets) {
        if matches!(topology.processor_at(dest), Some(p) if p.tier == Tier::Vn) {
            *vehicle_rate.entry(dest).or_insert(0.0) += task.data_rate_bps;
        }
    }
    for (&host, &m) in &mips {
        if matches!(topology.processor_at(host), Some(p) if p.tier == Tier::Vn)
            && m > params.vn.capacity_mips
        {
            out.push(Violation::VehicleCapacityExceeded {
                node: host,
                used_mips: m,
                capacity_mips: params.vn.capacity_mips,
            });
        }
    }
    for (&host, &r) in &vehicle_rate {
        if r > params.vn.ingress_cap_bps {
            out.push(Violation::VehicleIngressExceeded {
                node: host,
                used_bps: r,
                capacity_bps: params.vn.ingress_cap_bps,
            });
        }
    }

    let loads = match node_arrivals(topology, task_set, targets) {
        Ok(l) => l,
        Err(_) => return out,
    };
    let mut charged: Vec<NodeId> = Vec::new();
    for (task, &dest) in task_set.tasks().iter().zip(targets) {
        let source = crate::delay::source_for(topology, task.id.0);
        if let Ok(path) = topology.route(source, dest) {
            for &n in topology.charged_nodes(&path) {
                if !charged.contains(&n) {
                    charged.push(n);
                }
            }
        }
    }
    charged.sort_unstable();
    let pkt = topology.packet_size_bits();
    for n in charged {
        let node = topology.node(n).expect("charged node exists");
        let arrival = *loads.get(&n).unwrap_or(&0.0);
        if bits_to_packets(arrival, pkt) >= bits_to_packets(node.service_rate_bps, pkt) {
            out.push(Violation::UnstableNode {
                node: n,
                arrival_bps: arrival,
                service_rate_bps: node.service_rate_bps,
            });
        }
    }
    out
}

/// Human-readable list of violations.
pub fn describe_violations(violations: &[Violation]) -> String {
    let mut s = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        s.push_str(&format!("{v}"));
    }
    s
}
