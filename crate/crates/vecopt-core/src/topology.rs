//! Network topology and processing locations.
//!
//! The access point is modelled as two nodes: a wired interface on the fibre
//! chain and a wireless interface serving the vehicles. Source nodes attach
//! to both interfaces, so traffic for a vehicular processor takes the
//! wireless hop while traffic for any fixed processor climbs the wired chain
//! through ONU, OLT, metro and core equipment. Fixed processors (neighbour
//! fog, local fog, metro fog, central cloud) sit on their host nodes with an
//! optional fibre offset for a data centre located away from the host site.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Packet size used to convert bit rates into packet rates.
pub const PACKET_SIZE_BITS: f64 = 12_000.0;

/// Propagation speed in free space, meters per second.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_000.0;

/// Propagation speed in fibre relative to free space.
pub const FIBRE_SPEED_RATIO: f64 = 2.0 / 3.0;

/// Index of a node within its topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Functional role of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Traffic source at the access edge.
    Source,
    /// Wired interface of the access point.
    ApWired,
    /// Wireless interface of the access point.
    ApWireless,
    /// Optical network unit.
    Onu,
    /// Optical line terminal.
    Olt,
    /// Metro aggregation switch.
    MetroSwitch,
    /// Metro router.
    MetroRouter,
    /// Core router.
    CoreRouter,
    /// Core switch.
    CoreSwitch,
    /// Vehicular node reachable over the wireless interface.
    Vehicular,
}

impl NodeKind {
    /// Stable lowercase label, used in configs and reports.
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Source => "source",
            NodeKind::ApWired => "ap_wired",
            NodeKind::ApWireless => "ap_wireless",
            NodeKind::Onu => "onu",
            NodeKind::Olt => "olt",
            NodeKind::MetroSwitch => "metro_switch",
            NodeKind::MetroRouter => "metro_router",
            NodeKind::CoreRouter => "core_router",
            NodeKind::CoreSwitch => "core_switch",
            NodeKind::Vehicular => "vehicular",
        }
    }
}

/// Transmission medium of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Medium {
    Fibre,
    FreeSpace,
}

impl Medium {
    /// Propagation speed over this medium, meters per second.
    pub fn speed_m_s(self) -> f64 {
        match self {
            Medium::Fibre => FIBRE_SPEED_RATIO * SPEED_OF_LIGHT_M_S,
            Medium::FreeSpace => SPEED_OF_LIGHT_M_S,
        }
    }
}

/// Processing tier, ordered from the vehicles outward to the central cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    /// Vehicular node processor.
    Vn,
    /// Neighbouring fog at the ONU.
    Nf,
    /// Local fog at the OLT.
    Lf,
    /// Metro fog at the metro router.
    Mf,
    /// Central cloud at the core switch.
    Cc,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::Vn, Tier::Nf, Tier::Lf, Tier::Mf, Tier::Cc];

    /// Stable lowercase label, used in configs and reports.
    pub fn label(self) -> &'static str {
        match self {
            Tier::Vn => "vn",
            Tier::Nf => "nf",
            Tier::Lf => "lf",
            Tier::Mf => "mf",
            Tier::Cc => "cc",
        }
    }
}

/// Processor attached to a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Processor {
    pub tier: Tier,
    /// Fibre distance from the host node to the processor itself.
    pub offset_m: f64,
}

/// A network node, optionally hosting a processor.
#[derive(Clone, Debug)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Transmission rate of the node's output port, bits per second.
    pub service_rate_bps: f64,
    pub processor: Option<Processor>,
}

/// Undirected link between two nodes.
#[derive(Clone, Debug)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub distance_m: f64,
    pub medium: Medium,
}

/// Validation or routing failure.
#[derive(Clone, Debug, PartialEq)]
pub enum TopologyError {
    UnknownNode(usize),
    /// The node exists but hosts no processor.
    NotAProcessor(usize),
    /// The topology violates a structural rule; the message names it.
    Invalid(String),
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyError::UnknownNode(i) => write!(f, "unknown node index {i}"),
            TopologyError::NotAProcessor(i) => {
                write!(f, "node index {i} does not host a processor")
            }
            TopologyError::Invalid(msg) => write!(f, "invalid topology: {msg}"),
        }
    }
}

impl core::error::Error for TopologyError {}

/// Immutable, validated network with routing precomputed.
#[derive(Clone, Debug)]
pub struct Topology {
    packet_size_bits: f64,
    nodes: Vec<Node>,
    links: Vec<Link>,
    ap_wired: NodeId,
    ap_wireless: NodeId,
    sources: Vec<NodeId>,
    /// Processor hosts ordered vehicles first, then NF, LF, MF, CC.
    processor_hosts: Vec<NodeId>,
    /// Wired-chain predecessor of each node, towards the wired AP interface.
    backbone_parent: BTreeMap<NodeId, NodeId>,
    link_index: BTreeMap<(NodeId, NodeId), usize>,
}

impl Topology {
    /// Validates the node and link lists and builds routing state.
    pub fn new(
        packet_size_bits: f64,
        nodes: Vec<Node>,
        links: Vec<Link>,
    ) -> Result<Self, TopologyError> {
        if !(packet_size_bits > 0.0) {
            return Err(TopologyError::Invalid(
                "packet size must be positive".into(),
            ));
        }
        if nodes.is_empty() {
            return Err(TopologyError::Invalid("no nodes".into()));
        }
        let mut names: Vec<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(TopologyError::Invalid("duplicate node name".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(n.service_rate_bps > 0.0) {
                return Err(TopologyError::Invalid(format_node(
                    i,
                    "non-positive service rate",
                )));
            }
            match (&n.processor, n.kind) {
                (Some(p), kind) => {
                    if !(p.offset_m >= 0.0) {
                        return Err(TopologyError::Invalid(format_node(
                            i,
                            "negative processor offset",
                        )));
                    }
                    let host_ok = match p.tier {
                        Tier::Vn => kind == NodeKind::Vehicular,
                        _ => !matches!(
                            kind,
                            NodeKind::Source | NodeKind::Vehicular | NodeKind::ApWireless
                        ),
                    };
                    if !host_ok {
                        return Err(TopologyError::Invalid(format_node(
                            i,
                            "processor tier not allowed on this node kind",
                        )));
                    }
                }
                (None, NodeKind::Vehicular) => {
                    return Err(TopologyError::Invalid(format_node(
                        i,
                        "vehicular node without processor",
                    )));
                }
                (None, _) => {}
            }
        }
        let mut fixed_tiers: Vec<(Tier, NodeId)> = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.processor {
                if p.tier != Tier::Vn {
                    if fixed_tiers.iter().any(|(t, _)| *t == p.tier) {
                        return Err(TopologyError::Invalid(format!(
                            "duplicate {} processor",
                            p.tier.label()
                        )));
                    }
                    fixed_tiers.push((p.tier, NodeId(i)));
                }
            }
        }

        let ap_wired = single_of_kind(&nodes, NodeKind::ApWired)?;
        let ap_wireless = single_of_kind(&nodes, NodeKind::ApWireless)?;
        let sources: Vec<NodeId> = ids_of_kind(&nodes, NodeKind::Source);
        if sources.is_empty() {
            return Err(TopologyError::Invalid("no source nodes".into()));
        }

        let mut link_index = BTreeMap::new();
        for (li, l) in links.iter().enumerate() {
            for end in [l.a, l.b] {
                if end.0 >= nodes.len() {
                    return Err(TopologyError::Invalid(format!(
                        "link {li} references unknown node"
                    )));
                }
            }
            if l.a == l.b {
                return Err(TopologyError::Invalid(format!("link {li} is a self-loop")));
            }
            if !(l.distance_m > 0.0) {
                return Err(TopologyError::Invalid(format!(
                    "link {li} has non-positive distance"
                )));
            }
            let wireless_pair = {
                let (ka, kb) = (nodes[l.a.0].kind, nodes[l.b.0].kind);
                (ka == NodeKind::ApWireless) != (kb == NodeKind::ApWireless)
            };
            if l.medium == Medium::FreeSpace && !wireless_pair {
                return Err(TopologyError::Invalid(format!(
                    "link {li} uses free space away from the wireless interface"
                )));
            }
            let key = ordered(l.a, l.b);
            if link_index.insert(key, li).is_some() {
                return Err(TopologyError::Invalid(format!("parallel link {li}")));
            }
        }

        for &s in &sources {
            for ap in [ap_wired, ap_wireless] {
                if !link_index.contains_key(&ordered(s, ap)) {
                    return Err(TopologyError::Invalid(format!(
                        "source {} lacks a link to {}",
                        nodes[s.0].name, nodes[ap.0].name
                    )));
                }
            }
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::Vehicular
                && !link_index.contains_key(&ordered(NodeId(i), ap_wireless))
            {
                return Err(TopologyError::Invalid(format!(
                    "vehicular node {} lacks a link to the wireless interface",
                    n.name
                )));
            }
        }

        let backbone_parent = wired_chain_parents(&nodes, &links, ap_wired)?;
        for (tier, host) in &fixed_tiers {
            if *host != ap_wired && !backbone_parent.contains_key(host) {
                return Err(TopologyError::Invalid(format!(
                    "{} processor host is not on the wired chain",
                    tier.label()
                )));
            }
        }

        let mut processor_hosts: Vec<NodeId> = (0..nodes.len())
            .map(NodeId)
            .filter(|id| matches!(nodes[id.0].processor, Some(p) if p.tier == Tier::Vn))
            .collect();
        for tier in [Tier::Nf, Tier::Lf, Tier::Mf, Tier::Cc] {
            if let Some((_, host)) = fixed_tiers.iter().find(|(t, _)| *t == tier) {
                processor_hosts.push(*host);
            }
        }
        if processor_hosts.is_empty() {
            return Err(TopologyError::Invalid("no processors".into()));
        }

        Ok(Topology {
            packet_size_bits,
            nodes,
            links,
            ap_wired,
            ap_wireless,
            sources,
            processor_hosts,
            backbone_parent,
            link_index,
        })
    }

    pub fn packet_size_bits(&self) -> f64 {
        self.packet_size_bits
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, TopologyError> {
        self.nodes.get(id.0).ok_or(TopologyError::UnknownNode(id.0))
    }

    pub fn ap_wired(&self) -> NodeId {
        self.ap_wired
    }

    pub fn ap_wireless(&self) -> NodeId {
        self.ap_wireless
    }

    /// Source nodes in index order.
    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    /// Processor host nodes, vehicles first, then NF, LF, MF, CC.
    pub fn processor_hosts(&self) -> &[NodeId] {
        &self.processor_hosts
    }

    /// Processor hosted at `id`, if any.
    pub fn processor_at(&self, id: NodeId) -> Option<Processor> {
        self.nodes.get(id.0).and_then(|n| n.processor)
    }

    /// Looks up a node id by name.
    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    /// Link joining `a` and `b`, if present.
    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.link_index.get(&ordered(a, b)).map(|&i| &self.links[i])
    }

    /// Unique path from a source node to a processor host, inclusive.
    ///
    /// Vehicular destinations are reached over the wireless interface; fixed
    /// destinations climb the wired chain from the wired interface.
    pub fn route(&self, source: NodeId, dest: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let src_node = self.node(source)?;
        if src_node.kind != NodeKind::Source {
            return Err(TopologyError::Invalid(format!(
                "route source {} is not a source node",
                src_node.name
            )));
        }
        let proc_ = self
            .processor_at(dest)
            .ok_or(TopologyError::NotAProcessor(dest.0))?;
        if proc_.tier == Tier::Vn {
            return Ok(vec![source, self.ap_wireless, dest]);
        }
        let mut tail = vec![dest];
        let mut cur = dest;
        while cur != self.ap_wired {
            cur = *self.backbone_parent.get(&cur).ok_or_else(|| {
                TopologyError::Invalid("destination is off the wired chain".into())
            })?;
            tail.push(cur);
        }
        tail.push(source);
        tail.reverse();
        Ok(tail)
    }

    /// Nodes whose queues a flow along `path` occupies.
    ///
    /// The source's own egress queue is not charged. A wireless destination
    /// charges only the wireless interface because the vehicle terminates the
    /// flow; a wired destination charges every forwarding node up to and
    /// including the host, whose port feeds the processor.
    pub fn charged_nodes<'p>(&self, path: &'p [NodeId]) -> &'p [NodeId] {
        match path.last().and_then(|&d| self.processor_at(d)) {
            Some(p) if p.tier == Tier::Vn => &path[1..path.len() - 1],
            _ => &path[1..],
        }
    }
}

fn format_node(i: usize, msg: &str) -> String {
    format!("node {i}: {msg}")
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn single_of_kind(nodes: &[Node], kind: NodeKind) -> Result<NodeId, TopologyError> {
    let mut found = ids_of_kind(nodes, kind);
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => Err(TopologyError::Invalid(format!(
            "missing {} node",
            kind.label()
        ))),
        _ => Err(TopologyError::Invalid(format!(
            "more than one {} node",
            kind.label()
        ))),
    }
}

fn ids_of_kind(nodes: &[Node], kind: NodeKind) -> Vec<NodeId> {
    nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == kind)
        .map(|(i, _)| NodeId(i))
        .collect()
}

/// Breadth-first parents over the wired chain, rooted at the wired interface.
///
/// Source, vehicular and wireless-interface nodes do not participate. The
/// wired chain must be a tree so every destination has one path.
fn wired_chain_parents(
    nodes: &[Node],
    links: &[Link],
    root: NodeId,
) -> Result<BTreeMap<NodeId, NodeId>, TopologyError> {
    let on_chain = |id: NodeId| {
        !matches!(
            nodes[id.0].kind,
            NodeKind::Source | NodeKind::Vehicular | NodeKind::ApWireless
        )
    };
    let mut parent = BTreeMap::new();
    let mut queue = vec![root];
    let mut seen = vec![root];
    while let Some(cur) = queue.pop() {
        for l in links {
            let other = if l.a == cur {
                l.b
            } else if l.b == cur {
                l.a
            } else {
                continue;
            };
            if !on_chain(other) {
                continue;
            }
            if seen.contains(&other) {
                if parent.get(&cur) != Some(&other) {
                    return Err(TopologyError::Invalid(
                        "wired chain contains a cycle".into(),
                    ));
                }
                continue;
            }
            seen.push(other);
            parent.insert(other, cur);
            queue.push(other);
        }
    }
    for (i, n) in nodes.iter().enumerate() {
        let id = NodeId(i);
        if on_chain(id) && id != root && !parent.contains_key(&id) {
            return Err(TopologyError::Invalid(format!(
                "wired node {} is unreachable from the wired interface",
                n.name
            )));
        }
    }
    Ok(parent)
}

/// Builds the reference architecture.
///
/// Ten source nodes attach to the split access point. `n_vn` vehicles sit on
/// the wireless interface at 100 m. The wired chain runs ONU (100 m), OLT
/// (10 km), metro switch (5 km), metro router (1 m, same site), core router
/// (300 km) and core switch (1 m, same site). Core-layer ports run at
/// 40 Gb/s, the wireless interface at `ap_wireless_bps`, everything else at
/// 10 Gb/s. Processors: one per vehicle, neighbour fog at the ONU, local fog
/// at the OLT, metro fog 2 km off the metro router, central cloud at the
/// core switch.
pub fn default_architecture(n_vn: usize, ap_wireless_bps: f64) -> Topology {
    const R10G: f64 = 10e9;
    const R40G: f64 = 40e9;
    let n_sources = 10;

    let mut nodes = Vec::new();
    for i in 0..n_sources {
        nodes.push(Node {
            name: format!("sn{}", i + 1),
            kind: NodeKind::Source,
            service_rate_bps: R10G,
            processor: None,
        });
    }
    let ap_wired = NodeId(nodes.len());
    nodes.push(Node {
        name: "ap_wired".into(),
        kind: NodeKind::ApWired,
        service_rate_bps: R10G,
        processor: None,
    });
    let ap_wireless = NodeId(nodes.len());
    nodes.push(Node {
        name: "ap_wireless".into(),
        kind: NodeKind::ApWireless,
        service_rate_bps: ap_wireless_bps,
        processor: None,
    });
    let onu = NodeId(nodes.len());
    nodes.push(Node {
        name: "onu".into(),
        kind: NodeKind::Onu,
        service_rate_bps: R10G,
        processor: Some(Processor {
            tier: Tier::Nf,
            offset_m: 0.0,
        }),
    });
    let olt = NodeId(nodes.len());
    nodes.push(Node {
        name: "olt".into(),
        kind: NodeKind::Olt,
        service_rate_bps: R10G,
        processor: Some(Processor {
            tier: Tier::Lf,
            offset_m: 0.0,
        }),
    });
    let metro_switch = NodeId(nodes.len());
    nodes.push(Node {
        name: "metro_switch".into(),
        kind: NodeKind::MetroSwitch,
        service_rate_bps: R10G,
        processor: None,
    });
    let metro_router = NodeId(nodes.len());
    nodes.push(Node {
        name: "metro_router".into(),
        kind: NodeKind::MetroRouter,
        service_rate_bps: R10G,
        processor: Some(Processor {
            tier: Tier::Mf,
            offset_m: 2_000.0,
        }),
    });
    let core_router = NodeId(nodes.len());
    nodes.push(Node {
        name: "core_router".into(),
        kind: NodeKind::CoreRouter,
        service_rate_bps: R40G,
        processor: None,
    });
    let core_switch = NodeId(nodes.len());
    nodes.push(Node {
        name: "core_switch".into(),
        kind: NodeKind::CoreSwitch,
        service_rate_bps: R40G,
        processor: Some(Processor {
            tier: Tier::Cc,
            offset_m: 0.0,
        }),
    });
    let first_vn = nodes.len();
    for v in 0..n_vn {
        nodes.push(Node {
            name: format!("vn{}", v + 1),
            kind: NodeKind::Vehicular,
            service_rate_bps: R10G,
            processor: Some(Processor {
                tier: Tier::Vn,
                offset_m: 0.0,
            }),
        });
    }

    let mut links = Vec::new();
    for i in 0..n_sources {
        links.push(Link {
            a: NodeId(i),
            b: ap_wired,
            distance_m: 100.0,
            medium: Medium::Fibre,
        });
        links.push(Link {
            a: NodeId(i),
            b: ap_wireless,
            distance_m: 100.0,
            medium: Medium::FreeSpace,
        });
    }
    for v in 0..n_vn {
        links.push(Link {
            a: ap_wireless,
            b: NodeId(first_vn + v),
            distance_m: 100.0,
            medium: Medium::FreeSpace,
        });
    }
    links.push(Link {
        a: ap_wired,
        b: onu,
        distance_m: 100.0,
        medium: Medium::Fibre,
    });
    links.push(Link {
        a: onu,
        b: olt,
        distance_m: 10_000.0,
        medium: Medium::Fibre,
    });
    links.push(Link {
        a: olt,
        b: metro_switch,
        distance_m: 5_000.0,
        medium: Medium::Fibre,
    });
    links.push(Link {
        a: metro_switch,
        b: metro_router,
        distance_m: 1.0,
        medium: Medium::Fibre,
    });
    links.push(Link {
        a: metro_router,
        b: core_router,
        distance_m: 300_000.0,
        medium: Medium::Fibre,
    });
    links.push(Link {
        a: core_router,
        b: core_switch,
        distance_m: 1.0,
        medium: Medium::Fibre,
    });

    Topology::new(PACKET_SIZE_BITS, nodes, links).expect("reference architecture must validate")
}
