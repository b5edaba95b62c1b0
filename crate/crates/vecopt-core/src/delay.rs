//! Propagation and M/M/1 queuing delay.
//!
//! Every node port is an M/M/1 queue serving fixed-size packets, so a port
//! with transmission rate `mu` bits per second and offered load `lambda`
//! bits per second delays each packet by `1 / (mu - lambda)` packet service
//! times. Loads are converted to packets per second with the topology's
//! packet size. Because a flow's load lands on whole paths, the arrival rate
//! at any node is a sum over a subset of task rates; the lookup table
//! pretabulates the delay at every such sum so that repeated evaluations and
//! the integer program read identical values.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::topology::{NodeId, Tier, Topology, TopologyError};
use crate::workload::TaskSet;

/// Queue with arrival rate at or above its service rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnstableQueue {
    pub lambda_pkts_s: f64,
    pub mu_pkts_s: f64,
}

impl fmt::Display for UnstableQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unstable queue: arrival {} pkt/s >= service {} pkt/s",
            self.lambda_pkts_s, self.mu_pkts_s
        )
    }
}

impl core::error::Error for UnstableQueue {}

/// Delay computation failure.
#[derive(Clone, Debug, PartialEq)]
pub enum DelayError {
    Unstable(UnstableQueue),
    /// The arrival rate matches no row of the lookup table.
    TableGap {
        service_rate_bps: f64,
        arrival_bps: f64,
    },
    /// No table was built for this service rate.
    MissingTable {
        service_rate_bps: f64,
    },
    Topology(TopologyError),
}

impl fmt::Display for DelayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayError::Unstable(u) => u.fmt(f),
            DelayError::TableGap {
                service_rate_bps,
                arrival_bps,
            } => write!(
                f,
                "no lookup row for arrival {arrival_bps} b/s at service rate {service_rate_bps} b/s"
            ),
            DelayError::MissingTable { service_rate_bps } => {
                write!(f, "no lookup table for service rate {service_rate_bps} b/s")
            }
            DelayError::Topology(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for DelayError {}

impl From<UnstableQueue> for DelayError {
    fn from(u: UnstableQueue) -> Self {
        DelayError::Unstable(u)
    }
}

impl From<TopologyError> for DelayError {
    fn from(e: TopologyError) -> Self {
        DelayError::Topology(e)
    }
}

/// Converts a bit rate to a packet rate.
pub fn bits_to_packets(rate_bps: f64, packet_size_bits: f64) -> f64 {
    rate_bps / packet_size_bits
}

/// M/M/1 sojourn time in seconds for rates in packets per second.
pub fn mm1_delay(lambda_pkts_s: f64, mu_pkts_s: f64) -> Result<f64, UnstableQueue> {
    if lambda_pkts_s >= mu_pkts_s {
        return Err(UnstableQueue {
            lambda_pkts_s,
            mu_pkts_s,
        });
    }
    Ok(1.0 / (mu_pkts_s - lambda_pkts_s))
}

/// One pretabulated arrival level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub arrival_bps: f64,
    /// Sojourn time in seconds, or `None` when the queue is unstable.
    pub delay_s: Option<f64>,
}

/// Delay lookup table for one service rate.
///
/// Rows cover every distinct sum of a subset of the task set's data rates,
/// accumulated in task order so that lookups of node loads hit rows
/// bit-for-bit.
#[derive(Clone, Debug)]
pub struct DelayTable {
    service_rate_bps: f64,
    packet_size_bits: f64,
    rows: Vec<TableRow>,
}

impl DelayTable {
    pub fn service_rate_bps(&self) -> f64 {
        self.service_rate_bps
    }

    pub fn packet_size_bits(&self) -> f64 {
        self.packet_size_bits
    }

    /// Rows in ascending arrival order.
    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    /// Sojourn time for an exact or near-exact (1e-9 relative) arrival rate.
    pub fn delay_s(&self, arrival_bps: f64) -> Result<f64, DelayError> {
        let row = self.find_row(arrival_bps).ok_or(DelayError::TableGap {
            service_rate_bps: self.service_rate_bps,
            arrival_bps,
        })?;
        row.delay_s.ok_or_else(|| {
            DelayError::Unstable(UnstableQueue {
                lambda_pkts_s: bits_to_packets(row.arrival_bps, self.packet_size_bits),
                mu_pkts_s: bits_to_packets(self.service_rate_bps, self.packet_size_bits),
            })
        })
    }

    fn find_row(&self, arrival_bps: f64) -> Option<&TableRow> {
        let idx = self.rows.binary_search_by(|r| {
            r.arrival_bps
                .partial_cmp(&arrival_bps)
                .expect("finite rates")
        });
        match idx {
            Ok(i) => Some(&self.rows[i]),
            Err(i) => {
                let tol = 1e-9 * if arrival_bps > 1.0 { arrival_bps } else { 1.0 };
                let near = |r: &&TableRow| {
                    let d = r.arrival_bps - arrival_bps;
                    (if d < 0.0 { -d } else { d }) <= tol
                };
                self.rows
                    .get(i)
                    .filter(near)
                    .or_else(|| i.checked_sub(1).and_then(|j| self.rows.get(j)).filter(near))
            }
        }
    }
}

/// Tabulates the delay at every distinct subset sum of the task data rates.
pub fn build_lookup_table(
    task_set: &TaskSet,
    service_rate_bps: f64,
    packet_size_bits: f64,
) -> DelayTable {
    let mut sums: Vec<f64> = vec![0.0];
    for t in task_set.tasks() {
        let mut extended: Vec<f64> = sums.iter().map(|s| s + t.data_rate_bps).collect();
        sums.append(&mut extended);
        sums.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
        sums.dedup();
    }
    let mu_pkts = bits_to_packets(service_rate_bps, packet_size_bits);
    let rows = sums
        .into_iter()
        .map(|arrival_bps| TableRow {
            arrival_bps,
            delay_s: mm1_delay(bits_to_packets(arrival_bps, packet_size_bits), mu_pkts).ok(),
        })
        .collect();
    DelayTable {
        service_rate_bps,
        packet_size_bits,
        rows,
    }
}

/// Lookup tables keyed by service rate.
#[derive(Clone, Debug)]
pub struct DelayTables {
    map: BTreeMap<u64, DelayTable>,
}

impl DelayTables {
    /// Builds one table per distinct node service rate in the topology.
    pub fn build(topology: &Topology, task_set: &TaskSet) -> DelayTables {
        let mut map = BTreeMap::new();
        for node in topology.nodes() {
            map.entry(node.service_rate_bps.to_bits())
                .or_insert_with(|| {
                    build_lookup_table(task_set, node.service_rate_bps, topology.packet_size_bits())
                });
        }
        DelayTables { map }
    }

    pub fn get(&self, service_rate_bps: f64) -> Result<&DelayTable, DelayError> {
        self.map
            .get(&service_rate_bps.to_bits())
            .ok_or(DelayError::MissingTable { service_rate_bps })
    }

    /// Tables in ascending service rate order.
    pub fn iter(&self) -> impl Iterator<Item = &DelayTable> {
        self.map.values()
    }
}

/// Traffic arriving at each node's output port, bits per second.
///
/// A task's flow loads every node on its path whose port forwards the flow:
/// the source, the access interface and each relay up to and including a
/// fixed destination's host. A vehicular destination terminates the flow, so
/// the vehicle itself is not loaded. Nodes without traffic are absent.
pub fn node_arrivals(
    topology: &Topology,
    task_set: &TaskSet,
    targets: &[NodeId],
) -> Result<BTreeMap<NodeId, f64>, DelayError> {
    if targets.len() != task_set.len() {
        return Err(DelayError::Topology(TopologyError::Invalid(
            "allocation length differs from task count".into(),
        )));
    }
    let mut loads: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (task, &dest) in task_set.tasks().iter().zip(targets) {
        let source = source_for(topology, task.id.0);
        let path = topology.route(source, dest)?;
        let terminal_is_vehicle =
            matches!(topology.processor_at(dest), Some(p) if p.tier == Tier::Vn);
        let loaded = if terminal_is_vehicle {
            &path[..path.len() - 1]
        } else {
            &path[..]
        };
        for &n in loaded {
            *loads.entry(n).or_insert(0.0) += task.data_rate_bps;
        }
    }
    Ok(loads)
}

/// Source node feeding task `task_index`, assigned round-robin.
pub fn source_for(topology: &Topology, task_index: usize) -> NodeId {
    let sources = topology.sources();
    sources[task_index % sources.len()]
}

/// End-to-end propagation delay in seconds along `path`.
///
/// The hop out of the source is not counted. Each remaining hop contributes
/// distance over medium speed; a destination processor sited away from its
/// host adds its offset at fibre speed.
pub fn propagation_delay(topology: &Topology, path: &[NodeId]) -> Result<f64, TopologyError> {
    if path.len() < 2 {
        return Err(TopologyError::Invalid(
            "path needs at least two nodes".into(),
        ));
    }
    let mut total = 0.0;
    for w in path[1..].windows(2) {
        let link = topology
            .link_between(w[0], w[1])
            .ok_or_else(|| TopologyError::Invalid("path hop without a link".into()))?;
        total += link.distance_m / link.medium.speed_m_s();
    }
    let dest = *path.last().expect("non-empty path");
    let proc_ = topology
        .processor_at(dest)
        .ok_or(TopologyError::NotAProcessor(dest.0))?;
    total += proc_.offset_m / crate::topology::Medium::Fibre.speed_m_s();
    Ok(total)
}

/// Queuing delay of one task set under an allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct QueueingDelays {
    /// Per-task sojourn sums, seconds, in task order.
    pub per_task_s: Vec<f64>,
    /// Sum over tasks, seconds.
    pub total_s: f64,
}

/// Sums the tabulated sojourn time over each task's charged nodes.
pub fn queuing_delay(
    topology: &Topology,
    task_set: &TaskSet,
    targets: &[NodeId],
    tables: &DelayTables,
) -> Result<QueueingDelays, DelayError> {
    let loads = node_arrivals(topology, task_set, targets)?;
    let mut per_task_s = Vec::with_capacity(task_set.len());
    let mut total_s = 0.0;
    for (task, &dest) in task_set.tasks().iter().zip(targets) {
        let source = source_for(topology, task.id.0);
        let path = topology.route(source, dest)?;
        let mut task_delay = 0.0;
        for &n in topology.charged_nodes(&path) {
            let node = topology.node(n)?;
            let arrival = *loads.get(&n).expect("charged node carries traffic");
            task_delay += tables.get(node.service_rate_bps)?.delay_s(arrival)?;
        }
        per_task_s.push(task_delay);
        total_s += task_delay;
    }
    Ok(QueueingDelays {
        per_task_s,
        total_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{default_architecture, PACKET_SIZE_BITS};
    use crate::workload::{default_sweep, TaskSet};

    fn pkts(bps: f64) -> f64 {
        bits_to_packets(bps, PACKET_SIZE_BITS)
    }

    #[test]
    fn sojourn_time_anchors() {
        assert_eq!(
            mm1_delay(pkts(300e6), pkts(10e9)).unwrap(),
            1.2371134020618555e-06
        );
        assert_eq!(
            mm1_delay(pkts(300e6), pkts(1e9)).unwrap(),
            1.7142857142857145e-05
        );
        assert_eq!(
            mm1_delay(pkts(100e6), pkts(1e9)).unwrap(),
            1.3333333333333333e-05
        );
        assert_eq!(mm1_delay(0.0, pkts(1e9)).unwrap(), 1.2e-05);
        assert!(mm1_delay(pkts(1e9), pkts(1e9)).is_err());
        assert!(mm1_delay(pkts(2e9), pkts(1e9)).is_err());
    }

    #[test]
    fn uniform_table_rows_are_rate_multiples() {
        let ts = TaskSet::new(&[700.0; 10], 0.1).unwrap();
        let table = build_lookup_table(&ts, 1e9, PACKET_SIZE_BITS);
        assert_eq!(table.rows().len(), 11);
        for (k, row) in table.rows().iter().enumerate() {
            assert_eq!(row.arrival_bps, 70e6 * k as f64);
            assert!(row.delay_s.is_some());
        }
        assert_eq!(
            table.delay_s(140e6).unwrap(),
            mm1_delay(pkts(140e6), pkts(1e9)).unwrap()
        );
    }

    #[test]
    fn saturated_rows_are_marked_unstable() {
        let ts = TaskSet::new(&[1000.0; 10], 0.1).unwrap();
        let table = build_lookup_table(&ts, 1e9, PACKET_SIZE_BITS);
        assert_eq!(table.rows().len(), 11);
        assert!(table.rows().last().unwrap().delay_s.is_none());
        assert!(matches!(table.delay_s(1e9), Err(DelayError::Unstable(_))));
        assert!(matches!(
            table.delay_s(123.456e6),
            Err(DelayError::TableGap { .. })
        ));
    }

    #[test]
    fn heterogeneous_grid_holds_all_subset_sums() {
        let ts = TaskSet::new(&[100.0, 200.0, 300.0], 0.1).unwrap();
        let table = build_lookup_table(&ts, 1e9, PACKET_SIZE_BITS);
        let arrivals: Vec<f64> = table.rows().iter().map(|r| r.arrival_bps).collect();
        assert_eq!(arrivals, [0.0, 10e6, 20e6, 30e6, 40e6, 50e6, 60e6]);
    }

    #[test]
    fn propagation_anchors() {
        let t = default_architecture(8, 1e9);
        let sn1 = t.node_by_name("sn1").unwrap();
        let vn1 = t.node_by_name("vn1").unwrap();
        let path = t.route(sn1, vn1).unwrap();
        assert_eq!(
            propagation_delay(&t, &path).unwrap(),
            3.3356460479265624e-07
        );

        let onu = t.node_by_name("onu").unwrap();
        let path = t.route(sn1, onu).unwrap();
        assert_eq!(propagation_delay(&t, &path).unwrap(), 5.003469071889844e-07);

        let olt = t.node_by_name("olt").unwrap();
        let path = t.route(sn1, olt).unwrap();
        assert_eq!(propagation_delay(&t, &path).unwrap(), 5.053503762608742e-05);

        let wireless_us = 3.3356460479265624e-07;
        let wired_us = 5.003469071889844e-07;
        assert_eq!(wired_us / wireless_us, 1.5);
    }

    #[test]
    fn offsets_extend_the_fibre_run() {
        let t = default_architecture(8, 1e9);
        let sn1 = t.node_by_name("sn1").unwrap();
        let mr = t.node_by_name("metro_router").unwrap();
        let path = t.route(sn1, mr).unwrap();
        assert_eq!(propagation_delay(&t, &path).unwrap(), 8.556432459838822e-05);

        let cs = t.node_by_name("core_switch").unwrap();
        let path = t.route(sn1, cs).unwrap();
        assert_eq!(propagation_delay(&t, &path).unwrap(), 0.0015766031114906336);
    }

    #[test]
    fn node_arrivals_split_by_destination_arm() {
        let t = default_architecture(8, 1e9);
        let ts = &default_sweep()[6];
        assert_eq!(ts.tasks()[0].demand_mips, 700.0);
        let onu = t.node_by_name("onu").unwrap();
        let vn1 = t.node_by_name("vn1").unwrap();
        let vn2 = t.node_by_name("vn2").unwrap();
        let mut targets = vec![onu; 8];
        targets.push(vn1);
        targets.push(vn2);
        let loads = node_arrivals(&t, ts, &targets).unwrap();
        assert_eq!(loads[&t.ap_wired()], 560e6);
        assert_eq!(loads[&t.ap_wireless()], 140e6);
        assert_eq!(loads[&onu], 560e6);
        assert!(!loads.contains_key(&vn1));
        let sn1 = t.node_by_name("sn1").unwrap();
        assert_eq!(loads[&sn1], 70e6);
        let olt = t.node_by_name("olt").unwrap();
        assert!(!loads.contains_key(&olt));
    }

    #[test]
    fn queuing_delay_charges_the_right_queues() {
        let t = default_architecture(8, 1e9);
        let ts = &default_sweep()[2];
        assert_eq!(ts.total_traffic_bps(), 300e6);
        let onu = t.node_by_name("onu").unwrap();
        let tables = DelayTables::build(&t, ts);
        let targets = vec![onu; 10];
        let q = queuing_delay(&t, ts, &targets, &tables).unwrap();
        let per_node = mm1_delay(pkts(300e6), pkts(10e9)).unwrap();
        for d in &q.per_task_s {
            assert_eq!(*d, per_node + per_node);
        }
        assert_eq!(q.total_s, q.per_task_s.iter().sum::<f64>());

        let vn1 = t.node_by_name("vn1").unwrap();
        let targets = vec![vn1; 10];
        let q = queuing_delay(&t, ts, &targets, &tables).unwrap();
        let wireless = mm1_delay(pkts(300e6), pkts(1e9)).unwrap();
        assert_eq!(q.per_task_s[0], wireless);
        assert_eq!(q.total_s, 10.0 * wireless);
    }

    #[test]
    fn lookup_accepts_tiny_rounding_drift() {
        let ts = TaskSet::new(&[123.0, 456.0, 789.0], 0.1).unwrap();
        let table = build_lookup_table(&ts, 10e9, PACKET_SIZE_BITS);
        let exact: f64 = ts.tasks().iter().map(|t| t.data_rate_bps).sum();
        let drifted = exact * (1.0 + 1e-12);
        assert_ne!(exact.to_bits(), drifted.to_bits());
        assert_eq!(
            table.delay_s(drifted).unwrap(),
            table.delay_s(exact).unwrap()
        );
    }
}
