//! Exact solvers for the weighted allocation objective.
//!
//! An allocation assigns every task to a processor host. Its cost is
//! `alpha * power + beta * propagation + gamma * queuing`, with power in
//! watts and both delay totals in seconds summed over tasks. Two solvers
//! compute the exact minimum: an exhaustive enumeration and a depth-first
//! branch and bound that must agree with it. Ties between allocations are
//! broken lexicographically over host ordinals (vehicles first, then
//! neighbour fog, local fog, metro fog, central cloud), so results are
//! reproducible down to the chosen vector.
//!
//! The weight calibration balances the objective terms at a reference
//! workload by fixed-point iteration on the weight ratios.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::delay::{
    bits_to_packets, mm1_delay, propagation_delay, queuing_delay, source_for, DelayError,
    DelayTables,
};
use crate::power::{feasible, total_power, PowerBreakdown, PowerError, PowerParams, Violation};
use crate::topology::{NodeId, Tier, Topology, TopologyError};
use crate::workload::TaskSet;

/// Objective weights; inactive terms carry weight zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ObjectiveWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        ObjectiveWeights { alpha, beta, gamma }
    }

    pub fn power_only() -> Self {
        ObjectiveWeights::new(1.0, 0.0, 0.0)
    }

    pub fn prop_only() -> Self {
        ObjectiveWeights::new(0.0, 1.0, 0.0)
    }

    pub fn queue_only() -> Self {
        ObjectiveWeights::new(0.0, 0.0, 1.0)
    }
}

/// Which objective terms a study minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveCase {
    Power,
    Prop,
    Queue,
    PowerProp,
    PowerQueue,
    All,
}

impl ObjectiveCase {
    pub const ALL_CASES: [ObjectiveCase; 6] = [
        ObjectiveCase::Power,
        ObjectiveCase::Prop,
        ObjectiveCase::Queue,
        ObjectiveCase::PowerProp,
        ObjectiveCase::PowerQueue,
        ObjectiveCase::All,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ObjectiveCase::Power => "power",
            ObjectiveCase::Prop => "prop",
            ObjectiveCase::Queue => "queue",
            ObjectiveCase::PowerProp => "power+prop",
            ObjectiveCase::PowerQueue => "power+queue",
            ObjectiveCase::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<ObjectiveCase> {
        Self::ALL_CASES.into_iter().find(|c| c.label() == s)
    }

    pub fn uses_power(self) -> bool {
        !matches!(self, ObjectiveCase::Prop | ObjectiveCase::Queue)
    }

    pub fn uses_prop(self) -> bool {
        matches!(
            self,
            ObjectiveCase::Prop | ObjectiveCase::PowerProp | ObjectiveCase::All
        )
    }

    pub fn uses_queue(self) -> bool {
        matches!(
            self,
            ObjectiveCase::Queue | ObjectiveCase::PowerQueue | ObjectiveCase::All
        )
    }
}

impl fmt::Display for ObjectiveCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Assignment of each task, in task order, to a processor host.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    targets: Vec<NodeId>,
}

impl Allocation {
    pub fn new(targets: Vec<NodeId>) -> Self {
        Allocation { targets }
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Tasks served per tier.
    pub fn tier_counts(&self, topology: &Topology) -> BTreeMap<Tier, usize> {
        let mut counts = BTreeMap::new();
        for &t in &self.targets {
            if let Some(p) = topology.processor_at(t) {
                *counts.entry(p.tier).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Traffic served per tier, bits per second.
    pub fn tier_traffic_bps(&self, topology: &Topology, task_set: &TaskSet) -> BTreeMap<Tier, f64> {
        let mut traffic = BTreeMap::new();
        for (task, &t) in task_set.tasks().iter().zip(&self.targets) {
            if let Some(p) = topology.processor_at(t) {
                *traffic.entry(p.tier).or_insert(0.0) += task.data_rate_bps;
            }
        }
        traffic
    }
}

/// An evaluated allocation with its cost terms.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub weights: ObjectiveWeights,
    pub power: PowerBreakdown,
    /// Propagation delay summed over tasks, seconds.
    pub prop_total_s: f64,
    /// Queuing delay summed over tasks, seconds.
    pub queue_total_s: f64,
    pub per_task_prop_s: Vec<f64>,
    pub per_task_queue_s: Vec<f64>,
    pub objective: f64,
}

/// Solver failure.
#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    /// The given allocation violates capacities or stability.
    Infeasible(Vec<Violation>),
    /// No allocation satisfies capacities and stability.
    NoFeasibleAllocation,
    Delay(DelayError),
    Power(PowerError),
    Topology(TopologyError),
    BadInput(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Infeasible(v) => {
                write!(
                    f,
                    "infeasible allocation: {}",
                    crate::power::describe_violations(v)
                )
            }
            SolveError::NoFeasibleAllocation => write!(f, "no feasible allocation exists"),
            SolveError::Delay(e) => e.fmt(f),
            SolveError::Power(e) => e.fmt(f),
            SolveError::Topology(e) => e.fmt(f),
            SolveError::BadInput(msg) => write!(f, "bad input: {msg}"),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<DelayError> for SolveError {
    fn from(e: DelayError) -> Self {
        SolveError::Delay(e)
    }
}

impl From<PowerError> for SolveError {
    fn from(e: PowerError) -> Self {
        SolveError::Power(e)
    }
}

impl From<TopologyError> for SolveError {
    fn from(e: TopologyError) -> Self {
        SolveError::Topology(e)
    }
}

struct HostInfo {
    node: NodeId,
    tier: Tier,
    /// Propagation delay from any source, seconds.
    prop_s: f64,
    /// Nodes whose queues a flow to this host occupies, in path order.
    charged: Vec<NodeId>,
    /// Service rates of the charged nodes, packets per second.
    charged_mu_pkts: Vec<f64>,
    /// Sum of `pue * energy_per_bit` over all loaded path nodes.
    net_epb_sum: f64,
}

/// Prepared evaluation state for one topology, task set and parameter set.
pub struct EvalContext<'a> {
    topology: &'a Topology,
    task_set: &'a TaskSet,
    params: &'a PowerParams,
    tables: DelayTables,
    hosts: Vec<HostInfo>,
    /// Host ordinal by node id, for lexicographic comparison.
    ordinal: BTreeMap<NodeId, usize>,
}

impl<'a> EvalContext<'a> {
    pub fn new(
        topology: &'a Topology,
        task_set: &'a TaskSet,
        params: &'a PowerParams,
    ) -> Result<Self, SolveError> {
        let tables = DelayTables::build(topology, task_set);
        let probe_source = *topology
            .sources()
            .first()
            .ok_or_else(|| SolveError::BadInput("topology has no sources".into()))?;
        let mut hosts = Vec::new();
        let mut ordinal = BTreeMap::new();
        for &h in topology.processor_hosts() {
            let tier = topology.processor_at(h).expect("host has processor").tier;
            let path = topology.route(probe_source, h)?;
            let prop_s = propagation_delay(topology, &path)?;
            let charged: Vec<NodeId> = topology.charged_nodes(&path).to_vec();
            let charged_mu_pkts = charged
                .iter()
                .map(|&n| {
                    bits_to_packets(
                        topology.node(n).expect("charged node").service_rate_bps,
                        topology.packet_size_bits(),
                    )
                })
                .collect();
            let loaded = if tier == Tier::Vn {
                &path[..path.len() - 1]
            } else {
                &path[..]
            };
            let net_epb_sum = loaded
                .iter()
                .map(|&n| {
                    let p = params.net_for(topology.node(n).expect("path node").kind);
                    p.pue * p.energy_per_bit_w
                })
                .sum();
            ordinal.insert(h, hosts.len());
            hosts.push(HostInfo {
                node: h,
                tier,
                prop_s,
                charged,
                charged_mu_pkts,
                net_epb_sum,
            });
        }
        Ok(EvalContext {
            topology,
            task_set,
            params,
            tables,
            hosts,
            ordinal,
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    pub fn task_set(&self) -> &TaskSet {
        self.task_set
    }

    pub fn tables(&self) -> &DelayTables {
        &self.tables
    }

    fn host(&self, ord: usize) -> &HostInfo {
        &self.hosts[ord]
    }

    fn ordinal_of(&self, node: NodeId) -> Option<usize> {
        self.ordinal.get(&node).copied()
    }

    /// Full evaluation of a concrete allocation.
    pub fn evaluate(
        &self,
        targets: &[NodeId],
        weights: ObjectiveWeights,
    ) -> Result<SolveResult, SolveError> {
        let violations = feasible(self.topology, self.task_set, targets, self.params);
        if !violations.is_empty() {
            return Err(SolveError::Infeasible(violations));
        }
        let power = total_power(self.topology, self.task_set, targets, self.params)?;
        let queues = queuing_delay(self.topology, self.task_set, targets, &self.tables)?;
        let mut per_task_prop_s = Vec::with_capacity(targets.len());
        let mut prop_total_s = 0.0;
        for &t in targets {
            let ord = self
                .ordinal_of(t)
                .ok_or_else(|| SolveError::BadInput(format!("target {t} hosts no processor")))?;
            let p = self.host(ord).prop_s;
            per_task_prop_s.push(p);
            prop_total_s += p;
        }
        let objective = weights.alpha * power.total_w
            + weights.beta * prop_total_s
            + weights.gamma * queues.total_s;
        Ok(SolveResult {
            allocation: Allocation::new(targets.to_vec()),
            weights,
            power,
            prop_total_s,
            queue_total_s: queues.total_s,
            per_task_prop_s,
            per_task_queue_s: queues.per_task_s,
            objective,
        })
    }

    fn ordinals_for(&self, targets: &[NodeId]) -> Vec<usize> {
        targets
            .iter()
            .map(|t| self.ordinal_of(*t).expect("evaluated targets are hosts"))
            .collect()
    }
}

/// Evaluates one given allocation.
pub fn evaluate(
    topology: &Topology,
    task_set: &TaskSet,
    allocation: &Allocation,
    params: &PowerParams,
    weights: ObjectiveWeights,
) -> Result<SolveResult, SolveError> {
    EvalContext::new(topology, task_set, params)?.evaluate(allocation.targets(), weights)
}

type Incumbent = Option<(f64, Vec<usize>, SolveResult)>;

fn better(objective: f64, ordinals: &[usize], incumbent: &Incumbent) -> bool {
    match incumbent {
        None => true,
        Some((best_obj, best_ord, _)) => {
            objective < *best_obj || (objective == *best_obj && ordinals < best_ord.as_slice())
        }
    }
}

fn consider_candidate(
    ctx: &EvalContext,
    weights: ObjectiveWeights,
    best: &mut Incumbent,
    targets: &[NodeId],
) -> Result<(), SolveError> {
    match ctx.evaluate(targets, weights) {
        Ok(result) => {
            let ords = ctx.ordinals_for(targets);
            if better(result.objective, &ords, best) {
                let obj = result.objective;
                *best = Some((obj, ords, result));
            }
            Ok(())
        }
        Err(SolveError::Infeasible(_)) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Hosts of the vehicular tier, flagged interchangeable when every vehicle
/// looks the same from the network's point of view.
struct VehiclePool {
    ordinals: Vec<usize>,
    interchangeable: bool,
}

fn vehicle_pool(ctx: &EvalContext) -> VehiclePool {
    let ordinals: Vec<usize> = ctx
        .hosts
        .iter()
        .enumerate()
        .filter(|(_, h)| h.tier == Tier::Vn)
        .map(|(i, _)| i)
        .collect();
    let interchangeable = ordinals.windows(2).all(|w| {
        let (a, b) = (ctx.host(w[0]), ctx.host(w[1]));
        a.prop_s == b.prop_s && a.charged == b.charged && a.net_epb_sum == b.net_epb_sum
    });
    VehiclePool {
        ordinals,
        interchangeable,
    }
}

fn fixed_ordinals(ctx: &EvalContext) -> Vec<usize> {
    ctx.hosts
        .iter()
        .enumerate()
        .filter(|(_, h)| h.tier != Tier::Vn)
        .map(|(i, _)| i)
        .collect()
}

/// Exhaustive minimization over all allocations.
///
/// Uniform task sets reduce to counting how many tasks each tier serves,
/// with vehicle tasks packed onto as few vehicles as possible; other task
/// sets enumerate assignment vectors with interchangeable vehicles used in
/// first-appearance order.
pub fn solve_exhaustive(
    topology: &Topology,
    task_set: &TaskSet,
    params: &PowerParams,
    weights: ObjectiveWeights,
) -> Result<SolveResult, SolveError> {
    let ctx = EvalContext::new(topology, task_set, params)?;
    let pool = vehicle_pool(&ctx);
    let fixed = fixed_ordinals(&ctx);
    let mut best: Incumbent = None;

    if task_set.is_uniform() && pool.interchangeable {
        let n = task_set.len();
        let demand = task_set
            .tasks()
            .first()
            .map(|t| t.demand_mips)
            .unwrap_or(0.0);
        let rate = task_set
            .tasks()
            .first()
            .map(|t| t.data_rate_bps)
            .unwrap_or(0.0);
        let per_vehicle = vehicle_slot_capacity(params, demand, rate);
        for counts in tier_count_compositions(n, fixed.len()) {
            let n_vn = counts[0];
            if n_vn > 0 {
                if per_vehicle == 0 {
                    continue;
                }
                if n_vn.div_ceil(per_vehicle) > pool.ordinals.len() {
                    continue;
                }
            }
            let mut targets = Vec::with_capacity(n);
            for j in 0..n_vn {
                targets.push(ctx.host(pool.ordinals[j / per_vehicle]).node);
            }
            for (slot, &count) in counts[1..].iter().enumerate() {
                for _ in 0..count {
                    targets.push(ctx.host(fixed[slot]).node);
                }
            }
            consider_candidate(&ctx, weights, &mut best, &targets)?;
        }
    } else {
        let mut targets: Vec<NodeId> = Vec::with_capacity(task_set.len());
        enumerate_vectors(&ctx, &pool, &fixed, &mut targets, 0, &mut |ctx, targets| {
            consider_candidate(ctx, weights, &mut best, targets)
        })?;
    }

    best.map(|(_, _, r)| r)
        .ok_or(SolveError::NoFeasibleAllocation)
}

/// Tasks one vehicle can hold given uniform demand and rate.
fn vehicle_slot_capacity(params: &PowerParams, demand_mips: f64, rate_bps: f64) -> usize {
    if demand_mips <= 0.0 || rate_bps <= 0.0 {
        return usize::MAX;
    }
    let by_mips = params.vn.capacity_mips / demand_mips;
    let by_rate = params.vn.ingress_cap_bps / rate_bps;
    let cap = if by_mips < by_rate { by_mips } else { by_rate };
    if cap < 0.0 {
        0
    } else if cap >= usize::MAX as f64 {
        usize::MAX
    } else {
        cap as usize
    }
}

/// All ways to spread `n` uniform tasks over the vehicle pool and each fixed
/// host, as counts `[vehicles, fixed_0, fixed_1, ...]`.
fn tier_count_compositions(n: usize, n_fixed: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; n_fixed + 1];
    fill_compositions(n, 0, &mut counts, &mut out);
    out
}

fn fill_compositions(rest: usize, slot: usize, counts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slot + 1 == counts.len() {
        counts[slot] = rest;
        out.push(counts.clone());
        counts[slot] = 0;
        return;
    }
    for take in 0..=rest {
        counts[slot] = take;
        fill_compositions(rest - take, slot + 1, counts, out);
    }
    counts[slot] = 0;
}

/// Depth-first enumeration of task-to-host vectors, restricting
/// interchangeable vehicles to first-appearance order.
fn enumerate_vectors<F>(
    ctx: &EvalContext,
    pool: &VehiclePool,
    fixed: &[usize],
    targets: &mut Vec<NodeId>,
    used_vehicles: usize,
    consider: &mut F,
) -> Result<(), SolveError>
where
    F: FnMut(&EvalContext, &[NodeId]) -> Result<(), SolveError>,
{
    if targets.len() == ctx.task_set.len() {
        return consider(ctx, targets);
    }
    let vehicle_choices: &[usize] = if pool.interchangeable {
        &pool.ordinals[..(used_vehicles + 1).min(pool.ordinals.len())]
    } else {
        &pool.ordinals
    };
    for (idx, &v) in vehicle_choices.iter().enumerate() {
        let next_used = if pool.interchangeable && idx == used_vehicles {
            used_vehicles + 1
        } else {
            used_vehicles
        };
        targets.push(ctx.host(v).node);
        enumerate_vectors(ctx, pool, fixed, targets, next_used, consider)?;
        targets.pop();
    }
    for &slot in fixed {
        targets.push(ctx.host(slot).node);
        enumerate_vectors(ctx, pool, fixed, targets, used_vehicles, consider)?;
        targets.pop();
    }
    Ok(())
}

/// Branch and bound equivalent of [`solve_exhaustive`].
///
/// Tasks are assigned in order, hosts tried in ordinal order, and a branch
/// is cut when an optimistic completion bound cannot beat the incumbent.
/// The bound charges each unassigned task the cheapest host it could still
/// take: marginal processing energy, marginal transport energy, propagation,
/// and queuing at current loads plus the task's own rate. All of those only
/// grow as the branch deepens, so the first incumbent reached at the optimal
/// value is also the lexicographically smallest optimal vector.
///
/// Uniform task sets with interchangeable vehicles branch only over the
/// canonical vectors [`solve_exhaustive`] counts: vehicle tasks first,
/// packed onto as few vehicles as possible, then fixed hosts grouped in
/// ordinal order. Reordering equal tasks or respreading them over the same
/// number of vehicles never changes the cost, so the restriction keeps the
/// two solvers on one candidate set.
pub fn solve_bnb(
    topology: &Topology,
    task_set: &TaskSet,
    params: &PowerParams,
    weights: ObjectiveWeights,
) -> Result<SolveResult, SolveError> {
    let ctx = EvalContext::new(topology, task_set, params)?;
    let pool = vehicle_pool(&ctx);
    let fixed = fixed_ordinals(&ctx);
    let canonical = if task_set.is_uniform() && pool.interchangeable {
        let demand = task_set
            .tasks()
            .first()
            .map(|t| t.demand_mips)
            .unwrap_or(0.0);
        let rate = task_set
            .tasks()
            .first()
            .map(|t| t.data_rate_bps)
            .unwrap_or(0.0);
        Some(vehicle_slot_capacity(params, demand, rate))
    } else {
        None
    };
    let mut state = BnbState {
        lam_bps: vec![0.0; ctx.topology.nodes().len()],
        mips_host: vec![0.0; ctx.hosts.len()],
        rate_host: vec![0.0; ctx.hosts.len()],
        used_vehicles: 0,
        targets: Vec::with_capacity(task_set.len()),
        best: None,
    };
    branch(&ctx, &pool, &fixed, weights, canonical, &mut state)?;
    state
        .best
        .map(|(_, _, r)| r)
        .ok_or(SolveError::NoFeasibleAllocation)
}

struct BnbState {
    lam_bps: Vec<f64>,
    mips_host: Vec<f64>,
    rate_host: Vec<f64>,
    used_vehicles: usize,
    targets: Vec<NodeId>,
    best: Incumbent,
}

fn branch(
    ctx: &EvalContext,
    pool: &VehiclePool,
    fixed: &[usize],
    weights: ObjectiveWeights,
    canonical: Option<usize>,
    state: &mut BnbState,
) -> Result<(), SolveError> {
    let depth = state.targets.len();
    if depth == ctx.task_set.len() {
        let targets = state.targets.clone();
        return consider_candidate(ctx, weights, &mut state.best, &targets);
    }

    let candidates = match canonical {
        Some(per_vehicle) => canonical_candidates(ctx, pool, fixed, &state.targets, per_vehicle),
        None => candidate_hosts(pool, fixed, state.used_vehicles),
    };
    let task = ctx.task_set.tasks()[depth];
    for ord in candidates {
        if !fits(ctx, state, ord, task.demand_mips, task.data_rate_bps) {
            continue;
        }
        let saved_lam = state.lam_bps.clone();
        let saved_mips = state.mips_host.clone();
        let saved_rate = state.rate_host.clone();
        let saved_used = state.used_vehicles;
        apply(ctx, state, ord, depth);
        let prune = match state.best.as_ref() {
            None => false,
            Some((best_obj, _, _)) => match completion_bound(ctx, weights, state, depth + 1) {
                Some(lower) => lower >= *best_obj,
                None => true,
            },
        };
        if !prune {
            branch(ctx, pool, fixed, weights, canonical, state)?;
        }
        state.targets.pop();
        state.lam_bps = saved_lam;
        state.mips_host = saved_mips;
        state.rate_host = saved_rate;
        state.used_vehicles = saved_used;
    }
    Ok(())
}

fn candidate_hosts(pool: &VehiclePool, fixed: &[usize], used_vehicles: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(pool.ordinals.len() + fixed.len());
    if pool.interchangeable {
        out.extend_from_slice(&pool.ordinals[..(used_vehicles + 1).min(pool.ordinals.len())]);
    } else {
        out.extend_from_slice(&pool.ordinals);
    }
    out.extend_from_slice(fixed);
    out
}

/// Hosts that extend a partial vector while keeping it canonical: the one
/// vehicle the greedy fill is on, or fixed hosts at or past the last one
/// used. Once a fixed host appears no vehicle can follow.
fn canonical_candidates(
    ctx: &EvalContext,
    pool: &VehiclePool,
    fixed: &[usize],
    targets: &[NodeId],
    per_vehicle: usize,
) -> Vec<usize> {
    let last_fixed_slot = targets.last().and_then(|&t| {
        let ord = ctx.ordinal_of(t).expect("assigned target is a host");
        fixed.iter().position(|&f| f == ord)
    });
    let mut out = Vec::with_capacity(fixed.len() + 1);
    match last_fixed_slot {
        None => {
            if per_vehicle > 0 {
                let next = targets.len() / per_vehicle;
                if next < pool.ordinals.len() {
                    out.push(pool.ordinals[next]);
                }
            }
            out.extend_from_slice(fixed);
        }
        Some(slot) => out.extend_from_slice(&fixed[slot..]),
    }
    out
}

fn fits(ctx: &EvalContext, state: &BnbState, ord: usize, demand_mips: f64, rate_bps: f64) -> bool {
    let host = ctx.host(ord);
    match ctx.params.fixed_for(host.tier) {
        Some(p) => {
            if state.mips_host[ord] + demand_mips > p.capacity_mips {
                return false;
            }
        }
        None => {
            if state.mips_host[ord] + demand_mips > ctx.params.vn.capacity_mips {
                return false;
            }
            if state.rate_host[ord] + rate_bps > ctx.params.vn.ingress_cap_bps {
                return false;
            }
        }
    }
    let pkt = ctx.topology.packet_size_bits();
    for (i, &n) in host.charged.iter().enumerate() {
        if bits_to_packets(state.lam_bps[n.0] + rate_bps, pkt) >= host.charged_mu_pkts[i] {
            return false;
        }
    }
    true
}

fn apply(ctx: &EvalContext, state: &mut BnbState, ord: usize, depth: usize) {
    let host = ctx.host(ord);
    let task = ctx.task_set.tasks()[depth];
    if host.tier == Tier::Vn && state.mips_host[ord] == 0.0 {
        state.used_vehicles += 1;
    }
    state.mips_host[ord] += task.demand_mips;
    state.rate_host[ord] += task.data_rate_bps;
    let source = source_for(ctx.topology, depth);
    let path = ctx
        .topology
        .route(source, host.node)
        .expect("host routes were validated at context build");
    let loaded = if host.tier == Tier::Vn {
        &path[..path.len() - 1]
    } else {
        &path[..]
    };
    for &n in loaded {
        state.lam_bps[n.0] += task.data_rate_bps;
    }
    state.targets.push(host.node);
}

/// Objective of the partial assignment plus an optimistic completion cost.
///
/// Returns `None` when some unassigned task has no host left, in which case
/// the branch is dead.
fn completion_bound(
    ctx: &EvalContext,
    weights: ObjectiveWeights,
    state: &BnbState,
    assigned: usize,
) -> Option<f64> {
    let params = ctx.params;
    let pkt = ctx.topology.packet_size_bits();
    let mut bound = 0.0;

    if weights.alpha != 0.0 {
        let mut power = 0.0;
        for (ord, host) in ctx.hosts.iter().enumerate() {
            let m = state.mips_host[ord];
            if m <= 0.0 {
                continue;
            }
            match params.fixed_for(host.tier) {
                Some(p) => power += p.pue * (p.idle_w + p.energy_per_mips_w * m),
                None => power += params.vn.adapter_w + params.vn.energy_per_mips_w * m,
            }
        }
        for (i, node) in ctx.topology.nodes().iter().enumerate() {
            let lam = state.lam_bps[i];
            if lam <= 0.0 {
                continue;
            }
            let p = params.net_for(node.kind);
            if p.pue == 0.0 && p.idle_w == 0.0 && p.energy_per_bit_w == 0.0 {
                continue;
            }
            power += p.pue * (p.idle_w + p.energy_per_bit_w * lam);
        }
        bound += weights.alpha * power;
    }

    for &target in &state.targets {
        let ord = ctx.ordinal_of(target).expect("assigned target is a host");
        let host = ctx.host(ord);
        if weights.beta != 0.0 {
            bound += weights.beta * host.prop_s;
        }
        if weights.gamma != 0.0 {
            for (k, &n) in host.charged.iter().enumerate() {
                match mm1_delay(
                    bits_to_packets(state.lam_bps[n.0], pkt),
                    host.charged_mu_pkts[k],
                ) {
                    Ok(d) => bound += weights.gamma * d,
                    Err(_) => return None,
                }
            }
        }
    }

    for task in &ctx.task_set.tasks()[assigned..] {
        let mut cheapest: Option<f64> = None;
        for (ord, host) in ctx.hosts.iter().enumerate() {
            let available = match params.fixed_for(host.tier) {
                Some(p) => state.mips_host[ord] + task.demand_mips <= p.capacity_mips,
                None => {
                    state.mips_host[ord] + task.demand_mips <= params.vn.capacity_mips
                        && state.rate_host[ord] + task.data_rate_bps <= params.vn.ingress_cap_bps
                }
            };
            if !available {
                continue;
            }
            let mut inc = 0.0;
            if weights.alpha != 0.0 {
                let proc_inc = match params.fixed_for(host.tier) {
                    Some(p) => p.pue * p.energy_per_mips_w * task.demand_mips,
                    None => params.vn.energy_per_mips_w * task.demand_mips,
                };
                inc += weights.alpha * (proc_inc + host.net_epb_sum * task.data_rate_bps);
            }
            if weights.beta != 0.0 {
                inc += weights.beta * host.prop_s;
            }
            if weights.gamma != 0.0 {
                let mut q = 0.0;
                let mut stable = true;
                for (k, &n) in host.charged.iter().enumerate() {
                    let lam_pkts = bits_to_packets(state.lam_bps[n.0] + task.data_rate_bps, pkt);
                    match mm1_delay(lam_pkts, host.charged_mu_pkts[k]) {
                        Ok(d) => q += d,
                        Err(_) => {
                            stable = false;
                            break;
                        }
                    }
                }
                if !stable {
                    continue;
                }
                inc += weights.gamma * q;
            }
            cheapest = match cheapest {
                Some(c) if c <= inc => Some(c),
                _ => Some(inc),
            };
        }
        match cheapest {
            Some(c) => bound += c,
            None => return None,
        }
    }
    Some(bound)
}

/// Which weight ratios the calibration balances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibrationMode {
    PowerProp,
    PowerQueue,
    All,
}

/// Calibration loop controls.
#[derive(Clone, Copy, Debug)]
pub struct CalibrationOptions {
    /// Relative imbalance accepted between weighted terms.
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tolerance: 0.05,
            max_iterations: 20,
        }
    }
}

/// A converged weight set.
#[derive(Clone, Copy, Debug)]
pub struct Calibration {
    pub weights: ObjectiveWeights,
    pub iterations: u32,
}

/// Calibration failure.
#[derive(Clone, Debug)]
pub enum CalibrationError {
    /// The loop hit its iteration cap; the last weights are reported.
    NonConvergence {
        last: ObjectiveWeights,
        iterations: u32,
    },
    /// A reference term was zero, leaving nothing to balance.
    Degenerate(String),
    Solve(SolveError),
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::NonConvergence { last, iterations } => write!(
                f,
                "calibration did not converge after {iterations} iterations; \
                 last weights alpha={} beta={} gamma={}",
                last.alpha, last.beta, last.gamma
            ),
            CalibrationError::Degenerate(msg) => write!(f, "degenerate calibration: {msg}"),
            CalibrationError::Solve(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for CalibrationError {}

impl From<SolveError> for CalibrationError {
    fn from(e: SolveError) -> Self {
        CalibrationError::Solve(e)
    }
}

/// Balances the weighted objective terms at the sweep's middle point.
///
/// Starting from single-term optima, the loop multiplies each active weight
/// by the ratio of the weighted power term to its own weighted term until
/// every active pair agrees within the tolerance.
pub fn calibrate_weights(
    topology: &Topology,
    sweep: &[TaskSet],
    params: &PowerParams,
    mode: CalibrationMode,
    options: CalibrationOptions,
) -> Result<Calibration, CalibrationError> {
    let point = sweep
        .get(sweep.len() / 2)
        .ok_or_else(|| CalibrationError::Degenerate("empty sweep".into()))?;
    let use_prop = matches!(mode, CalibrationMode::PowerProp | CalibrationMode::All);
    let use_queue = matches!(mode, CalibrationMode::PowerQueue | CalibrationMode::All);

    let p_ref = solve_bnb(topology, point, params, ObjectiveWeights::power_only())?
        .power
        .total_w;
    if !(p_ref > 0.0) {
        return Err(CalibrationError::Degenerate(
            "reference power is zero".into(),
        ));
    }
    let mut beta = 0.0;
    if use_prop {
        let r_ref = solve_bnb(topology, point, params, ObjectiveWeights::prop_only())?.prop_total_s;
        if !(r_ref > 0.0) {
            return Err(CalibrationError::Degenerate(
                "reference propagation delay is zero".into(),
            ));
        }
        beta = p_ref / r_ref;
    }
    let mut gamma = 0.0;
    if use_queue {
        let q_ref =
            solve_bnb(topology, point, params, ObjectiveWeights::queue_only())?.queue_total_s;
        if !(q_ref > 0.0) {
            return Err(CalibrationError::Degenerate(
                "reference queuing delay is zero".into(),
            ));
        }
        gamma = p_ref / q_ref;
    }

    let mut weights = ObjectiveWeights::new(1.0, beta, gamma);
    for iteration in 1..=options.max_iterations {
        let s = solve_bnb(topology, point, params, weights)?;
        let p = weights.alpha * s.power.total_w;
        let r = weights.beta * s.prop_total_s;
        let q = weights.gamma * s.queue_total_s;
        let tol = options.tolerance * p;
        let prop_ok = !use_prop || abs(p - r) <= tol;
        let queue_ok = !use_queue || abs(p - q) <= tol;
        if prop_ok && queue_ok {
            return Ok(Calibration {
                weights,
                iterations: iteration,
            });
        }
        if use_prop && s.prop_total_s > 0.0 {
            weights.beta = p / s.prop_total_s;
        }
        if use_queue && s.queue_total_s > 0.0 {
            weights.gamma = p / s.queue_total_s;
        }
    }
    Err(CalibrationError::NonConvergence {
        last: weights,
        iterations: options.max_iterations,
    })
}

fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}
