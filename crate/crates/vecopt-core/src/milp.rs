//! Mixed-integer linear program export of the allocation model.
//!
//! The program reproduces the solvers' objective exactly. Each task may be
//! served by any processor host; a chosen host activates the flow variables
//! along the task's path, fixed processors hang off their host as an extra
//! sink arc carrying the processor offset, and vehicles terminate their flow
//! on the wireless hop. Node arrivals are the summed egress flows, and each
//! node's queuing delay is selected from the same pretabulated arrival grid
//! the solvers read, via one-hot selector binaries. Per-arc charged delays
//! are the product of the selector result and the arc activation binary,
//! linearized with big-M rows.
//!
//! Units inside the program: traffic in Mb/s, delay in seconds, power in
//! watts. Variable and row names are deterministic, so two builds of the
//! same inputs emit identical text.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::delay::{node_arrivals, source_for, DelayError, DelayTables};
use crate::optimizer::ObjectiveWeights;
use crate::power::PowerParams;
use crate::topology::{Medium, NodeId, NodeKind, Tier, Topology, TopologyError};
use crate::workload::TaskSet;

/// Big-M constants of the linearization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BigM {
    /// Strict upper bound on any flow or arrival, Mb/s.
    pub flow_mbps: f64,
    /// Strict upper bound on any tabulated node delay, milliseconds.
    pub delay_ms: f64,
}

impl Default for BigM {
    fn default() -> Self {
        BigM {
            flow_mbps: 1e4,
            delay_ms: 1e3,
        }
    }
}

/// Variable domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Continuous and non-negative.
    Continuous,
    Binary,
}

/// One decision variable.
#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// One linear constraint: `sum(terms) sense rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    /// Pairs of variable index and coefficient, in emission order.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A built program: variables, rows and the minimization objective.
#[derive(Clone, Debug, Default)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Objective terms, minimized.
    pub objective: Vec<(usize, f64)>,
    var_index: BTreeMap<String, usize>,
    row_index: BTreeMap<String, usize>,
}

/// Program construction failure.
#[derive(Clone, Debug, PartialEq)]
pub enum MilpError {
    Build(String),
    Delay(DelayError),
    Topology(TopologyError),
}

impl fmt::Display for MilpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilpError::Build(msg) => write!(f, "cannot build program: {msg}"),
            MilpError::Delay(e) => e.fmt(f),
            MilpError::Topology(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for MilpError {}

impl From<DelayError> for MilpError {
    fn from(e: DelayError) -> Self {
        MilpError::Delay(e)
    }
}

impl From<TopologyError> for MilpError {
    fn from(e: TopologyError) -> Self {
        MilpError::Topology(e)
    }
}

impl MilpModel {
    fn add_var(&mut self, name: String, kind: VarKind) -> usize {
        let idx = self.vars.len();
        let prev = self.var_index.insert(name.clone(), idx);
        debug_assert!(prev.is_none(), "duplicate variable {name}");
        self.vars.push(Variable { name, kind });
        idx
    }

    fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let idx = self.rows.len();
        let prev = self.row_index.insert(name.clone(), idx);
        debug_assert!(prev.is_none(), "duplicate row {name}");
        self.rows.push(Row {
            name,
            terms,
            sense,
            rhs,
        });
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.row_index.get(name).map(|&i| &self.rows[i])
    }

    pub fn var_name(&self, idx: usize) -> &str {
        &self.vars[idx].name
    }

    /// Number of variables of one kind.
    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.vars.iter().filter(|v| v.kind == kind).count()
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.objective
            .iter()
            .map(|&(vi, c)| c * values.get(self.var_name(vi)).copied().unwrap_or(0.0))
            .sum()
    }

    /// Verifies a full assignment against every row and every binary domain.
    ///
    /// Returns human-readable descriptions of violations; empty means the
    /// assignment satisfies the program.
    pub fn check_assignment(&self, values: &BTreeMap<String, f64>) -> Vec<String> {
        let mut out = Vec::new();
        for v in &self.vars {
            match values.get(&v.name) {
                None => out.push(format!("missing value for {}", v.name)),
                Some(&x) => {
                    if v.kind == VarKind::Binary && !(close(x, 0.0) || close(x, 1.0)) {
                        out.push(format!("{} = {x} is not binary", v.name));
                    }
                    if v.kind == VarKind::Continuous && x < -1e-9 {
                        out.push(format!("{} = {x} is negative", v.name));
                    }
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = 1.0;
            for &(vi, c) in &row.terms {
                let term = c * values[self.var_name(vi)];
                lhs += term;
                let mag = if term < 0.0 { -term } else { term };
                if mag > scale {
                    scale = mag;
                }
            }
            let tol = 1e-9 * (1.0 + scale);
            let residual = match row.sense {
                Sense::Eq => {
                    let d = lhs - row.rhs;
                    if d < 0.0 {
                        -d
                    } else {
                        d
                    }
                }
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
            };
            if residual > tol {
                out.push(format!(
                    "row {} violated: lhs {lhs} {} rhs {}",
                    row.name,
                    sense_str(row.sense),
                    row.rhs
                ));
            }
        }
        out
    }

    /// Renders the program in LP text format.
    pub fn write_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("Minimize\n");
        let mut line = String::from(" obj:");
        push_terms(&mut line, &mut out, &self.objective, self);
        out.push_str(&line);
        out.push('\n');
        out.push_str("Subject To\n");
        for row in &self.rows {
            let mut line = format!(" {}:", row.name);
            push_terms(&mut line, &mut out, &row.terms, self);
            line.push_str(&format!(" {} {}", sense_str(row.sense), row.rhs));
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            if v.kind == VarKind::Continuous {
                out.push_str(&format!(" 0 <= {}\n", v.name));
            }
        }
        out.push_str("Binary\n");
        for v in &self.vars {
            if v.kind == VarKind::Binary {
                out.push_str(&format!(" {}\n", v.name));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn close(x: f64, y: f64) -> bool {
    let d = x - y;
    (if d < 0.0 { -d } else { d }) <= 1e-9
}

fn sense_str(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

fn push_terms(line: &mut String, out: &mut String, terms: &[(usize, f64)], model: &MilpModel) {
    if terms.is_empty() {
        line.push_str(" 0");
        return;
    }
    for (k, &(vi, c)) in terms.iter().enumerate() {
        let mag = if c < 0.0 { -c } else { c };
        let piece = if k == 0 {
            if c < 0.0 {
                format!(" -{} {}", mag, model.var_name(vi))
            } else {
                format!(" {} {}", mag, model.var_name(vi))
            }
        } else if c < 0.0 {
            format!(" - {} {}", mag, model.var_name(vi))
        } else {
            format!(" + {} {}", mag, model.var_name(vi))
        };
        if line.len() + piece.len() > 220 {
            out.push_str(line);
            out.push('\n');
            line.clear();
            line.push(' ');
        }
        line.push_str(&piece);
    }
}

struct ArcVars {
    /// Tail vertex: always a real node.
    tail: NodeId,
    /// Head vertex index: a real node, or `n_nodes + host_ordinal` for the
    /// sink of a fixed processor.
    head: usize,
    dist_m: f64,
    speed_m_s: f64,
    charged: bool,
    lamf: usize,
    zeta: usize,
    qf: Option<usize>,
}

struct PairVars {
    task: usize,
    host_ord: usize,
    host: NodeId,
    assign: usize,
    arcs: Vec<ArcVars>,
}

/// A built program together with the maps needed to certify solutions.
pub struct MilpInstance {
    pub model: MilpModel,
    pairs: Vec<PairVars>,
    lam_var: Vec<usize>,
    sigma_vars: Vec<Vec<(usize, usize)>>,
    q_var: Vec<usize>,
    actp_var: Vec<usize>,
    actn_var: BTreeMap<usize, usize>,
    hosts: Vec<NodeId>,
    totals: (usize, usize, usize),
}

/// Builds the program for one topology, task set, parameter set and weight
/// vector.
pub fn build_milp(
    topology: &Topology,
    task_set: &TaskSet,
    params: &PowerParams,
    weights: ObjectiveWeights,
    big_m: BigM,
) -> Result<MilpInstance, MilpError> {
    if !(big_m.flow_mbps > 0.0) || !(big_m.delay_ms > 0.0) {
        return Err(MilpError::Build("big-M constants must be positive".into()));
    }
    let g2_s = big_m.delay_ms / 1e3;
    let total_mbps = task_set.total_traffic_bps() / 1e6;
    if total_mbps >= big_m.flow_mbps {
        return Err(MilpError::Build(format!(
            "total traffic {total_mbps} Mb/s reaches the flow bound {} Mb/s",
            big_m.flow_mbps
        )));
    }
    for task in task_set.tasks() {
        if task.data_rate_bps / 1e6 < 1.0 {
            return Err(MilpError::Build(format!(
                "task {} rate {} Mb/s is below 1 Mb/s; the arc activation lower bound needs \
                 at least 1 Mb/s per flow",
                task.id.0,
                task.data_rate_bps / 1e6
            )));
        }
    }
    let tables = DelayTables::build(topology, task_set);
    for table in tables.iter() {
        for row in table.rows() {
            if let Some(h) = row.delay_s {
                if h >= g2_s {
                    return Err(MilpError::Build(format!(
                        "tabulated delay {h} s reaches the delay bound {g2_s} s"
                    )));
                }
            }
        }
    }

    let hosts: Vec<NodeId> = topology.processor_hosts().to_vec();
    let n_nodes = topology.nodes().len();
    let n_tasks = task_set.len();
    let mut model = MilpModel::default();

    let ptotal = model.add_var("ptotal".into(), VarKind::Continuous);
    let rtotal = model.add_var("rtotal".into(), VarKind::Continuous);
    let qtotal = model.add_var("qtotal".into(), VarKind::Continuous);

    let mut assign = Vec::with_capacity(n_tasks);
    for s in 0..n_tasks {
        let mut per_host = Vec::with_capacity(hosts.len());
        for d in 0..hosts.len() {
            per_host.push(model.add_var(format!("assign_s{}_d{}", s + 1, d + 1), VarKind::Binary));
        }
        assign.push(per_host);
    }

    let mut actp_var = Vec::with_capacity(hosts.len());
    for d in 0..hosts.len() {
        actp_var.push(model.add_var(format!("actp_d{}", d + 1), VarKind::Binary));
    }

    let mut actn_var = BTreeMap::new();
    for (i, node) in topology.nodes().iter().enumerate() {
        let p = params.net_for(node.kind);
        if p.pue * p.idle_w > 0.0 {
            actn_var.insert(
                i,
                model.add_var(format!("actn_i{}", i + 1), VarKind::Binary),
            );
        }
    }

    let mut lam_var = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        lam_var.push(model.add_var(format!("lam_i{}", i + 1), VarKind::Continuous));
    }

    let mut sigma_vars: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n_nodes);
    for (i, node) in topology.nodes().iter().enumerate() {
        let table = tables.get(node.service_rate_bps)?;
        let mut per_row = Vec::new();
        for (k, row) in table.rows().iter().enumerate() {
            if row.delay_s.is_some() {
                per_row.push((
                    k,
                    model.add_var(format!("sigma_i{}_r{}", i + 1, k + 1), VarKind::Binary),
                ));
            }
        }
        sigma_vars.push(per_row);
    }

    let mut q_var = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        q_var.push(model.add_var(format!("q_i{}", i + 1), VarKind::Continuous));
    }

    let fibre = Medium::Fibre.speed_m_s();
    let mut pairs: Vec<PairVars> = Vec::with_capacity(n_tasks * hosts.len());
    for s in 0..n_tasks {
        let source = source_for(topology, s);
        for (d, &host) in hosts.iter().enumerate() {
            let path = topology.route(source, host)?;
            let tier = topology
                .processor_at(host)
                .expect("host has processor")
                .tier;
            let mut specs: Vec<(NodeId, usize, f64, f64)> = Vec::new();
            for w in path.windows(2) {
                let link = topology
                    .link_between(w[0], w[1])
                    .ok_or_else(|| MilpError::Build("path hop without a link".into()))?;
                specs.push((w[0], w[1].0, link.distance_m, link.medium.speed_m_s()));
            }
            if tier != Tier::Vn {
                let offset = topology.processor_at(host).expect("fixed host").offset_m;
                specs.push((host, n_nodes + d, offset, fibre));
            }
            let mut arcs = Vec::with_capacity(specs.len());
            for (tail, head, dist_m, speed_m_s) in specs {
                let tag = format!("s{}_d{}_i{}_j{}", s + 1, d + 1, tail.0 + 1, head + 1);
                let lamf = model.add_var(format!("lamf_{tag}"), VarKind::Continuous);
                let zeta = model.add_var(format!("zeta_{tag}"), VarKind::Binary);
                let charged = topology.node(tail).expect("tail node").kind != NodeKind::Source;
                let qf = if charged {
                    Some(model.add_var(format!("qf_{tag}"), VarKind::Continuous))
                } else {
                    None
                };
                arcs.push(ArcVars {
                    tail,
                    head,
                    dist_m,
                    speed_m_s,
                    charged,
                    lamf,
                    zeta,
                    qf,
                });
            }
            pairs.push(PairVars {
                task: s,
                host_ord: d,
                host,
                assign: assign[s][d],
                arcs,
            });
        }
    }

    for s in 0..n_tasks {
        let terms: Vec<(usize, f64)> = (0..hosts.len()).map(|d| (assign[s][d], 1.0)).collect();
        model.add_row(format!("single_s{}", s + 1), terms, Sense::Eq, 1.0);
    }

    for pair in &pairs {
        let rate_mbps = task_set.tasks()[pair.task].data_rate_bps / 1e6;
        let tag = format!("s{}_d{}", pair.task + 1, pair.host_ord + 1);
        let first = &pair.arcs[0];
        model.add_row(
            format!("flowsrc_{tag}"),
            alloc::vec![(first.lamf, 1.0), (pair.assign, -rate_mbps)],
            Sense::Eq,
            0.0,
        );
        for w in pair.arcs.windows(2) {
            model.add_row(
                format!("flowbal_{tag}_i{}", w[1].tail.0 + 1),
                alloc::vec![(w[0].lamf, 1.0), (w[1].lamf, -1.0)],
                Sense::Eq,
                0.0,
            );
        }
        for arc in &pair.arcs {
            let atag = format!("{tag}_i{}_j{}", arc.tail.0 + 1, arc.head + 1);
            model.add_row(
                format!("zlo_{atag}"),
                alloc::vec![(arc.lamf, 1.0), (arc.zeta, -1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_row(
                format!("zhi_{atag}"),
                alloc::vec![(arc.lamf, 1.0), (arc.zeta, -big_m.flow_mbps)],
                Sense::Le,
                0.0,
            );
        }
    }

    for i in 0..n_nodes {
        let mut terms = alloc::vec![(lam_var[i], 1.0)];
        for pair in &pairs {
            for arc in &pair.arcs {
                if arc.tail.0 == i {
                    terms.push((arc.lamf, -1.0));
                }
            }
        }
        model.add_row(format!("arr_i{}", i + 1), terms, Sense::Eq, 0.0);
    }

    for (i, node) in topology.nodes().iter().enumerate() {
        let table = tables.get(node.service_rate_bps)?;
        let ones: Vec<(usize, f64)> = sigma_vars[i].iter().map(|&(_, v)| (v, 1.0)).collect();
        model.add_row(format!("selone_i{}", i + 1), ones, Sense::Le, 1.0);
        let mut grid_terms: Vec<(usize, f64)> = sigma_vars[i]
            .iter()
            .map(|&(k, v)| (v, table.rows()[k].arrival_bps / 1e6))
            .collect();
        grid_terms.push((lam_var[i], -1.0));
        model.add_row(format!("selgrid_i{}", i + 1), grid_terms, Sense::Eq, 0.0);
        let mut q_terms = alloc::vec![(q_var[i], 1.0)];
        for &(k, v) in &sigma_vars[i] {
            q_terms.push((v, -table.rows()[k].delay_s.expect("stable row")));
        }
        model.add_row(format!("qnode_i{}", i + 1), q_terms, Sense::Eq, 0.0);
    }

    for pair in &pairs {
        let tag = format!("s{}_d{}", pair.task + 1, pair.host_ord + 1);
        for arc in &pair.arcs {
            let Some(qf) = arc.qf else { continue };
            let atag = format!("{tag}_i{}_j{}", arc.tail.0 + 1, arc.head + 1);
            let q_i = q_var[arc.tail.0];
            model.add_row(
                format!("qfz_{atag}"),
                alloc::vec![(qf, 1.0), (arc.zeta, -g2_s)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("qfq_{atag}"),
                alloc::vec![(qf, 1.0), (q_i, -1.0)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("qfl_{atag}"),
                alloc::vec![(qf, 1.0), (q_i, -1.0), (arc.zeta, -g2_s)],
                Sense::Ge,
                -g2_s,
            );
        }
    }

    for (d, &host) in hosts.iter().enumerate() {
        let sum: Vec<(usize, f64)> = (0..n_tasks).map(|s| (assign[s][d], 1.0)).collect();
        let mut lo = sum.clone();
        lo.push((actp_var[d], -1.0));
        model.add_row(format!("actplo_d{}", d + 1), lo, Sense::Ge, 0.0);
        let mut hi = sum.clone();
        hi.push((actp_var[d], -(n_tasks as f64)));
        model.add_row(format!("actphi_d{}", d + 1), hi, Sense::Le, 0.0);

        let tier = topology
            .processor_at(host)
            .expect("host has processor")
            .tier;
        let cap = match params.fixed_for(tier) {
            Some(p) => p.capacity_mips,
            None => params.vn.capacity_mips,
        };
        let cap_terms: Vec<(usize, f64)> = (0..n_tasks)
            .map(|s| (assign[s][d], task_set.tasks()[s].demand_mips))
            .collect();
        model.add_row(format!("cap_d{}", d + 1), cap_terms, Sense::Le, cap);
        if tier == Tier::Vn {
            let ing_terms: Vec<(usize, f64)> = (0..n_tasks)
                .map(|s| (assign[s][d], task_set.tasks()[s].data_rate_bps / 1e6))
                .collect();
            model.add_row(
                format!("ing_d{}", d + 1),
                ing_terms,
                Sense::Le,
                params.vn.ingress_cap_bps / 1e6,
            );
        }
    }

    for (i, _) in topology.nodes().iter().enumerate() {
        if let Some(&act) = actn_var.get(&i) {
            model.add_row(
                format!("actnhi_i{}", i + 1),
                alloc::vec![(lam_var[i], 1.0), (act, -big_m.flow_mbps)],
                Sense::Le,
                0.0,
            );
        }
    }

    let mut p_terms = alloc::vec![(ptotal, 1.0)];
    for (d, &host) in hosts.iter().enumerate() {
        let tier = topology
            .processor_at(host)
            .expect("host has processor")
            .tier;
        match params.fixed_for(tier) {
            Some(p) => {
                if p.pue * p.idle_w != 0.0 {
                    p_terms.push((actp_var[d], -(p.pue * p.idle_w)));
                }
                for s in 0..n_tasks {
                    let c = p.pue * p.energy_per_mips_w * task_set.tasks()[s].demand_mips;
                    if c != 0.0 {
                        p_terms.push((assign[s][d], -c));
                    }
                }
            }
            None => {
                if params.vn.adapter_w != 0.0 {
                    p_terms.push((actp_var[d], -params.vn.adapter_w));
                }
                for s in 0..n_tasks {
                    let c = params.vn.energy_per_mips_w * task_set.tasks()[s].demand_mips;
                    if c != 0.0 {
                        p_terms.push((assign[s][d], -c));
                    }
                }
            }
        }
    }
    for (i, node) in topology.nodes().iter().enumerate() {
        let p = params.net_for(node.kind);
        if let Some(&act) = actn_var.get(&i) {
            p_terms.push((act, -(p.pue * p.idle_w)));
        }
        let c = p.pue * p.energy_per_bit_w * 1e6;
        if c != 0.0 {
            p_terms.push((lam_var[i], -c));
        }
    }
    model.add_row("ptotal_def".into(), p_terms, Sense::Eq, 0.0);

    let mut r_terms = alloc::vec![(rtotal, 1.0)];
    for pair in &pairs {
        for arc in &pair.arcs {
            if arc.charged && arc.dist_m > 0.0 {
                r_terms.push((arc.zeta, -(arc.dist_m / arc.speed_m_s)));
            }
        }
    }
    model.add_row("rtotal_def".into(), r_terms, Sense::Eq, 0.0);

    let mut q_terms = alloc::vec![(qtotal, 1.0)];
    for pair in &pairs {
        for arc in &pair.arcs {
            if let Some(qf) = arc.qf {
                q_terms.push((qf, -1.0));
            }
        }
    }
    model.add_row("qtotal_def".into(), q_terms, Sense::Eq, 0.0);

    model.objective = alloc::vec![
        (ptotal, weights.alpha),
        (rtotal, weights.beta),
        (qtotal, weights.gamma),
    ];

    Ok(MilpInstance {
        model,
        pairs,
        lam_var,
        sigma_vars,
        q_var,
        actp_var,
        actn_var,
        hosts,
        totals: (ptotal, rtotal, qtotal),
    })
}

impl MilpInstance {
    pub fn hosts(&self) -> &[NodeId] {
        &self.hosts
    }

    /// Full variable assignment induced by a concrete allocation.
    ///
    /// Built from the same topology, task set and parameters the program was
    /// built from; the result satisfies every row when the allocation is
    /// feasible.
    pub fn certificate(
        &self,
        topology: &Topology,
        task_set: &TaskSet,
        targets: &[NodeId],
    ) -> Result<BTreeMap<String, f64>, MilpError> {
        if targets.len() != task_set.len() {
            return Err(MilpError::Build(
                "allocation length differs from task count".into(),
            ));
        }
        let tables = DelayTables::build(topology, task_set);
        let loads = node_arrivals(topology, task_set, targets)?;
        let mut values: BTreeMap<String, f64> = self
            .model
            .vars
            .iter()
            .map(|v| (v.name.clone(), 0.0))
            .collect();

        for pair in &self.pairs {
            if targets[pair.task] != pair.host {
                continue;
            }
            let rate_mbps = task_set.tasks()[pair.task].data_rate_bps / 1e6;
            set(&mut values, &self.model, pair.assign, 1.0);
            for arc in &pair.arcs {
                set(&mut values, &self.model, arc.lamf, rate_mbps);
                set(&mut values, &self.model, arc.zeta, 1.0);
            }
        }

        for (i, node) in topology.nodes().iter().enumerate() {
            let lam_bps = loads.get(&NodeId(i)).copied().unwrap_or(0.0);
            set(&mut values, &self.model, self.lam_var[i], lam_bps / 1e6);
            if lam_bps > 0.0 {
                let table = tables.get(node.service_rate_bps)?;
                let row_k = table
                    .rows()
                    .iter()
                    .position(|r| r.arrival_bps == lam_bps)
                    .ok_or_else(|| {
                        MilpError::Build(format!(
                            "arrival {lam_bps} b/s missing from the table of node {}",
                            node.name
                        ))
                    })?;
                let delay = table.rows()[row_k].delay_s.ok_or_else(|| {
                    MilpError::Build(format!("allocation drives node {} unstable", node.name))
                })?;
                let sigma = self.sigma_vars[i]
                    .iter()
                    .find(|&&(k, _)| k == row_k)
                    .map(|&(_, v)| v)
                    .ok_or_else(|| {
                        MilpError::Build(format!(
                            "no selector for row {row_k} of node {}",
                            node.name
                        ))
                    })?;
                set(&mut values, &self.model, sigma, 1.0);
                set(&mut values, &self.model, self.q_var[i], delay);
            }
            if let Some(&act) = self.actn_var.get(&i) {
                set(
                    &mut values,
                    &self.model,
                    act,
                    if lam_bps > 0.0 { 1.0 } else { 0.0 },
                );
            }
        }

        for pair in &self.pairs {
            if targets[pair.task] != pair.host {
                continue;
            }
            for arc in &pair.arcs {
                if let Some(qf) = arc.qf {
                    let q = values[self.model.var_name(self.q_var[arc.tail.0])];
                    set(&mut values, &self.model, qf, q);
                }
            }
        }

        for (d, &host) in self.hosts.iter().enumerate() {
            let used = targets.iter().any(|&t| t == host);
            set(
                &mut values,
                &self.model,
                self.actp_var[d],
                if used { 1.0 } else { 0.0 },
            );
        }

        for (total, row_name) in [
            (self.totals.0, "ptotal_def"),
            (self.totals.1, "rtotal_def"),
            (self.totals.2, "qtotal_def"),
        ] {
            let row = self.model.row(row_name).expect("definition row exists");
            let mut sum = 0.0;
            for &(vi, c) in &row.terms {
                if vi != total {
                    sum += c * values[self.model.var_name(vi)];
                }
            }
            set(&mut values, &self.model, total, -sum);
        }
        Ok(values)
    }
}

fn set(values: &mut BTreeMap<String, f64>, model: &MilpModel, idx: usize, x: f64) {
    values.insert(model.var_name(idx).into(), x);
}
