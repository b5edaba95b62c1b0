//! Evaluation scenario sweeps.
//!
//! Each scenario runs a set of objective cases over the traffic sweep,
//! solving every point exactly, and writes one master table plus one CSV and
//! one plot script per reported figure. Scenario 3 additionally varies the
//! wireless interface rate of the access point. All output is deterministic:
//! identical inputs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;
use vecopt_core::optimizer::{
    calibrate_weights, solve_bnb, CalibrationError, CalibrationMode, CalibrationOptions,
    ObjectiveCase, ObjectiveWeights, SolveError, SolveResult,
};
use vecopt_core::power::PowerParams;
use vecopt_core::topology::{default_architecture, Node, Tier, Topology};
use vecopt_core::workload::{default_sweep, TaskSet};

use crate::config::{ConfigError, TopologyFile};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solve(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

/// Cases and interface rates one scenario covers.
pub struct ScenarioSpec {
    pub id: u8,
    pub cases: Vec<ObjectiveCase>,
    pub default_ap_rates_bps: Vec<f64>,
}

/// The four evaluation scenarios.
pub fn scenario_spec(id: u8) -> Result<ScenarioSpec, ConfigError> {
    let (cases, rates) = match id {
        1 => (
            vec![
                ObjectiveCase::Power,
                ObjectiveCase::Prop,
                ObjectiveCase::PowerProp,
            ],
            vec![1e9],
        ),
        2 => (
            vec![
                ObjectiveCase::Power,
                ObjectiveCase::Queue,
                ObjectiveCase::PowerQueue,
            ],
            vec![1e9],
        ),
        3 => (
            vec![ObjectiveCase::Queue, ObjectiveCase::PowerQueue],
            vec![1e9, 5e9, 10e9],
        ),
        4 => (
            vec![
                ObjectiveCase::PowerProp,
                ObjectiveCase::PowerQueue,
                ObjectiveCase::All,
            ],
            vec![1e9],
        ),
        _ => {
            return Err(ConfigError::Invalid(format!(
                "scenario {id} does not exist; choose 1, 2, 3 or 4"
            )))
        }
    };
    Ok(ScenarioSpec {
        id,
        cases,
        default_ap_rates_bps: rates,
    })
}

/// One scenario run.
pub struct RunConfig {
    pub scenario: u8,
    /// Access-point wireless rates; `None` keeps the scenario's default.
    pub ap_rates_bps: Option<Vec<f64>>,
    pub out_dir: PathBuf,
    /// Custom network; the wireless rate under sweep is applied on top.
    pub topology: Option<TopologyFile>,
    /// Custom sweep; `None` runs the default traffic sweep.
    pub sweep: Option<Vec<TaskSet>>,
    pub params: PowerParams,
    pub nf_capacity_mips: Option<f64>,
    /// Recalibrate joint weights at every sweep point instead of once at the
    /// sweep middle.
    pub calibrate_per_point: bool,
}

impl RunConfig {
    pub fn new(scenario: u8, out_dir: PathBuf) -> RunConfig {
        RunConfig {
            scenario,
            ap_rates_bps: None,
            out_dir,
            topology: None,
            sweep: None,
            params: PowerParams::default_calibrated(),
            nf_capacity_mips: None,
            calibrate_per_point: false,
        }
    }
}

/// Solved metrics of one feasible sweep point.
#[derive(Clone, Debug)]
pub struct RowMetrics {
    pub power_w: f64,
    pub avg_prop_us: f64,
    pub avg_queue_us: f64,
    pub objective: f64,
    /// Traffic served per tier, Mb/s, in `Tier::ALL` order.
    pub tier_mbps: [f64; 5],
}

/// One sweep point under one case and interface rate.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub scenario: u8,
    pub case: ObjectiveCase,
    pub ap_rate_bps: f64,
    pub total_traffic_mbps: f64,
    pub demand_mips: f64,
    pub weights: ObjectiveWeights,
    /// `None` marks an infeasible point.
    pub metrics: Option<RowMetrics>,
}

/// Everything a run produced.
pub struct ScenarioOutput {
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn build_topology(
    template: Option<&TopologyFile>,
    ap_rate_bps: f64,
) -> Result<Topology, ConfigError> {
    match template {
        None => Ok(default_architecture(8, ap_rate_bps)),
        Some(file) => {
            let base = file.into_topology()?;
            let ap = base.ap_wireless();
            let nodes: Vec<Node> = base
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let mut n = n.clone();
                    if i == ap.0 {
                        n.service_rate_bps = ap_rate_bps;
                    }
                    n
                })
                .collect();
            Topology::new(base.packet_size_bits(), nodes, base.links().to_vec())
                .map_err(|e| ConfigError::Invalid(e.to_string()))
        }
    }
}

fn case_weights(
    case: ObjectiveCase,
    topology: &Topology,
    sweep: &[TaskSet],
    params: &PowerParams,
    warnings: &mut Vec<String>,
) -> Result<ObjectiveWeights, ScenarioError> {
    let mode = match case {
        ObjectiveCase::Power => return Ok(ObjectiveWeights::power_only()),
        ObjectiveCase::Prop => return Ok(ObjectiveWeights::prop_only()),
        ObjectiveCase::Queue => return Ok(ObjectiveWeights::queue_only()),
        ObjectiveCase::PowerProp => CalibrationMode::PowerProp,
        ObjectiveCase::PowerQueue => CalibrationMode::PowerQueue,
        ObjectiveCase::All => CalibrationMode::All,
    };
    let mid = sweep.len() / 2;
    let mut order = vec![mid];
    for step in 1..=sweep.len() {
        if mid >= step {
            order.push(mid - step);
        }
        if mid + step < sweep.len() {
            order.push(mid + step);
        }
    }
    for idx in order {
        let point = std::slice::from_ref(&sweep[idx]);
        match calibrate_weights(topology, point, params, mode, CalibrationOptions::default()) {
            Ok(c) => {
                if idx != mid {
                    warnings.push(format!(
                        "calibration for case {case} moved to the {} Mb/s point; the sweep \
                         middle has no feasible allocation",
                        sweep[idx].total_traffic_bps() / 1e6
                    ));
                }
                return Ok(c.weights);
            }
            Err(CalibrationError::NonConvergence { last, iterations }) => {
                warnings.push(format!(
                    "calibration for case {case} stopped after {iterations} iterations without \
                     balancing; using its last weights"
                ));
                return Ok(last);
            }
            Err(CalibrationError::Degenerate(_)) => {}
            Err(CalibrationError::Solve(e)) => match e {
                SolveError::NoFeasibleAllocation | SolveError::Infeasible(_) => {}
                other => return Err(ScenarioError::Calibration(other.to_string())),
            },
        }
    }
    warnings.push(format!(
        "no sweep point supports calibration for case {case}; using unit weights"
    ));
    Ok(ObjectiveWeights::new(1.0, 1.0, 1.0))
}

fn metrics_of(topology: &Topology, ts: &TaskSet, res: &SolveResult) -> RowMetrics {
    let n = ts.len() as f64;
    let traffic = res.allocation.tier_traffic_bps(topology, ts);
    let mut tier_mbps = [0.0; 5];
    for (k, tier) in Tier::ALL.into_iter().enumerate() {
        tier_mbps[k] = traffic.get(&tier).copied().unwrap_or(0.0) / 1e6;
    }
    RowMetrics {
        power_w: res.power.total_w,
        avg_prop_us: res.prop_total_s / n * 1e6,
        avg_queue_us: res.queue_total_s / n * 1e6,
        objective: res.objective,
        tier_mbps,
    }
}

/// Runs one scenario: solves every (case, rate, sweep point) and writes the
/// master table, the per-figure CSVs and their plot scripts.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioOutput, ScenarioError> {
    let spec = scenario_spec(cfg.scenario)?;
    let rates = cfg
        .ap_rates_bps
        .clone()
        .unwrap_or_else(|| spec.default_ap_rates_bps.clone());
    if rates.is_empty() || rates.iter().any(|&r| !(r > 0.0)) {
        return Err(ConfigError::Invalid("interface rates must be positive".into()).into());
    }
    let sweep = match &cfg.sweep {
        Some(s) if s.is_empty() => {
            return Err(ConfigError::Invalid("the sweep has no points".into()).into())
        }
        Some(s) => s.clone(),
        None => default_sweep(),
    };
    let mut params = cfg.params.clone();
    if let Some(cap) = cfg.nf_capacity_mips {
        params.nf.capacity_mips = cap;
    }

    let mut warnings = Vec::new();
    let mut rows: Vec<SweepRow> = Vec::new();
    for &case in &spec.cases {
        for &rate in &rates {
            let topology = build_topology(cfg.topology.as_ref(), rate)?;
            let series_weights = case_weights(case, &topology, &sweep, &params, &mut warnings)?;
            let joint = case.uses_power() && (case.uses_prop() || case.uses_queue());

            let mut point_weights = Vec::with_capacity(sweep.len());
            for ts in &sweep {
                let w = if cfg.calibrate_per_point && joint {
                    case_weights(
                        case,
                        &topology,
                        std::slice::from_ref(ts),
                        &params,
                        &mut warnings,
                    )?
                } else {
                    series_weights
                };
                point_weights.push(w);
            }

            let results: Vec<Result<SolveResult, SolveError>> = std::thread::scope(|scope| {
                let topology = &topology;
                let params = &params;
                let handles: Vec<_> = sweep
                    .iter()
                    .zip(&point_weights)
                    .map(|(ts, &w)| scope.spawn(move || solve_bnb(topology, ts, params, w)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("solver thread"))
                    .collect()
            });

            for ((ts, &w), res) in sweep.iter().zip(&point_weights).zip(results) {
                let metrics = match res {
                    Ok(r) => Some(metrics_of(&topology, ts, &r)),
                    Err(SolveError::NoFeasibleAllocation) => None,
                    Err(e) => return Err(ScenarioError::Solve(e.to_string())),
                };
                rows.push(SweepRow {
                    scenario: spec.id,
                    case,
                    ap_rate_bps: rate,
                    total_traffic_mbps: ts.total_traffic_bps() / 1e6,
                    demand_mips: ts.total_demand_mips() / ts.len() as f64,
                    weights: w,
                    metrics,
                });
            }
        }
    }

    let files = write_outputs(&cfg.out_dir, &spec, &rates, &rows)?;
    Ok(ScenarioOutput {
        rows,
        files,
        warnings,
    })
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn opt(m: &Option<RowMetrics>, f: impl Fn(&RowMetrics) -> f64) -> String {
    match m {
        Some(m) => fmt(f(m)),
        None => String::new(),
    }
}

fn write_file(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf, ScenarioError> {
    let path = out_dir.join(name);
    fs::write(&path, content).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn master_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "scenario,case,ap_rate_bps,total_traffic_mbps,demand_mips,alpha,beta,gamma,infeasible,\
         power_w,avg_propagation_us,avg_queuing_us,objective,vn_mbps,nf_mbps,lf_mbps,mf_mbps,\
         cc_mbps\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.case,
            fmt(r.ap_rate_bps),
            fmt(r.total_traffic_mbps),
            fmt(r.demand_mips),
            fmt(r.weights.alpha),
            fmt(r.weights.beta),
            fmt(r.weights.gamma),
            if r.metrics.is_some() { 0 } else { 1 },
            opt(&r.metrics, |m| m.power_w),
            opt(&r.metrics, |m| m.avg_prop_us),
            opt(&r.metrics, |m| m.avg_queue_us),
            opt(&r.metrics, |m| m.objective),
            opt(&r.metrics, |m| m.tier_mbps[0]),
            opt(&r.metrics, |m| m.tier_mbps[1]),
            opt(&r.metrics, |m| m.tier_mbps[2]),
            opt(&r.metrics, |m| m.tier_mbps[3]),
            opt(&r.metrics, |m| m.tier_mbps[4]),
        );
    }
    out
}

/// One line per sweep point, one metric column per series.
struct Series<'a> {
    label: String,
    rows: Vec<&'a SweepRow>,
}

fn collect_series<'a>(
    rows: &'a [SweepRow],
    picks: &[(String, ObjectiveCase, f64)],
) -> Vec<Series<'a>> {
    picks
        .iter()
        .map(|(label, case, rate)| Series {
            label: label.clone(),
            rows: rows
                .iter()
                .filter(|r| r.case == *case && r.ap_rate_bps == *rate)
                .collect(),
        })
        .collect()
}

fn x_axis<'a>(series: &[Series<'a>]) -> Vec<f64> {
    series
        .first()
        .map(|s| s.rows.iter().map(|r| r.total_traffic_mbps).collect())
        .unwrap_or_default()
}

fn metric_csv(series: &[Series<'_>], metric: impl Fn(&RowMetrics) -> f64) -> String {
    let mut out = String::from("total_traffic_mbps");
    for s in series {
        out.push(',');
        out.push_str(&s.label);
    }
    out.push('\n');
    for (i, x) in x_axis(series).iter().enumerate() {
        out.push_str(&fmt(*x));
        for s in series {
            out.push(',');
            out.push_str(&opt(&s.rows[i].metrics, &metric));
        }
        out.push('\n');
    }
    out
}

fn allocation_csv(series: &[Series<'_>]) -> String {
    let mut out = String::from("total_traffic_mbps");
    for s in series {
        for tier in Tier::ALL {
            let _ = write!(out, ",{}_{}_mbps", s.label, tier.label());
        }
    }
    out.push('\n');
    for (i, x) in x_axis(series).iter().enumerate() {
        out.push_str(&fmt(*x));
        for s in series {
            for k in 0..Tier::ALL.len() {
                out.push(',');
                out.push_str(&opt(&s.rows[i].metrics, |m| m.tier_mbps[k]));
            }
        }
        out.push('\n');
    }
    out
}

fn plot_script(csv_name: &str, ylabel: &str) -> String {
    let stem = csv_name.trim_end_matches(".csv");
    format!(
        r#"import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
with open(here / "{csv_name}", newline="") as fh:
    rows = list(csv.DictReader(fh))
columns = [c for c in rows[0] if c != "total_traffic_mbps"]
x = [float(r["total_traffic_mbps"]) for r in rows]

fig, ax = plt.subplots(figsize=(7, 4.5))
for col in columns:
    y = [float(r[col]) if r[col] else None for r in rows]
    ax.plot(x, y, marker="o", label=col)
ax.set_xlabel("Total traffic (Mb/s)")
ax.set_ylabel("{ylabel}")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(here / "{stem}.png", dpi=150)
"#
    )
}

fn ap_label(rate_bps: f64) -> String {
    format!("ap_{}gbps", rate_bps / 1e9)
}

fn case_tag(case: ObjectiveCase) -> String {
    match case {
        ObjectiveCase::Queue => "queue_min".into(),
        _ => case.label().replace('+', "_"),
    }
}

fn write_outputs(
    out_dir: &Path,
    spec: &ScenarioSpec,
    rates: &[f64],
    rows: &[SweepRow],
) -> Result<Vec<PathBuf>, ScenarioError> {
    fs::create_dir_all(out_dir).map_err(|source| ScenarioError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    let emit = |name: &str, content: String, files: &mut Vec<PathBuf>| {
        write_file(out_dir, name, &content).map(|p| files.push(p))
    };

    emit(
        &format!("scenario{}_rows.csv", spec.id),
        master_csv(rows),
        &mut files,
    )?;

    let mut figures: Vec<(String, String, String)> = Vec::new();
    if spec.id == 3 {
        for &case in &spec.cases {
            let picks: Vec<(String, ObjectiveCase, f64)> =
                rates.iter().map(|&r| (ap_label(r), case, r)).collect();
            let series = collect_series(rows, &picks);
            let tag = case_tag(case);
            figures.push((
                format!("scenario3_{tag}_power.csv"),
                metric_csv(&series, |m| m.power_w),
                "Power (W)".into(),
            ));
            figures.push((
                format!("scenario3_{tag}_queuing_delay.csv"),
                metric_csv(&series, |m| m.avg_queue_us),
                "Average queuing delay (us)".into(),
            ));
            figures.push((
                format!("scenario3_{tag}_allocation.csv"),
                allocation_csv(&series),
                "Allocated traffic (Mb/s)".into(),
            ));
        }
    } else {
        let rate = rates[0];
        let picks: Vec<(String, ObjectiveCase, f64)> = spec
            .cases
            .iter()
            .map(|&c| (c.label().to_string(), c, rate))
            .collect();
        let series = collect_series(rows, &picks);
        let id = spec.id;
        figures.push((
            format!("scenario{id}_power.csv"),
            metric_csv(&series, |m| m.power_w),
            "Power (W)".into(),
        ));
        if spec.cases.iter().any(|c| c.uses_prop()) {
            figures.push((
                format!("scenario{id}_propagation_delay.csv"),
                metric_csv(&series, |m| m.avg_prop_us),
                "Average propagation delay (us)".into(),
            ));
        }
        if spec.cases.iter().any(|c| c.uses_queue()) {
            figures.push((
                format!("scenario{id}_queuing_delay.csv"),
                metric_csv(&series, |m| m.avg_queue_us),
                "Average queuing delay (us)".into(),
            ));
        }
        figures.push((
            format!("scenario{id}_allocation.csv"),
            allocation_csv(&series),
            "Allocated traffic (Mb/s)".into(),
        ));
    }

    for (name, content, ylabel) in figures {
        emit(&name, content, &mut files)?;
        let script = plot_script(&name, &ylabel);
        emit(
            &format!("plot_{}.py", name.trim_end_matches(".csv")),
            script,
            &mut files,
        )?;
    }
    Ok(files)
}
