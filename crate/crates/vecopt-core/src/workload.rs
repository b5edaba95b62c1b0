//! Workloads: processing tasks and the demand sweep used in evaluations.
//!
//! Each task carries a processing demand in MIPS and generates a constant
//! bit stream proportional to that demand. The proportionality constant is
//! the data rate ratio (DRR) in Mb/s per MIPS, so a 700 MIPS task at a DRR
//! of 0.1 sends 70 Mb/s from its source node towards wherever it is served.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Index of a task within its set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub usize);

/// One processing task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub demand_mips: f64,
    /// Traffic the task injects, bits per second.
    pub data_rate_bps: f64,
}

/// Malformed workload description.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadError(pub String);

impl fmt::Display for WorkloadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid workload: {}", self.0)
    }
}

impl core::error::Error for WorkloadError {}

/// An ordered set of tasks sharing one data rate ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSet {
    drr_mbps_per_mips: f64,
    tasks: Vec<Task>,
}

impl TaskSet {
    /// Builds a set from per-task demands; rates follow from the DRR.
    pub fn new(demands_mips: &[f64], drr_mbps_per_mips: f64) -> Result<Self, WorkloadError> {
        if !(drr_mbps_per_mips > 0.0) {
            return Err(WorkloadError("data rate ratio must be positive".into()));
        }
        let mut tasks = Vec::with_capacity(demands_mips.len());
        for (i, &d) in demands_mips.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(WorkloadError(format!("task {i} demand must be positive")));
            }
            tasks.push(Task {
                id: TaskId(i),
                demand_mips: d,
                data_rate_bps: drr_mbps_per_mips * d * 1e6,
            });
        }
        Ok(TaskSet {
            drr_mbps_per_mips,
            tasks,
        })
    }

    pub fn drr_mbps_per_mips(&self) -> f64 {
        self.drr_mbps_per_mips
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Sum of all task data rates, bits per second.
    pub fn total_traffic_bps(&self) -> f64 {
        self.tasks.iter().map(|t| t.data_rate_bps).sum()
    }

    /// Sum of all task demands, MIPS.
    pub fn total_demand_mips(&self) -> f64 {
        self.tasks.iter().map(|t| t.demand_mips).sum()
    }

    /// True when every task has the same demand and rate.
    pub fn is_uniform(&self) -> bool {
        match self.tasks.first() {
            None => true,
            Some(first) => self.tasks.iter().all(|t| {
                t.demand_mips == first.demand_mips && t.data_rate_bps == first.data_rate_bps
            }),
        }
    }
}

/// Task sets of `n_tasks` identical tasks, one per demand step.
///
/// Demands run from `demand_min_mips` to `demand_max_mips` inclusive in
/// increments of `step_mips`.
pub fn uniform_sweep(
    n_tasks: usize,
    demand_min_mips: f64,
    demand_max_mips: f64,
    step_mips: f64,
    drr_mbps_per_mips: f64,
) -> Result<Vec<TaskSet>, WorkloadError> {
    if !(step_mips > 0.0) {
        return Err(WorkloadError("sweep step must be positive".into()));
    }
    if demand_max_mips < demand_min_mips {
        return Err(WorkloadError("sweep range is empty".into()));
    }
    let steps = ((demand_max_mips - demand_min_mips) / step_mips) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let d = demand_min_mips + step_mips * k as f64;
        if d > demand_max_mips {
            break;
        }
        let demands: Vec<f64> = core::iter::repeat(d).take(n_tasks).collect();
        out.push(TaskSet::new(&demands, drr_mbps_per_mips)?);
    }
    Ok(out)
}

/// The evaluation workload: ten identical tasks from 100 to 1000 MIPS in
/// steps of 100, DRR 0.1.
pub fn default_sweep() -> Vec<TaskSet> {
    uniform_sweep(10, 100.0, 1000.0, 100.0, 0.1).expect("default sweep is valid")
}
