//! Core models for task allocation in a cloud-fog-vehicular edge network.
//!
//! The crate covers the network topology and its processing locations,
//! workload generation, M/M/1 queuing and propagation delay, power
//! consumption, exact solvers for the weighted allocation objective, and a
//! mixed-integer linear program export of the same model.
//!
//! Conventions used throughout: traffic rates in bits per second, delays in
//! seconds, distances in meters, power in watts, processing in MIPS. All
//! computation is deterministic; collections iterate in a fixed order.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod delay;
pub mod milp;
pub mod optimizer;
pub mod power;
pub mod topology;
pub mod workload;

pub use delay::{build_lookup_table, mm1_delay, node_arrivals, propagation_delay, DelayTable};
pub use milp::{build_milp, BigM, MilpInstance, MilpModel};
pub use optimizer::{
    calibrate_weights, evaluate, solve_bnb, solve_exhaustive, Allocation, ObjectiveCase,
    ObjectiveWeights, SolveResult,
};
pub use power::{total_power, PowerBreakdown, PowerParams};
pub use topology::{default_architecture, Medium, NodeId, NodeKind, Tier, Topology};
pub use workload::{uniform_sweep, Task, TaskSet};
