//! Task-allocation studies for a cloud-fog network with a vehicular edge.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vecopt_core::delay::DelayTables;
use vecopt_core::milp::{build_milp, BigM};
use vecopt_core::optimizer::{
    calibrate_weights, solve_bnb, solve_exhaustive, CalibrationError, CalibrationMode,
    CalibrationOptions, ObjectiveCase, ObjectiveWeights, SolveResult,
};
use vecopt_core::power::PowerParams;
use vecopt_core::topology::{default_architecture, Tier, Topology};
use vecopt_core::workload::TaskSet;

use vecopt::config::{
    default_power_file, load_power_params, load_task_set, load_topology_file, ConfigError,
};
use vecopt::scenario::{run_scenario, RunConfig};

#[derive(Parser)]
#[command(
    name = "vecopt",
    version,
    about = "Exact task-allocation studies over a cloud-fog network with a vehicular edge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evaluation scenario sweep and write its tables and plots.
    Run(RunArgs),
    /// Solve a single allocation instance and print the result.
    Solve(SolveArgs),
    /// Dump the queuing-delay lookup tables as CSV.
    DumpLookup(DumpLookupArgs),
    /// Print the embedded default power parameter file.
    DumpPowerParams,
    /// Write the allocation model as an LP-format file.
    ExportMilp(ExportMilpArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Wireless interface rate of the access point, bits per second.
    #[arg(long, default_value_t = 1e9)]
    ap_rate: f64,
    /// Vehicles attached to the access point.
    #[arg(long, default_value_t = 8)]
    n_vehicles: usize,
    /// Topology file; replaces the built-in architecture.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Task file; replaces the uniform workload.
    #[arg(long)]
    tasks: Option<PathBuf>,
    /// Tasks in the uniform workload.
    #[arg(long, default_value_t = 10)]
    n_tasks: usize,
    /// Per-task demand of the uniform workload, MIPS.
    #[arg(long, default_value_t = 700.0)]
    demand_mips: f64,
    /// Traffic per unit demand, Mb/s per MIPS.
    #[arg(long, default_value_t = 0.1)]
    drr: f64,
    /// Power parameter file; replaces the embedded defaults.
    #[arg(long)]
    power_params: Option<PathBuf>,
    /// Capacity override for the neighbour fog, MIPS.
    #[arg(long)]
    nf_capacity: Option<f64>,
}

impl InstanceArgs {
    fn topology(&self) -> Result<Topology> {
        match &self.topology {
            None => Ok(default_architecture(self.n_vehicles, self.ap_rate)),
            Some(path) => {
                let file = load_topology_file(path)?;
                let base = file.into_topology()?;
                Ok(base)
            }
        }
    }

    fn task_set(&self) -> Result<TaskSet> {
        match &self.tasks {
            Some(path) => Ok(load_task_set(path)?),
            None => {
                let demands = vec![self.demand_mips; self.n_tasks];
                TaskSet::new(&demands, self.drr).map_err(|e| anyhow!(e.to_string()))
            }
        }
    }

    fn params(&self) -> Result<PowerParams> {
        let mut params = match &self.power_params {
            Some(path) => load_power_params(path)?,
            None => PowerParams::default_calibrated(),
        };
        if let Some(cap) = self.nf_capacity {
            params.nf.capacity_mips = cap;
        }
        Ok(params)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario to run: 1, 2, 3 or 4.
    #[arg(long)]
    scenario: u8,
    /// Wireless interface rates to sweep, bits per second.
    #[arg(long, value_delimiter = ',')]
    ap_rates: Option<Vec<f64>>,
    /// Output directory; defaults to $VECOPT_OUT_DIR, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    power_params: Option<PathBuf>,
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Task file solved as a single sweep point.
    #[arg(long)]
    tasks: Option<PathBuf>,
    /// Capacity override for the neighbour fog, MIPS.
    #[arg(long)]
    nf_capacity: Option<f64>,
    /// Recalibrate joint weights at every sweep point.
    #[arg(long)]
    calibrate_per_point: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Objective case: power, prop, queue, power+prop, power+queue or all.
    #[arg(long)]
    objective: String,
    /// Explicit weights "alpha,beta,gamma"; skips calibration.
    #[arg(long)]
    weights: Option<String>,
    /// Solver: bnb or exhaustive.
    #[arg(long, default_value = "bnb")]
    solver: String,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct DumpLookupArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct ExportMilpArgs {
    /// Destination LP file.
    #[arg(long)]
    out: PathBuf,
    /// Objective case: power, prop, queue, power+prop, power+queue or all.
    #[arg(long, default_value = "all")]
    objective: String,
    /// Explicit weights "alpha,beta,gamma"; skips calibration.
    #[arg(long)]
    weights: Option<String>,
    /// Flow big-M, Mb/s.
    #[arg(long, default_value_t = 1e4)]
    g1: f64,
    /// Delay big-M, milliseconds.
    #[arg(long, default_value_t = 1e3)]
    g2: f64,
    #[command(flatten)]
    instance: InstanceArgs,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("VECOPT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_weights(text: &str) -> Result<ObjectiveWeights> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("--weights needs three comma-separated numbers, got {text:?}");
    }
    let mut w = [0.0; 3];
    for (slot, part) in w.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .with_context(|| format!("bad weight {part:?}"))?;
    }
    Ok(ObjectiveWeights::new(w[0], w[1], w[2]))
}

fn weights_for(
    case: ObjectiveCase,
    explicit: Option<&str>,
    topology: &Topology,
    task_set: &TaskSet,
    params: &PowerParams,
) -> Result<ObjectiveWeights> {
    if let Some(text) = explicit {
        return parse_weights(text);
    }
    let mode = match case {
        ObjectiveCase::Power => return Ok(ObjectiveWeights::power_only()),
        ObjectiveCase::Prop => return Ok(ObjectiveWeights::prop_only()),
        ObjectiveCase::Queue => return Ok(ObjectiveWeights::queue_only()),
        ObjectiveCase::PowerProp => CalibrationMode::PowerProp,
        ObjectiveCase::PowerQueue => CalibrationMode::PowerQueue,
        ObjectiveCase::All => CalibrationMode::All,
    };
    let sweep = [task_set.clone()];
    match calibrate_weights(
        topology,
        &sweep,
        params,
        mode,
        CalibrationOptions::default(),
    ) {
        Ok(c) => Ok(c.weights),
        Err(CalibrationError::NonConvergence { last, iterations }) => {
            eprintln!(
                "warning: calibration stopped after {iterations} iterations without balancing; \
                 using its last weights"
            );
            Ok(last)
        }
        Err(e) => Err(anyhow!(e.to_string())),
    }
}

fn parse_case(text: &str) -> Result<ObjectiveCase> {
    ObjectiveCase::parse(text).ok_or_else(|| {
        anyhow!(
            "unknown objective {text:?}; use power, prop, queue, power+prop, power+queue or all"
        )
    })
}

fn solve_report(
    topology: &Topology,
    task_set: &TaskSet,
    case: ObjectiveCase,
    res: &SolveResult,
) -> String {
    let mut out = String::new();
    let n = task_set.len() as f64;
    let _ = writeln!(out, "case: {case}");
    let _ = writeln!(
        out,
        "weights: alpha={} beta={} gamma={}",
        res.weights.alpha, res.weights.beta, res.weights.gamma
    );
    let _ = writeln!(out, "objective: {}", res.objective);
    let _ = writeln!(out, "power_w: {}", res.power.total_w);
    let _ = writeln!(out, "avg_propagation_us: {}", res.prop_total_s / n * 1e6);
    let _ = writeln!(out, "avg_queuing_us: {}", res.queue_total_s / n * 1e6);
    for (task, &target) in task_set.tasks().iter().zip(res.allocation.targets()) {
        let node = &topology.nodes()[target.0];
        let tier = topology
            .processor_at(target)
            .expect("allocation target")
            .tier;
        let _ = writeln!(
            out,
            "task {}: demand {} MIPS, rate {} Mb/s -> {} ({})",
            task.id.0 + 1,
            task.demand_mips,
            task.data_rate_bps / 1e6,
            node.name,
            tier.label()
        );
    }
    let traffic = res.allocation.tier_traffic_bps(topology, task_set);
    let mut csv = String::from(
        "case,total_traffic_mbps,alpha,beta,gamma,power_w,avg_propagation_us,avg_queuing_us,\
         objective",
    );
    let mut row = format!(
        "{case},{},{},{},{},{},{},{},{}",
        task_set.total_traffic_bps() / 1e6,
        res.weights.alpha,
        res.weights.beta,
        res.weights.gamma,
        res.power.total_w,
        res.prop_total_s / n * 1e6,
        res.queue_total_s / n * 1e6,
        res.objective
    );
    for tier in Tier::ALL {
        let _ = write!(csv, ",{}_mbps", tier.label());
        let _ = write!(row, ",{}", traffic.get(&tier).copied().unwrap_or(0.0) / 1e6);
    }
    let _ = writeln!(out, "{csv}");
    let _ = writeln!(out, "{row}");
    out
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = RunConfig {
        scenario: args.scenario,
        ap_rates_bps: args.ap_rates,
        out_dir: out_dir(args.out),
        topology: match &args.topology {
            Some(path) => Some(load_topology_file(path)?),
            None => None,
        },
        sweep: match &args.tasks {
            Some(path) => Some(vec![load_task_set(path)?]),
            None => None,
        },
        params: match &args.power_params {
            Some(path) => load_power_params(path)?,
            None => PowerParams::default_calibrated(),
        },
        nf_capacity_mips: args.nf_capacity,
        calibrate_per_point: args.calibrate_per_point,
    };
    let out = run_scenario(&cfg)?;
    for warning in &out.warnings {
        eprintln!("warning: {warning}");
    }
    for file in &out.files {
        println!("wrote {}", file.display());
    }
    println!("{} rows across {} files", out.rows.len(), out.files.len());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let case = parse_case(&args.objective)?;
    let topology = args.instance.topology()?;
    let task_set = args.instance.task_set()?;
    let params = args.instance.params()?;
    let weights = weights_for(case, args.weights.as_deref(), &topology, &task_set, &params)?;
    let res = match args.solver.as_str() {
        "bnb" => solve_bnb(&topology, &task_set, &params, weights),
        "exhaustive" => solve_exhaustive(&topology, &task_set, &params, weights),
        other => bail!("unknown solver {other:?}; use bnb or exhaustive"),
    }
    .map_err(|e| anyhow!(e.to_string()))?;
    print!("{}", solve_report(&topology, &task_set, case, &res));
    Ok(())
}

fn cmd_dump_lookup(args: DumpLookupArgs) -> Result<()> {
    let topology = args.instance.topology()?;
    let task_set = args.instance.task_set()?;
    let tables = DelayTables::build(&topology, &task_set);
    let mut out = String::from("service_rate_bps,arrival_rate_bps,delay_seconds\n");
    for table in tables.iter() {
        for row in table.rows() {
            let delay = match row.delay_s {
                Some(d) => format!("{d:.16e}"),
                None => "infeasible".into(),
            };
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{delay}",
                table.service_rate_bps(),
                row.arrival_bps
            );
        }
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, out)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_export_milp(args: ExportMilpArgs) -> Result<()> {
    let case = parse_case(&args.objective)?;
    let topology = args.instance.topology()?;
    let task_set = args.instance.task_set()?;
    let params = args.instance.params()?;
    let weights = weights_for(case, args.weights.as_deref(), &topology, &task_set, &params)?;
    let big_m = BigM {
        flow_mbps: args.g1,
        delay_ms: args.g2,
    };
    let instance = build_milp(&topology, &task_set, &params, weights, big_m)
        .map_err(|e| anyhow!(e.to_string()))?;
    let lp = instance.model.write_lp();
    std::fs::write(&args.out, lp)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} ({} variables, {} constraints)",
        args.out.display(),
        instance.model.vars.len(),
        instance.model.rows.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Solve(args) => cmd_solve(args),
        Command::DumpLookup(args) => cmd_dump_lookup(args),
        Command::DumpPowerParams => {
            print!("{}", default_power_file().to_toml());
            Ok(())
        }
        Command::ExportMilp(args) => cmd_export_milp(args),
    }
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<ConfigError>().is_some()
        || matches!(
            e.downcast_ref::<vecopt::scenario::ScenarioError>(),
            Some(vecopt::scenario::ScenarioError::Config(_))
        )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
