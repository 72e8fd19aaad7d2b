//! `workbench`: analyze processing networks from text files, compute fluid
//! draining times and reachability, and run scaled stochastic simulations.
//!
//! Exit codes: 0 success, 2 heavy-traffic conditions not satisfied,
//! 3 file parse or validation error, 4 infeasible instance, 1 anything else.

mod netfile;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use workbench_core::fluid::{self, FluidError};
use workbench_core::netsim::{
    self, BoundarySubstitution, IdlePolicy, IncrementFamily, NetsimError, NominalPolicy, Policy,
    ScaleMode, SimConfig, StochasticSpec,
};
use workbench_core::ratmath::RVector;
use workbench_core::vertexenum::DEFAULT_SUBSET_BUDGET;
use workbench_core::workload::{self, Analysis, WorkloadError};

use netfile::{FileError, NetworkFile};
use report::Format;

const EXIT_ASSUMPTION: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "workbench",
    version,
    about = "Workload analysis and simulation for open processing networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the static plan, enumerate dual vertices, and build the
    /// canonical workload representation.
    Analyze {
        /// Network file.
        file: PathBuf,
        /// Output format: text for reading, kv for scripting.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Parse a network file and print its canonical rendering.
    Fmt {
        /// Network file.
        file: PathBuf,
    },
    /// Minimum time to drain a named inventory vector with inflows off.
    Mtte {
        /// Network file.
        file: PathBuf,
        /// Name of a vector block in the file.
        vector: String,
    },
    /// Decide fluid reachability between two named inventory vectors.
    Reach {
        /// Network file.
        file: PathBuf,
        /// Name of the starting vector.
        from: String,
        /// Name of the target vector.
        to: String,
    },
    /// Run a discretized stochastic simulation and write the trajectory.
    Simulate {
        /// Network file.
        file: PathBuf,
        /// Scheduling policy.
        #[arg(long, value_enum, default_value_t = PolicyArg::Nominal)]
        policy: PolicyArg,
        /// Boundary threshold for the boundary-sub policy.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Spatial scale parameter in (0, 1].
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Unscaled simulation horizon.
        #[arg(long, default_value_t = 1000.0)]
        horizon: f64,
        /// Euler step size.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replication count; 30 or more adds a noise-covariance estimate.
        #[arg(long, default_value_t = 1)]
        replications: usize,
        /// Increment distribution family for covariance blocks.
        #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
        family: FamilyArg,
        /// Name of a vector block to start from (default: zero inventory).
        #[arg(long)]
        start: Option<String>,
        /// Trajectory output path.
        #[arg(long, default_value = "trajectory.tsv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Nominal,
    Idle,
    BoundarySub,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Deterministic,
    Gaussian,
    Binary,
}

impl From<FamilyArg> for IncrementFamily {
    fn from(arg: FamilyArg) -> Self {
        match arg {
            FamilyArg::Deterministic => IncrementFamily::Deterministic,
            FamilyArg::Gaussian => IncrementFamily::Gaussian,
            FamilyArg::Binary => IncrementFamily::SymmetricBinary,
        }
    }
}

type Failure = (u8, String);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let ok = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Analyze { file, format } => cmd_analyze(&file, format),
        Command::Fmt { file } => cmd_fmt(&file),
        Command::Mtte { file, vector } => cmd_mtte(&file, &vector),
        Command::Reach { file, from, to } => cmd_reach(&file, &from, &to),
        Command::Simulate {
            file,
            policy,
            threshold,
            epsilon,
            horizon,
            step,
            seed,
            replications,
            family,
            start,
            out,
        } => cmd_simulate(SimulateArgs {
            file,
            policy,
            threshold,
            epsilon,
            horizon,
            step,
            seed,
            replications,
            family,
            start,
            out,
        }),
    }
}

fn load(path: &Path) -> Result<NetworkFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (1, format!("cannot read {}: {e}", path.display())))?;
    netfile::parse_network(&text).map_err(file_failure)
}

/// Writes a command's output to stdout. A closed pipe (e.g. `| head`) is
/// not an error: the result was computed, the reader just stopped reading.
fn emit(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err((1, format!("cannot write to stdout: {e}"))),
    }
}

fn file_failure(err: FileError) -> Failure {
    (EXIT_PARSE, err.to_string())
}

fn workload_failure(err: WorkloadError) -> Failure {
    let code = match err {
        WorkloadError::Infeasible => EXIT_INFEASIBLE,
        WorkloadError::AssumptionNotSatisfied(_) => EXIT_ASSUMPTION,
        _ => 1,
    };
    (code, err.to_string())
}

fn fluid_failure(err: FluidError) -> Failure {
    let code = match err {
        FluidError::Infeasible => EXIT_INFEASIBLE,
        FluidError::AssumptionNotSatisfied(_) => EXIT_ASSUMPTION,
        _ => 1,
    };
    (code, err.to_string())
}

fn netsim_failure(err: NetsimError) -> Failure {
    let code = match err {
        NetsimError::NotFullyUtilizing(_) => EXIT_ASSUMPTION,
        _ => 1,
    };
    (code, err.to_string())
}

fn enumeration_budget() -> Result<u64, Failure> {
    match std::env::var("WORKBENCH_ENUM_BUDGET") {
        Ok(value) => value.trim().parse::<u64>().map_err(|_| {
            (
                1,
                format!("WORKBENCH_ENUM_BUDGET must be a positive integer, got \"{value}\""),
            )
        }),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SUBSET_BUDGET),
        Err(err) => Err((1, format!("WORKBENCH_ENUM_BUDGET: {err}"))),
    }
}

fn analyze_file(file: &NetworkFile) -> Result<Analysis, Failure> {
    let budget = enumeration_budget()?;
    workload::analyze(&file.net, budget).map_err(workload_failure)
}

fn cmd_analyze(path: &Path, format: Format) -> Result<u8, Failure> {
    let file = load(path)?;
    let analysis = analyze_file(&file)?;
    emit(&report::render_analysis(&file, &analysis, format))?;
    Ok(if analysis.report.satisfied {
        0
    } else {
        EXIT_ASSUMPTION
    })
}

fn cmd_fmt(path: &Path) -> Result<u8, Failure> {
    let file = load(path)?;
    emit(&netfile::render_network(&file))?;
    Ok(0)
}

fn cmd_mtte(path: &Path, vector: &str) -> Result<u8, Failure> {
    let file = load(path)?;
    let inventory = file.vector(vector).map_err(|e| (1, e.to_string()))?;
    let solution = fluid::mtte(&file.net, inventory).map_err(fluid_failure)?;
    let mut out = String::new();
    let _ = writeln!(out, "inventory: {}", inventory.display_row());
    let _ = writeln!(out, "time to empty: {}", solution.time);
    let _ = writeln!(out, "activity totals: {}", solution.activity_totals.display_row());
    let _ = writeln!(out, "material weights: {}", solution.material_weights.display_row());
    let _ = writeln!(out, "server weights: {}", solution.server_weights.display_row());
    emit(&out)?;
    Ok(0)
}

fn describe_reach(
    file: &NetworkFile,
    analysis: &Analysis,
    label: &str,
    start: &RVector,
    target: &RVector,
    out: &mut String,
) -> Result<bool, Failure> {
    let rep = analysis
        .representation
        .as_ref()
        .expect("analysis with satisfied conditions carries a representation");
    // The two decision routes are checked against each other inside
    // `is_reachable`; render each route's verdict alongside its evidence.
    let answer =
        fluid::is_reachable(&file.net, rep, start, target).map_err(fluid_failure)?;
    if answer.reachable {
        let rates = answer
            .witness_rates
            .as_ref()
            .map(|r| r.display_row())
            .unwrap_or_default();
        let time = answer
            .witness_time
            .as_ref()
            .map(|t| t.to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{label}: reachable");
        let _ = writeln!(
            out,
            "  dual sign test: nonnegative at all {} binding vertices",
            rep.binding_count()
        );
        let _ = writeln!(out, "  rate search: rates {rates} achieve the change in time {time}");
    } else {
        let _ = writeln!(out, "{label}: not reachable");
        let delta = target.sub(start);
        let binding: Vec<_> = rep.binding_vertices().collect();
        for position in &answer.dual_violations {
            let value = binding[*position].material_weights.dot(&delta);
            let _ = writeln!(
                out,
                "  dual sign test: violated by vertex {} (material weights . change = {})",
                position + 1,
                value
            );
        }
        let _ = writeln!(out, "  rate search: no feasible draining rates");
    }
    Ok(answer.reachable)
}

fn cmd_reach(path: &Path, from: &str, to: &str) -> Result<u8, Failure> {
    let file = load(path)?;
    let start = file.vector(from).map_err(|e| (1, e.to_string()))?.clone();
    let target = file.vector(to).map_err(|e| (1, e.to_string()))?.clone();
    let analysis = analyze_file(&file)?;
    if !analysis.report.satisfied {
        for diagnostic in &analysis.report.diagnostics {
            eprintln!("{diagnostic}");
        }
        return Err((
            EXIT_ASSUMPTION,
            "heavy-traffic conditions not satisfied".into(),
        ));
    }
    let mut out = String::new();
    let forward = describe_reach(&file, &analysis, "forward", &start, &target, &mut out)?;
    let reverse = describe_reach(&file, &analysis, "reverse", &target, &start, &mut out)?;
    let _ = writeln!(
        out,
        "communicates: {}",
        if forward && reverse { "yes" } else { "no" }
    );
    emit(&out)?;
    Ok(0)
}

struct SimulateArgs {
    file: PathBuf,
    policy: PolicyArg,
    threshold: f64,
    epsilon: f64,
    horizon: f64,
    step: f64,
    seed: u64,
    replications: usize,
    family: FamilyArg,
    start: Option<String>,
    out: PathBuf,
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let file = load(&args.file)?;
    let net = &file.net;
    let analysis = analyze_file(&file)?;
    if !analysis.report.satisfied {
        for diagnostic in &analysis.report.diagnostics {
            eprintln!("{diagnostic}");
        }
        return Err((
            EXIT_ASSUMPTION,
            "heavy-traffic conditions not satisfied".into(),
        ));
    }
    let rep = analysis
        .representation
        .as_ref()
        .expect("analysis with satisfied conditions carries a representation");
    let plan = &analysis.plan;

    let spec = StochasticSpec::new(args.family.into(), net.materials(), file.covariances())
        .map_err(netsim_failure)?;
    let cfg = SimConfig {
        horizon: args.horizon,
        step: args.step,
        epsilon: args.epsilon,
        seed: args.seed,
        replications: args.replications,
    };
    let start: Vec<f64> = match &args.start {
        Some(name) => file
            .vector(name)
            .map_err(|e| (1, e.to_string()))?
            .to_f64_vec(),
        None => vec![0.0; net.materials()],
    };

    let policy: Box<dyn Policy> = match args.policy {
        PolicyArg::Nominal => Box::new(NominalPolicy::from_plan(plan)),
        PolicyArg::Idle => Box::new(IdlePolicy::new(net.activities())),
        PolicyArg::BoundarySub => {
            Box::new(BoundarySubstitution::new(net, plan, args.threshold))
        }
    };

    let trajectory =
        netsim::simulate(net, plan, &spec, policy.as_ref(), &start, &cfg).map_err(netsim_failure)?;
    let scaled = netsim::scale_full(&trajectory, rep, &cfg, ScaleMode::Diffusion);
    let residual = netsim::workload_identity_check(net, &scaled, rep, &start);

    let policy_name = match args.policy {
        PolicyArg::Nominal => "nominal",
        PolicyArg::Idle => "idle",
        PolicyArg::BoundarySub => "boundary-sub",
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "network {}: {} steps of {}, scale {}, seed {}, policy {policy_name}",
        file.name,
        cfg.steps(),
        cfg.step,
        cfg.epsilon,
        cfg.seed
    );
    let last = trajectory
        .inventory
        .last()
        .expect("a trajectory has at least its initial state");
    let parts: Vec<String> = last.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "final inventory: {}", parts.join(" "));
    let _ = writeln!(out, "truncated steps: {}", trajectory.truncations.len());
    let _ = writeln!(out, "workload identity residual: {residual:e}");

    let tsv = netsim::export_tsv(&trajectory, rep);
    std::fs::write(&args.out, &tsv)
        .map_err(|e| (1, format!("cannot write {}: {e}", args.out.display())))?;
    let _ = writeln!(
        out,
        "trajectory written to {} ({} rows)",
        args.out.display(),
        trajectory.times.len()
    );

    if args.replications > 1 {
        let estimate = netsim::estimate_sigma(net, plan, &spec, &cfg).map_err(netsim_failure)?;
        let _ = writeln!(
            out,
            "noise covariance estimate over {} replications:",
            estimate.replications
        );
        push_float_matrix(&mut out, &estimate.estimate);
        let _ = writeln!(out, "standard errors:");
        push_float_matrix(&mut out, &estimate.standard_errors);
        let _ = writeln!(out, "model covariance:");
        push_float_matrix(&mut out, &netsim::sigma(net, plan, &spec));
    }
    emit(&out)?;
    Ok(0)
}

fn push_float_matrix(out: &mut String, matrix: &[Vec<f64>]) {
    for (i, row) in matrix.iter().enumerate() {
        let parts: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "  row {}: {}", i + 1, parts.join(" "));
    }
}
