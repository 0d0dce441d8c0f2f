//! `emsr`: simulate resilient consensus under event-based communication.
//!
//! Subcommands: `simulate` (one scenario -> trace.csv + summary.json),
//! `robustness` ((r,s)-robustness of a graph), `bounds` (trigger-parameter
//! calculators), and `batch` (seeded Monte Carlo sweeps).
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime
//! error. `robustness` exits 4 when the checked property does not hold.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use emsr_cli::bundled::{bundled_scenario, resolve_graph_arg, GraphArgError};
use emsr_cli::output::write_atomic;
use emsr_cli::scenario_file::{load_scenario, parse_scenario, ScenarioFileError};
use emsr_core::bounds;
use emsr_core::engine::{run, run_batch, EngineError, Scenario};
use emsr_core::export::{batch_summary_to_json, summary_to_json, trace_to_csv};
use emsr_core::graph::GraphError;
use emsr_core::msr::ProtocolKind;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_NEGATIVE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "emsr",
    version,
    about = "Resilient consensus simulator with event-based communication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv + summary.json.
    Simulate {
        /// Scenario file path or bundled scenario name.
        #[arg(long)]
        scenario: String,
        /// Output directory for trace.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check (r,s)-robustness of a graph, or find its maximum r.
    Robustness {
        /// Graph: edge-list file path, bundled name (seven-node),
        /// `complete:<n>`, or `chain:<n>`.
        graph: String,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        /// Report the largest r such that the graph is (r,1)-robust.
        #[arg(long = "max-r")]
        max_r: bool,
        /// Node-count cap for the exhaustive check (default 12).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Closed-form trigger bounds: give --c to get c0_max, or --c0 to get c.
    Bounds {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        gamma: f64,
        /// Number of regular (non-malicious) nodes.
        #[arg(long)]
        n: usize,
        /// Target consensus error level.
        #[arg(long)]
        c: Option<f64>,
        /// Trigger offset.
        #[arg(long)]
        c0: Option<f64>,
    },
    /// Monte Carlo batch over a scenario template with uniform random
    /// initial states; writes batch_summary.json.
    Batch {
        /// Template scenario (must set stop_on_error_below).
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        runs: usize,
        #[arg(long = "init-lo", default_value_t = 0.0)]
        init_lo: f64,
        #[arg(long = "init-hi", default_value_t = 100.0)]
        init_hi: f64,
        /// Base seed; run i uses seed + i. Defaults to the template's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Simulate { scenario, out, seed } => cmd_simulate(&scenario, &out, seed),
        Command::Robustness { graph, r, s, max_r, cap } => cmd_robustness(&graph, r, s, max_r, cap),
        Command::Bounds { protocol, gamma, n, c, c0 } => cmd_bounds(&protocol, gamma, n, c, c0),
        Command::Batch { scenario, runs, init_lo, init_hi, seed, out } => {
            cmd_batch(&scenario, runs, init_lo, init_hi, seed, &out)
        }
    };
    ExitCode::from(code)
}

fn load_scenario_arg(arg: &str) -> Result<Scenario, ScenarioFileError> {
    match bundled_scenario(arg) {
        Some(text) => parse_scenario(text, None),
        None => load_scenario(Path::new(arg)),
    }
}

fn scenario_exit(err: &ScenarioFileError) -> u8 {
    // Everything that goes wrong while loading is an input problem.
    let _ = err;
    EXIT_VALIDATION
}

fn engine_exit(err: &EngineError) -> u8 {
    match err {
        EngineError::Scenario(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn cmd_simulate(scenario_arg: &str, out: &Path, seed: Option<u64>) -> u8 {
    let mut scenario = match load_scenario_arg(scenario_arg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return scenario_exit(&e);
        }
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let (trace, summary) = match run(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return engine_exit(&e);
        }
    };
    if let Err(e) = write_atomic(out, "trace.csv", &trace_to_csv(&trace))
        .and_then(|()| write_atomic(out, "summary.json", &summary_to_json(&summary)))
    {
        eprintln!("error: cannot write outputs to {}: {e}", out.display());
        return EXIT_RUNTIME;
    }
    println!(
        "steps: {}{}",
        summary.steps_executed,
        if summary.truncated { " (stopped early at the error threshold)" } else { "" }
    );
    println!("final consensus error: {:e}", summary.final_consensus_error);
    println!("total triggers (regular nodes): {}", summary.total_triggers);
    println!(
        "mean triggers per regular node: {}",
        summary.mean_triggers_per_regular_node
    );
    println!("safety interval: [{}, {}]", summary.safety_interval[0], summary.safety_interval[1]);
    println!("safety ok: {}", summary.safety_ok);
    println!("wrote {} and {}", out.join("trace.csv").display(), out.join("summary.json").display());
    if summary.safety_ok {
        EXIT_OK
    } else {
        eprintln!("error: a regular node left the safety interval");
        EXIT_RUNTIME
    }
}

fn graph_arg_exit(err: &GraphArgError) -> u8 {
    match err {
        GraphArgError::Graph(GraphError::SizeCapExceeded { .. }) => EXIT_RUNTIME,
        GraphArgError::BadCount(_) => EXIT_USAGE,
        _ => EXIT_VALIDATION,
    }
}

fn cmd_robustness(
    graph_arg: &str,
    r: Option<usize>,
    s: Option<usize>,
    max_r: bool,
    cap: Option<usize>,
) -> u8 {
    let graph = match resolve_graph_arg(graph_arg) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return graph_arg_exit(&e);
        }
    };
    let cap = cap.unwrap_or(emsr_core::graph::DEFAULT_EXHAUSTIVE_CAP);
    match (r, s, max_r) {
        (Some(r), Some(s), false) => match graph.is_rs_robust_with_cap(r, s, cap) {
            Ok(verdict) => {
                println!("({r},{s}) -> {verdict}");
                if verdict {
                    EXIT_OK
                } else {
                    EXIT_NEGATIVE
                }
            }
            Err(e @ GraphError::SizeCapExceeded { .. }) => {
                eprintln!("error: {e}; raise --cap to force the enumeration");
                EXIT_RUNTIME
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        (None, None, true) => match graph.max_r_robustness_with_cap(cap) {
            Ok(r) => {
                println!("max-r -> {r}");
                EXIT_OK
            }
            Err(e @ GraphError::SizeCapExceeded { .. }) => {
                eprintln!("error: {e}; raise --cap to force the enumeration");
                EXIT_RUNTIME
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        _ => {
            eprintln!("error: pass either --r and --s, or --max-r");
            EXIT_USAGE
        }
    }
}

fn cmd_bounds(protocol: &str, gamma: f64, n: usize, c: Option<f64>, c0: Option<f64>) -> u8 {
    let protocol: ProtocolKind = match protocol.parse() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match (c, c0) {
        (Some(c), None) => {
            let value = match protocol {
                ProtocolKind::P1 => bounds::c0_max_p1(gamma, n, c),
                ProtocolKind::P1B => bounds::c0_max_p1b(gamma, n, c),
                ProtocolKind::P2 => bounds::c0_max_p2(gamma, n, c),
            };
            value.map(|v| ("c0_max", v))
        }
        (None, Some(c0)) => bounds::c_from_c0(protocol, gamma, n, c0).map(|v| ("c", v)),
        _ => {
            eprintln!("error: pass exactly one of --c or --c0");
            return EXIT_USAGE;
        }
    };
    match result {
        Ok((name, value)) => {
            println!("{name} = {value:.5e}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn cmd_batch(
    scenario_arg: &str,
    runs: usize,
    init_lo: f64,
    init_hi: f64,
    seed: Option<u64>,
    out: &Path,
) -> u8 {
    let template = match load_scenario_arg(scenario_arg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return scenario_exit(&e);
        }
    };
    let base_seed = seed.unwrap_or(template.seed);
    let summary = match run_batch(&template, runs, init_lo, init_hi, base_seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return engine_exit(&e);
        }
    };
    if let Err(e) = write_atomic(out, "batch_summary.json", &batch_summary_to_json(&summary)) {
        eprintln!("error: cannot write outputs to {}: {e}", out.display());
        return EXIT_RUNTIME;
    }
    println!(
        "runs: {} (base seed {}), init range [{}, {}]",
        summary.runs, summary.base_seed, summary.init_lo, summary.init_hi
    );
    println!(
        "triggers per regular node: mean {} (min {}, max {})",
        summary.triggers_mean, summary.triggers_min, summary.triggers_max
    );
    println!(
        "steps to error <= {}: mean {} (min {}, max {})",
        summary.threshold, summary.steps_mean, summary.steps_min, summary.steps_max
    );
    println!(
        "runs that reached the threshold: {}/{}",
        summary.runs_reached_threshold, summary.runs
    );
    println!("wrote {}", out.join("batch_summary.json").display());
    EXIT_OK
}
