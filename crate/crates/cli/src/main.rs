//! Command-line front end for the diffusion LMS simulator.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use difflms::combiners::{validate, Rule};
use difflms::experiment::{reference_scenarios, run_experiment, ExperimentConfig, ExperimentError, ExperimentResult};
use difflms::graph::random_geometric_graph;
use difflms::{cost_report, Algorithm, Graph};

#[derive(Parser)]
#[command(
    name = "difflms",
    version,
    about = "Diffusion LMS simulator: ATC, CTA and serial-inspired SI-LMS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a key=value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the three reference scenarios and summarize SI-LMS vs ATC.
    Scenarios {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a combination matrix on a graph and check it.
    ValidateCombiner {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        rule: String,
        /// Also write the matrix as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the per-iteration extra cost of an algorithm relative to ATC.
    Cost {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        filter_length: usize,
    },
    /// Generate a connected random geometric graph as an edge list.
    GraphGen {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = difflms::experiment::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_config_error() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_graph(path: &Path) -> Result<Graph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Graph::parse_edge_list(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Creates `dir` if needed; its parent must already exist.
fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        return Ok(());
    }
    fs::create_dir(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_run(result: &ExperimentResult, dir: &Path, title: &str) -> Result<(), CliError> {
    result.write_to(dir)?;
    let names: Vec<&str> = result.config.algorithms.iter().map(|a| a.name()).collect();
    plot::plot_mse(dir, &names, title).map_err(runtime)
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| CliError::Usage(format!("config error: {e}")))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    ensure_dir(out)?;
    let result = run_experiment(&cfg)?;
    write_run(&result, out, "Network MSE")?;
    print!("{}", result.summary());
    Ok(())
}

fn cmd_scenarios(out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    ensure_dir(out)?;
    let mut summary = String::from(
        "scenario,atc_iterations,silms_iterations,reduction_percent,atc_steady_mse_db,silms_steady_mse_db\n",
    );
    for scenario in reference_scenarios() {
        let mut cfg = scenario.config;
        if let Some(seed) = seed {
            cfg.master_seed = seed;
        }
        let dir = out.join(scenario.name);
        ensure_dir(&dir)?;
        let result = run_experiment(&cfg)?;
        write_run(&result, &dir, scenario.name)?;

        let field = |alg: Algorithm| {
            let r = result.get(alg);
            (
                r.and_then(|r| r.iterations_to_threshold)
                    .map_or_else(|| "not_reached".to_string(), |i| i.to_string()),
                r.map_or_else(|| "nan".to_string(), |r| format!("{:.4}", r.steady_state_mse_db)),
            )
        };
        let (atc_it, atc_ss) = field(Algorithm::Atc);
        let (si_it, si_ss) = field(Algorithm::SiLms);
        let reduction = result
            .si_to_atc_ratio()
            .map_or_else(|| "nan".to_string(), |r| format!("{:.2}", 100.0 * (1.0 - r)));
        let line = format!("{},{atc_it},{si_it},{reduction},{atc_ss},{si_ss}\n", scenario.name);
        print!("{line}");
        summary.push_str(&line);
    }
    let path = out.join("summary.txt");
    fs::write(&path, summary).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_validate_combiner(graph: &Path, rule: &str, out: Option<&Path>) -> Result<(), CliError> {
    let rule: Rule = rule
        .parse()
        .map_err(|e: difflms::combiners::UnknownRule| CliError::Usage(e.to_string()))?;
    let graph = read_graph(graph)?;
    let m = rule.build(&graph);
    if let Some(out) = out {
        fs::write(out, m.to_csv()).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    }
    validate(&m, &graph).map_err(|v| CliError::Runtime(format!("invalid: {v}")))?;
    println!("rule={rule}");
    println!("n_nodes={}", graph.n_nodes());
    println!("row_stochastic=ok");
    println!("support=ok");
    let doubly = m
        .check_doubly_stochastic()
        .map_or_else(|v| format!("no ({v})"), |_| "yes".into());
    println!("doubly_stochastic={doubly}");
    println!("symmetric={}", if m.is_symmetric() { "yes" } else { "no" });
    Ok(())
}

fn cmd_cost(graph: &Path, algorithm: &str, m: usize) -> Result<(), CliError> {
    let algorithm: Algorithm = algorithm.parse().map_err(CliError::Usage)?;
    if m == 0 {
        return Err(CliError::Usage("filter-length must be at least 1".into()));
    }
    let graph = read_graph(graph)?;
    println!("algorithm={algorithm}");
    println!("filter_length={m}");
    print!("{}", cost_report(algorithm, &graph, m));
    Ok(())
}

fn cmd_graph_gen(nodes: usize, radius: f64, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let graph = random_geometric_graph(nodes, radius, seed).map_err(|e| match e {
        difflms::GraphError::ConnectivityRetriesExhausted(_) => runtime(e),
        other => CliError::Usage(other.to_string()),
    })?;
    match out {
        Some(path) => {
            fs::write(path, graph.to_edge_list()).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{}", graph.to_edge_list());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, seed } => cmd_run(config, out, *seed),
        Command::Scenarios { out, seed } => cmd_scenarios(out, *seed),
        Command::ValidateCombiner { graph, rule, out } => cmd_validate_combiner(graph, rule, out.as_deref()),
        Command::Cost {
            graph,
            algorithm,
            filter_length,
        } => cmd_cost(graph, algorithm, *filter_length),
        Command::GraphGen {
            nodes,
            radius,
            seed,
            out,
        } => cmd_graph_gen(*nodes, *radius, *seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) | CliError::Runtime(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.code())
        }
    }
}
