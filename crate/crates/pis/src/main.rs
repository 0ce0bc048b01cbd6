//! Command-line front end. Exit codes: 0 deadlock-free (or clean),
//! 1 deadlock witness found, 2 compositional check inapplicable,
//! 3 state budget exceeded (verdict unknown), 4 invalid input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pis::composition::{ComposeError, DEFAULT_STATE_BUDGET};
use pis::dot::dot_comm_graph;
use pis::equivalence::{conforms, minimize};
use pis::generate;
use pis::scaling;
use pis::system::{PortRef, System};
use pis::text::{parse_system, render_protocol_lines, render_system};
use pis::topology::{comm_graph, Vertex};
use pis::verify::{check_theorem_with, cross_validate_with, Options, Verdict, VerifyError};

#[derive(Parser)]
#[command(
    name = "pis",
    version,
    about = "Deadlock-freedom checking for port-based interaction systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system file for modeling problems
    Validate { file: PathBuf },
    /// Decide deadlock freedom from protocol pairs alone
    Check {
        file: PathBuf,
        /// Also run the exhaustive global search and compare verdicts
        #[arg(long)]
        oracle: bool,
        /// Cap on states per composite (overrides PIS_BUDGET)
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Report per-port protocol conformance
    Conformance { file: PathBuf },
    /// Print the communication graph
    Graph {
        file: PathBuf,
        /// GraphViz output instead of the text summary
        #[arg(long)]
        dot: bool,
    },
    /// Minimize one port protocol and print it in the file format
    Minimize {
        file: PathBuf,
        /// The port, written `component.port`
        port: String,
    },
    /// Print a built-in system in the file format
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
    /// Measure pair-check cost against the component-pair baseline
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Two components handshaking in lockstep
    Ex1,
    /// A middle component serving n borders
    Star { n: usize },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// The star family, one CSV row per size
    Star {
        /// Comma-separated border counts
        #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
        n: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

fn load(path: &Path) -> Result<System, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(4);
        }
    };
    match parse_system(&text) {
        Ok(system) => Ok(system),
        Err(issues) => {
            for issue in issues {
                eprintln!("error: {issue}");
            }
            Err(4)
        }
    }
}

fn resolve_budget(flag: Option<usize>) -> Result<usize, u8> {
    if let Some(budget) = flag {
        return Ok(budget);
    }
    match std::env::var("PIS_BUDGET") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(budget) => Ok(budget),
            Err(_) => {
                eprintln!("error: PIS_BUDGET must be a number, got `{raw}`");
                Err(4)
            }
        },
        Err(_) => Ok(DEFAULT_STATE_BUDGET),
    }
}

fn report_verify_error(e: &VerifyError) -> u8 {
    eprintln!("error: {e}");
    match e {
        VerifyError::Compose(ComposeError::BudgetExceeded { .. }) => 3,
        _ => 4,
    }
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Check {
            file,
            oracle,
            budget,
        } => check(&file, oracle, budget),
        Command::Conformance { file } => conformance(&file),
        Command::Graph { file, dot } => graph(&file, dot),
        Command::Minimize { file, port } => minimize_port(&file, &port),
        Command::Gen { which } => gen(which),
        Command::Bench { which } => bench(which),
    }
}

fn validate(file: &Path) -> u8 {
    let system = match load(file) {
        Ok(system) => system,
        Err(code) => return code,
    };
    let findings = system.validate();
    if findings.is_empty() {
        println!("ok");
    }
    for finding in &findings {
        println!("{finding}");
    }
    0
}

fn check(file: &Path, oracle: bool, budget: Option<usize>) -> u8 {
    let system = match load(file) {
        Ok(system) => system,
        Err(code) => return code,
    };
    let budget = match resolve_budget(budget) {
        Ok(budget) => budget,
        Err(code) => return code,
    };
    let opts = Options {
        budget,
        ..Options::default()
    };
    if !oracle {
        return match check_theorem_with(&system, &opts) {
            Ok(verdict) => {
                println!("{verdict}");
                match verdict {
                    Verdict::Inapplicable { .. } => 2,
                    _ => 0,
                }
            }
            Err(e) => report_verify_error(&e),
        };
    }
    match cross_validate_with(&system, &opts) {
        Ok(report) => {
            println!("compositional: {}", report.theorem);
            match &report.oracle {
                Some(verdict) => println!("exhaustive: {verdict}"),
                None => println!("exhaustive: unknown (state budget exceeded)"),
            }
            if report.soundness_violation {
                println!(
                    "SOUNDNESS VIOLATION: the compositional check claims deadlock \
                     freedom but the exhaustive search found a witness"
                );
            }
            match (&report.theorem, &report.oracle) {
                (_, Some(Verdict::DeadlockWitness { .. })) => 1,
                (Verdict::DeadlockFreeByTheorem, _) | (_, Some(Verdict::DeadlockFreeByOracle)) => 0,
                (_, None) => 3,
                _ => 2,
            }
        }
        Err(e) => report_verify_error(&e),
    }
}

fn conformance(file: &Path) -> u8 {
    let system = match load(file) {
        Ok(system) => system,
        Err(code) => return code,
    };
    let width = system
        .ports()
        .map(|p| p.to_string().len())
        .max()
        .unwrap_or(4)
        .max("port".len());
    println!("{:width$}  states  minimized  tau-free  conforms", "port");
    for p in system.ports() {
        let protocol = system.protocol(p).expect("valid systems are complete");
        let reduced = minimize(protocol);
        let ok = conforms(&system, p).expect("valid systems answer conformance");
        println!(
            "{:width$}  {:>6}  {:>9}  {:>8}  {:>8}",
            p.to_string(),
            protocol.state_count(),
            reduced.state_count(),
            if reduced.is_tau_free() { "yes" } else { "no" },
            if ok { "yes" } else { "no" },
        );
    }
    0
}

fn graph(file: &Path, dot: bool) -> u8 {
    let system = match load(file) {
        Ok(system) => system,
        Err(code) => return code,
    };
    let graph = comm_graph(&system);
    if dot {
        print!("{}", dot_comm_graph(&graph));
        return 0;
    }
    let components = graph
        .vertices()
        .filter(|v| matches!(v, Vertex::Component(_)))
        .count();
    println!(
        "vertices: {} ({} components, {} ports)",
        graph.vertex_count(),
        components,
        graph.vertex_count() - components
    );
    println!("edges: {}", graph.edge_count());
    for (a, b) in graph.edges() {
        println!("{a} -- {b}");
    }
    println!(
        "tree-like: {}",
        if graph.is_tree_like() { "yes" } else { "no" }
    );
    for p in system.ports() {
        let peers = graph
            .port_connectivity(p)
            .expect("system ports are graph vertices");
        if peers > 1 {
            println!("port {p} has {peers} peer ports");
        }
    }
    0
}

fn minimize_port(file: &Path, port: &str) -> u8 {
    let system = match load(file) {
        Ok(system) => system,
        Err(code) => return code,
    };
    let Some((component, name)) = port.split_once('.') else {
        eprintln!("error: expected `component.port`, got `{port}`");
        return 4;
    };
    let port = PortRef::new(component, name);
    let Some(protocol) = system.protocol(&port) else {
        eprintln!("error: no protocol for port `{port}`");
        return 4;
    };
    print!("{}", render_protocol_lines(&port, &minimize(protocol)));
    0
}

fn gen(which: GenCommand) -> u8 {
    match which {
        GenCommand::Ex1 => {
            print!("{}", render_system(&generate::generate_ex1()));
            0
        }
        GenCommand::Star { n } => match generate::generate_star(n) {
            Ok(system) => {
                print!("{}", render_system(&system));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                4
            }
        },
    }
}

fn bench(which: BenchCommand) -> u8 {
    match which {
        BenchCommand::Star { n } => match scaling::bench_scaling(&n) {
            Ok(rows) => {
                print!("{}", scaling::to_csv(&rows));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                4
            }
        },
    }
}
