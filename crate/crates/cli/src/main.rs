//! `aptt`: run scenarios, convergence studies and conservation reports.

use std::path::PathBuf;
use std::process::ExitCode;

use aptt::harness::config::{read_entries, render, resolve, Entry};
use aptt::harness::study::STUDY_EPS;
use aptt::harness::{
    conservation_report, convergence_study, exit_code, run_scenario, RunDiagnostics, Scenario, StudySolver, EXIT_OK,
};
use aptt::{AptError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aptt", version, about = "Tensor-train solver for the Boltzmann-BGK equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write diagnostics, field dumps and a summary.
    Run(RunArgs),
    /// Grid-convergence study against a run on a twice finer grid.
    Convergence(ConvergenceArgs),
    /// Conservation drift summary of a diagnostics CSV.
    Conservation {
        /// Path to a diagnostics.csv written by `aptt run`.
        csv: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// trig, relaxation or discontinuous
    #[arg(long)]
    scenario: Option<String>,
    /// Spatial dimension D (1 to 3)
    #[arg(long)]
    dim: Option<String>,
    /// Grid points per axis
    #[arg(long)]
    m: Option<String>,
    /// Time step
    #[arg(long)]
    dt: Option<String>,
    /// Final time
    #[arg(long)]
    t_star: Option<String>,
    /// Knudsen number
    #[arg(long)]
    kn: Option<String>,
    /// Boltzmann number
    #[arg(long)]
    bo: Option<String>,
    /// Rounding tolerance for TT arithmetic
    #[arg(long)]
    eps_b: Option<String>,
    /// Residual tolerance of the linear solve
    #[arg(long)]
    eps_d: Option<String>,
    /// Artificial dissipation coefficient.
    #[arg(long)]
    dissipation: Option<String>,
    /// Step the dense reference alongside and record its relative error.
    #[arg(long)]
    compare_oracle: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Tt,
    Dense,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, default_value = "trig")]
    scenario: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Ascending grid sizes; the reference uses twice the largest.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    m_list: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    t_star: f64,
    #[arg(long, default_value_t = STUDY_EPS)]
    eps: f64,
    #[arg(long, value_enum, default_value = "tt")]
    solver: SolverArg,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => read_entries(p)?,
        None => Vec::new(),
    };
    let mut flags = Vec::new();
    for (key, value) in [
        ("scenario", &args.scenario),
        ("dim", &args.dim),
        ("m", &args.m),
        ("dt", &args.dt),
        ("t_star", &args.t_star),
        ("kn", &args.kn),
        ("bo", &args.bo),
        ("eps_b", &args.eps_b),
        ("eps_d", &args.eps_d),
        ("eps_diss", &args.dissipation),
    ] {
        if let Some(v) = value {
            flags.push(Entry::flag(key, v));
        }
    }
    if args.compare_oracle {
        flags.push(Entry::flag("compare_oracle", true));
    }
    let cfg = resolve(&file, &flags)?;
    if args.print_config {
        print!("{}", render(&cfg));
        return Ok(());
    }
    let report = run_scenario(&cfg, &args.out)?;
    println!(
        "{} steps to t={} in {:.2}s; worst conservation drift {:e}",
        report.steps,
        report.final_time,
        report.wall_s,
        report.conservation.worst()
    );
    if let Some(e) = report.max_oracle_error {
        println!("max relative error against dense reference: {e:e}");
    }
    if report.oscillation_warning {
        println!("warning: density total variation grew; see summary.txt");
    }
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn convergence(args: ConvergenceArgs) -> Result<()> {
    let scenario: Scenario = args.scenario.parse()?;
    let first = *args.m_list.first().ok_or_else(|| AptError::Config {
        field: "m_list".into(),
        message: "empty".into(),
    })?;
    let mut base = scenario.default_config(args.dim, first);
    base.t_star = args.t_star;
    base.eps_b = args.eps;
    base.eps_d = args.eps;
    let solver = match args.solver {
        SolverArg::Tt => StudySolver::Tt,
        SolverArg::Dense => StudySolver::Dense,
    };
    let table = convergence_study(scenario, &args.m_list, &base, solver)?;
    let text = table.render();
    print!("{text}");
    if let Some(p) = &args.out {
        std::fs::write(p, &text)?;
    }
    Ok(())
}

fn conservation(csv: PathBuf) -> Result<()> {
    let diag = RunDiagnostics::parse_csv(&std::fs::read_to_string(csv)?)?;
    print!("{}", conservation_report(&diag).render());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Convergence(a) => convergence(a),
        Command::Conservation { csv } => conservation(csv),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
