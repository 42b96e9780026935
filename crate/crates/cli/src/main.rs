use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use capres::admm::with_workers;
use capres::bounds::heuristic_policy;
use capres::io::{check_result, read_instance, write_history, write_instance};
use capres::model::{check_feasibility, generate_layered, generate_random, PriceStyle, RandomSpec, SourceStyle};
use capres::{Error, Instance64, ResultDocument, SolverConfig, Termination};

#[derive(Parser)]
#[command(name = "capres", version, about = "Capacity reservation for multi-scenario network flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Solve an instance and write the result.
    Solve(SolveArgs),
    /// Re-verify a result against its instance.
    Check {
        instance: PathBuf,
        result: PathBuf,
        /// Relative tolerance of every check.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Layered worst case for the per-scenario heuristic.
    Layered {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random graph, witness flows uniform on [0, 1].
    RandomContinuous(RandomArgs),
    /// Random graph, witness flows drawn from {0, 1/3, 2/3, 1}.
    RandomDiscrete(RandomArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Prices {
    Uniform,
    Ones,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge prices; defaults to uniform for continuous and ones for discrete.
    #[arg(long, value_enum)]
    prices: Option<Prices>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    mu: f64,
    #[arg(long, default_value_t = 1.8)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    eps_rel: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 10)]
    lb_every: usize,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Only compute the per-scenario heuristic and its uniform-price bound.
    #[arg(long)]
    heuristic_only: bool,
    #[arg(long)]
    history: Option<PathBuf>,
    /// Include the full flow matrix in the result.
    #[arg(long)]
    flows: bool,
}

const EXIT_ITERATION_LIMIT: u8 = 2;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate { kind } => generate(kind),
        Command::Solve(args) => solve(args),
        Command::Check { instance, result, tol } => check(&instance, &result, tol),
    }
}

fn generate(kind: GenerateKind) -> anyhow::Result<ExitCode> {
    let (instance, out): (Instance64, PathBuf) = match kind {
        GenerateKind::Layered { a, eps, out } => (generate_layered(a, eps)?, out),
        GenerateKind::RandomContinuous(args) => (random(&args, SourceStyle::Continuous, Prices::Uniform)?, args.out),
        GenerateKind::RandomDiscrete(args) => (random(&args, SourceStyle::Discrete, Prices::Ones)?, args.out),
    };
    write_instance(&out, &instance).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "n={} m={} K={}",
        instance.node_count(),
        instance.edge_count(),
        instance.scenario_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn random(args: &RandomArgs, sources: SourceStyle, default_prices: Prices) -> capres::Result<Instance64> {
    let prices = match args.prices.unwrap_or(default_prices) {
        Prices::Uniform => PriceStyle::Uniform,
        Prices::Ones => PriceStyle::Ones,
    };
    generate_random(&RandomSpec { nodes: args.n, edges: args.m, scenarios: args.k, sources, prices, seed: args.seed })
}

fn solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let instance: Instance64 =
        read_instance(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let config = SolverConfig {
        mu: args.mu,
        alpha: args.alpha,
        eps_rel: args.eps_rel,
        lb_every: args.lb_every,
        max_iters: args.max_iters,
        workers: args.workers,
        ..SolverConfig::default()
    };
    config.validate()?;

    let infeasible = with_workers(config.workers, || check_feasibility(&instance, config.simplex_tol))?.infeasible();
    if !infeasible.is_empty() {
        for k in &infeasible {
            eprintln!("scenario {} admits no feasible flow", k + 1);
        }
        bail!("{} of {} scenarios infeasible", infeasible.len(), instance.scenario_count());
    }

    if args.heuristic_only {
        let start = Instant::now();
        let heuristic = with_workers(config.workers, || heuristic_policy(&instance, config.simplex_tol))??;
        let doc = ResultDocument::from_heuristic(
            &instance,
            &heuristic,
            &config,
            args.flows,
            start.elapsed().as_secs_f64(),
        );
        doc.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
        println!("heuristic objective {} lower bound {}", doc.objective, doc.lower_bound);
        if let Some(path) = &args.history {
            write_history(path, &[])?;
        }
        return Ok(ExitCode::SUCCESS);
    }

    let report = match capres::solve(&instance, &config) {
        Err(Error::InfeasibleInstance(list)) => {
            for k in &list {
                eprintln!("scenario {} admits no feasible flow", k + 1);
            }
            bail!("{} of {} scenarios infeasible", list.len(), instance.scenario_count());
        }
        other => other?,
    };
    let doc = ResultDocument::from_report(&instance, &report, &config, args.flows);
    doc.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.history {
        write_history(path, &report.history).with_context(|| format!("writing {}", path.display()))?;
    }
    let gap = doc.rel_gap.map_or_else(|| "inf".to_string(), |g| format!("{g:.3e}"));
    println!(
        "{}: objective {} lower bound {} gap {gap} after {} iterations ({:.2} s)",
        report.termination.as_str(),
        doc.objective,
        doc.lower_bound,
        report.iterations,
        report.elapsed_s
    );
    Ok(match report.termination {
        Termination::Converged => ExitCode::SUCCESS,
        Termination::IterationLimit => ExitCode::from(EXIT_ITERATION_LIMIT),
    })
}

fn check(instance_path: &PathBuf, result_path: &PathBuf, tol: f64) -> anyhow::Result<ExitCode> {
    let instance: Instance64 =
        read_instance(instance_path).with_context(|| format!("reading {}", instance_path.display()))?;
    let doc = ResultDocument::read(result_path).with_context(|| format!("reading {}", result_path.display()))?;
    let report = check_result(&instance, &doc, tol)?;
    for item in &report.items {
        println!("{} {}: {}", if item.passed { "pass" } else { "FAIL" }, item.name, item.detail);
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        let n = report.failures().count();
        bail!("{n} check{} failed", if n == 1 { "" } else { "s" })
    }
}
