use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use experiment::config::GraphConfig;
use experiment::{
    build_graph, exit_code, explain, parse_seeds, run_experiment, validate_suite, ExperimentConfig,
    Mode,
};
use mdp_pagerank::{value_via_pagerank_general, Error, EvalProblem, Result, Schedule, SparseChain};

#[derive(Parser)]
#[command(
    name = "mdp-pagerank",
    version,
    about = "Policy evaluation through PageRank, and solver benchmarks on the sticky random walk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the initial policy with every solver; or evaluate a chain file with --chain.
    Evaluate(EvaluateArgs),
    /// Run policy iteration with every solver as the evaluator.
    PolicyIter(ExperimentArgs),
    /// Compare every reduction against dense solves on random chains.
    Validate {
        #[arg(long, default_value_t = 50)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a generated graph as an edge list.
    GenGraph {
        #[arg(long, default_value = "grid")]
        graph: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Edges per new node for preferential attachment.
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Erdős–Rényi edge probability (default 2 ln n / n).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with [graph], [model] and [run] sections; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// grid, pa or er.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// uniform or distance.
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Repeatable; power, push-gs, push-prio, rlgl-maxc, rlgl-gsd, gauss-seidel, prioritized-sweeping, jacobi.
    #[arg(long = "solver")]
    solvers: Vec<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// "0..20", "7" or "1,4,9".
    #[arg(long)]
    seeds: Option<String>,
    /// evaluate or policy-iterate; defaults to the subcommand's mode.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the reduction certificate of the first seed's initial policy.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Chain file (`n m` header, then `src dst prob` lines) to evaluate instead of an experiment.
    #[arg(long, requires = "rewards")]
    chain: Option<PathBuf>,
    /// Whitespace-separated rewards, one per state of --chain.
    #[arg(long, requires = "chain")]
    rewards: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self, default_mode: Mode) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig {
                run: experiment::config::RunConfig {
                    mode: default_mode,
                    ..Default::default()
                },
                ..Default::default()
            },
        };
        if self.config.is_some() && self.mode.is_none() {
            c.run.mode = default_mode;
        }
        if let Some(g) = &self.graph {
            c.graph.kind = g.parse()?;
        }
        if let Some(n) = self.n {
            c.graph.n = n;
        }
        if let Some(r) = &self.reward {
            c.model.reward = r.parse()?;
        }
        if let Some(g) = self.gamma {
            c.model.gamma = g;
        }
        if let Some(k) = self.kappa {
            c.model.kappa = k;
        }
        if !self.solvers.is_empty() {
            c.run.solvers = self
                .solvers
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?;
        }
        if let Some(t) = self.tol {
            c.run.tol = t;
        }
        if let Some(s) = &self.seeds {
            c.run.seeds = parse_seeds(s)?;
        }
        if let Some(m) = &self.mode {
            c.run.mode = m.parse()?;
        }
        if let Some(r) = self.max_rounds {
            c.run.max_rounds = r;
        }
        if let Some(o) = &self.out {
            c.run.out = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

/// Returns the exit status: 0 done, 2 some solver hit a cap.
fn run_configured(args: &ExperimentArgs, default_mode: Mode) -> Result<u8> {
    let config = args.resolve(default_mode)?;
    if args.explain {
        print!("{}", explain(&config)?);
    }
    let report = run_experiment(&config)?;
    print!("{report}");
    if config.run.out.is_none() {
        log::info!("no --out given; CSV not written");
    }
    Ok(if report.any_capped() { 2 } else { 0 })
}

fn evaluate_chain(chain: &PathBuf, rewards: &PathBuf, args: &ExperimentArgs) -> Result<u8> {
    let p: SparseChain<f64> = SparseChain::read_from(BufReader::new(std::fs::File::open(chain)?))?;
    let text = std::fs::read_to_string(rewards)?;
    let r = text
        .split_whitespace()
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad reward '{x}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = args.gamma.unwrap_or(0.9);
    let tol = args.tol.unwrap_or(1e-10);
    let schedule = match args.solvers.first() {
        Some(name) => Schedule::all()
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "chain evaluation needs a PageRank schedule, got '{name}'"
                ))
            })?,
        None => Schedule::rlgl_gsd(),
    };
    let ev = value_via_pagerank_general(&EvalProblem::new(&p, gamma, r)?, schedule, tol)?;
    if args.explain {
        print!("{}", ev.certificate);
    }
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for x in &ev.value.v {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    eprintln!(
        "bellman residual (l1): {:.3e}, normalized iterations: {:.3}",
        ev.value.bellman_residual_l1, ev.stats.normalized_iterations
    );
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Evaluate(args) => match (&args.chain, &args.rewards) {
            (Some(chain), Some(rewards)) => evaluate_chain(chain, rewards, &args.experiment),
            _ => run_configured(&args.experiment, Mode::Evaluate),
        },
        Command::PolicyIter(args) => run_configured(&args, Mode::PolicyIterate),
        Command::Validate { max_n, seed } => {
            let report = validate_suite(max_n, seed);
            print!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::GenGraph {
            graph,
            n,
            m,
            p,
            seed,
            out,
        } => {
            let (g, note) = build_graph(
                &GraphConfig {
                    kind: graph.parse()?,
                    n,
                    m,
                    p,
                },
                seed,
            )?;
            if let Some(note) = note {
                eprintln!("{note}");
            }
            match out {
                Some(path) => g.write_to(BufWriter::new(std::fs::File::create(path)?))?,
                None => g.write_to(std::io::stdout().lock())?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
