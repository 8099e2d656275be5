//! Builds sticky-walk instances per seed, runs every configured solver on them, and
//! collects residual traces and per-solver summaries.

use std::fmt;
use std::io::Write;

use mdp_pagerank::rng::derive_seed;
use mdp_pagerank::sticky_walk::{
    er_default_p, er_graph, evaluate_model, grid_center, grid_graph, pa_graph, policy_iteration,
    random_alpha, reward_model, Evaluator, PolicyOutcome, RewardKind, StickyWalkModel,
    UndirectedGraph,
};
use mdp_pagerank::{
    value_via_pagerank_general, Error, EvalProblem, ReductionCertificate, Result, Schedule,
    SolveStats,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GraphConfig, GraphKind, Mode, RewardSetting, Solver};

const GRAPH_TAG: u64 = 1;
const REWARD_TAG: u64 = 2;
const ALPHA_TAG: u64 = 3;

/// Grid width `round(√n)` and `⌈n/width⌉` rows.
pub fn grid_dims(n: usize) -> (usize, usize) {
    let w = ((n as f64).sqrt().round() as usize).max(1);
    (w, n.div_ceil(w))
}

/// Graph for one seed, with a note when the generator had to shrink it.
pub fn build_graph(g: &GraphConfig, seed: u64) -> Result<(UndirectedGraph, Option<String>)> {
    let gs = derive_seed(seed, GRAPH_TAG);
    match g.kind {
        GraphKind::Grid => {
            let (w, h) = grid_dims(g.n);
            Ok((grid_graph(w, h)?, None))
        }
        GraphKind::Pa => Ok((pa_graph(g.n, g.m, gs)?, None)),
        GraphKind::Er => {
            let sample = er_graph(g.n, g.p.unwrap_or_else(|| er_default_p(g.n)), gs)?;
            let note = (sample.graph.n() < g.n).then(|| {
                format!(
                    "seed {seed}: kept the largest component, {} of {} nodes",
                    sample.graph.n(),
                    g.n
                )
            });
            Ok((sample.graph, note))
        }
    }
}

/// The sticky-walk model for one seed, with its initial stickiness.
pub fn build_instance(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(StickyWalkModel<f64>, Option<String>)> {
    let (graph, note) = build_graph(&config.graph, seed)?;
    let n = graph.n();
    let kind = match config.model.reward {
        RewardSetting::Uniform => RewardKind::UniformRandom,
        RewardSetting::Distance => {
            let target = match config.graph.kind {
                GraphKind::Grid => {
                    let (w, h) = grid_dims(config.graph.n);
                    grid_center(w, h)
                }
                _ => graph.max_degree_node(),
            };
            RewardKind::DistanceToTarget(target)
        }
    };
    let beta = reward_model(&graph, kind, derive_seed(seed, REWARD_TAG))?;
    let [lo, hi] = config.model.alpha;
    let alpha = random_alpha(n, lo, hi, derive_seed(seed, ALPHA_TAG))?;
    Ok((
        StickyWalkModel::new(graph, alpha, beta, config.model.kappa, config.model.gamma)?,
        note,
    ))
}

/// One CSV row; columns appear in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub graph: &'static str,
    pub reward: &'static str,
    pub solver: &'static str,
    pub seed: u64,
    /// Policy-iteration round, or 0 for a single evaluation.
    pub round: usize,
    /// Cumulative over the rounds of a policy-iteration run.
    pub norm_iters: f64,
    pub residual_l1: f64,
    /// Mean value of the evaluation the row belongs to; NaN for a capped PageRank solve.
    pub avg_value: f64,
    /// Wall clock of the solves up to and including the row's round.
    pub wall_ms: f64,
}

/// Final state of one solver on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFinal {
    pub solver: &'static str,
    pub seed: u64,
    pub rounds: usize,
    pub norm_iters: f64,
    pub residual_l1: f64,
    pub avg_value: f64,
    pub wall_ms: f64,
    /// Hit an update cap, or (policy iteration) the round cap.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: &'static str,
    pub mean_norm_iters: f64,
    pub mean_residual_l1: f64,
    pub mean_avg_value: f64,
    pub mean_wall_ms: f64,
    pub mean_rounds: f64,
    pub capped_seeds: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<TraceRow>,
    /// Ordered by solver (config order), then seed.
    pub finals: Vec<RunFinal>,
    pub summaries: Vec<SolverSummary>,
    /// Largest `ℓ∞` gap between the final value vectors of two solvers on one seed.
    pub max_value_gap: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn any_capped(&self) -> bool {
        self.finals.iter().any(|f| f.capped)
    }

    /// Writes the trace rows with header `graph,reward,solver,seed,round,norm_iters,residual_l1,avg_value,wall_ms`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_of(&self, solver: &str) -> Option<&SolverSummary> {
        self.summaries.iter().find(|s| s.solver == solver)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<22} {:>10} {:>12} {:>14} {:>10} {:>7}  capped",
            "solver", "norm_iters", "residual_l1", "avg_value", "wall_ms", "rounds"
        )?;
        for s in &self.summaries {
            let capped = if s.capped_seeds.is_empty() {
                "-".to_string()
            } else {
                format!("CAPPED on seeds {:?}", s.capped_seeds)
            };
            writeln!(
                f,
                "{:<22} {:>10.3} {:>12.3e} {:>14.8} {:>10.1} {:>7.2}  {capped}",
                s.solver,
                s.mean_norm_iters,
                s.mean_residual_l1,
                s.mean_avg_value,
                s.mean_wall_ms,
                s.mean_rounds
            )?;
        }
        writeln!(
            f,
            "max value gap between solvers: {:.3e}",
            self.max_value_gap
        )?;
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        Ok(())
    }
}

struct SeedRun {
    rows: Vec<TraceRow>,
    last: RunFinal,
    values: Option<Vec<f64>>,
}

fn ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn trace_rows(base: &TraceRow, stats: &SolveStats, offset: f64, wall_before: f64) -> Vec<TraceRow> {
    stats
        .residual_trace
        .iter()
        .map(move |&(x, r)| TraceRow {
            norm_iters: offset + x,
            residual_l1: r,
            wall_ms: ms(wall_before + stats.wall_clock_ms),
            ..base.clone()
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn run_one(
    config: &ExperimentConfig,
    model: &StickyWalkModel<f64>,
    solver: Solver,
    seed: u64,
) -> Result<SeedRun> {
    let tol = config.run.tol;
    let mut base = TraceRow {
        graph: config.graph.kind.name(),
        reward: config.model.reward.name(),
        solver: solver.name(),
        seed,
        round: 0,
        norm_iters: 0.0,
        residual_l1: 0.0,
        avg_value: f64::NAN,
        wall_ms: 0.0,
    };
    match config.run.mode {
        Mode::Evaluate => {
            let (values, stats, capped) = match evaluate_model(model, solver.0, tol) {
                Ok((v, stats)) => (Some(v), stats, false),
                Err(Error::Convergence {
                    partial: Some(p), ..
                }) => {
                    // a capped Bellman solve returns values; a capped PageRank solve does not
                    let v = matches!(solver.0, Evaluator::Bellman(_)).then_some(p.iterate);
                    (v, p.stats, true)
                }
                Err(e) => return Err(e),
            };
            base.avg_value = values.as_ref().map_or(f64::NAN, |v| mean(v));
            let rows = trace_rows(&base, &stats, 0.0, 0.0);
            let last = RunFinal {
                solver: solver.name(),
                seed,
                rounds: 1,
                norm_iters: stats.normalized_iterations,
                residual_l1: stats.final_residual,
                avg_value: base.avg_value,
                wall_ms: ms(stats.wall_clock_ms),
                capped,
            };
            Ok(SeedRun { rows, last, values })
        }
        Mode::PolicyIterate => {
            let trajectory = policy_iteration(model, solver.0, tol, config.run.max_rounds);
            let mut rows = Vec::new();
            let (mut offset, mut wall) = (0.0, 0.0);
            for round in &trajectory.rounds {
                base.round = round.round;
                base.avg_value = round.average_value;
                rows.extend(trace_rows(&base, &round.stats, offset, wall));
                offset += round.stats.normalized_iterations;
                wall += round.stats.wall_clock_ms;
            }
            let capped = match trajectory.outcome {
                PolicyOutcome::Converged => false,
                PolicyOutcome::RoundCap => true,
                PolicyOutcome::Failed(Error::Convergence { partial, .. }) => {
                    if let Some(p) = partial {
                        base.round = trajectory.rounds.len();
                        base.avg_value = f64::NAN;
                        rows.extend(trace_rows(&base, &p.stats, offset, wall));
                        offset += p.stats.normalized_iterations;
                        wall += p.stats.wall_clock_ms;
                    }
                    true
                }
                PolicyOutcome::Failed(e) => return Err(e),
            };
            let last_round = trajectory.rounds.last();
            let last = RunFinal {
                solver: solver.name(),
                seed,
                rounds: trajectory.rounds.len(),
                norm_iters: offset,
                residual_l1: rows.last().map_or(f64::NAN, |r| r.residual_l1),
                avg_value: last_round.map_or(f64::NAN, |r| r.average_value),
                wall_ms: ms(wall),
                capped,
            };
            let values = if capped {
                None
            } else {
                last_round.map(|r| r.value.clone())
            };
            Ok(SeedRun { rows, last, values })
        }
    }
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<(Vec<SeedRun>, Option<String>, f64)> {
    let (model, note) = build_instance(config, seed)?;
    let runs = config
        .run
        .solvers
        .iter()
        .map(|&s| run_one(config, &model, s, seed))
        .collect::<Result<Vec<_>>>()?;
    let done: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.values.as_ref()).collect();
    let mut gap = 0.0f64;
    for (i, a) in done.iter().enumerate() {
        for b in &done[i + 1..] {
            gap = a
                .iter()
                .zip(b.iter())
                .fold(gap, |m, (x, y)| m.max((x - y).abs()));
        }
    }
    Ok((runs, note, gap))
}

/// Runs every solver on every seed (seeds in parallel) and writes the CSV to
/// `config.run.out` when set. Output is identical across runs apart from `wall_ms`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let per_seed = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<Vec<_>>>()?;
    let k = config.run.solvers.len();
    let mut by_solver: Vec<Vec<SeedRun>> = (0..k).map(|_| Vec::new()).collect();
    let mut notes = Vec::new();
    let mut max_value_gap = 0.0f64;
    for (runs, note, gap) in per_seed {
        notes.extend(note);
        max_value_gap = max_value_gap.max(gap);
        for (i, run) in runs.into_iter().enumerate() {
            by_solver[i].push(run);
        }
    }
    let mut rows = Vec::new();
    let mut finals = Vec::new();
    let mut summaries = Vec::new();
    for runs in by_solver {
        let lasts: Vec<RunFinal> = runs.iter().map(|r| r.last.clone()).collect();
        let pick = |f: fn(&RunFinal) -> f64| mean(&lasts.iter().map(f).collect::<Vec<_>>());
        summaries.push(SolverSummary {
            solver: lasts[0].solver,
            mean_norm_iters: pick(|r| r.norm_iters),
            mean_residual_l1: pick(|r| r.residual_l1),
            mean_avg_value: pick(|r| r.avg_value),
            mean_wall_ms: pick(|r| r.wall_ms),
            mean_rounds: pick(|r| r.rounds as f64),
            capped_seeds: lasts.iter().filter(|r| r.capped).map(|r| r.seed).collect(),
        });
        finals.extend(lasts);
        rows.extend(runs.into_iter().flat_map(|r| r.rows));
    }
    let report = ExperimentReport {
        rows,
        finals,
        summaries,
        max_value_gap,
        notes,
    };
    if let Some(path) = &config.run.out {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

/// Reduction certificate for the first seed's initial policy, from the class-by-class
/// PageRank evaluation with the first PageRank schedule in the config (RLGL-GSD if none).
pub fn explain(config: &ExperimentConfig) -> Result<ReductionCertificate> {
    config.validate()?;
    let (model, _) = build_instance(config, config.run.seeds[0])?;
    let schedule = config
        .run
        .solvers
        .iter()
        .find_map(|s| match s.0 {
            Evaluator::PageRank(sch) => Some(sch),
            Evaluator::Bellman(_) => None,
        })
        .unwrap_or_else(Schedule::rlgl_gsd);
    let (chain, reward) = model.build_chain()?;
    let problem = EvalProblem::new(&chain, model.gamma, reward)?;
    Ok(value_via_pagerank_general(&problem, schedule, config.run.tol)?.certificate)
}
