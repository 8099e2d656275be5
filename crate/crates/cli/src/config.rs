//! Experiment configuration: a TOML file with `[graph]`, `[model]` and `[run]` sections,
//! each key overridable from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mdp_pagerank::sticky_walk::{Evaluator, ALPHA_MAX};
use mdp_pagerank::{BellmanSolver, Error, Result, Schedule};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Grid,
    Pa,
    Er,
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Grid => "grid",
            GraphKind::Pa => "pa",
            GraphKind::Er => "er",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardSetting {
    /// `β ~ Unif[0, 1)`.
    Uniform,
    /// `β = 1/(distance + 1)` to the grid centre, or to a highest-degree node otherwise.
    Distance,
}

impl RewardSetting {
    pub fn name(&self) -> &'static str {
        match self {
            RewardSetting::Uniform => "uniform",
            RewardSetting::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Evaluate,
    PolicyIterate,
}

/// A named evaluator: one of the five PageRank schedules or the three Bellman baselines.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "String")]
pub struct Solver(pub Evaluator);

impl Solver {
    pub const NAMES: [&'static str; 8] = [
        "power",
        "push-gs",
        "push-prio",
        "rlgl-maxc",
        "rlgl-gsd",
        "gauss-seidel",
        "prioritized-sweeping",
        "jacobi",
    ];

    pub fn name(&self) -> &'static str {
        self.0.name()
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pagerank = Schedule::all()
            .into_iter()
            .find(|sch| sch.name() == s)
            .map(Evaluator::PageRank);
        let bellman = [
            BellmanSolver::GaussSeidel,
            BellmanSolver::PrioritizedSweeping,
            BellmanSolver::Jacobi,
        ]
        .into_iter()
        .find(|b| b.name() == s)
        .map(Evaluator::Bellman);
        pagerank.or(bellman).map(Solver).ok_or_else(|| {
            Error::Domain(format!(
                "unknown solver '{s}' (expected one of {})",
                Solver::NAMES.join(", ")
            ))
        })
    }
}

impl TryFrom<String> for Solver {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// Requested node count. Grids use width `round(√n)` and `⌈n/width⌉` rows; ER graphs
    /// keep only their largest component.
    pub n: usize,
    /// Edges attached per new node in preferential attachment.
    pub m: usize,
    /// ER edge probability; `2 ln n / n` when absent.
    pub p: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            kind: GraphKind::Grid,
            n: 10_000,
            m: 3,
            p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub reward: RewardSetting,
    pub gamma: f64,
    pub kappa: f64,
    /// Initial stickiness is drawn uniformly from `[alpha[0], alpha[1])`.
    pub alpha: [f64; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            reward: RewardSetting::Uniform,
            gamma: 0.9,
            kappa: 0.1,
            alpha: [0.1, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub solvers: Vec<Solver>,
    pub tol: f64,
    pub seeds: Vec<u64>,
    /// Evaluations per policy-iteration run.
    pub max_rounds: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solvers = [
            "gauss-seidel",
            "prioritized-sweeping",
            "rlgl-maxc",
            "rlgl-gsd",
        ]
        .map(|s| s.parse().unwrap())
        .to_vec();
        RunConfig {
            mode: Mode::Evaluate,
            solvers,
            tol: 1e-10,
            seeds: (0..20).collect(),
            max_rounds: 30,
            out: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub model: ModelConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Domain(format!("bad config: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        let (g, m, r) = (&self.graph, &self.model, &self.run);
        if g.n < 2 {
            return fail(format!("graph needs at least 2 nodes, got {}", g.n));
        }
        if g.kind == GraphKind::Pa && g.m == 0 {
            return fail("preferential attachment needs m >= 1".into());
        }
        if let Some(p) = g.p {
            if !(p > 0.0 && p < 1.0) {
                return fail(format!("edge probability {p} outside (0, 1)"));
            }
        }
        if !(m.gamma >= 0.0 && m.gamma < 1.0) {
            return fail(format!("gamma {} outside [0, 1)", m.gamma));
        }
        if !(m.kappa >= 0.0 && m.kappa.is_finite()) {
            return fail(format!("kappa {} must be finite and nonnegative", m.kappa));
        }
        let [lo, hi] = m.alpha;
        if !(0.0 <= lo && lo <= hi && hi <= ALPHA_MAX) {
            return fail(format!(
                "alpha range [{lo}, {hi}] must lie within [0, {ALPHA_MAX}]"
            ));
        }
        if !(r.tol > 0.0) {
            return fail(format!("tolerance {} must be positive", r.tol));
        }
        if r.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if r.solvers.is_empty() {
            return fail("at least one solver is required".into());
        }
        if r.max_rounds == 0 {
            return fail("max_rounds must be positive".into());
        }
        Ok(())
    }
}

/// Parses `"0..20"`, `"3"` or `"1,4,9"`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Domain(format!("bad seed list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect()
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(GraphKind::Grid),
            "pa" => Ok(GraphKind::Pa),
            "er" => Ok(GraphKind::Er),
            _ => Err(Error::Domain(format!(
                "unknown graph kind '{s}' (grid, pa, er)"
            ))),
        }
    }
}

impl FromStr for RewardSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(RewardSetting::Uniform),
            "distance" => Ok(RewardSetting::Distance),
            _ => Err(Error::Domain(format!(
                "unknown reward '{s}' (uniform, distance)"
            ))),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evaluate" => Ok(Mode::Evaluate),
            "policy-iterate" => Ok(Mode::PolicyIterate),
            _ => Err(Error::Domain(format!(
                "unknown mode '{s}' (evaluate, policy-iterate)"
            ))),
        }
    }
}
