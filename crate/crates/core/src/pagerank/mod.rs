//! PageRank solvers for `w = c·wM + (1 − c)·u` with `M` sparse and row sums `<= 1`.
//!
//! Every schedule is a residual-push method on the row system `x (I − cM) = b`; they
//! differ only in which state is pushed next. Power iteration pushes all states at once.
//! Priorities always use the raw residual `|r(s)|`; residual weights `ω` (see
//! [`SolveOptions::weighted`]) only change the stopping norm.

mod push;
mod stats;

pub use push::PushWorkspace;
pub(crate) use stats::CostMeter;
pub use stats::SolveStats;

use rand::Rng;

use crate::chain::{row_sum_tol, Distribution, SparseChain};
use crate::error::{Error, PartialSolve, Result};
use crate::priority::StateQueue;
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Order in which residual mass is pushed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Synchronous sweeps; iterate `k` equals the Neumann series truncated at `k` terms.
    PowerIteration,
    /// Push states `0..n` in index order, repeatedly.
    GaussSeidelCyclic,
    /// Always push the state with the largest `|r(s)|`.
    PrioritizedMaxResidual,
    /// Threshold ladder `θ_m = θ₀·βᵐ` with `θ₀ = ‖b‖∞`; each batch pushes the states with
    /// `|r(s)| > θ_m` in decreasing `|r(s)|`.
    RlglMaxC { beta: f64 },
    /// As [`Schedule::RlglMaxC`] with batches ordered by `|r(s)| / outdeg(s)`.
    RlglGsd { beta: f64 },
}

impl Schedule {
    pub const DEFAULT_BETA: f64 = 0.5;

    pub fn rlgl_maxc() -> Self {
        Schedule::RlglMaxC {
            beta: Self::DEFAULT_BETA,
        }
    }

    pub fn rlgl_gsd() -> Self {
        Schedule::RlglGsd {
            beta: Self::DEFAULT_BETA,
        }
    }

    /// All five schedules with default parameters.
    pub fn all() -> [Schedule; 5] {
        [
            Schedule::PowerIteration,
            Schedule::GaussSeidelCyclic,
            Schedule::PrioritizedMaxResidual,
            Schedule::rlgl_maxc(),
            Schedule::rlgl_gsd(),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Schedule::PowerIteration => "power",
            Schedule::GaussSeidelCyclic => "push-gs",
            Schedule::PrioritizedMaxResidual => "push-prio",
            Schedule::RlglMaxC { .. } => "rlgl-maxc",
            Schedule::RlglGsd { .. } => "rlgl-gsd",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Schedule::RlglMaxC { beta } | Schedule::RlglGsd { beta }
                if !(beta > 0.0 && beta < 1.0) =>
            {
                Err(Error::domain(format!(
                    "threshold decay {beta} outside (0, 1)"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Stopping rule and budget of a solve.
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Target for `Σ ω(s) |r(s)|`.
    pub tol: T,
    /// Per-state residual weights `ω`; unit weights (plain ℓ1) when absent.
    pub weights: Option<Vec<T>>,
    /// Coordinate-update cap; `10⁴ · n` when absent.
    pub max_updates: Option<u64>,
}

impl<T: Scalar> SolveOptions<T> {
    pub fn new(tol: T) -> Self {
        SolveOptions {
            tol,
            weights: None,
            max_updates: None,
        }
    }

    pub fn weighted(tol: T, weights: Vec<T>) -> Self {
        SolveOptions {
            tol,
            weights: Some(weights),
            max_updates: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PageRankProblem<'a, T> {
    pub matrix: &'a SparseChain<T>,
    pub c: T,
    pub restart: Distribution<T>,
}

impl<'a, T: Scalar> PageRankProblem<'a, T> {
    pub fn new(matrix: &'a SparseChain<T>, c: T, restart: Distribution<T>) -> Result<Self> {
        let problem = PageRankProblem { matrix, c, restart };
        problem.validate()?;
        Ok(problem)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c >= T::zero() && self.c < T::one()) {
            return Err(Error::domain(format!(
                "teleportation parameter {} outside [0, 1)",
                self.c
            )));
        }
        if self.restart.len() != self.matrix.n() {
            return Err(Error::domain(
                "restart distribution length does not match the matrix",
            ));
        }
        if !self.restart.is_probability() {
            return Err(Error::domain(
                "restart vector is not a probability distribution",
            ));
        }
        if self.matrix.max_row_sum() > T::one() + row_sum_tol::<T>() {
            return Err(Error::domain("matrix has a row sum above one"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PageRankSolution<T> {
    pub w: Vec<T>,
    pub stats: SolveStats,
}

/// Solves the PageRank equation to `‖w − c·wM − (1 − c)u‖₁ <= tol`.
pub fn solve_pagerank<T: Scalar>(
    problem: &PageRankProblem<'_, T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankSolution<T>> {
    problem.validate()?;
    let scale = T::one() - problem.c;
    let rhs = problem.restart.iter().map(|&u| scale * u).collect();
    let (w, stats) = solve_linear_row(
        problem.matrix,
        problem.c,
        rhs,
        schedule,
        &SolveOptions::new(tol),
    )?;
    Ok(PageRankSolution { w, stats })
}

/// Solves `x (I − cM) = rhs` for an arbitrary real right-hand side.
///
/// Stops when the weighted residual `Σ ω(s) |rhs − x(I − cM)|(s)`, recomputed from
/// scratch, is at most `opts.tol`.
pub fn solve_linear_row<T: Scalar>(
    matrix: &SparseChain<T>,
    c: T,
    rhs: Vec<T>,
    schedule: Schedule,
    opts: &SolveOptions<T>,
) -> Result<(Vec<T>, SolveStats)> {
    schedule.validate()?;
    let n = matrix.n();
    if rhs.len() != n {
        return Err(Error::domain(
            "right-hand side length does not match the matrix",
        ));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if let Some(w) = &opts.weights {
        if w.len() != n || w.iter().any(|&x| !(x >= T::zero())) {
            return Err(Error::domain(
                "residual weights must be nonnegative, one per state",
            ));
        }
    }
    let cap = opts.max_updates.unwrap_or(10_000 * n.max(1) as u64);
    let mut ws = PushWorkspace::with_weights(matrix, c, rhs, opts.weights.clone());
    let theta0 = ws.residual().iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let mut meter = CostMeter::new(matrix.nnz(), ws.residual_norm().as_f64());
    let mut driver = Driver {
        ws: &mut ws,
        meter: &mut meter,
        tol: opts.tol,
        cap,
    };
    let outcome = match schedule {
        Schedule::PowerIteration => driver.power(),
        Schedule::GaussSeidelCyclic => driver.cyclic(),
        Schedule::PrioritizedMaxResidual => driver.prioritized(),
        Schedule::RlglMaxC { beta } => driver.rlgl(theta0, T::lit(beta), false),
        Schedule::RlglGsd { beta } => driver.rlgl(theta0, T::lit(beta), true),
    };
    let residual = ws.residual_norm().as_f64();
    let stats = meter.finish(residual);
    match outcome {
        Ok(()) => Ok((ws.into_approximation(), stats)),
        Err(()) => Err(Error::Convergence {
            routine: "pagerank solve",
            iterations: stats.coordinate_updates,
            residual,
            partial: Some(Box::new(PartialSolve {
                iterate: ws.approximation().iter().map(|x| x.as_f64()).collect(),
                stats,
            })),
        }),
    }
}

struct Driver<'w, 'a, T> {
    ws: &'w mut PushWorkspace<'a, T>,
    meter: &'w mut CostMeter,
    tol: T,
    cap: u64,
}

impl<T: Scalar> Driver<'_, '_, T> {
    /// Confirms convergence against a freshly recomputed residual.
    fn converged(&mut self) -> bool {
        if self.ws.residual_norm() > self.tol {
            return false;
        }
        self.ws.resync();
        self.ws.residual_norm() <= self.tol
    }

    fn capped(&self) -> bool {
        self.meter.updates() >= self.cap
    }

    #[inline]
    fn push(&mut self, s: usize) {
        let edges = self.ws.push(s);
        self.meter.update(edges, self.ws.residual_norm().as_f64());
    }

    fn power(&mut self) -> Result<(), ()> {
        while !self.converged() {
            if self.capped() {
                return Err(());
            }
            let (pushed, edges) = self.ws.push_all_synchronous();
            self.meter.bulk_updates(pushed);
            self.meter
                .add_edges(edges, self.ws.residual_norm().as_f64());
        }
        Ok(())
    }

    fn cyclic(&mut self) -> Result<(), ()> {
        let n = self.ws.matrix().n();
        while !self.converged() {
            for s in 0..n {
                if self.ws.residual()[s] != T::zero() {
                    self.push(s);
                }
            }
            self.ws.refresh_norm();
            if self.capped() {
                return if self.converged() { Ok(()) } else { Err(()) };
            }
        }
        Ok(())
    }

    fn prioritized(&mut self) -> Result<(), ()> {
        let n = self.ws.matrix().n();
        let mut queue = StateQueue::new(n);
        loop {
            queue.clear();
            for s in 0..n {
                queue.set(s, self.ws.residual()[s].abs().as_f64());
            }
            let mut since_refresh = 0usize;
            while self.ws.residual_norm() > self.tol {
                if self.capped() {
                    return if self.converged() { Ok(()) } else { Err(()) };
                }
                let Some(s) = queue.pop() else { break };
                self.push(s);
                let (targets, _) = self.ws.matrix().row(s);
                for &t in targets {
                    queue.set(t, self.ws.residual()[t].abs().as_f64());
                }
                since_refresh += 1;
                if since_refresh >= n {
                    self.ws.refresh_norm();
                    since_refresh = 0;
                }
            }
            if self.converged() {
                return Ok(());
            }
        }
    }

    fn rlgl(&mut self, theta0: T, beta: T, by_degree: bool) -> Result<(), ()> {
        let n = self.ws.matrix().n();
        let mut theta = theta0;
        let mut green: Vec<(f64, usize)> = Vec::new();
        while !self.converged() {
            green.clear();
            for s in 0..n {
                let r = self.ws.residual()[s].abs();
                if r > theta {
                    let deg = self.ws.matrix().out_degree(s).max(1);
                    let prio = if by_degree { r / T::from_count(deg) } else { r };
                    green.push((prio.as_f64(), s));
                }
            }
            if green.is_empty() {
                theta *= beta;
                if theta == T::zero() {
                    return Err(());
                }
                continue;
            }
            green.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, s) in &green {
                if self.ws.residual()[s].abs() > theta {
                    self.push(s);
                }
            }
            self.ws.refresh_norm();
            if self.capped() {
                return if self.converged() { Ok(()) } else { Err(()) };
            }
        }
        Ok(())
    }
}

/// Monte-Carlo PageRank: the empirical law of `X_J` with `X₀ ~ u`, `X` moving by the
/// matrix and `J ~ Geometric(1 − c)` on `{0, 1, ...}`.
pub fn mc_pagerank<T: Scalar>(
    problem: &PageRankProblem<'_, T>,
    samples: u64,
    seed: u64,
) -> Result<Distribution<T>> {
    problem.validate()?;
    if !problem.matrix.is_stochastic() {
        return Err(Error::domain(
            "Monte-Carlo PageRank requires a stochastic matrix",
        ));
    }
    if samples == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    let n = problem.matrix.n();
    let c = problem.c.as_f64();
    let restart_cdf = cumulative(problem.restart.iter().map(|x| x.as_f64()));
    let mut rng = seeded(seed);
    let mut counts = vec![0u64; n];
    for _ in 0..samples {
        let mut x = sample_cdf(&restart_cdf, rng.random::<f64>());
        while rng.random::<f64>() < c {
            x = sample_row(problem.matrix, x, rng.random::<f64>());
        }
        counts[x] += 1;
    }
    let total = T::from_count(samples as usize);
    Ok(Distribution::from_vec_unchecked(
        counts
            .into_iter()
            .map(|k| T::from_count(k as usize) / total)
            .collect(),
    ))
}

pub(crate) fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

pub(crate) fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap();
    let target = u * total;
    cdf.partition_point(|&x| x <= target).min(cdf.len() - 1)
}

/// Draws the successor of `s`; `u` uniform on `[0, 1)`.
pub(crate) fn sample_row<T: Scalar>(m: &SparseChain<T>, s: usize, u: f64) -> usize {
    let (targets, probs) = m.row(s);
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let mut acc = 0.0;
    let target = u * total;
    for (&t, p) in targets.iter().zip(probs) {
        acc += p.as_f64();
        if target < acc {
            return t;
        }
    }
    *targets.last().expect("stochastic row is nonempty")
}
