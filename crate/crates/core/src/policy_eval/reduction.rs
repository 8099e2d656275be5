//! Value functions as rescaled PageRank vectors.
//!
//! Every class-level solve has the same shape. For a system `(I − γQ)x = b` with
//! `b >= 0`, positive weights `d` (the stationary law of a recurrent class, or the
//! quasi-stationary law of a transient one) and `M = (1/λ) D⁻¹QᵀD`, the vector
//! `w = (1 − γλ)/⟨b⟩_d · xᵀD` is the PageRank of `M` with teleportation `γλ` and restart
//! `u = b⊙d/⟨b⟩_d`. The Bellman residual of `x` is the PageRank residual weighted by
//! `⟨b⟩_d / ((1 − γλ) d)`, which is what the PageRank solve is stopped on.

use std::fmt;

use super::{EvalProblem, ValueFunction};
use crate::chain::{Distribution, SparseChain};
use crate::classes::{scc_decompose, ClassKind};
use crate::error::{Error, Result};
use crate::markov::{
    quasi_stationary_with, reversed_doob, stationary_distribution_with, time_reversal,
    SpectralOptions,
};
use crate::pagerank::{solve_linear_row, Schedule, SolveOptions, SolveStats};
use crate::scalar::{dot, norm_l1, Scalar};

/// How a class was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMethod {
    PageRank,
    /// Single state: `v = b / (1 − γq)` with `q` its self-loop probability.
    ScalarSelfLoop,
    /// Effective reward identically zero, so the class value is zero.
    ZeroReward,
}

/// Per-class account of a reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRecord {
    pub class_id: usize,
    pub kind: ClassKind,
    pub size: usize,
    pub method: ReductionMethod,
    /// Perron value of the class block; one for recurrent classes.
    pub lambda: f64,
    /// `γ` for recurrent classes, `γλ` for transient ones.
    pub teleportation: f64,
    pub restart: Vec<f64>,
    /// `⟨b⟩_d / (1 − teleportation)` of the shifted reward.
    pub scaling: f64,
    /// Constant added to the class reward to make it nonnegative.
    pub shift: f64,
    /// The chain satisfied detailed balance, so it served as its own time reversal.
    pub reversal_skipped: bool,
    /// ℓ1 Bellman residual of the class equations.
    pub residual_l1: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReductionCertificate {
    pub records: Vec<ClassRecord>,
}

impl fmt::Display for ReductionCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reduction certificate: {} class(es)", self.records.len())?;
        for r in &self.records {
            let kind = match r.kind {
                ClassKind::Transient => "transient",
                ClassKind::Recurrent => "recurrent",
            };
            let method = match r.method {
                ReductionMethod::PageRank => "pagerank",
                ReductionMethod::ScalarSelfLoop => "scalar",
                ReductionMethod::ZeroReward => "zero-reward (skipped)",
            };
            writeln!(
                f,
                "  class {:>3}: {kind:<9} size {:>6}  method {method:<8}  lambda {:.12}  teleportation {:.12}  scaling {:.6e}  shift {:.6e}  reversal {}  residual {:.3e}",
                r.class_id,
                r.size,
                r.lambda,
                r.teleportation,
                r.scaling,
                r.shift,
                if r.reversal_skipped { "skipped (reversible)" } else { "computed" },
                r.residual_l1,
            )?;
        }
        Ok(())
    }
}

/// Result of a PageRank-based evaluation.
#[derive(Debug, Clone)]
pub struct PageRankEvaluation<T> {
    pub value: ValueFunction<T>,
    pub certificate: ReductionCertificate,
    /// Combined work of the PageRank solves, in normalized iterations of the full chain.
    pub stats: SolveStats,
}

/// Nonnegativity shift for rewards with negative entries.
fn reward_shift<T: Scalar>(b: &[T]) -> T {
    let min = b.iter().fold(T::infinity(), |m, &x| m.min(x));
    if min < T::zero() {
        -min + T::lit(1e-6) * (T::one() + min.abs())
    } else {
        T::zero()
    }
}

struct ClassSolve<T> {
    x: Vec<T>,
    restart: Vec<f64>,
    scaling: f64,
    shift: f64,
    stats: Vec<SolveStats>,
    zero: bool,
}

/// The weighted PageRank residual equals the Bellman residual up to rounding; stopping
/// slightly below the tolerance keeps the recomputed Bellman residual under it.
const STOP_MARGIN: f64 = 1.0 - 1.0 / 128.0;

/// Update budget for a class solve: the default `10⁴·n`, raised when the contraction
/// rate `c` makes `ln(R₀/tol)/(1 − c)` sweeps necessary (e.g. λ close to one).
fn update_cap(n: usize, initial: f64, tol: f64, c: f64) -> u64 {
    let sweeps = 4.0 * (initial / tol).max(std::f64::consts::E).ln() / (1.0 - c).max(f64::EPSILON);
    let adaptive = (n as f64 * sweeps).min(u64::MAX as f64 / 2.0) as u64;
    (10_000 * n.max(1) as u64).max(adaptive)
}

/// `(I − γQ)x = b` for `b >= 0`, through the PageRank of `m = (1/λ)D⁻¹QᵀD`, `c = γλ`.
fn pagerank_solve<T: Scalar>(
    m: &SparseChain<T>,
    c: T,
    d: &[T],
    b: &[T],
    schedule: Schedule,
    tol: T,
) -> Result<(Vec<T>, Vec<f64>, T, SolveStats)> {
    let mass = dot(b, d);
    let scale = mass / (T::one() - c);
    let restart: Vec<T> = b.iter().zip(d).map(|(&bi, &di)| bi * di / mass).collect();
    let rhs = restart.iter().map(|&u| (T::one() - c) * u).collect();
    let weights = d.iter().map(|&di| scale / di).collect();
    let mut opts = SolveOptions::weighted(tol * T::lit(STOP_MARGIN), weights);
    opts.max_updates = Some(update_cap(
        m.n(),
        norm_l1(b).as_f64(),
        tol.as_f64(),
        c.as_f64(),
    ));
    let (w, stats) = solve_linear_row(m, c, rhs, schedule, &opts)?;
    let x = w.iter().zip(d).map(|(&wi, &di)| scale * wi / di).collect();
    Ok((
        x,
        restart.iter().map(|u| u.as_f64()).collect(),
        scale,
        stats,
    ))
}

/// Class solve for an arbitrary-sign `b`. A negative entry triggers the shift
/// `b + s₀`, undone by subtracting `s₀ (I − γQ)⁻¹ 1`; `constant_resolvent` supplies that
/// vector's (constant) value when it is known exactly, as for a stochastic block.
fn class_solve<T: Scalar>(
    m: &SparseChain<T>,
    c: T,
    d: &[T],
    b: &[T],
    constant_resolvent: Option<T>,
    schedule: Schedule,
    tol: T,
) -> Result<ClassSolve<T>> {
    if b.iter().all(|&x| x == T::zero()) {
        return Ok(ClassSolve {
            x: vec![T::zero(); b.len()],
            restart: vec![],
            scaling: 0.0,
            shift: 0.0,
            stats: vec![],
            zero: true,
        });
    }
    let shift = reward_shift(b);
    if shift == T::zero() {
        let (x, restart, scaling, stats) = pagerank_solve(m, c, d, b, schedule, tol)?;
        return Ok(ClassSolve {
            x,
            restart,
            scaling: scaling.as_f64(),
            shift: 0.0,
            stats: vec![stats],
            zero: false,
        });
    }
    let shifted: Vec<T> = b.iter().map(|&x| x + shift).collect();
    let mut stats = Vec::new();
    let (mut x, restart, scaling) = match constant_resolvent {
        Some(k) => {
            let (x, restart, scaling, st) = pagerank_solve(m, c, d, &shifted, schedule, tol)?;
            stats.push(st);
            (
                x.into_iter().map(|xi| xi - shift * k).collect::<Vec<_>>(),
                restart,
                scaling,
            )
        }
        None => {
            let half = tol / T::lit(2.0);
            let (x, restart, scaling, st) = pagerank_solve(m, c, d, &shifted, schedule, half)?;
            stats.push(st);
            let ones = vec![T::one(); b.len()];
            let (y, _, _, st) = pagerank_solve(m, c, d, &ones, schedule, half / shift)?;
            stats.push(st);
            (
                x.into_iter()
                    .zip(y)
                    .map(|(xi, yi)| xi - shift * yi)
                    .collect(),
                restart,
                scaling,
            )
        }
    };
    x.shrink_to_fit();
    Ok(ClassSolve {
        x,
        restart,
        scaling: scaling.as_f64(),
        shift: shift.as_f64(),
        stats,
        zero: false,
    })
}

/// Whether `μ(x)P(x,y) = μ(y)P(y,x)` holds to relative precision on every transition.
fn satisfies_detailed_balance<T: Scalar>(p: &SparseChain<T>, mu: &[T]) -> bool {
    let tol = T::lit(1e-10);
    (0..p.n()).all(|x| {
        p.row_iter(x).all(|(y, pxy)| {
            let a = mu[x] * pxy;
            let b = mu[y] * p.get(y, x);
            (a - b).abs() <= tol * a.max(b)
        })
    })
}

/// PageRank matrix for an irreducible stochastic block: the block itself when reversible.
fn reversal_for<T: Scalar>(p: &SparseChain<T>, mu: &[T]) -> Result<(Option<SparseChain<T>>, bool)> {
    if satisfies_detailed_balance(p, mu) {
        Ok((None, true))
    } else {
        Ok((Some(time_reversal(p, mu)?), false))
    }
}

/// Value function of an irreducible chain from one PageRank solve on its time reversal.
pub fn value_via_pagerank_irreducible<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    check_discounted(problem)?;
    check_irreducible(problem.chain)?;
    let mu = stationary_distribution_with(problem.chain, &SpectralOptions::default())?;
    irreducible_with(problem, &mu, schedule, tol)
}

/// As [`value_via_pagerank_irreducible`], with the stationary law supplied (e.g. in
/// closed form).
pub fn value_via_pagerank_irreducible_with_stationary<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    mu: &Distribution<T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    check_discounted(problem)?;
    check_irreducible(problem.chain)?;
    if mu.len() != problem.n() || mu.iter().any(|&x| !(x > T::zero())) {
        return Err(Error::domain(
            "stationary distribution must be strictly positive, one entry per state",
        ));
    }
    let drift: T = norm_l1(
        &problem
            .chain
            .left_mul(mu)
            .iter()
            .zip(mu.iter())
            .map(|(&a, &b)| a - b)
            .collect::<Vec<_>>(),
    );
    if drift > T::lit(1e-9) {
        return Err(Error::domain(format!(
            "supplied distribution is not stationary (‖μP − μ‖₁ = {drift})"
        )));
    }
    irreducible_with(problem, mu, schedule, tol)
}

fn check_discounted<T: Scalar>(problem: &EvalProblem<'_, T>) -> Result<()> {
    if !(problem.gamma < T::one()) {
        return Err(Error::domain(
            "discount must be below one; use value_undiscounted_absorbing for γ = 1",
        ));
    }
    Ok(())
}

fn check_irreducible<T: Scalar>(p: &SparseChain<T>) -> Result<()> {
    if !scc_decompose(p).is_irreducible() {
        return Err(Error::domain(
            "chain is reducible; use value_via_pagerank_general",
        ));
    }
    Ok(())
}

fn irreducible_with<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    mu: &[T],
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    let p = problem.chain;
    let gamma = problem.gamma;
    let (reversed, reversal_skipped) = reversal_for(p, mu)?;
    let m = reversed.as_ref().unwrap_or(p);
    let sol = class_solve(
        m,
        gamma,
        mu,
        &problem.reward,
        Some(T::one() / (T::one() - gamma)),
        schedule,
        tol,
    )?;
    let value = ValueFunction::assess(problem, sol.x);
    let record = ClassRecord {
        class_id: 0,
        kind: ClassKind::Recurrent,
        size: p.n(),
        method: if sol.zero {
            ReductionMethod::ZeroReward
        } else {
            ReductionMethod::PageRank
        },
        lambda: 1.0,
        teleportation: gamma.as_f64(),
        restart: sol.restart,
        scaling: sol.scaling,
        shift: sol.shift,
        reversal_skipped,
        residual_l1: value.bellman_residual_l1.as_f64(),
    };
    let stats = combine(p.nnz(), sol.stats, value.bellman_residual_l1.as_f64());
    Ok(PageRankEvaluation {
        value,
        certificate: ReductionCertificate {
            records: vec![record],
        },
        stats,
    })
}

/// Value function of an arbitrary stochastic chain, class by class in reverse canonical
/// order: recurrent classes as irreducible chains, transient classes through the
/// reversed Doob transform of their block with the downstream values folded into the
/// reward.
pub fn value_via_pagerank_general<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    check_discounted(problem)?;
    decomposed(problem, schedule, tol)
}

/// Undiscounted evaluation with terminal states: one irreducible transient class drained
/// into absorbing zero-reward states. Solved as the PageRank of the reversed Doob
/// transform with teleportation `λ`.
pub fn value_undiscounted_absorbing<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    if problem.gamma != T::one() {
        return Err(Error::domain(
            "undiscounted evaluation needs γ = 1; use value_via_pagerank_general for γ < 1",
        ));
    }
    let classes = scc_decompose(problem.chain);
    for (_, class) in classes.recurrent() {
        let s = class.states[0];
        if class.states.len() != 1 || problem.chain.get(s, s) != T::one() {
            return Err(Error::domain(
                "every closed class must be an absorbing state",
            ));
        }
        if problem.reward[s] != T::zero() {
            return Err(Error::domain(format!(
                "absorbing state {s} has nonzero reward"
            )));
        }
    }
    let transient = classes.transient().count();
    if transient > 1 {
        return Err(Error::domain(format!(
            "{transient} transient classes; the undiscounted reduction assumes one (use value_via_pagerank_general with γ < 1)"
        )));
    }
    if let Some(s) = classes
        .transient()
        .flat_map(|(_, c)| c.states.iter().copied())
        .find(|&s| problem.reward[s] < T::zero())
    {
        return Err(Error::domain(format!(
            "undiscounted reduction needs nonnegative rewards; state {s} is negative"
        )));
    }
    decomposed(problem, schedule, tol)
}

fn decomposed<T: Scalar>(
    problem: &EvalProblem<'_, T>,
    schedule: Schedule,
    tol: T,
) -> Result<PageRankEvaluation<T>> {
    let p = problem.chain;
    let gamma = problem.gamma;
    let classes = scc_decompose(p);
    let class_tol = tol / T::from_count(classes.len().max(1));
    let mut v = vec![T::zero(); p.n()];
    let mut records = Vec::with_capacity(classes.len());
    let mut all_stats = Vec::new();

    for ci in classes.order().rev() {
        let class = &classes.classes()[ci];
        let states = &class.states;
        let mut b: Vec<T> = states.iter().map(|&s| problem.reward[s]).collect();
        for block in classes.cross_blocks(ci) {
            for &(s, t, prob) in &block.entries {
                let local = states
                    .binary_search(&s)
                    .expect("cross edge starts in class");
                b[local] += gamma * prob * v[t];
            }
        }
        let mut record = ClassRecord {
            class_id: ci,
            kind: class.kind,
            size: states.len(),
            method: ReductionMethod::PageRank,
            lambda: 1.0,
            teleportation: gamma.as_f64(),
            restart: vec![],
            scaling: 0.0,
            shift: 0.0,
            reversal_skipped: false,
            residual_l1: 0.0,
        };
        let block = p.restrict(states);
        let x = if b.iter().all(|&x| x == T::zero()) {
            record.method = ReductionMethod::ZeroReward;
            vec![T::zero(); states.len()]
        } else if states.len() == 1 {
            let q = block.get(0, 0);
            record.method = ReductionMethod::ScalarSelfLoop;
            record.lambda = q.as_f64();
            record.teleportation = (gamma * q).as_f64();
            record.restart = vec![1.0];
            let denom = T::one() - gamma * q;
            if denom == T::zero() {
                // absorbing state of an undiscounted problem; its reward is zero
                vec![T::zero()]
            } else {
                vec![b[0] / denom]
            }
        } else {
            let sol = match class.kind {
                ClassKind::Recurrent => {
                    let mu = stationary_distribution_with(&block, &SpectralOptions::default())?;
                    let (reversed, skipped) = reversal_for(&block, &mu)?;
                    record.reversal_skipped = skipped;
                    let m = reversed.as_ref().unwrap_or(&block);
                    class_solve(
                        m,
                        gamma,
                        &mu,
                        &b,
                        Some(T::one() / (T::one() - gamma)),
                        schedule,
                        class_tol,
                    )?
                }
                ClassKind::Transient => {
                    let triple = quasi_stationary_with(&block, &SpectralOptions::default())?;
                    let m = reversed_doob(&block, &triple);
                    record.lambda = triple.lambda.as_f64();
                    record.teleportation = (gamma * triple.lambda).as_f64();
                    class_solve(
                        &m,
                        gamma * triple.lambda,
                        &triple.nu,
                        &b,
                        None,
                        schedule,
                        class_tol,
                    )?
                }
            };
            if sol.zero {
                record.method = ReductionMethod::ZeroReward;
            }
            record.restart = sol.restart;
            record.scaling = sol.scaling;
            record.shift = sol.shift;
            all_stats.extend(sol.stats);
            sol.x
        };
        let local_problem = EvalProblem::unchecked(&block, gamma, b);
        record.residual_l1 = local_problem.bellman_residual(&x).as_f64();
        for (&s, xi) in states.iter().zip(x) {
            v[s] = xi;
        }
        records.push(record);
    }
    records.reverse();
    let value = ValueFunction::assess(problem, v);
    let stats = combine(p.nnz(), all_stats, value.bellman_residual_l1.as_f64());
    Ok(PageRankEvaluation {
        value,
        certificate: ReductionCertificate { records },
        stats,
    })
}

/// Concatenates per-solve statistics into one record measured against `total_edges`.
/// A single solve on the full chain passes through unchanged.
fn combine(total_edges: usize, parts: Vec<SolveStats>, final_residual: f64) -> SolveStats {
    if parts.len() == 1 && parts[0].total_edges == total_edges {
        let mut only = parts.into_iter().next().unwrap();
        only.final_residual = final_residual;
        if let Some(last) = only.residual_trace.last_mut() {
            last.1 = final_residual;
        }
        return only;
    }
    let mut out = SolveStats {
        total_edges,
        ..Default::default()
    };
    let denom = total_edges.max(1) as f64;
    for part in parts {
        let offset = out.edges_processed as f64;
        for &(x, r) in &part.residual_trace {
            out.residual_trace
                .push(((offset + x * part.total_edges as f64) / denom, r));
        }
        out.coordinate_updates += part.coordinate_updates;
        out.edges_processed += part.edges_processed;
        out.wall_clock_ms += part.wall_clock_ms;
    }
    out.normalized_iterations = out.edges_processed as f64 / denom;
    out.residual_trace
        .push((out.normalized_iterations, final_residual));
    out.final_residual = final_residual;
    out
}
