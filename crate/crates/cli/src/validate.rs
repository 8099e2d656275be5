//! Dense-oracle comparisons of every reduction on random chains.

use std::fmt;

use mdp_pagerank::markov::detailed_balance_violation;
use mdp_pagerank::random_chains::{
    random_absorbing, random_irreducible, random_reducible, random_rewards,
};
use mdp_pagerank::rng::derive_seed;
use mdp_pagerank::sticky_walk::{
    pa_graph, random_alpha, reward_model, RewardKind, StickyWalkModel,
};
use mdp_pagerank::{
    check_resolvent_adjointness, stationary_distribution, time_reversal,
    value_undiscounted_absorbing, value_via_pagerank_general, value_via_pagerank_irreducible,
    ClassKind, EvalProblem, ReductionMethod, Result, Schedule, SparseChain,
};
use nalgebra::{DMatrix, DVector};

/// Dense `(I − γP)⁻¹ r` by LU; `None` when the system is singular. States whose own
/// equation degenerates (`γP(s,s) = 1`, an absorbing state of an undiscounted chain) are
/// pinned to `v(s) = 0`.
pub fn dense_value(p: &SparseChain<f64>, gamma: f64, r: &[f64]) -> Option<Vec<f64>> {
    let n = p.n();
    let mut a = DMatrix::identity(n, n);
    let mut b = DVector::from_column_slice(r);
    for s in 0..n {
        if gamma * p.get(s, s) == 1.0 {
            b[s] = 0.0;
            continue;
        }
        for (t, x) in p.row_iter(s) {
            a[(s, t)] -= gamma * x;
        }
    }
    a.lu().solve(&b).map(|v| v.iter().copied().collect())
}

/// Relative error against an oracle; a missing oracle counts as infinite.
fn oracle_error(got: &[f64], want: Option<Vec<f64>>) -> f64 {
    want.map_or(f64::INFINITY, |w| relative_error(got, &w))
}

/// `‖got − want‖∞ / max(‖want‖∞, 1)`.
pub fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub instances: usize,
    pub max_deviation: f64,
    pub threshold: f64,
    pub note: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_n: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "validation suite, max n = {}, seed = {}",
            self.max_n, self.seed
        )?;
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            write!(
                f,
                "{verdict} {:<28} instances {:>4}  max deviation {:.3e} (<= {:.0e})",
                c.name, c.instances, c.max_deviation, c.threshold
            )?;
            if !c.note.is_empty() {
                write!(f, "  {}", c.note)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

const INSTANCES: usize = 20;
const TOL: f64 = 1e-11;
const GAMMAS: [f64; 3] = [0.5, 0.9, 0.99];

fn deviation(result: Result<f64>) -> f64 {
    // a solver error counts as an infinite deviation
    result.unwrap_or(f64::INFINITY)
}

/// Runs the oracle comparisons on random chains with at most `max_n` states. Solver errors
/// become failed checks rather than errors.
pub fn validate_suite(max_n: usize, seed: u64) -> ValidationReport {
    let max_n = max_n.max(2);
    let sub = |i: usize, tag: u64| derive_seed(seed.wrapping_add(i as u64), tag);
    let size = |i: usize| 2 + (sub(i, 10) as usize) % (max_n - 1);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for i in 0..INSTANCES {
        let n = size(i);
        let gamma = GAMMAS[i % 3];
        worst = worst.max(deviation((|| {
            let p = random_irreducible(n, 3.0 / n as f64, sub(i, 11))?;
            let r = random_rewards(n, 0.0, 1.0, sub(i, 12));
            let ev = value_via_pagerank_irreducible(
                &EvalProblem::new(&p, gamma, r.clone())?,
                Schedule::rlgl_gsd(),
                TOL,
            )?;
            Ok(oracle_error(&ev.value.v, dense_value(&p, gamma, &r)))
        })()));
    }
    checks.push(Check {
        name: "irreducible vs dense",
        instances: INSTANCES,
        max_deviation: worst,
        threshold: 1e-8,
        note: String::new(),
    });

    let (mut worst, mut singletons, mut shifted) = (0.0f64, 0usize, 0usize);
    for i in 0..INSTANCES {
        let gamma = GAMMAS[i % 3];
        worst = worst.max(deviation((|| {
            let (p, layout) = random_reducible(max_n, 6.min(max_n), sub(i, 21))?;
            singletons += layout.classes.iter().filter(|c| c.len() == 1).count();
            let r = random_rewards(p.n(), -1.0, 1.0, sub(i, 22));
            let ev = value_via_pagerank_general(
                &EvalProblem::new(&p, gamma, r.clone())?,
                Schedule::GaussSeidelCyclic,
                TOL,
            )?;
            shifted += ev
                .certificate
                .records
                .iter()
                .filter(|c| c.shift != 0.0)
                .count();
            let bad_teleport = ev.certificate.records.iter().any(|c| {
                c.kind == ClassKind::Transient
                    && c.method == ReductionMethod::PageRank
                    && !(c.lambda < 1.0)
            });
            let err = oracle_error(&ev.value.v, dense_value(&p, gamma, &r));
            Ok(if bad_teleport { f64::INFINITY } else { err })
        })()));
    }
    checks.push(Check {
        name: "decomposition vs dense",
        instances: INSTANCES,
        max_deviation: worst,
        threshold: 1e-8,
        note: format!("{singletons} singleton classes, {shifted} shifted classes"),
    });

    let mut skipped = 0usize;
    let worst = deviation((|| {
        let (p, _) = random_reducible::<f64>(max_n, 6.min(max_n), sub(0, 31))?;
        let ev = value_via_pagerank_general(
            &EvalProblem::new(&p, 0.9, vec![0.0; p.n()])?,
            Schedule::rlgl_gsd(),
            TOL,
        )?;
        skipped = ev
            .certificate
            .records
            .iter()
            .filter(|c| c.method == ReductionMethod::ZeroReward)
            .count();
        let all = skipped == ev.certificate.records.len();
        Ok(if all {
            ev.value.v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            f64::INFINITY
        })
    })());
    checks.push(Check {
        name: "zero reward skipped",
        instances: 1,
        max_deviation: worst,
        threshold: 0.0,
        note: format!("{skipped} classes skipped"),
    });

    let mut worst = 0.0f64;
    for i in 0..INSTANCES {
        worst = worst.max(deviation((|| {
            let transient = 1 + (sub(i, 40) as usize) % (max_n - 1).max(1);
            let absorbing = 1 + (sub(i, 41) as usize) % 3;
            let p = random_absorbing(transient, absorbing, sub(i, 42))?;
            let mut r = random_rewards(p.n(), 0.0, 1.0, sub(i, 43));
            r[transient..].iter_mut().for_each(|x| *x = 0.0);
            let ev = value_undiscounted_absorbing(
                &EvalProblem::new(&p, 1.0, r.clone())?,
                Schedule::PrioritizedMaxResidual,
                TOL,
            )?;
            Ok(oracle_error(&ev.value.v, dense_value(&p, 1.0, &r)))
        })()));
    }
    checks.push(Check {
        name: "undiscounted absorbing",
        instances: INSTANCES,
        max_deviation: worst,
        threshold: 1e-8,
        note: String::new(),
    });

    let (mut adj, mut inv) = (0.0f64, 0.0f64);
    for i in 0..INSTANCES {
        let n = size(i);
        let res = (|| -> Result<(f64, f64)> {
            let p = random_irreducible::<f64>(n, 0.3, sub(i, 51))?;
            let mu = stationary_distribution(&p, 1e-14)?;
            let a = check_resolvent_adjointness(&p, &mu, 0.9, 2, sub(i, 52))?.max_deviation();
            let back = time_reversal(&time_reversal(&p, &mu)?, &mu)?;
            let b = (0..n)
                .flat_map(|s| p.row_iter(s).map(move |(t, x)| (s, t, x)))
                .fold(0.0f64, |m, (s, t, x)| m.max((back.get(s, t) - x).abs()));
            Ok((a, b))
        })();
        let (a, b) = res.unwrap_or((f64::INFINITY, f64::INFINITY));
        adj = adj.max(a);
        inv = inv.max(b);
    }
    checks.push(Check {
        name: "resolvent adjointness",
        instances: INSTANCES,
        max_deviation: adj,
        threshold: 1e-8,
        note: String::new(),
    });
    checks.push(Check {
        name: "reversal involution",
        instances: INSTANCES,
        max_deviation: inv,
        threshold: 1e-12,
        note: String::new(),
    });

    let mut worst = 0.0f64;
    for i in 0..5 {
        worst = worst.max(deviation((|| {
            let g = pa_graph(max_n.max(5), 2, sub(i, 61))?;
            let n = g.n();
            let beta = reward_model(&g, RewardKind::UniformRandom, sub(i, 62))?;
            let model =
                StickyWalkModel::new(g, random_alpha(n, 0.1, 0.9, sub(i, 63))?, beta, 0.1, 0.9)?;
            let (p, _) = model.build_chain()?;
            Ok(detailed_balance_violation(
                &p,
                &model.closed_form_stationary(),
            ))
        })()));
    }
    checks.push(Check {
        name: "sticky walk detailed balance",
        instances: 5,
        max_deviation: worst,
        threshold: 1e-12,
        note: String::new(),
    });

    ValidationReport {
        max_n,
        seed,
        checks,
    }
}
