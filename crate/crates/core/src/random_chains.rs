//! Seeded random chains with known structure, for oracle tests and the validation suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::chain::SparseChain;
use crate::classes::ClassKind;
use crate::error::{Error, Result};
use crate::rng::{seeded, SeededRng};
use crate::scalar::Scalar;

/// Positive weight bounded away from zero so that no row is badly conditioned.
fn weight(rng: &mut SeededRng) -> f64 {
    0.05 + 0.95 * rng.random::<f64>()
}

/// Rows over `members` (global indices) containing a random cycle through all of them
/// plus each other pair (self-loops included) with probability `density`.
fn irreducible_rows(
    members: &[usize],
    density: f64,
    rng: &mut SeededRng,
) -> Vec<Vec<(usize, f64)>> {
    let k = members.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    if k > 1 {
        for i in 0..k {
            rows[order[i]].push((members[order[(i + 1) % k]], weight(rng)));
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, &t) in members.iter().enumerate() {
            if (k > 1 && order_next(&order, i) == j) || rng.random::<f64>() >= density {
                continue;
            }
            row.push((t, weight(rng)));
        }
    }
    rows
}

fn order_next(order: &[usize], i: usize) -> usize {
    let pos = order.iter().position(|&x| x == i).unwrap();
    order[(pos + 1) % order.len()]
}

fn normalize<T: Scalar>(rows: Vec<Vec<(usize, f64)>>) -> Result<SparseChain<T>> {
    let rows = rows
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().map(|e| e.1).sum();
            row.into_iter()
                .map(|(t, w)| (t, T::lit(w / total)))
                .collect()
        })
        .collect();
    SparseChain::from_rows(rows)
}

/// Irreducible chain on `n` states: a random Hamiltonian cycle plus extra transitions
/// with probability `density`.
pub fn random_irreducible<T: Scalar>(n: usize, density: f64, seed: u64) -> Result<SparseChain<T>> {
    if n == 0 {
        return Err(Error::domain("at least one state is required"));
    }
    let mut rng = seeded(seed);
    let members: Vec<usize> = (0..n).collect();
    let mut rows = irreducible_rows(&members, density, &mut rng);
    if n == 1 {
        rows[0] = vec![(0, 1.0)];
    }
    normalize(rows)
}

/// Layout of a generated reducible chain.
#[derive(Debug, Clone)]
pub struct ClassLayout {
    /// Member states of each planted class, in planting order (upstream first).
    pub classes: Vec<Vec<usize>>,
    pub kinds: Vec<ClassKind>,
}

/// Reducible chain with `1..=max_classes` planted classes on at most `max_n` states.
///
/// Classes are planted along a random DAG: every transient class leaks into at least one
/// later class, recurrent classes are closed, and the last class is recurrent. State
/// labels are shuffled so the canonical order has to be recovered.
pub fn random_reducible<T: Scalar>(
    max_n: usize,
    max_classes: usize,
    seed: u64,
) -> Result<(SparseChain<T>, ClassLayout)> {
    if max_classes == 0 || max_n < max_classes {
        return Err(Error::domain("need max_n >= max_classes >= 1"));
    }
    let mut rng = seeded(seed);
    let k = rng.random_range(1..=max_classes);
    let n = rng.random_range(k..=max_n);
    // class sizes: one state each, the rest spread at random, some kept tiny
    let mut sizes = vec![1usize; k];
    for _ in k..n {
        let c = rng.random_range(0..k);
        sizes[c] += 1;
    }
    let mut kinds = vec![ClassKind::Transient; k];
    kinds[k - 1] = ClassKind::Recurrent;
    for kind in kinds.iter_mut().take(k - 1) {
        if rng.random::<f64>() < 0.35 {
            *kind = ClassKind::Recurrent;
        }
    }
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(&mut rng);
    let mut classes = Vec::with_capacity(k);
    let mut next = 0;
    for &size in &sizes {
        let mut members: Vec<usize> = labels[next..next + size].to_vec();
        members.sort_unstable();
        classes.push(members);
        next += size;
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for c in 0..k {
        let members = &classes[c];
        let density = 3.0 / members.len() as f64;
        let internal = irreducible_rows(members, density.min(1.0), &mut rng);
        let recurrent = kinds[c] == ClassKind::Recurrent;
        for (i, row) in internal.into_iter().enumerate() {
            let s = members[i];
            rows[s] = row;
            if members.len() == 1 && recurrent {
                rows[s] = vec![(s, 1.0)];
            }
        }
        if recurrent {
            continue;
        }
        // leaks into later classes: one guaranteed, others at random
        let leak_from = members[rng.random_range(0..members.len())];
        let downstream = |rng: &mut SeededRng| {
            let d = rng.random_range(c + 1..k);
            classes[d][rng.random_range(0..classes[d].len())]
        };
        let t = downstream(&mut rng);
        rows[leak_from].push((t, weight(&mut rng)));
        for &s in members {
            if rng.random::<f64>() < 0.3 {
                let t = downstream(&mut rng);
                if !rows[s].iter().any(|e| e.0 == t) {
                    rows[s].push((t, weight(&mut rng)));
                }
            }
        }
    }
    Ok((normalize(rows)?, ClassLayout { classes, kinds }))
}

/// One irreducible transient class on states `0..transient` draining into absorbing
/// states `transient..transient + absorbing`.
pub fn random_absorbing<T: Scalar>(
    transient: usize,
    absorbing: usize,
    seed: u64,
) -> Result<SparseChain<T>> {
    if transient == 0 || absorbing == 0 {
        return Err(Error::domain(
            "need at least one transient and one absorbing state",
        ));
    }
    let mut rng = seeded(seed);
    let members: Vec<usize> = (0..transient).collect();
    let density = (3.0 / transient as f64).min(1.0);
    let mut rows = irreducible_rows(&members, density, &mut rng);
    if transient == 1 && rows[0].is_empty() && rng.random::<f64>() < 0.5 {
        rows[0].push((0, weight(&mut rng)));
    }
    let guaranteed = rng.random_range(0..transient);
    for (s, row) in rows.iter_mut().enumerate() {
        if s == guaranteed || rng.random::<f64>() < 0.4 {
            row.push((transient + rng.random_range(0..absorbing), weight(&mut rng)));
        }
    }
    rows.extend((transient..transient + absorbing).map(|a| vec![(a, 1.0)]));
    normalize(rows)
}

/// Birth–death chain on `1..=n` with absorbing ends `0` and `n + 1`. Step-down
/// probabilities lie in `[0.3, 0.7]` (relative to moving), which keeps the drift bounded
/// and the expected absorption time polynomial in `n`; half the states also hold with
/// probability up to 0.3.
pub fn random_birth_death_absorbing<T: Scalar>(n: usize, seed: u64) -> Result<SparseChain<T>> {
    if n == 0 {
        return Err(Error::domain("need at least one interior state"));
    }
    let mut rng = seeded(seed);
    let mut rows = vec![vec![(0, 1.0)]];
    for s in 1..=n {
        let stay = if rng.random::<f64>() < 0.5 {
            0.3 * rng.random::<f64>()
        } else {
            0.0
        };
        let down = (1.0 - stay) * (0.3 + 0.4 * rng.random::<f64>());
        let mut row = vec![(s - 1, down), (s + 1, 1.0 - stay - down)];
        if stay > 0.0 {
            row.push((s, stay));
        }
        rows.push(row);
    }
    rows.push(vec![(n + 1, 1.0)]);
    normalize(rows)
}

/// I.i.d. uniform rewards on `[lo, hi)`.
pub fn random_rewards<T: Scalar>(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<T> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| T::lit(lo + (hi - lo) * rng.random::<f64>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::scc_decompose;

    #[test]
    fn irreducible_is_irreducible() {
        for seed in 0..20 {
            let p: SparseChain<f64> = random_irreducible(1 + seed as usize * 7, 0.1, seed).unwrap();
            assert!(p.is_stochastic());
            assert!(scc_decompose(&p).is_irreducible());
        }
    }

    #[test]
    fn reducible_recovers_planted_classes() {
        for seed in 0..50 {
            let (p, layout): (SparseChain<f64>, _) = random_reducible(60, 6, seed).unwrap();
            let d = scc_decompose(&p);
            assert_eq!(d.len(), layout.classes.len(), "seed {seed}");
            for (members, kind) in layout.classes.iter().zip(&layout.kinds) {
                let c = d.class_of(members[0]);
                assert_eq!(&d.classes()[c].states, members);
                assert_eq!(d.classes()[c].kind, *kind);
            }
        }
    }

    #[test]
    fn absorbing_has_one_transient_class() {
        for seed in 0..20 {
            let p: SparseChain<f64> = random_absorbing(1 + seed as usize, 2, seed).unwrap();
            let d = scc_decompose(&p);
            assert_eq!(d.transient().count(), 1);
            assert!(d.recurrent().all(|(_, c)| c.states.len() == 1));
        }
        let bd: SparseChain<f64> = random_birth_death_absorbing(10, 1).unwrap();
        assert_eq!(scc_decompose(&bd).transient().count(), 1);
    }
}
