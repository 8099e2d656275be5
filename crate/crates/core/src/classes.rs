//! Communicating-class decomposition into the canonical block upper-triangular form.

use crate::chain::SparseChain;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Transient,
    Recurrent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommClass {
    /// Member states in increasing order.
    pub states: Vec<usize>,
    pub kind: ClassKind,
}

/// Transitions from one class into a single downstream class, as global `(src, dst, prob)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossBlock<T> {
    pub to_class: usize,
    pub entries: Vec<(usize, usize, T)>,
}

/// Ordered partition of the states into communicating classes.
///
/// Classes are stored in canonical order: transient classes first, in a topological order
/// of the condensation, then the closed (recurrent) classes. Every transition stays inside
/// its class or goes from an earlier class to a later one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecomposition<T> {
    classes: Vec<CommClass>,
    class_of: Vec<usize>,
    cross: Vec<Vec<CrossBlock<T>>>,
}

impl<T: Scalar> ClassDecomposition<T> {
    pub fn classes(&self) -> &[CommClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class indices in processing order (identity: classes are stored ordered).
    pub fn order(&self) -> std::ops::Range<usize> {
        0..self.classes.len()
    }

    pub fn class_of(&self, state: usize) -> usize {
        self.class_of[state]
    }

    /// Outgoing blocks of class `c`, one per downstream class it reaches directly.
    pub fn cross_blocks(&self, c: usize) -> &[CrossBlock<T>] {
        &self.cross[c]
    }

    pub fn transient(&self) -> impl Iterator<Item = (usize, &CommClass)> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ClassKind::Transient)
    }

    pub fn recurrent(&self) -> impl Iterator<Item = (usize, &CommClass)> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ClassKind::Recurrent)
    }

    pub fn is_irreducible(&self) -> bool {
        self.classes.len() == 1
    }
}

/// Decomposes the transition graph of `p` into communicating classes (iterative Tarjan).
pub fn scc_decompose<T: Scalar>(p: &SparseChain<T>) -> ClassDecomposition<T> {
    let n = p.n();
    let comps = tarjan(p);
    // Tarjan emits a component only after every component reachable from it, so the
    // reversed emission order is topological.
    let mut comp_of = vec![0usize; n];
    for (c, members) in comps.iter().enumerate() {
        for &s in members {
            comp_of[s] = c;
        }
    }
    let closed: Vec<bool> = comps
        .iter()
        .enumerate()
        .map(|(c, members)| {
            members
                .iter()
                .all(|&s| p.row_iter(s).all(|(t, _)| comp_of[t] == c))
        })
        .collect();
    let topo: Vec<usize> = (0..comps.len()).rev().collect();
    let ordered: Vec<usize> = topo
        .iter()
        .copied()
        .filter(|&c| !closed[c])
        .chain(topo.iter().copied().filter(|&c| closed[c]))
        .collect();

    let mut rank = vec![0usize; comps.len()];
    for (i, &c) in ordered.iter().enumerate() {
        rank[c] = i;
    }
    let mut class_of = vec![0usize; n];
    let mut classes = Vec::with_capacity(comps.len());
    for &c in &ordered {
        let mut states = comps[c].clone();
        states.sort_unstable();
        for &s in &states {
            class_of[s] = rank[c];
        }
        let kind = if closed[c] {
            ClassKind::Recurrent
        } else {
            ClassKind::Transient
        };
        classes.push(CommClass { states, kind });
    }

    let mut cross: Vec<Vec<CrossBlock<T>>> = vec![Vec::new(); classes.len()];
    for (ci, class) in classes.iter().enumerate() {
        if class.kind == ClassKind::Recurrent {
            continue;
        }
        let mut blocks: Vec<CrossBlock<T>> = Vec::new();
        for &s in &class.states {
            for (t, prob) in p.row_iter(s) {
                let ct = class_of[t];
                if ct == ci {
                    continue;
                }
                debug_assert!(ct > ci, "edge against canonical order");
                match blocks.iter_mut().find(|b| b.to_class == ct) {
                    Some(b) => b.entries.push((s, t, prob)),
                    None => blocks.push(CrossBlock {
                        to_class: ct,
                        entries: vec![(s, t, prob)],
                    }),
                }
            }
        }
        blocks.sort_by_key(|b| b.to_class);
        cross[ci] = blocks;
    }
    ClassDecomposition {
        classes,
        class_of,
        cross,
    }
}

/// Strongly connected components, each emitted after all components it can reach.
fn tarjan<T: Scalar>(p: &SparseChain<T>) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = p.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    // (state, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let (succ, _) = p.row(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}
