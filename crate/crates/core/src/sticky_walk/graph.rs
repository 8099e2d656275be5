//! Simple undirected graphs and the generators used by the experiments.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::chain::parse_field;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl UndirectedGraph {
    /// Builds a graph from an edge list. Self-loops and repeated edges are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut m = 0;
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::domain(format!("repeated edge at node {u}")));
            }
            m += list.len();
        }
        Ok(UndirectedGraph { adj, m: m / 2 })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adj[x].len()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Breadth-first distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap() + 1;
            for &y in &self.adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut comps = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for &y in &self.adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.components().len() == 1
    }

    /// Induced subgraph on `nodes` (sorted), reindexed in that order.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &x) in nodes.iter().enumerate() {
            index[x] = i;
        }
        let adj: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&x| {
                self.adj[x]
                    .iter()
                    .filter_map(|&y| (index[y] != usize::MAX).then_some(index[y]))
                    .collect()
            })
            .collect();
        let m = adj.iter().map(Vec::len).sum::<usize>() / 2;
        UndirectedGraph { adj, m }
    }

    /// Node of maximum degree, lowest index on ties.
    pub fn max_degree_node(&self) -> usize {
        (0..self.n()).fold(0, |best, x| {
            if self.degree(x) > self.degree(best) {
                x
            } else {
                best
            }
        })
    }

    /// Writes the `n m` header followed by one `u v` line per edge.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n(), self.m)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Reads the format of [`UndirectedGraph::write_to`]; `#` lines are comments.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| {
                l.as_ref()
                    .map(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                    .unwrap_or(true)
            });
        let (hl, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `n m` header"))?;
        let header = header?;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), hl, "n")?;
        let m: usize = parse_field(it.next(), hl, "m")?;
        let mut edges = Vec::with_capacity(m);
        for (ln, line) in lines {
            let line = line?;
            let mut it = line.split_whitespace();
            let u: usize = parse_field(it.next(), ln, "u")?;
            let v: usize = parse_field(it.next(), ln, "v")?;
            if it.next().is_some() {
                return Err(Error::parse(ln, "trailing fields"));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::parse(
                hl,
                format!("header declares {m} edges, found {}", edges.len()),
            ));
        }
        Self::from_edges(n, edges)
    }
}

/// 4-neighbour `w × h` lattice; node `(x, y)` has index `y·w + x`.
pub fn grid_graph(w: usize, h: usize) -> Result<UndirectedGraph> {
    if w < 2 || h < 2 {
        return Err(Error::domain("grid sides must be at least 2"));
    }
    let mut edges = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                edges.push((i, i + 1));
            }
            if y + 1 < h {
                edges.push((i, i + w));
            }
        }
    }
    UndirectedGraph::from_edges(w * h, edges)
}

/// Central node `(⌊w/2⌋, ⌊h/2⌋)` of a grid.
pub fn grid_center(w: usize, h: usize) -> usize {
    (h / 2) * w + w / 2
}

/// Preferential attachment: a complete graph on `m + 1` nodes, then each new node joins
/// `m` distinct existing nodes drawn with probability proportional to degree.
pub fn pa_graph(n: usize, m: usize, seed: u64) -> Result<UndirectedGraph> {
    if m == 0 || n < m + 1 {
        return Err(Error::domain(format!(
            "preferential attachment needs m >= 1 and n >= m + 1 (n = {n}, m = {m})"
        )));
    }
    let mut rng = seeded(seed);
    let mut edges = Vec::with_capacity(m * n);
    // every edge contributes both endpoints, so a uniform draw is degree-proportional
    let mut endpoints = Vec::with_capacity(2 * m * n);
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m + 1..n {
        chosen.clear();
        while chosen.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    UndirectedGraph::from_edges(n, edges)
}

/// `p = 2 ln n / n`, comfortably above the connectivity threshold.
pub fn er_default_p(n: usize) -> f64 {
    let n = n.max(2) as f64;
    (2.0 * n.ln() / n).min(1.0)
}

/// Erdős–Rényi sample restricted to its largest connected component.
#[derive(Debug, Clone)]
pub struct ErSample {
    pub graph: UndirectedGraph,
    /// Original index of each kept node.
    pub kept: Vec<usize>,
    pub requested_n: usize,
    /// Set when the largest component holds less than half of the nodes.
    pub warning: Option<String>,
}

/// `G(n, p)` over all pairs, sampled by geometric skipping. May be disconnected.
pub fn er_graph_full(n: usize, p: f64, seed: u64) -> Result<UndirectedGraph> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "edge probability {p} outside (0, 1)"
        )));
    }
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    let log_q = (1.0 - p).ln();
    // pairs (v, w) with w < v, enumerated row by row
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = rng.random();
        w += 1 + ((1.0 - u).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    UndirectedGraph::from_edges(n, edges)
}

/// `G(n, p)` restricted to its largest component (lowest smallest-member on ties).
pub fn er_graph(n: usize, p: f64, seed: u64) -> Result<ErSample> {
    let full = er_graph_full(n, p, seed)?;
    let comps = full.components();
    let kept = comps.into_iter().fold(
        Vec::new(),
        |best, c| if c.len() > best.len() { c } else { best },
    );
    let warning = (2 * kept.len() < n).then(|| {
        let msg = format!(
            "largest Erdős–Rényi component has {} of {n} nodes",
            kept.len()
        );
        log::warn!("{msg}");
        msg
    });
    Ok(ErSample {
        graph: full.induced(&kept),
        kept,
        requested_n: n,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_three_by_three() {
        let g = grid_graph(3, 3).unwrap();
        assert_eq!((g.n(), g.edge_count()), (9, 12));
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(grid_center(3, 3)), 4);
        assert_eq!(grid_center(3, 3), 4);
    }

    #[test]
    fn pa_edge_count_and_connectivity() {
        for (n, seed) in [(4, 1), (5, 2), (100, 3), (2000, 4)] {
            let g = pa_graph(n, 3, seed).unwrap();
            assert_eq!(g.edge_count(), 3 * (n - 4) + 6);
            assert!(g.is_connected());
        }
        assert_eq!(pa_graph(50, 3, 9).unwrap(), pa_graph(50, 3, 9).unwrap());
        assert!(pa_graph(3, 3, 0).is_err());
    }

    #[test]
    fn er_full_edge_count_near_mean() {
        let (n, p) = (400, 0.05);
        let pairs = (n * (n - 1) / 2) as f64;
        let (mean, sd) = (p * pairs, (p * (1.0 - p) * pairs).sqrt());
        for seed in 0..5 {
            let m = er_graph_full(n, p, seed).unwrap().edge_count() as f64;
            assert!((m - mean).abs() <= 4.0 * sd, "seed {seed}: {m} vs {mean}");
        }
    }

    #[test]
    fn er_restricts_to_largest_component() {
        let s = er_graph(500, er_default_p(500), 7).unwrap();
        assert!(s.graph.is_connected());
        assert_eq!(s.graph.n(), s.kept.len());
        assert!(s.warning.is_none());
        let sparse = er_graph(500, 0.0005, 7).unwrap();
        assert!(sparse.warning.is_some());
    }

    #[test]
    fn file_round_trip() {
        let g = pa_graph(60, 3, 5).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(UndirectedGraph::read_from(&buf[..]).unwrap(), g);
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(UndirectedGraph::from_edges(2, [(0, 0)]).is_err());
        assert!(UndirectedGraph::from_edges(2, [(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn bfs_on_grid() {
        let g = grid_graph(3, 3).unwrap();
        let d = g.bfs_distances(4);
        assert_eq!(d[0], Some(2));
        assert_eq!(d[1], Some(1));
    }
}
