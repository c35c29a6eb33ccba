//! Graph representation, seeded and structured generators, and set statistics.
//!
//! Vertices are `0..n`. Grid vertices `(i, j)` with `i` in `1..=k` and `j` in
//! `1..=r` serialize row-major as `(i - 1) * r + (j - 1)`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sorted, duplicate-free list of vertex indices.
pub type VertexSet = Vec<usize>;

/// The one pseudo-random stream used everywhere a seed appears.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normalize(mut v: Vec<usize>) -> VertexSet {
    v.sort_unstable();
    v.dedup();
    v
}

/// Round half-up, tolerant of the binary representation of decimal inputs.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Immutable simple undirected graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    /// Builds a graph from an edge list; duplicates are merged, loops and
    /// out-of-range endpoints rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_raw_adjacency(adj))
    }

    fn from_raw_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let mut total = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            total += list.len();
        }
        Graph { adj, m: total / 2 }
    }

    /// Adjacency lists that are already sorted, symmetric and loop-free.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Self {
        let m = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Graph { adj, m }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Number of neighbors of `v` inside the sorted set `set`.
    pub fn degree_into(&self, v: usize, set: &[usize]) -> usize {
        sorted_intersection_count(&self.adj[v], set)
    }

    /// Spanning subgraph keeping exactly the edges accepted by `keep(u, v)` (u < v).
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let n = self.n();
        let mut adj = vec![Vec::new(); n];
        for (u, v) in self.edges() {
            if keep(u, v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph::from_sorted_adjacency(adj)
    }

    /// Subgraph induced on `vertices`, relabelled `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let mut adj = vec![Vec::new(); vertices.len()];
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                if index[w] != usize::MAX {
                    adj[i].push(index[w]);
                }
            }
        }
        Graph::from_raw_adjacency(adj)
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// BFS distances from a set of sources, cut off beyond `max_dist`
    /// (unreached vertices get `usize::MAX`).
    pub fn distances_from(&self, sources: &[usize], max_dist: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            if dist[u] == max_dist {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Checks the representation invariants; used by tests and after parsing.
    pub fn check_invariants(&self) -> bool {
        let mut total = 0;
        for (u, list) in self.adj.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &v in list {
                if v == u || v >= self.n() || self.adj[v].binary_search(&u).is_err() {
                    return false;
                }
            }
            total += list.len();
        }
        total == 2 * self.m
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n {} m {}", self.n(), self.m)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Graph> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parts: Vec<&str> = body.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse { line: lineno, message: format!("not a count: {s}") })
            };
            match header {
                None => {
                    if parts.len() != 4 || parts[0] != "n" || parts[2] != "m" {
                        return Err(Error::Parse { line: lineno, message: "expected header `n <count> m <count>`".into() });
                    }
                    header = Some((parse(parts[1])?, parse(parts[3])?));
                }
                Some(_) => {
                    if parts.len() != 2 {
                        return Err(Error::Parse { line: lineno, message: "expected `u v`".into() });
                    }
                    let (u, v) = (parse(parts[0])?, parse(parts[1])?);
                    if u >= v {
                        return Err(Error::Parse { line: lineno, message: "edge must satisfy u < v".into() });
                    }
                    edges.push((u, v));
                }
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        let g = Graph::from_edges(n, edges)?;
        if g.edge_count() != m {
            return Err(Error::Parse { line: 0, message: format!("header says {m} edges, found {}", g.edge_count()) });
        }
        Ok(g)
    }
}

pub fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// G(n, p): pairs `u < v` visited in lexicographic order, one uniform draw each.
pub fn generate_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = rng_from_seed(seed);
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    // Lists are filled in increasing order for both endpoints.
    Ok(Graph::from_sorted_adjacency(adj))
}

pub fn power_of_cycle(n: usize, r: usize) -> Result<Graph> {
    if n < 3 || r < 1 {
        return Err(Error::InvalidArgument(format!("power_of_cycle needs n >= 3 and r >= 1, got n={n}, r={r}")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for s in 1..=r {
            let v = (u + s) % n;
            if u != v {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BackboneKind {
    /// Consecutive columns joined: `j1 != j2` and `|i1 - i2| <= 1`.
    C,
    /// `k` disjoint copies of `K_r`: `j1 != j2` and `i1 == i2`.
    K,
}

#[inline]
pub fn grid_index(i: usize, j: usize, r: usize) -> usize {
    i * r + j
}

/// Backbone on the `[k] × [r]` grid with 0-based `(i, j)` at `i * r + j`.
pub fn backbone_graph(k: usize, r: usize, kind: BackboneKind) -> Result<Graph> {
    if k < 1 || r < 1 {
        return Err(Error::InvalidArgument("backbone needs k >= 1 and r >= 1".into()));
    }
    let mut edges = Vec::new();
    for i1 in 0..k {
        for j1 in 0..r {
            for i2 in i1..k {
                for j2 in 0..r {
                    if j1 == j2 || (i2 == i1 && j2 <= j1) {
                        continue;
                    }
                    let ok = match kind {
                        BackboneKind::C => i2 - i1 <= 1,
                        BackboneKind::K => i2 == i1,
                    };
                    if ok {
                        edges.push((grid_index(i1, j1, r), grid_index(i2, j2, r)));
                    }
                }
            }
        }
    }
    Graph::from_edges(k * r, edges)
}

/// Complete multipartite graph; parts occupy consecutive index ranges.
pub fn complete_multipartite(sizes: &[usize]) -> Result<Graph> {
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("part sizes must be >= 1".into()));
    }
    let n: usize = sizes.iter().sum();
    let mut part = Vec::with_capacity(n);
    for (idx, &s) in sizes.iter().enumerate() {
        part.extend(std::iter::repeat_n(idx, s));
    }
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in 0..n {
            if part[u] != part[v] {
                adj[u].push(v);
            }
        }
    }
    Ok(Graph::from_sorted_adjacency(adj))
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoCliques {
    #[serde(skip)]
    pub graph: Graph,
    pub clique_size: usize,
    pub overlap: usize,
    pub total: usize,
    pub min_degree: usize,
}

/// Two cliques of size round((1/2 + γ)n) sharing round(2γn) vertices.
/// The realized vertex count is reported and may differ from `n` by rounding.
pub fn two_cliques(n: usize, gamma: f64) -> Result<TwoCliques> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1/2), got {gamma}")));
    }
    let clique_size = round_half_up((0.5 + gamma) * n as f64);
    let overlap = round_half_up(2.0 * gamma * n as f64);
    if overlap < 1 {
        return Err(Error::InvalidArgument("rounded overlap is smaller than one vertex".into()));
    }
    if overlap > clique_size {
        return Err(Error::InvalidArgument("overlap larger than clique".into()));
    }
    let total = 2 * clique_size - overlap;
    let second_start = clique_size - overlap;
    let mut edges = Vec::new();
    for u in 0..clique_size {
        for v in (u + 1)..clique_size {
            edges.push((u, v));
        }
    }
    for u in second_start..total {
        for v in (u + 1)..total {
            if u >= clique_size || v >= clique_size {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(total, edges)?;
    let min_degree = graph.min_degree();
    Ok(TwoCliques { graph, clique_size, overlap, total, min_degree })
}

/// `t` disjoint copies of `h0`; copy `c` occupies `c*h .. (c+1)*h`.
pub fn disjoint_copies(h0: &Graph, t: usize) -> Result<Graph> {
    if t < 1 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    let h = h0.n();
    let mut adj = Vec::with_capacity(h * t);
    for c in 0..t {
        for v in 0..h {
            adj.push(h0.neighbors(v).iter().map(|&w| w + c * h).collect());
        }
    }
    Ok(Graph::from_sorted_adjacency(adj))
}

/// Disjoint union in argument order.
pub fn disjoint_union(parts: &[&Graph]) -> Graph {
    let mut adj = Vec::new();
    let mut offset = 0;
    for g in parts {
        for v in 0..g.n() {
            adj.push(g.neighbors(v).iter().map(|&w| w + offset).collect());
        }
        offset += g.n();
    }
    Graph::from_sorted_adjacency(adj)
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("path edges are valid")
}

pub fn cycle(n: usize) -> Result<Graph> {
    power_of_cycle(n, 1)
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("complete graph edges are valid")
}

/// rows × cols grid, vertex `(a, b)` at `a * cols + b`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for a in 0..rows {
        for b in 0..cols {
            let v = a * cols + b;
            if b + 1 < cols {
                edges.push((v, v + 1));
            }
            if a + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("grid edges are valid")
}

/// Uniformly seeded random d-regular graph via the pairing model with
/// local rejection of loops and multi-edges, restarting when stuck.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n * d % 2 == 1 || d >= n.max(1) {
        return Err(Error::InvalidArgument(format!("no {d}-regular graph on {n} vertices")));
    }
    let mut rng = rng_from_seed(seed);
    'restart: loop {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        while !points.is_empty() {
            let mut placed = false;
            for _ in 0..64 {
                let i = rng.gen_range(0..points.len());
                let j = rng.gen_range(0..points.len());
                let (u, v) = (points[i], points[j]);
                if i != j && u != v && !adj[u].contains(&v) {
                    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                    points.swap_remove(hi);
                    points.swap_remove(lo);
                    adj[u].push(v);
                    adj[v].push(u);
                    placed = true;
                    break;
                }
            }
            if !placed {
                let any = points.iter().enumerate().any(|(i, &u)| {
                    points[i + 1..].iter().any(|&v| u != v && !adj[u].contains(&v))
                });
                if !any {
                    continue 'restart;
                }
            }
        }
        return Ok(Graph::from_raw_adjacency(adj));
    }
}

/// Random labelled tree with maximum degree at most `max_deg` (attachment to
/// a uniformly chosen non-saturated earlier vertex).
pub fn random_tree(n: usize, max_deg: usize, seed: u64) -> Result<Graph> {
    if max_deg < 2 && n > 2 {
        return Err(Error::InvalidArgument("max degree too small for a tree".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut deg = vec![0usize; n];
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for idx in 1..n {
        let open: Vec<usize> = order[..idx].iter().copied().filter(|&u| deg[u] < max_deg).collect();
        let parent = open[rng.gen_range(0..open.len())];
        let child = order[idx];
        deg[parent] += 1;
        deg[child] += 1;
        edges.push((parent, child));
    }
    Graph::from_edges(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetStats {
    /// Edges with both endpoints in X.
    pub e_x: usize,
    /// Ordered pairs `(x, y)`, `x ∈ X`, `y ∈ Y`, adjacent; so `e(X, X) = 2 e(X)`.
    pub e_xy: usize,
    pub density: f64,
}

pub fn edges_within(g: &Graph, x: &[usize]) -> usize {
    x.iter().map(|&v| g.degree_into(v, x)).sum::<usize>() / 2
}

pub fn edges_between(g: &Graph, x: &[usize], y: &[usize]) -> usize {
    x.iter().map(|&v| g.degree_into(v, y)).sum()
}

pub fn set_stats(g: &Graph, x: &[usize], y: &[usize]) -> Result<SetStats> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySet);
    }
    let x = normalize(x.to_vec());
    let y = normalize(y.to_vec());
    if x.iter().chain(&y).any(|&v| v >= g.n()) {
        return Err(Error::InvalidArgument("vertex set not contained in V".into()));
    }
    let e_x = edges_within(g, &x);
    let e_xy = edges_between(g, &x, &y);
    Ok(SetStats { e_x, e_xy, density: e_xy as f64 / (x.len() * y.len()) as f64 })
}
