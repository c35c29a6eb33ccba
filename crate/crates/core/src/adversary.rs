//! Spanning subgraphs that keep a degree floor while destroying structure.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphcore::{normalize, rng_from_seed, Graph, VertexSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryReport {
    pub deleted_edge_count: usize,
    pub realized_min_degree: usize,
    pub blocked_set: VertexSet,
    pub floor_target: usize,
}

impl AdversaryReport {
    fn new(input: &Graph, output: &Graph, blocked_set: VertexSet, floor_target: usize) -> Self {
        AdversaryReport {
            deleted_edge_count: input.edge_count() - output.edge_count(),
            realized_min_degree: output.min_degree(),
            blocked_set,
            floor_target,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn delete_edges(g: &Graph, deleted: &BTreeSet<(usize, usize)>) -> Graph {
    g.filter_edges(|u, v| !deleted.contains(&(u, v)))
}

/// Removes every edge inside N(v), so `v` lies in no triangle.
pub fn wipe_neighborhood(g: &Graph, v: usize) -> Result<(Graph, AdversaryReport)> {
    if v >= g.n() {
        return Err(Error::InvalidArgument(format!("vertex {v} not in graph")));
    }
    let nbrs = g.neighbors(v);
    let mut in_nbhd = vec![false; g.n()];
    nbrs.iter().for_each(|&u| in_nbhd[u] = true);
    let out = g.filter_edges(|a, b| !(in_nbhd[a] && in_nbhd[b]));
    let report = AdversaryReport::new(g, &out, vec![v], 0);
    Ok((out, report))
}

/// The vertex sets used by the triangle blocker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockerSets {
    pub x: VertexSet,
    pub w: VertexSet,
}

/// Order in which candidate triangles are enumerated; the deleted edge set
/// must not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    Forward,
    Reverse,
}

pub fn blocked_set_size(p: f64, eps: f64) -> usize {
    (eps / (3.0 * p * p)).floor().max(0.0) as usize
}

/// Isolates a seeded set X of size ⌊εp⁻²/3⌋ from every triangle.
///
/// Deletes E(X), then all X–W edges where W = {v ∉ X : deg(v, X) > 2|X|p},
/// then every yz with y, z ∉ X ∪ W closing a triangle with some x ∈ X.
/// The report states the realized minimum degree; no bound is asserted.
pub fn triangle_blocker(g: &Graph, p: f64, eps: f64, seed: u64) -> Result<(Graph, AdversaryReport)> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(Error::InvalidProbability(p));
    }
    let size = blocked_set_size(p, eps);
    if size < 1 {
        return Err(Error::BlockedSetEmpty);
    }
    if size > g.n() {
        return Err(Error::InvalidArgument(format!("blocked set of size {size} exceeds n = {}", g.n())));
    }
    let mut rng = rng_from_seed(seed);
    let x = normalize(index::sample(&mut rng, g.n(), size).into_vec());
    let (out, report, _) = triangle_blocker_on(g, &x, p, eps, Enumeration::Forward)?;
    Ok((out, report))
}

/// Triangle blocker with an explicit blocked set.
pub fn triangle_blocker_on(
    g: &Graph,
    x: &[usize],
    p: f64,
    eps: f64,
    order: Enumeration,
) -> Result<(Graph, AdversaryReport, BlockerSets)> {
    let x = normalize(x.to_vec());
    if x.is_empty() {
        return Err(Error::BlockedSetEmpty);
    }
    let n = g.n();
    let mut in_x = vec![false; n];
    x.iter().for_each(|&v| in_x[v] = true);
    let limit = 2.0 * x.len() as f64 * p;
    let w: VertexSet = (0..n).filter(|&v| !in_x[v] && g.degree_into(v, &x) as f64 > limit).collect();
    let mut in_w = vec![false; n];
    w.iter().for_each(|&v| in_w[v] = true);

    let mut deleted = BTreeSet::new();
    for &a in &x {
        for &b in g.neighbors(a) {
            if in_x[b] || in_w[b] {
                deleted.insert((a.min(b), a.max(b)));
            }
        }
    }
    let free = |v: usize| !in_x[v] && !in_w[v];
    let xs: Vec<usize> = match order {
        Enumeration::Forward => x.clone(),
        Enumeration::Reverse => x.iter().rev().copied().collect(),
    };
    for &a in &xs {
        let nb: Vec<usize> = g.neighbors(a).iter().copied().filter(|&v| free(v)).collect();
        let pairs = nb.iter().enumerate().flat_map(|(i, &y)| nb[i + 1..].iter().map(move |&z| (y, z)));
        let mut visit = |y: usize, z: usize| {
            if g.has_edge(y, z) {
                deleted.insert((y.min(z), y.max(z)));
            }
        };
        match order {
            Enumeration::Forward => pairs.for_each(|(y, z)| visit(y, z)),
            Enumeration::Reverse => pairs.collect::<Vec<_>>().into_iter().rev().for_each(|(y, z)| visit(z, y)),
        }
    }
    let out = delete_edges(g, &deleted);
    let floor = ((1.0 - eps) * n as f64 * p).ceil().max(0.0) as usize;
    let report = AdversaryReport::new(g, &out, x.clone(), floor);
    Ok((out, report, BlockerSets { x, w }))
}

/// Seeded random maximal deletion keeping every degree at least `floor`.
pub fn prune_to_floor(g: &Graph, floor: usize, seed: u64) -> Result<(Graph, AdversaryReport)> {
    let min_degree = g.min_degree();
    if floor > min_degree {
        return Err(Error::FloorAboveMinDegree { floor, min_degree });
    }
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let mut rng = rng_from_seed(seed);
    edges.shuffle(&mut rng);
    let mut deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut deleted = BTreeSet::new();
    for (u, v) in edges {
        if deg[u] > floor && deg[v] > floor {
            deg[u] -= 1;
            deg[v] -= 1;
            deleted.insert((u, v));
        }
    }
    let out = delete_edges(g, &deleted);
    let report = AdversaryReport::new(g, &out, Vec::new(), floor);
    Ok((out, report))
}

/// Triangles through `v` in `g`, by direct enumeration of neighbor pairs.
pub fn triangles_at(g: &Graph, v: usize) -> usize {
    let nb = g.neighbors(v);
    let mut count = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if g.has_edge(a, b) {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::{complete, generate_gnp};
    use proptest::prelude::*;

    fn is_spanning_subgraph(sub: &Graph, host: &Graph) -> bool {
        sub.n() == host.n() && sub.edges().all(|(u, v)| host.has_edge(u, v))
    }

    #[test]
    fn wipe_k4_leaves_star() {
        let (g, rep) = wipe_neighborhood(&complete(4), 0).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(rep.deleted_edge_count, 3);
        assert_eq!(triangles_at(&g, 0), 0);
        assert_eq!(g.neighbors(0), &[1, 2, 3]);
    }

    #[test]
    fn wipe_edgeless_is_identity() {
        let e = Graph::empty(6);
        let (g, rep) = wipe_neighborhood(&e, 2).unwrap();
        assert_eq!(g, e);
        assert_eq!(rep.deleted_edge_count, 0);
    }

    #[test]
    fn wipe_loss_equals_codegree() {
        // Mean codegree is about (n - 2)p² = 499.5; the maximum over the ~1000
        // neighbours sits a few standard deviations (≈19.4) above that.
        let (n, p) = (2000usize, 0.5);
        let np2 = n as f64 * p * p;
        let mut mean_sum = 0.0;
        for seed in 0..20u64 {
            let g = generate_gnp(n, p, seed).unwrap();
            let v = (seed as usize * 97) % n;
            let (out, _) = wipe_neighborhood(&g, v).unwrap();
            let nv = g.neighbors(v);
            let mut total = 0usize;
            for u in 0..n {
                let loss = g.degree(u) - out.degree(u);
                let expect = if nv.binary_search(&u).is_ok() { g.degree_into(u, nv) } else { 0 };
                assert_eq!(loss, expect);
                assert!((loss as f64) <= 1.2 * np2);
                total += loss;
            }
            mean_sum += total as f64 / nv.len() as f64;
            assert_eq!(triangles_at(&out, v), 0);
        }
        let mean = mean_sum / 20.0;
        assert!(mean <= 1.1 * np2 && mean >= 0.9 * np2, "mean loss {mean}");
    }

    #[test]
    fn blocker_single_vertex_on_small_graph() {
        // ⌊ε p⁻² / 3⌋ = ⌊0.9 · 4 / 3⌋ = 1.
        let g = generate_gnp(60, 0.5, 11).unwrap();
        let (out, rep) = triangle_blocker(&g, 0.5, 0.9, 3).unwrap();
        assert_eq!(rep.blocked_set.len(), 1);
        let x = rep.blocked_set[0];
        // Exhaustive scan over all vertex triples.
        for a in 0..60 {
            for b in a + 1..60 {
                for c in b + 1..60 {
                    if [a, b, c].contains(&x) {
                        assert!(!(out.has_edge(a, b) && out.has_edge(b, c) && out.has_edge(a, c)));
                    }
                }
            }
        }
        assert_eq!(rep.realized_min_degree, out.min_degree());
        assert!(is_spanning_subgraph(&out, &g));
    }

    #[test]
    fn blocker_triangle_free_host_only_touches_x_edges() {
        let g = crate::graphcore::complete_multipartite(&[10, 10]).unwrap();
        let (out, _, sets) = triangle_blocker_on(&g, &[0, 1, 12], 0.1, 0.3, Enumeration::Forward).unwrap();
        let touched = |u: usize, v: usize| {
            let xu = sets.x.contains(&u) || sets.w.contains(&u);
            let xv = sets.x.contains(&v) || sets.w.contains(&v);
            (sets.x.contains(&u) && xv) || (sets.x.contains(&v) && xu)
        };
        for (u, v) in g.edges() {
            assert_eq!(out.has_edge(u, v), !touched(u, v));
        }
    }

    #[test]
    fn blocker_rejects_empty_set() {
        let g = generate_gnp(50, 0.5, 1).unwrap();
        assert!(matches!(triangle_blocker(&g, 0.5, 0.1, 1), Err(Error::BlockedSetEmpty)));
    }

    #[test]
    fn blocker_sizes_at_acceptance_scale() {
        assert_eq!(blocked_set_size(0.2, 0.3), 2);
    }

    #[test]
    fn prune_examples() {
        let k4 = complete(4);
        let (g, rep) = prune_to_floor(&k4, 3, 0).unwrap();
        assert_eq!(g, k4);
        assert_eq!(rep.deleted_edge_count, 0);
        assert!(matches!(prune_to_floor(&k4, 4, 0), Err(Error::FloorAboveMinDegree { .. })));
        let g = generate_gnp(1000, 0.5, 5).unwrap();
        let floor = (0.6f64 * 1000.0 * 0.5).ceil() as usize;
        let (out, rep) = prune_to_floor(&g, floor, 5).unwrap();
        assert!(out.min_degree() >= 300);
        assert_eq!(rep.realized_min_degree, out.min_degree());
        // Maximality: no remaining edge has both endpoints above the floor.
        assert!(out.edges().all(|(u, v)| out.degree(u) == floor || out.degree(v) == floor));
    }

    #[test]
    fn report_json_keys() {
        let (_, rep) = prune_to_floor(&complete(5), 2, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        for key in ["deleted_edge_count", "realized_min_degree", "blocked_set", "floor_target"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn blocker_is_order_independent(n in 10usize..60, p in 0.2f64..0.9, seed in any::<u64>(), xs in 1usize..4) {
            let g = generate_gnp(n, p, seed).unwrap();
            let mut rng = rng_from_seed(seed ^ 0x5a5a);
            let x = index::sample(&mut rng, n, xs).into_vec();
            let (a, ra, _) = triangle_blocker_on(&g, &x, p, 0.3, Enumeration::Forward).unwrap();
            let (b, rb, _) = triangle_blocker_on(&g, &x, p, 0.3, Enumeration::Reverse).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(ra, rb);
            prop_assert!(is_spanning_subgraph(&a, &g));
            for &v in &x {
                prop_assert_eq!(triangles_at(&a, v), 0);
            }
        }

        #[test]
        fn prune_respects_floor(n in 5usize..80, p in 0.3f64..1.0, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let g = generate_gnp(n, p, seed).unwrap();
            let floor = (g.min_degree() as f64 * frac) as usize;
            let (out, rep) = prune_to_floor(&g, floor, seed).unwrap();
            prop_assert!(out.min_degree() >= floor);
            prop_assert_eq!(rep.realized_min_degree, out.min_degree());
            prop_assert!(is_spanning_subgraph(&out, &g));
        }
    }
}
