//! Spanning embedding of a bounded-degree, low-bandwidth `H` into a dense host.
//!
//! Stages: bad-set pre-embedding, partial embedding of the planner's
//! special set X, then a per-column blow-up completion that runs greedy
//! candidate-set maintenance followed by bipartite matching.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::bandwidth::{balance_coloring, heuristic_labeling, plan_h, proper_coloring, HPlan, Labeling, PlanConstants};
use crate::bits::{BitMatrix, BitSet};
use crate::error::{Error, Result};
use crate::graphcore::{normalize, Graph, VertexSet};
use crate::regularity::{build_partition_engine, resize_partition, ClusterPartition, EngineParams, ReducedGraph};

/// Partial injective map `V(H) -> V(G')` with candidate sets for constrained vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub map: Vec<Option<usize>>,
    /// `C_w` for unembedded vertices whose image is restricted.
    pub candidates: BTreeMap<usize, VertexSet>,
    /// `Z = W_B ∪ N(W_B)`.
    pub frozen: VertexSet,
    /// H-vertices mapped onto the bad set.
    pub w_b: VertexSet,
}

impl Embedding {
    pub fn empty(n_h: usize) -> Self {
        Embedding { map: vec![None; n_h], candidates: BTreeMap::new(), frozen: Vec::new(), w_b: Vec::new() }
    }

    pub fn image(&self, w: usize) -> Option<usize> {
        self.map[w]
    }

    pub fn embedded_count(&self) -> usize {
        self.map.iter().filter(|x| x.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.map.iter().all(Option::is_some)
    }

    pub fn used_hosts(&self, n_host: usize) -> BitSet {
        BitSet::from_iter_len(n_host, self.map.iter().flatten().copied())
    }

    /// Injectivity, edge preservation among embedded vertices, and `C_w ⊆ N(g(u))`
    /// for every embedded neighbor `u` of a constrained `w`.
    pub fn check(&self, h: &Graph, gp: &Graph) -> Result<()> {
        if self.map.len() != h.n() {
            return Err(Error::InvalidArgument("embedding size differs from |V(H)|".into()));
        }
        let mut seen = BitSet::new(gp.n());
        for (w, img) in self.map.iter().enumerate() {
            if let Some(v) = *img {
                if v >= gp.n() || seen.contains(v) {
                    return Err(Error::InvalidArgument(format!("image of {w} is out of range or reused")));
                }
                seen.insert(v);
            }
        }
        for (a, b) in h.edges() {
            if let (Some(x), Some(y)) = (self.map[a], self.map[b]) {
                if !gp.has_edge(x, y) {
                    return Err(Error::InvalidArgument(format!("edge {a}-{b} maps to non-edge {x}-{y}")));
                }
            }
        }
        for (&w, cw) in &self.candidates {
            if self.map[w].is_some() {
                continue;
            }
            for &u in h.neighbors(w) {
                if let Some(x) = self.map[u] {
                    if let Some(&bad) = cw.iter().find(|&&c| !gp.has_edge(c, x)) {
                        return Err(Error::InvalidArgument(format!("candidate {bad} of {w} misses image of neighbor {u}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// JSON array `H-vertex -> host vertex` (null where unembedded).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.map).expect("embedding serializes")
    }
}

/// Independent check of a finished embedding: total, injective, edge-preserving,
/// and onto `V(G')` when `spanning`.
pub fn validate_total_embedding(h: &Graph, gp: &Graph, map: &[Option<usize>], spanning: bool) -> Result<()> {
    if map.len() != h.n() {
        return Err(Error::InvalidArgument("map length differs from |V(H)|".into()));
    }
    let mut hit = vec![false; gp.n()];
    for (w, img) in map.iter().enumerate() {
        let v = img.ok_or_else(|| Error::InvalidArgument(format!("vertex {w} unembedded")))?;
        if v >= gp.n() || hit[v] {
            return Err(Error::InvalidArgument(format!("vertex {w}: image {v} invalid or reused")));
        }
        hit[v] = true;
    }
    if spanning && hit.iter().any(|x| !x) {
        return Err(Error::InvalidArgument("embedding is not onto the host".into()));
    }
    for (a, b) in h.edges() {
        let (x, y) = (map[a].unwrap(), map[b].unwrap());
        if !gp.has_edge(x, y) {
            return Err(Error::InvalidArgument(format!("edge {a}-{b} lands on non-edge {x}-{y}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedParams {
    pub engine: EngineParams,
    pub beta: f64,
    pub xi: f64,
    /// Candidate-set floor constant.
    pub c: f64,
    pub consts: PlanConstants,
    /// Matching takes over once at most `buffer_factor * Delta * eps * |V_{i,j}|`
    /// vertices of a cluster remain.
    pub buffer_factor: f64,
}

impl EmbedParams {
    /// Defaults with `c = (d/8)^Delta`.
    pub fn new(engine: EngineParams, beta: f64, xi: f64, max_degree: usize) -> Self {
        let c = (engine.d / 8.0).powi(max_degree.max(1) as i32);
        EmbedParams { engine, beta, xi, c, consts: PlanConstants::default(), buffer_factor: 3.0 }
    }
}

fn grid_adjacent(reduced: &ReducedGraph, p: usize, q: usize) -> bool {
    match &reduced.backbone {
        Some(sigma) => reduced.has_edge(sigma[p], sigma[q]),
        None => reduced.has_edge(p, q),
    }
}

/// Vertices at distance exactly 1..=radius from `sources`, plus the sources.
fn ball(h: &Graph, sources: &[usize], radius: usize) -> BTreeSet<usize> {
    let dist = h.distances_from(sources, radius);
    (0..h.n()).filter(|&v| dist[v] != usize::MAX).collect()
}

/// Map every bad vertex `b` onto an H-vertex `h_b` with independent neighborhood
/// and embed `N(h_b)` into `N(b)` inside a core, keeping large common
/// neighborhoods for the second neighborhood of `h_b`.
pub fn pre_embed_b(
    gp: &Graph,
    h: &Graph,
    part: &ClusterPartition,
    reduced: &ReducedGraph,
    plan: &HPlan,
    params: &EmbedParams,
) -> Result<Embedding> {
    const STAGE: &str = "pre_embed_B";
    let mut emb = Embedding::empty(h.n());
    if part.bad.is_empty() {
        return Ok(emb);
    }
    let (k, r) = (part.k, part.r);
    let delta = h.max_degree();
    let cap = 1.0 / params.beta;
    if part.bad.len() as f64 * (delta as f64).powi(5) > cap + 1e-9 {
        return Err(Error::stage(
            STAGE,
            None,
            format!("|B| Delta^5 = {} exceeds 1/beta = {cap:.1}", part.bad.len() as f64 * (delta as f64).powi(5)),
        ));
    }
    let adj = BitMatrix::from_graph(gp);
    let cores: Vec<BitSet> = part.cores.iter().map(|c| BitSet::from_iter_len(gp.n(), c.iter().copied())).collect();
    let mut used = BitSet::from_iter_len(gp.n(), part.bad.iter().copied());
    let p = part_p(params);
    let mut chosen_h: Vec<usize> = Vec::new();
    let mut assigned_h = BTreeSet::new();

    for &b in &part.bad {
        // Cluster (s, t) where b sees at least m p / 3 core vertices, best ratio first.
        let mut best: Option<(f64, usize)> = None;
        for (cidx, core) in cores.iter().enumerate() {
            let cnt = core.and_count(adj.row(b));
            if (cnt as f64) + 1e-9 >= part.m[cidx] as f64 * p / 3.0 {
                let ratio = cnt as f64 / part.m[cidx].max(1) as f64;
                if best.is_none_or(|(br, _)| ratio > br) {
                    best = Some((ratio, cidx));
                }
            }
        }
        let (_, st) = best.ok_or_else(|| Error::stage(STAGE, Some(b), format!("bad vertex {b} has no core with m p / 3 neighbors")))?;
        let s_prime = (0..k)
            .filter(|&i| i != st / r)
            .find(|&i| (0..r).all(|j| grid_adjacent(reduced, st, i * r + j)))
            .ok_or_else(|| Error::stage(STAGE, Some(b), format!("no column fully adjacent to cluster {st}")))?;

        let near = ball(h, &chosen_h, 4);
        let hb = plan.indep_list[s_prime]
            .iter()
            .copied()
            .find(|w| !near.contains(w) && !assigned_h.contains(w))
            .ok_or_else(|| Error::stage(STAGE, Some(b), format!("independent-neighborhood pool of column {s_prime} exhausted")))?;
        chosen_h.push(hb);
        assigned_h.insert(hb);
        emb.map[hb] = Some(b);
        emb.w_b.push(hb);

        // Iterated common-neighborhood descent into the cores of column s'.
        let targets: Vec<&BitSet> = (0..r).map(|j| &cores[s_prime * r + j]).collect();
        let mut common: Vec<BitSet> = targets.iter().map(|t| (*t).clone()).collect();
        let mut pool = cores[st].clone();
        pool.intersect_with(adj.row(b));
        pool.difference_with(used.words());
        for &u in h.neighbors(hb) {
            let pick = pool
                .iter()
                .map(|v| {
                    let score = common
                        .iter()
                        .zip(&targets)
                        .map(|(cmn, t)| cmn.and_count(adj.row(v)) as f64 / t.count().max(1) as f64)
                        .fold(f64::INFINITY, f64::min);
                    (score, v)
                })
                .max_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)))
                .map(|(_, v)| v)
                .ok_or_else(|| Error::stage(STAGE, Some(b), format!("no free neighbor of {b} left in core {st}")))?;
            for cmn in common.iter_mut() {
                cmn.intersect_with(adj.row(pick));
            }
            pool.remove(pick);
            used.insert(pick);
            emb.map[u] = Some(pick);
        }
    }
    let mut z: Vec<usize> = emb.w_b.clone();
    for &hb in &emb.w_b {
        z.extend_from_slice(h.neighbors(hb));
    }
    emb.frozen = normalize(z);
    emb.w_b = normalize(emb.w_b);

    // Candidate sets for the second neighborhood of W_B.
    let zset: BTreeSet<usize> = emb.frozen.iter().copied().collect();
    let second: BTreeSet<usize> = emb.frozen.iter().flat_map(|&u| h.neighbors(u).iter().copied()).filter(|w| !zset.contains(w)).collect();
    for w in second {
        let (i, j) = plan.f[w];
        let cidx = i * r + j;
        let mut cw = cores[cidx].clone();
        cw.difference_with(used.words());
        for &u in h.neighbors(w) {
            if let Some(x) = emb.map[u] {
                cw.intersect_with(adj.row(x));
            }
        }
        let need = 2.0 * params.c * part.m[cidx] as f64;
        if (cw.count() as f64) < need - 1e-9 {
            return Err(Error::stage(STAGE, Some(w), format!("C_{w} has {} vertices, needs {need:.2}", cw.count())));
        }
        emb.candidates.insert(w, cw.to_vec());
    }
    validate_pre_embedding(gp, h, part, plan, &emb, params)?;
    Ok(emb)
}

fn part_p(params: &EmbedParams) -> f64 {
    params.engine.p
}

/// Clauses of the bad-set pre-embedding: `B ⊆ g(Z) ⊆ B ∪ cores`, `Z = W_B ∪ N(W_B)`,
/// pairwise H-distance at least 5 within `W_B`, and the `C_w` conditions.
pub fn validate_pre_embedding(
    gp: &Graph,
    h: &Graph,
    part: &ClusterPartition,
    plan: &HPlan,
    emb: &Embedding,
    params: &EmbedParams,
) -> Result<()> {
    let fail = |m: String| Err(Error::stage("pre_embed_B", None, m));
    let images: BTreeSet<usize> = emb.frozen.iter().filter_map(|&z| emb.map[z]).collect();
    if emb.frozen.iter().any(|&z| emb.map[z].is_none()) {
        return fail("a frozen vertex is unembedded".into());
    }
    let bad: BTreeSet<usize> = part.bad.iter().copied().collect();
    if !bad.is_subset(&images) {
        return fail("B is not covered".into());
    }
    let core_union: BTreeSet<usize> = part.cores.iter().flatten().copied().collect();
    if images.iter().any(|v| !bad.contains(v) && !core_union.contains(v)) {
        return fail("image outside B and the cores".into());
    }
    let mut z: BTreeSet<usize> = emb.w_b.iter().copied().collect();
    for &w in &emb.w_b {
        z.extend(h.neighbors(w).iter().copied());
    }
    if z.into_iter().collect::<Vec<_>>() != emb.frozen {
        return fail("Z differs from W_B ∪ N(W_B)".into());
    }
    for (idx, &a) in emb.w_b.iter().enumerate() {
        let dist = h.distances_from(&[a], 4);
        if emb.w_b[idx + 1..].iter().any(|&b| dist[b] != usize::MAX) {
            return fail(format!("vertices of W_B within distance 4 of {a}"));
        }
    }
    let near_x = ball(h, &plan.x, 2);
    if emb.frozen.iter().any(|z| near_x.contains(z)) {
        return fail("Z meets the 2-neighborhood of X".into());
    }
    for (&w, cw) in &emb.candidates {
        let (i, j) = plan.f[w];
        let cidx = i * part.r + j;
        if cw.iter().any(|v| images.contains(v) || part.cores[cidx].binary_search(v).is_err()) {
            return fail(format!("C_{w} leaves the core or meets g(Z)"));
        }
        if (cw.len() as f64) < 2.0 * params.c * part.m[cidx] as f64 - 1e-9 {
            return fail(format!("C_{w} too small"));
        }
    }
    emb.check(h, gp).map_err(|e| e.in_stage("pre_embed_B"))
}

/// Targets `n_{i,j} = |W_{i,j} \ Z| + |V*_{i,j} ∩ g(Z)|`.
pub fn targets_after_pre_embedding(part: &ClusterPartition, plan: &HPlan, emb: &Embedding) -> Vec<usize> {
    let zset: BTreeSet<usize> = emb.frozen.iter().copied().collect();
    let images: BTreeSet<usize> = emb.frozen.iter().filter_map(|&z| emb.map[z]).collect();
    (0..part.clusters.len())
        .map(|c| {
            let w = plan.blocks[c].iter().filter(|v| !zset.contains(v)).count();
            let delta = part.cores[c].iter().filter(|v| images.contains(v)).count();
            w + delta
        })
        .collect()
}

/// Embed X vertex by vertex (ascending vertex id), each into its cluster and the
/// common neighborhood of its embedded X-neighbors, choosing the image that keeps
/// the smallest neighbor candidate set largest. Afterwards every `y ∈ N(X) \ X`
/// gets `C_y` with `|C_y| >= c |V_{f(y)}|`.
pub fn partial_embed_x(
    gp: &Graph,
    h: &Graph,
    part: &ClusterPartition,
    plan: &HPlan,
    emb: &Embedding,
    params: &EmbedParams,
) -> Result<Embedding> {
    const STAGE: &str = "partial_embed_X";
    let mut emb = emb.clone();
    if plan.x.is_empty() {
        return Ok(emb);
    }
    let r = part.r;
    let xset: BTreeSet<usize> = plan.x.iter().copied().collect();
    let y: BTreeSet<usize> = plan.x.iter().flat_map(|&x| h.neighbors(x).iter().copied()).filter(|v| !xset.contains(v)).collect();
    if !emb.frozen.is_empty() {
        let near_z = ball(h, &emb.frozen, 2);
        if let Some(&x) = plan.x.iter().find(|x| near_z.contains(x)) {
            return Err(Error::stage(STAGE, Some(x), "X meets the 2-neighborhood of Z".to_string()));
        }
        let zset: BTreeSet<usize> = emb.frozen.iter().copied().collect();
        if let Some(&w) = y.iter().find(|w| emb.candidates.contains_key(w) && !zset.contains(w)) {
            return Err(Error::stage(STAGE, Some(w), "constraints from X and from Z overlap".to_string()));
        }
    }
    let adj = BitMatrix::from_graph(gp);
    let used = emb.used_hosts(gp.n());
    let pools: Vec<BitSet> = part
        .clusters
        .iter()
        .map(|c| {
            let mut s = BitSet::from_iter_len(gp.n(), c.iter().copied());
            s.difference_with(used.words());
            s
        })
        .collect();
    let mut pools = pools;
    let cell = |w: usize| plan.f[w].0 * r + plan.f[w].1;

    let current_candidates = |w: usize, emb: &Embedding, pools: &[BitSet]| {
        let mut c = pools[cell(w)].clone();
        for &u in h.neighbors(w) {
            if let Some(x) = emb.map[u] {
                c.intersect_with(adj.row(x));
            }
        }
        c
    };

    for &x in &plan.x {
        let cand = current_candidates(x, &emb, &pools);
        if cand.is_empty() {
            let trace = h
                .neighbors(x)
                .iter()
                .filter_map(|&u| emb.map[u].map(|img| format!("neighbor {u} at host {img}")))
                .chain(std::iter::once(format!("cluster {:?} has {} free vertices", plan.f[x], pools[cell(x)].count())))
                .collect();
            return Err(Error::stage_with_trace(STAGE, Some(x), format!("candidate set of {x} is empty"), trace));
        }
        let open: Vec<(usize, BitSet)> =
            h.neighbors(x).iter().filter(|&&u| emb.map[u].is_none()).map(|&u| (u, current_candidates(u, &emb, &pools))).collect();
        let pick = cand
            .iter()
            .map(|v| {
                let score = open
                    .iter()
                    .map(|(u, cu)| {
                        let mut own = cu.and_count(adj.row(v));
                        if cu.contains(v) {
                            own -= 1;
                        }
                        own as f64 / part.clusters[cell(*u)].len().max(1) as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                (score, v)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|(_, v)| v)
            .expect("non-empty candidate set");
        emb.map[x] = Some(pick);
        pools[cell(x)].remove(pick);
    }
    for &w in &y {
        let cw = current_candidates(w, &emb, &pools);
        let need = params.c * part.clusters[cell(w)].len() as f64;
        if (cw.count() as f64) < need - 1e-9 {
            return Err(Error::stage(STAGE, Some(w), format!("C_{w} has {} vertices, needs {need:.2}", cw.count())));
        }
        emb.candidates.insert(w, cw.to_vec());
    }
    emb.check(h, gp).map_err(|e| e.in_stage(STAGE))?;
    Ok(emb)
}

/// Maximum bipartite matching (Hopcroft–Karp). `adj[l]` lists right vertices.
/// Returns `match_left[l]`.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Vec<Option<usize>> {
    let nl = adj.len();
    let mut ml: Vec<Option<usize>> = vec![None; nl];
    let mut mr: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![usize::MAX; nl];
    loop {
        let mut queue = VecDeque::new();
        for l in 0..nl {
            if ml[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &rr in &adj[l] {
                match mr[rr] {
                    None => found = true,
                    Some(l2) if dist[l2] == usize::MAX => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        fn augment(l: usize, adj: &[Vec<usize>], ml: &mut [Option<usize>], mr: &mut [Option<usize>], dist: &mut [usize], it: &mut [usize]) -> bool {
            while it[l] < adj[l].len() {
                let rr = adj[l][it[l]];
                it[l] += 1;
                let ok = match mr[rr] {
                    None => true,
                    Some(l2) => dist[l2] == dist[l] + 1 && augment(l2, adj, ml, mr, dist, it),
                };
                if ok {
                    ml[l] = Some(rr);
                    mr[rr] = Some(l);
                    return true;
                }
            }
            dist[l] = usize::MAX;
            false
        }
        let mut it = vec![0usize; nl];
        let mut progress = false;
        for l in 0..nl {
            if ml[l].is_none() && augment(l, adj, &mut ml, &mut mr, &mut dist, &mut it) {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    ml
}

/// For an unmatched left vertex, the left set reachable by alternating paths;
/// its neighborhood is one smaller than itself.
pub fn hall_violator(adj: &[Vec<usize>], n_right: usize, ml: &[Option<usize>]) -> Option<(Vec<usize>, Vec<usize>)> {
    let start = (0..adj.len()).find(|&l| ml[l].is_none())?;
    let mut mr = vec![None; n_right];
    for (l, m) in ml.iter().enumerate() {
        if let Some(rr) = m {
            mr[*rr] = Some(l);
        }
    }
    let mut left = BTreeSet::from([start]);
    let mut right = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(l) = queue.pop_front() {
        for &rr in &adj[l] {
            if right.insert(rr) {
                if let Some(l2) = mr[rr] {
                    if left.insert(l2) {
                        queue.push_back(l2);
                    }
                }
            }
        }
    }
    Some((left.into_iter().collect(), right.into_iter().collect()))
}

/// Complete the embedding column by column (the given order), cluster by cluster in
/// color order: greedy placement while many vertices remain, exact matching for the rest.
pub fn blowup_embed(
    gp: &Graph,
    h: &Graph,
    part: &ClusterPartition,
    plan: &HPlan,
    emb: &Embedding,
    params: &EmbedParams,
) -> Result<Embedding> {
    let order: Vec<usize> = (0..part.k).collect();
    blowup_embed_in_order(gp, h, part, plan, emb, params, &order)
}

pub fn blowup_embed_in_order(
    gp: &Graph,
    h: &Graph,
    part: &ClusterPartition,
    plan: &HPlan,
    emb: &Embedding,
    params: &EmbedParams,
    column_order: &[usize],
) -> Result<Embedding> {
    const STAGE: &str = "blowup";
    let r = part.r;
    let n_host = gp.n();
    let mut emb = emb.clone();
    let adj = BitMatrix::from_graph(gp);
    let used = emb.used_hosts(n_host);
    let mut free = BitSet::full(n_host);
    free.difference_with(used.words());
    let cell = |w: usize| plan.f[w].0 * r + plan.f[w].1;
    let delta = h.max_degree().max(1);

    // Candidate sets: cluster pool, explicit constraints, embedded neighbors.
    let mut cand: Vec<Option<BitSet>> = vec![None; h.n()];
    for w in 0..h.n() {
        if emb.map[w].is_some() {
            continue;
        }
        let mut c = BitSet::from_iter_len(n_host, part.clusters[cell(w)].iter().copied());
        c.intersect_with(free.words());
        if let Some(cw) = emb.candidates.get(&w) {
            c.intersect_with(BitSet::from_iter_len(n_host, cw.iter().copied()).words());
        }
        for &u in h.neighbors(w) {
            if let Some(x) = emb.map[u] {
                c.intersect_with(adj.row(x));
            }
        }
        cand[w] = Some(c);
    }

    for &i in column_order {
        for j in 0..r {
            let cidx = i * r + j;
            let mut todo: Vec<usize> = plan.blocks[cidx].iter().copied().filter(|&w| emb.map[w].is_none()).collect();
            let mut pool = BitSet::from_iter_len(n_host, part.clusters[cidx].iter().copied());
            pool.intersect_with(free.words());
            if todo.len() != pool.count() {
                return Err(Error::stage(
                    STAGE,
                    None,
                    format!("cluster ({i},{j}) has {} free hosts for {} H-vertices", pool.count(), todo.len()),
                ));
            }
            todo.sort_by_key(|&w| (std::cmp::Reverse(h.degree(w)), w));
            let threshold = (params.buffer_factor * delta as f64 * params.engine.eps * part.clusters[cidx].len() as f64).ceil() as usize;
            let greedy_count = todo.len().saturating_sub(threshold);
            let (greedy, rest) = todo.split_at(greedy_count);
            for &w in greedy {
                let mut cw = cand[w].clone().expect("unembedded");
                cw.intersect_with(free.words());
                if cw.is_empty() {
                    let trace = h.neighbors(w).iter().filter_map(|&u| emb.map[u].map(|x| format!("neighbor {u} at host {x}"))).collect();
                    return Err(Error::stage_with_trace(STAGE, Some(w), format!("candidate set of {w} emptied"), trace));
                }
                let open: Vec<usize> = h.neighbors(w).iter().copied().filter(|&u| emb.map[u].is_none()).collect();
                let pick = cw
                    .iter()
                    .map(|v| {
                        let score = open
                            .iter()
                            .map(|&u| {
                                let cu = cand[u].as_ref().expect("unembedded");
                                let cnt = and_count3(cu.words(), free.words(), adj.row(v));
                                cnt as f64 / part.clusters[cell(u)].len().max(1) as f64
                            })
                            .fold(f64::INFINITY, f64::min);
                        (score, v)
                    })
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map(|(_, v)| v)
                    .expect("non-empty");
                place(w, pick, h, &adj, &mut emb, &mut cand, &mut free);
            }
            // Remaining vertices of this cluster are pairwise non-adjacent: exact matching.
            let hosts: Vec<usize> = {
                let mut p = BitSet::from_iter_len(n_host, part.clusters[cidx].iter().copied());
                p.intersect_with(free.words());
                p.to_vec()
            };
            let local: BTreeMap<usize, usize> = hosts.iter().enumerate().map(|(idx, &v)| (v, idx)).collect();
            let madj: Vec<Vec<usize>> = rest
                .iter()
                .map(|&w| {
                    let mut cw = cand[w].clone().expect("unembedded");
                    cw.intersect_with(free.words());
                    cw.iter().filter_map(|v| local.get(&v).copied()).collect()
                })
                .collect();
            let ml = hopcroft_karp(&madj, hosts.len());
            if ml.iter().any(Option::is_none) {
                let (ls, rs) = hall_violator(&madj, hosts.len(), &ml).expect("unmatched vertex exists");
                let set: Vec<usize> = ls.iter().map(|&l| rest[l]).collect();
                let trace = vec![
                    format!("hall set {:?}", set),
                    format!("its candidate union has {} hosts: {:?}", rs.len(), rs.iter().map(|&x| hosts[x]).collect::<Vec<_>>()),
                ];
                return Err(Error::stage_with_trace(
                    STAGE,
                    set.first().copied(),
                    format!("matching infeasible in cluster ({i},{j}): {} vertices see only {} hosts", set.len(), rs.len()),
                    trace,
                ));
            }
            for (l, m) in ml.iter().enumerate() {
                place(rest[l], hosts[m.expect("perfect matching")], h, &adj, &mut emb, &mut cand, &mut free);
            }
        }
    }
    emb.candidates.clear();
    emb.check(h, gp).map_err(|e| e.in_stage(STAGE))?;
    Ok(emb)
}

#[inline]
fn and_count3(a: &[u64], b: &[u64], c: &[u64]) -> usize {
    a.iter().zip(b).zip(c).map(|((x, y), z)| (x & y & z).count_ones() as usize).sum()
}

fn place(w: usize, v: usize, h: &Graph, adj: &BitMatrix, emb: &mut Embedding, cand: &mut [Option<BitSet>], free: &mut BitSet) {
    emb.map[w] = Some(v);
    cand[w] = None;
    free.remove(v);
    for &u in h.neighbors(w) {
        if let Some(cu) = cand[u].as_mut() {
            cu.intersect_with(adj.row(v));
        }
    }
}

/// Insert an isolated vertex after every `floor(beta^2 n) - 1` vertices of `H` (in label
/// order) and append isolated vertices up to `n_target`.
pub fn pad_with_isolates(h: &Graph, l: &Labeling, beta: f64, n_target: usize) -> Result<(Graph, Labeling)> {
    let n = h.n();
    if l.len() != n {
        return Err(Error::InvalidArgument("labeling does not match H".into()));
    }
    let reserve = (1.0 / (beta * beta)).ceil() as usize;
    if n + reserve > n_target {
        return Err(Error::InvalidArgument(format!("|V(H)| = {n} exceeds n_target - ceil(1/beta^2) = {}", n_target.saturating_sub(reserve))));
    }
    let window = (beta * beta * n_target as f64).floor() as usize;
    if window < 2 {
        return Err(Error::InvalidArgument(format!("window beta^2 n = {window} is too short")));
    }
    let chunk = window - 1;
    let order = l.order();
    let mut new_id = vec![0usize; n];
    let mut new_order = Vec::with_capacity(n_target);
    let mut next = n;
    for (pos, &v) in order.iter().enumerate() {
        new_id[v] = v;
        new_order.push(v);
        if (pos + 1) % chunk == 0 {
            new_order.push(next);
            next += 1;
        }
    }
    while next < n_target {
        new_order.push(next);
        next += 1;
    }
    let g = Graph::from_edges(n_target, h.edges().map(|(a, b)| (new_id[a], new_id[b])))?;
    Ok((g, Labeling::from_order(&new_order)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanningReport {
    pub embedding: Embedding,
    pub k: usize,
    pub r: usize,
    pub bad: usize,
    pub x: usize,
    pub moves: usize,
    pub host_min_degree: usize,
}

/// Full pipeline: partition the host, plan H, cover B, resize, embed X, blow up.
/// `g_ref` is the unpruned random graph used for bad-set degrees.
pub fn embed_spanning(
    gp: &Graph,
    g_ref: Option<&Graph>,
    h: &Graph,
    labeling: Option<&Labeling>,
    params: &EmbedParams,
) -> Result<SpanningReport> {
    let n = gp.n();
    let r = params.engine.r;
    if h.n() != n {
        return Err(Error::stage("precondition", None, format!("|V(H)| = {} but |V(G')| = {n}", h.n())));
    }
    let floor = (1.0 - 1.0 / r as f64 + params.engine.gamma) * n as f64 * params.engine.p;
    if (gp.min_degree() as f64) < floor - 1e-9 {
        return Err(Error::stage(
            "precondition",
            None,
            format!("minimum degree {} below (1 - 1/r + gamma) n p = {floor:.1}", gp.min_degree()),
        ));
    }
    let l = match labeling {
        Some(l) => l.clone(),
        None => heuristic_labeling(h),
    };
    let coloring = proper_coloring(h, r).map_err(|e| e.in_stage("coloring"))?;
    let coloring = balance_coloring(h, &l, &coloring);
    let (part, reduced) = build_partition_engine(gp, g_ref, &params.engine)?;
    let plan = plan_h(h, &l, &coloring, part.k, &part.m, params.beta, params.xi, params.consts).map_err(|e| e.in_stage("plan_H"))?;
    let emb = pre_embed_b(gp, h, &part, &reduced, &plan, params)?;
    let targets = targets_after_pre_embedding(&part, &plan, &emb);
    let (resized, moves) = resize_partition(gp, &part, &targets).map_err(|e| e.in_stage("resize"))?;
    let emb = partial_embed_x(gp, h, &resized, &plan, &emb, params)?;
    let emb = blowup_embed(gp, h, &resized, &plan, &emb, params)?;
    validate_total_embedding(h, gp, &emb.map, true).map_err(|e| e.in_stage("validate"))?;
    Ok(SpanningReport {
        k: part.k,
        r,
        bad: part.bad.len(),
        x: plan.x.len(),
        moves: moves.len(),
        host_min_degree: gp.min_degree(),
        embedding: emb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::prune_to_floor;
    use crate::bandwidth::{labeling_bandwidth, Coloring};
    use crate::graphcore::{complete, complete_multipartite, cycle, disjoint_copies, disjoint_union, generate_gnp, path};
    use proptest::prelude::*;

    fn c4_block_labeling(copies: usize) -> Labeling {
        // Order each C4 (a b c d) as a b d c: bandwidth 2.
        let order: Vec<usize> = (0..copies).flat_map(|t| [4 * t, 4 * t + 1, 4 * t + 3, 4 * t + 2]).collect();
        Labeling::from_order(&order).unwrap()
    }

    fn desk_params(r: usize, p: f64, eps: f64, seed: u64, delta: usize) -> EmbedParams {
        let mut engine = EngineParams::new(r, 0.1, p, eps, seed);
        engine.d = 0.1;
        engine.xi0 = 0.05;
        let mut params = EmbedParams::new(engine, 0.002, 0.05, delta);
        params.consts = PlanConstants { beta_denominator: 0.01, block_factor: 1.0 };
        params
    }

    #[test]
    fn hopcroft_karp_and_hall() {
        let adj = vec![vec![0, 1], vec![0], vec![1, 2]];
        let ml = hopcroft_karp(&adj, 3);
        assert!(ml.iter().all(Option::is_some));
        let adj = vec![vec![0], vec![0], vec![1]];
        let ml = hopcroft_karp(&adj, 2);
        assert_eq!(ml.iter().filter(|m| m.is_some()).count(), 2);
        let (ls, rs) = hall_violator(&adj, 2, &ml).unwrap();
        assert_eq!(ls, vec![0, 1]);
        assert_eq!(rs, vec![0]);
    }

    #[test]
    fn perfect_matching_into_complete_bipartite() {
        let n = 40;
        let gp = complete_multipartite(&[20, 20]).unwrap();
        let h = disjoint_copies(&path(2), 20).unwrap();
        let mut params = desk_params(2, 1.0, 0.2, 1, 1);
        params.engine.k = Some(1);
        params.engine.d = 0.5;
        let part = ClusterPartition {
            n,
            k: 1,
            r: 2,
            bad: vec![],
            clusters: vec![(0..20).collect(), (20..40).collect()],
            cores: vec![(0..20).collect(), (20..40).collect()],
            m: vec![20, 20],
            d: 0.5,
            eps: 0.2,
            xi0: 0.05,
            b0: 0,
            k0: 1,
            max_parts: 2,
            min_parts: 2,
            diagnostics: crate::regularity::EngineDiagnostics {
                host_min_degree: 20,
                degree_floor: 0.0,
                floor_ok: true,
                refined_pairs: 0,
                displaced: 0,
                deficient: 0,
                unplaced_to_b: 0,
                reduced_min_degree: 1,
            },
        };
        let f: Vec<(usize, usize)> = (0..n).map(|v| (0, v % 2)).collect();
        let blocks = vec![(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
        let plan = HPlan { k: 1, r: 2, f, x: vec![], blocks, indep_list: vec![vec![]], cuts: vec![], beta: 0.1, xi: 0.1 };
        for factor in [0.0, 3.0] {
            params.buffer_factor = factor;
            let emb = blowup_embed(&gp, &h, &part, &plan, &Embedding::empty(n), &params).unwrap();
            validate_total_embedding(&h, &gp, &emb.map, true).unwrap();
        }
    }

    #[test]
    fn matching_failure_reports_hall_set() {
        // Host: K_{2,2} plus a pendant-free split; H wants a perfect matching of a
        // cluster pair whose bipartite graph has no perfect matching.
        let gp = Graph::from_edges(4, [(0, 2), (1, 2)]).unwrap();
        let h = disjoint_copies(&path(2), 2).unwrap();
        let mut params = desk_params(2, 1.0, 0.2, 1, 1);
        params.buffer_factor = 10.0;
        let part = ClusterPartition {
            n: 4,
            k: 1,
            r: 2,
            bad: vec![],
            clusters: vec![vec![0, 1], vec![2, 3]],
            cores: vec![vec![0, 1], vec![2, 3]],
            m: vec![2, 2],
            d: 0.0,
            eps: 0.2,
            xi0: 0.05,
            b0: 0,
            k0: 1,
            max_parts: 2,
            min_parts: 2,
            diagnostics: crate::regularity::EngineDiagnostics {
                host_min_degree: 0,
                degree_floor: 0.0,
                floor_ok: true,
                refined_pairs: 0,
                displaced: 0,
                deficient: 0,
                unplaced_to_b: 0,
                reduced_min_degree: 1,
            },
        };
        let plan = HPlan {
            k: 1,
            r: 2,
            f: vec![(0, 0), (0, 1), (0, 0), (0, 1)],
            x: vec![],
            blocks: vec![vec![0, 2], vec![1, 3]],
            indep_list: vec![vec![]],
            cuts: vec![],
            beta: 0.1,
            xi: 0.1,
        };
        let err = blowup_embed(&gp, &h, &part, &plan, &Embedding::empty(4), &params).unwrap_err();
        let st = err.as_stage().unwrap();
        assert_eq!(st.stage, "blowup");
        assert!(st.message.contains("matching infeasible"), "{}", st.message);
    }

    #[test]
    fn padding_properties() {
        let h = disjoint_copies(&complete(4), 20).unwrap();
        let l = heuristic_labeling(&h);
        let bw = labeling_bandwidth(&h, l.labels()).unwrap();
        let beta = 0.25;
        let (hp, lp) = pad_with_isolates(&h, &l, beta, 100).unwrap();
        assert_eq!(hp.n(), 100);
        assert_eq!(hp.edge_count(), h.edge_count());
        let window = (beta * beta * 100.0) as usize;
        let order = lp.order();
        for a in 0..=100 - window - 1 {
            assert!(order[a..=a + window].iter().any(|&v| crate::bandwidth::has_independent_neighborhood(&hp, v)));
        }
        let bwp = labeling_bandwidth(&hp, lp.labels()).unwrap();
        assert!(bwp <= bw + (1.0 / (beta * beta)).ceil() as usize);
        assert!(pad_with_isolates(&h, &l, beta, 85).is_err());
        let empty = Graph::empty(10);
        let (ep, _) = pad_with_isolates(&empty, &Labeling::identity(10), 0.5, 30).unwrap();
        assert_eq!((ep.n(), ep.edge_count()), (30, 0));
    }

    #[test]
    fn identity_size_complete_graph() {
        let n = 400;
        let gp = complete(n);
        let h = disjoint_copies(&cycle(4).unwrap(), n / 4).unwrap();
        let mut params = desk_params(2, 1.0, 0.2, 3, 2);
        params.engine.k = Some(2);
        params.engine.d = 0.5;
        params.beta = 0.01;
        let l = c4_block_labeling(n / 4);
        let rep = embed_spanning(&gp, None, &h, Some(&l), &params).unwrap();
        assert!(rep.embedding.is_total());
        validate_total_embedding(&h, &gp, &rep.embedding.map, true).unwrap();
    }

    #[test]
    fn c4_factor_with_path_block_on_pruned_host() {
        let n = 1200;
        let p = 0.6;
        let g = generate_gnp(n, p, 21).unwrap();
        let floor = ((0.5 + 0.1) * n as f64 * p).ceil() as usize;
        let (gp, _) = prune_to_floor(&g, floor, 21).unwrap();
        // C4 copies around a Hamilton path of 40 vertices placed in the middle of the labels.
        let copies = (n - 40) / 4;
        let before = copies / 2;
        let c4s = disjoint_copies(&cycle(4).unwrap(), copies).unwrap();
        let hpath = path(40);
        let h = disjoint_union(&[&c4s, &hpath]);
        let mut order: Vec<usize> = (0..before).flat_map(|t| [4 * t, 4 * t + 1, 4 * t + 3, 4 * t + 2]).collect();
        order.extend(4 * copies..4 * copies + 40);
        order.extend((before..copies).flat_map(|t| [4 * t, 4 * t + 1, 4 * t + 3, 4 * t + 2]));
        let l = Labeling::from_order(&order).unwrap();
        let mut params = desk_params(2, p, 0.2, 21, 2);
        params.beta = 0.004;
        params.engine.k = Some(2);
        let rep = embed_spanning(&gp, Some(&g), &h, Some(&l), &params).unwrap();
        assert!(rep.x >= 1);
        validate_total_embedding(&h, &gp, &rep.embedding.map, true).unwrap();
    }

    #[test]
    fn bad_vertex_is_covered_by_pre_embedding() {
        let n = 1200;
        let p = 0.5;
        let g0 = generate_gnp(n, p, 5).unwrap();
        // Vertex 7 becomes adjacent to everything: far above its degree band.
        let mut e: BTreeSet<(usize, usize)> = g0.edges().collect();
        e.extend((0..n).filter(|&v| v != 7).map(|v| (7.min(v), 7.max(v))));
        let g = Graph::from_edges(n, e).unwrap();
        let floor = ((0.5 + 0.1) * n as f64 * p).ceil() as usize;
        let (gp, _) = prune_to_floor(&g, floor, 5).unwrap();
        let copies = n / 3;
        let h = disjoint_copies(&path(3), copies).unwrap();
        let l = Labeling::identity(n);
        let mut params = desk_params(2, p, 0.2, 5, 2);
        params.beta = 0.004;
        params.engine.k = Some(2);
        let coloring = balance_coloring(&h, &l, &proper_coloring(&h, 2).unwrap());
        let (part, reduced) = build_partition_engine(&gp, Some(&g), &params.engine).unwrap();
        assert!(part.bad.contains(&7));
        let plan = plan_h(&h, &l, &coloring, part.k, &part.m, params.beta, params.xi, params.consts).unwrap();
        let emb = pre_embed_b(&gp, &h, &part, &reduced, &plan, &params).unwrap();
        assert_eq!(emb.w_b.len(), part.bad.len());
        for (&w, cw) in &emb.candidates {
            let (i, j) = plan.f[w];
            assert!(cw.len() as f64 >= 2.0 * params.c * part.m[i * 2 + j] as f64);
        }
        let targets = targets_after_pre_embedding(&part, &plan, &emb);
        assert_eq!(targets.iter().sum::<usize>(), n - part.bad.len());
        let (resized, _) = resize_partition(&gp, &part, &targets).unwrap();
        let emb = partial_embed_x(&gp, &h, &resized, &plan, &emb, &params).unwrap();
        let a = blowup_embed(&gp, &h, &resized, &plan, &emb, &params).unwrap();
        let b = blowup_embed_in_order(&gp, &h, &resized, &plan, &emb, &params, &[1, 0]).unwrap();
        validate_total_embedding(&h, &gp, &a.map, true).unwrap();
        validate_total_embedding(&h, &gp, &b.map, true).unwrap();
        assert_eq!(a.map, b.map);
    }

    #[test]
    fn k4_factor_has_no_pool_for_bad_vertices() {
        let h = disjoint_copies(&complete(4), 100).unwrap();
        assert!((0..h.n()).all(|v| !crate::bandwidth::has_independent_neighborhood(&h, v)));
    }

    #[test]
    fn empty_bad_set_gives_empty_pre_embedding() {
        let gp = complete(200);
        let h = disjoint_copies(&cycle(4).unwrap(), 50).unwrap();
        let mut params = desk_params(2, 1.0, 0.2, 1, 2);
        params.engine.k = Some(2);
        params.engine.d = 0.5;
        let (part, reduced) = build_partition_engine(&gp, None, &params.engine).unwrap();
        let l = c4_block_labeling(50);
        let c = Coloring { colors: (0..200).map(|v| [0, 1, 0, 1][v % 4]).collect(), r: 2 };
        params.beta = 0.02;
        let plan = plan_h(&h, &l, &c, part.k, &part.m, params.beta, params.xi, params.consts).unwrap();
        let emb = pre_embed_b(&gp, &h, &part, &reduced, &plan, &params).unwrap();
        assert_eq!(emb.embedded_count(), 0);
        assert!(emb.candidates.is_empty());
    }

    #[test]
    fn partial_embedding_fails_loudly_on_emptied_pair() {
        // Two columns; the crossing edge of the path must go from column 0 to column 1,
        // but every edge between cluster (0,0) and (1,1) has been removed.
        let n = 400;
        let gp0 = complete(n);
        let mut params = desk_params(2, 1.0, 0.2, 2, 2);
        params.engine.k = Some(2);
        params.engine.d = 0.5;
        let (part, _) = build_partition_engine(&gp0, None, &params.engine).unwrap();
        let c00: BTreeSet<usize> = part.clusters[0].iter().copied().collect();
        let c11: BTreeSet<usize> = part.clusters[3].iter().copied().collect();
        let c10: BTreeSet<usize> = part.clusters[2].iter().copied().collect();
        let c01: BTreeSet<usize> = part.clusters[1].iter().copied().collect();
        let cross = |a: usize, b: usize| {
            (c00.contains(&a) && c11.contains(&b)) || (c00.contains(&b) && c11.contains(&a)) || (c01.contains(&a) && c10.contains(&b)) || (c01.contains(&b) && c10.contains(&a))
        };
        let gp = gp0.filter_edges(|a, b| !cross(a, b));
        let h = path(n);
        let l = Labeling::identity(n);
        let c = Coloring { colors: (0..n).map(|v| v % 2).collect(), r: 2 };
        params.beta = 0.01;
        let plan = plan_h(&h, &l, &c, 2, &part.m, params.beta, params.xi, params.consts).unwrap();
        assert!(!plan.x.is_empty());
        let err = partial_embed_x(&gp, &h, &part, &plan, &Embedding::empty(n), &params).unwrap_err();
        let st = err.as_stage().unwrap();
        assert_eq!(st.stage, "partial_embed_X");
        assert!(st.vertex.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn matching_is_maximum(edges in proptest::collection::vec((0usize..8, 0usize..8), 0..30)) {
            let mut adj = vec![Vec::new(); 8];
            for &(l, r) in &edges {
                if !adj[l].contains(&r) { adj[l].push(r); }
            }
            let ml = hopcroft_karp(&adj, 8);
            let size = ml.iter().filter(|m| m.is_some()).count();
            // Brute force over left subsets: max matching = min over S of (|N(S)| + 8 - |S|).
            let mut konig = usize::MAX;
            for s in 0u32..256 {
                let mut nb = 0u32;
                for l in 0..8 { if s >> l & 1 == 1 { for &r in &adj[l] { nb |= 1 << r; } } }
                konig = konig.min(nb.count_ones() as usize + 8 - s.count_ones() as usize);
            }
            prop_assert_eq!(size, konig);
            let mut seen = BTreeSet::new();
            for (l, m) in ml.iter().enumerate() {
                if let Some(r) = m { prop_assert!(adj[l].contains(r)); prop_assert!(seen.insert(*r)); }
            }
        }
    }
}
