//! Vertex-disjoint `H0`-packings: backtracking copy search, greedy and
//! local-search packers, an exact oracle for small hosts, and the
//! almost-perfect packing pipeline over a cluster partition.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::bandwidth::{proper_coloring, Coloring, HPlan};
use crate::bits::{BitMatrix, BitSet};
use crate::embedder::{blowup_embed_in_order, EmbedParams, Embedding};
use crate::error::{Error, Result, StageFailure};
use crate::graphcore::{disjoint_copies, normalize, rng_from_seed, Graph, VertexSet};
use crate::regularity::{build_partition_engine, resize_partition, ClusterPartition, EngineParams};

pub const DEFAULT_COPY_BUDGET: u64 = 1_000_000;
pub const EXACT_PACK_LIMIT: usize = 14;

/// Vertex-disjoint copies of `H0`. `copies[c][u]` is the host vertex playing `H0`-vertex `u`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Packing {
    pub n: usize,
    pub h: usize,
    pub copies: Vec<Vec<usize>>,
    pub uncovered: VertexSet,
}

impl Packing {
    pub fn empty(n: usize, h: usize) -> Self {
        Packing { n, h, copies: Vec::new(), uncovered: (0..n).collect() }
    }

    pub fn from_copies(n: usize, h: usize, copies: Vec<Vec<usize>>) -> Self {
        let mut covered = vec![false; n];
        for c in &copies {
            for &v in c {
                covered[v] = true;
            }
        }
        let uncovered = (0..n).filter(|&v| !covered[v]).collect();
        Packing { n, h, copies, uncovered }
    }

    pub fn count(&self) -> usize {
        self.copies.len()
    }

    pub fn uncovered_count(&self) -> usize {
        self.uncovered.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("packing serializes")
    }
}

/// Disjointness, `H0` edge preservation per copy, and exact uncovered complement.
pub fn validate_packing(g: &Graph, h0: &Graph, packing: &Packing) -> Result<()> {
    let n = g.n();
    if packing.n != n || packing.h != h0.n() {
        return Err(Error::InvalidArgument("packing dimensions do not match".into()));
    }
    let mut covered = vec![false; n];
    for (idx, copy) in packing.copies.iter().enumerate() {
        if copy.len() != h0.n() {
            return Err(Error::InvalidArgument(format!("copy {idx} has {} vertices", copy.len())));
        }
        for &v in copy {
            if v >= n || covered[v] {
                return Err(Error::InvalidArgument(format!("copy {idx}: vertex {v} out of range or shared")));
            }
            covered[v] = true;
        }
        for (a, b) in h0.edges() {
            if !g.has_edge(copy[a], copy[b]) {
                return Err(Error::InvalidArgument(format!("copy {idx}: H0 edge {a}-{b} missing")));
            }
        }
    }
    let expected: VertexSet = (0..n).filter(|&v| !covered[v]).collect();
    if expected != packing.uncovered {
        return Err(Error::InvalidArgument("uncovered set is not the complement of the copies".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CopySearch {
    Found(Vec<usize>),
    /// The search space was fully explored.
    Exhausted,
    /// The node budget ran out first.
    Budget,
}

impl CopySearch {
    pub fn found(&self) -> Option<&[usize]> {
        match self {
            CopySearch::Found(c) => Some(c),
            _ => None,
        }
    }
}

/// `H0` vertices in BFS order from `root`, unvisited components appended by degree.
fn search_order(h0: &Graph, root: usize) -> Vec<usize> {
    let mut order = vec![root];
    let mut seen = vec![false; h0.n()];
    seen[root] = true;
    let mut head = 0;
    loop {
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nb: Vec<usize> = h0.neighbors(u).iter().copied().filter(|&w| !seen[w]).collect();
            nb.sort_by_key(|&w| (std::cmp::Reverse(h0.degree(w)), w));
            for w in nb {
                seen[w] = true;
                order.push(w);
            }
        }
        match (0..h0.n()).filter(|&w| !seen[w]).max_by_key(|&w| (h0.degree(w), std::cmp::Reverse(w))) {
            Some(w) => {
                seen[w] = true;
                order.push(w);
            }
            None => return order,
        }
    }
}

struct Searcher<'a> {
    adj: &'a BitMatrix,
    h0: &'a Graph,
    degree: &'a [usize],
    order: Vec<usize>,
    map: Vec<usize>,
    used: BitSet,
    allowed: &'a BitSet,
    nodes: u64,
    budget: u64,
}

enum Step {
    Done,
    Fail,
    Budget,
}

impl Searcher<'_> {
    fn extend(&mut self, depth: usize, sink: &mut dyn FnMut(&[usize]) -> bool) -> Step {
        if depth == self.order.len() {
            return if sink(&self.map) { Step::Done } else { Step::Fail };
        }
        let u = self.order[depth];
        let mut cand = self.allowed.clone();
        cand.difference_with(self.used.words());
        for &w in self.h0.neighbors(u) {
            if self.map[w] != usize::MAX {
                cand.intersect_with(self.adj.row(self.map[w]));
            }
        }
        let mut list = cand.to_vec();
        list.sort_by_key(|&v| (std::cmp::Reverse(self.degree[v]), v));
        for v in list {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Step::Budget;
            }
            self.map[u] = v;
            self.used.insert(v);
            let res = self.extend(depth + 1, sink);
            self.used.remove(v);
            self.map[u] = usize::MAX;
            match res {
                Step::Fail => {}
                other => return other,
            }
        }
        Step::Fail
    }
}

/// Backtracking search for a copy of `H0` avoiding `forbidden`, containing
/// `must_include` when given.
pub fn find_copy_avoiding(g: &Graph, h0: &Graph, must_include: Option<usize>, forbidden: &[usize], budget: u64) -> CopySearch {
    let adj = BitMatrix::from_graph(g);
    let mut allowed = BitSet::full(g.n());
    for &v in forbidden {
        allowed.remove(v);
    }
    find_copy_in(&adj, g, h0, must_include, &allowed, budget)
}

fn find_copy_in(adj: &BitMatrix, g: &Graph, h0: &Graph, must_include: Option<usize>, allowed: &BitSet, budget: u64) -> CopySearch {
    let h = h0.n();
    if h == 0 {
        return CopySearch::Found(Vec::new());
    }
    let degree: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut nodes = 0u64;
    let roots: Vec<usize> = match must_include {
        Some(v) => {
            if v >= g.n() || !allowed.contains(v) {
                return CopySearch::Exhausted;
            }
            // Any H0 vertex may play v; skip those whose degree v cannot carry.
            (0..h).filter(|&a| h0.degree(a) <= degree[v]).collect()
        }
        None => vec![search_order(h0, (0..h).max_by_key(|&a| (h0.degree(a), std::cmp::Reverse(a))).unwrap())[0]],
    };
    for a in roots {
        let order = search_order(h0, a);
        let hosts: Vec<usize> = match must_include {
            Some(v) => vec![v],
            None => {
                let mut l = allowed.to_vec();
                l.sort_by_key(|&v| (std::cmp::Reverse(degree[v]), v));
                l
            }
        };
        for host in hosts {
            if degree[host] < h0.degree(a) {
                continue;
            }
            let mut s = Searcher {
                adj,
                h0,
                degree: &degree,
                order: order.clone(),
                map: vec![usize::MAX; h],
                used: BitSet::new(g.n()),
                allowed,
                nodes,
                budget,
            };
            s.map[a] = host;
            s.used.insert(host);
            let mut found = None;
            let res = s.extend(1, &mut |m| {
                found = Some(m.to_vec());
                true
            });
            nodes = s.nodes;
            match res {
                Step::Done => return CopySearch::Found(found.expect("sink stored the copy")),
                Step::Budget => return CopySearch::Budget,
                Step::Fail => {}
            }
        }
    }
    CopySearch::Exhausted
}

/// Seeded greedy packing: visit vertices in shuffled order and add any copy through
/// the current vertex. With enough budget the result is maximal.
pub fn greedy_pack(g: &Graph, h0: &Graph, forbidden: &[usize], seed: u64, budget: u64) -> Packing {
    let adj = BitMatrix::from_graph(g);
    let mut allowed = BitSet::full(g.n());
    for &v in forbidden {
        allowed.remove(v);
    }
    let copies = greedy_on(&adj, g, h0, &mut allowed, seed, budget);
    Packing::from_copies(g.n(), h0.n(), copies)
}

fn greedy_on(adj: &BitMatrix, g: &Graph, h0: &Graph, allowed: &mut BitSet, seed: u64, budget: u64) -> Vec<Vec<usize>> {
    let mut order = allowed.to_vec();
    order.shuffle(&mut rng_from_seed(seed));
    let mut copies = Vec::new();
    if h0.n() == 0 {
        return copies;
    }
    for v in order {
        if !allowed.contains(v) {
            continue;
        }
        if let CopySearch::Found(c) = find_copy_in(adj, g, h0, Some(v), allowed, budget) {
            for &x in &c {
                allowed.remove(x);
            }
            copies.push(c);
        }
    }
    copies
}

/// Every vertex subset (as a bitmask) carrying a copy of `H0`, with one embedding each.
fn all_copy_masks(g: &Graph, h0: &Graph) -> Vec<(u32, Vec<usize>)> {
    let adj = BitMatrix::from_graph(g);
    let allowed = BitSet::full(g.n());
    let degree: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let root = (0..h0.n()).max_by_key(|&a| (h0.degree(a), std::cmp::Reverse(a))).unwrap();
    let mut seen: HashMap<u32, Vec<usize>> = HashMap::new();
    for host in 0..g.n() {
        let mut s = Searcher {
            adj: &adj,
            h0,
            degree: &degree,
            order: search_order(h0, root),
            map: vec![usize::MAX; h0.n()],
            used: BitSet::new(g.n()),
            allowed: &allowed,
            nodes: 0,
            budget: u64::MAX,
        };
        s.map[root] = host;
        s.used.insert(host);
        s.extend(1, &mut |m| {
            let mask = m.iter().fold(0u32, |acc, &v| acc | 1 << v);
            seen.entry(mask).or_insert_with(|| m.to_vec());
            false
        });
    }
    let mut out: Vec<(u32, Vec<usize>)> = seen.into_iter().collect();
    out.sort();
    out
}

/// Maximum packing by memoized search over vertex masks. Requires `n <= 14`.
pub fn exact_max_pack(g: &Graph, h0: &Graph) -> Result<Packing> {
    let n = g.n();
    if n > EXACT_PACK_LIMIT {
        return Err(Error::InvalidArgument(format!("exact packing needs n <= {EXACT_PACK_LIMIT}, got {n}")));
    }
    if h0.n() == 0 || h0.n() > n {
        return Ok(Packing::empty(n, h0.n()));
    }
    let copies = all_copy_masks(g, h0);
    let mut by_low: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, (mask, _)) in copies.iter().enumerate() {
        by_low[mask.trailing_zeros() as usize].push(idx);
    }
    let mut memo: HashMap<u32, (usize, Option<usize>)> = HashMap::new();
    fn best(avail: u32, copies: &[(u32, Vec<usize>)], by_low: &[Vec<usize>], memo: &mut HashMap<u32, (usize, Option<usize>)>) -> usize {
        if avail == 0 {
            return 0;
        }
        if let Some(&(v, _)) = memo.get(&avail) {
            return v;
        }
        let low = avail.trailing_zeros() as usize;
        let mut value = best(avail & !(1 << low), copies, by_low, memo);
        let mut choice = None;
        for &idx in &by_low[low] {
            let m = copies[idx].0;
            if m & avail == m {
                let v = 1 + best(avail & !m, copies, by_low, memo);
                if v > value {
                    value = v;
                    choice = Some(idx);
                }
            }
        }
        memo.insert(avail, (value, choice));
        value
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    best(full, &copies, &by_low, &mut memo);
    let mut chosen = Vec::new();
    let mut avail = full;
    while avail != 0 {
        let low = avail.trailing_zeros();
        match memo.get(&avail).and_then(|x| x.1) {
            Some(idx) => {
                chosen.push(copies[idx].1.clone());
                avail &= !copies[idx].0;
            }
            None => avail &= !(1 << low),
        }
    }
    Ok(Packing::from_copies(n, h0.n(), chosen))
}

fn h0_diameter(h0: &Graph) -> Option<usize> {
    let mut diam = 0;
    for v in 0..h0.n() {
        let d = h0.distances_from(&[v], usize::MAX);
        for &x in &d {
            if x == usize::MAX {
                return None;
            }
            diam = diam.max(x);
        }
    }
    Some(diam)
}

/// Augmenting local search: drop one or two copies, re-pack their vertices together with
/// nearby uncovered vertices, and keep the result if it holds more copies.
pub fn local_search_pack(g: &Graph, h0: &Graph, start: &Packing, rounds: usize) -> Result<Packing> {
    validate_packing(g, h0, start)?;
    let n = g.n();
    let h = h0.n();
    if h == 0 {
        return Ok(start.clone());
    }
    let radius = h0_diameter(h0);
    let mut copies = start.copies.clone();
    let mut seed = 0u64;
    for _ in 0..rounds {
        let mut improved = false;
        // Pairs are restricted to copies within reach of each other.
        let mut owner = vec![usize::MAX; n];
        for (i, c) in copies.iter().enumerate() {
            for &v in c {
                owner[v] = i;
            }
        }
        let uncovered: Vec<usize> = (0..n).filter(|&v| owner[v] == usize::MAX).collect();
        let near_uncovered = |freed: &[usize]| -> Vec<usize> {
            match radius {
                Some(rad) if n > EXACT_PACK_LIMIT => {
                    let d = g.distances_from(freed, rad);
                    uncovered.iter().copied().filter(|&v| d[v] != usize::MAX).collect()
                }
                _ => uncovered.clone(),
            }
        };
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        subsets.extend((0..copies.len()).map(|i| vec![i]));
        for i in 0..copies.len() {
            let reach: BTreeSet<usize> = match radius {
                Some(rad) if n > EXACT_PACK_LIMIT => {
                    let d = g.distances_from(&copies[i], 2 * rad + 1);
                    (0..n).filter(|&v| d[v] != usize::MAX && owner[v] != usize::MAX && owner[v] > i).map(|v| owner[v]).collect()
                }
                _ => (i + 1..copies.len()).collect(),
            };
            subsets.extend(reach.into_iter().map(|j| vec![i, j]));
        }
        for s in subsets {
            if s.iter().any(|&i| i >= copies.len()) {
                continue;
            }
            let freed: Vec<usize> = s.iter().flat_map(|&i| copies[i].iter().copied()).collect();
            let mut region = freed.clone();
            region.extend(near_uncovered(&freed));
            let region = normalize(region);
            let sub = g.induced(&region);
            let packed = if region.len() <= EXACT_PACK_LIMIT {
                exact_max_pack(&sub, h0)?.copies
            } else {
                seed += 1;
                let sadj = BitMatrix::from_graph(&sub);
                let mut allowed = BitSet::full(sub.n());
                greedy_on(&sadj, &sub, h0, &mut allowed, seed, DEFAULT_COPY_BUDGET)
            };
            if packed.len() > s.len() {
                let mut keep: Vec<Vec<usize>> = copies.iter().enumerate().filter(|(i, _)| !s.contains(i)).map(|(_, c)| c.clone()).collect();
                keep.extend(packed.into_iter().map(|c| c.into_iter().map(|x| region[x]).collect()));
                copies = keep;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    let out = Packing::from_copies(n, h, copies);
    validate_packing(g, h0, &out)?;
    Ok(out)
}

/// `r` proper colorings of `H0`, the `i`-th shifting colors by `i` so that the class sizes
/// rotate; across all shifts every color class has total size `h`.
pub fn rotating_multipartite_coloring(h0: &Graph, r: usize) -> Result<Vec<Coloring>> {
    let base = canonical_coloring(h0, r)?;
    Ok((0..r).map(|i| Coloring { colors: base.colors.iter().map(|&c| (c + i) % r).collect(), r }).collect())
}

/// Proper coloring with colors renumbered by ascending class size, ties by smallest vertex.
fn canonical_coloring(h0: &Graph, r: usize) -> Result<Coloring> {
    let c = proper_coloring(h0, r)?;
    let mut keys: Vec<(usize, usize, usize)> = (0..r)
        .map(|col| {
            let members: Vec<usize> = (0..h0.n()).filter(|&v| c.colors[v] == col).collect();
            (members.len(), members.first().copied().unwrap_or(usize::MAX), col)
        })
        .collect();
    keys.sort();
    let mut rename = vec![0; r];
    for (new, &(_, _, old)) in keys.iter().enumerate() {
        rename[old] = new;
    }
    Ok(Coloring { colors: c.colors.iter().map(|&x| rename[x]).collect(), r })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackParams {
    pub engine: EngineParams,
    /// B-cover stops once fewer than this many bad vertices remain; defaults to `floor(eps p^-2)`.
    pub b_threshold: Option<usize>,
    pub copy_budget: u64,
    pub buffer_factor: f64,
    /// Greedy pass over the leftover vertices after the endgame.
    pub cleanup: bool,
}

impl PackParams {
    pub fn new(mut engine: EngineParams) -> Self {
        engine.strict_redistribution = false;
        PackParams { engine, b_threshold: None, copy_budget: DEFAULT_COPY_BUDGET, buffer_factor: 3.0, cleanup: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackReport {
    pub packing: Packing,
    /// `delta(G') >= (1 - 1/r + gamma) n p`; reported, not enforced.
    pub precondition_ok: bool,
    pub bad: usize,
    pub bad_covered: usize,
    pub b_threshold: usize,
    /// Per-column totals after the divisibility adjustment.
    pub column_totals: Vec<usize>,
    pub grand_total: usize,
    pub trimmed: usize,
    pub endgame_copies: usize,
    pub cleanup_copies: usize,
    pub failed_columns: Vec<usize>,
    pub endgame_error: Option<StageFailure>,
}

/// Per-column totals: multiples of `unit` close to the current sizes, with grand total
/// in `(n' - unit, n']` where possible.
pub fn divisibility_targets(column_sizes: &[usize], unit: usize) -> Vec<usize> {
    let total: usize = column_sizes.iter().sum();
    let mut t: Vec<usize> = column_sizes.iter().map(|&s| s / unit * unit).collect();
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(column_sizes[i] - t[i]), i));
    for i in order {
        if t.iter().sum::<usize>() + unit <= total {
            t[i] += unit;
        }
    }
    t
}

/// Cover bad vertices, fix divisibility, resize, and pack each column perfectly by
/// blow-up embedding of disjoint copies under rotated colorings.
pub fn almost_perfect_pack(gp: &Graph, g_ref: Option<&Graph>, h0: &Graph, params: &PackParams) -> Result<PackReport> {
    let n = gp.n();
    let h = h0.n();
    let r = params.engine.r;
    if h == 0 {
        return Err(Error::InvalidArgument("H0 must have vertices".into()));
    }
    let shifts = rotating_multipartite_coloring(h0, r).map_err(|e| e.in_stage("coloring"))?;
    let floor = (1.0 - 1.0 / r as f64 + params.engine.gamma) * n as f64 * params.engine.p;
    let precondition_ok = gp.min_degree() as f64 >= floor - 1e-9;

    let mut engine = params.engine.clone();
    engine.strict_redistribution = false;
    let (part, _reduced) = build_partition_engine(gp, g_ref, &engine)?;
    let adj = BitMatrix::from_graph(gp);

    // Cover B with copies inside B ∪ cores.
    let threshold = params.b_threshold.unwrap_or_else(|| (engine.eps / (engine.p * engine.p)).floor() as usize);
    let mut allowed = BitSet::from_iter_len(n, part.bad.iter().copied().chain(part.cores.iter().flatten().copied()));
    let mut copies: Vec<Vec<usize>> = Vec::new();
    let mut remaining: Vec<usize> = part.bad.clone();
    let mut bad_covered = 0;
    while !remaining.is_empty() && remaining.len() >= threshold.max(1) {
        let b = remaining.remove(0);
        if !allowed.contains(b) {
            bad_covered += 1;
            continue;
        }
        if let CopySearch::Found(c) = find_copy_in(&adj, gp, h0, Some(b), &allowed, params.copy_budget) {
            for &x in &c {
                allowed.remove(x);
            }
            bad_covered += 1;
            copies.push(c);
        }
    }
    let used: BitSet = {
        let mut u = BitSet::new(n);
        copies.iter().flatten().for_each(|&v| u.insert(v));
        u
    };

    // Shrink clusters and cores by the vertices used for B.
    let mut work = part.clone();
    for c in 0..work.clusters.len() {
        work.clusters[c].retain(|&v| !used.contains(v));
        work.cores[c].retain(|&v| !used.contains(v));
        work.m[c] = work.clusters[c].len();
    }

    let equal = {
        let sizes: Vec<usize> = (0..r).map(|j| shifts[0].colors.iter().filter(|&&c| c == j).count()).collect();
        sizes.iter().all(|&s| s == sizes[0])
    };
    let per_cluster_unit = if equal { h / r } else { h };
    let unit = per_cluster_unit * r;
    let column_sizes: Vec<usize> = (0..part.k).map(|i| (0..r).map(|j| work.m[i * r + j]).sum()).collect();
    let column_totals = divisibility_targets(&column_sizes, unit);
    let targets: Vec<usize> = (0..part.k).flat_map(|i| std::iter::repeat_n(column_totals[i] / r, r)).collect();
    let grand_total = column_totals.iter().sum();

    let mut report = PackReport {
        packing: Packing::empty(n, h),
        precondition_ok,
        bad: part.bad.len(),
        bad_covered,
        b_threshold: threshold,
        column_totals: column_totals.clone(),
        grand_total,
        trimmed: 0,
        endgame_copies: 0,
        cleanup_copies: 0,
        failed_columns: Vec::new(),
        endgame_error: None,
    };

    let endgame = resize_partition(gp, &work, &targets).map_err(|e| e.in_stage("resize")).map(|(resized, _)| trim_to_targets(gp, resized, &targets));
    match endgame {
        Err(e) => report.endgame_error = Some(stage_of(e, "resize")),
        Ok((resized, trimmed)) => {
            report.trimmed = trimmed;
            let (col_copies, failures) = pack_columns(gp, h0, &shifts, &resized, equal, params);
            report.endgame_copies = col_copies.len();
            copies.extend(col_copies);
            for (col, err) in failures {
                report.failed_columns.push(col);
                report.endgame_error.get_or_insert(err);
            }
        }
    }
    if params.cleanup {
        let mut free = BitSet::full(n);
        copies.iter().flatten().for_each(|&v| free.remove(v));
        let extra = greedy_on(&adj, gp, h0, &mut free, engine.seed, params.copy_budget);
        report.cleanup_copies = extra.len();
        copies.extend(extra);
    }
    report.packing = Packing::from_copies(n, h, copies);
    validate_packing(gp, h0, &report.packing).map_err(|e| e.in_stage("validate"))?;
    Ok(report)
}

fn stage_of(e: Error, stage: &str) -> StageFailure {
    match e.in_stage(stage) {
        Error::Stage(s) => *s,
        other => StageFailure { stage: stage.to_string(), vertex: None, message: other.to_string(), trace: Vec::new() },
    }
}

/// Drop surplus vertices (non-core first, weakest column degree first) from clusters above target.
fn trim_to_targets(g: &Graph, mut part: ClusterPartition, targets: &[usize]) -> (ClusterPartition, usize) {
    let r = part.r;
    let mut trimmed = 0;
    for c in 0..part.clusters.len() {
        let excess = part.clusters[c].len().saturating_sub(targets[c]);
        if excess == 0 {
            continue;
        }
        let col = c / r;
        let others: Vec<usize> = (0..r).map(|j| col * r + j).filter(|&x| x != c).collect();
        let mut ranked: Vec<(bool, usize, usize)> = part.clusters[c]
            .iter()
            .map(|&v| {
                let in_core = part.cores[c].binary_search(&v).is_ok();
                let weakest = others.iter().map(|&o| g.degree_into(v, &part.clusters[o])).min().unwrap_or(0);
                (in_core, weakest, v)
            })
            .collect();
        ranked.sort();
        let drop: BTreeSet<usize> = ranked.iter().take(excess).map(|x| x.2).collect();
        part.clusters[c].retain(|v| !drop.contains(v));
        part.cores[c].retain(|v| !drop.contains(v));
        part.m[c] = part.clusters[c].len();
        trimmed += excess;
    }
    (part, trimmed)
}

/// Embed disjoint copies of `H0` into each column separately. Returns the copies and
/// the columns that failed with their errors.
fn pack_columns(
    gp: &Graph,
    h0: &Graph,
    shifts: &[Coloring],
    part: &ClusterPartition,
    equal: bool,
    params: &PackParams,
) -> (Vec<Vec<usize>>, Vec<(usize, StageFailure)>) {
    let (k, r, h) = (part.k, part.r, h0.n());
    let mut all = Vec::new();
    let mut failures = Vec::new();
    for i in 0..k {
        let total: usize = (0..r).map(|j| part.clusters[i * r + j].len()).sum();
        let count = total / h;
        if count == 0 {
            continue;
        }
        let hi = match disjoint_copies(h0, count) {
            Ok(x) => x,
            Err(e) => {
                failures.push((i, stage_of(e, "endgame")));
                continue;
            }
        };
        let f: Vec<(usize, usize)> = (0..hi.n())
            .map(|w| {
                let (copy, u) = (w / h, w % h);
                let shift = if equal { 0 } else { copy % r };
                (i, shifts[shift].colors[u])
            })
            .collect();
        let mut blocks = vec![Vec::new(); k * r];
        for (w, &(a, b)) in f.iter().enumerate() {
            blocks[a * r + b].push(w);
        }
        // Column-local partition view: other columns are empty.
        let mut local = part.clone();
        for c in 0..k * r {
            if c / r != i {
                local.clusters[c].clear();
                local.cores[c].clear();
                local.m[c] = 0;
            }
        }
        let plan = HPlan { k, r, f, x: Vec::new(), blocks, indep_list: vec![Vec::new(); k], cuts: Vec::new(), beta: 0.0, xi: 0.0 };
        let mut ep = EmbedParams::new(params.engine.clone(), 0.0, 0.0, h0.max_degree());
        ep.buffer_factor = params.buffer_factor;
        match blowup_embed_in_order(gp, &hi, &local, &plan, &Embedding::empty(hi.n()), &ep, &[i]) {
            Ok(emb) => {
                for c in 0..count {
                    all.push((0..h).map(|u| emb.map[c * h + u].expect("column embedded")).collect());
                }
            }
            Err(e) => failures.push((i, stage_of(e, "endgame"))),
        }
    }
    (all, failures)
}

/// One CSV summary row of a packing experiment. Wall-clock time is kept out of the
/// row so that repeated runs produce identical bodies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackRow {
    pub n: usize,
    pub p: f64,
    pub r: usize,
    pub adversary: String,
    pub uncovered: usize,
    pub copies: usize,
    pub seed: u64,
}

impl PackRow {
    pub fn new(report: &PackReport, p: f64, r: usize, adversary: &str, seed: u64) -> Self {
        PackRow {
            n: report.packing.n,
            p,
            r,
            adversary: adversary.to_string(),
            uncovered: report.packing.uncovered_count(),
            copies: report.packing.count(),
            seed,
        }
    }
}
