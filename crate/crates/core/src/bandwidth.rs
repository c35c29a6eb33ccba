//! Bandwidth labelings, proper colorings and the grid planner for H.
//!
//! Labels, colors and grid coordinates are 0-based throughout: a labeling is
//! a bijection onto `0..n`, colors are `0..r`, and `f(v) = (i, j)` with
//! `i < k`, `j < r`.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphcore::{Graph, VertexSet};

pub const DEFAULT_BANDWIDTH_BUDGET: u64 = 20_000_000;
pub const DEFAULT_COLORING_BUDGET: u64 = 5_000_000;

/// Bijection V(H) → {0, …, n−1}; `label[v]` is the position of `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Labeling {
    label: Vec<usize>,
}

fn check_bijection(labels: &[usize]) -> Result<()> {
    let n = labels.len();
    let mut seen = vec![false; n];
    for &l in labels {
        if l >= n || seen[l] {
            return Err(Error::NotABijection(n));
        }
        seen[l] = true;
    }
    Ok(())
}

impl Labeling {
    pub fn from_labels(label: Vec<usize>) -> Result<Self> {
        check_bijection(&label)?;
        Ok(Labeling { label })
    }

    /// `order[i]` is the vertex receiving label `i`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        check_bijection(order)?;
        let mut label = vec![0; order.len()];
        for (i, &v) in order.iter().enumerate() {
            label[v] = i;
        }
        Ok(Labeling { label })
    }

    pub fn identity(n: usize) -> Self {
        Labeling { label: (0..n).collect() }
    }

    #[inline]
    pub fn label(&self, v: usize) -> usize {
        self.label[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.label.len()];
        for (v, &l) in self.label.iter().enumerate() {
            order[l] = v;
        }
        order
    }
}

/// max |L(u) − L(v)| over edges; 0 for edgeless graphs.
pub fn labeling_bandwidth(h: &Graph, labels: &[usize]) -> Result<usize> {
    if labels.len() != h.n() {
        return Err(Error::NotABijection(h.n()));
    }
    check_bijection(labels)?;
    Ok(h.edges().map(|(u, v)| labels[u].abs_diff(labels[v])).max().unwrap_or(0))
}

fn bandwidth_of(h: &Graph, l: &Labeling) -> usize {
    h.edges().map(|(u, v)| l.label(u).abs_diff(l.label(v))).max().unwrap_or(0)
}

fn component_lower_bound(h: &Graph) -> usize {
    let mut lb = h.max_degree().div_ceil(2);
    for comp in h.components() {
        if comp.len() < 2 {
            continue;
        }
        let mut diam = 0;
        for &s in &comp {
            let d = h.distances_from(&[s], usize::MAX);
            diam = diam.max(comp.iter().map(|&v| d[v]).max().unwrap_or(0));
        }
        lb = lb.max((comp.len() - 1).div_ceil(diam));
    }
    lb
}

struct Placement<'a> {
    h: &'a Graph,
    b: usize,
    pos: Vec<usize>,
    order: Vec<usize>,
    mask: u64,
    nodes: u64,
    budget: u64,
    failed: HashSet<(u64, Vec<u8>)>,
}

impl Placement<'_> {
    fn deadlines(&self) -> Vec<usize> {
        let n = self.h.n();
        let mut dl = vec![usize::MAX; n];
        for v in 0..n {
            if self.pos[v] == usize::MAX {
                continue;
            }
            for &u in self.h.neighbors(v) {
                if self.pos[u] == usize::MAX {
                    dl[u] = dl[u].min(self.pos[v] + self.b);
                }
            }
        }
        dl
    }

    fn search(&mut self, p: usize) -> Result<bool> {
        let n = self.h.n();
        if p == n {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget { what: "exact_bandwidth", budget: self.budget });
        }
        let window: Vec<u8> = self.order[p.saturating_sub(self.b)..p].iter().map(|&v| v as u8).collect();
        let key = (self.mask, window);
        if self.failed.contains(&key) {
            return Ok(false);
        }
        let dl = self.deadlines();
        let mut finite: Vec<usize> = dl.iter().copied().filter(|&d| d != usize::MAX).collect();
        finite.sort_unstable();
        if finite.iter().enumerate().any(|(i, &d)| d < p + i) {
            self.failed.insert(key);
            return Ok(false);
        }
        let forced: Vec<usize> = (0..n).filter(|&u| dl[u] == p).collect();
        let candidates: Vec<usize> = if forced.is_empty() {
            (0..n).filter(|&u| self.pos[u] == usize::MAX).collect()
        } else {
            forced
        };
        for v in candidates {
            self.pos[v] = p;
            self.order.push(v);
            self.mask |= 1 << v;
            if self.search(p + 1)? {
                return Ok(true);
            }
            self.mask &= !(1 << v);
            self.order.pop();
            self.pos[v] = usize::MAX;
        }
        self.failed.insert(key);
        Ok(false)
    }
}

/// Decides whether bandwidth ≤ b; returns the lexicographically least order.
fn decide(h: &Graph, b: usize, budget: u64, spent: &mut u64) -> Result<Option<Vec<usize>>> {
    let mut st = Placement {
        h,
        b,
        pos: vec![usize::MAX; h.n()],
        order: Vec::with_capacity(h.n()),
        mask: 0,
        nodes: 0,
        budget: budget.saturating_sub(*spent),
        failed: HashSet::new(),
    };
    let found = st.search(0);
    *spent += st.nodes;
    Ok(if found? { Some(st.order) } else { None })
}

pub fn exact_bandwidth(h: &Graph) -> Result<(usize, Labeling)> {
    exact_bandwidth_with_budget(h, DEFAULT_BANDWIDTH_BUDGET)
}

/// Branch and bound over label prefixes with deadline pruning and memoized
/// failed frontiers. The witness is the lexicographically least vertex order
/// achieving the optimum.
pub fn exact_bandwidth_with_budget(h: &Graph, budget: u64) -> Result<(usize, Labeling)> {
    let n = h.n();
    if n > 64 {
        return Err(Error::InvalidArgument("exact bandwidth supports at most 64 vertices".into()));
    }
    if h.edge_count() == 0 {
        return Ok((0, Labeling::identity(n)));
    }
    let ub = bandwidth_of(h, &heuristic_labeling(h));
    let mut spent = 0;
    for b in component_lower_bound(h).max(1)..=ub {
        if let Some(order) = decide(h, b, budget, &mut spent)? {
            return Ok((b, Labeling::from_order(&order)?));
        }
    }
    unreachable!("the heuristic labeling witnesses bandwidth {ub}")
}

fn pseudo_peripheral(h: &Graph, comp: &[usize]) -> usize {
    let mut start = *comp.iter().min_by_key(|&&v| (h.degree(v), v)).expect("non-empty component");
    let mut ecc = 0;
    for _ in 0..comp.len() {
        let d = h.distances_from(&[start], usize::MAX);
        let far = comp.iter().map(|&v| d[v]).max().unwrap_or(0);
        if far <= ecc {
            break;
        }
        ecc = far;
        start = *comp.iter().filter(|&&v| d[v] == far).min_by_key(|&&v| (h.degree(v), v)).expect("eccentric vertex");
    }
    start
}

fn cuthill_mckee(h: &Graph) -> Vec<usize> {
    let mut order = Vec::with_capacity(h.n());
    let mut seen = vec![false; h.n()];
    for comp in h.components() {
        let s = pseudo_peripheral(h, &comp);
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = h.neighbors(u).iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (h.degree(w), w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

/// Best of the given order, Cuthill–McKee and reverse Cuthill–McKee
/// (components concatenated); ties keep the earlier candidate.
pub fn heuristic_labeling(h: &Graph) -> Labeling {
    let cm = cuthill_mckee(h);
    let rcm: Vec<usize> = {
        // Reverse within each component block to keep components contiguous.
        let mut out = Vec::with_capacity(cm.len());
        let mut comp_of = vec![0; h.n()];
        for (ci, comp) in h.components().iter().enumerate() {
            comp.iter().for_each(|&v| comp_of[v] = ci);
        }
        let mut start = 0;
        while start < cm.len() {
            let mut end = start;
            while end < cm.len() && comp_of[cm[end]] == comp_of[cm[start]] {
                end += 1;
            }
            out.extend(cm[start..end].iter().rev());
            start = end;
        }
        out
    };
    let candidates =
        [Labeling::identity(h.n()), Labeling::from_order(&cm).expect("bfs order"), Labeling::from_order(&rcm).expect("bfs order")];
    candidates.into_iter().min_by_key(|l| bandwidth_of(h, l)).expect("three candidates")
}

/// Proper coloring V(H) → {0, …, r−1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub colors: Vec<usize>,
    pub r: usize,
}

impl Coloring {
    pub fn is_proper(&self, h: &Graph) -> bool {
        self.colors.len() == h.n() && self.colors.iter().all(|&c| c < self.r) && h.edges().all(|(u, v)| self.colors[u] != self.colors[v])
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.r];
        self.colors.iter().for_each(|&c| s[c] += 1);
        s
    }
}

pub fn proper_coloring(h: &Graph, r: usize) -> Result<Coloring> {
    proper_coloring_with_budget(h, r, DEFAULT_COLORING_BUDGET)
}

const EXACT_COMPONENT_LIMIT: usize = 30;
const DSATUR_ATTEMPTS: usize = 64;

/// Components with at most 30 vertices are colored by exhaustive backtracking
/// (so failure there is a proof); larger ones by DSATUR with seeded retries.
pub fn proper_coloring_with_budget(h: &Graph, r: usize, budget: u64) -> Result<Coloring> {
    if r < 1 {
        return Err(Error::InvalidArgument("need at least one color".into()));
    }
    let mut colors = vec![usize::MAX; h.n()];
    let mut spent = 0u64;
    for comp in h.components() {
        if comp.len() <= EXACT_COMPONENT_LIMIT {
            if !backtrack_component(h, &comp, r, &mut colors, &mut spent, budget)? {
                return Err(Error::Impossible(format!("component of vertex {} has no {r}-coloring", comp[0])));
            }
        } else if !dsatur_component(h, &comp, r, &mut colors, &mut spent, budget) {
            return Err(Error::Budget { what: "proper_coloring", budget });
        }
    }
    let c = Coloring { colors, r };
    debug_assert!(c.is_proper(h));
    Ok(c)
}

fn backtrack_component(h: &Graph, comp: &[usize], r: usize, colors: &mut [usize], spent: &mut u64, budget: u64) -> Result<bool> {
    // Exact search with dynamic saturation ordering: always branch on the
    // uncolored vertex seeing the most distinct colors.
    fn pick(h: &Graph, comp: &[usize], colors: &[usize]) -> Option<(usize, u64)> {
        comp.iter()
            .filter(|&&v| colors[v] == usize::MAX)
            .map(|&v| {
                let seen = h.neighbors(v).iter().filter(|&&w| colors[w] != usize::MAX).fold(0u64, |acc, &w| acc | 1 << colors[w].min(63));
                (v, seen)
            })
            .max_by_key(|&(v, seen)| (seen.count_ones(), h.degree(v), std::cmp::Reverse(v)))
    }
    #[allow(clippy::too_many_arguments)]
    fn go(h: &Graph, comp: &[usize], used: usize, r: usize, colors: &mut [usize], spent: &mut u64, budget: u64) -> Result<bool> {
        let Some((v, seen)) = pick(h, comp, colors) else {
            return Ok(true);
        };
        *spent += 1;
        if *spent > budget {
            return Err(Error::Budget { what: "proper_coloring", budget });
        }
        // A fresh color is interchangeable with any other fresh color.
        for c in 0..r.min(used + 1) {
            if c < 64 && seen >> c & 1 == 1 {
                continue;
            }
            if c >= 64 && h.neighbors(v).iter().any(|&w| colors[w] == c) {
                continue;
            }
            colors[v] = c;
            if go(h, comp, used.max(c + 1), r, colors, spent, budget)? {
                return Ok(true);
            }
            colors[v] = usize::MAX;
        }
        Ok(false)
    }
    go(h, comp, 0, r, colors, spent, budget)
}

fn dsatur_component(h: &Graph, comp: &[usize], r: usize, colors: &mut [usize], spent: &mut u64, budget: u64) -> bool {
    use rand::Rng;
    let mut rng = crate::graphcore::rng_from_seed(comp[0] as u64);
    for attempt in 0..DSATUR_ATTEMPTS {
        if *spent > budget {
            return false;
        }
        comp.iter().for_each(|&v| colors[v] = usize::MAX);
        let tiebreak: Vec<u64> = comp.iter().map(|_| if attempt == 0 { 0 } else { rng.gen() }).collect();
        let mut ok = true;
        for _ in 0..comp.len() {
            *spent += 1;
            let (vi, _) = comp
                .iter()
                .enumerate()
                .filter(|(_, &v)| colors[v] == usize::MAX)
                .map(|(i, &v)| {
                    let mut sat: Vec<usize> = h.neighbors(v).iter().map(|&w| colors[w]).filter(|&c| c != usize::MAX).collect();
                    sat.sort_unstable();
                    sat.dedup();
                    (i, (sat.len(), h.degree(v), tiebreak[i], std::cmp::Reverse(v)))
                })
                .max_by_key(|(_, key)| *key)
                .expect("uncolored vertex remains");
            let v = comp[vi];
            match (0..r).find(|&c| h.neighbors(v).iter().all(|&w| colors[w] != c)) {
                Some(c) => colors[v] = c,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return true;
        }
    }
    false
}

/// Permutes colors inside each component (processed in label order) so that
/// running class counts stay balanced. Properness is preserved.
pub fn balance_coloring(h: &Graph, l: &Labeling, c: &Coloring) -> Coloring {
    let r = c.r;
    let mut comps = h.components();
    comps.sort_by_key(|comp| comp.iter().map(|&v| l.label(v)).min());
    let mut totals = vec![0usize; r];
    let mut colors = c.colors.clone();
    for comp in comps {
        let mut sizes = vec![0usize; r];
        comp.iter().for_each(|&v| sizes[c.colors[v]] += 1);
        let best = (0..r)
            .min_by_key(|&s| {
                let after: Vec<usize> = (0..r).map(|j| totals[(j + s) % r] + sizes[j]).collect();
                (after.iter().max().copied(), s)
            })
            .expect("r >= 1");
        for &v in &comp {
            colors[v] = (c.colors[v] + best) % r;
        }
        for j in 0..r {
            totals[(j + best) % r] += sizes[j];
        }
    }
    Coloring { colors, r }
}

pub fn has_independent_neighborhood(h: &Graph, v: usize) -> bool {
    let nb = h.neighbors(v);
    nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|&b| !h.has_edge(a, b)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndependentNeighborhoods {
    /// `(a, witness)` for every label interval `[a, a + window]`.
    pub intervals: Vec<(usize, Option<usize>)>,
    /// All witnesses, deduplicated and sorted.
    pub vertices: VertexSet,
}

pub fn find_independent_neighborhood_vertices(h: &Graph, l: &Labeling, window: usize) -> Result<IndependentNeighborhoods> {
    if window < 1 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let n = h.n();
    let order = l.order();
    let good: Vec<bool> = order.iter().map(|&v| has_independent_neighborhood(h, v)).collect();
    let mut next = vec![usize::MAX; n + 1];
    for i in (0..n).rev() {
        next[i] = if good[i] { i } else { next[i + 1] };
    }
    let last_start = n.saturating_sub(window + 1);
    let mut intervals = Vec::new();
    let mut vertices = Vec::new();
    for a in 0..=last_start.min(n.saturating_sub(1)) {
        let hit = (next[a] != usize::MAX && next[a] <= a + window).then(|| order[next[a]]);
        if let Some(v) = hit {
            vertices.push(v);
        }
        intervals.push((a, hit));
    }
    Ok(IndependentNeighborhoods { intervals, vertices: crate::graphcore::normalize(vertices) })
}

/// Constants of the planner preconditions; the defaults are the asymptotic
/// ones and are far too strict for desk-scale inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanConstants {
    /// β ≤ ξ² / (beta_denominator · r³).
    pub beta_denominator: f64,
    /// m_{i,j} ≥ block_factor · β n.
    pub block_factor: f64,
}

impl Default for PlanConstants {
    fn default() -> Self {
        PlanConstants { beta_denominator: 3026.0, block_factor: 200.0 }
    }
}

/// Assignment of V(H) to the `[k] × [r]` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HPlan {
    pub k: usize,
    pub r: usize,
    pub f: Vec<(usize, usize)>,
    pub x: VertexSet,
    /// `blocks[i * r + j] = f⁻¹(i, j)`, sorted.
    pub blocks: Vec<VertexSet>,
    /// Per column: vertices with independent neighborhoods at distance > 3 from X, in label order.
    pub indep_list: Vec<Vec<usize>>,
    /// Label positions where segments `1..k` start.
    pub cuts: Vec<usize>,
    pub beta: f64,
    pub xi: f64,
}

#[derive(Serialize)]
struct PlanJson<'a> {
    permutation: &'a [usize],
    colors: &'a [usize],
    f: Vec<[usize; 2]>,
    #[serde(rename = "X")]
    x: &'a [usize],
}

pub fn plan_to_json(l: &Labeling, c: &Coloring, plan: &HPlan) -> String {
    let json = PlanJson { permutation: l.labels(), colors: &c.colors, f: plan.f.iter().map(|&(i, j)| [i, j]).collect(), x: &plan.x };
    serde_json::to_string(&json).expect("plan serializes")
}

/// Interval-cutting planner: labels are cut into `k` consecutive segments
/// (cut points chosen inside a window of length 3rβn around the nominal
/// position, fewest crossing edges, earliest on ties), `v ↦ (segment, C(v))`,
/// and the lower endpoints of crossing edges form X.
#[allow(clippy::too_many_arguments)]
pub fn plan_h(
    h: &Graph,
    l: &Labeling,
    c: &Coloring,
    k: usize,
    m: &[usize],
    beta: f64,
    xi: f64,
    consts: PlanConstants,
) -> Result<HPlan> {
    let n = h.n();
    let r = c.r;
    if k == 0 || m.len() != k * r {
        return Err(Error::InvalidArgument(format!("expected {} block sizes, got {}", k * r, m.len())));
    }
    if l.len() != n || !c.is_proper(h) {
        return Err(Error::InvalidArgument("labeling or coloring does not fit H".into()));
    }
    let bw = bandwidth_of(h, l);
    if bw as f64 > beta * n as f64 {
        return Err(Error::InvalidArgument(format!("bandwidth {bw} exceeds beta*n = {}", beta * n as f64)));
    }
    let beta_cap = xi * xi / (consts.beta_denominator * (r as f64).powi(3));
    if beta > beta_cap + 1e-15 {
        return Err(Error::InvalidArgument(format!("beta {beta} exceeds xi^2/({} r^3) = {beta_cap}", consts.beta_denominator)));
    }
    let min_block = consts.block_factor * beta * n as f64;
    if let Some(&small) = m.iter().find(|&&s| (s as f64) < min_block) {
        return Err(Error::InvalidArgument(format!("block target {small} below {min_block}")));
    }

    let order = l.order();
    // crossing[t] = number of edges with labels a < t <= b.
    let mut diff = vec![0i64; n + 2];
    for (u, v) in h.edges() {
        let (a, b) = (l.label(u).min(l.label(v)), l.label(u).max(l.label(v)));
        diff[a + 1] += 1;
        diff[b + 1] -= 1;
    }
    let mut crossing = vec![0i64; n + 1];
    let mut acc = 0;
    for t in 0..=n {
        acc += diff[t];
        crossing[t] = acc;
    }
    let total: usize = m.iter().sum();
    let half = ((3.0 * r as f64 * beta * n as f64) / 2.0).ceil() as usize;
    let mut cuts = Vec::with_capacity(k.saturating_sub(1));
    let mut running = 0usize;
    for i in 0..k.saturating_sub(1) {
        running += m[i * r..(i + 1) * r].iter().sum::<usize>();
        let nominal = ((running as f64) * n as f64 / total as f64).round() as usize;
        let lo = nominal.saturating_sub(half).max(cuts.last().map_or(1, |&p| p + 1));
        let hi = (nominal + half).min(n - 1);
        if lo > hi {
            return Err(Error::Clause { clause: 'b', detail: format!("no room for cut {i}") });
        }
        let t = (lo..=hi).min_by_key(|&t| (crossing[t], t.abs_diff(nominal), t)).expect("non-empty range");
        cuts.push(t);
    }
    let seg_of_label = |p: usize| cuts.iter().filter(|&&t| t <= p).count();
    let seg: Vec<usize> = (0..n).map(|v| seg_of_label(l.label(v))).collect();
    let f: Vec<(usize, usize)> = (0..n).map(|v| (seg[v], c.colors[v])).collect();
    let x: VertexSet =
        crate::graphcore::normalize(h.edges().filter(|&(u, v)| seg[u] != seg[v]).map(|(u, v)| if seg[u] < seg[v] { u } else { v }).collect());

    let mut blocks = vec![Vec::new(); k * r];
    for v in 0..n {
        blocks[f[v].0 * r + f[v].1].push(v);
    }
    let dist = h.distances_from(&x, 3);
    let mut indep_list = vec![Vec::new(); k];
    for &v in &order {
        if dist[v] == usize::MAX && has_independent_neighborhood(h, v) {
            indep_list[seg[v]].push(v);
        }
    }
    let plan = HPlan { k, r, f, x, blocks, indep_list, cuts, beta, xi };
    validate_plan(h, &plan, m)?;
    Ok(plan)
}

/// Independent check of clauses (a)–(e) for a plan against targets `m`.
pub fn validate_plan(h: &Graph, plan: &HPlan, m: &[usize]) -> Result<()> {
    let (k, r, n) = (plan.k, plan.r, h.n());
    let nf = n as f64;
    if plan.x.len() as f64 > (k * r) as f64 * plan.xi * nf {
        return Err(Error::Clause { clause: 'a', detail: format!("|X| = {}", plan.x.len()) });
    }
    let mut sizes = vec![0usize; k * r];
    for &(i, j) in &plan.f {
        if i >= k || j >= r {
            return Err(Error::Clause { clause: 'b', detail: format!("cell ({i},{j}) outside grid") });
        }
        sizes[i * r + j] += 1;
    }
    for (idx, (&s, &t)) in sizes.iter().zip(m).enumerate() {
        if (s as f64 - t as f64).abs() > plan.xi * nf {
            return Err(Error::Clause { clause: 'b', detail: format!("block {idx} has {s} vertices, target {t}") });
        }
    }
    let in_x: HashSet<usize> = plan.x.iter().copied().collect();
    for (u, v) in h.edges() {
        let ((i1, j1), (i2, j2)) = (plan.f[u], plan.f[v]);
        if j1 == j2 || i1.abs_diff(i2) > 1 {
            return Err(Error::Clause { clause: 'c', detail: format!("edge {u}-{v} maps to ({i1},{j1})-({i2},{j2})") });
        }
        if !in_x.contains(&u) && !in_x.contains(&v) && i1 != i2 {
            return Err(Error::Clause { clause: 'd', detail: format!("edge {u}-{v} leaves column {i1}") });
        }
    }
    // Vertices within distance 3 of X by explicit layered expansion.
    let mut near: HashSet<usize> = in_x.clone();
    let mut layer: Vec<usize> = plan.x.clone();
    for _ in 0..3 {
        let mut next = Vec::new();
        for &u in &layer {
            for &w in h.neighbors(u) {
                if near.insert(w) {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    let need = (1.0 / plan.beta).ceil() as usize;
    for i in 0..k {
        let count = (0..n)
            .filter(|&w| plan.f[w].0 == i && !near.contains(&w))
            .filter(|&w| {
                let nb = h.neighbors(w);
                nb.iter().all(|&a| nb.iter().all(|&b| a == b || !h.has_edge(a, b)))
            })
            .count();
        if count < need {
            return Err(Error::Clause { clause: 'e', detail: format!("column {i} has {count} usable vertices, needs {need}") });
        }
    }
    Ok(())
}
