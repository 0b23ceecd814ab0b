//! Directed weighted modularity and greedy agglomerative clustering.
//!
//! Modularity follows the directed convention
//! `Q = (1/W) * sum_ij [w_ij - s_out(i) * s_in(j) / W] * delta(c_i, c_j)`.
//! Agglomeration starts from singletons and repeatedly merges the pair of
//! edge-connected clusters with the largest modularity gain, recording the
//! merge tree. The feature partition is the step with maximal modularity,
//! polished by single-class moves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ClassGraph;

/// Gains closer than this are treated as equal when picking a merge.
pub const MERGE_TIE_EPSILON: f64 = 1e-12;

/// A Kernighan-Lin pass stops after this many moves without a new best prefix.
const KL_PATIENCE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("modularity is undefined for a graph with zero total weight")]
    ZeroWeight,
    #[error("partition covers {found} classes but the graph has {expected}")]
    PartitionMismatch { expected: usize, found: usize },
}

/// Assignment of classes to clusters. Cluster ids are dense and numbered in
/// order of each cluster's smallest class index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels into dense cluster ids.
    pub fn from_labels<L: Ord + Clone>(labels: &[L]) -> Self {
        let mut seen: BTreeMap<L, usize> = BTreeMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry(l.clone()).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            cluster_count: seen.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            cluster_count: n,
        }
    }

    pub fn single(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            cluster_count: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn cluster_of(&self, class: usize) -> usize {
        self.assignment[class]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Class indices of every cluster, each list ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (class, &c) in self.assignment.iter().enumerate() {
            out[c].push(class);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Directed weighted modularity of `partition` on `graph`.
pub fn modularity(graph: &ClassGraph, partition: &Partition) -> Result<f64, ClusterError> {
    if partition.len() != graph.len() {
        return Err(ClusterError::PartitionMismatch {
            expected: graph.len(),
            found: partition.len(),
        });
    }
    let total = graph.total_weight();
    if total <= 0.0 {
        return Err(ClusterError::ZeroWeight);
    }
    let k = partition.cluster_count();
    let mut intra = vec![0.0; k];
    let mut s_out = vec![0.0; k];
    let mut s_in = vec![0.0; k];
    for (s, t, w) in graph.edges() {
        let c = partition.cluster_of(s);
        if c == partition.cluster_of(t) {
            intra[c] += w;
        }
    }
    for i in 0..graph.len() {
        let c = partition.cluster_of(i);
        s_out[c] += graph.out_strength(i);
        s_in[c] += graph.in_strength(i);
    }
    let q = (0..k).map(|c| intra[c] - s_out[c] * s_in[c] / total).sum::<f64>();
    Ok(q / total)
}

/// One agglomeration step. `left`/`right` are dendrogram node ids: leaves are
/// `0..leaf_count`, the node created by merge `k` is `leaf_count + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// 1-based merge order.
    pub step: usize,
    /// Modularity of the partition right after this merge.
    pub q_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    leaf_count: usize,
    initial_q: f64,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Assembles a dendrogram from explicit merges, as `agglomerate` would.
    /// Merge `k` creates node `leaf_count + k`; every node may be merged at most once.
    pub fn from_merges(leaf_count: usize, initial_q: f64, merges: Vec<Merge>) -> Self {
        let mut used = vec![false; leaf_count + merges.len()];
        for (k, m) in merges.iter().enumerate() {
            let node = leaf_count + k;
            assert!(
                m.left < node && m.right < node && m.left != m.right,
                "merge {k} refers to a later node"
            );
            assert!(!used[m.left] && !used[m.right], "merge {k} reuses a merged node");
            used[m.left] = true;
            used[m.right] = true;
        }
        Self {
            leaf_count,
            initial_q,
            merges,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn node_count(&self) -> usize {
        self.leaf_count + self.merges.len()
    }

    /// Modularity of the singleton partition.
    pub fn initial_q(&self) -> f64 {
        self.initial_q
    }

    /// Modularity before any merge followed by the value after each merge.
    pub fn q_history(&self) -> Vec<f64> {
        std::iter::once(self.initial_q)
            .chain(self.merges.iter().map(|m| m.q_after))
            .collect()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.leaf_count
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        (!self.is_leaf(node)).then(|| {
            let m = &self.merges[node - self.leaf_count];
            (m.left, m.right)
        })
    }

    pub fn merge_of(&self, node: usize) -> Option<&Merge> {
        node.checked_sub(self.leaf_count).map(|k| &self.merges[k])
    }

    /// Parent of every node, `None` for roots.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.node_count()];
        for (k, m) in self.merges.iter().enumerate() {
            parent[m.left] = Some(self.leaf_count + k);
            parent[m.right] = Some(self.leaf_count + k);
        }
        parent
    }

    /// Roots in ascending node-id order; one per connected component.
    pub fn roots(&self) -> Vec<usize> {
        self.parents()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.is_none().then_some(i))
            .collect()
    }

    /// Leaves under `node`, ascending.
    pub fn leaves_of(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            match self.children(n) {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => out.push(n),
            }
        }
        out.sort_unstable();
        out
    }

    /// Partition after the first `steps` merges.
    pub fn partition_after(&self, steps: usize) -> Partition {
        let mut find: Vec<usize> = (0..self.leaf_count).collect();
        fn root(find: &mut [usize], mut x: usize) -> usize {
            while find[x] != x {
                find[x] = find[find[x]];
                x = find[x];
            }
            x
        }
        // representative leaf of each dendrogram node
        let mut rep: Vec<usize> = (0..self.leaf_count).collect();
        for m in &self.merges[..steps.min(self.merges.len())] {
            let a = root(&mut find, rep[m.left]);
            let b = root(&mut find, rep[m.right]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            find[hi] = lo;
            rep.push(lo);
        }
        let labels: Vec<usize> = (0..self.leaf_count).map(|i| root(&mut find, i)).collect();
        Partition::from_labels(&labels)
    }

    /// Nested-list dump, e.g. `((a,b):0.125,c):0.4`, one root per line.
    pub fn to_nested_text(&self, graph: &ClassGraph) -> String {
        fn write_node(d: &Dendrogram, graph: &ClassGraph, node: usize, out: &mut String) {
            match d.children(node) {
                None => out.push_str(&graph.class(node).id),
                Some((l, r)) => {
                    out.push('(');
                    write_node(d, graph, l, out);
                    out.push(',');
                    write_node(d, graph, r, out);
                    let q = d.merge_of(node).map(|m| m.q_after).unwrap_or_default();
                    let _ = write!(out, "):{q:.6}");
                }
            }
        }
        let mut out = String::new();
        for root in self.roots() {
            write_node(self, graph, root, &mut out);
            out.push('\n');
        }
        out
    }
}

struct ClusterState {
    node: usize,
    s_out: f64,
    s_in: f64,
}

/// Symmetric neighbour lists `(j, w_ij + w_ji)`, sorted by `j`.
fn symmetric_neighbours(graph: &ClassGraph) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); graph.len()];
    for (s, t, w) in graph.edges() {
        *rows[s].entry(t).or_insert(0.0) += w;
        *rows[t].entry(s).or_insert(0.0) += w;
    }
    rows.into_iter().map(|r| r.into_iter().collect()).collect()
}

/// Greedy agglomeration over edge-connected cluster pairs, starting from
/// singletons. See [`agglomerate_from`].
pub fn agglomerate(graph: &ClassGraph) -> Dendrogram {
    agglomerate_from(graph, &Partition::singletons(graph.len()))
}

/// Greedy agglomeration starting from the clusters of `seed`.
///
/// The first `n - k` merges assemble each seed cluster from its classes in
/// index order; their `q_after` is the exact modularity of the partial
/// state. Greedy merging then proceeds over the seed clusters. Clusters are
/// keyed by their smallest class index; among pairs whose gain is within
/// [`MERGE_TIE_EPSILON`] of the best, the pair with the smallest
/// `(min key, max key)` wins. Merging continues until no connected pair
/// remains, so the result has one root per weakly connected component.
pub fn agglomerate_from(graph: &ClassGraph, seed: &Partition) -> Dendrogram {
    let n = graph.len();
    assert_eq!(seed.len(), n, "seed partition does not match the graph");
    let total = graph.total_weight();
    let neighbours = symmetric_neighbours(graph);
    let gain_of = |e: f64, a: (f64, f64), b: (f64, f64)| {
        if total > 0.0 {
            (e - (a.0 * b.1 + b.0 * a.1) / total) / total
        } else {
            0.0
        }
    };

    let initial_q = if total > 0.0 {
        -(0..n)
            .map(|i| graph.out_strength(i) * graph.in_strength(i))
            .sum::<f64>()
            / (total * total)
    } else {
        0.0
    };

    let mut q = initial_q;
    let mut merges: Vec<Merge> = Vec::with_capacity(n.saturating_sub(1));
    let mut state: BTreeMap<usize, ClusterState> = BTreeMap::new();
    let mut in_group = vec![false; n];
    for members in seed.clusters() {
        let first = members[0];
        let mut group = ClusterState {
            node: first,
            s_out: graph.out_strength(first),
            s_in: graph.in_strength(first),
        };
        in_group[first] = true;
        for &m in &members[1..] {
            let e: f64 = neighbours[m]
                .iter()
                .filter(|&&(j, _)| in_group[j])
                .map(|&(_, w)| w)
                .sum();
            let sm = (graph.out_strength(m), graph.in_strength(m));
            q += gain_of(e, (group.s_out, group.s_in), sm);
            merges.push(Merge {
                left: group.node,
                right: m,
                step: merges.len() + 1,
                q_after: q,
            });
            group.node = n + merges.len() - 1;
            group.s_out += sm.0;
            group.s_in += sm.1;
            in_group[m] = true;
        }
        for &m in &members {
            in_group[m] = false;
        }
        state.insert(first, group);
    }

    // symmetric inter-cluster weight e_ab = w_ab + w_ba, keyed by cluster key
    let key: Vec<usize> = {
        let clusters = seed.clusters();
        (0..n).map(|i| clusters[seed.cluster_of(i)][0]).collect()
    };
    let mut between: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for (s, t, w) in graph.edges() {
        let (a, b) = (key[s], key[t]);
        if a != b {
            *between.entry(a).or_default().entry(b).or_insert(0.0) += w;
            *between.entry(b).or_default().entry(a).or_insert(0.0) += w;
        }
    }

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (&a, row) in &between {
            let sa = &state[&a];
            for (&b, &e) in row.range(a + 1..) {
                let sb = &state[&b];
                let gain = gain_of(e, (sa.s_out, sa.s_in), (sb.s_out, sb.s_in));
                match best {
                    Some((g, _, _)) if gain <= g + MERGE_TIE_EPSILON => {}
                    _ => best = Some((gain, a, b)),
                }
            }
        }
        let Some((gain, a, b)) = best else { break };

        let absorbed = state.remove(&b).expect("active cluster");
        let node = n + merges.len();
        let keep = state.get_mut(&a).expect("active cluster");
        let left = keep.node;
        keep.node = node;
        keep.s_out += absorbed.s_out;
        keep.s_in += absorbed.s_in;

        let row_b = between.remove(&b).unwrap_or_default();
        for (c, e) in row_b {
            if let Some(row_c) = between.get_mut(&c) {
                row_c.remove(&b);
            }
            if c == a {
                continue;
            }
            *between.entry(a).or_default().entry(c).or_insert(0.0) += e;
            *between.entry(c).or_default().entry(a).or_insert(0.0) += e;
        }
        if between.get(&a).is_some_and(|r| r.is_empty()) {
            between.remove(&a);
        }

        q += gain;
        merges.push(Merge {
            left,
            right: absorbed.node,
            step: merges.len() + 1,
            q_after: q,
        });
    }

    Dendrogram {
        leaf_count: n,
        initial_q,
        merges,
    }
}

/// Number of merges at which modularity peaks; ties go to the earliest step.
pub fn best_cut_step(dendrogram: &Dendrogram) -> usize {
    best_cut_step_from(dendrogram, 0)
}

/// Like [`best_cut_step`] but only considers steps `>= first`.
fn best_cut_step_from(dendrogram: &Dendrogram, first: usize) -> usize {
    let history = dendrogram.q_history();
    let mut best = first;
    for (step, &q) in history.iter().enumerate().skip(first) {
        if q > history[best] + MERGE_TIE_EPSILON {
            best = step;
        }
    }
    best
}

/// Feature partition: the agglomeration state with maximal modularity.
pub fn cut_dendrogram(dendrogram: &Dendrogram) -> Partition {
    dendrogram.partition_after(best_cut_step(dendrogram))
}

/// Cluster bookkeeping for single-class moves.
struct MoveState<'a> {
    graph: &'a ClassGraph,
    neighbours: Vec<Vec<(usize, f64)>>,
    total: f64,
    label: Vec<usize>,
    s_out: Vec<f64>,
    s_in: Vec<f64>,
    size: Vec<usize>,
}

impl<'a> MoveState<'a> {
    fn new(graph: &'a ClassGraph, partition: &Partition) -> Self {
        let n = graph.len();
        let label = partition.assignment().to_vec();
        let mut s_out = vec![0.0; n];
        let mut s_in = vec![0.0; n];
        let mut size = vec![0usize; n];
        for (i, &c) in label.iter().enumerate() {
            s_out[c] += graph.out_strength(i);
            s_in[c] += graph.in_strength(i);
            size[c] += 1;
        }
        Self {
            graph,
            neighbours: symmetric_neighbours(graph),
            total: graph.total_weight(),
            label,
            s_out,
            s_in,
            size,
        }
    }

    /// Best move of class `i` as `(modularity gain, target cluster)`: a
    /// neighbouring cluster or, if `i` is not alone, a fresh singleton.
    /// Gain ties go to the smallest cluster id.
    fn best_move(&self, i: usize) -> Option<(f64, usize)> {
        let (o, d) = (self.graph.out_strength(i), self.graph.in_strength(i));
        let from = self.label[i];
        let mut to_weight: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, w) in &self.neighbours[i] {
            *to_weight.entry(self.label[j]).or_insert(0.0) += w;
        }
        let e_from = to_weight.get(&from).copied().unwrap_or(0.0);
        let base_out = self.s_out[from] - o;
        let base_in = self.s_in[from] - d;
        let gain = |e: f64, so: f64, si: f64| {
            ((e - e_from) - (o * (si - base_in) + d * (so - base_out)) / self.total) / self.total
        };
        let mut best: Option<(f64, usize)> = None;
        for (&c, &e) in &to_weight {
            if c == from {
                continue;
            }
            let g = gain(e, self.s_out[c], self.s_in[c]);
            if best.is_none_or(|(bg, _)| g > bg + MERGE_TIE_EPSILON) {
                best = Some((g, c));
            }
        }
        if self.size[from] > 1 {
            let g = gain(0.0, 0.0, 0.0);
            if best.is_none_or(|(bg, _)| g > bg + MERGE_TIE_EPSILON) {
                let fresh = self.size.iter().position(|&s| s == 0).expect("a free label exists");
                best = Some((g, fresh));
            }
        }
        best
    }

    fn apply(&mut self, i: usize, to: usize) {
        let (o, d) = (self.graph.out_strength(i), self.graph.in_strength(i));
        let from = self.label[i];
        self.label[i] = to;
        self.s_out[from] -= o;
        self.s_in[from] -= d;
        self.size[from] -= 1;
        self.s_out[to] += o;
        self.s_in[to] += d;
        self.size[to] += 1;
    }

    /// Sweeps classes in index order taking every improving move until none
    /// is left. Returns whether anything moved.
    fn local_moves(&mut self) -> bool {
        let mut moved = false;
        loop {
            let mut changed = false;
            for i in 0..self.label.len() {
                if let Some((g, to)) = self.best_move(i) {
                    if g > MERGE_TIE_EPSILON {
                        self.apply(i, to);
                        changed = true;
                    }
                }
            }
            if !changed {
                return moved;
            }
            moved = true;
        }
    }

    /// One Kernighan-Lin pass: repeatedly takes the best move among classes
    /// not yet moved in this pass, even when it loses modularity, then rolls
    /// back to the best prefix. The pass ends early after [`KL_PATIENCE`]
    /// moves without a new best. Returns whether the kept prefix gains.
    fn kernighan_lin_pass(&mut self) -> bool {
        let n = self.label.len();
        let mut locked = vec![false; n];
        let mut trail: Vec<(usize, usize)> = Vec::new();
        let (mut running, mut best_gain, mut best_len) = (0.0, 0.0, 0);
        while trail.len() < n && trail.len() - best_len < KL_PATIENCE {
            let mut pick: Option<(f64, usize, usize)> = None;
            for i in (0..n).filter(|&i| !locked[i]) {
                if let Some((g, to)) = self.best_move(i) {
                    if pick.is_none_or(|(bg, _, _)| g > bg + MERGE_TIE_EPSILON) {
                        pick = Some((g, i, to));
                    }
                }
            }
            let Some((g, i, to)) = pick else { break };
            trail.push((i, self.label[i]));
            self.apply(i, to);
            locked[i] = true;
            running += g;
            if running > best_gain + MERGE_TIE_EPSILON {
                best_gain = running;
                best_len = trail.len();
            }
        }
        while trail.len() > best_len {
            let (i, from) = trail.pop().expect("non-empty trail");
            self.apply(i, from);
        }
        best_len > 0
    }
}

/// Local refinement of `partition` by single-class moves.
///
/// Alternates greedy sweeps (every move that gains more than
/// [`MERGE_TIE_EPSILON`], classes in index order) with Kernighan-Lin passes
/// that can cross small modularity valleys, until neither improves. Returns
/// `partition` unchanged when it is already locally optimal.
pub fn refine_partition(graph: &ClassGraph, partition: &Partition) -> Partition {
    if graph.is_empty() || graph.total_weight() <= 0.0 {
        return partition.clone();
    }
    let mut state = MoveState::new(graph, partition);
    let mut moved = state.local_moves();
    while state.kernighan_lin_pass() {
        moved = true;
        state.local_moves();
    }
    if moved {
        Partition::from_labels(&state.label)
    } else {
        partition.clone()
    }
}

/// Greedy agglomeration with local-moving refinement.
///
/// Cuts the greedy dendrogram at peak modularity, refines that partition by
/// single-class moves and, when anything moved, re-agglomerates from the
/// refined clusters and cuts again at or above them. Repeats until the cut
/// is locally optimal. Every round strictly raises modularity, so it stops.
/// Returns the dendrogram and the cut step.
pub fn agglomerate_refined(graph: &ClassGraph) -> (Dendrogram, usize) {
    let mut dendrogram = agglomerate(graph);
    let mut step = best_cut_step(&dendrogram);
    loop {
        let partition = dendrogram.partition_after(step);
        let refined = refine_partition(graph, &partition);
        if refined == partition {
            return (dendrogram, step);
        }
        dendrogram = agglomerate_from(graph, &refined);
        step = best_cut_step_from(&dendrogram, graph.len() - refined.cluster_count());
    }
}

/// Clusters larger than `max_size`, as `(cluster id, size)`.
pub fn oversized_clusters(partition: &Partition, max_size: usize) -> Vec<(usize, usize)> {
    partition
        .sizes()
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > max_size)
        .collect()
}
