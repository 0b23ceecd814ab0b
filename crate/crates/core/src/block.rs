//! Grid layout of the classes of one cluster inside a city block.
//!
//! Three steps: decompose the cluster subgraph into levels (sources peeled
//! from the top, sinks from the bottom, a greedy cycle breaker when neither
//! exists), place buildings horizontally close to their cross-level
//! neighbours, and pick the block depth with the lowest ordering penalty.
//! Rows grow southward: callers sit north of their callees.

use serde::{Deserialize, Serialize};

use crate::graph::ClassGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    /// Penalty constant for tied or reversed dependencies.
    pub penalty_a: f64,
    /// Balance constant between block depth and width.
    pub balance_b: f64,
    /// Coordinate-descent stops once no column moves more than this.
    pub sweep_tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            penalty_a: 2.0,
            balance_b: 0.3,
            sweep_tolerance: 1e-12,
            max_sweeps: 2000,
        }
    }
}

/// Cluster-restricted subgraph with local node indices. Local order follows
/// global class index order, so ties broken by local index are broken by
/// class id.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGraph {
    classes: Vec<usize>,
    outs: Vec<Vec<(usize, f64)>>,
    ins: Vec<Vec<(usize, f64)>>,
}

impl BlockGraph {
    pub fn from_class_graph(graph: &ClassGraph, members: &[usize]) -> Self {
        let mut classes = members.to_vec();
        classes.sort_unstable();
        let local = |g: usize| classes.binary_search(&g).ok();
        let mut edges = Vec::new();
        for (li, &g) in classes.iter().enumerate() {
            for &(t, w) in graph.out_edges(g) {
                if let Some(lt) = local(t) {
                    edges.push((li, lt, w));
                }
            }
        }
        let mut block = Self::from_edges(classes.len(), edges);
        block.classes = classes;
        block
    }

    /// Local graph over `n` nodes; class indices are `0..n`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut outs = vec![Vec::new(); n];
        let mut ins = vec![Vec::new(); n];
        for (s, t, w) in edges {
            if s == t || w <= 0.0 {
                continue;
            }
            match outs[s].iter_mut().find(|(x, _)| *x == t) {
                Some((_, acc)) => *acc += w,
                None => outs[s].push((t, w)),
            }
            match ins[t].iter_mut().find(|(x, _)| *x == s) {
                Some((_, acc)) => *acc += w,
                None => ins[t].push((s, w)),
            }
        }
        for list in outs.iter_mut().chain(ins.iter_mut()) {
            list.sort_by_key(|&(x, _)| x);
        }
        Self {
            classes: (0..n).collect(),
            outs,
            ins,
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Global class index of a local node.
    pub fn class(&self, local: usize) -> usize {
        self.classes[local]
    }

    pub fn outs(&self, local: usize) -> &[(usize, f64)] {
        &self.outs[local]
    }

    pub fn ins(&self, local: usize) -> &[(usize, f64)] {
        &self.ins[local]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.outs
            .iter()
            .enumerate()
            .flat_map(|(s, list)| list.iter().map(move |&(t, w)| (s, t, w)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDecomposition {
    /// Levels from north to south; each holds ascending local indices.
    pub levels: Vec<Vec<usize>>,
    /// How often the greedy cycle breaker had to fire.
    pub cycle_breaks: usize,
}

impl LevelDecomposition {
    /// Level index of every local node.
    pub fn level_of(&self) -> Vec<usize> {
        let n = self.levels.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (l, members) in self.levels.iter().enumerate() {
            for &m in members {
                out[m] = l;
            }
        }
        out
    }
}

/// Greedy level decomposition.
///
/// Each round removes every source into the next upper level and every
/// remaining sink into the next lower level. When a round finds neither
/// (every node lies on a cycle), the node maximizing `|outs| - |ins|` is
/// treated as a source; ties go to the smallest index.
pub fn greedy_level_decomposition(graph: &BlockGraph) -> LevelDecomposition {
    let n = graph.len();
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut ins: Vec<usize> = (0..n).map(|i| graph.ins(i).len()).collect();
    let mut outs: Vec<usize> = (0..n).map(|i| graph.outs(i).len()).collect();
    let mut upper: Vec<Vec<usize>> = Vec::new();
    let mut lower: Vec<Vec<usize>> = Vec::new();
    let mut cycle_breaks = 0;

    while remaining > 0 {
        let mut up: Vec<usize> = (0..n).filter(|&i| alive[i] && ins[i] == 0).collect();
        let low: Vec<usize> = (0..n).filter(|&i| alive[i] && ins[i] != 0 && outs[i] == 0).collect();
        if up.is_empty() && low.is_empty() {
            cycle_breaks += 1;
            let pick = (0..n)
                .filter(|&i| alive[i])
                .max_by(|&a, &b| {
                    let da = outs[a] as isize - ins[a] as isize;
                    let db = outs[b] as isize - ins[b] as isize;
                    da.cmp(&db).then(b.cmp(&a))
                })
                .expect("at least one node remains");
            up.push(pick);
        }
        for &c in up.iter().chain(&low) {
            alive[c] = false;
            remaining -= 1;
        }
        for &c in up.iter().chain(&low) {
            for &(t, _) in graph.outs(c) {
                ins[t] -= 1;
            }
            for &(s, _) in graph.ins(c) {
                outs[s] -= 1;
            }
        }
        if !up.is_empty() {
            upper.push(up);
        }
        if !low.is_empty() {
            lower.push(low);
        }
    }

    lower.reverse();
    upper.extend(lower);
    LevelDecomposition {
        levels: upper,
        cycle_breaks,
    }
}

/// Squared-weight mean of the cross-level neighbours of `node`, i.e. the
/// minimizer of its horizontal energy. `None` when it has no such neighbour.
pub fn neighbour_mean(graph: &BlockGraph, level_of: &[usize], x: &[f64], node: usize) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(j, d) in graph.ins(node).iter().chain(graph.outs(node)) {
        if level_of[j] != level_of[node] {
            num += d * d * x[j];
            den += d * d;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Horizontal energy of one building at position `xi`.
pub fn horizontal_energy(graph: &BlockGraph, level_of: &[usize], x: &[f64], node: usize, xi: f64) -> f64 {
    graph
        .ins(node)
        .iter()
        .chain(graph.outs(node))
        .filter(|&&(j, _)| level_of[j] != level_of[node])
        .map(|&(j, d)| (d * (xi - x[j])).powi(2))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalArrangement {
    /// Continuous energy-minimizing position of every local node.
    pub continuous: Vec<f64>,
    /// Distinct integer column of every local node within its row.
    pub columns: Vec<usize>,
    pub sweeps: usize,
}

/// Places buildings horizontally near their cross-level neighbours.
///
/// `rows` lists the local nodes of each row north to south in their initial
/// order; each starts centered in its row. Coordinate descent sweeps rows
/// top to bottom and back until positions settle, then each row is
/// discretized to distinct columns in order of continuous position.
pub fn arrange_horizontal(
    graph: &BlockGraph,
    level_of: &[usize],
    rows: &[Vec<usize>],
    width: usize,
    config: &LayoutConfig,
) -> HorizontalArrangement {
    let n = graph.len();
    let mut x = vec![0.0; n];
    for row in rows {
        let offset = (width - row.len()) as f64 / 2.0;
        for (k, &node) in row.iter().enumerate() {
            x[node] = k as f64 + offset;
        }
    }

    let order: Vec<usize> = rows
        .iter()
        .flatten()
        .copied()
        .chain(rows.iter().rev().flat_map(|r| r.iter().copied()))
        .collect();
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let mut moved: f64 = 0.0;
        for &node in &order {
            if let Some(target) = neighbour_mean(graph, level_of, &x, node) {
                moved = moved.max((target - x[node]).abs());
                x[node] = target;
            }
        }
        if moved < config.sweep_tolerance {
            break;
        }
    }

    let mut columns = vec![0; n];
    for row in rows {
        let mut sorted = row.clone();
        sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let len = sorted.len();
        let mut prev: Option<usize> = None;
        let mut cols: Vec<usize> = sorted
            .iter()
            .map(|&node| {
                let want = x[node].round().clamp(0.0, (width - 1) as f64) as usize;
                let c = prev.map_or(want, |p| want.max(p + 1));
                prev = Some(c);
                c
            })
            .collect();
        for (k, c) in cols.iter_mut().enumerate() {
            *c = (*c).min(width - (len - k));
        }
        for (&node, c) in sorted.iter().zip(cols) {
            columns[node] = c;
        }
    }

    HorizontalArrangement {
        continuous: x,
        columns,
        sweeps,
    }
}

/// Ordering penalty of a row assignment: a dependency `i -> j` with `i`
/// not strictly north of `j` costs `d * (|dy| + a)`, one in order costs
/// `d * b * |dy|`.
pub fn depth_penalty(graph: &BlockGraph, row_of: &[usize], config: &LayoutConfig) -> f64 {
    graph
        .edges()
        .map(|(i, j, d)| edge_penalty(d, row_of[i], row_of[j], config))
        .sum()
}

pub fn edge_penalty(d: f64, yi: usize, yj: usize, config: &LayoutConfig) -> f64 {
    let dy = yi.abs_diff(yj) as f64;
    if yi >= yj {
        d * (dy + config.penalty_a)
    } else {
        d * config.balance_b * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Global class index.
    pub class: usize,
    pub column: usize,
    pub row: usize,
    pub level: usize,
    /// Continuous horizontal position before discretization.
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub cluster: usize,
    pub depth: usize,
    pub width: usize,
    pub level_count: usize,
    pub cycle_breaks: usize,
    /// Sorted by class index.
    pub placements: Vec<Placement>,
    pub penalty: f64,
}

impl BlockLayout {
    pub fn placement(&self, class: usize) -> Option<&Placement> {
        self.placements
            .binary_search_by_key(&class, |p| p.class)
            .ok()
            .map(|i| &self.placements[i])
    }
}

/// Ground elevation of a level when levels are drawn as a slope: the top
/// level is highest.
pub fn slope_elevation(level: usize, level_count: usize, rise: f64) -> f64 {
    (level_count.saturating_sub(1) - level.min(level_count.saturating_sub(1))) as f64 * rise
}

/// Splits `order` into `depth` consecutive rows whose sizes differ by at most one.
pub fn deal_rows(order: &[usize], depth: usize) -> Vec<Vec<usize>> {
    let n = order.len();
    let base = n / depth;
    let extra = n % depth;
    let mut rows = Vec::with_capacity(depth);
    let mut start = 0;
    for r in 0..depth {
        let len = base + usize::from(r < extra);
        rows.push(order[start..start + len].to_vec());
        start += len;
    }
    rows
}

/// Lays out every candidate depth `1..=n`, in depth order.
pub fn depth_candidates(
    cluster: usize,
    graph: &BlockGraph,
    levels: &LevelDecomposition,
    config: &LayoutConfig,
) -> Vec<BlockLayout> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }
    let level_of = levels.level_of();

    // continuous positions with one row per level give the dealing order
    let level_width = levels.levels.iter().map(Vec::len).max().unwrap_or(1);
    let by_level = arrange_horizontal(graph, &level_of, &levels.levels, level_width, config);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        level_of[a]
            .cmp(&level_of[b])
            .then(by_level.continuous[a].total_cmp(&by_level.continuous[b]))
            .then(a.cmp(&b))
    });

    (1..=n)
        .map(|depth| {
            let width = n.div_ceil(depth);
            let rows = deal_rows(&order, depth);
            let arrangement = arrange_horizontal(graph, &level_of, &rows, width, config);
            let mut row_of = vec![0; n];
            for (r, row) in rows.iter().enumerate() {
                for &node in row {
                    row_of[node] = r;
                }
            }
            let penalty = depth_penalty(graph, &row_of, config);
            let mut placements: Vec<Placement> = (0..n)
                .map(|i| Placement {
                    class: graph.class(i),
                    column: arrangement.columns[i],
                    row: row_of[i],
                    level: level_of[i],
                    x: arrangement.continuous[i],
                })
                .collect();
            placements.sort_by_key(|p| p.class);
            BlockLayout {
                cluster,
                depth,
                width,
                level_count: levels.levels.len(),
                cycle_breaks: levels.cycle_breaks,
                placements,
                penalty,
            }
        })
        .collect()
}

/// Searches all depths and keeps the one with minimal penalty (ties go to
/// the smaller depth).
pub fn optimize_depth(
    cluster: usize,
    graph: &BlockGraph,
    levels: &LevelDecomposition,
    config: &LayoutConfig,
) -> BlockLayout {
    let mut best: Option<BlockLayout> = None;
    for candidate in depth_candidates(cluster, graph, levels, config) {
        if best.as_ref().is_none_or(|b| candidate.penalty < b.penalty) {
            best = Some(candidate);
        }
    }
    best.expect("non-empty block")
}

/// Full block layout for the classes of one cluster.
pub fn layout_block(graph: &ClassGraph, cluster: usize, members: &[usize], config: &LayoutConfig) -> BlockLayout {
    let block = BlockGraph::from_class_graph(graph, members);
    let levels = greedy_level_decomposition(&block);
    optimize_depth(cluster, &block, &levels, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(levels: &[&[usize]]) -> Vec<Vec<usize>> {
        levels.iter().map(|l| l.to_vec()).collect()
    }

    #[test]
    fn chain_levels() {
        let g = BlockGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let d = greedy_level_decomposition(&g);
        assert_eq!(d.levels, lv(&[&[0], &[1], &[2]]));
        assert_eq!(d.cycle_breaks, 0);
    }

    #[test]
    fn two_cycle_levels() {
        let g = BlockGraph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]);
        let d = greedy_level_decomposition(&g);
        assert_eq!(d.levels, lv(&[&[0], &[1]]));
        assert_eq!(d.cycle_breaks, 1);
    }

    #[test]
    fn isolated_node_single_level() {
        let g = BlockGraph::from_edges(1, []);
        assert_eq!(greedy_level_decomposition(&g).levels, lv(&[&[0]]));
    }

    #[test]
    fn cycle_breaker_prefers_outward_node() {
        // every node is on a cycle; node 1 has outs {0,2,3} and ins {0,3},
        // the only positive out-in difference
        let g = BlockGraph::from_edges(
            4,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (1, 3, 1.0),
                (3, 1, 1.0),
                (1, 0, 1.0),
            ],
        );
        let d = greedy_level_decomposition(&g);
        assert_eq!(d.levels[0], vec![1]);
    }

    #[test]
    fn single_upper_neighbour_pulls_to_its_column() {
        let g = BlockGraph::from_edges(2, [(0, 1, 1.0)]);
        let level_of = [0, 1];
        let x = [2.0, 0.0];
        assert_eq!(neighbour_mean(&g, &level_of, &x, 1), Some(2.0));
    }

    #[test]
    fn weighted_mean_of_two_neighbours() {
        // neighbours at 0 (d = 3) and 4 (d = 1): (9*0 + 1*4) / 10
        let g = BlockGraph::from_edges(3, [(0, 2, 3.0), (1, 2, 1.0)]);
        let level_of = [0, 0, 1];
        let x = [0.0, 4.0, 1.0];
        let m = neighbour_mean(&g, &level_of, &x, 2).unwrap();
        assert!((m - 0.4).abs() < 1e-15);
        // finite differences around the minimum
        let h = 1e-6;
        let e = |v| horizontal_energy(&g, &level_of, &x, 2, v);
        let slope = (e(m + h) - e(m - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6);
        assert!(e(m + 0.01) > e(m) && e(m - 0.01) > e(m));
    }

    #[test]
    fn no_cross_level_neighbour_keeps_centered_column() {
        let g = BlockGraph::from_edges(3, [(0, 1, 1.0)]);
        let level_of = [0, 1, 0];
        let rows = vec![vec![0, 2], vec![1]];
        let arr = arrange_horizontal(&g, &level_of, &rows, 3, &LayoutConfig::default());
        // node 2 starts at 1 + (3 - 2) / 2
        assert_eq!(arr.continuous[2], 1.5);
    }

    #[test]
    fn columns_are_distinct_within_rows() {
        let g = BlockGraph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]);
        let level_of = [0, 1, 1, 1];
        let rows = vec![vec![0], vec![1, 2, 3]];
        let arr = arrange_horizontal(&g, &level_of, &rows, 3, &LayoutConfig::default());
        let mut cols: Vec<usize> = [1, 2, 3].iter().map(|&i| arr.columns[i]).collect();
        cols.sort_unstable();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn penalty_plug_in_values() {
        let c = LayoutConfig::default();
        assert!((edge_penalty(1.0, 0, 1, &c) - 0.3).abs() < 1e-15);
        assert_eq!(edge_penalty(1.0, 0, 0, &c), 2.0);
        assert_eq!(edge_penalty(1.0, 1, 0, &c), 3.0);
    }

    #[test]
    fn chain_prefers_one_level_per_row() {
        let g = BlockGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let levels = greedy_level_decomposition(&g);
        let layout = optimize_depth(0, &g, &levels, &LayoutConfig::default());
        assert_eq!(layout.depth, 3);
        assert_eq!(layout.width, 1);
        assert!((layout.penalty - 0.6).abs() < 1e-12);
    }

    #[test]
    fn dealing_balances_rows() {
        let rows = deal_rows(&[0, 1, 2, 3, 4], 3);
        assert_eq!(rows, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }

    #[test]
    fn slope_is_highest_at_top() {
        assert_eq!(slope_elevation(0, 3, 0.5), 1.0);
        assert_eq!(slope_elevation(2, 3, 0.5), 0.0);
    }
}
