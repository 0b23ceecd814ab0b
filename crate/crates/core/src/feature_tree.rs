//! N-ary feature tree derived from the dendrogram above the cut.
//!
//! Clusters become leaves. Binary merges above the cut become branches; a
//! branch is folded into its parent when the modularity values of the two
//! merge steps differ by less than `contraction_ratio * |Q at the cut|`, which is
//! how several nearly simultaneous merges turn into one n-ary branch.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{Dendrogram, Partition};

pub const DEFAULT_CONTRACTION_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("partition with {clusters} clusters is not a cut of the dendrogram")]
    NotACut { clusters: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureNode {
    Branch {
        children: Vec<usize>,
        /// Modularity after the dendrogram merge this branch came from;
        /// `None` for the synthetic root of a forest.
        merge_q: Option<f64>,
    },
    Leaf {
        cluster: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTree {
    nodes: Vec<FeatureNode>,
    root: usize,
    parent: Vec<Option<usize>>,
    size: Vec<usize>,
    min_class: Vec<usize>,
}

impl FeatureTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &FeatureNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, id: usize) -> &[usize] {
        match &self.nodes[id] {
            FeatureNode::Branch { children, .. } => children,
            FeatureNode::Leaf { .. } => &[],
        }
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    /// Number of classes under the node.
    pub fn size(&self, id: usize) -> usize {
        self.size[id]
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        matches!(self.nodes[id], FeatureNode::Leaf { .. })
    }

    pub fn cluster(&self, id: usize) -> Option<usize> {
        match self.nodes[id] {
            FeatureNode::Leaf { cluster } => Some(cluster),
            FeatureNode::Branch { .. } => None,
        }
    }

    /// Pre-order traversal from the root.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    /// Leaf node ids in traversal order.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&n| self.is_leaf(n)).collect()
    }

    pub fn leaf_of_cluster(&self, cluster: usize) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| matches!(n, FeatureNode::Leaf { cluster: c } if *c == cluster))
    }

    pub fn depth(&self, mut id: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[id] {
            d += 1;
            id = p;
        }
        d
    }

    /// Node followed by its ancestors up to the root.
    pub fn ancestors(&self, mut id: usize) -> Vec<usize> {
        let mut out = vec![id];
        while let Some(p) = self.parent[id] {
            out.push(p);
            id = p;
        }
        out
    }

    pub fn lowest_common_ancestor(&self, a: usize, b: usize) -> usize {
        let up_a = self.ancestors(a);
        let up_b = self.ancestors(b);
        *up_a.iter().find(|n| up_b.contains(n)).expect("nodes share the root")
    }

    /// Number of edges on the path between two nodes.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let lca = self.lowest_common_ancestor(a, b);
        self.depth(a) + self.depth(b) - 2 * self.depth(lca)
    }

    /// Branch nodes on the path between two nodes, in path order from `a`
    /// up to the common ancestor and down to `b`.
    pub fn branch_path(&self, a: usize, b: usize) -> Vec<usize> {
        let lca = self.lowest_common_ancestor(a, b);
        let mut up: Vec<usize> = self.ancestors(a).into_iter().take_while(|&n| n != lca).collect();
        let mut down: Vec<usize> = self.ancestors(b).into_iter().take_while(|&n| n != lca).collect();
        up.push(lca);
        down.reverse();
        up.extend(down);
        up.retain(|&n| !self.is_leaf(n));
        up
    }

    /// Indented text dump for debugging.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root, 0usize)];
        while let Some((n, depth)) = stack.pop() {
            let pad = "  ".repeat(depth);
            match &self.nodes[n] {
                FeatureNode::Leaf { cluster } => {
                    let _ = writeln!(out, "{pad}cluster {cluster} ({} classes)", self.size[n]);
                }
                FeatureNode::Branch { merge_q, .. } => match merge_q {
                    Some(q) => {
                        let _ = writeln!(out, "{pad}branch q={q:.6} ({} classes)", self.size[n]);
                    }
                    None => {
                        let _ = writeln!(out, "{pad}root ({} classes)", self.size[n]);
                    }
                },
            }
            for &c in self.children(n).iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }
}

/// Builds the feature tree for `partition`, which must be a cut of `dendrogram`.
pub fn build_feature_tree(
    dendrogram: &Dendrogram,
    partition: &Partition,
    contraction_ratio: f64,
) -> Result<FeatureTree, TreeError> {
    let leaves = dendrogram.leaf_count();
    let clusters = partition.cluster_count();
    let not_a_cut = TreeError::NotACut { clusters };
    if partition.len() != leaves || clusters == 0 || clusters > leaves {
        return Err(not_a_cut);
    }
    let steps = leaves - clusters;
    if steps > dendrogram.merges().len() || dendrogram.partition_after(steps) != *partition {
        return Err(not_a_cut);
    }

    // dendrogram node that represents each cluster after `steps` merges
    let parents = dendrogram.parents();
    let mut cluster_node = vec![usize::MAX; clusters];
    for class in 0..leaves {
        let mut node = class;
        while let Some(p) = parents[node] {
            if p - leaves >= steps {
                break;
            }
            node = p;
        }
        cluster_node[partition.cluster_of(class)] = node;
    }
    let mut node_cluster = vec![None; dendrogram.node_count()];
    for (c, &node) in cluster_node.iter().enumerate() {
        node_cluster[node] = Some(c);
    }

    let peak = dendrogram.q_history()[steps].abs();
    let threshold = contraction_ratio * peak;

    let mut builder = Builder {
        dendrogram,
        node_cluster: &node_cluster,
        threshold,
        nodes: Vec::new(),
        size: Vec::new(),
        min_class: Vec::new(),
        class_count: partition.sizes(),
        cluster_min: partition.clusters().iter().map(|c| c[0]).collect(),
    };

    let mut tops: Vec<usize> = Vec::new();
    for root in dendrogram.roots() {
        tops.extend(builder.build(root, None));
    }
    let root = if tops.len() == 1 {
        tops[0]
    } else {
        builder.branch(tops, None)
    };

    let mut parent = vec![None; builder.nodes.len()];
    for (id, node) in builder.nodes.iter().enumerate() {
        if let FeatureNode::Branch { children, .. } = node {
            for &c in children {
                parent[c] = Some(id);
            }
        }
    }

    Ok(FeatureTree {
        nodes: builder.nodes,
        root,
        parent,
        size: builder.size,
        min_class: builder.min_class,
    })
}

struct Builder<'a> {
    dendrogram: &'a Dendrogram,
    node_cluster: &'a [Option<usize>],
    threshold: f64,
    nodes: Vec<FeatureNode>,
    size: Vec<usize>,
    min_class: Vec<usize>,
    class_count: Vec<usize>,
    cluster_min: Vec<usize>,
}

impl Builder<'_> {
    /// Returns the tree node(s) standing for dendrogram node `d`: a single
    /// node, or the children of `d` when `d` folds into its parent.
    fn build(&mut self, d: usize, parent_q: Option<f64>) -> Vec<usize> {
        if let Some(cluster) = self.node_cluster[d] {
            let id = self.nodes.len();
            self.nodes.push(FeatureNode::Leaf { cluster });
            self.size.push(self.class_count[cluster]);
            self.min_class.push(self.cluster_min[cluster]);
            return vec![id];
        }
        let merge = *self.dendrogram.merge_of(d).expect("internal node above the cut");
        let mut children = self.build(merge.left, Some(merge.q_after));
        children.extend(self.build(merge.right, Some(merge.q_after)));
        let folds = parent_q.is_some_and(|pq| (pq - merge.q_after).abs() < self.threshold);
        if folds {
            children
        } else {
            vec![self.branch(children, Some(merge.q_after))]
        }
    }

    fn branch(&mut self, mut children: Vec<usize>, merge_q: Option<f64>) -> usize {
        children.sort_by(|&a, &b| {
            self.size[b]
                .cmp(&self.size[a])
                .then(self.min_class[a].cmp(&self.min_class[b]))
        });
        let size = children.iter().map(|&c| self.size[c]).sum();
        let min_class = children.iter().map(|&c| self.min_class[c]).min().unwrap_or(0);
        let id = self.nodes.len();
        self.nodes.push(FeatureNode::Branch { children, merge_q });
        self.size.push(size);
        self.min_class.push(min_class);
        id
    }
}
