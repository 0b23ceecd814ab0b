//! Street and block tree layout.
//!
//! Every branch of the feature tree becomes a street; its children (blocks
//! or whole sub-layouts, which run orthogonally) line both sides of it.
//! The order of children along each side is chosen to minimize
//! `h = sum_ij d_ij^2 * |p_i - p_j|^2` over building positions. Starting
//! from an alternating arrangement, every child of every branch (root
//! first) is re-slotted into its best position; whole passes repeat while
//! the energy keeps dropping.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::block::BlockLayout;
use crate::feature_tree::FeatureTree;
use crate::graph::ClassGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreetConfig {
    /// World units per building cell.
    pub cell_size: f64,
    pub street_width: f64,
    pub separator_width: f64,
    pub max_passes: usize,
    /// A pass must lower the energy by more than this to trigger another.
    pub min_decrease: f64,
}

impl Default for StreetConfig {
    fn default() -> Self {
        Self {
            cell_size: 1.0,
            street_width: 1.0,
            separator_width: 0.5,
            max_passes: 50,
            min_decrease: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        (self.x - other.x).powi(2) + (self.y - other.y).powi(2)
    }
}

/// Axis-aligned rectangle; `(x, y)` is the north-west corner, y grows south.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn inflate(&self, by: f64) -> Rect {
        Rect::new(self.x - by, self.y - by, self.width + 2.0 * by, self.height + 2.0 * by)
    }

    /// Interiors intersect (touching edges do not count).
    pub fn overlaps(&self, other: &Rect) -> bool {
        const EPS: f64 = 1e-9;
        self.x < other.right() - EPS
            && other.x < self.right() - EPS
            && self.y < other.bottom() - EPS
            && other.y < self.bottom() - EPS
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        const EPS: f64 = 1e-9;
        other.x >= self.x - EPS
            && other.y >= self.y - EPS
            && other.right() <= self.right() + EPS
            && other.bottom() <= self.bottom() + EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    fn at_depth(depth: usize) -> Axis {
        if depth.is_multiple_of(2) {
            Axis::Horizontal
        } else {
            Axis::Vertical
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreetKind {
    Branch,
    Separator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Street {
    pub id: usize,
    pub axis: Axis,
    /// Center line.
    pub start: Point,
    pub end: Point,
    pub width: f64,
    pub depth: usize,
    pub kind: StreetKind,
    /// Feature-tree branch the street renders (the parent branch for separators).
    pub node: usize,
}

impl Street {
    /// The paved band covered by the street.
    pub fn band(&self) -> Rect {
        let half = self.width / 2.0;
        match self.axis {
            Axis::Horizontal => Rect::new(
                self.start.x.min(self.end.x),
                self.start.y - half,
                (self.end.x - self.start.x).abs(),
                self.width,
            ),
            Axis::Vertical => Rect::new(
                self.start.x - half,
                self.start.y.min(self.end.y),
                self.width,
                (self.end.y - self.start.y).abs(),
            ),
        }
    }

    /// Closest point of the center line to `p`.
    pub fn project(&self, p: Point) -> Point {
        match self.axis {
            Axis::Horizontal => Point::new(p.x.clamp(self.start.x, self.end.x), self.start.y),
            Axis::Vertical => Point::new(self.start.x, p.y.clamp(self.start.y, self.end.y)),
        }
    }
}

/// A child slot along one side of a branch street.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideItem {
    pub node: usize,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGeometry {
    pub node: usize,
    pub axis: Axis,
    pub depth: usize,
    /// Index into `CityMap::streets`.
    pub street: usize,
    /// North/west side first, then south/east; items in order along the street.
    pub sides: [Vec<SideItem>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedBlock {
    pub cluster: usize,
    /// Feature-tree leaf.
    pub node: usize,
    pub rect: Rect,
    pub layout: BlockLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub class: usize,
    pub cluster: usize,
    pub footprint: Rect,
    pub row: usize,
    pub column: usize,
    pub level: usize,
}

impl Building {
    pub fn center(&self) -> Point {
        self.footprint.center()
    }
}

/// The blank map: blocks, buildings and streets in a flat 2D world.
#[derive(Debug, Clone, PartialEq)]
pub struct CityMap {
    /// Indexed by cluster id.
    pub blocks: Vec<PlacedBlock>,
    /// Indexed by class index.
    pub buildings: Vec<Building>,
    pub streets: Vec<Street>,
    pub branches: Vec<BranchGeometry>,
    pub bounds: Rect,
    /// Energy of the initial arrangement followed by the energy after each pass.
    pub energy_history: Vec<f64>,
    pub tree: FeatureTree,
    pub config: StreetConfig,
}

impl CityMap {
    pub fn energy(&self) -> f64 {
        *self.energy_history.last().unwrap_or(&0.0)
    }

    /// Branch street of a feature-tree node, if it is a branch.
    pub fn street_of(&self, node: usize) -> Option<&Street> {
        self.branches
            .iter()
            .find(|b| b.node == node)
            .map(|b| &self.streets[b.street])
    }

    pub fn separator_count(&self) -> usize {
        self.streets.iter().filter(|s| s.kind == StreetKind::Separator).count()
    }
}

/// Energy over building centers computed edge by edge.
pub fn building_energy(map: &CityMap, graph: &ClassGraph) -> f64 {
    graph
        .edges()
        .map(|(i, j, w)| w * w * map.buildings[i].center().distance_sq(map.buildings[j].center()))
        .sum()
}

/// Sufficient statistics of the edges between two blocks so the energy is a
/// quadratic in the difference of block origins.
#[derive(Default, Clone, Copy)]
struct PairTerm {
    s0: f64,
    s1x: f64,
    s1y: f64,
    s2: f64,
}

struct Layouter<'a> {
    tree: &'a FeatureTree,
    blocks: &'a [BlockLayout],
    config: StreetConfig,
    pairs: Vec<((usize, usize), PairTerm)>,
    intra: f64,
    /// Tree leaf per cluster.
    leaf_of: Vec<usize>,
}

type Sides = Vec<[Vec<usize>; 2]>;
/// Per node: extent, side thickness and origin.
type Geometry = (Vec<(f64, f64)>, Vec<[f64; 2]>, Vec<Point>);

impl<'a> Layouter<'a> {
    fn new(tree: &'a FeatureTree, blocks: &'a [BlockLayout], graph: &ClassGraph, config: StreetConfig) -> Self {
        let cell = config.cell_size;
        let mut cluster_of = vec![usize::MAX; graph.len()];
        let mut offset = vec![Point::default(); graph.len()];
        for b in blocks {
            for p in &b.placements {
                cluster_of[p.class] = b.cluster;
                offset[p.class] = Point::new((p.column as f64 + 0.5) * cell, (p.row as f64 + 0.5) * cell);
            }
        }
        let mut terms: BTreeMap<(usize, usize), PairTerm> = BTreeMap::new();
        let mut intra = 0.0;
        for (i, j, w) in graph.edges() {
            let (a, b) = (cluster_of[i], cluster_of[j]);
            let dx = offset[i].x - offset[j].x;
            let dy = offset[i].y - offset[j].y;
            let w2 = w * w;
            if a == b {
                intra += w2 * (dx * dx + dy * dy);
            } else {
                let t = terms.entry((a, b)).or_default();
                t.s0 += w2;
                t.s1x += w2 * dx;
                t.s1y += w2 * dy;
                t.s2 += w2 * (dx * dx + dy * dy);
            }
        }
        let mut leaf_of = vec![usize::MAX; blocks.len()];
        for leaf in tree.leaves() {
            let c = tree.cluster(leaf).expect("leaf");
            leaf_of[c] = leaf;
        }
        Self {
            tree,
            blocks,
            config,
            pairs: terms.into_iter().collect(),
            intra,
            leaf_of,
        }
    }

    fn initial_sides(&self) -> Sides {
        let mut sides: Sides = vec![[Vec::new(), Vec::new()]; self.tree.node_count()];
        for (node, side) in sides.iter_mut().enumerate() {
            for (k, &c) in self.tree.children(node).iter().enumerate() {
                side[k % 2].push(c);
            }
        }
        if self.tree.is_leaf(self.tree.root()) {
            // a lone block sits north of a root street
            let root = self.tree.root();
            sides[root][0].push(root);
        }
        sides
    }

    fn axis(&self, node: usize) -> Axis {
        Axis::at_depth(self.tree.depth(node))
    }

    fn block_extent(&self, node: usize) -> (f64, f64) {
        let c = self.tree.cluster(node).expect("leaf");
        let b = &self.blocks[c];
        (
            b.width as f64 * self.config.cell_size,
            b.depth as f64 * self.config.cell_size,
        )
    }

    /// Width and height of every node's rectangle (branch thickness per side in `thick`).
    fn extents(&self, sides: &Sides) -> (Vec<(f64, f64)>, Vec<[f64; 2]>) {
        let n = self.tree.node_count();
        let mut ext = vec![(0.0, 0.0); n];
        let mut thick = vec![[0.0; 2]; n];
        let sep = self.config.separator_width;
        let street = self.config.street_width;
        let mut order = self.tree.preorder();
        order.reverse();
        for node in order {
            if self.tree.is_leaf(node) && node != self.tree.root() {
                ext[node] = self.block_extent(node);
                continue;
            }
            let axis = self.axis(node);
            let mut length: f64 = 0.0;
            for (s, side) in sides[node].iter().enumerate() {
                let mut along = 0.0;
                let mut across: f64 = 0.0;
                for (k, &c) in side.iter().enumerate() {
                    let (w, h) = if c == node { self.block_extent(c) } else { ext[c] };
                    let (a, b) = match axis {
                        Axis::Horizontal => (w, h),
                        Axis::Vertical => (h, w),
                    };
                    along += a + if k > 0 { sep } else { 0.0 };
                    across = across.max(b);
                }
                length = length.max(along);
                thick[node][s] = across;
            }
            let span = thick[node][0] + street + thick[node][1];
            ext[node] = match axis {
                Axis::Horizontal => (length, span),
                Axis::Vertical => (span, length),
            };
        }
        (ext, thick)
    }

    /// North-west corner of every node's rectangle.
    fn origins(&self, sides: &Sides, ext: &[(f64, f64)], thick: &[[f64; 2]]) -> Vec<Point> {
        let mut origin = vec![Point::default(); self.tree.node_count()];
        let sep = self.config.separator_width;
        let street = self.config.street_width;
        let root = self.tree.root();
        let root_leaf = self.tree.is_leaf(root);
        for node in self.tree.preorder() {
            if self.tree.is_leaf(node) && !root_leaf {
                continue;
            }
            let o = origin[node];
            let axis = self.axis(node);
            for (s, side) in sides[node].iter().enumerate() {
                let mut cursor = 0.0;
                for &c in side {
                    let (w, h) = if c == node { self.block_extent(c) } else { ext[c] };
                    let p = match (axis, s) {
                        (Axis::Horizontal, 0) => Point::new(o.x + cursor, o.y + thick[node][0] - h),
                        (Axis::Horizontal, _) => Point::new(o.x + cursor, o.y + thick[node][0] + street),
                        (Axis::Vertical, 0) => Point::new(o.x + thick[node][0] - w, o.y + cursor),
                        (Axis::Vertical, _) => Point::new(o.x + thick[node][0] + street, o.y + cursor),
                    };
                    if c != node {
                        origin[c] = p;
                    }
                    cursor += match axis {
                        Axis::Horizontal => w,
                        Axis::Vertical => h,
                    } + sep;
                }
            }
        }
        origin
    }

    fn geometry(&self, sides: &Sides) -> Geometry {
        let (ext, thick) = self.extents(sides);
        let origin = self.origins(sides, &ext, &thick);
        (ext, thick, origin)
    }

    fn energy(&self, origin: &[Point]) -> f64 {
        let mut h = self.intra;
        for &((a, b), t) in &self.pairs {
            let oa = origin[self.leaf_of[a]];
            let ob = origin[self.leaf_of[b]];
            let cx = oa.x - ob.x;
            let cy = oa.y - ob.y;
            h += t.s0 * (cx * cx + cy * cy) + 2.0 * (cx * t.s1x + cy * t.s1y) + t.s2;
        }
        h
    }

    fn energy_of(&self, sides: &Sides) -> f64 {
        self.energy(&self.geometry(sides).2)
    }

    /// One pass: every child of every branch, root first, moves to its
    /// best slot. The current slot is tried first so ties keep it.
    fn pass(&self, sides: &mut Sides) -> f64 {
        let mut current = self.energy_of(sides);
        for node in self.tree.preorder() {
            for &child in self.tree.children(node) {
                let (side, pos) = locate(&sides[node], child);
                sides[node][side].remove(pos);
                let mut best = (current, side, pos);
                for s in 0..2 {
                    for p in 0..=sides[node][s].len() {
                        if (s, p) == (side, pos) {
                            continue;
                        }
                        sides[node][s].insert(p, child);
                        let e = self.energy_of(sides);
                        sides[node][s].remove(p);
                        if e < best.0 {
                            best = (e, s, p);
                        }
                    }
                }
                sides[node][best.1].insert(best.2, child);
                current = best.0;
            }
        }
        current
    }
}

fn locate(sides: &[Vec<usize>; 2], child: usize) -> (usize, usize) {
    for (s, side) in sides.iter().enumerate() {
        if let Some(p) = side.iter().position(|&c| c == child) {
            return (s, p);
        }
    }
    unreachable!("child {child} is on one side of its parent")
}

/// Places all blocks along the street hierarchy. `blocks` is indexed by
/// cluster id. Separator streets are added by [`place_separators`].
pub fn layout_streets(
    tree: &FeatureTree,
    blocks: &[BlockLayout],
    graph: &ClassGraph,
    config: &StreetConfig,
) -> CityMap {
    let layouter = Layouter::new(tree, blocks, graph, *config);
    let mut sides = layouter.initial_sides();
    let mut history = vec![layouter.energy_of(&sides)];
    for _ in 0..config.max_passes {
        let before = *history.last().unwrap();
        let after = layouter.pass(&mut sides);
        history.push(after);
        if before - after <= config.min_decrease {
            break;
        }
    }

    let (ext, thick, origin) = layouter.geometry(&sides);
    let cell = config.cell_size;
    let root = tree.root();
    let root_leaf = tree.is_leaf(root);

    let mut placed = Vec::with_capacity(blocks.len());
    let mut buildings = Vec::new();
    for b in blocks {
        let leaf = layouter.leaf_of[b.cluster];
        let o = origin[leaf];
        let rect = Rect::new(o.x, o.y, b.width as f64 * cell, b.depth as f64 * cell);
        for p in &b.placements {
            buildings.push(Building {
                class: p.class,
                cluster: b.cluster,
                footprint: Rect::new(o.x + p.column as f64 * cell, o.y + p.row as f64 * cell, cell, cell),
                row: p.row,
                column: p.column,
                level: p.level,
            });
        }
        placed.push(PlacedBlock {
            cluster: b.cluster,
            node: leaf,
            rect,
            layout: b.clone(),
        });
    }
    buildings.sort_by_key(|b| b.class);

    let mut streets = Vec::new();
    let mut branches = Vec::new();
    let half = config.street_width / 2.0;
    for node in tree.preorder() {
        if tree.is_leaf(node) && !root_leaf {
            continue;
        }
        let o = origin[node];
        let (w, h) = ext[node];
        let axis = layouter.axis(node);
        let depth = tree.depth(node);
        let (start, end) = match axis {
            Axis::Horizontal => {
                let y = o.y + thick[node][0] + half;
                (Point::new(o.x, y), Point::new(o.x + w, y))
            }
            Axis::Vertical => {
                let x = o.x + thick[node][0] + half;
                (Point::new(x, o.y), Point::new(x, o.y + h))
            }
        };
        let street = streets.len();
        streets.push(Street {
            id: street,
            axis,
            start,
            end,
            width: config.street_width,
            depth,
            kind: StreetKind::Branch,
            node,
        });
        let item = |c: usize| {
            let (cw, ch) = if c == node { layouter.block_extent(c) } else { ext[c] };
            let co = if c == node { o } else { origin[c] };
            SideItem {
                node: c,
                rect: Rect::new(co.x, co.y, cw, ch),
            }
        };
        branches.push(BranchGeometry {
            node,
            axis,
            depth,
            street,
            sides: [
                sides[node][0].iter().map(|&c| item(c)).collect(),
                sides[node][1].iter().map(|&c| item(c)).collect(),
            ],
        });
    }

    let bounds = Rect::new(0.0, 0.0, ext[root].0, ext[root].1);

    CityMap {
        blocks: placed,
        buildings,
        streets,
        branches,
        bounds,
        energy_history: history,
        tree: tree.clone(),
        config: *config,
    }
}

/// Adds a separator street in the gap between each pair of neighbouring
/// items on the same side of a branch street. Existing separators are
/// replaced, so the operation is idempotent.
pub fn place_separators(mut map: CityMap) -> CityMap {
    map.streets.retain(|s| s.kind == StreetKind::Branch);
    let sep = map.config.separator_width;
    let mut added = Vec::new();
    for branch in &map.branches {
        let street = &map.streets[branch.street];
        let band = street.band();
        for (s, side) in branch.sides.iter().enumerate() {
            for pair in side.windows(2) {
                let (a, b) = (&pair[0].rect, &pair[1].rect);
                let (start, end, axis) = match branch.axis {
                    Axis::Horizontal => {
                        let x = a.right() + sep / 2.0;
                        let reach = a.height.max(b.height);
                        let (y0, y1) = if s == 0 {
                            (band.y - reach, band.y)
                        } else {
                            (band.bottom(), band.bottom() + reach)
                        };
                        (Point::new(x, y0), Point::new(x, y1), Axis::Vertical)
                    }
                    Axis::Vertical => {
                        let y = a.bottom() + sep / 2.0;
                        let reach = a.width.max(b.width);
                        let (x0, x1) = if s == 0 {
                            (band.x - reach, band.x)
                        } else {
                            (band.right(), band.right() + reach)
                        };
                        (Point::new(x0, y), Point::new(x1, y), Axis::Horizontal)
                    }
                };
                added.push(Street {
                    id: 0,
                    axis,
                    start,
                    end,
                    width: sep,
                    depth: branch.depth + 1,
                    kind: StreetKind::Separator,
                    node: branch.node,
                });
            }
        }
    }
    map.streets.extend(added);
    for (i, s) in map.streets.iter_mut().enumerate() {
        s.id = i;
    }
    map
}
