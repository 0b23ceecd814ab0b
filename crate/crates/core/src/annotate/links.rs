//! Dependency links drawn as arcs between buildings.
//!
//! A link inside one block is a low arc that never touches a street. A link
//! between blocks follows the branch streets joining the two blocks in the
//! feature tree and flies higher the further apart the blocks are, so
//! unrelated traffic does not cross feature boundaries at random.

use serde::{Deserialize, Serialize};

use crate::graph::ClassGraph;
use crate::street::{CityMap, Point};

/// Color at the depending end.
pub const SOURCE_COLOR: &str = "#2ca02c";
/// Color at the depended-on end.
pub const TARGET_COLOR: &str = "#d62728";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Width per unit of edge weight.
    pub width_scale: f64,
    /// Apex height of a link inside a block.
    pub intra_height: f64,
    /// Height per feature-tree hop between blocks.
    pub hop_height: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            width_scale: 0.15,
            intra_height: 0.5,
            hop_height: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    fn on(p: Point, z: f64) -> Self {
        Self { x: p.x, y: p.y, z }
    }

    pub fn flat(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub width: f64,
    /// Polyline from source building to target building.
    pub points: Vec<Point3>,
    /// Interior points that sit on streets.
    pub street_points: usize,
    /// Highest point of the arc.
    pub elevation: f64,
    pub intra_block: bool,
}

/// Routes every class-graph edge, in edge order.
pub fn route_links(map: &CityMap, graph: &ClassGraph, config: &LinkConfig) -> Vec<Link> {
    graph
        .edges()
        .map(|(i, j, w)| {
            let a = &map.buildings[i];
            let b = &map.buildings[j];
            let (pa, pb) = (a.center(), b.center());
            let mid = Point::new((pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0);
            let (interior, elevation, intra) = if a.cluster == b.cluster {
                (vec![Point3::on(mid, config.intra_height)], config.intra_height, true)
            } else {
                let la = map.blocks[a.cluster].node;
                let lb = map.blocks[b.cluster].node;
                let height = config.hop_height * map.tree.distance(la, lb) as f64;
                let points = map
                    .tree
                    .branch_path(la, lb)
                    .into_iter()
                    .filter_map(|node| map.street_of(node))
                    .map(|s| Point3::on(s.project(mid), height))
                    .collect();
                (points, height, false)
            };
            let street_points = if intra { 0 } else { interior.len() };
            let mut points = Vec::with_capacity(interior.len() + 2);
            points.push(Point3::on(pa, 0.0));
            points.extend(interior);
            points.push(Point3::on(pb, 0.0));
            Link {
                source: i,
                target: j,
                weight: w,
                width: w * config.width_scale,
                points,
                street_points,
                elevation,
                intra_block: intra,
            }
        })
        .collect()
}
