//! The `.sarfmap` document: everything needed to redraw a map without
//! recomputing it.
//!
//! Serialization is canonical. Keys are sorted and every float is rounded to
//! nine significant digits, so equal inputs give byte-identical files and a
//! loaded document re-serializes unchanged.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotate::keywords::KeywordLabel;
use crate::annotate::links::{Link, Point3};
use crate::annotate::overlay::{BuildingStyle, Channel, LegendEntry, LinkStyle};
use crate::annotate::pattern::Pattern;
use crate::annotate::{AnnotateConfig, Annotations};
use crate::block::LayoutConfig;
use crate::feature_tree::FeatureTree;
use crate::graph::{ClassGraph, KindWeights};
use crate::street::{CityMap, Rect, Street, StreetConfig};

pub const SCHEMA: &str = "citymap/1";
const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed map document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported map schema `{found}` (expected `{SCHEMA}`)")]
    Schema { found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapParameters {
    pub kind_weights: KindWeights,
    pub contraction_ratio: f64,
    pub layout: LayoutConfig,
    pub street: StreetConfig,
    pub annotate: AnnotateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: String,
    pub name: String,
    pub package: String,
    pub cluster: usize,
    pub level: usize,
    pub row: usize,
    pub column: usize,
    pub footprint: Rect,
    pub style: BuildingStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub id: usize,
    /// Feature-tree leaf.
    pub node: usize,
    pub size: usize,
    pub rect: Rect,
    pub depth: usize,
    pub width: usize,
    pub level_count: usize,
    pub cycle_breaks: usize,
    pub penalty: f64,
    pub pattern: Pattern,
    pub dominant_packages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: String,
    pub source: String,
    pub target: String,
    pub weight: f64,
    pub points: Vec<Point3>,
    pub street_points: usize,
    pub intra_block: bool,
    pub style: LinkStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub schema: String,
    /// SHA-256 of the canonical class graph.
    pub graph_digest: String,
    pub parameters: MapParameters,
    pub modularity: f64,
    pub classes: Vec<ClassRecord>,
    pub clusters: Vec<ClusterRecord>,
    pub feature_tree: FeatureTree,
    pub streets: Vec<Street>,
    pub bounds: Rect,
    pub energy_history: Vec<f64>,
    pub keywords: Vec<KeywordLabel>,
    pub links: Vec<LinkRecord>,
    pub legend: Vec<LegendEntry>,
    pub channels: BTreeMap<String, Channel>,
}

/// Digest of the class graph in canonical form (classes by id, edges sorted),
/// so it does not depend on the order of the input records.
pub fn graph_digest(graph: &ClassGraph) -> String {
    let mut classes: Vec<String> = graph
        .classes()
        .iter()
        .map(|c| format!("class {} {} {}\n", c.id, c.display_name, c.package))
        .collect();
    let mut edges: Vec<String> = graph
        .edges()
        .map(|(i, j, w)| format!("edge {} {} {:e}\n", graph.class(i).id, graph.class(j).id, w))
        .collect();
    classes.sort();
    edges.sort();
    let mut hasher = Sha256::new();
    for line in classes.iter().chain(&edges) {
        hasher.update(line.as_bytes());
    }
    hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl MapDocument {
    pub fn build(
        graph: &ClassGraph,
        map: &CityMap,
        annotations: &Annotations,
        parameters: MapParameters,
        modularity: f64,
    ) -> Self {
        let classes = map
            .buildings
            .iter()
            .map(|b| {
                let c = graph.class(b.class);
                ClassRecord {
                    id: c.id.clone(),
                    name: c.display_name.clone(),
                    package: c.package.clone(),
                    cluster: b.cluster,
                    level: b.level,
                    row: b.row,
                    column: b.column,
                    footprint: b.footprint,
                    style: annotations.styles.buildings[b.class].clone(),
                }
            })
            .collect();
        let clusters = map
            .blocks
            .iter()
            .zip(&annotations.patterns)
            .map(|(b, p)| ClusterRecord {
                id: b.cluster,
                node: b.node,
                size: b.layout.placements.len(),
                rect: b.rect,
                depth: b.layout.depth,
                width: b.layout.width,
                level_count: b.layout.level_count,
                cycle_breaks: b.layout.cycle_breaks,
                penalty: b.layout.penalty,
                pattern: p.pattern,
                dominant_packages: p.dominant_packages.clone(),
            })
            .collect();
        let links = annotations
            .links
            .iter()
            .zip(&annotations.styles.links)
            .enumerate()
            .map(|(k, (l, style)): (usize, (&Link, &LinkStyle))| LinkRecord {
                id: format!("l{k}"),
                source: graph.class(l.source).id.clone(),
                target: graph.class(l.target).id.clone(),
                weight: l.weight,
                points: l.points.clone(),
                street_points: l.street_points,
                intra_block: l.intra_block,
                style: style.clone(),
            })
            .collect();
        MapDocument {
            schema: SCHEMA.to_string(),
            graph_digest: graph_digest(graph),
            parameters,
            modularity,
            classes,
            clusters,
            feature_tree: map.tree.clone(),
            streets: map.streets.clone(),
            bounds: map.bounds,
            energy_history: map.energy_history.clone(),
            keywords: annotations.keywords.clone(),
            links,
            legend: annotations.styles.legend.clone(),
            channels: annotations.channels.clone(),
        }
    }

    /// Canonical JSON text, newline terminated.
    pub fn to_canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("map documents always serialize");
        round_floats(&mut value);
        let mut text = serde_json::to_string_pretty(&value).expect("json values always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let doc: MapDocument = serde_json::from_str(text)?;
        if doc.schema != SCHEMA {
            return Err(DocumentError::Schema { found: doc.schema });
        }
        Ok(doc)
    }

    pub fn class_index(&self, id: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.id.as_str().cmp(id)).ok()
    }
}

/// Rounds `v` to nine significant digits; negative zero becomes zero.
pub fn round_significant(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let text = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    text.parse().unwrap_or(v)
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let r = round_significant(n.as_f64().unwrap_or(0.0));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
