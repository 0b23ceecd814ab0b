//! End-to-end map construction: parse, weight, cluster, lay out, annotate.

use thiserror::Error;

use crate::annotate::{annotate, AnnotateConfig, Annotations, OverlayError, OverlayInput};
use crate::block::{layout_block, BlockLayout, LayoutConfig};
use crate::cluster::{agglomerate_refined, oversized_clusters, Dendrogram, Partition};
use crate::feature_tree::{build_feature_tree, FeatureTree, TreeError, DEFAULT_CONTRACTION_RATIO};
use crate::graph::{aggregate_to_class_graph, parse_member_graph, ClassGraph, GraphError, KindWeights, MemberGraph};
use crate::render::{MapDocument, MapParameters};
use crate::street::{layout_streets, place_separators, CityMap, StreetConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("empty graph: no classes to map")]
    EmptyGraph,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kind_weights: KindWeights,
    pub contraction_ratio: f64,
    pub layout: LayoutConfig,
    pub street: StreetConfig,
    pub annotate: AnnotateConfig,
    /// Clusters larger than this produce a warning.
    pub max_cluster_warn: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kind_weights: KindWeights::default(),
            contraction_ratio: DEFAULT_CONTRACTION_RATIO,
            layout: LayoutConfig::default(),
            street: StreetConfig::default(),
            annotate: AnnotateConfig::default(),
            max_cluster_warn: 80,
        }
    }
}

impl PipelineConfig {
    fn parameters(&self) -> MapParameters {
        MapParameters {
            kind_weights: self.kind_weights,
            contraction_ratio: self.contraction_ratio,
            layout: self.layout,
            street: self.street,
            annotate: self.annotate.clone(),
        }
    }
}

/// Clustering stage output.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub graph: ClassGraph,
    pub dendrogram: Dendrogram,
    pub partition: Partition,
    pub modularity: f64,
    pub tree: FeatureTree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub clustering: Clustering,
    pub blocks: Vec<BlockLayout>,
    pub map: CityMap,
    pub annotations: Annotations,
    pub document: MapDocument,
    pub warnings: Vec<String>,
}

pub fn cluster_graph(graph: &MemberGraph, config: &PipelineConfig) -> Result<Clustering, PipelineError> {
    let graph = aggregate_to_class_graph(graph, &config.kind_weights);
    if graph.is_empty() {
        return Err(PipelineError::EmptyGraph);
    }
    let (dendrogram, step) = agglomerate_refined(&graph);
    let partition = dendrogram.partition_after(step);
    let modularity = dendrogram.q_history()[step];
    let tree = build_feature_tree(&dendrogram, &partition, config.contraction_ratio)?;
    Ok(Clustering {
        graph,
        dendrogram,
        partition,
        modularity,
        tree,
    })
}

pub fn build_map(
    graph: &MemberGraph,
    overlay: &OverlayInput,
    config: &PipelineConfig,
) -> Result<MapOutput, PipelineError> {
    let clustering = cluster_graph(graph, config)?;
    let mut warnings = Vec::new();
    for (cluster, size) in oversized_clusters(&clustering.partition, config.max_cluster_warn) {
        warnings.push(format!(
            "cluster {cluster} has {size} classes (more than {}); its block will be large",
            config.max_cluster_warn
        ));
    }
    let blocks: Vec<BlockLayout> = clustering
        .partition
        .clusters()
        .iter()
        .enumerate()
        .map(|(c, members)| layout_block(&clustering.graph, c, members, &config.layout))
        .collect();
    let map = place_separators(layout_streets(
        &clustering.tree,
        &blocks,
        &clustering.graph,
        &config.street,
    ));
    let annotations = annotate(&map, &clustering.graph, overlay, &config.annotate)?;
    let document = MapDocument::build(
        &clustering.graph,
        &map,
        &annotations,
        config.parameters(),
        clustering.modularity,
    );
    Ok(MapOutput {
        clustering,
        blocks,
        map,
        annotations,
        document,
        warnings,
    })
}

/// Parses graph text and builds the map.
pub fn map_from_text(text: &str, overlay: &OverlayInput, config: &PipelineConfig) -> Result<MapOutput, PipelineError> {
    build_map(&parse_member_graph(text)?, overlay, config)
}
