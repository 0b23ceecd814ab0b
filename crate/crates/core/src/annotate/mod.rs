//! Everything drawn on top of the blank map.

pub mod keywords;
pub mod links;
pub mod overlay;
pub mod pattern;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::ClassGraph;
use crate::street::CityMap;

pub use keywords::{extract_keywords, KeywordConfig, KeywordLabel};
pub use links::{route_links, Link, LinkConfig};
pub use overlay::{apply_overlay, Binding, Channel, OverlayError, OverlayStyles};
pub use pattern::{classify_block, BlockPattern, Pattern, PatternThresholds};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotateConfig {
    pub keywords: KeywordConfig,
    pub links: LinkConfig,
    pub patterns: PatternThresholds,
}

/// User-supplied overlay: channels, bindings and optional fixed colors
/// for categorical values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlayInput {
    pub channels: BTreeMap<String, Channel>,
    pub bindings: Vec<Binding>,
    pub palette: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub keywords: Vec<KeywordLabel>,
    /// Indexed by cluster.
    pub patterns: Vec<BlockPattern>,
    pub links: Vec<Link>,
    pub styles: OverlayStyles,
    /// Every channel that can be bound, built-ins included.
    pub channels: BTreeMap<String, Channel>,
}

/// Annotates a map. Built-in channels are added to the user's; unless a
/// binding colors buildings, they are colored by package.
pub fn annotate(
    map: &CityMap,
    graph: &ClassGraph,
    overlay: &OverlayInput,
    config: &AnnotateConfig,
) -> Result<Annotations, OverlayError> {
    let classes = graph.classes();
    let keywords = extract_keywords(map, classes, &config.keywords);
    let packages: Vec<&str> = classes.iter().map(|c| c.package.as_str()).collect();
    let patterns = map
        .blocks
        .iter()
        .map(|b| classify_block(&b.layout, &packages, &config.patterns))
        .collect();
    let links = route_links(map, graph, &config.links);

    let mut channels = overlay::builtin_channels(map, classes);
    channels.extend(overlay.channels.clone());
    let mut bindings = overlay.bindings.clone();
    if !bindings
        .iter()
        .any(|b| b.attribute == overlay::VisualAttribute::BuildingColor)
    {
        bindings.insert(0, "package=building_color".parse()?);
    }
    let styles = apply_overlay(map, classes, &links, &channels, &bindings, &overlay.palette)?;
    Ok(Annotations {
        keywords,
        patterns,
        links,
        styles,
        channels,
    })
}
