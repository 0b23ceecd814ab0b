//! WebAssembly bindings for the browser demo.
//!
//! [`Session`] holds one built map and answers the page's three questions:
//! build a map from graph text, redraw it with another color channel or
//! flat heights, and list the links touching a clicked class.
//! [`MapSession`] is the thin JavaScript-facing wrapper.

use citymap::pipeline::{map_from_text, PipelineConfig};
use citymap::render::{render_svg, MapDocument, SvgOptions};
use wasm_bindgen::prelude::*;

/// A built map, independent of JavaScript so it can be tested natively.
#[derive(Debug, Clone)]
pub struct Session {
    document: MapDocument,
    warnings: Vec<String>,
}

impl Session {
    pub fn build(graph_text: &str) -> Result<Self, String> {
        let output =
            map_from_text(graph_text, &Default::default(), &PipelineConfig::default()).map_err(|e| e.to_string())?;
        Ok(Self {
            document: output.document,
            warnings: output.warnings,
        })
    }

    pub fn document(&self) -> &MapDocument {
        &self.document
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn svg(&self, color_channel: Option<&str>, fixed_height: bool) -> Result<String, String> {
        let options = SvgOptions {
            fixed_height,
            color_channel: color_channel.map(str::to_string),
            ..SvgOptions::default()
        };
        render_svg(&self.document, &options).map_err(|e| e.to_string())
    }

    /// Ids of the links leaving or entering `class_id`.
    pub fn highlight(&self, class_id: &str) -> Result<Vec<String>, String> {
        if self.document.class_index(class_id).is_none() {
            return Err(format!("unknown class `{class_id}`"));
        }
        Ok(self
            .document
            .links
            .iter()
            .filter(|l| l.source == class_id || l.target == class_id)
            .map(|l| l.id.clone())
            .collect())
    }

    pub fn channels(&self) -> Vec<String> {
        self.document.channels.keys().cloned().collect()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} classes, {} blocks, {} links, Q {:.4}",
            self.document.classes.len(),
            self.document.clusters.len(),
            self.document.links.len(),
            self.document.modularity
        )
    }
}

/// Seeded toolkit-like sample graph in the text input format.
#[wasm_bindgen(js_name = sampleGraph)]
pub fn sample_graph(classes: usize, seed: u32) -> String {
    citymap::synth::toolkit(classes, seed as u64).text
}

#[wasm_bindgen]
pub struct MapSession(Session);

#[wasm_bindgen]
impl MapSession {
    /// Builds a map from graph text.
    #[wasm_bindgen(constructor)]
    pub fn new(graph_text: &str) -> Result<MapSession, JsError> {
        Session::build(graph_text).map(MapSession).map_err(|e| JsError::new(&e))
    }

    /// Redraws with buildings colored by `channel` (stored colors when absent).
    pub fn svg(&self, channel: Option<String>, fixed_height: bool) -> Result<String, JsError> {
        self.0
            .svg(channel.as_deref(), fixed_height)
            .map_err(|e| JsError::new(&e))
    }

    /// Link ids touching `class_id`.
    pub fn highlight(&self, class_id: &str) -> Result<Vec<String>, JsError> {
        self.0.highlight(class_id).map_err(|e| JsError::new(&e))
    }

    pub fn channels(&self) -> Vec<String> {
        self.0.channels()
    }

    pub fn summary(&self) -> String {
        self.0.summary()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.0.warnings().to_vec()
    }

    #[wasm_bindgen(js_name = documentJson)]
    pub fn document_json(&self) -> String {
        self.0.document().to_canonical_json()
    }
}
