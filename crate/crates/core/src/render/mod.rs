//! Output formats: the canonical map document and SVG.

pub mod document;
pub mod svg;

pub use document::{graph_digest, DocumentError, MapDocument, MapParameters, SCHEMA};
pub use svg::{render_svg, SvgOptions};
