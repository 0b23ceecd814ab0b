//! Per-class metric channels bound to visual attributes.
//!
//! Channels are read from `class_id,channel,value` records. A channel whose
//! values all parse as numbers is scalar, one holding only booleans is a
//! flag, anything else is categorical. Bindings map a channel onto a visual
//! attribute of buildings, their ground or their links. Positions are owned
//! by the layout and can never be bound.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::links::Link;
use crate::graph::ClassEntity;
use crate::street::CityMap;

pub const MISSING_COLOR: &str = "#9e9e9e";
pub const DEFAULT_GROUND: &str = "#e8e4d8";
const HOT_COLOR: (u8, u8, u8) = (0xd6, 0x27, 0x28);
const COLD_COLOR: (u8, u8, u8) = (0x9e, 0x9e, 0x9e);
const SHAPES: [&str; 4] = ["box", "cylinder", "pyramid", "cone"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverlayError {
    #[error("overlay line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("binding `{0}` must look like channel=attribute[:sqrt]")]
    BadBinding(String),
    #[error("unknown visual attribute `{0}`")]
    UnknownAttribute(String),
    #[error("position is owned by the layout and cannot be bound (`{0}`)")]
    PositionBinding(String),
    #[error("unknown transform `{0}`")]
    UnknownTransform(String),
    #[error("unknown channel `{name}`; available: {}", available.join(", "))]
    UnknownChannel { name: String, available: Vec<String> },
    #[error("{kind} channel `{channel}` cannot drive {attribute}")]
    KindMismatch {
        channel: String,
        kind: ChannelKind,
        attribute: VisualAttribute,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Categorical,
    Scalar,
    Flag,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Categorical => "categorical",
            ChannelKind::Scalar => "scalar",
            ChannelKind::Flag => "flag",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: ChannelKind,
    /// Raw value per class id.
    pub values: BTreeMap<String, String>,
}

impl Channel {
    pub fn infer(values: BTreeMap<String, String>) -> Self {
        let kind = if !values.is_empty() && values.values().all(|v| parse_flag(v).is_some()) {
            ChannelKind::Flag
        } else if !values.is_empty() && values.values().all(|v| v.parse::<f64>().is_ok_and(f64::is_finite)) {
            ChannelKind::Scalar
        } else {
            ChannelKind::Categorical
        };
        Self { kind, values }
    }

    fn scalar(&self, class: &str) -> Option<f64> {
        self.values.get(class).and_then(|v| v.parse().ok())
    }

    fn flag(&self, class: &str) -> Option<bool> {
        self.values.get(class).and_then(|v| parse_flag(v))
    }
}

fn parse_flag(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisualAttribute {
    BuildingColor,
    BuildingHeight,
    BuildingShape,
    Brightness,
    Ornament,
    GroundColor,
    GroundFire,
    LinkColor,
    LinkThickness,
    LinkHeight,
}

impl VisualAttribute {
    pub const ALL: [VisualAttribute; 10] = [
        VisualAttribute::BuildingColor,
        VisualAttribute::BuildingHeight,
        VisualAttribute::BuildingShape,
        VisualAttribute::Brightness,
        VisualAttribute::Ornament,
        VisualAttribute::GroundColor,
        VisualAttribute::GroundFire,
        VisualAttribute::LinkColor,
        VisualAttribute::LinkThickness,
        VisualAttribute::LinkHeight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VisualAttribute::BuildingColor => "building_color",
            VisualAttribute::BuildingHeight => "building_height",
            VisualAttribute::BuildingShape => "building_shape",
            VisualAttribute::Brightness => "brightness",
            VisualAttribute::Ornament => "ornament",
            VisualAttribute::GroundColor => "ground_color",
            VisualAttribute::GroundFire => "ground_fire",
            VisualAttribute::LinkColor => "link_color",
            VisualAttribute::LinkThickness => "link_thickness",
            VisualAttribute::LinkHeight => "link_height",
        }
    }

    fn accepts(self, kind: ChannelKind) -> bool {
        use VisualAttribute::*;
        match self {
            BuildingColor | GroundColor | LinkColor => true,
            BuildingShape => kind == ChannelKind::Categorical,
            Ornament | GroundFire => kind == ChannelKind::Flag,
            BuildingHeight | Brightness | LinkThickness | LinkHeight => kind == ChannelKind::Scalar,
        }
    }
}

impl fmt::Display for VisualAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VisualAttribute {
    type Err = OverlayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if matches!(s, "position" | "x" | "y" | "row" | "column" | "grid_position") {
            return Err(OverlayError::PositionBinding(s.to_string()));
        }
        let alias = match s {
            "color" => "building_color",
            "height" => "building_height",
            "shape" => "building_shape",
            "fire" => "ground_fire",
            "thickness" => "link_thickness",
            other => other,
        };
        VisualAttribute::ALL
            .into_iter()
            .find(|a| a.as_str() == alias)
            .ok_or_else(|| OverlayError::UnknownAttribute(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    Sqrt,
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Sqrt => v.max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub channel: String,
    pub attribute: VisualAttribute,
    pub transform: Transform,
    /// Multiplier for height, thickness and link height.
    pub scale: f64,
}

impl FromStr for Binding {
    type Err = OverlayError;

    /// `channel=attribute`, optionally followed by `:sqrt` and `*scale`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OverlayError::BadBinding(s.to_string());
        let (channel, rest) = s.split_once('=').ok_or_else(bad)?;
        let (rest, scale) = match rest.split_once('*') {
            Some((r, k)) => (r, k.trim().parse::<f64>().map_err(|_| bad())?),
            None => (rest, 1.0),
        };
        let (attribute, transform) = match rest.split_once(':') {
            Some((a, "sqrt")) => (a, Transform::Sqrt),
            Some((a, "identity")) => (a, Transform::Identity),
            Some((_, t)) => return Err(OverlayError::UnknownTransform(t.to_string())),
            None => (rest, Transform::Identity),
        };
        if channel.trim().is_empty() {
            return Err(bad());
        }
        Ok(Binding {
            channel: channel.trim().to_string(),
            attribute: attribute.parse()?,
            transform,
            scale,
        })
    }
}

/// Reads `class_id,channel,value` records into channels. A leading header
/// row with exactly those names is skipped.
pub fn parse_overlay_csv(text: &str) -> Result<BTreeMap<String, Channel>, OverlayError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut raw: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| OverlayError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(OverlayError::Csv {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        if i == 0 && &record[0] == "class_id" && &record[1] == "channel" && &record[2] == "value" {
            continue;
        }
        raw.entry(record[1].to_string())
            .or_default()
            .insert(record[0].to_string(), record[2].to_string());
    }
    Ok(raw.into_iter().map(|(k, v)| (k, Channel::infer(v))).collect())
}

/// Channels every map has: `package` and `level` (0 at the top of its block).
pub fn builtin_channels(map: &CityMap, classes: &[ClassEntity]) -> BTreeMap<String, Channel> {
    let package = classes.iter().map(|c| (c.id.clone(), c.package.clone())).collect();
    let level = map
        .buildings
        .iter()
        .map(|b| (classes[b.class].id.clone(), b.level.to_string()))
        .collect();
    BTreeMap::from([
        (
            "package".to_string(),
            Channel {
                kind: ChannelKind::Categorical,
                values: package,
            },
        ),
        (
            "level".to_string(),
            Channel {
                kind: ChannelKind::Scalar,
                values: level,
            },
        ),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingStyle {
    pub color: String,
    pub height: f64,
    pub shape: String,
    pub brightness: f64,
    pub ornament: bool,
    pub ground_color: String,
    pub ground_fire: bool,
}

impl Default for BuildingStyle {
    fn default() -> Self {
        Self {
            color: MISSING_COLOR.to_string(),
            height: 1.0,
            shape: SHAPES[0].to_string(),
            brightness: 1.0,
            ornament: false,
            ground_color: DEFAULT_GROUND.to_string(),
            ground_fire: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkStyle {
    /// Solid color; `None` keeps the source-to-target gradient.
    pub color: Option<String>,
    pub thickness: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub channel: String,
    pub attribute: VisualAttribute,
    /// Category and color pairs for categorical colors, `min`/`max` for scalars.
    pub items: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayStyles {
    /// Indexed by class.
    pub buildings: Vec<BuildingStyle>,
    /// Parallel to the routed links.
    pub links: Vec<LinkStyle>,
    pub legend: Vec<LegendEntry>,
}

/// Stable color for a category: FNV-1a hash mapped to a hue.
pub fn category_color(value: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in value.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    hsl_to_hex((h % 360) as f64, 0.62, 0.52)
}

fn hsl_to_hex(h: f64, s: f64, l: f64) -> String {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", to(r), to(g), to(b))
}

/// Gray-to-red ramp, `t` in [0, 1].
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(COLD_COLOR.0, HOT_COLOR.0),
        mix(COLD_COLOR.1, HOT_COLOR.1),
        mix(COLD_COLOR.2, HOT_COLOR.2)
    )
}

/// A channel's value for a class, turned into a color.
struct ColorScale<'a> {
    channel: &'a Channel,
    transform: Transform,
    min: f64,
    max: f64,
    palette: &'a BTreeMap<String, String>,
}

impl<'a> ColorScale<'a> {
    fn new(channel: &'a Channel, transform: Transform, palette: &'a BTreeMap<String, String>) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        if channel.kind == ChannelKind::Scalar {
            for v in channel.values.values().filter_map(|v| v.parse::<f64>().ok()) {
                let v = transform.apply(v);
                min = min.min(v);
                max = max.max(v);
            }
        }
        Self {
            channel,
            transform,
            min,
            max,
            palette,
        }
    }

    fn color(&self, class: &str) -> Option<String> {
        match self.channel.kind {
            ChannelKind::Categorical => self
                .channel
                .values
                .get(class)
                .map(|v| self.palette.get(v).cloned().unwrap_or_else(|| category_color(v))),
            ChannelKind::Scalar => self.channel.scalar(class).map(|v| {
                let span = self.max - self.min;
                let t = if span > 0.0 {
                    (self.transform.apply(v) - self.min) / span
                } else {
                    1.0
                };
                ramp_color(t)
            }),
            ChannelKind::Flag => {
                self.channel
                    .flag(class)
                    .map(|f| if f { ramp_color(1.0) } else { MISSING_COLOR.to_string() })
            }
        }
    }

    fn normalized(&self, class: &str) -> Option<f64> {
        let v = self.transform.apply(self.channel.scalar(class)?);
        let span = self.max - self.min;
        Some(if span > 0.0 { (v - self.min) / span } else { 1.0 })
    }

    fn legend(&self) -> Vec<(String, String)> {
        match self.channel.kind {
            ChannelKind::Categorical => {
                let mut cats: Vec<&String> = self.channel.values.values().collect();
                cats.sort();
                cats.dedup();
                cats.into_iter()
                    .map(|c| {
                        let color = self.palette.get(c).cloned().unwrap_or_else(|| category_color(c));
                        (c.clone(), color)
                    })
                    .collect()
            }
            ChannelKind::Scalar if self.min.is_finite() => vec![
                (format!("{}", self.min), ramp_color(0.0)),
                (format!("{}", self.max), ramp_color(1.0)),
            ],
            ChannelKind::Scalar => Vec::new(),
            ChannelKind::Flag => vec![
                ("true".to_string(), ramp_color(1.0)),
                ("false".to_string(), MISSING_COLOR.to_string()),
            ],
        }
    }
}

/// Colors `ids` by a channel (missing values gray) and returns the legend.
pub fn color_by_channel<'a>(
    channel: &Channel,
    ids: impl IntoIterator<Item = &'a str>,
    palette: &BTreeMap<String, String>,
) -> (Vec<String>, Vec<(String, String)>) {
    let scale = ColorScale::new(channel, Transform::Identity, palette);
    let colors = ids
        .into_iter()
        .map(|id| scale.color(id).unwrap_or_else(|| MISSING_COLOR.to_string()))
        .collect();
    (colors, scale.legend())
}

/// Resolves bindings into per-building and per-link styles. Classes missing
/// from a channel keep the neutral default. Geometry is only read.
pub fn apply_overlay(
    map: &CityMap,
    classes: &[ClassEntity],
    links: &[Link],
    channels: &BTreeMap<String, Channel>,
    bindings: &[Binding],
    palette: &BTreeMap<String, String>,
) -> Result<OverlayStyles, OverlayError> {
    let mut buildings = vec![BuildingStyle::default(); classes.len()];
    let mut link_styles: Vec<LinkStyle> = links
        .iter()
        .map(|l| LinkStyle {
            color: None,
            thickness: l.width,
            height: l.elevation,
        })
        .collect();
    let mut legend = Vec::new();

    for binding in bindings {
        let channel = channels
            .get(&binding.channel)
            .ok_or_else(|| OverlayError::UnknownChannel {
                name: binding.channel.clone(),
                available: channels.keys().cloned().collect(),
            })?;
        if !binding.attribute.accepts(channel.kind) {
            return Err(OverlayError::KindMismatch {
                channel: binding.channel.clone(),
                kind: channel.kind,
                attribute: binding.attribute,
            });
        }
        let scale = ColorScale::new(channel, binding.transform, palette);
        let scalar = |id: &str| channel.scalar(id).map(|v| binding.transform.apply(v) * binding.scale);
        for b in &map.buildings {
            let id = classes[b.class].id.as_str();
            let style = &mut buildings[b.class];
            match binding.attribute {
                VisualAttribute::BuildingColor => {
                    style.color = scale.color(id).unwrap_or_else(|| MISSING_COLOR.to_string())
                }
                VisualAttribute::GroundColor => {
                    style.ground_color = scale.color(id).unwrap_or_else(|| DEFAULT_GROUND.to_string())
                }
                VisualAttribute::BuildingHeight => style.height = scalar(id).unwrap_or(1.0),
                VisualAttribute::Brightness => style.brightness = scale.normalized(id).unwrap_or(1.0),
                VisualAttribute::BuildingShape => {
                    style.shape = channel
                        .values
                        .get(id)
                        .map(|v| {
                            let pick = u32::from_str_radix(&category_color(v)[1..3], 16).unwrap_or(0);
                            SHAPES[pick as usize % SHAPES.len()].to_string()
                        })
                        .unwrap_or_else(|| SHAPES[0].to_string())
                }
                VisualAttribute::Ornament => style.ornament = channel.flag(id).unwrap_or(false),
                VisualAttribute::GroundFire => style.ground_fire = channel.flag(id).unwrap_or(false),
                VisualAttribute::LinkColor | VisualAttribute::LinkThickness | VisualAttribute::LinkHeight => {}
            }
        }
        for (link, style) in links.iter().zip(&mut link_styles) {
            let id = classes[link.source].id.as_str();
            match binding.attribute {
                VisualAttribute::LinkColor => style.color = scale.color(id),
                VisualAttribute::LinkThickness => {
                    if let Some(v) = scalar(id) {
                        style.thickness = link.width * v;
                    }
                }
                VisualAttribute::LinkHeight => {
                    if let Some(v) = scalar(id) {
                        style.height = v;
                    }
                }
                _ => {}
            }
        }
        if matches!(
            binding.attribute,
            VisualAttribute::BuildingColor | VisualAttribute::GroundColor | VisualAttribute::LinkColor
        ) {
            legend.push(LegendEntry {
                channel: binding.channel.clone(),
                attribute: binding.attribute,
                items: scale.legend(),
            });
        }
    }
    Ok(OverlayStyles {
        buildings,
        links: link_styles,
        legend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_channel_kinds() {
        let ch = parse_overlay_csv(
            "class_id,channel,value\n\
             a,methods,10\nb,methods,2.5\n\
             a,changed,true\nb,changed,no\n\
             a,author,kim\nb,author,3\n",
        )
        .unwrap();
        assert_eq!(ch["methods"].kind, ChannelKind::Scalar);
        assert_eq!(ch["changed"].kind, ChannelKind::Flag);
        assert_eq!(ch["author"].kind, ChannelKind::Categorical);
    }

    #[test]
    fn csv_field_count_checked() {
        let err = parse_overlay_csv("a,methods\n").unwrap_err();
        assert!(matches!(err, OverlayError::Csv { line: 1, .. }), "{err}");
    }

    #[test]
    fn parses_bindings() {
        let b: Binding = "methods=height:sqrt".parse().unwrap();
        assert_eq!(b.attribute, VisualAttribute::BuildingHeight);
        assert_eq!(b.transform, Transform::Sqrt);
        let b: Binding = "loc=link_thickness*0.5".parse().unwrap();
        assert_eq!(b.scale, 0.5);
        assert!(matches!(
            "m=position".parse::<Binding>(),
            Err(OverlayError::PositionBinding(_))
        ));
        assert!(matches!(
            "m=height:log".parse::<Binding>(),
            Err(OverlayError::UnknownTransform(_))
        ));
        assert!(matches!(
            "nonsense".parse::<Binding>(),
            Err(OverlayError::BadBinding(_))
        ));
    }

    #[test]
    fn category_colors_are_stable_and_distinct() {
        assert_eq!(category_color("javax.swing"), category_color("javax.swing"));
        assert_ne!(category_color("javax.swing"), category_color("javax.swing.table"));
        assert_eq!(category_color("x").len(), 7);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp_color(0.0), MISSING_COLOR);
        assert_eq!(ramp_color(1.0), "#d62728");
        assert_eq!(ramp_color(f64::NAN), MISSING_COLOR);
    }

    #[test]
    fn hsl_primaries() {
        assert_eq!(hsl_to_hex(0.0, 1.0, 0.5), "#ff0000");
        assert_eq!(hsl_to_hex(120.0, 1.0, 0.5), "#00ff00");
        assert_eq!(hsl_to_hex(240.0, 1.0, 0.5), "#0000ff");
    }
}
