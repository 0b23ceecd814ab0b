//! Flat SVG rendering of a map document.
//!
//! Buildings are drawn from above with a shadow whose offset grows with
//! height. Ground tiles darken with dependency level, so the top of a block
//! reads as a hilltop. Links are polylines lifted by their elevation and
//! shaded from the source color to the target color.

use std::fmt::Write;

use crate::annotate::links::{Point3, SOURCE_COLOR, TARGET_COLOR};
use crate::annotate::overlay::{color_by_channel, OverlayError};
use crate::render::document::MapDocument;
use crate::street::StreetKind;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Pixels per world unit.
    pub scale: f64,
    /// Draw every building at unit height.
    pub fixed_height: bool,
    pub links: bool,
    pub keywords: bool,
    /// Recolor buildings by this channel instead of the stored colors.
    pub color_channel: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            scale: 12.0,
            fixed_height: false,
            links: true,
            keywords: true,
            color_channel: None,
        }
    }
}

const MARGIN: f64 = 1.5;
const SHADOW_PER_HEIGHT: f64 = 0.12;
const LIFT_PER_ELEVATION: f64 = 0.6;
const LEGEND_ROW: f64 = 1.4;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Darkens a `#rrggbb` color by `amount` in [0, 1].
fn shade(color: &str, amount: f64) -> String {
    let hex = color.trim_start_matches('#');
    if hex.len() != 6 {
        return color.to_string();
    }
    let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap_or(0) as f64;
    let k = 1.0 - amount.clamp(0.0, 1.0);
    format!(
        "#{:02x}{:02x}{:02x}",
        (channel(0) * k).round() as u8,
        (channel(2) * k).round() as u8,
        (channel(4) * k).round() as u8
    )
}

/// Renders the document. Fails only when `color_channel` is not a channel
/// of the document.
pub fn render_svg(doc: &MapDocument, options: &SvgOptions) -> Result<String, OverlayError> {
    let colors: Vec<String> = match &options.color_channel {
        Some(name) => {
            let channel = doc.channels.get(name).ok_or_else(|| OverlayError::UnknownChannel {
                name: name.clone(),
                available: doc.channels.keys().cloned().collect(),
            })?;
            color_by_channel(channel, doc.classes.iter().map(|c| c.id.as_str()), &Default::default()).0
        }
        None => doc.classes.iter().map(|c| c.style.color.clone()).collect(),
    };
    let legend = match &options.color_channel {
        Some(name) => {
            let items = color_by_channel(&doc.channels[name], std::iter::empty(), &Default::default()).1;
            vec![(name.clone(), items)]
        }
        None => doc
            .legend
            .iter()
            .map(|e| (format!("{} ({})", e.channel, e.attribute), e.items.clone()))
            .collect(),
    };

    let s = options.scale;
    let b = doc.bounds;
    let legend_rows: usize = legend.iter().map(|(_, items)| 1 + items.len().min(12)).sum();
    let width = (b.width + 2.0 * MARGIN) * s;
    let height = (b.height + 2.0 * MARGIN + legend_rows as f64 * LEGEND_ROW) * s;
    let px = |x: f64| (x - b.x + MARGIN) * s;
    let py = |y: f64| (y - b.y + MARGIN) * s;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}" data-digest="{}">"#,
        doc.graph_digest
    );
    let _ = writeln!(
        out,
        r##"<rect class="background" width="100%" height="100%" fill="#f7f5ef"/>"##
    );

    if options.links {
        out.push_str("<defs>\n");
        for link in &doc.links {
            if link.style.color.is_some() {
                continue;
            }
            let (a, z) = (link.points[0], link.points[link.points.len() - 1]);
            let _ = writeln!(
                out,
                r#"<linearGradient id="g-{}" gradientUnits="userSpaceOnUse" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"><stop offset="0" stop-color="{SOURCE_COLOR}"/><stop offset="1" stop-color="{TARGET_COLOR}"/></linearGradient>"#,
                link.id,
                px(a.x),
                py(a.y),
                px(z.x),
                py(z.y)
            );
        }
        out.push_str("</defs>\n");
    }

    out.push_str("<g class=\"streets\">\n");
    for street in &doc.streets {
        let band = street.band();
        let (class, fill) = match street.kind {
            StreetKind::Branch => ("street", "#c9c3b3"),
            StreetKind::Separator => ("separator", "#ddd8ca"),
        };
        let _ = writeln!(
            out,
            r#"<rect class="{class}" data-node="{}" data-depth="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            street.node,
            street.depth,
            px(band.x),
            py(band.y),
            band.width * s,
            band.height * s
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"blocks\">\n");
    for block in &doc.clusters {
        let r = block.rect;
        let _ = writeln!(
            out,
            r##"<rect class="block" data-cluster="{}" data-pattern="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#ebe6d6"/>"##,
            block.id,
            block.pattern.as_str(),
            px(r.x),
            py(r.y),
            r.width * s,
            r.height * s
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"ground\">\n");
    for c in &doc.classes {
        let levels = doc.clusters[c.cluster].level_count.max(1);
        let step = 0.35 * c.level as f64 / levels as f64;
        let fill = if c.style.ground_fire {
            "#ff7f0e".to_string()
        } else {
            shade(&c.style.ground_color, step)
        };
        let f = c.footprint;
        let _ = writeln!(
            out,
            r#"<rect class="tile" data-level="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            c.level,
            px(f.x),
            py(f.y),
            f.width * s,
            f.height * s
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"buildings\">\n");
    for (c, color) in doc.classes.iter().zip(&colors) {
        let f = c.footprint.inflate(-0.15 * c.footprint.width);
        let h = if options.fixed_height {
            1.0
        } else {
            c.style.height.max(0.0)
        };
        let off = SHADOW_PER_HEIGHT * h * s;
        let (x, y, w, hh) = (px(f.x), py(f.y), f.width * s, f.height * s);
        let _ = writeln!(
            out,
            r##"<rect class="shadow" x="{:.2}" y="{:.2}" width="{w:.2}" height="{hh:.2}" fill="#000" fill-opacity="0.18"/>"##,
            x + off,
            y + off
        );
        let title = format!("<title>{} ({})</title>", escape(&c.name), escape(&c.package));
        let common = format!(
            r#"class="building" data-id="{}" data-cluster="{}" data-height="{h}" fill="{color}" fill-opacity="{:.3}""#,
            escape(&c.id),
            c.cluster,
            c.style.brightness.clamp(0.15, 1.0)
        );
        match c.style.shape.as_str() {
            "pyramid" | "cone" => {
                let _ = writeln!(
                    out,
                    r#"<polygon {common} points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}">{title}</polygon>"#,
                    x + w / 2.0,
                    y,
                    x + w,
                    y + hh,
                    x,
                    y + hh
                );
            }
            shape => {
                let rx = if shape == "cylinder" { w / 2.0 } else { 0.0 };
                let _ = writeln!(
                    out,
                    r#"<rect {common} x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{hh:.2}" rx="{rx:.2}">{title}</rect>"#
                );
            }
        }
        if c.style.ornament {
            let _ = writeln!(
                out,
                r##"<circle class="ornament" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#ffd700"/>"##,
                x + w / 2.0,
                y + hh / 2.0,
                w / 6.0
            );
        }
    }
    out.push_str("</g>\n");

    if options.links {
        out.push_str("<g class=\"links\" fill=\"none\">\n");
        for link in &doc.links {
            let lift = |p: &Point3| format!("{:.2},{:.2}", px(p.x), py(p.y - LIFT_PER_ELEVATION * p.z));
            let d: Vec<String> = link.points.iter().map(lift).collect();
            let stroke = link
                .style
                .color
                .clone()
                .unwrap_or_else(|| format!("url(#g-{})", link.id));
            let _ = writeln!(
                out,
                r#"<polyline class="link" data-id="{}" data-source="{}" data-target="{}" points="{}" stroke="{stroke}" stroke-width="{:.2}" stroke-opacity="0.55"/>"#,
                link.id,
                escape(&link.source),
                escape(&link.target),
                d.join(" "),
                (link.style.thickness * s).max(0.5)
            );
        }
        out.push_str("</g>\n");
    }

    if options.keywords {
        out.push_str("<g class=\"keywords\" text-anchor=\"middle\" font-family=\"sans-serif\">\n");
        for k in &doc.keywords {
            let size = k.extent().height * s * 0.8;
            let _ = writeln!(
                out,
                r##"<text class="keyword" data-tier="{}" x="{:.2}" y="{:.2}" font-size="{size:.1}" dominant-baseline="middle" fill="#222" fill-opacity="0.8">{}</text>"##,
                k.tier,
                px(k.anchor.x),
                py(k.anchor.y),
                escape(&k.word)
            );
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"legend\" font-family=\"sans-serif\">\n");
    let mut y = b.height + 2.0 * MARGIN;
    for (title, items) in &legend {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="{:.1}" font-weight="bold">{}</text>"#,
            MARGIN * s,
            (y + 1.0) * s,
            s,
            escape(title)
        );
        y += LEGEND_ROW;
        for (label, color) in items.iter().take(12) {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{s:.1}" height="{s:.1}" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="{:.1}">{}</text>"#,
                MARGIN * s,
                y * s,
                (MARGIN + 1.5) * s,
                (y + 0.9) * s,
                s * 0.9,
                escape(label)
            );
            y += LEGEND_ROW;
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
