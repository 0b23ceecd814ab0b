//! Tag-cloud keywords per block.
//!
//! Words come from package and class names. Each block is a document: a
//! word's tf is the fraction of the block's classes whose names contain it,
//! its idf is `ln(blocks / blocks containing it)`. Every occurrence sits over
//! its class; the label for a word goes where the tf-idf density in a 3x3
//! cell window peaks, and the densest words per block are kept.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::ClassEntity;
use crate::street::{CityMap, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeywordConfig {
    pub max_labels_per_block: usize,
    /// Half-size of the density window in cells (1 gives 3x3).
    pub kernel_radius: usize,
    pub min_word_len: usize,
    pub nudge_attempts: usize,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self {
            max_labels_per_block: 4,
            kernel_radius: 1,
            min_word_len: 2,
            nudge_attempts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordLabel {
    pub word: String,
    pub cluster: usize,
    /// Class the label originates from.
    pub class: usize,
    /// Label center after overlap adjustment.
    pub anchor: Point,
    /// Peak tf-idf density.
    pub weight: f64,
    /// 1 (small) to 3 (large).
    pub tier: u8,
}

impl KeywordLabel {
    /// World-space box the label occupies.
    pub fn extent(&self) -> Rect {
        label_box(&self.word, self.tier, self.anchor)
    }
}

fn font_size(tier: u8) -> f64 {
    0.6 + 0.4 * tier as f64
}

fn label_box(word: &str, tier: u8, center: Point) -> Rect {
    let h = font_size(tier);
    let w = 0.6 * h * word.chars().count() as f64;
    Rect::new(center.x - w / 2.0, center.y - h / 2.0, w, h)
}

/// Splits an identifier or dotted path into lowercase words at punctuation,
/// camel-case and letter/digit boundaries. `XMLHttpRequest2` gives
/// `xml`, `http`, `request`; pure digit runs are dropped.
pub fn tokenize_identifier(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..=chars.len() {
            let boundary = i == chars.len() || {
                let (prev, cur) = (chars[i - 1], chars[i]);
                let next = chars.get(i + 1).copied();
                (prev.is_lowercase() && cur.is_uppercase())
                    || (prev.is_alphabetic() != cur.is_alphabetic())
                    || (prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase))
            };
            if boundary {
                let word: String = chars[start..i].iter().collect::<String>().to_lowercase();
                if word.chars().any(char::is_alphabetic) {
                    words.push(word);
                }
                start = i;
            }
        }
    }
    words
}

/// Distinct words of one class: package path plus display name.
pub fn class_words(class: &ClassEntity, min_len: usize) -> BTreeSet<String> {
    tokenize_identifier(&class.package)
        .into_iter()
        .chain(tokenize_identifier(&class.display_name))
        .filter(|w| w.chars().count() >= min_len)
        .collect()
}

/// tf-idf of every word per block. `blocks[b][k]` is the word set of the
/// k-th class in block b.
pub fn tf_idf(blocks: &[Vec<BTreeSet<String>>]) -> Vec<BTreeMap<String, f64>> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut counts: Vec<BTreeMap<&str, usize>> = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut c: BTreeMap<&str, usize> = BTreeMap::new();
        for words in block {
            for w in words {
                *c.entry(w.as_str()).or_insert(0) += 1;
            }
        }
        for w in c.keys() {
            *df.entry(w).or_insert(0) += 1;
        }
        counts.push(c);
    }
    let total = blocks.len() as f64;
    blocks
        .iter()
        .zip(counts)
        .map(|(block, c)| {
            c.into_iter()
                .map(|(w, n)| {
                    let tf = n as f64 / block.len() as f64;
                    let idf = (total / df[w] as f64).ln();
                    (w.to_string(), tf * idf)
                })
                .collect()
        })
        .collect()
}

/// Selects and places keyword labels for every block.
pub fn extract_keywords(map: &CityMap, classes: &[ClassEntity], config: &KeywordConfig) -> Vec<KeywordLabel> {
    let words: Vec<BTreeSet<String>> = classes.iter().map(|c| class_words(c, config.min_word_len)).collect();
    let corpus: Vec<Vec<BTreeSet<String>>> = map
        .blocks
        .iter()
        .map(|b| b.layout.placements.iter().map(|p| words[p.class].clone()).collect())
        .collect();
    let scores = tf_idf(&corpus);

    let radius = config.kernel_radius;
    let area = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut candidates: Vec<KeywordLabel> = Vec::new();
    for (block, score) in map.blocks.iter().zip(&scores) {
        let placements = &block.layout.placements;
        let mut per_block: Vec<KeywordLabel> = Vec::new();
        for (word, &value) in score {
            if value <= 0.0 {
                continue;
            }
            let holders: Vec<_> = placements.iter().filter(|p| words[p.class].contains(word)).collect();
            let mut best: Option<(f64, usize)> = None;
            for p in &holders {
                let near = holders
                    .iter()
                    .filter(|q| q.row.abs_diff(p.row) <= radius && q.column.abs_diff(p.column) <= radius)
                    .count();
                let density = near as f64 * value / area;
                if best.is_none_or(|(d, _)| density > d) {
                    best = Some((density, p.class));
                }
            }
            if let Some((density, class)) = best {
                per_block.push(KeywordLabel {
                    word: word.clone(),
                    cluster: block.cluster,
                    class,
                    anchor: map.buildings[class].center(),
                    weight: density,
                    tier: 1,
                });
            }
        }
        per_block.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.word.cmp(&b.word)));
        per_block.truncate(config.max_labels_per_block);
        if let Some(top) = per_block.first().map(|l| l.weight) {
            for label in &mut per_block {
                let r = label.weight / top;
                label.tier = if r >= 2.0 / 3.0 {
                    3
                } else if r >= 1.0 / 3.0 {
                    2
                } else {
                    1
                };
            }
        }
        candidates.extend(per_block);
    }

    resolve_overlaps(candidates, config.nudge_attempts)
}

/// Greedy placement by descending weight; a label that still collides after
/// the nudge attempts is dropped.
fn resolve_overlaps(mut labels: Vec<KeywordLabel>, attempts: usize) -> Vec<KeywordLabel> {
    labels.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.cluster.cmp(&b.cluster))
            .then(a.word.cmp(&b.word))
    });
    let mut placed: Vec<KeywordLabel> = Vec::with_capacity(labels.len());
    for mut label in labels {
        let base = label.anchor;
        let b = label_box(&label.word, label.tier, base);
        let (w, h) = (b.width, b.height);
        let offsets = [
            (0.0, 0.0),
            (0.0, -h),
            (0.0, h),
            (-w / 2.0, 0.0),
            (w / 2.0, 0.0),
            (0.0, -2.0 * h),
            (0.0, 2.0 * h),
            (-w, 0.0),
            (w, 0.0),
        ];
        let fits = offsets.iter().take(attempts + 1).find_map(|&(dx, dy)| {
            let center = Point::new(base.x + dx, base.y + dy);
            let candidate = label_box(&label.word, label.tier, center);
            placed
                .iter()
                .all(|p| !p.extent().overlaps(&candidate))
                .then_some(center)
        });
        if let Some(center) = fits {
            label.anchor = center;
            placed.push(label);
        }
    }
    placed.sort_by(|a, b| {
        a.cluster
            .cmp(&b.cluster)
            .then(b.weight.total_cmp(&a.weight))
            .then(a.word.cmp(&b.word))
    });
    placed
}
