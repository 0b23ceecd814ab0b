//! Package patterns inside a block.
//!
//! A block is painted by package. Its pattern tells how packages relate to
//! the feature: one package covers it (single color), packages follow the
//! dependency levels in bands (layered), a few packages form separate
//! patches (subgroups), or nothing stands out (mixed).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::block::BlockLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    SingleColor,
    Layered,
    Subgroups,
    Mixed,
}

impl Pattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::SingleColor => "single_color",
            Pattern::Layered => "layered",
            Pattern::Subgroups => "subgroups",
            Pattern::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternThresholds {
    /// Share of the top package for a single-color block.
    pub single_color: f64,
    /// Share of buildings matching their level's majority package.
    pub layered: f64,
    /// Minimum share of a connected patch to count as a subgroup.
    pub subgroup: f64,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        Self {
            single_color: 0.95,
            layered: 0.8,
            subgroup: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPattern {
    pub cluster: usize,
    pub pattern: Pattern,
    /// Packages by descending building count; only those reaching the
    /// subgroup share, or the top one.
    pub dominant_packages: Vec<String>,
}

/// Classifies one block. `package_of[class]` names each class's package.
pub fn classify_block(layout: &BlockLayout, package_of: &[&str], thresholds: &PatternThresholds) -> BlockPattern {
    let n = layout.placements.len();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &layout.placements {
        *counts.entry(package_of[p.class]).or_insert(0) += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut dominant: Vec<String> = ranked
        .iter()
        .filter(|(_, c)| *c as f64 >= thresholds.subgroup * n as f64)
        .map(|(p, _)| p.to_string())
        .collect();
    if dominant.is_empty() {
        if let Some((p, _)) = ranked.first() {
            dominant.push(p.to_string());
        }
    }

    let pattern = if n == 0 {
        Pattern::Mixed
    } else if ranked[0].1 as f64 >= thresholds.single_color * n as f64 {
        Pattern::SingleColor
    } else if is_layered(layout, package_of, thresholds.layered) {
        Pattern::Layered
    } else if patch_count(layout, package_of, thresholds.subgroup) >= 2 {
        Pattern::Subgroups
    } else {
        Pattern::Mixed
    };
    BlockPattern {
        cluster: layout.cluster,
        pattern,
        dominant_packages: dominant,
    }
}

fn is_layered(layout: &BlockLayout, package_of: &[&str], threshold: f64) -> bool {
    let mut per_level: BTreeMap<usize, BTreeMap<&str, usize>> = BTreeMap::new();
    for p in &layout.placements {
        *per_level
            .entry(p.level)
            .or_default()
            .entry(package_of[p.class])
            .or_insert(0) += 1;
    }
    let mut matching = 0;
    let mut bands: Vec<&str> = Vec::new();
    for counts in per_level.values() {
        let (pkg, c) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(p, c)| (*p, *c))
            .unwrap_or(("", 0));
        matching += c;
        if bands.last() != Some(&pkg) {
            bands.push(pkg);
        }
    }
    let distinct: BTreeSet<&str> = bands.iter().copied().collect();
    // a package that comes back after another band breaks contiguity
    let contiguous = distinct.len() == bands.len();
    contiguous && distinct.len() >= 2 && matching as f64 >= threshold * layout.placements.len() as f64
}

/// Number of 4-connected same-package patches covering at least `share` of the block.
fn patch_count(layout: &BlockLayout, package_of: &[&str], share: f64) -> usize {
    let cells: BTreeMap<(usize, usize), &str> = layout
        .placements
        .iter()
        .map(|p| ((p.row, p.column), package_of[p.class]))
        .collect();
    let min = share * layout.placements.len() as f64;
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut patches = 0;
    for (&start, &pkg) in &cells {
        if !seen.insert(start) {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        while let Some((r, c)) = queue.pop_front() {
            size += 1;
            let around = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
            for cell in around {
                if cells.get(&cell) == Some(&pkg) && seen.insert(cell) {
                    queue.push_back(cell);
                }
            }
        }
        if size as f64 >= min {
            patches += 1;
        }
    }
    patches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Placement;

    /// Block from rows of package letters; level = row.
    fn block(rows: &[&str]) -> (BlockLayout, Vec<String>) {
        let mut placements = Vec::new();
        let mut packages = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                placements.push(Placement {
                    class: packages.len(),
                    column: c,
                    row: r,
                    level: r,
                    x: c as f64,
                });
                packages.push(ch.to_string());
            }
        }
        let layout = BlockLayout {
            cluster: 0,
            depth: rows.len(),
            width: rows[0].len(),
            level_count: rows.len(),
            cycle_breaks: 0,
            placements,
            penalty: 0.0,
        };
        (layout, packages)
    }

    fn classify(rows: &[&str]) -> Pattern {
        let (layout, packages) = block(rows);
        let refs: Vec<&str> = packages.iter().map(String::as_str).collect();
        classify_block(&layout, &refs, &PatternThresholds::default()).pattern
    }

    #[test]
    fn four_reference_blocks() {
        assert_eq!(classify(&["aaaaa", "aaaaa", "aaaaa", "aaaaa"]), Pattern::SingleColor);
        assert_eq!(classify(&["aaaa", "aaaa", "bbbb", "bbbb"]), Pattern::Layered);
        assert_eq!(classify(&["aabb", "aabb", "aabb", "aabb"]), Pattern::Subgroups);
        assert_eq!(classify(&["abcd", "bcda", "cdab", "dabc"]), Pattern::Mixed);
    }

    #[test]
    fn returning_band_is_not_layered() {
        // a/b/a bands: majority matches everywhere but a reappears
        assert_ne!(classify(&["aaaa", "bbbb", "aaaa"]), Pattern::Layered);
    }

    #[test]
    fn dominant_packages_ranked() {
        let (layout, packages) = block(&["aabb", "aabb", "aacc"]);
        let refs: Vec<&str> = packages.iter().map(String::as_str).collect();
        let p = classify_block(&layout, &refs, &PatternThresholds::default());
        assert_eq!(p.dominant_packages, vec!["a", "b"]);
    }
}
