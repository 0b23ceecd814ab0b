//! Seeded synthetic dependency graphs in the text input format.
//!
//! Used by tests, benchmarks and the demo page: a planted-partition graph
//! with known communities, and a larger toolkit-like graph with features,
//! layers and package noise.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A generated graph and the community each class was planted in.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGraph {
    pub text: String,
    pub truth: BTreeMap<String, usize>,
}

/// `groups` communities of `size` classes each. Each ordered pair of
/// distinct classes gets a unit `cdep` with probability `p_in` inside a
/// community and `p_out` across.
pub fn planted_partition(groups: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> SyntheticGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut truth = BTreeMap::new();
    let id = |g: usize, k: usize| format!("g{g:02}c{k:03}");
    for g in 0..groups {
        for k in 0..size {
            let _ = writeln!(text, "class {} Group{g}Item{k} planted.group{g}", id(g, k));
            truth.insert(id(g, k), g);
        }
    }
    for g in 0..groups {
        for k in 0..size {
            for h in 0..groups {
                for l in 0..size {
                    if (g, k) == (h, l) {
                        continue;
                    }
                    let p = if g == h { p_in } else { p_out };
                    if rng.gen_bool(p) {
                        let _ = writeln!(text, "cdep {} {} 1", id(g, k), id(h, l));
                    }
                }
            }
        }
    }
    SyntheticGraph { text, truth }
}

const FEATURES: [&str; 12] = [
    "Table", "Tree", "Button", "Text", "Menu", "Border", "Slider", "Combo", "Scroll", "Split", "Tab", "Spinner",
];
const LAYER_PACKAGES: [&str; 4] = [
    "javax.swing.plaf",
    "javax.swing.event",
    "javax.swing.undo",
    "javax.swing.filechooser",
];
const ROLES: [[&str; 4]; 4] = [
    ["View", "Panel", "Frame", "Dialog"],
    ["Listener", "Event", "Handler", "Action"],
    ["Model", "Editor", "Renderer", "Selection"],
    ["Support", "Util", "Factory", "Cache"],
];

/// A toolkit-like graph of `classes` classes in 12 features and 16
/// packages. Within a feature, classes call down a four-layer stack; a few
/// calls cross features, and about a quarter of the classes live in a
/// shared per-layer package instead of their feature's package.
pub fn toolkit(classes: usize, seed: u64) -> SyntheticGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    let mut truth = BTreeMap::new();
    // (id, feature, layer)
    let mut all: Vec<(String, usize, usize)> = Vec::with_capacity(classes);
    for i in 0..classes {
        let feature = i % FEATURES.len();
        let k = i / FEATURES.len();
        let layer = k % 4;
        let id = format!("c{i:04}");
        let role = ROLES[layer][rng.gen_range(0..4)];
        let package = if rng.gen_bool(0.25) {
            LAYER_PACKAGES[layer].to_string()
        } else {
            format!("javax.swing.{}", FEATURES[feature].to_lowercase())
        };
        let _ = writeln!(text, "class {id} {}{role}{k} {package}", FEATURES[feature]);
        let _ = writeln!(text, "member {id}.run {id} method");
        let _ = writeln!(text, "member {id}.update {id} method");
        let _ = writeln!(text, "member {id}.state {id} field");
        truth.insert(id.clone(), feature);
        all.push((id, feature, layer));
    }

    let mut by_slot: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for (id, f, l) in &all {
        by_slot.entry((*f, *l)).or_default().push(id);
    }
    for (id, feature, layer) in &all {
        for method in ["run", "update"] {
            if *layer < 3 {
                let below = rng.gen_range(*layer + 1..4);
                if let Some(pool) = by_slot.get(&(*feature, below)) {
                    for target in pool.choose_multiple(&mut rng, 2) {
                        if *target != id {
                            let _ = writeln!(text, "dep {id}.{method} {target}.run call");
                        }
                    }
                }
            }
            if rng.gen_bool(0.3) {
                if let Some(pool) = by_slot.get(&(*feature, *layer)) {
                    let target = pool[rng.gen_range(0..pool.len())];
                    if target != id {
                        let _ = writeln!(text, "dep {id}.{method} {target}.state field_access");
                    }
                }
            }
            if rng.gen_bool(0.05) {
                let (other, _, _) = &all[rng.gen_range(0..all.len())];
                if other != id {
                    let _ = writeln!(text, "dep {id}.{method} {other}.update call");
                }
            }
        }
    }
    SyntheticGraph { text, truth }
}
