use std::collections::BTreeSet;

use citymap::annotate::OverlayInput;
use citymap::block::{depth_candidates, greedy_level_decomposition, optimize_depth, BlockGraph, LayoutConfig};
use citymap::pipeline::{map_from_text, PipelineConfig};
use citymap::street::StreetKind;
use proptest::prelude::*;

fn block_graphs(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let edges = prop::collection::vec((0..n, 0..n, 0.2f64..1.0), 0..(n * 2 + 1));
        (Just(n), edges)
    })
}

/// Edge weight `d` per the penalty definition, written out independently.
fn oracle_penalty(edges: &[(usize, usize, f64)], row_of: &[usize], a: f64, b: f64) -> f64 {
    edges
        .iter()
        .map(|&(i, j, d)| {
            let (yi, yj) = (row_of[i] as f64, row_of[j] as f64);
            if yi >= yj {
                d * ((yi - yj).abs() + a)
            } else {
                d * b * (yi - yj).abs()
            }
        })
        .sum()
}

fn dedup(n: usize, edges: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let g = BlockGraph::from_edges(n, edges.iter().copied());
    g.edges().collect()
}

proptest! {
    #[test]
    fn levels_partition_nodes((n, edges) in block_graphs(30)) {
        let g = BlockGraph::from_edges(n, edges.iter().copied());
        let d = greedy_level_decomposition(&g);
        let mut all: Vec<usize> = d.levels.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(d.levels.iter().all(|l| !l.is_empty()));
    }

    #[test]
    fn continuous_positions_are_weighted_means((n, edges) in block_graphs(12)) {
        let g = BlockGraph::from_edges(n, edges.iter().copied());
        let levels = greedy_level_decomposition(&g);
        let level_of = levels.level_of();
        let edges = dedup(n, &edges);
        for layout in depth_candidates(0, &g, &levels, &LayoutConfig::default()) {
            let x: Vec<f64> = layout.placements.iter().map(|p| p.x).collect();
            for i in 0..n {
                let (mut num, mut den) = (0.0, 0.0);
                for &(s, t, d) in &edges {
                    let other = if s == i { t } else if t == i { s } else { continue };
                    if level_of[other] != level_of[i] {
                        num += d * d * x[other];
                        den += d * d;
                    }
                }
                if den > 0.0 {
                    prop_assert!((x[i] - num / den).abs() < 1e-9, "node {} x {} mean {}", i, x[i], num / den);
                    // moving by half a cell never helps
                    let f = |xi: f64| -> f64 {
                        edges.iter().filter_map(|&(s, t, d)| {
                            let other = if s == i { t } else if t == i { s } else { return None };
                            (level_of[other] != level_of[i]).then(|| (d * (xi - x[other])).powi(2))
                        }).sum()
                    };
                    prop_assert!(f(x[i] + 0.5) >= f(x[i]) && f(x[i] - 0.5) >= f(x[i]));
                }
            }
        }
    }

    #[test]
    fn chosen_depth_has_minimal_penalty((n, edges) in block_graphs(12), a in 0.5f64..4.0, b in 0.0f64..1.0) {
        let config = LayoutConfig { penalty_a: a, balance_b: b, ..LayoutConfig::default() };
        let g = BlockGraph::from_edges(n, edges.iter().copied());
        let levels = greedy_level_decomposition(&g);
        let edges = dedup(n, &edges);
        let chosen = optimize_depth(0, &g, &levels, &config);
        let mut best = f64::INFINITY;
        for candidate in depth_candidates(0, &g, &levels, &config) {
            let rows: Vec<usize> = candidate.placements.iter().map(|p| p.row).collect();
            let p = oracle_penalty(&edges, &rows, a, b);
            prop_assert!((p - candidate.penalty).abs() < 1e-9);
            best = best.min(p);
        }
        let rows: Vec<usize> = chosen.placements.iter().map(|p| p.row).collect();
        prop_assert!(oracle_penalty(&edges, &rows, a, b) <= best + 1e-12);
    }

    #[test]
    fn placements_fill_grid_injectively((n, edges) in block_graphs(15)) {
        let g = BlockGraph::from_edges(n, edges.iter().copied());
        let levels = greedy_level_decomposition(&g);
        for layout in depth_candidates(0, &g, &levels, &LayoutConfig::default()) {
            let cells: BTreeSet<(usize, usize)> = layout.placements.iter().map(|p| (p.row, p.column)).collect();
            prop_assert_eq!(cells.len(), n);
            prop_assert!(layout.placements.iter().all(|p| p.row < layout.depth && p.column < layout.width));
        }
    }
}

/// Random weighted class graphs as `cdep` text, `n` classes in `packages` packages.
fn cdep_graphs() -> impl Strategy<Value = String> {
    (2usize..40).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u32..8), 1..(n * 3)).prop_map(move |edges| {
            let mut text = String::new();
            for i in 0..n {
                text.push_str(&format!("class k{i:03} Node{i} app.part{}\n", i % 3));
            }
            for (s, t, w) in edges {
                if s != t {
                    text.push_str(&format!("cdep k{s:03} k{t:03} {}\n", w as f64 / 2.0));
                }
            }
            text
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_geometry_invariants(text in cdep_graphs()) {
        let out = map_from_text(&text, &OverlayInput::default(), &PipelineConfig::default()).unwrap();
        let map = &out.map;
        let sep = map.config.separator_width;

        let mut cells = BTreeSet::new();
        for b in &map.buildings {
            prop_assert!(cells.insert((b.cluster, b.row, b.column)));
            prop_assert!(map.blocks[b.cluster].rect.contains_rect(&b.footprint));
        }
        for (i, a) in map.blocks.iter().enumerate() {
            prop_assert!(map.bounds.contains_rect(&a.rect));
            for b in &map.blocks[i + 1..] {
                prop_assert!(!a.rect.inflate(sep / 2.0).overlaps(&b.rect.inflate(sep / 2.0)), "{:?} {:?}", a.rect, b.rect);
            }
            for s in &map.streets {
                prop_assert!(!s.band().overlaps(&a.rect), "street {:?} crosses block {}", s, a.cluster);
            }
        }
        for w in map.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", map.energy_history);
        }
        let separators = map.streets.iter().filter(|s| s.kind == StreetKind::Separator).count();
        prop_assert_eq!(separators, map.separator_count());
    }

    #[test]
    fn pipeline_is_deterministic(text in cdep_graphs()) {
        let config = PipelineConfig::default();
        let a = map_from_text(&text, &OverlayInput::default(), &config).unwrap();
        let b = map_from_text(&text, &OverlayInput::default(), &config).unwrap();
        prop_assert_eq!(a.document.to_canonical_json(), b.document.to_canonical_json());
    }
}
