//! `citymap`: build architecture maps from dependency graphs, render them
//! and serve them to a viewer.

mod serve;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use citymap::annotate::overlay::parse_overlay_csv;
use citymap::annotate::{Binding, OverlayInput};
use citymap::graph::parse_member_graph;
use citymap::pipeline::{build_map, cluster_graph, Clustering, MapOutput, PipelineConfig};
use citymap::render::{render_svg, MapDocument, SvgOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "citymap", version, about = "Architecture maps from class dependency graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write a map document and optionally an SVG.
    Map(MapArgs),
    /// Cluster only and print the dendrogram, cut and feature tree.
    Cluster(ClusterArgs),
    /// Render a saved map document to SVG.
    Render(RenderArgs),
    /// Serve a map document and a minimal viewer page over local HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct LayoutArgs {
    /// Penalty for dependencies that do not point downhill.
    #[arg(long, default_value_t = 2.0)]
    penalty_a: f64,
    /// Weight of block width against block depth.
    #[arg(long, default_value_t = 0.3)]
    balance_b: f64,
    /// Warn about clusters with more classes than this.
    #[arg(long, default_value_t = 80)]
    max_cluster_warn: usize,
}

impl LayoutArgs {
    fn config(&self) -> PipelineConfig {
        let mut config = PipelineConfig::default();
        config.layout.penalty_a = self.penalty_a;
        config.layout.balance_b = self.balance_b;
        config.max_cluster_warn = self.max_cluster_warn;
        config
    }
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Dependency graph in the line-based text format.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_map: PathBuf,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Overlay CSV with `class_id,channel,value` rows. Repeatable.
    #[arg(long)]
    overlay: Vec<PathBuf>,
    /// `channel=attribute[:sqrt][*scale]`. Repeatable.
    #[arg(long)]
    bind: Vec<String>,
    #[command(flatten)]
    layout: LayoutArgs,
    /// Do not print the cluster and pattern reports.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    layout: LayoutArgs,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Map document (`.sarfmap`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_svg: PathBuf,
    /// Recolor buildings by this channel.
    #[arg(long)]
    color_channel: Option<String>,
    /// Draw all buildings at the same height.
    #[arg(long)]
    fixed_height: bool,
    /// Pixels per world unit.
    #[arg(long, default_value_t = 12.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Map document (`.sarfmap`).
    #[arg(long)]
    input: PathBuf,
    /// Local port; 0 picks a free one.
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_document(path: &Path) -> Result<MapDocument> {
    MapDocument::from_json(&read(path)?).with_context(|| format!("cannot load map {}", path.display()))
}

fn overlay_input(files: &[PathBuf], bindings: &[String]) -> Result<OverlayInput> {
    let mut channels = BTreeMap::new();
    for path in files {
        let parsed = parse_overlay_csv(&read(path)?).with_context(|| format!("in overlay {}", path.display()))?;
        channels.extend(parsed);
    }
    let bindings = bindings
        .iter()
        .map(|b| b.parse::<Binding>().with_context(|| format!("bad --bind `{b}`")))
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlayInput {
        channels,
        bindings,
        palette: BTreeMap::new(),
    })
}

fn cluster_report(clustering: &Clustering) -> String {
    let sizes = clustering.partition.sizes();
    let mut out = format!("clusters {}  Q_D {:.6}\n", sizes.len(), clustering.modularity);
    for (c, members) in clustering.partition.clusters().iter().enumerate() {
        let first = &clustering.graph.class(members[0]).id;
        let _ = writeln!(out, "  cluster {c:>3}  size {:>4}  first {first}", sizes[c]);
    }
    out
}

fn pattern_report(output: &MapOutput) -> String {
    let mut out = String::from("patterns\n");
    for p in &output.annotations.patterns {
        let _ = writeln!(
            out,
            "  cluster {:>3}  {:<12}  {}",
            p.cluster,
            p.pattern.as_str(),
            p.dominant_packages.join(" ")
        );
    }
    out
}

fn run_map(args: &MapArgs) -> Result<()> {
    let graph = parse_member_graph(&read(&args.input)?).with_context(|| format!("in {}", args.input.display()))?;
    let overlay = overlay_input(&args.overlay, &args.bind)?;
    let output = build_map(&graph, &overlay, &args.layout.config())?;
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    write(&args.out_map, &output.document.to_canonical_json())?;
    if let Some(path) = &args.out_svg {
        write(path, &render_svg(&output.document, &SvgOptions::default())?)?;
    }
    if !args.quiet {
        print!("{}{}", cluster_report(&output.clustering), pattern_report(&output));
    }
    Ok(())
}

fn run_cluster(args: &ClusterArgs) -> Result<()> {
    let graph = parse_member_graph(&read(&args.input)?).with_context(|| format!("in {}", args.input.display()))?;
    let clustering = cluster_graph(&graph, &args.layout.config())?;
    print!("{}", cluster_report(&clustering));
    println!("dendrogram");
    print!("{}", clustering.dendrogram.to_nested_text(&clustering.graph));
    println!("feature tree");
    print!("{}", clustering.tree.to_text());
    Ok(())
}

fn run_render(args: &RenderArgs) -> Result<()> {
    let doc = load_document(&args.input)?;
    let options = SvgOptions {
        scale: args.scale,
        fixed_height: args.fixed_height,
        color_channel: args.color_channel.clone(),
        ..SvgOptions::default()
    };
    write(&args.out_svg, &render_svg(&doc, &options)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Map(args) => run_map(&args),
        Command::Cluster(args) => run_cluster(&args),
        Command::Render(args) => run_render(&args),
        Command::Serve(args) => {
            let text = read(&args.input)?;
            let doc =
                MapDocument::from_json(&text).with_context(|| format!("cannot load map {}", args.input.display()))?;
            let svg = render_svg(&doc, &SvgOptions::default())?;
            serve::serve(text, svg, args.port)
        }
    }
}
