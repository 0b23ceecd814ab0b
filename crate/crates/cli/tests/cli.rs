use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use citymap::render::MapDocument;
use citymap::synth::planted_partition;
use tempfile::TempDir;

fn citymap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citymap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("temp dir"),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).expect("write fixture");
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn planted_fixture(ws: &Workspace) -> PathBuf {
    ws.file("planted.txt", &planted_partition(8, 12, 0.4, 0.01, 5).text)
}

#[test]
fn map_writes_document_svg_and_reports() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let (map, svg) = (ws.path("out.sarfmap"), ws.path("out.svg"));
    let out = citymap(&["map", "--input", s(&input), "--out-map", s(&map), "--out-svg", s(&svg)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("clusters 8  Q_D "), "{stdout}");
    assert!(stdout.contains("patterns\n"));
    let doc = MapDocument::from_json(&std::fs::read_to_string(&map).unwrap()).unwrap();
    assert_eq!(doc.clusters.len(), 8);
    assert_eq!(doc.classes.len(), 96);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg "));
}

#[test]
fn map_is_byte_identical_across_runs() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let (map, svg) = (ws.path(&format!("{run}.sarfmap")), ws.path(&format!("{run}.svg")));
        let out = citymap(&[
            "map",
            "-q",
            "--input",
            s(&input),
            "--out-map",
            s(&map),
            "--out-svg",
            s(&svg),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        outputs.push((std::fs::read(map).unwrap(), std::fs::read(svg).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn empty_graph_fails_with_diagnostic() {
    let ws = Workspace::new();
    let input = ws.file("empty.txt", "# nothing here\n");
    let out = citymap(&["map", "--input", s(&input), "--out-map", s(&ws.path("x.sarfmap"))]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("empty graph"), "{}", text(&out.stderr));
    assert!(!ws.path("x.sarfmap").exists());
}

#[test]
fn malformed_input_and_missing_file_fail() {
    let ws = Workspace::new();
    let input = ws.file("bad.txt", "class a A p\ndep a.x b.y call\n");
    let out = citymap(&["map", "--input", s(&input), "--out-map", s(&ws.path("x.sarfmap"))]);
    assert!(!out.status.success());
    let out = citymap(&[
        "map",
        "--input",
        s(&ws.path("missing.txt")),
        "--out-map",
        s(&ws.path("x.sarfmap")),
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("cannot read"));
}

#[test]
fn layout_flags_reach_the_document() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let map = ws.path("out.sarfmap");
    let out = citymap(&[
        "map",
        "-q",
        "--input",
        s(&input),
        "--out-map",
        s(&map),
        "--penalty-a",
        "3.5",
        "--balance-b",
        "0.7",
        "--max-cluster-warn",
        "5",
    ]);
    assert!(out.status.success());
    let warnings = text(&out.stderr);
    assert_eq!(warnings.matches("warning: cluster").count(), 8, "{warnings}");
    let doc = MapDocument::from_json(&std::fs::read_to_string(&map).unwrap()).unwrap();
    assert_eq!(doc.parameters.layout.penalty_a, 3.5);
    assert_eq!(doc.parameters.layout.balance_b, 0.7);
}

#[test]
fn overlay_bindings_style_buildings() {
    let ws = Workspace::new();
    let input = ws.file(
        "small.txt",
        "class a A p.x\nclass b B p.x\nclass c C p.y\ncdep a b 2\ncdep b c 1\ncdep c a 1\n",
    );
    let overlay = ws.file(
        "metrics.csv",
        "class_id,channel,value\na,loc,100\nb,loc,400\nc,loc,25\n",
    );
    let map = ws.path("out.sarfmap");
    let out = citymap(&[
        "map",
        "-q",
        "--input",
        s(&input),
        "--out-map",
        s(&map),
        "--overlay",
        s(&overlay),
        "--bind",
        "loc=height:sqrt",
        "--bind",
        "package=color",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let doc = MapDocument::from_json(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let heights: Vec<f64> = ["a", "b", "c"]
        .iter()
        .map(|id| doc.classes[doc.class_index(id).unwrap()].style.height)
        .collect();
    assert!(heights[1] > heights[0] && heights[0] > heights[2], "{heights:?}");
    assert!(doc.channels.contains_key("loc"));

    let out = citymap(&[
        "map",
        "--input",
        s(&input),
        "--out-map",
        s(&map),
        "--bind",
        "loc=position",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("--bind"));
}

#[test]
fn cluster_prints_dendrogram_and_tree() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let out = citymap(&["cluster", "--input", s(&input)]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("clusters 8"));
    assert!(stdout.contains("dendrogram\n("));
    assert!(stdout.contains("feature tree\n"));
}

#[test]
fn render_recolors_and_flattens() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let map = ws.path("out.sarfmap");
    assert!(citymap(&["map", "-q", "--input", s(&input), "--out-map", s(&map)])
        .status
        .success());
    let svg = ws.path("r.svg");
    let out = citymap(&[
        "render",
        "--input",
        s(&map),
        "--out-svg",
        s(&svg),
        "--color-channel",
        "level",
        "--fixed-height",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(body.matches("class=\"building\"").count(), 96);
    assert_eq!(body.matches("data-height=\"1\"").count(), 96);

    let out = citymap(&[
        "render",
        "--input",
        s(&map),
        "--out-svg",
        s(&svg),
        "--color-channel",
        "nope",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("nope"));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(map: &Path) -> (Server, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_citymap"))
        .args(["serve", "--input", s(map), "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .expect("server starts");
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("serving on http://")
        .and_then(|a| a.strip_suffix('/'))
        .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
        .to_string();
    (Server(child), addr)
}

/// Minimal HTTP/1.1 GET; returns status code and body.
fn get(addr: &str, path: &str) -> (u16, Vec<u8>) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header end");
    let head = text(&raw[..split]);
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, raw[split + 4..].to_vec())
}

#[test]
fn serve_returns_document_bytes_and_404s() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let map = ws.path("out.sarfmap");
    assert!(citymap(&["map", "-q", "--input", s(&input), "--out-map", s(&map)])
        .status
        .success());
    let (_server, addr) = start_server(&map);

    let (status, body) = get(&addr, "/map.sarfmap");
    assert_eq!(status, 200);
    assert_eq!(body, std::fs::read(&map).unwrap());
    let (status, body) = get(&addr, "/map.svg");
    assert_eq!(status, 200);
    assert!(body.starts_with(b"<svg "));
    let (status, body) = get(&addr, "/");
    assert_eq!(status, 200);
    assert!(text(&body).contains("/map.svg"));
    assert_eq!(get(&addr, "/nope").0, 404);

    let handles: Vec<_> = (0..8)
        .map(|_| {
            let addr = addr.clone();
            std::thread::spawn(move || get(&addr, "/map.sarfmap"))
        })
        .collect();
    let responses: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(responses.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn serve_fails_on_busy_port() {
    let ws = Workspace::new();
    let input = planted_fixture(&ws);
    let map = ws.path("out.sarfmap");
    assert!(citymap(&["map", "-q", "--input", s(&input), "--out-map", s(&map)])
        .status
        .success());
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = citymap(&["serve", "--input", s(&map), "--port", &port]);
    assert!(!out.status.success());
    assert!(
        text(&out.stderr).contains("cannot listen on port"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn serve_rejects_invalid_document() {
    let ws = Workspace::new();
    let bogus = ws.file("bogus.sarfmap", "{\"schema\": \"other\"}");
    let out = citymap(&["serve", "--input", s(&bogus), "--port", "0"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("cannot load map"));
}
