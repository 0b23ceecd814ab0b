//! Read-only HTTP service for one map document.

use std::io::Write as _;
use std::net::SocketAddr;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;

const INDEX: &str = r#"<!doctype html>
<html><head><meta charset="utf-8"><title>citymap</title>
<style>body{margin:0;font-family:sans-serif}#map svg{display:block}.dim{opacity:.08}</style>
</head><body>
<div id="map">loading...</div>
<script>
fetch("/map.svg").then(r => r.text()).then(text => {
  const map = document.getElementById("map");
  map.innerHTML = text;
  map.addEventListener("click", e => {
    const id = e.target.closest(".building")?.dataset.id;
    for (const link of map.querySelectorAll(".link")) {
      const on = !id || link.dataset.source === id || link.dataset.target === id;
      link.classList.toggle("dim", !on);
    }
  });
});
</script>
</body></html>
"#;

struct Content {
    document: String,
    svg: String,
}

async fn index() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], INDEX)
}

async fn document(State(content): State<Arc<Content>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], content.document.clone())
}

async fn svg(State(content): State<Arc<Content>>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "image/svg+xml")], content.svg.clone())
}

pub fn router(document_text: String, svg_text: String) -> Router {
    let content = Arc::new(Content {
        document: document_text,
        svg: svg_text,
    });
    Router::new()
        .route("/", get(index))
        .route("/map.sarfmap", get(document))
        .route("/map.svg", get(svg))
        .with_state(content)
}

/// Binds `127.0.0.1:port`, prints the address and serves until killed.
/// A busy port is a startup error.
pub fn serve(document_text: String, svg_text: String, port: u16) -> Result<()> {
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port)))
            .await
            .with_context(|| format!("cannot listen on port {port}"))?;
        let addr = listener.local_addr()?;
        println!("serving on http://{addr}/");
        std::io::stdout().flush()?;
        axum::serve(listener, router(document_text, svg_text))
            .await
            .context("server stopped")
    })
}
