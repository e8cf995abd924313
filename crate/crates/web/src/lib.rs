//! Browser bindings: analyze, transform and model export on inline source.
//!
//! Every entry point returns `{"ok": true, "text": ..., "json": ...}` or
//! `{"ok": false, "error": ...}` as a JSON string.

use cpgcl::cli::{self, Format, Report, RunConfig, TransformKind};
use cpgcl::Result;
use wasm_bindgen::prelude::*;

/// Bindings are `name=value` pairs separated by spaces or newlines.
fn config(source: &str, post: &str, bindings: &str) -> Result<RunConfig> {
    let bindings = bindings
        .split_whitespace()
        .map(cli::parse_binding)
        .collect::<Result<Vec<_>>>()?;
    Ok(RunConfig {
        source: Some(source.to_string()),
        post: if post.trim().is_empty() { "1".into() } else { post.to_string() },
        bindings,
        max_states: 20_000,
        ..RunConfig::default()
    })
}

fn respond(r: Result<Report>) -> String {
    let v = match r {
        Ok(report) => serde_json::json!({
            "ok": true,
            "text": report.render(Format::Text),
            "notes": report.notes,
            "json": serde_json::from_str::<serde_json::Value>(&report.render(Format::Json))
                .unwrap_or_default(),
        }),
        Err(e) => serde_json::json!({ "ok": false, "error": e.to_string() }),
    };
    v.to_string()
}

/// Conditional expected value; `table` selects the four normalisations.
#[wasm_bindgen]
pub fn analyze(source: &str, post: &str, bindings: &str, table: bool) -> String {
    respond(config(source, post, bindings).and_then(|cfg| {
        cli::cmd_analyze(&RunConfig { table, ..cfg })
    }))
}

/// `kind` is `hoist`, `deobserve` or `deloop`.
#[wasm_bindgen]
pub fn transform(kind: &str, source: &str, post: &str, bindings: &str) -> String {
    respond(config(source, post, bindings).and_then(|cfg| {
        let kind: TransformKind = kind.parse()?;
        cli::cmd_transform(&cfg, kind, true)
    }))
}

/// Operational model as Graphviz (`dot`) or the explicit text format.
#[wasm_bindgen]
pub fn model(source: &str, post: &str, bindings: &str, dot: bool) -> String {
    respond(config(source, post, bindings).and_then(|cfg| cli::cmd_model(&cfg, dot)))
}
