//! Stage artifact paths, atomic file writes, and artifact (re)loading.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use corrnet_core::market_data::PricePanel;
use corrnet_core::network::{Edge, SpanningTree};

use crate::CliError;

/// File names of the per-window stage artifacts.
pub mod names {
    pub const PANEL: &str = "panel.csv";
    pub const INGEST_JSON: &str = "ingest.json";
    pub const NORMALIZED: &str = "normalized.csv";
    pub const CORRELATION: &str = "correlation.csv";
    pub const EIGEN: &str = "eigen.csv";
    pub const CORR_HIST: &str = "corr_hist.csv";
    pub const EIGENVALUE_HIST: &str = "eigenvalue_hist.csv";
    pub const EIGENVECTOR_HIST: &str = "eigenvector_hist.csv";
    pub const RMT_JSON: &str = "rmt.json";
    pub const MST_EDGES: &str = "mst_edges.csv";
    pub const GRAPH_JSON: &str = "graph.json";
    pub const COMMUNITIES: &str = "communities.csv";
    pub const MST_DOT: &str = "mst.dot";
    pub const COMMUNITIES_JSON: &str = "communities.json";
    pub const REPORT: &str = "report.csv";
    pub const REPORT_JSON: &str = "report.json";
    pub const CONSISTENCY: &str = "consistency.csv";
    pub const MANIFEST: &str = "manifest.json";
}

pub fn window_dir(out_dir: &Path, window_id: &str) -> PathBuf {
    out_dir.join("windows").join(window_id)
}

pub fn window_file(out_dir: &Path, window_id: &str, name: &str) -> PathBuf {
    window_dir(out_dir, window_id).join(name)
}

/// Path of a window artifact relative to the output root (manifest form).
pub fn relative_window_file(window_id: &str, name: &str) -> String {
    format!("windows/{window_id}/{name}")
}

/// Writes via a temp file in the same directory and renames into place, so
/// readers never observe partial artifacts.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = path
        .parent()
        .ok_or_else(|| CliError::Input(format!("no parent directory for {}", path.display())))?;
    fs::create_dir_all(parent)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", parent.display())))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", tmp.display())))?;
        f.write_all(bytes)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", tmp.display())))?;
    }
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Input(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Requires a prior-stage artifact, naming the subcommand that produces it.
pub fn require_artifact(path: &Path, window_id: &str, producer: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "missing artifact {} for window {window_id:?}: run `corrnet {producer}` first",
            path.display()
        )))
    }
}

pub fn load_panel_artifact(path: &Path, window_id: &str) -> Result<PricePanel, CliError> {
    require_artifact(path, window_id, "ingest-check")?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    corrnet_core::market_data::load_price_panel(file).map_err(CliError::from_core)
}

/// Writes the MST as `u_asset,v_asset,distance` rows in canonical edge order.
pub fn write_mst_edges(path: &Path, tree: &SpanningTree) -> Result<(), CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["u_asset", "v_asset", "distance"])
            .map_err(|e| CliError::Input(e.to_string()))?;
        for e in tree.edges() {
            w.write_record([
                tree.node_ids()[e.u].as_str(),
                tree.node_ids()[e.v].as_str(),
                &format!("{}", e.weight),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Input(e.to_string()))?;
    }
    write_atomic(path, &buf)
}

/// Rebuilds the spanning tree from `mst_edges.csv` against a node order.
pub fn load_mst_edges(
    path: &Path,
    window_id: &str,
    node_ids: &[String],
) -> Result<SpanningTree, CliError> {
    require_artifact(path, window_id, "graph")?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let index: std::collections::HashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let get = |k: usize| record.get(k).unwrap_or("");
        let u = *index.get(get(0)).ok_or_else(|| {
            CliError::Input(format!(
                "{}: unknown asset {:?}; artifacts are stale, rerun `corrnet graph`",
                path.display(),
                get(0)
            ))
        })?;
        let v = *index.get(get(1)).ok_or_else(|| {
            CliError::Input(format!(
                "{}: unknown asset {:?}; artifacts are stale, rerun `corrnet graph`",
                path.display(),
                get(1)
            ))
        })?;
        let weight: f64 = get(2)
            .parse()
            .map_err(|e| CliError::Input(format!("{}: bad distance: {e}", path.display())))?;
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        edges.push(Edge { u, v, weight });
    }
    SpanningTree::from_edges(node_ids.to_vec(), edges).map_err(CliError::from_core)
}

/// Reads `communities.csv` into labels aligned with `node_ids`.
pub fn load_communities(
    path: &Path,
    window_id: &str,
    node_ids: &[String],
) -> Result<Vec<usize>, CliError> {
    require_artifact(path, window_id, "communities")?;
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let mut by_id: std::collections::HashMap<String, usize> = Default::default();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let id = record.get(0).unwrap_or("").to_string();
        let label: usize = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e| CliError::Input(format!("{}: bad community: {e}", path.display())))?;
        by_id.insert(id, label);
    }
    node_ids
        .iter()
        .map(|id| {
            by_id.get(id).copied().ok_or_else(|| {
                CliError::Input(format!(
                    "{}: no community for asset {id:?}; artifacts are stale, \
                     rerun `corrnet communities`",
                    path.display()
                ))
            })
        })
        .collect()
}
