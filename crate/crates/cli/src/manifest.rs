//! The run manifest: config echo, per-window diagnostics, and output files.

use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::artifacts::{self, names};
use crate::config::{ConfigEcho, WindowSpec};
use crate::stages::WindowArtifacts;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FailureNote {
    pub window_id: String,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowManifest {
    pub window_id: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_assets: usize,
    pub n_days: usize,
    pub q_factor: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub lambda_max: f64,
    pub n_deviating: usize,
    pub n_below: usize,
    pub n_above: usize,
    pub mean_ipr: f64,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub n_dense_edges: usize,
    pub mst_total_weight: f64,
    pub n_communities: usize,
    pub modularity: f64,
    pub report_rows: usize,
    pub excluded_communities: usize,
    /// Output files, relative to the output directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: String,
    pub config: ConfigEcho,
    pub windows: Vec<WindowManifest>,
    pub failures: Vec<FailureNote>,
    pub consistency_file: Option<String>,
}

/// Every per-window artifact a completed `run` leaves behind.
const WINDOW_FILES: &[&str] = &[
    names::PANEL,
    names::INGEST_JSON,
    names::NORMALIZED,
    names::CORRELATION,
    names::EIGEN,
    names::CORR_HIST,
    names::EIGENVALUE_HIST,
    names::EIGENVECTOR_HIST,
    names::RMT_JSON,
    names::MST_EDGES,
    names::GRAPH_JSON,
    names::COMMUNITIES,
    names::MST_DOT,
    names::COMMUNITIES_JSON,
    names::REPORT,
    names::REPORT_JSON,
];

pub fn window_manifest(win: &WindowSpec, a: &WindowArtifacts) -> WindowManifest {
    WindowManifest {
        window_id: win.id.clone(),
        start: win.start,
        end: win.end,
        n_assets: a.ingest.n_assets,
        n_days: a.ingest.n_days,
        q_factor: a.ingest.q_factor,
        lambda_minus: a.rmt.lambda_minus,
        lambda_plus: a.rmt.lambda_plus,
        lambda_max: a.rmt.lambda_max,
        n_deviating: a.rmt.n_deviating,
        n_below: a.rmt.n_below,
        n_above: a.rmt.n_above,
        mean_ipr: a.rmt.mean_ipr,
        ks_statistic: a.rmt.ks_statistic,
        ks_p_value: a.rmt.ks_p_value,
        n_dense_edges: a.graph.n_dense_edges,
        mst_total_weight: a.graph.mst_total_weight,
        n_communities: a.communities.n_communities,
        modularity: a.communities.modularity,
        report_rows: a.report.rows.len(),
        excluded_communities: a.report.excluded_communities.len(),
        files: WINDOW_FILES
            .iter()
            .map(|name| artifacts::relative_window_file(&win.id, name))
            .collect(),
    }
}

/// Confirms every claimed file exists, then writes the manifest last.
pub fn verify_and_write(out_dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    for w in &manifest.windows {
        for file in &w.files {
            let path = out_dir.join(file);
            if !path.is_file() {
                return Err(CliError::Input(format!(
                    "manifest claims {} but it does not exist",
                    path.display()
                )));
            }
        }
    }
    if let Some(name) = &manifest.consistency_file {
        if !out_dir.join(name).is_file() {
            return Err(CliError::Input(format!(
                "manifest claims {name} but it does not exist"
            )));
        }
    }
    artifacts::write_json(&out_dir.join(names::MANIFEST), manifest)
}
