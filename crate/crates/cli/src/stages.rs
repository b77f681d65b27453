//! Per-window stage implementations and the orchestration across windows.
//!
//! Every stage persists its artifacts under `out/windows/<id>/` and the next
//! stage reloads them from disk, so subcommands are independently re-runnable
//! and a full `run` is file-composed from the same functions. A failing
//! window never touches another window's outputs.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use corrnet_core::correlation::{correlation_matrix, distance_matrix, CorrelationMatrix};
use corrnet_core::market_data::{
    filter_complete, load_price_panel, load_ranking_snapshot, slice_window, AnalysisWindow,
    PricePanel, RankingSnapshot,
};
use corrnet_core::network::{
    communities_of_mst, dense_graph_from_distances, mst_prim, tree_similarity_graph, tree_to_dot,
    CommunityPartition,
};
use corrnet_core::portfolio::{build_portfolio_report, cross_window_consistency, PortfolioReport};
use corrnet_core::returns::{log_returns, normalize_returns, NormalizedReturns};
use corrnet_core::spectra::{
    classify_eigenvalues, eigendecompose, ipr, ks_two_sample, mp_bounds, pooled_scaled_components,
};

use crate::artifacts::{self, names};
use crate::config::{ResolvedConfig, WindowSpec};
use crate::export;
use crate::manifest::{self, FailureNote, RunManifest, WindowManifest};
use crate::CliError;

/// Inputs shared by all windows, loaded once per invocation.
pub struct Inputs {
    pub panel: PricePanel,
    pub rankings: Vec<RankingSnapshot>,
}

pub fn load_inputs(cfg: &ResolvedConfig) -> Result<Inputs, CliError> {
    let file = fs::File::open(&cfg.price_file).map_err(|e| {
        CliError::Input(format!(
            "cannot open price file {}: {e}",
            cfg.price_file.display()
        ))
    })?;
    let panel = load_price_panel(file).map_err(CliError::from_core)?;
    let mut rankings = Vec::with_capacity(cfg.rankings.len());
    for spec in &cfg.rankings {
        let file = fs::File::open(&spec.path).map_err(|e| {
            CliError::Input(format!(
                "cannot open ranking file {}: {e}",
                spec.path.display()
            ))
        })?;
        rankings.push(load_ranking_snapshot(file, spec.as_of).map_err(CliError::from_core)?);
    }
    Ok(Inputs { panel, rankings })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub window_id: String,
    pub stage: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_assets: usize,
    pub n_dates: usize,
    pub n_days: usize,
    pub q_factor: f64,
}

/// Slice to the window, keep complete assets, apply the optional top-k
/// ranking restriction, and persist the window panel.
pub fn ingest_window(
    cfg: &ResolvedConfig,
    inputs: &Inputs,
    win: &WindowSpec,
) -> Result<IngestSummary, CliError> {
    let sliced = slice_window(&inputs.panel, win.start, win.end).map_err(CliError::from_core)?;
    let complete = filter_complete(&sliced, win.start, win.end).map_err(CliError::from_core)?;
    let panel = match cfg.top_k {
        None => complete,
        Some(k) => {
            let snap = &inputs.rankings[cfg.top_k_snapshot];
            let mut ranked: Vec<(u32, usize)> = complete
                .asset_ids()
                .iter()
                .enumerate()
                .filter_map(|(i, id)| snap.rank_of(id).map(|r| (r, i)))
                .collect();
            ranked.sort_unstable();
            let mut keep: Vec<usize> = ranked.into_iter().take(k).map(|(_, i)| i).collect();
            keep.sort_unstable();
            if keep.is_empty() {
                return Err(CliError::Input(format!(
                    "window {:?}: no complete asset appears in ranking snapshot {}",
                    win.id, cfg.top_k_snapshot
                )));
            }
            complete.select_assets(&keep).map_err(CliError::from_core)?
        }
    };

    let describe = AnalysisWindow::describe(&panel).map_err(CliError::from_core)?;
    let mut buf = Vec::new();
    panel.write_csv(&mut buf).map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::PANEL),
        &buf,
    )?;

    let summary = IngestSummary {
        window_id: win.id.clone(),
        stage: "ingest-check".into(),
        start: win.start,
        end: win.end,
        n_assets: describe.n_assets,
        n_dates: panel.n_dates(),
        n_days: describe.n_days,
        q_factor: describe.q_factor(),
    };
    artifacts::write_json(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::INGEST_JSON),
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmtSummary {
    pub window_id: String,
    pub stage: String,
    pub n_assets: usize,
    pub n_days: usize,
    pub q_factor: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub lambda_max: f64,
    pub n_bulk: usize,
    pub n_deviating: usize,
    pub n_below: usize,
    pub n_above: usize,
    pub mean_ipr: f64,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
}

fn window_returns(
    cfg: &ResolvedConfig,
    window_id: &str,
) -> Result<(PricePanel, NormalizedReturns), CliError> {
    let panel_path = artifacts::window_file(&cfg.out_dir, window_id, names::PANEL);
    let panel = artifacts::load_panel_artifact(&panel_path, window_id)?;
    let g = normalize_returns(&log_returns(&panel).map_err(CliError::from_core)?)
        .map_err(CliError::from_core)?;
    Ok((panel, g))
}

/// Returns, correlation matrix, spectrum, MP diagnostics, and the histogram
/// exports for one window.
pub fn rmt_window(cfg: &ResolvedConfig, win: &WindowSpec) -> Result<RmtSummary, CliError> {
    let (panel, g) = window_returns(cfg, &win.id)?;
    let describe = AnalysisWindow::describe(&panel).map_err(CliError::from_core)?;

    let mut buf = Vec::new();
    g.write_csv(&mut buf).map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::NORMALIZED),
        &buf,
    )?;

    let corr = correlation_matrix(&g).map_err(CliError::from_core)?;
    let mut buf = Vec::new();
    corr.write_csv(&mut buf).map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::CORRELATION),
        &buf,
    )?;

    let spec = eigendecompose(&corr).map_err(CliError::from_core)?;
    let bounds = mp_bounds(describe.q_factor(), 1.0).map_err(CliError::from_core)?;
    let part = classify_eigenvalues(&spec, &bounds);
    let series = ipr(&spec);

    let ks = if part.bulk_indices.is_empty() || part.deviating_indices.is_empty() {
        None
    } else {
        let bulk = pooled_scaled_components(&spec, &part.bulk_indices);
        let deviating = pooled_scaled_components(&spec, &part.deviating_indices);
        Some(ks_two_sample(&bulk, &deviating).map_err(CliError::from_core)?)
    };

    export::write_corr_hist(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::CORR_HIST),
        &corr,
    )?;
    export::write_eigenvalue_hist(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::EIGENVALUE_HIST),
        &spec,
        &bounds,
    )?;
    export::write_eigenvector_hist(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::EIGENVECTOR_HIST),
        &spec,
        &part,
    )?;
    export::write_ipr_series(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::EIGEN),
        &spec,
        &series,
    )?;

    let summary = RmtSummary {
        window_id: win.id.clone(),
        stage: "rmt".into(),
        n_assets: describe.n_assets,
        n_days: describe.n_days,
        q_factor: describe.q_factor(),
        lambda_minus: bounds.lambda_minus,
        lambda_plus: bounds.lambda_plus,
        lambda_max: spec.lambda_max(),
        n_bulk: part.bulk_indices.len(),
        n_deviating: part.deviating_indices.len(),
        n_below: part.n_below,
        n_above: part.n_above,
        mean_ipr: series.mean_ipr,
        ks_statistic: ks.map(|k| k.statistic),
        ks_p_value: ks.map(|k| k.p_value),
    };
    artifacts::write_json(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::RMT_JSON),
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSummary {
    pub window_id: String,
    pub stage: String,
    pub n_nodes: usize,
    pub n_dense_edges: usize,
    pub mst_total_weight: f64,
    pub zero_distance_pairs: Vec<(String, String)>,
}

/// Distance matrix, dense graph, and Prim MST for one window.
pub fn graph_window(cfg: &ResolvedConfig, win: &WindowSpec) -> Result<GraphSummary, CliError> {
    let corr_path = artifacts::window_file(&cfg.out_dir, &win.id, names::CORRELATION);
    artifacts::require_artifact(&corr_path, &win.id, "rmt")?;
    let file = fs::File::open(&corr_path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", corr_path.display())))?;
    let corr = CorrelationMatrix::read_csv(file).map_err(CliError::from_core)?;

    let dist = distance_matrix(&corr).map_err(CliError::from_core)?;
    let dense = dense_graph_from_distances(&dist).map_err(CliError::from_core)?;
    let tree = mst_prim(&dense).map_err(CliError::from_core)?;

    artifacts::write_mst_edges(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::MST_EDGES),
        &tree,
    )?;

    let summary = GraphSummary {
        window_id: win.id.clone(),
        stage: "graph".into(),
        n_nodes: dense.n_nodes(),
        n_dense_edges: dense.n_edges(),
        mst_total_weight: tree.total_weight(),
        zero_distance_pairs: dense
            .zero_distance_pairs()
            .iter()
            .map(|&(u, v)| (dense.node_ids()[u].clone(), dense.node_ids()[v].clone()))
            .collect(),
    };
    artifacts::write_json(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::GRAPH_JSON),
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunitiesSummary {
    pub window_id: String,
    pub stage: String,
    pub n_communities: usize,
    pub modularity: f64,
    pub community_sizes: Vec<usize>,
    pub weight_mode: String,
    pub seed: u64,
}

/// Louvain over the persisted MST; writes the partition, the DOT render,
/// and the stage summary.
pub fn communities_window(
    cfg: &ResolvedConfig,
    win: &WindowSpec,
) -> Result<CommunitiesSummary, CliError> {
    let panel_path = artifacts::window_file(&cfg.out_dir, &win.id, names::PANEL);
    let panel = artifacts::load_panel_artifact(&panel_path, &win.id)?;
    let tree = artifacts::load_mst_edges(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::MST_EDGES),
        &win.id,
        panel.asset_ids(),
    )?;
    let partition =
        communities_of_mst(&tree, cfg.weight_mode, cfg.seed).map_err(CliError::from_core)?;

    let mut buf = Vec::new();
    partition
        .write_csv(panel.asset_ids(), &mut buf)
        .map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::COMMUNITIES),
        &buf,
    )?;
    let dot = tree_to_dot(&tree, &partition).map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::MST_DOT),
        dot.as_bytes(),
    )?;

    let summary = CommunitiesSummary {
        window_id: win.id.clone(),
        stage: "communities".into(),
        n_communities: partition.n_communities(),
        modularity: partition.modularity(),
        community_sizes: partition.community_sizes().to_vec(),
        weight_mode: cfg.weight_mode_name.clone(),
        seed: cfg.seed,
    };
    artifacts::write_json(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::COMMUNITIES_JSON),
        &summary,
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRowJson {
    pub community: usize,
    pub size: usize,
    pub leading_asset: String,
    pub loading_magnitude: f64,
    pub pc1_ratio: f64,
    pub tied: bool,
    pub ranks: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub window_id: String,
    pub stage: String,
    pub rows: Vec<ReportRowJson>,
    pub excluded_communities: Vec<(usize, usize)>,
}

/// Per-community PCA report for one window. Recomputes the partition's
/// modularity from the persisted MST and cross-checks it against the
/// communities stage summary to catch stale artifacts.
pub fn report_window(
    cfg: &ResolvedConfig,
    inputs: &Inputs,
    win: &WindowSpec,
) -> Result<(ReportSummary, PortfolioReport), CliError> {
    let (panel, g) = window_returns(cfg, &win.id)?;
    let tree = artifacts::load_mst_edges(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::MST_EDGES),
        &win.id,
        panel.asset_ids(),
    )?;
    let labels = artifacts::load_communities(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::COMMUNITIES),
        &win.id,
        panel.asset_ids(),
    )?;
    let sim = tree_similarity_graph(&tree, cfg.weight_mode).map_err(CliError::from_core)?;
    let partition =
        CommunityPartition::from_assignment(&sim, &labels).map_err(CliError::from_core)?;

    let communities_json = artifacts::window_file(&cfg.out_dir, &win.id, names::COMMUNITIES_JSON);
    if let Ok(text) = fs::read_to_string(&communities_json) {
        if let Ok(stored) = serde_json::from_str::<CommunitiesSummary>(&text) {
            if (stored.modularity - partition.modularity()).abs() > 1e-10 {
                return Err(CliError::Input(format!(
                    "window {:?}: stored modularity {} disagrees with recomputation {}; \
                     artifacts are stale, rerun `corrnet communities`",
                    win.id,
                    stored.modularity,
                    partition.modularity()
                )));
            }
        }
    }

    let report = build_portfolio_report(&partition, &g, cfg.min_community_size, &inputs.rankings)
        .map_err(CliError::from_core)?;

    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(CliError::from_core)?;
    artifacts::write_atomic(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::REPORT),
        &buf,
    )?;

    let summary = ReportSummary {
        window_id: win.id.clone(),
        stage: "report".into(),
        rows: report
            .rows
            .iter()
            .map(|r| ReportRowJson {
                community: r.community_label,
                size: r.community_size,
                leading_asset: r.leading.asset_id.clone(),
                loading_magnitude: r.leading.loading_magnitude,
                pc1_ratio: r.leading.pc1_variance_ratio,
                tied: r.leading.tied,
                ranks: r.ranks.clone(),
            })
            .collect(),
        excluded_communities: report
            .excluded_communities
            .iter()
            .map(|e| (e.label, e.size))
            .collect(),
    };
    artifacts::write_json(
        &artifacts::window_file(&cfg.out_dir, &win.id, names::REPORT_JSON),
        &summary,
    )?;
    Ok((summary, report))
}

/// Everything `run` accumulates per window for the manifest.
pub struct WindowArtifacts {
    pub ingest: IngestSummary,
    pub rmt: RmtSummary,
    pub graph: GraphSummary,
    pub communities: CommunitiesSummary,
    pub report: PortfolioReport,
}

fn run_window(
    cfg: &ResolvedConfig,
    inputs: &Inputs,
    win: &WindowSpec,
) -> Result<WindowArtifacts, (String, CliError)> {
    let ingest = ingest_window(cfg, inputs, win).map_err(|e| ("ingest-check".to_string(), e))?;
    let rmt = rmt_window(cfg, win).map_err(|e| ("rmt".to_string(), e))?;
    let graph = graph_window(cfg, win).map_err(|e| ("graph".to_string(), e))?;
    let communities = communities_window(cfg, win).map_err(|e| ("communities".to_string(), e))?;
    let (_, report) = report_window(cfg, inputs, win).map_err(|e| ("report".to_string(), e))?;
    Ok(WindowArtifacts {
        ingest,
        rmt,
        graph,
        communities,
        report,
    })
}

/// Which stage a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Rmt,
    Graph,
    Communities,
    Report,
    Run,
}

impl Stage {
    fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest-check",
            Stage::Rmt => "rmt",
            Stage::Graph => "graph",
            Stage::Communities => "communities",
            Stage::Report => "report",
            Stage::Run => "run",
        }
    }
}

/// Runs `stage` over all windows (in parallel up to `max_workers`), writes
/// the consistency table and manifest where applicable, and returns the
/// process exit code.
pub fn execute(cfg: &ResolvedConfig, stage: Stage) -> Result<i32, CliError> {
    let needs_inputs = matches!(stage, Stage::Ingest | Stage::Report | Stage::Run);
    let inputs = if needs_inputs {
        Some(load_inputs(cfg)?)
    } else {
        None
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if cfg.max_workers > 0 {
        pool = pool.num_threads(cfg.max_workers);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Input(format!("cannot build worker pool: {e}")))?;

    // (window, per-window result); reports collected for the consistency table.
    type WinResult = Result<(Option<WindowArtifacts>, Option<PortfolioReport>), (String, CliError)>;
    let outcomes: Vec<(WindowSpec, WinResult)> = pool.install(|| {
        cfg.windows
            .par_iter()
            .map(|win| {
                let r: WinResult = match stage {
                    Stage::Ingest => ingest_window(cfg, inputs.as_ref().unwrap(), win)
                        .map(|_| (None, None))
                        .map_err(|e| (stage.name().to_string(), e)),
                    Stage::Rmt => rmt_window(cfg, win)
                        .map(|_| (None, None))
                        .map_err(|e| (stage.name().to_string(), e)),
                    Stage::Graph => graph_window(cfg, win)
                        .map(|_| (None, None))
                        .map_err(|e| (stage.name().to_string(), e)),
                    Stage::Communities => communities_window(cfg, win)
                        .map(|_| (None, None))
                        .map_err(|e| (stage.name().to_string(), e)),
                    Stage::Report => report_window(cfg, inputs.as_ref().unwrap(), win)
                        .map(|(_, report)| (None, Some(report)))
                        .map_err(|e| (stage.name().to_string(), e)),
                    Stage::Run => run_window(cfg, inputs.as_ref().unwrap(), win).map(|a| {
                        let report = a.report.clone();
                        (Some(a), Some(report))
                    }),
                };
                (win.clone(), r)
            })
            .collect()
    });

    let mut failures: Vec<FailureNote> = Vec::new();
    let mut ok_count = 0_usize;
    let mut any_numerical = false;
    for (win, outcome) in &outcomes {
        match outcome {
            Ok(_) => {
                ok_count += 1;
                eprintln!("[ok] window {}: {}", win.id, stage.name());
            }
            Err((at, err)) => {
                eprintln!("[failed] window {} at {at}: {err}", win.id);
                any_numerical |= matches!(err, CliError::Numerical(_));
                failures.push(FailureNote {
                    window_id: win.id.clone(),
                    stage: at.clone(),
                    error: err.to_string(),
                });
            }
        }
    }

    // Cross-window consistency once at least two reports exist.
    let mut consistency_file = None;
    if matches!(stage, Stage::Report | Stage::Run) {
        let reports: Vec<(String, PortfolioReport)> = outcomes
            .iter()
            .filter_map(|(win, r)| match r {
                Ok((_, Some(report))) => Some((win.id.clone(), report.clone())),
                _ => None,
            })
            .collect();
        if reports.len() >= 2 {
            let table = cross_window_consistency(&reports).map_err(CliError::from_core)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(CliError::from_core)?;
            let path = cfg.out_dir.join(names::CONSISTENCY);
            artifacts::write_atomic(&path, &buf)?;
            consistency_file = Some(names::CONSISTENCY.to_string());
        }
    }

    if stage == Stage::Run {
        let windows: Vec<WindowManifest> = outcomes
            .iter()
            .filter_map(|(win, r)| match r {
                Ok((Some(a), _)) => Some(manifest::window_manifest(win, a)),
                _ => None,
            })
            .collect();
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: cfg.echo.clone(),
            windows,
            failures: failures.clone(),
            consistency_file: consistency_file.clone(),
        };
        manifest::verify_and_write(&cfg.out_dir, &manifest)?;
    }

    let total = outcomes.len();
    Ok(if ok_count == total {
        0
    } else if ok_count > 0 {
        3
    } else if any_numerical {
        2
    } else {
        1
    })
}

/// Checks a panel path is loadable; used by `synth` round-trip verification.
pub fn verify_panel_loadable(path: &Path) -> Result<usize, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let panel = load_price_panel(file).map_err(CliError::from_core)?;
    Ok(panel.n_assets())
}
