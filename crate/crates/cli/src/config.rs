//! Pipeline configuration: a single TOML file plus CLI overrides.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use corrnet_core::network::WeightMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One analysis window; `id` names the per-window output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSpec {
    pub id: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A ranking snapshot file with its as-of date (the file itself carries none).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingFileSpec {
    pub path: PathBuf,
    pub as_of: NaiveDate,
}

fn default_min_community_size() -> usize {
    corrnet_core::portfolio::DEFAULT_MIN_COMMUNITY_SIZE
}

fn default_weight_mode() -> String {
    WeightMode::InverseSimilarity.as_str().to_string()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// The TOML schema. Relative `price_file`/`rankings` paths resolve against
/// the config file's directory; `output_dir` resolves against the working
/// directory unless overridden with `--out`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub price_file: PathBuf,
    #[serde(default)]
    pub rankings: Vec<RankingFileSpec>,
    pub windows: Vec<WindowSpec>,
    /// Keep only the k best-ranked assets (per `top_k_snapshot`) after the
    /// completeness filter.
    #[serde(default)]
    pub top_k: Option<usize>,
    /// Index into `rankings` used for the top-k restriction.
    #[serde(default)]
    pub top_k_snapshot: usize,
    #[serde(default = "default_min_community_size")]
    pub min_community_size: usize,
    /// `inverse-similarity` or `unweighted`.
    #[serde(default = "default_weight_mode")]
    pub weight_mode: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for window-level parallelism; 0 uses all cores.
    #[serde(default)]
    pub max_workers: usize,
}

/// Config after validation, path resolution, and CLI overrides.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub price_file: PathBuf,
    pub rankings: Vec<RankingFileSpec>,
    pub windows: Vec<WindowSpec>,
    pub top_k: Option<usize>,
    pub top_k_snapshot: usize,
    pub min_community_size: usize,
    pub weight_mode: WeightMode,
    pub weight_mode_name: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub max_workers: usize,
    /// Echoed into the manifest: config as written, with the effective seed
    /// and without the output directory (the manifest lives inside it).
    pub echo: ConfigEcho,
}

/// Manifest echo of the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub price_file: PathBuf,
    pub rankings: Vec<RankingFileSpec>,
    pub windows: Vec<WindowSpec>,
    pub top_k: Option<usize>,
    pub top_k_snapshot: usize,
    pub min_community_size: usize,
    pub weight_mode: String,
    pub seed: u64,
    pub max_workers: usize,
}

pub fn load_config(
    path: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<ResolvedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: PipelineConfig = toml::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;

    if cfg.windows.is_empty() {
        return Err(CliError::Input("config needs at least one window".into()));
    }
    let mut ids = std::collections::HashSet::new();
    for w in &cfg.windows {
        if w.id.is_empty()
            || !w
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(CliError::Input(format!(
                "window id {:?} must be non-empty and use only [A-Za-z0-9_-]",
                w.id
            )));
        }
        if !ids.insert(w.id.clone()) {
            return Err(CliError::Input(format!("duplicate window id {:?}", w.id)));
        }
        if w.start >= w.end {
            return Err(CliError::Input(format!(
                "window {:?}: start {} must precede end {}",
                w.id, w.start, w.end
            )));
        }
    }
    if let Some(k) = cfg.top_k {
        if k == 0 {
            return Err(CliError::Input("top_k must be positive".into()));
        }
        if cfg.rankings.is_empty() {
            return Err(CliError::Input(
                "top_k requires at least one [[rankings]] entry".into(),
            ));
        }
        if cfg.top_k_snapshot >= cfg.rankings.len() {
            return Err(CliError::Input(format!(
                "top_k_snapshot {} out of range for {} ranking files",
                cfg.top_k_snapshot,
                cfg.rankings.len()
            )));
        }
    }
    let weight_mode = WeightMode::parse(&cfg.weight_mode)
        .map_err(|e| CliError::Input(format!("config weight_mode: {e}")))?;

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let seed = seed_override.unwrap_or(cfg.seed);
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());

    let echo = ConfigEcho {
        price_file: cfg.price_file.clone(),
        rankings: cfg.rankings.clone(),
        windows: cfg.windows.clone(),
        top_k: cfg.top_k,
        top_k_snapshot: cfg.top_k_snapshot,
        min_community_size: cfg.min_community_size,
        weight_mode: cfg.weight_mode.clone(),
        seed,
        max_workers: cfg.max_workers,
    };

    Ok(ResolvedConfig {
        price_file: resolve(&cfg.price_file),
        rankings: cfg
            .rankings
            .iter()
            .map(|r| RankingFileSpec {
                path: resolve(&r.path),
                as_of: r.as_of,
            })
            .collect(),
        windows: cfg.windows,
        top_k: cfg.top_k,
        top_k_snapshot: cfg.top_k_snapshot,
        min_community_size: cfg.min_community_size,
        weight_mode,
        weight_mode_name: cfg.weight_mode,
        seed,
        out_dir,
        max_workers: cfg.max_workers,
        echo,
    })
}
