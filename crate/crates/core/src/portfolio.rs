//! Per-community PCA on normalized returns, leading-asset selection, and the
//! portfolio / cross-window consistency reports.
//!
//! Since the inputs are standardized, the covariance of a community's rows is
//! its correlation submatrix, so this is correlation PCA; the "leading asset"
//! is the member with the largest absolute loading on the first principal
//! component.

use std::collections::BTreeMap;
use std::io::Write;

use crate::correlation::correlation_matrix_seq;
use crate::error::{Error, Result};
use crate::market_data::RankingSnapshot;
use crate::network::CommunityPartition;
use crate::returns::NormalizedReturns;
use crate::spectra::eigendecompose;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Communities smaller than this are excluded from the report by default.
pub const DEFAULT_MIN_COMMUNITY_SIZE: usize = 4;

/// PCA of one community's normalized returns.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    asset_ids: Vec<String>,
    /// Row k holds loading vector k (length = member count).
    component_loadings: Vec<f64>,
    explained_variance: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
}

impl PcaResult {
    /// Number of members (= number of components).
    pub fn k(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    /// Orthonormal loading vector of component `c`, sign-fixed so its
    /// largest-magnitude entry is positive.
    pub fn loadings(&self, c: usize) -> &[f64] {
        &self.component_loadings[c * self.k()..(c + 1) * self.k()]
    }

    /// Eigenvalues of the community correlation submatrix, descending.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Eigenvalues divided by the member count; sums to one.
    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }
}

/// Runs correlation PCA on the community given by `members` (indices into
/// `g`'s assets). Needs at least two members; a singleton community is a
/// caller error.
pub fn community_pca(g: &NormalizedReturns, members: &[usize]) -> Result<PcaResult> {
    if members.len() < 2 {
        return Err(Error::Domain(format!(
            "PCA needs at least 2 community members, got {}",
            members.len()
        )));
    }
    let sub = g.subset(members)?;
    let corr = correlation_matrix_seq(&sub)?;
    let spec = eigendecompose(&corr)?;
    let k = members.len();
    let mut component_loadings = Vec::with_capacity(k * k);
    for c in 0..k {
        component_loadings.extend_from_slice(spec.eigenvector(c));
    }
    let explained_variance = spec.eigenvalues().to_vec();
    let explained_variance_ratio: Vec<f64> =
        explained_variance.iter().map(|l| l / k as f64).collect();
    let ratio_sum: f64 = explained_variance_ratio.iter().sum();
    if (ratio_sum - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "explained variance ratios sum to {ratio_sum}"
        )));
    }
    Ok(PcaResult {
        asset_ids: sub.asset_ids().to_vec(),
        component_loadings,
        explained_variance,
        explained_variance_ratio,
    })
}

/// The community member with the maximum absolute loading on the first
/// principal component. Exact ties resolve to the lexicographically smaller
/// asset id and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingAsset {
    pub community_label: usize,
    pub asset_id: String,
    pub loading_magnitude: f64,
    pub pc1_variance_ratio: f64,
    pub tied: bool,
}

pub fn leading_asset(p: &PcaResult, community_label: usize) -> LeadingAsset {
    let pc1 = p.loadings(0);
    let mut best = 0_usize;
    let mut tied = false;
    for i in 1..p.k() {
        let (a, b) = (pc1[i].abs(), pc1[best].abs());
        if a > b {
            best = i;
            tied = false;
        } else if a == b {
            tied = true;
            if p.asset_ids[i] < p.asset_ids[best] {
                best = i;
            }
        }
    }
    LeadingAsset {
        community_label,
        asset_id: p.asset_ids[best].clone(),
        loading_magnitude: pc1[best].abs(),
        pc1_variance_ratio: p.explained_variance_ratio[0],
        tied,
    }
}

/// One retained community in the portfolio report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub community_label: usize,
    pub community_size: usize,
    pub leading: LeadingAsset,
    /// Rank per provided snapshot; `None` marks an unranked asset.
    pub ranks: Vec<Option<u32>>,
}

/// A community dropped for falling under the size threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcludedCommunity {
    pub label: usize,
    pub size: usize,
}

/// Per-community leading assets with ranking lookups, plus the list of
/// excluded (too small) communities.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioReport {
    pub rows: Vec<ReportRow>,
    pub excluded_communities: Vec<ExcludedCommunity>,
    pub n_snapshots: usize,
}

impl PortfolioReport {
    /// `community,size,leading_asset,pc1_ratio,rank_snap1,...` export;
    /// unranked cells are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "community".to_string(),
            "size".to_string(),
            "leading_asset".to_string(),
            "pc1_ratio".to_string(),
        ];
        header.extend((1..=self.n_snapshots).map(|i| format!("rank_snap{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![
                row.community_label.to_string(),
                row.community_size.to_string(),
                row.leading.asset_id.clone(),
                format!("{}", row.leading.pc1_variance_ratio),
            ];
            record.extend(
                row.ranks
                    .iter()
                    .map(|r| r.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the portfolio report: one row per retained community (size >=
/// max(`min_community_size`, 2)), ranks looked up in each snapshot.
/// Singleton communities are always excluded because PCA is undefined for
/// them.
pub fn build_portfolio_report(
    partition: &CommunityPartition,
    g: &NormalizedReturns,
    min_community_size: usize,
    snapshots: &[RankingSnapshot],
) -> Result<PortfolioReport> {
    if partition.n_nodes() != g.n_assets() {
        return Err(Error::Domain(format!(
            "partition covers {} nodes, returns have {} assets",
            partition.n_nodes(),
            g.n_assets()
        )));
    }
    let threshold = min_community_size.max(2);
    let mut retained: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut excluded_communities = Vec::new();
    for label in 0..partition.n_communities() {
        let members = partition.members(label);
        if members.len() < threshold {
            excluded_communities.push(ExcludedCommunity {
                label,
                size: members.len(),
            });
        } else {
            retained.push((label, members));
        }
    }

    let run_one = |(label, members): &(usize, Vec<usize>)| -> Result<ReportRow> {
        let pca = community_pca(g, members)?;
        let leading = leading_asset(&pca, *label);
        let ranks = snapshots
            .iter()
            .map(|s| s.rank_of(&leading.asset_id))
            .collect();
        Ok(ReportRow {
            community_label: *label,
            community_size: members.len(),
            leading,
            ranks,
        })
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<ReportRow> = retained.par_iter().map(run_one).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<ReportRow> = retained.iter().map(run_one).collect::<Result<_>>()?;

    Ok(PortfolioReport {
        rows,
        excluded_communities,
        n_snapshots: snapshots.len(),
    })
}

/// Which windows each leading asset appeared in, with ranks carried over.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub asset_id: String,
    pub present: Vec<bool>,
    pub window_count: usize,
    pub ranks: Vec<Option<u32>>,
}

/// Cross-window table of leading assets (rows sorted by asset id).
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTable {
    pub window_ids: Vec<String>,
    pub rows: Vec<ConsistencyRow>,
    pub n_snapshots: usize,
}

impl ConsistencyTable {
    /// `asset_id,<one column per window_id>,windows_present,rank_snap1,...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["asset_id".to_string()];
        header.extend(self.window_ids.iter().cloned());
        header.push("windows_present".to_string());
        header.extend((1..=self.n_snapshots).map(|i| format!("rank_snap{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.asset_id.clone()];
            record.extend(
                row.present
                    .iter()
                    .map(|p| if *p { "1" } else { "0" }.to_string()),
            );
            record.push(row.window_count.to_string());
            record.extend(
                row.ranks
                    .iter()
                    .map(|r| r.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the consistency table from per-window reports. Window ids must be
/// distinct; needs at least two reports.
pub fn cross_window_consistency(reports: &[(String, PortfolioReport)]) -> Result<ConsistencyTable> {
    if reports.len() < 2 {
        return Err(Error::Domain(format!(
            "consistency table needs at least 2 windows, got {}",
            reports.len()
        )));
    }
    let mut window_ids = Vec::with_capacity(reports.len());
    for (id, _) in reports {
        if window_ids.contains(id) {
            return Err(Error::Integrity(format!("duplicate window id {id:?}")));
        }
        window_ids.push(id.clone());
    }
    let n_snapshots = reports
        .iter()
        .map(|(_, r)| r.n_snapshots)
        .max()
        .unwrap_or(0);

    let mut table: BTreeMap<String, ConsistencyRow> = BTreeMap::new();
    for (w, (_, report)) in reports.iter().enumerate() {
        for row in &report.rows {
            let entry = table
                .entry(row.leading.asset_id.clone())
                .or_insert_with(|| ConsistencyRow {
                    asset_id: row.leading.asset_id.clone(),
                    present: vec![false; reports.len()],
                    window_count: 0,
                    ranks: {
                        let mut r = row.ranks.clone();
                        r.resize(n_snapshots, None);
                        r
                    },
                });
            if !entry.present[w] {
                entry.present[w] = true;
                entry.window_count += 1;
            }
        }
    }

    Ok(ConsistencyTable {
        window_ids,
        rows: table.into_values().collect(),
        n_snapshots,
    })
}
