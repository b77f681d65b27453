//! Log returns and normalized (zero-mean, unit-variance) returns.
//!
//! Normalization uses the population (divide-by-T) standard deviation, which
//! makes the diagonal of the correlation matrix exactly one.

use std::io::Write;

use crate::error::{Error, Result};
use crate::market_data::PricePanel;

/// N x T grid of daily log returns, one row per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    asset_ids: Vec<String>,
    values: Vec<f64>,
    n_days: usize,
}

impl ReturnMatrix {
    /// Builds a return matrix from per-asset rows; all rows must share one
    /// length and contain only finite values.
    pub fn from_rows(asset_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if asset_ids.len() != rows.len() {
            return Err(Error::Integrity(format!(
                "{} asset ids for {} rows",
                asset_ids.len(),
                rows.len()
            )));
        }
        let n_days = rows.first().map(|r| r.len()).unwrap_or(0);
        if n_days == 0 {
            return Err(Error::Domain("return rows must be non-empty".into()));
        }
        let mut values = Vec::with_capacity(asset_ids.len() * n_days);
        for (id, row) in asset_ids.iter().zip(&rows) {
            if row.len() != n_days {
                return Err(Error::Integrity(format!(
                    "row for {id:?} has {} values, expected {n_days}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite return for asset {id:?}"
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            asset_ids,
            values,
            n_days,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn row(&self, asset: usize) -> &[f64] {
        &self.values[asset * self.n_days..(asset + 1) * self.n_days]
    }

    /// Comma-delimited export with asset_id row labels and `t0..` columns.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_labeled_matrix(
            writer,
            self.n_days,
            (0..self.n_assets()).map(|i| (self.asset_ids[i].as_str(), self.row(i))),
        )
    }
}

/// Normalized returns g_i(t) with the pre-normalization per-asset mean and
/// population standard deviation retained for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedReturns {
    asset_ids: Vec<String>,
    values: Vec<f64>,
    n_days: usize,
    row_means: Vec<f64>,
    row_stds: Vec<f64>,
}

impl NormalizedReturns {
    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn row(&self, asset: usize) -> &[f64] {
        &self.values[asset * self.n_days..(asset + 1) * self.n_days]
    }

    /// Pre-normalization row means.
    pub fn row_means(&self) -> &[f64] {
        &self.row_means
    }

    /// Pre-normalization population standard deviations.
    pub fn row_stds(&self) -> &[f64] {
        &self.row_stds
    }

    /// Reinterprets the normalized values as a plain return matrix (used by
    /// idempotence checks and exports).
    pub fn as_return_matrix(&self) -> ReturnMatrix {
        ReturnMatrix {
            asset_ids: self.asset_ids.clone(),
            values: self.values.clone(),
            n_days: self.n_days,
        }
    }

    /// Restricts to a subset of assets by index (order preserved as given).
    /// Rows stay normalized, so the subset is still a valid instance.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &i in indices {
            if i >= self.n_assets() {
                return Err(Error::Domain(format!(
                    "asset index {i} out of range for {} assets",
                    self.n_assets()
                )));
            }
            if !seen.insert(i) {
                return Err(Error::Integrity(format!("duplicate asset index {i}")));
            }
        }
        if indices.is_empty() {
            return Err(Error::EmptyPanel("empty asset subset".into()));
        }
        let mut values = Vec::with_capacity(indices.len() * self.n_days);
        let mut asset_ids = Vec::with_capacity(indices.len());
        let mut row_means = Vec::with_capacity(indices.len());
        let mut row_stds = Vec::with_capacity(indices.len());
        for &i in indices {
            asset_ids.push(self.asset_ids[i].clone());
            row_means.push(self.row_means[i]);
            row_stds.push(self.row_stds[i]);
            values.extend_from_slice(self.row(i));
        }
        Ok(Self {
            asset_ids,
            values,
            n_days: self.n_days,
            row_means,
            row_stds,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_labeled_matrix(
            writer,
            self.n_days,
            (0..self.n_assets()).map(|i| (self.asset_ids[i].as_str(), self.row(i))),
        )
    }
}

/// Writes `asset_id,t0,t1,...` rows; floats use shortest round-trip
/// formatting so exports parse back exactly.
fn write_labeled_matrix<'a, W: Write>(
    writer: W,
    n_cols: usize,
    rows: impl Iterator<Item = (&'a str, &'a [f64])>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(n_cols + 1);
    header.push("asset_id".to_string());
    header.extend((0..n_cols).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(n_cols + 1);
    for (id, row) in rows {
        record.clear();
        record.push(id.to_string());
        record.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Computes daily log returns G_i(t) = ln P_i(t+1) - ln P_i(t).
///
/// The panel must be complete, have at least two dates, and contain only
/// positive prices (a panel invariant).
pub fn log_returns(panel: &PricePanel) -> Result<ReturnMatrix> {
    if panel.n_dates() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 dates for returns, got {}",
            panel.n_dates()
        )));
    }
    let n_days = panel.n_dates() - 1;
    let mut values = Vec::with_capacity(panel.n_assets() * n_days);
    for i in 0..panel.n_assets() {
        let prices = panel.complete_row(i)?;
        for t in 0..n_days {
            values.push(prices[t + 1].ln() - prices[t].ln());
        }
    }
    Ok(ReturnMatrix {
        asset_ids: panel.asset_ids().to_vec(),
        values,
        n_days,
    })
}

/// Normalizes each return row to zero mean and unit population standard
/// deviation: g_i(t) = (G_i(t) - <G_i>) / sigma_i with
/// sigma_i = sqrt(<G_i^2> - <G_i>^2).
///
/// A zero-variance row signals a constant-price asset that should have been
/// excluded upstream and is reported as a degenerate-asset error.
pub fn normalize_returns(returns: &ReturnMatrix) -> Result<NormalizedReturns> {
    let n = returns.n_assets();
    let t = returns.n_days();
    let mut values = Vec::with_capacity(n * t);
    let mut row_means = Vec::with_capacity(n);
    let mut row_stds = Vec::with_capacity(n);

    for i in 0..n {
        let row = returns.row(i);
        let mean = row.iter().sum::<f64>() / t as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
        let std = var.sqrt();
        if std <= 0.0 {
            return Err(Error::DegenerateAsset {
                asset: returns.asset_ids[i].clone(),
                msg: "zero-variance return series (constant prices)".into(),
            });
        }
        row_means.push(mean);
        row_stds.push(std);
        values.extend(row.iter().map(|v| (v - mean) / std));
    }

    let out = NormalizedReturns {
        asset_ids: returns.asset_ids.clone(),
        values,
        n_days: t,
        row_means,
        row_stds,
    };
    out.check_invariants()?;
    Ok(out)
}

impl NormalizedReturns {
    fn check_invariants(&self) -> Result<()> {
        let t = self.n_days as f64;
        for i in 0..self.n_assets() {
            let row = self.row(i);
            let mean = row.iter().sum::<f64>() / t;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
            let std = var.sqrt();
            if mean.abs() > 1e-12 || (std - 1.0).abs() > 1e-12 {
                return Err(Error::Numerical(format!(
                    "normalized row {} has mean {mean:e}, std {std}",
                    self.asset_ids[i]
                )));
            }
        }
        Ok(())
    }
}
