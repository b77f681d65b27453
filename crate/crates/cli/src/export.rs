//! Figure-data exports: coefficient, eigenvalue, and eigenvector-component
//! histograms plus the IPR series.

use std::path::Path;

use corrnet_core::correlation::CorrelationMatrix;
use corrnet_core::hist::histogram;
use corrnet_core::spectra::{
    pooled_scaled_components, BulkPartition, IprSeries, MpBounds, SpectralDecomposition,
};

use crate::artifacts::write_atomic;
use crate::CliError;

const CORR_HIST_BINS: usize = 80;
const EIGENVECTOR_HIST_BINS: usize = 120;
/// Bin count across the MP support; the grid extends beyond it to cover
/// every eigenvalue at the same resolution.
const MP_SUPPORT_BINS: usize = 512;

fn to_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn finish(path: &Path, buf: Vec<u8>) -> Result<(), CliError> {
    write_atomic(path, &buf)
}

/// `bin_left,bin_right,count` over the off-diagonal coefficients in [-1, 1].
pub fn write_corr_hist(path: &Path, c: &CorrelationMatrix) -> Result<(), CliError> {
    let values = c.upper_triangle();
    let bins = histogram(&values, -1.0, 1.0, CORR_HIST_BINS).map_err(CliError::from_core)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["bin_left", "bin_right", "count"])
            .map_err(to_err)?;
        for b in bins {
            w.write_record([
                format!("{}", b.left),
                format!("{}", b.right),
                b.count.to_string(),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(to_err)?;
    }
    finish(path, buf)
}

/// Eigenvalue histogram on a uniform grid with ~512 bins across the MP
/// support: `bin_left,bin_right,count,count_excl_lambda1,mp_density,
/// lambda1_flag`. The `count_excl_lambda1` column serves the
/// "excluding lambda_1" figure variant; `mp_density` is evaluated at the bin
/// midpoint, so a trapezoid over the emitted grid integrates to about one.
pub fn write_eigenvalue_hist(
    path: &Path,
    spec: &SpectralDecomposition,
    bounds: &MpBounds,
) -> Result<(), CliError> {
    let eigenvalues = spec.eigenvalues();
    let lambda_1 = eigenvalues[0];
    let lambda_min = *eigenvalues.last().expect("non-empty spectrum");

    let width = (bounds.lambda_plus - bounds.lambda_minus) / MP_SUPPORT_BINS as f64;
    let lo = (lambda_min.min(0.0) / width).floor() * width;
    let hi = ((lambda_1.max(bounds.lambda_plus) / width).ceil() + 1.0) * width;
    let n_bins = ((hi - lo) / width).round() as usize;

    let all = histogram(eigenvalues, lo, hi, n_bins).map_err(CliError::from_core)?;
    let excl = histogram(&eigenvalues[1..], lo, hi, n_bins).map_err(CliError::from_core)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "bin_left",
            "bin_right",
            "count",
            "count_excl_lambda1",
            "mp_density",
            "lambda1_flag",
        ])
        .map_err(to_err)?;
        for (k, (a, e)) in all.iter().zip(&excl).enumerate() {
            let mid = 0.5 * (a.left + a.right);
            let is_last = k + 1 == n_bins;
            let holds_l1 =
                (lambda_1 >= a.left && lambda_1 < a.right) || (is_last && lambda_1 == a.right);
            w.write_record([
                format!("{}", a.left),
                format!("{}", a.right),
                a.count.to_string(),
                e.count.to_string(),
                format!("{}", bounds.density(mid)),
                if holds_l1 { "1" } else { "0" }.to_string(),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(to_err)?;
    }
    finish(path, buf)
}

/// Pooled sqrt(N)-scaled component histograms for bulk and deviating
/// eigenvectors with a standard-normal overlay:
/// `bin_left,bin_right,bulk_count,deviating_count,normal_density`.
pub fn write_eigenvector_hist(
    path: &Path,
    spec: &SpectralDecomposition,
    part: &BulkPartition,
) -> Result<(), CliError> {
    let bulk = pooled_scaled_components(spec, &part.bulk_indices);
    let deviating = pooled_scaled_components(spec, &part.deviating_indices);
    let max_abs = bulk
        .iter()
        .chain(&deviating)
        .map(|v| v.abs())
        .fold(0.0_f64, f64::max);
    let limit = (max_abs + 0.5).ceil().max(4.0);

    let bulk_bins =
        histogram(&bulk, -limit, limit, EIGENVECTOR_HIST_BINS).map_err(CliError::from_core)?;
    let dev_bins =
        histogram(&deviating, -limit, limit, EIGENVECTOR_HIST_BINS).map_err(CliError::from_core)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "bin_left",
            "bin_right",
            "bulk_count",
            "deviating_count",
            "normal_density",
        ])
        .map_err(to_err)?;
        for (b, d) in bulk_bins.iter().zip(&dev_bins) {
            let mid = 0.5 * (b.left + b.right);
            let phi = (-0.5 * mid * mid).exp() / (2.0 * std::f64::consts::PI).sqrt();
            w.write_record([
                format!("{}", b.left),
                format!("{}", b.right),
                b.count.to_string(),
                d.count.to_string(),
                format!("{phi}"),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(to_err)?;
    }
    finish(path, buf)
}

/// IPR per eigenvalue rank with the series mean repeated as a column:
/// `eigenvalue_rank,eigenvalue,ipr,mean_ipr`.
pub fn write_ipr_series(
    path: &Path,
    spec: &SpectralDecomposition,
    series: &IprSeries,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["eigenvalue_rank", "eigenvalue", "ipr", "mean_ipr"])
            .map_err(to_err)?;
        for (k, (lambda, ipr)) in spec.eigenvalues().iter().zip(&series.values).enumerate() {
            w.write_record([
                (k + 1).to_string(),
                format!("{lambda}"),
                format!("{ipr}"),
                format!("{}", series.mean_ipr),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(to_err)?;
    }
    finish(path, buf)
}
