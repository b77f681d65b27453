//! Uniform-bin histogram data for the figure exports.

use crate::error::{Error, Result};

/// One histogram bin: `[left, right)`, except the last bin which is closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Bins `values` into `n_bins` uniform bins over `[lo, hi]`.
///
/// Every value must lie inside the range so that counts conserve the sample
/// size; a value of exactly `hi` falls into the last bin.
pub fn histogram(values: &[f64], lo: f64, hi: f64, n_bins: usize) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(Error::Domain(format!(
            "histogram range [{lo}, {hi}] is empty"
        )));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0_usize; n_bins];
    for &v in values {
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::Domain(format!(
                "value {v} outside histogram range [{lo}, {hi}]"
            )));
        }
        let mut idx = ((v - lo) / width) as usize;
        if idx >= n_bins {
            idx = n_bins - 1;
        }
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            left: lo + k as f64 * width,
            right: if k + 1 == n_bins {
                hi
            } else {
                lo + (k + 1) as f64 * width
            },
            count,
        })
        .collect())
}

/// Smallest closed interval containing all values, or an error on an empty
/// or non-finite sample.
pub fn data_range(values: &[f64]) -> Result<(f64, f64)> {
    let mut it = values.iter();
    let first = *it
        .next()
        .ok_or_else(|| Error::Domain("empty sample".into()))?;
    if !first.is_finite() {
        return Err(Error::Numerical("non-finite sample value".into()));
    }
    let mut lo = first;
    let mut hi = first;
    for &v in it {
        if !v.is_finite() {
            return Err(Error::Numerical("non-finite sample value".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_conserve_sample_size() {
        let values: Vec<f64> = (0..100).map(|k| (k as f64) / 99.0).collect();
        let bins = histogram(&values, 0.0, 1.0, 7).unwrap();
        let total: usize = bins.iter().map(|b| b.count).sum();
        assert_eq!(total, values.len());
        assert_eq!(bins.len(), 7);
        assert_eq!(bins[0].left, 0.0);
        assert_eq!(bins[6].right, 1.0);
    }

    #[test]
    fn upper_boundary_lands_in_last_bin() {
        let bins = histogram(&[1.0], 0.0, 1.0, 4).unwrap();
        assert_eq!(bins[3].count, 1);
    }

    #[test]
    fn out_of_range_value_is_an_error() {
        assert!(histogram(&[2.0], 0.0, 1.0, 4).is_err());
        assert!(histogram(&[f64::NAN], 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn range_of_sample() {
        assert_eq!(data_range(&[3.0, -1.0, 2.0]).unwrap(), (-1.0, 3.0));
        assert!(data_range(&[]).is_err());
    }
}
