//! Cross-correlation matrix C = (1/T) G G^T and the correlation distance
//! D_ij = sqrt(2 (1 - C_ij)).
//!
//! C is built as a Gram matrix of normalized return rows, which makes it
//! positive semidefinite by construction; the pairwise Pearson formula exists
//! only as a test oracle. Each matrix cell is a single sequential dot
//! product, so the parallel and sequential paths are bitwise identical.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::returns::NormalizedReturns;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Symmetric N x N correlation matrix with unit diagonal, entries in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    asset_ids: Vec<String>,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn n(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Off-diagonal upper-triangle entries C_ij, i < j, in row order.
    /// This is the sample behind the coefficient-distribution histogram.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Comma-delimited export with a header row and column of asset ids.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.n();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(n + 1);
        header.push("asset_id".to_string());
        header.extend(self.asset_ids.iter().cloned());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(n + 1);
        for i in 0..n {
            record.clear();
            record.push(self.asset_ids[i].clone());
            record.extend((0..n).map(|j| format!("{}", self.get(i, j))));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a matrix previously written by [`CorrelationMatrix::write_csv`]
    /// and re-validates symmetry, unit diagonal, and entry range.
    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(source);
        let header = reader.headers()?.clone();
        let mut cols: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        if cols.first().map(String::as_str) != Some("asset_id") {
            return Err(Error::Parse {
                line: 1,
                msg: "matrix header must start with `asset_id`".into(),
            });
        }
        cols.remove(0);
        let n = cols.len();
        if n < 2 {
            return Err(Error::Domain("matrix needs at least 2 assets".into()));
        }
        let mut values = vec![0.0_f64; n * n];
        let mut row_ids = Vec::with_capacity(n);
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != n + 1 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", n + 1, record.len()),
                });
            }
            if i >= n {
                return Err(Error::Integrity("more matrix rows than columns".into()));
            }
            row_ids.push(record.get(0).unwrap_or("").to_string());
            for j in 0..n {
                let cell = record.get(j + 1).unwrap_or("");
                values[i * n + j] = cell.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad matrix entry {cell:?}: {e}"),
                })?;
            }
        }
        if row_ids != cols {
            return Err(Error::Integrity(
                "matrix row labels do not match column labels".into(),
            ));
        }
        Self::from_values(cols, values)
    }

    /// Validates and normalizes raw values into a correlation matrix:
    /// symmetry and unit diagonal within 1e-9, entries within [-1, 1] plus
    /// rounding slack. The stored matrix is exactly symmetric with an exact
    /// unit diagonal, entries clamped to [-1, 1].
    pub fn from_values(asset_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = asset_ids.len();
        if n < 2 {
            return Err(Error::Domain("matrix needs at least 2 assets".into()));
        }
        if values.len() != n * n {
            return Err(Error::Integrity(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        let mut m = values;
        for i in 0..n {
            let d = m[i * n + i];
            if (d - 1.0).abs() > 1e-9 {
                return Err(Error::Integrity(format!(
                    "diagonal entry ({i},{i}) = {d}, expected 1"
                )));
            }
            m[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let (a, b) = (m[i * n + j], m[j * n + i]);
                if (a - b).abs() > 1e-9 {
                    return Err(Error::Integrity(format!(
                        "asymmetric entries ({i},{j}): {a} vs {b}"
                    )));
                }
                if !a.is_finite() || !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&a) {
                    return Err(Error::Domain(format!(
                        "correlation ({i},{j}) = {a} outside [-1, 1]"
                    )));
                }
                let clamped = a.clamp(-1.0, 1.0);
                m[i * n + j] = clamped;
                m[j * n + i] = clamped;
            }
        }
        Ok(Self {
            asset_ids,
            values: m,
        })
    }
}

/// One Gram cell: the sequential dot product of rows i and j divided by T.
/// Summation order is fixed (t ascending), which pins the result bitwise.
#[inline]
fn gram_cell(g: &NormalizedReturns, i: usize, j: usize) -> f64 {
    let (a, b) = (g.row(i), g.row(j));
    let mut acc = 0.0_f64;
    for t in 0..a.len() {
        acc += a[t] * b[t];
    }
    acc / a.len() as f64
}

fn assemble(asset_ids: Vec<String>, n: usize, upper: Vec<f64>) -> CorrelationMatrix {
    let mut values = vec![0.0_f64; n * n];
    let mut k = 0;
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let c = upper[k].clamp(-1.0, 1.0);
            values[i * n + j] = c;
            values[j * n + i] = c;
            k += 1;
        }
    }
    CorrelationMatrix { asset_ids, values }
}

fn check_corr_input(g: &NormalizedReturns) -> Result<()> {
    if g.n_assets() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 assets for a correlation matrix, got {}",
            g.n_assets()
        )));
    }
    if g.n_days() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 return days, got {}",
            g.n_days()
        )));
    }
    Ok(())
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Sequential reference implementation of the correlation matrix.
pub fn correlation_matrix_seq(g: &NormalizedReturns) -> Result<CorrelationMatrix> {
    check_corr_input(g)?;
    let n = g.n_assets();
    let upper: Vec<f64> = upper_pairs(n)
        .iter()
        .map(|&(i, j)| gram_cell(g, i, j))
        .collect();
    Ok(assemble(g.asset_ids().to_vec(), n, upper))
}

/// Builds the correlation matrix C = (1/T) G G^T from normalized returns.
///
/// With the `parallel` feature the upper-triangle cells are computed on the
/// rayon pool; each cell keeps its fixed sequential summation order, so the
/// output is bitwise identical to [`correlation_matrix_seq`].
pub fn correlation_matrix(g: &NormalizedReturns) -> Result<CorrelationMatrix> {
    #[cfg(feature = "parallel")]
    {
        check_corr_input(g)?;
        let n = g.n_assets();
        let upper: Vec<f64> = upper_pairs(n)
            .par_iter()
            .map(|&(i, j)| gram_cell(g, i, j))
            .collect();
        Ok(assemble(g.asset_ids().to_vec(), n, upper))
    }
    #[cfg(not(feature = "parallel"))]
    {
        correlation_matrix_seq(g)
    }
}

/// Symmetric N x N correlation-distance matrix with zero diagonal,
/// entries in [0, 2].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    asset_ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Verifies the three metric axioms: zero diagonal/identity, symmetry,
    /// and the triangle inequality (all triples when N <= 64, a deterministic
    /// sample of triples otherwise). Tolerance 1e-12.
    pub fn verify_metric_axioms(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::Numerical(format!(
                    "distance diagonal ({i},{i}) = {}",
                    self.get(i, i)
                )));
            }
            for j in (i + 1)..n {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::Numerical(format!("asymmetric distance ({i},{j})")));
                }
            }
        }
        let check = |i: usize, j: usize, k: usize| -> Result<()> {
            let lhs = self.get(i, j);
            let rhs = self.get(i, k) + self.get(k, j);
            if lhs > rhs + 1e-12 {
                return Err(Error::Numerical(format!(
                    "triangle inequality violated: d({i},{j}) = {lhs} > {rhs}"
                )));
            }
            Ok(())
        };
        if n <= 64 {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        if k != i && k != j {
                            check(i, j, k)?;
                        }
                    }
                }
            }
        } else {
            // Deterministic stride over triples keeps the check O(1e5).
            let mut state = 0x9e3779b97f4a7c15_u64;
            let mut next = |m: usize| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 33) as usize % m
            };
            for _ in 0..100_000 {
                let i = next(n);
                let j = next(n);
                let k = next(n);
                if i != j && j != k && i != k {
                    check(i, j, k)?;
                }
            }
        }
        Ok(())
    }
}

/// Elementwise distance kernel; 1 - C is clamped at zero before the square
/// root to absorb rounding at C = 1 + epsilon.
#[inline]
fn distance_cell(c: f64) -> f64 {
    (2.0 * (1.0 - c).max(0.0)).sqrt()
}

/// Sequential reference implementation of the distance transform.
pub fn distance_matrix_seq(c: &CorrelationMatrix) -> Result<DistanceMatrix> {
    let n = c.n();
    let mut values = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                0.0
            } else {
                distance_cell(c.get(i, j))
            };
        }
    }
    finish_distance(c.asset_ids().to_vec(), values)
}

/// Applies D_ij = sqrt(2 (1 - C_ij)) elementwise and verifies the metric
/// axioms. Parallel over rows when the `parallel` feature is enabled;
/// bitwise identical to [`distance_matrix_seq`].
pub fn distance_matrix(c: &CorrelationMatrix) -> Result<DistanceMatrix> {
    #[cfg(feature = "parallel")]
    {
        let n = c.n();
        let mut values = vec![0.0_f64; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = if i == j {
                    0.0
                } else {
                    distance_cell(c.get(i, j))
                };
            }
        });
        finish_distance(c.asset_ids().to_vec(), values)
    }
    #[cfg(not(feature = "parallel"))]
    {
        distance_matrix_seq(c)
    }
}

fn finish_distance(asset_ids: Vec<String>, values: Vec<f64>) -> Result<DistanceMatrix> {
    let d = DistanceMatrix { asset_ids, values };
    d.verify_metric_axioms()?;
    Ok(d)
}
