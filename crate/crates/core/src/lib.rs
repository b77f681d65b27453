//! Correlation-network analysis of asset price panels.
//!
//! The pipeline turns a long-format price panel into, per analysis window:
//! normalized log returns, the cross-correlation matrix, random-matrix-theory
//! spectral diagnostics (Marchenko-Pastur bounds and density, bulk
//! classification, eigenvector statistics, inverse participation ratios, KS
//! tests), the correlation-distance minimum spanning tree, Louvain
//! communities over that tree, and per-community PCA leading-asset reports.
//!
//! Data-parallel stages (the Gram product, the distance transform, and
//! per-community PCA) run on rayon when the default `parallel` feature is
//! enabled; `*_seq` variants provide the sequential fallback. Both paths fix
//! each cell's summation order, so results are bitwise identical either way.

pub mod correlation;
pub mod error;
pub mod hist;
pub mod market_data;
pub mod network;
pub mod portfolio;
pub mod returns;
pub mod spectra;

pub use error::{Error, Result};
