use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the analysis pipeline.
///
/// Variants map onto the failure classes of the data contracts: parse and
/// integrity failures come from input files, domain and range failures from
/// invalid arguments, and numerical failures from the linear-algebra layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in an input stream could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Structurally valid input that violates a uniqueness or consistency rule.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A filter or selection produced a panel with no assets.
    #[error("empty panel: {0}")]
    EmptyPanel(String),

    /// An operation that requires a complete panel saw a missing cell.
    #[error("incomplete panel: {0}")]
    IncompletePanel(String),

    /// An asset whose return series is constant (zero variance).
    #[error("degenerate asset {asset}: {msg}")]
    DegenerateAsset { asset: String, msg: String },

    /// A date argument outside the panel's date range, or an inverted range.
    #[error("range error: {0}")]
    Range(String),

    /// Numerical failure (non-convergence or violated post-conditions),
    /// with condition diagnostics.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A spanning-tree request on a disconnected graph; carries the node ids
    /// of each connected component.
    #[error("disconnected graph with {} components (sizes {:?})",
            components.len(),
            components.iter().map(|c| c.len()).collect::<Vec<_>>())]
    Disconnected { components: Vec<Vec<String>> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether this error is a numerical failure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
