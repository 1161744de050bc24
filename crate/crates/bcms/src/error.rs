use std::io;

use thiserror::Error;

/// Errors produced by sketch construction, storage access and verification.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument fell outside its documented range.
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: &'static str, reason: String },

    /// A configuration is structurally valid but outside the regime this
    /// library supports (for example a sub-buffer capacity of zero).
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    /// Incrementing a counter would exceed the cell's maximum value. The
    /// increment is refused so that estimates can never wrap around and
    /// silently underestimate.
    #[error("counter overflow at row {row}, global column {column} (cell limit {limit})")]
    CounterOverflow { row: u32, column: u64, limit: u64 },

    /// Page id outside `[0, page_count)`.
    #[error("page {page_id} out of range ({page_count} pages)")]
    PageOutOfRange { page_id: u64, page_count: u64 },

    /// A page buffer had the wrong length for the store's page size.
    #[error("page buffer is {got} bytes, page size is {expected}")]
    PageSizeMismatch { expected: usize, got: usize },

    /// Cell coordinates outside the counter matrix.
    #[error("cell (row {row}, column {column}) outside a {depth} x {width} matrix")]
    CellOutOfRange {
        row: u32,
        column: u64,
        depth: u32,
        width: u64,
    },

    /// An I/O failure while reading or writing a specific page.
    #[error("I/O on page {page_id}: {source}")]
    PageIo { page_id: u64, source: io::Error },

    /// An I/O failure outside page access (file creation, header update).
    #[error(transparent)]
    Io(#[from] io::Error),

    /// The on-disk file is not a sketch file or is inconsistent.
    #[error("bad sketch file: {0}")]
    BadSketchFile(String),

    /// An estimate came back below the exact count. This never happens for a
    /// correct implementation; it is surfaced as an error so verification
    /// runs fail loudly instead of producing garbage statistics.
    #[error("estimate {estimate} below true count {true_count} for key {key:#018x}")]
    Underestimate {
        key: u64,
        estimate: u64,
        true_count: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
