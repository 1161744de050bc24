//! Frequency estimation with count-min sketches, in memory and on block
//! storage.
//!
//! The classical count-min sketch keeps an `r x c` counter matrix: an update
//! increments one cell per row through `r` hashes, an estimate returns the
//! row-wise minimum, so counts are overestimated but never underestimated.
//! Placed on a block device that layout is hostile: every operation touches
//! up to `r` scattered pages.
//!
//! The buffered variant in this crate makes the sketch block-friendly with
//! three changes:
//!
//! * the matrix is split into logical pages laid out column-first, so one
//!   page is one contiguous byte range holding all rows of its column span;
//! * an extra hash picks a page per key and the row hashes are confined to
//!   that page, so a key's whole probe set lives on one page;
//! * updates are staged in per-page sub-buffers in memory and applied in
//!   batch when a sub-buffer fills, so updates cost a small fraction of a
//!   page I/O each, amortized, while estimates read exactly one page.
//!
//! Storage backends count page reads and writes exactly, which is what the
//! [`bench`] harness and the [`verify`] suites report and test against.
//!
//! ```
//! use bcms::{BufferedSketch, SketchParams};
//!
//! let params = SketchParams::from_size(1 << 20, 0.01, 8, 4096, 8)?
//!     .with_buffer_bytes(1 << 18);
//! let mut sketch = BufferedSketch::in_memory(params, 42)?;
//! sketch.update(7)?;
//! sketch.update(7)?;
//! assert!(sketch.estimate(7)? >= 2);
//! # Ok::<(), bcms::Error>(())
//! ```

pub mod bench;
pub mod buffered;
pub mod cms;
pub mod error;
pub mod hashing;
pub mod paged_store;
pub mod params;
pub mod verify;

pub use buffered::{BufferedSketch, IoReport, SubBuffer};
pub use cms::{CountMinSketch, HashMode, PagedCms};
pub use error::{Error, Result};
pub use hashing::HashFamily;
pub use paged_store::{
    FileBackend, IoStats, MemoryBackend, PageLayout, SketchHeader, StorageBackend,
};
pub use params::SketchParams;
pub use verify::{ErrorReport, ExactCounter};
