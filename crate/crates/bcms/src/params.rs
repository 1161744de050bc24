//! Sketch dimensioning.
//!
//! A sketch is an r x c counter matrix. The dimensions come from one of
//! three places:
//!
//! * an error-rate pair (`epsilon`, `delta`): depth `r = ceil(ln(1/delta))`,
//!   width `c = ceil(e/epsilon)`;
//! * a storage budget plus a target overestimate: the width is whatever a
//!   budget of `size_bytes / cell_bytes` cells allows at that depth, and the
//!   configuration is rated for `floor(cells * overestimate / (depth * e))`
//!   unit inserts;
//! * an explicit page count, which is convenient when an experiment needs to
//!   control the number of pages directly.
//!
//! In every case the width is then padded up to a whole number of pages so
//! that all pages share one geometry. Padding only adds columns, which can
//! only lower the effective error rate.

use crate::error::{Error, Result};

pub const DEFAULT_PAGE_BYTES: u32 = 4096;
pub const DEFAULT_CELL_BYTES: u32 = 8;

/// Ceiling that forgives values sitting a hair above an integer from
/// floating-point round-off (e.g. `ln(e)` evaluating to `1.0 + 1ulp`).
fn ceil_guarded(x: f64) -> u64 {
    (x * (1.0 - 1e-12)).ceil() as u64
}

fn require_unit_interval(param: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) || !value.is_finite() {
        return Err(Error::InvalidParameter {
            param,
            reason: format!("{value} is not in the open interval (0, 1)"),
        });
    }
    Ok(())
}

fn require_cell_bytes(cell_bytes: u32) -> Result<()> {
    if !(1..=8).contains(&cell_bytes) {
        return Err(Error::InvalidParameter {
            param: "cell_bytes",
            reason: format!("{cell_bytes} not in 1..=8"),
        });
    }
    Ok(())
}

/// Derived dimensions of one sketch configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchParams {
    /// Error rate the configuration is rated for. Derived as
    /// `overestimate / element_budget` when sizing by storage budget.
    pub epsilon: f64,
    /// Failure probability; `depth = ceil(ln(1/delta))`.
    pub delta: f64,
    /// Rows in the counter matrix.
    pub depth: u32,
    /// Width before padding to a page multiple.
    pub raw_width: u64,
    /// Width after padding: `page_count * columns_per_page`.
    pub width: u64,
    /// Bytes per counter cell.
    pub cell_bytes: u32,
    /// Bytes per storage page.
    pub page_bytes: u32,
    /// Number of logical pages.
    pub page_count: u64,
    /// Columns held by one page: `floor(page_bytes / (cell_bytes * depth))`.
    pub columns_per_page: u64,
    /// Unit inserts the configuration is sized for, when sizing by budget.
    pub element_budget: Option<u64>,
    /// In-memory buffer size for the buffered variant.
    pub buffer_bytes: Option<u64>,
}

impl SketchParams {
    /// Dimension a sketch from a storage budget, a failure probability and a
    /// target overestimate.
    ///
    /// The element budget is the number of unit inserts for which the
    /// expected row-collision error stays at `max_overestimate`:
    /// `floor(cells * max_overestimate / (depth * e))`.
    pub fn from_size(
        size_bytes: u64,
        delta: f64,
        max_overestimate: u64,
        page_bytes: u32,
        cell_bytes: u32,
    ) -> Result<Self> {
        require_unit_interval("delta", delta)?;
        require_cell_bytes(cell_bytes)?;
        if max_overestimate == 0 {
            return Err(Error::InvalidParameter {
                param: "max_overestimate",
                reason: "must be at least 1".into(),
            });
        }
        if size_bytes < page_bytes as u64 {
            return Err(Error::InvalidParameter {
                param: "size_bytes",
                reason: format!("{size_bytes} bytes cannot host one {page_bytes}-byte page"),
            });
        }

        let depth = depth_for_delta(delta);
        let columns_per_page = columns_per_page(page_bytes, cell_bytes, depth)?;

        let cells = size_bytes / cell_bytes as u64;
        let raw_width = cells.div_ceil(depth as u64);
        let page_count = raw_width.div_ceil(columns_per_page);
        let width = page_count * columns_per_page;

        let budget = (cells as f64 * max_overestimate as f64
            / (depth as f64 * std::f64::consts::E))
            .floor() as u64;
        if budget == 0 {
            return Err(Error::InvalidParameter {
                param: "size_bytes",
                reason: "budget too small to admit a single insert".into(),
            });
        }
        let epsilon = max_overestimate as f64 / budget as f64;

        Ok(Self {
            epsilon,
            delta,
            depth,
            raw_width,
            width,
            cell_bytes,
            page_bytes,
            page_count,
            columns_per_page,
            element_budget: Some(budget),
            buffer_bytes: None,
        })
    }

    /// Dimension a sketch from an error-rate pair.
    pub fn from_error(
        epsilon: f64,
        delta: f64,
        page_bytes: u32,
        cell_bytes: u32,
    ) -> Result<Self> {
        require_unit_interval("epsilon", epsilon)?;
        require_unit_interval("delta", delta)?;
        require_cell_bytes(cell_bytes)?;

        let depth = depth_for_delta(delta);
        let columns_per_page = columns_per_page(page_bytes, cell_bytes, depth)?;
        let raw_width = ceil_guarded(std::f64::consts::E / epsilon).max(1);
        let page_count = raw_width.div_ceil(columns_per_page);
        let width = page_count * columns_per_page;

        Ok(Self {
            epsilon,
            delta,
            depth,
            raw_width,
            width,
            cell_bytes,
            page_bytes,
            page_count,
            columns_per_page,
            element_budget: None,
            buffer_bytes: None,
        })
    }

    /// Dimension a sketch with an explicit page count. The error rate is the
    /// one implied by the resulting width, `e / width`.
    pub fn from_pages(
        page_count: u64,
        delta: f64,
        page_bytes: u32,
        cell_bytes: u32,
    ) -> Result<Self> {
        require_unit_interval("delta", delta)?;
        require_cell_bytes(cell_bytes)?;
        if page_count == 0 {
            return Err(Error::InvalidParameter {
                param: "page_count",
                reason: "must be at least 1".into(),
            });
        }

        let depth = depth_for_delta(delta);
        let columns_per_page = columns_per_page(page_bytes, cell_bytes, depth)?;
        let width = page_count
            .checked_mul(columns_per_page)
            .ok_or_else(|| Error::InvalidParameter {
                param: "page_count",
                reason: "width overflows u64".into(),
            })?;

        Ok(Self {
            epsilon: std::f64::consts::E / width as f64,
            delta,
            depth,
            raw_width: width,
            width,
            cell_bytes,
            page_bytes,
            page_count,
            columns_per_page,
            element_budget: None,
            buffer_bytes: None,
        })
    }

    /// Sets the in-memory buffer budget for the buffered variant.
    pub fn with_buffer_bytes(mut self, buffer_bytes: u64) -> Self {
        self.buffer_bytes = Some(buffer_bytes);
        self
    }

    /// Largest value one cell can hold.
    pub fn cell_limit(&self) -> u64 {
        cell_limit(self.cell_bytes)
    }

    /// Bytes of counter data on storage (padding included, header excluded).
    pub fn data_bytes(&self) -> u64 {
        self.page_count * self.page_bytes as u64
    }
}

pub(crate) fn cell_limit(cell_bytes: u32) -> u64 {
    if cell_bytes >= 8 {
        u64::MAX
    } else {
        (1u64 << (8 * cell_bytes)) - 1
    }
}

pub(crate) fn depth_for_delta(delta: f64) -> u32 {
    ceil_guarded((1.0 / delta).ln()).max(1) as u32
}

pub(crate) fn columns_per_page(page_bytes: u32, cell_bytes: u32, depth: u32) -> Result<u64> {
    let per_column = cell_bytes as u64 * depth as u64;
    let columns = page_bytes as u64 / per_column;
    if columns == 0 {
        return Err(Error::InvalidParameter {
            param: "page_bytes",
            reason: format!(
                "{page_bytes}-byte page cannot hold one column of {depth} cells of {cell_bytes} bytes"
            ),
        });
    }
    Ok(columns)
}
