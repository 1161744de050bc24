//! Count-min sketches over an in-memory matrix and over paged storage.
//!
//! Both support two probe layouts:
//!
//! * [`HashMode::Classical`]: each row's hash ranges over the full width, so
//!   a key's cells are scattered across pages;
//! * [`HashMode::Localized`]: a page-selector hash picks one page and every
//!   row's hash is confined to that page's column span.
//!
//! Updates add to one cell per row; estimates take the row-wise minimum, so
//! they can overestimate but never underestimate. Counter overflow is a hard
//! error checked before any cell is modified — wrapping would break the
//! no-underestimate guarantee everything else here relies on.

use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::paged_store::{
    FileBackend, MemoryBackend, PageLayout, SketchHeader, StorageBackend,
};
use crate::params::SketchParams;

/// How probe columns are drawn for each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashMode {
    /// Row hashes range over the whole width.
    Classical,
    /// Row hashes are confined to the page selected by the page hash.
    Localized,
}

#[inline]
fn probe_column(family: &HashFamily, mode: HashMode, key: u64, row: u32) -> u64 {
    match mode {
        HashMode::Classical => family.classical_column(key, row),
        HashMode::Localized => family.localized_column(key, row),
    }
}

/// In-memory count-min sketch.
///
/// This is the reference implementation: the buffered on-storage variant is
/// required to be observationally equivalent to a localized instance of this
/// type fed the same updates.
///
/// Updates need exclusive access; estimates are read-only.
#[derive(Debug, Clone)]
pub struct CountMinSketch {
    params: SketchParams,
    family: HashFamily,
    mode: HashMode,
    cells: Vec<u64>,
    cell_limit: u64,
    total_inserted: u64,
}

impl CountMinSketch {
    pub fn new(params: SketchParams, mode: HashMode, master_seed: u64) -> Result<Self> {
        let family = HashFamily::new(
            master_seed,
            params.depth,
            params.page_count,
            params.columns_per_page,
        )?;
        let cell_count = (params.depth as u64)
            .checked_mul(params.width)
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::InvalidParameter {
                param: "size_bytes",
                reason: "matrix too large for an in-memory sketch".into(),
            })?;
        Ok(Self {
            cell_limit: params.cell_limit(),
            cells: vec![0u64; cell_count],
            family,
            mode,
            total_inserted: 0,
            params,
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn mode(&self) -> HashMode {
        self.mode
    }

    pub fn total_inserted(&self) -> u64 {
        self.total_inserted
    }

    #[inline]
    fn cell_index(&self, row: u32, column: u64) -> usize {
        row as usize * self.params.width as usize + column as usize
    }

    pub fn update(&mut self, key: u64) -> Result<()> {
        self.update_weighted(key, 1)
    }

    /// Adds `count` to one cell per row.
    ///
    /// Overflow in any row is checked before any row is modified, so a
    /// failed update leaves the matrix exactly as it was.
    pub fn update_weighted(&mut self, key: u64, count: u32) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                param: "count",
                reason: "must be at least 1".into(),
            });
        }
        for row in 0..self.params.depth {
            let column = probe_column(&self.family, self.mode, key, row);
            let index = self.cell_index(row, column);
            if self.cells[index] > self.cell_limit - count as u64 {
                return Err(Error::CounterOverflow {
                    row,
                    column,
                    limit: self.cell_limit,
                });
            }
        }
        for row in 0..self.params.depth {
            let column = probe_column(&self.family, self.mode, key, row);
            let index = self.cell_index(row, column);
            self.cells[index] += count as u64;
        }
        self.total_inserted += count as u64;
        Ok(())
    }

    /// Row-wise minimum over the key's cells; never below the key's true
    /// total count.
    pub fn estimate(&self, key: u64) -> u64 {
        let mut min = u64::MAX;
        for row in 0..self.params.depth {
            let column = probe_column(&self.family, self.mode, key, row);
            min = min.min(self.cells[self.cell_index(row, column)]);
        }
        min
    }

    /// Global columns probed for `key`, one per row.
    pub fn probe_columns(&self, key: u64) -> Vec<u64> {
        (0..self.params.depth)
            .map(|row| probe_column(&self.family, self.mode, key, row))
            .collect()
    }

    pub fn cell(&self, row: u32, column: u64) -> Result<u64> {
        if row >= self.params.depth || column >= self.params.width {
            return Err(Error::CellOutOfRange {
                row,
                column,
                depth: self.params.depth,
                width: self.params.width,
            });
        }
        Ok(self.cells[self.cell_index(row, column)])
    }

    /// The whole matrix, row-major.
    pub fn counters(&self) -> &[u64] {
        &self.cells
    }

    pub fn row_sum(&self, row: u32) -> u64 {
        let width = self.params.width as usize;
        let start = row as usize * width;
        self.cells[start..start + width].iter().sum()
    }
}

/// Count-min sketch over paged storage, unbuffered.
///
/// Every operation goes straight to the backing pages: an update reads each
/// distinct page its probe set touches, applies the increments and writes
/// the page back; an estimate reads each distinct page once. In localized
/// mode that is one page per operation; in classical mode up to `depth`.
#[derive(Debug)]
pub struct PagedCms<B> {
    params: SketchParams,
    family: HashFamily,
    mode: HashMode,
    layout: PageLayout,
    store: B,
    cell_limit: u64,
    total_inserted: u64,
    /// (page, in-page offset) per row, sorted by page; reused per op.
    probes: Vec<(u64, usize)>,
    /// One page buffer per distinct page touched by an update; reused.
    page_bufs: Vec<Vec<u8>>,
}

impl PagedCms<FileBackend> {
    /// Creates a zeroed sketch file and a sketch over it.
    pub fn create_file<P: AsRef<std::path::Path>>(
        path: P,
        params: SketchParams,
        mode: HashMode,
        master_seed: u64,
    ) -> Result<Self> {
        let header =
            SketchHeader::for_params(&params, master_seed, mode == HashMode::Localized);
        let store = FileBackend::create(path, header)?;
        Self::new(params, mode, master_seed, store)
    }

    /// Reopens a sketch file; geometry, hash seeds and the stream total come
    /// from the header.
    pub fn open_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        let store = FileBackend::open(path)?;
        let header = store.header().clone();
        let params = header.to_params()?;
        let mode = if header.localized {
            HashMode::Localized
        } else {
            HashMode::Classical
        };
        let mut sketch = Self::new(params, mode, header.master_seed, store)?;
        sketch.total_inserted = header.total_inserted;
        Ok(sketch)
    }
}

impl PagedCms<MemoryBackend> {
    pub fn in_memory(params: SketchParams, mode: HashMode, master_seed: u64) -> Result<Self> {
        let store = MemoryBackend::for_params(&params)?;
        Self::new(params, mode, master_seed, store)
    }
}

impl<B: StorageBackend> PagedCms<B> {
    pub fn new(params: SketchParams, mode: HashMode, master_seed: u64, store: B) -> Result<Self> {
        let layout = PageLayout::from_params(&params)?;
        if store.page_bytes() != params.page_bytes as usize
            || store.page_count() != params.page_count
        {
            return Err(Error::InvalidParameter {
                param: "store",
                reason: format!(
                    "backend geometry {}x{} does not match params {}x{}",
                    store.page_count(),
                    store.page_bytes(),
                    params.page_count,
                    params.page_bytes
                ),
            });
        }
        let family = HashFamily::new(
            master_seed,
            params.depth,
            params.page_count,
            params.columns_per_page,
        )?;
        let depth = params.depth as usize;
        Ok(Self {
            cell_limit: params.cell_limit(),
            layout,
            probes: Vec::with_capacity(depth),
            page_bufs: (0..depth)
                .map(|_| vec![0u8; params.page_bytes as usize])
                .collect(),
            family,
            mode,
            store,
            total_inserted: 0,
            params,
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn total_inserted(&self) -> u64 {
        self.total_inserted
    }

    pub fn io_stats(&self) -> crate::paged_store::IoStats {
        self.store.io_stats()
    }

    pub fn reset_io_stats(&mut self) {
        self.store.reset_io_stats()
    }

    /// Records probe addresses for `key` into `self.probes`, sorted by page.
    fn collect_probes(&mut self, key: u64) {
        self.probes.clear();
        for row in 0..self.params.depth {
            let column = probe_column(&self.family, self.mode, key, row);
            let page = column / self.layout.columns_per_page;
            let local = column % self.layout.columns_per_page;
            self.probes.push((page, self.layout.cell_offset(row, local)));
        }
        self.probes.sort_unstable();
    }

    pub fn update(&mut self, key: u64) -> Result<()> {
        self.update_weighted(key, 1)
    }

    /// Reads each distinct page the probe set touches, applies all of that
    /// page's increments and writes it back. Overflow anywhere aborts before
    /// any page is written.
    pub fn update_weighted(&mut self, key: u64, count: u32) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                param: "count",
                reason: "must be at least 1".into(),
            });
        }
        self.collect_probes(key);

        // Apply into page buffers first; nothing is written until every
        // increment has passed the overflow check.
        let mut groups: Vec<(u64, usize)> = Vec::new(); // (page, buf index)
        let mut buf_index = 0usize;
        let mut i = 0usize;
        while i < self.probes.len() {
            let page = self.probes[i].0;
            let buf = &mut self.page_bufs[buf_index];
            self.store.read_page(page, buf)?;
            while i < self.probes.len() && self.probes[i].0 == page {
                let offset = self.probes[i].1;
                let cell_bytes = self.layout.cell_bytes as usize;
                let mut raw = [0u8; 8];
                raw[..cell_bytes].copy_from_slice(&buf[offset..offset + cell_bytes]);
                let value = u64::from_le_bytes(raw);
                if value > self.cell_limit - count as u64 {
                    return Err(Error::CounterOverflow {
                        row: 0,
                        column: page * self.layout.columns_per_page,
                        limit: self.cell_limit,
                    });
                }
                let new = value + count as u64;
                buf[offset..offset + cell_bytes]
                    .copy_from_slice(&new.to_le_bytes()[..cell_bytes]);
                i += 1;
            }
            groups.push((page, buf_index));
            buf_index += 1;
        }
        for &(page, index) in &groups {
            self.store.write_page(page, &self.page_bufs[index])?;
        }
        self.total_inserted += count as u64;
        Ok(())
    }

    /// Reads each distinct page once and returns the row-wise minimum.
    pub fn estimate(&mut self, key: u64) -> Result<u64> {
        self.collect_probes(key);
        let mut min = u64::MAX;
        let mut i = 0usize;
        while i < self.probes.len() {
            let page = self.probes[i].0;
            let buf = &mut self.page_bufs[0];
            self.store.read_page(page, buf)?;
            while i < self.probes.len() && self.probes[i].0 == page {
                let offset = self.probes[i].1;
                let cell_bytes = self.layout.cell_bytes as usize;
                let mut raw = [0u8; 8];
                raw[..cell_bytes].copy_from_slice(&buf[offset..offset + cell_bytes]);
                min = min.min(u64::from_le_bytes(raw));
                i += 1;
            }
        }
        Ok(min)
    }

    /// Reads one counter from storage (one page read).
    pub fn counter(&mut self, row: u32, column: u64) -> Result<u64> {
        let (page, offset) = self.layout.locate_cell(row, column)?;
        let buf = &mut self.page_bufs[0];
        self.store.read_page(page, buf)?;
        let cell_bytes = self.layout.cell_bytes as usize;
        let mut raw = [0u8; 8];
        raw[..cell_bytes].copy_from_slice(&buf[offset..offset + cell_bytes]);
        Ok(u64::from_le_bytes(raw))
    }

    /// Persists the stream total and returns the backend.
    pub fn close(mut self) -> Result<B> {
        self.store.persist_total_inserted(self.total_inserted)?;
        Ok(self.store)
    }
}
