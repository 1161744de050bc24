//! The buffered, page-localized count-min sketch.
//!
//! All of a key's hashes are confined to one logical page, so one update
//! touches one page and one estimate needs one page read. Updates do not go
//! to storage immediately: each page has an in-memory sub-buffer holding the
//! pending `(column offsets, count)` entries for that page. When a
//! sub-buffer fills up, its page is read once, every pending entry is
//! applied, and the page is written back — two page I/Os for a whole
//! sub-buffer worth of updates.
//!
//! Estimates are never buffered: even a buffer hit would still need the page
//! to produce a count, so an estimate reads its page, applies any pending
//! entries for it (writing back only if it did), and returns the row-wise
//! minimum.
//!
//! At any point, flushing all sub-buffers yields exactly the matrix an
//! unbuffered localized [`CountMinSketch`](crate::cms::CountMinSketch) would
//! hold after the same updates; estimates agree at every step.

use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::paged_store::{FileBackend, MemoryBackend, PageLayout, SketchHeader, StorageBackend};
use crate::params::SketchParams;

/// Bytes of one buffered entry: two per column offset plus a 4-byte count.
pub fn entry_bytes(depth: u32) -> usize {
    depth as usize * 2 + 4
}

/// Pending updates for one page: `depth` local column offsets per entry,
/// stored flat, plus one count per entry.
#[derive(Debug, Default, Clone)]
pub struct SubBuffer {
    offsets: Vec<u16>,
    counts: Vec<u32>,
}

impl SubBuffer {
    fn with_capacity(capacity_entries: usize, depth: usize) -> Self {
        Self {
            offsets: Vec::with_capacity(capacity_entries * depth),
            counts: Vec::with_capacity(capacity_entries),
        }
    }

    pub fn entry_count(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn push(&mut self, offsets: &[u16], count: u32) {
        self.offsets.extend_from_slice(offsets);
        self.counts.push(count);
    }

    fn clear(&mut self) {
        self.offsets.clear();
        self.counts.clear();
    }

    fn entries(&self, depth: usize) -> impl Iterator<Item = (&[u16], u32)> {
        self.offsets
            .chunks_exact(depth)
            .zip(self.counts.iter().copied())
    }
}

/// Per-operation I/O counters plus the buffer-capacity model prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoReport {
    pub page_reads: u64,
    pub page_writes: u64,
    /// Update operations accepted so far (buffered or applied).
    pub updates_applied: u64,
    /// Model cost of one update in page I/Os:
    /// `page_count * cell_bytes * depth / buffer_bytes`.
    pub predicted_amortized_update_io: f64,
}

/// Buffered count-min sketch over a paged store.
///
/// Exclusive access is required for every operation — estimates flush
/// pending entries, so they mutate both buffers and storage.
#[derive(Debug)]
pub struct BufferedSketch<B> {
    params: SketchParams,
    family: HashFamily,
    layout: PageLayout,
    store: B,
    buffers: Vec<SubBuffer>,
    capacity_entries: usize,
    buffer_bytes: u64,
    total_inserted: u64,
    update_ops: u64,
    cell_limit: u64,
    page_buf: Vec<u8>,
    offsets_scratch: Vec<u16>,
}

impl BufferedSketch<MemoryBackend> {
    pub fn in_memory(params: SketchParams, master_seed: u64) -> Result<Self> {
        let store = MemoryBackend::for_params(&params)?;
        Self::new(params, master_seed, store)
    }
}

impl BufferedSketch<FileBackend> {
    /// Creates a zeroed sketch file and a buffered sketch over it.
    pub fn create_file<P: AsRef<std::path::Path>>(
        path: P,
        params: SketchParams,
        master_seed: u64,
    ) -> Result<Self> {
        let header = SketchHeader::for_params(&params, master_seed, true);
        let store = FileBackend::create(path, header)?;
        Self::new(params, master_seed, store)
    }

    /// Reopens a sketch file. Geometry, hash seeds and the stream total come
    /// from the header; `buffer_bytes` is a runtime knob and is supplied
    /// fresh.
    pub fn open_file<P: AsRef<std::path::Path>>(path: P, buffer_bytes: u64) -> Result<Self> {
        let store = FileBackend::open(path)?;
        let header = store.header().clone();
        if !header.localized {
            return Err(Error::BadSketchFile(
                "not a localized sketch; the buffered variant cannot probe it".into(),
            ));
        }
        let params = header.to_params()?.with_buffer_bytes(buffer_bytes);
        let mut sketch = Self::new(params, header.master_seed, store)?;
        sketch.total_inserted = header.total_inserted;
        Ok(sketch)
    }
}

impl<B: StorageBackend> BufferedSketch<B> {
    pub fn new(params: SketchParams, master_seed: u64, store: B) -> Result<Self> {
        let buffer_bytes = params.buffer_bytes.ok_or_else(|| Error::InvalidParameter {
            param: "buffer_bytes",
            reason: "the buffered sketch needs an in-memory buffer budget".into(),
        })?;
        if params.columns_per_page > u64::from(u16::MAX) + 1 {
            return Err(Error::UnsupportedConfig(format!(
                "{} columns per page do not fit 16-bit buffered offsets",
                params.columns_per_page
            )));
        }
        let layout = PageLayout::from_params(&params)?;
        if store.page_bytes() != params.page_bytes as usize
            || store.page_count() != params.page_count
        {
            return Err(Error::InvalidParameter {
                param: "store",
                reason: "backend geometry does not match params".into(),
            });
        }
        let per_page_bytes = buffer_bytes / params.page_count;
        let capacity_entries = (per_page_bytes / entry_bytes(params.depth) as u64) as usize;
        if capacity_entries == 0 {
            return Err(Error::UnsupportedConfig(format!(
                "buffer of {buffer_bytes} bytes over {} pages gives a zero-entry sub-buffer; \
                 a buffer smaller than one entry per page would flush on every update",
                params.page_count
            )));
        }
        let family = HashFamily::new(
            master_seed,
            params.depth,
            params.page_count,
            params.columns_per_page,
        )?;
        let depth = params.depth as usize;
        Ok(Self {
            buffers: (0..params.page_count)
                .map(|_| SubBuffer::with_capacity(capacity_entries, depth))
                .collect(),
            capacity_entries,
            buffer_bytes,
            cell_limit: params.cell_limit(),
            page_buf: vec![0u8; params.page_bytes as usize],
            offsets_scratch: vec![0u16; depth],
            family,
            layout,
            store,
            total_inserted: 0,
            update_ops: 0,
            params,
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn capacity_entries(&self) -> usize {
        self.capacity_entries
    }

    pub fn entry_bytes(&self) -> usize {
        entry_bytes(self.params.depth)
    }

    pub fn total_inserted(&self) -> u64 {
        self.total_inserted
    }

    /// Entries currently staged across all sub-buffers.
    pub fn pending_entries(&self) -> u64 {
        self.buffers.iter().map(|b| b.entry_count() as u64).sum()
    }

    pub fn sub_buffer(&self, page_id: u64) -> &SubBuffer {
        &self.buffers[page_id as usize]
    }

    pub fn io_stats(&self) -> crate::paged_store::IoStats {
        self.store.io_stats()
    }

    pub fn reset_io_stats(&mut self) {
        self.store.reset_io_stats()
    }

    pub fn io_report(&self) -> IoReport {
        let stats = self.store.io_stats();
        IoReport {
            page_reads: stats.page_reads,
            page_writes: stats.page_writes,
            updates_applied: self.update_ops,
            predicted_amortized_update_io: (self.params.page_count
                * self.params.cell_bytes as u64
                * self.params.depth as u64) as f64
                / self.buffer_bytes as f64,
        }
    }

    pub fn update(&mut self, key: u64) -> Result<()> {
        self.update_weighted(key, 1)
    }

    /// Stages the update in its page's sub-buffer; if that buffer just
    /// reached capacity, flushes it (one page read, one page write). No page
    /// I/O happens otherwise.
    pub fn update_weighted(&mut self, key: u64, count: u32) -> Result<()> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                param: "count",
                reason: "must be at least 1".into(),
            });
        }
        let page = self.family.page_index(key);
        for row in 0..self.params.depth {
            self.offsets_scratch[row as usize] = self.family.column_offset(key, row) as u16;
        }
        let buffer = &mut self.buffers[page as usize];
        buffer.push(&self.offsets_scratch, count);
        self.total_inserted += count as u64;
        self.update_ops += 1;
        if self.buffers[page as usize].entry_count() >= self.capacity_entries {
            self.flush_page(page)?;
        }
        Ok(())
    }

    /// Reads the key's page, applies any pending entries for it (writing the
    /// page back only in that case), and returns the row-wise minimum.
    pub fn estimate(&mut self, key: u64) -> Result<u64> {
        let page = self.family.page_index(key);
        self.store.read_page(page, &mut self.page_buf)?;

        let mut dirty = false;
        if !self.buffers[page as usize].is_empty() {
            apply_entries(
                &self.layout,
                &self.buffers[page as usize],
                &mut self.page_buf,
                self.cell_limit,
            )?;
            self.buffers[page as usize].clear();
            dirty = true;
        }

        let mut min = u64::MAX;
        for row in 0..self.params.depth {
            let offset = self.family.column_offset(key, row);
            min = min.min(self.layout.get_cell(&self.page_buf, row, offset));
        }

        if dirty {
            self.store.write_page(page, &self.page_buf)?;
        }
        Ok(min)
    }

    /// Applies one page's sub-buffer: one read, one write, buffer cleared.
    ///
    /// On a counter overflow the page is not written and the sub-buffer is
    /// left in place, so storage still matches the entries not yet applied.
    fn flush_page(&mut self, page: u64) -> Result<()> {
        self.store.read_page(page, &mut self.page_buf)?;
        apply_entries(
            &self.layout,
            &self.buffers[page as usize],
            &mut self.page_buf,
            self.cell_limit,
        )?;
        self.store.write_page(page, &self.page_buf)?;
        self.buffers[page as usize].clear();
        Ok(())
    }

    /// Drains every non-empty sub-buffer in ascending page order (one read
    /// and one write per dirty page) and records the stream total in the
    /// store's metadata. Pages flushed before an error stay applied.
    pub fn flush_all(&mut self) -> Result<()> {
        for page in 0..self.params.page_count {
            if !self.buffers[page as usize].is_empty() {
                self.flush_page(page)?;
            }
        }
        self.store.persist_total_inserted(self.total_inserted)?;
        Ok(())
    }

    /// Flushes everything and returns the backend.
    pub fn close(mut self) -> Result<B> {
        self.flush_all()?;
        Ok(self.store)
    }

    /// Reads the persisted matrix, row-major. Pending sub-buffer entries are
    /// not included; flush first for the full picture. Diagnostic use.
    pub fn dump_counters(&mut self) -> Result<Vec<u64>> {
        let width = self.layout.width();
        let mut out = vec![0u64; (self.params.depth as u64 * width) as usize];
        for page in 0..self.params.page_count {
            self.store.read_page(page, &mut self.page_buf)?;
            for local in 0..self.layout.columns_per_page {
                let column = page * self.layout.columns_per_page + local;
                for row in 0..self.params.depth {
                    out[(row as u64 * width + column) as usize] =
                        self.layout.get_cell(&self.page_buf, row, local);
                }
            }
        }
        Ok(out)
    }
}

/// Applies every entry of `buffer` to `page_buf` with overflow checks.
/// Nothing is applied permanently on error: the caller discards the page
/// buffer and keeps the sub-buffer.
fn apply_entries(
    layout: &PageLayout,
    buffer: &SubBuffer,
    page_buf: &mut [u8],
    cell_limit: u64,
) -> Result<()> {
    for (offsets, count) in buffer.entries(layout.depth as usize) {
        for (row, &offset) in offsets.iter().enumerate() {
            let row = row as u32;
            let current = layout.get_cell(page_buf, row, offset as u64);
            if current > cell_limit - count as u64 {
                return Err(Error::CounterOverflow {
                    row,
                    column: offset as u64,
                    limit: cell_limit,
                });
            }
            layout.put_cell(page_buf, row, offset as u64, current + count as u64);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cms::{CountMinSketch, HashMode};
    use crate::verify::uniform_keys;
    use proptest::prelude::*;

    /// Geometry with an exact sub-buffer capacity: `capacity` entries of
    /// `depth * 2 + 4` bytes per page.
    fn params_with_capacity(pages: u64, delta: f64, capacity: u64) -> SketchParams {
        let params = SketchParams::from_pages(pages, delta, 4096, 8).unwrap();
        let buffer = pages * capacity * entry_bytes(params.depth) as u64;
        params.with_buffer_bytes(buffer)
    }

    fn keys_for_page(sketch: &BufferedSketch<MemoryBackend>, page: u64, n: usize) -> Vec<u64> {
        (0u64..)
            .filter(|&k| sketch.family().page_index(k) == page)
            .take(n)
            .collect()
    }

    #[test]
    fn updates_below_capacity_do_no_io() {
        let params = params_with_capacity(2, 0.05, 8);
        let mut sketch = BufferedSketch::in_memory(params, 7).unwrap();
        assert_eq!(sketch.capacity_entries(), 8);
        let keys = keys_for_page(&sketch, 0, 8);
        for &key in &keys[..7] {
            sketch.update(key).unwrap();
        }
        assert_eq!(sketch.io_stats().total(), 0);
        assert_eq!(sketch.pending_entries(), 7);

        // The eighth update to the page triggers exactly one flush.
        sketch.update(keys[7]).unwrap();
        let stats = sketch.io_stats();
        assert_eq!(stats.page_reads, 1);
        assert_eq!(stats.page_writes, 1);
        assert_eq!(sketch.sub_buffer(0).entry_count(), 0);
    }

    #[test]
    fn estimate_on_clean_page_is_one_read() {
        let params = params_with_capacity(4, 0.05, 16);
        let mut sketch = BufferedSketch::in_memory(params, 3).unwrap();
        assert_eq!(sketch.estimate(42).unwrap(), 0);
        let stats = sketch.io_stats();
        assert_eq!(stats.page_reads, 1);
        assert_eq!(stats.page_writes, 0);
    }

    #[test]
    fn estimate_applies_pending_entries() {
        let params = params_with_capacity(4, 0.05, 16);
        let mut sketch = BufferedSketch::in_memory(params, 3).unwrap();
        sketch.update(42).unwrap();
        sketch.reset_io_stats();

        assert!(sketch.estimate(42).unwrap() >= 1);
        let stats = sketch.io_stats();
        assert_eq!(stats.page_reads, 1);
        assert_eq!(stats.page_writes, 1);

        // Once applied, a repeat estimate is clean: one read, no write.
        sketch.reset_io_stats();
        assert!(sketch.estimate(42).unwrap() >= 1);
        let stats = sketch.io_stats();
        assert_eq!(stats.page_reads, 1);
        assert_eq!(stats.page_writes, 0);
    }

    #[test]
    fn flush_all_costs_one_read_write_per_dirty_page() {
        let params = params_with_capacity(8, 0.05, 64);
        let mut sketch = BufferedSketch::in_memory(params, 11).unwrap();
        sketch.flush_all().unwrap();
        assert_eq!(sketch.io_stats().total(), 0);

        for page in [1u64, 4, 6] {
            for key in keys_for_page(&sketch, page, 3) {
                sketch.update(key).unwrap();
            }
        }
        sketch.reset_io_stats();
        sketch.flush_all().unwrap();
        let stats = sketch.io_stats();
        assert_eq!(stats.page_reads, 3);
        assert_eq!(stats.page_writes, 3);
        assert_eq!(sketch.pending_entries(), 0);
    }

    #[test]
    fn matches_unbuffered_localized_reference_after_flush() {
        let params = params_with_capacity(4, 0.02, 8);
        let mut buffered = BufferedSketch::in_memory(params.clone(), 17).unwrap();
        let mut reference = CountMinSketch::new(params, HashMode::Localized, 17).unwrap();
        for (i, key) in uniform_keys(23, 10_000).enumerate() {
            let key = key % 512;
            let count = (i % 3 + 1) as u32;
            buffered.update_weighted(key, count).unwrap();
            reference.update_weighted(key, count).unwrap();
        }
        buffered.flush_all().unwrap();
        assert_eq!(buffered.dump_counters().unwrap(), reference.counters());
        assert_eq!(buffered.total_inserted(), reference.total_inserted());
    }

    #[test]
    fn io_report_predictions() {
        let params = params_with_capacity(4, 0.05, 8);
        let sketch = BufferedSketch::in_memory(params.clone(), 1).unwrap();
        let report = sketch.io_report();
        assert_eq!(report.page_reads, 0);
        assert_eq!(report.page_writes, 0);
        assert_eq!(report.updates_applied, 0);
        let expected = (params.page_count * 8 * params.depth as u64) as f64
            / params.buffer_bytes.unwrap() as f64;
        assert!((report.predicted_amortized_update_io - expected).abs() < 1e-12);
    }

    #[test]
    fn amortized_update_io_is_bounded_by_capacity_model() {
        let params = params_with_capacity(16, 0.05, 32);
        let mut sketch = BufferedSketch::in_memory(params.clone(), 5).unwrap();
        let capacity_total = 16 * 32u64;
        let inserts = capacity_total * 64;
        for key in uniform_keys(3, inserts) {
            sketch.update(key).unwrap();
        }
        sketch.flush_all().unwrap();
        let report = sketch.io_report();
        let measured = (report.page_reads + report.page_writes) as f64 / inserts as f64;
        let bound = 2.0 * sketch.entry_bytes() as f64 * params.page_count as f64
            / params.buffer_bytes.unwrap() as f64;
        assert!(
            measured <= bound * 1.05,
            "measured {measured} vs bound {bound}"
        );
    }

    #[test]
    fn overflow_during_flush_preserves_state() {
        // 1-byte cells saturate at 255; capacity 4 so the overflowing batch
        // arrives via an explicit flush.
        let base = SketchParams::from_pages(1, 0.5, 64, 1).unwrap();
        let params = base.with_buffer_bytes(4 * entry_bytes(1) as u64);
        let mut sketch = BufferedSketch::in_memory(params, 9).unwrap();
        // Hammer one key: 63 full flushes of 4 entries each = 252 applied.
        let key = 5u64;
        for _ in 0..252 {
            sketch.update(key).unwrap();
        }
        assert_eq!(sketch.pending_entries(), 0);
        for _ in 0..3 {
            sketch.update(key).unwrap(); // staged, below capacity
        }
        // Hitting capacity flushes, and applying 252 + 4 overflows the cell.
        let err = sketch.update(key).unwrap_err();
        assert!(matches!(err, Error::CounterOverflow { .. }));
        // The sub-buffer still holds what could not be applied, and the page
        // on storage still holds the last applied value.
        assert_eq!(sketch.pending_entries(), 4);
        sketch.buffers[0].clear();
        assert_eq!(sketch.estimate(key).unwrap(), 252);
    }

    #[test]
    fn rejects_zero_capacity_configs() {
        let params = SketchParams::from_pages(8, 0.05, 4096, 8)
            .unwrap()
            .with_buffer_bytes(16); // 2 bytes per page: below one entry
        assert!(matches!(
            BufferedSketch::in_memory(params, 0),
            Err(Error::UnsupportedConfig(_))
        ));

        let missing = SketchParams::from_pages(8, 0.05, 4096, 8).unwrap();
        assert!(BufferedSketch::in_memory(missing, 0).is_err());
    }

    #[test]
    fn file_round_trip_preserves_estimates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("buffered.sketch");
        let params = params_with_capacity(4, 0.05, 8);
        let mut sketch = BufferedSketch::create_file(&path, params, 31).unwrap();
        let keys: Vec<u64> = uniform_keys(13, 500).map(|k| k % 200).collect();
        for &key in &keys {
            sketch.update(key).unwrap();
        }
        sketch.flush_all().unwrap();
        let mut before = Vec::new();
        for key in 0..200u64 {
            before.push(sketch.estimate(key).unwrap());
        }
        sketch.close().unwrap();

        let mut reopened = BufferedSketch::open_file(&path, 1 << 16).unwrap();
        assert_eq!(reopened.total_inserted(), keys.len() as u64);
        for key in 0..200u64 {
            assert_eq!(reopened.estimate(key).unwrap(), before[key as usize]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        // Stepwise observational equivalence against the unbuffered
        // localized reference on random interleavings.
        #[test]
        fn equivalent_to_reference_at_every_step(
            seed in any::<u64>(),
            capacity in 1u64..12,
            pages in 2u64..9,
            ops in proptest::collection::vec((any::<bool>(), 0u64..100), 1..200),
        ) {
            let params = params_with_capacity(pages, 0.1, capacity);
            let mut buffered = BufferedSketch::in_memory(params.clone(), seed).unwrap();
            let mut reference = CountMinSketch::new(params, HashMode::Localized, seed).unwrap();
            for (is_update, key) in ops {
                if is_update {
                    buffered.update(key).unwrap();
                    reference.update(key).unwrap();
                } else {
                    prop_assert_eq!(buffered.estimate(key).unwrap(), reference.estimate(key));
                }
            }
            buffered.flush_all().unwrap();
            prop_assert_eq!(buffered.dump_counters().unwrap(), reference.counters().to_vec());
        }
    }
}
