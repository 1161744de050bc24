//! Block-oriented storage for counter matrices.
//!
//! The matrix is split into fixed-size pages. Within a page the cells are
//! column-first: all `depth` cells of one column are contiguous, so every
//! column — and therefore every localized probe set — lives in one page.
//! Cell (row `j`, global column `g`) is found at
//!
//! ```text
//! page   = g / columns_per_page
//! offset = ((g % columns_per_page) * depth + j) * cell_bytes
//! ```
//!
//! Backends count page reads and writes exactly: one counter tick per
//! `read_page`/`write_page` call. Header I/O is metadata and is not counted.
//! There is deliberately no page cache in here — the buffered sketch is the
//! cache, and a second one would distort the I/O accounting.
//!
//! # File format
//!
//! A sketch file is a header page followed by `page_count` data pages, all
//! `page_bytes` long. The header is little-endian:
//!
//! | offset | field           | type   |
//! |--------|-----------------|--------|
//! | 0      | magic `"BCMS"`  | 4 bytes|
//! | 4      | format version  | u32    |
//! | 8      | depth           | u32    |
//! | 12     | width           | u64    |
//! | 20     | cell bytes      | u32    |
//! | 24     | page bytes      | u32    |
//! | 28     | page count      | u64    |
//! | 36     | master seed     | u64    |
//! | 44     | localized flag  | u8     |
//! | 45     | total inserted  | u64    |
//!
//! The remainder of the header page is zero. The master seed fully determines
//! the hash family (see the hashing module for the derivation scheme), so a
//! reopened sketch probes the same cells as the process that wrote it.

use std::fs::{File, OpenOptions};
use std::os::unix::fs::FileExt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{self, SketchParams};

pub const MAGIC: [u8; 4] = *b"BCMS";
pub const FORMAT_VERSION: u32 = 1;
/// Bytes of the header page actually used by fields.
pub const HEADER_BYTES: usize = 53;

/// Page read/write counters. Monotone until `reset`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoStats {
    pub page_reads: u64,
    pub page_writes: u64,
}

impl IoStats {
    pub fn total(&self) -> u64 {
        self.page_reads + self.page_writes
    }
}

/// Geometry of the on-storage matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageLayout {
    pub page_bytes: u32,
    pub cell_bytes: u32,
    pub depth: u32,
    pub columns_per_page: u64,
    pub page_count: u64,
    pub pad_bytes_per_page: u32,
}

impl PageLayout {
    pub fn new(page_bytes: u32, cell_bytes: u32, depth: u32, page_count: u64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidParameter {
                param: "depth",
                reason: "must be at least 1".into(),
            });
        }
        if page_count == 0 {
            return Err(Error::InvalidParameter {
                param: "page_count",
                reason: "must be at least 1".into(),
            });
        }
        let columns_per_page = params::columns_per_page(page_bytes, cell_bytes, depth)?;
        let used = columns_per_page as u32 * cell_bytes * depth;
        Ok(Self {
            page_bytes,
            cell_bytes,
            depth,
            columns_per_page,
            page_count,
            pad_bytes_per_page: page_bytes - used,
        })
    }

    pub fn from_params(params: &SketchParams) -> Result<Self> {
        let layout = Self::new(
            params.page_bytes,
            params.cell_bytes,
            params.depth,
            params.page_count,
        )?;
        debug_assert_eq!(layout.columns_per_page, params.columns_per_page);
        Ok(layout)
    }

    pub fn width(&self) -> u64 {
        self.page_count * self.columns_per_page
    }

    /// Page id and in-page byte offset of a cell.
    pub fn locate_cell(&self, row: u32, global_column: u64) -> Result<(u64, usize)> {
        if row >= self.depth || global_column >= self.width() {
            return Err(Error::CellOutOfRange {
                row,
                column: global_column,
                depth: self.depth,
                width: self.width(),
            });
        }
        let page = global_column / self.columns_per_page;
        let local = global_column % self.columns_per_page;
        Ok((page, self.cell_offset(row, local)))
    }

    /// Byte offset of (row, local column) inside its page.
    #[inline]
    pub fn cell_offset(&self, row: u32, local_column: u64) -> usize {
        debug_assert!(row < self.depth);
        debug_assert!(local_column < self.columns_per_page);
        (local_column as usize * self.depth as usize + row as usize) * self.cell_bytes as usize
    }

    /// Reads the counter at (row, local column) out of a page buffer.
    #[inline]
    pub fn get_cell(&self, page: &[u8], row: u32, local_column: u64) -> u64 {
        let start = self.cell_offset(row, local_column);
        let mut raw = [0u8; 8];
        raw[..self.cell_bytes as usize]
            .copy_from_slice(&page[start..start + self.cell_bytes as usize]);
        u64::from_le_bytes(raw)
    }

    /// Writes a counter value into a page buffer. The value must fit the
    /// cell; overflow policy lives with the sketches, which check before
    /// calling this.
    #[inline]
    pub fn put_cell(&self, page: &mut [u8], row: u32, local_column: u64, value: u64) {
        debug_assert!(value <= params::cell_limit(self.cell_bytes));
        let start = self.cell_offset(row, local_column);
        page[start..start + self.cell_bytes as usize]
            .copy_from_slice(&value.to_le_bytes()[..self.cell_bytes as usize]);
    }

    pub fn cell_limit(&self) -> u64 {
        params::cell_limit(self.cell_bytes)
    }
}

/// Fields persisted in a sketch file's header page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchHeader {
    pub depth: u32,
    pub width: u64,
    pub cell_bytes: u32,
    pub page_bytes: u32,
    pub page_count: u64,
    pub master_seed: u64,
    pub localized: bool,
    pub total_inserted: u64,
}

impl SketchHeader {
    pub fn for_params(params: &SketchParams, master_seed: u64, localized: bool) -> Self {
        Self {
            depth: params.depth,
            width: params.width,
            cell_bytes: params.cell_bytes,
            page_bytes: params.page_bytes,
            page_count: params.page_count,
            master_seed,
            localized,
            total_inserted: 0,
        }
    }

    fn encode(&self, buf: &mut [u8]) {
        buf.fill(0);
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf[8..12].copy_from_slice(&self.depth.to_le_bytes());
        buf[12..20].copy_from_slice(&self.width.to_le_bytes());
        buf[20..24].copy_from_slice(&self.cell_bytes.to_le_bytes());
        buf[24..28].copy_from_slice(&self.page_bytes.to_le_bytes());
        buf[28..36].copy_from_slice(&self.page_count.to_le_bytes());
        buf[36..44].copy_from_slice(&self.master_seed.to_le_bytes());
        buf[44] = self.localized as u8;
        buf[45..53].copy_from_slice(&self.total_inserted.to_le_bytes());
    }

    fn decode(buf: &[u8]) -> Result<Self> {
        let field = |range: std::ops::Range<usize>| -> &[u8] { &buf[range] };
        if field(0..4) != MAGIC {
            return Err(Error::BadSketchFile("bad magic".into()));
        }
        let version = u32::from_le_bytes(field(4..8).try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::BadSketchFile(format!(
                "unsupported format version {version}"
            )));
        }
        let header = Self {
            depth: u32::from_le_bytes(field(8..12).try_into().unwrap()),
            width: u64::from_le_bytes(field(12..20).try_into().unwrap()),
            cell_bytes: u32::from_le_bytes(field(20..24).try_into().unwrap()),
            page_bytes: u32::from_le_bytes(field(24..28).try_into().unwrap()),
            page_count: u64::from_le_bytes(field(28..36).try_into().unwrap()),
            master_seed: u64::from_le_bytes(field(36..44).try_into().unwrap()),
            localized: buf[44] != 0,
            total_inserted: u64::from_le_bytes(field(45..53).try_into().unwrap()),
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        let layout = PageLayout::new(self.page_bytes, self.cell_bytes, self.depth, self.page_count)
            .map_err(|e| Error::BadSketchFile(format!("inconsistent geometry: {e}")))?;
        if layout.width() != self.width {
            return Err(Error::BadSketchFile(format!(
                "width {} does not equal page_count * columns_per_page = {}",
                self.width,
                layout.width()
            )));
        }
        Ok(())
    }

    /// Reconstructs sketch parameters from a persisted header. The error
    /// rates are the ones implied by the geometry (`e / width` and
    /// `exp(-depth)`); the original inputs are not stored.
    pub fn to_params(&self) -> Result<SketchParams> {
        self.validate()?;
        let layout = PageLayout::new(self.page_bytes, self.cell_bytes, self.depth, self.page_count)?;
        Ok(SketchParams {
            epsilon: std::f64::consts::E / self.width as f64,
            delta: (-(self.depth as f64)).exp(),
            depth: self.depth,
            raw_width: self.width,
            width: self.width,
            cell_bytes: self.cell_bytes,
            page_bytes: self.page_bytes,
            page_count: self.page_count,
            columns_per_page: layout.columns_per_page,
            element_budget: None,
            buffer_bytes: None,
        })
    }
}

/// Page-granular storage with exact I/O accounting.
///
/// Backends are used by exactly one sketch at a time; there is no internal
/// locking and counters are plain integers.
pub trait StorageBackend {
    fn page_bytes(&self) -> usize;
    fn page_count(&self) -> u64;

    /// Copies page `page_id` into `buf` and counts one page read.
    fn read_page(&mut self, page_id: u64, buf: &mut [u8]) -> Result<()>;

    /// Persists `buf` as page `page_id` and counts one page write.
    fn write_page(&mut self, page_id: u64, buf: &[u8]) -> Result<()>;

    fn io_stats(&self) -> IoStats;
    fn reset_io_stats(&mut self);

    /// Records the stream total in the store's metadata, if it keeps any.
    /// Not counted as page I/O.
    fn persist_total_inserted(&mut self, total: u64) -> Result<()>;
}

impl<T: StorageBackend + ?Sized> StorageBackend for Box<T> {
    fn page_bytes(&self) -> usize {
        (**self).page_bytes()
    }
    fn page_count(&self) -> u64 {
        (**self).page_count()
    }
    fn read_page(&mut self, page_id: u64, buf: &mut [u8]) -> Result<()> {
        (**self).read_page(page_id, buf)
    }
    fn write_page(&mut self, page_id: u64, buf: &[u8]) -> Result<()> {
        (**self).write_page(page_id, buf)
    }
    fn io_stats(&self) -> IoStats {
        (**self).io_stats()
    }
    fn reset_io_stats(&mut self) {
        (**self).reset_io_stats()
    }
    fn persist_total_inserted(&mut self, total: u64) -> Result<()> {
        (**self).persist_total_inserted(total)
    }
}

fn check_access(page_id: u64, page_count: u64, buf_len: usize, page_bytes: usize) -> Result<()> {
    if page_id >= page_count {
        return Err(Error::PageOutOfRange {
            page_id,
            page_count,
        });
    }
    if buf_len != page_bytes {
        return Err(Error::PageSizeMismatch {
            expected: page_bytes,
            got: buf_len,
        });
    }
    Ok(())
}

/// Volatile backend: one flat allocation, zero-initialized.
#[derive(Debug)]
pub struct MemoryBackend {
    page_bytes: usize,
    page_count: u64,
    data: Vec<u8>,
    stats: IoStats,
    total_inserted: u64,
}

impl MemoryBackend {
    pub fn new(page_bytes: u32, page_count: u64) -> Result<Self> {
        let bytes = (page_bytes as u64)
            .checked_mul(page_count)
            .and_then(|b| usize::try_from(b).ok())
            .ok_or_else(|| Error::InvalidParameter {
                param: "page_count",
                reason: "store size overflows usize".into(),
            })?;
        Ok(Self {
            page_bytes: page_bytes as usize,
            page_count,
            data: vec![0u8; bytes],
            stats: IoStats::default(),
            total_inserted: 0,
        })
    }

    pub fn for_params(params: &SketchParams) -> Result<Self> {
        Self::new(params.page_bytes, params.page_count)
    }

    pub fn total_inserted(&self) -> u64 {
        self.total_inserted
    }
}

impl StorageBackend for MemoryBackend {
    fn page_bytes(&self) -> usize {
        self.page_bytes
    }

    fn page_count(&self) -> u64 {
        self.page_count
    }

    fn read_page(&mut self, page_id: u64, buf: &mut [u8]) -> Result<()> {
        check_access(page_id, self.page_count, buf.len(), self.page_bytes)?;
        let start = page_id as usize * self.page_bytes;
        buf.copy_from_slice(&self.data[start..start + self.page_bytes]);
        self.stats.page_reads += 1;
        Ok(())
    }

    fn write_page(&mut self, page_id: u64, buf: &[u8]) -> Result<()> {
        check_access(page_id, self.page_count, buf.len(), self.page_bytes)?;
        let start = page_id as usize * self.page_bytes;
        self.data[start..start + self.page_bytes].copy_from_slice(buf);
        self.stats.page_writes += 1;
        Ok(())
    }

    fn io_stats(&self) -> IoStats {
        self.stats
    }

    fn reset_io_stats(&mut self) {
        self.stats = IoStats::default();
    }

    fn persist_total_inserted(&mut self, total: u64) -> Result<()> {
        self.total_inserted = total;
        Ok(())
    }
}

/// File backend: a header page followed by the data pages, accessed with
/// positional reads and writes. The I/O unit is the logical page; device
/// alignment below that is out of scope.
#[derive(Debug)]
pub struct FileBackend {
    file: File,
    header: SketchHeader,
    stats: IoStats,
}

impl FileBackend {
    /// Creates (or truncates) a sketch file with an all-zero matrix.
    pub fn create<P: AsRef<Path>>(path: P, header: SketchHeader) -> Result<Self> {
        header.validate().map_err(|e| match e {
            Error::BadSketchFile(reason) => Error::InvalidParameter {
                param: "header",
                reason,
            },
            other => other,
        })?;
        if (header.page_bytes as usize) < HEADER_BYTES {
            return Err(Error::InvalidParameter {
                param: "page_bytes",
                reason: format!("must be at least {HEADER_BYTES} to hold the header"),
            });
        }
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        let mut page = vec![0u8; header.page_bytes as usize];
        header.encode(&mut page);
        file.write_all_at(&page, 0)?;
        // Extending with set_len zero-fills the data pages.
        file.set_len((1 + header.page_count) * header.page_bytes as u64)?;
        Ok(Self {
            file,
            header,
            stats: IoStats::default(),
        })
    }

    /// Opens an existing sketch file, validating magic, version and that the
    /// file length matches the recorded geometry.
    pub fn open<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut raw = [0u8; HEADER_BYTES];
        file.read_exact_at(&mut raw, 0).map_err(|_| {
            Error::BadSketchFile("file too short for a header".into())
        })?;
        let header = SketchHeader::decode(&raw)?;
        let expected_len = (1 + header.page_count) * header.page_bytes as u64;
        let actual_len = file.metadata()?.len();
        if actual_len != expected_len {
            return Err(Error::BadSketchFile(format!(
                "file is {actual_len} bytes, geometry implies {expected_len}"
            )));
        }
        Ok(Self {
            file,
            header,
            stats: IoStats::default(),
        })
    }

    pub fn header(&self) -> &SketchHeader {
        &self.header
    }

    fn page_start(&self, page_id: u64) -> u64 {
        (1 + page_id) * self.header.page_bytes as u64
    }
}

impl StorageBackend for FileBackend {
    fn page_bytes(&self) -> usize {
        self.header.page_bytes as usize
    }

    fn page_count(&self) -> u64 {
        self.header.page_count
    }

    fn read_page(&mut self, page_id: u64, buf: &mut [u8]) -> Result<()> {
        check_access(page_id, self.header.page_count, buf.len(), self.page_bytes())?;
        self.file
            .read_exact_at(buf, self.page_start(page_id))
            .map_err(|source| Error::PageIo { page_id, source })?;
        self.stats.page_reads += 1;
        Ok(())
    }

    fn write_page(&mut self, page_id: u64, buf: &[u8]) -> Result<()> {
        check_access(page_id, self.header.page_count, buf.len(), self.page_bytes())?;
        self.file
            .write_all_at(buf, self.page_start(page_id))
            .map_err(|source| Error::PageIo { page_id, source })?;
        self.stats.page_writes += 1;
        Ok(())
    }

    fn io_stats(&self) -> IoStats {
        self.stats
    }

    fn reset_io_stats(&mut self) {
        self.stats = IoStats::default();
    }

    fn persist_total_inserted(&mut self, total: u64) -> Result<()> {
        self.header.total_inserted = total;
        let mut page = vec![0u8; self.header.page_bytes as usize];
        self.header.encode(&mut page);
        self.file.write_all_at(&page, 0)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn layout_5x2pages() -> PageLayout {
        // depth 5, 8-byte cells, 4096-byte pages: 102 columns, 16 pad bytes
        PageLayout::new(4096, 8, 5, 2).unwrap()
    }

    #[test]
    fn layout_accounts_for_every_byte() {
        let layout = layout_5x2pages();
        assert_eq!(layout.columns_per_page, 102);
        assert_eq!(layout.pad_bytes_per_page, 16);
        assert_eq!(
            layout.columns_per_page as u32 * layout.depth * layout.cell_bytes
                + layout.pad_bytes_per_page,
            layout.page_bytes
        );
        assert!(layout.pad_bytes_per_page < layout.depth * layout.cell_bytes);
    }

    #[test]
    fn locate_cell_examples() {
        let layout = layout_5x2pages();
        assert_eq!(layout.locate_cell(0, 0).unwrap(), (0, 0));
        // Hand evaluation: column 1 starts at byte 1*5*8 = 40, row 2 adds 2*8.
        assert_eq!(layout.locate_cell(2, 1).unwrap(), (0, 56));
        // First column of the second page.
        assert_eq!(layout.locate_cell(0, 102).unwrap(), (1, 0));
        assert!(layout.locate_cell(5, 0).is_err());
        assert!(layout.locate_cell(0, 204).is_err());
    }

    #[test]
    fn addresses_are_bijective_and_in_bounds() {
        let layout = layout_5x2pages();
        let mut seen = HashSet::new();
        for row in 0..layout.depth {
            for column in 0..layout.width() {
                let (page, offset) = layout.locate_cell(row, column).unwrap();
                assert!(page < layout.page_count);
                assert!(offset + layout.cell_bytes as usize <= layout.page_bytes as usize);
                assert!(seen.insert((page, offset)), "duplicate address");
            }
        }
        assert_eq!(seen.len(), (layout.depth as u64 * layout.width()) as usize);
    }

    #[test]
    fn cell_codec_round_trips() {
        for cell_bytes in [1u32, 2, 4, 8] {
            let layout = PageLayout::new(64, cell_bytes, 2, 1).unwrap();
            let mut page = vec![0u8; 64];
            let limit = layout.cell_limit();
            layout.put_cell(&mut page, 1, 0, limit);
            assert_eq!(layout.get_cell(&page, 1, 0), limit);
            assert_eq!(layout.get_cell(&page, 0, 0), 0);
        }
    }

    #[test]
    fn memory_backend_round_trip_and_counters() {
        let mut store = MemoryBackend::new(128, 4).unwrap();
        let mut buf = vec![0u8; 128];
        store.read_page(0, &mut buf).unwrap();
        assert!(buf.iter().all(|&b| b == 0));
        assert_eq!(store.io_stats().page_reads, 1);

        let payload = vec![0xabu8; 128];
        store.write_page(3, &payload).unwrap();
        store.read_page(3, &mut buf).unwrap();
        assert_eq!(buf, payload);
        // Other pages untouched.
        store.read_page(2, &mut buf).unwrap();
        assert!(buf.iter().all(|&b| b == 0));
        assert_eq!(
            store.io_stats(),
            IoStats {
                page_reads: 3,
                page_writes: 1
            }
        );

        assert!(matches!(
            store.read_page(4, &mut buf),
            Err(Error::PageOutOfRange { .. })
        ));
        let short = vec![0u8; 64];
        assert!(matches!(
            store.write_page(0, &short),
            Err(Error::PageSizeMismatch { .. })
        ));
    }

    #[test]
    fn file_backend_round_trip_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.sketch");
        let header = SketchHeader {
            depth: 2,
            width: 8,
            cell_bytes: 8,
            page_bytes: 64,
            page_count: 2,
            master_seed: 77,
            localized: true,
            total_inserted: 0,
        };
        let mut store = FileBackend::create(&path, header.clone()).unwrap();
        let mut buf = vec![0u8; 64];
        store.read_page(1, &mut buf).unwrap();
        assert!(buf.iter().all(|&b| b == 0));

        let payload: Vec<u8> = (0..64).map(|i| i as u8).collect();
        store.write_page(1, &payload).unwrap();
        store.persist_total_inserted(99).unwrap();
        drop(store);

        let mut reopened = FileBackend::open(&path).unwrap();
        assert_eq!(reopened.header().master_seed, 77);
        assert_eq!(reopened.header().total_inserted, 99);
        assert!(reopened.header().localized);
        reopened.read_page(1, &mut buf).unwrap();
        assert_eq!(buf, payload);
        reopened.read_page(0, &mut buf).unwrap();
        assert!(buf.iter().all(|&b| b == 0));
    }

    #[test]
    fn open_rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.sketch");

        std::fs::write(&path, b"not a sketch").unwrap();
        assert!(matches!(
            FileBackend::open(&path),
            Err(Error::BadSketchFile(_))
        ));

        let header = SketchHeader {
            depth: 2,
            width: 8,
            cell_bytes: 8,
            page_bytes: 64,
            page_count: 2,
            master_seed: 0,
            localized: false,
            total_inserted: 0,
        };
        FileBackend::create(&path, header).unwrap();
        // Truncate: length no longer matches geometry.
        let file = OpenOptions::new().write(true).open(&path).unwrap();
        file.set_len(100).unwrap();
        drop(file);
        assert!(matches!(
            FileBackend::open(&path),
            Err(Error::BadSketchFile(_))
        ));
    }

    #[test]
    fn header_page_must_fit_fields() {
        let dir = tempfile::tempdir().unwrap();
        let header = SketchHeader {
            depth: 1,
            width: 4,
            cell_bytes: 8,
            page_bytes: 32,
            page_count: 1,
            master_seed: 0,
            localized: false,
            total_inserted: 0,
        };
        assert!(FileBackend::create(dir.path().join("tiny.sketch"), header).is_err());
    }

    #[test]
    fn header_round_trips_through_params() {
        let params = SketchParams::from_pages(4, 0.05, 4096, 8).unwrap();
        let header = SketchHeader::for_params(&params, 123, true);
        let restored = header.to_params().unwrap();
        assert_eq!(restored.depth, params.depth);
        assert_eq!(restored.width, params.width);
        assert_eq!(restored.page_count, params.page_count);
        assert_eq!(restored.columns_per_page, params.columns_per_page);
    }

    proptest! {
        // Random write/read pairs over random pages round-trip and leave
        // other pages untouched.
        #[test]
        fn random_page_round_trips(
            writes in proptest::collection::vec((0u64..8, proptest::collection::vec(any::<u8>(), 96)), 1..40)
        ) {
            let mut store = MemoryBackend::new(96, 8).unwrap();
            let mut shadow: Vec<Vec<u8>> = vec![vec![0u8; 96]; 8];
            for (page, payload) in &writes {
                store.write_page(*page, payload).unwrap();
                shadow[*page as usize] = payload.clone();
            }
            let mut buf = vec![0u8; 96];
            for page in 0..8u64 {
                store.read_page(page, &mut buf).unwrap();
                prop_assert_eq!(&buf, &shadow[page as usize]);
            }
        }

        #[test]
        fn random_layouts_are_bijective(
            page_bytes in 32u32..512,
            cell_bytes in 1u32..=8,
            depth in 1u32..=6,
            page_count in 1u64..5,
        ) {
            prop_assume!(page_bytes as u64 >= cell_bytes as u64 * depth as u64);
            let layout = PageLayout::new(page_bytes, cell_bytes, depth, page_count).unwrap();
            let mut seen = HashSet::new();
            for row in 0..layout.depth {
                for column in 0..layout.width() {
                    let addr = layout.locate_cell(row, column).unwrap();
                    prop_assert!(addr.1 + layout.cell_bytes as usize <= layout.page_bytes as usize);
                    prop_assert!(seen.insert(addr));
                }
            }
        }
    }
}
