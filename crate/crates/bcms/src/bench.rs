//! Benchmark harness: configures sketches, drives insert/query/overestimate
//! workloads over both variants and both backends, and reports throughput
//! together with exact page-I/O counts and the buffer-capacity model
//! prediction.
//!
//! Workloads are uniform 64-bit keys generated on the fly from the run seed,
//! so a run stores nothing but the sketch itself and two runs with the same
//! seed touch identical pages. Wall-clock numbers are reported but never
//! asserted anywhere — hardware-independent I/O counts are the comparable
//! quantity.

use std::path::PathBuf;
use std::time::Instant;

use crate::buffered::BufferedSketch;
use crate::cms::{CountMinSketch, HashMode, PagedCms};
use crate::error::{Error, Result};
use crate::paged_store::{FileBackend, MemoryBackend, SketchHeader, StorageBackend};
use crate::params::SketchParams;
use crate::verify::{self, uniform_keys, ErrorReport, ExactCounter};

const TAG_FAMILY: u64 = 0x62656e6368; // "bench"
const TAG_INSERT: u64 = 0x696e73;
const TAG_QUERY: u64 = 0x717279;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Classical,
    Buffered,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Classical => "classical",
            Variant::Buffered => "buffered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Memory,
    File,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::Memory => "memory",
            BackendKind::File => "file",
        }
    }
}

/// One benchmark run's configuration.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub variant: Variant,
    pub backend: BackendKind,
    pub size_bytes: u64,
    pub delta: f64,
    pub max_overestimate: u64,
    pub page_bytes: u32,
    pub cell_bytes: u32,
    pub buffer_bytes: u64,
    /// Inserts to perform; defaults to the derived element budget.
    pub elements: Option<u64>,
    pub queries: u64,
    pub seed: u64,
    /// Backing file for the file backend; a scratch file in the system temp
    /// directory when unset.
    pub sketch_path: Option<PathBuf>,
}

impl BenchConfig {
    pub fn new(variant: Variant, backend: BackendKind, size_bytes: u64) -> Self {
        Self {
            variant,
            backend,
            size_bytes,
            delta: 0.01,
            max_overestimate: 8,
            page_bytes: crate::params::DEFAULT_PAGE_BYTES,
            cell_bytes: crate::params::DEFAULT_CELL_BYTES,
            buffer_bytes: (size_bytes / 4).max(1),
            elements: None,
            queries: 10_000,
            seed: 42,
            sketch_path: None,
        }
    }

    pub fn params(&self) -> Result<SketchParams> {
        let params = SketchParams::from_size(
            self.size_bytes,
            self.delta,
            self.max_overestimate,
            self.page_bytes,
            self.cell_bytes,
        )?;
        if self.variant == Variant::Buffered {
            if self.buffer_bytes >= self.size_bytes {
                return Err(Error::InvalidParameter {
                    param: "buffer_bytes",
                    reason: format!(
                        "{} is not below the sketch size {}; the buffered variant models a \
                         sketch larger than memory",
                        self.buffer_bytes, self.size_bytes
                    ),
                });
            }
            Ok(params.with_buffer_bytes(self.buffer_bytes))
        } else {
            Ok(params)
        }
    }

    fn element_count(&self, params: &SketchParams) -> u64 {
        self.elements
            .or(params.element_budget)
            .expect("size-derived params always carry a budget")
    }
}

/// Measured outcome of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub ops: u64,
    pub wall_seconds: f64,
    pub ops_per_second: f64,
    pub page_reads: u64,
    pub page_writes: u64,
    /// `(page_reads + page_writes) / ops`.
    pub amortized_io_per_op: f64,
    /// Model cost per op: the buffer-capacity prediction for the buffered
    /// variant, `2 * depth` page touches (or `depth` for queries) for the
    /// classical one.
    pub predicted_io_per_op: f64,
}

impl BenchResult {
    fn from_counters(
        ops: u64,
        wall_seconds: f64,
        stats: crate::paged_store::IoStats,
        predicted_io_per_op: f64,
    ) -> Self {
        Self {
            ops,
            wall_seconds,
            ops_per_second: if wall_seconds > 0.0 {
                ops as f64 / wall_seconds
            } else {
                0.0
            },
            page_reads: stats.page_reads,
            page_writes: stats.page_writes,
            amortized_io_per_op: if ops > 0 {
                stats.total() as f64 / ops as f64
            } else {
                0.0
            },
            predicted_io_per_op,
        }
    }
}

pub const CSV_HEADER: &str =
    "variant,backend,sizeBytes,delta,O,seed,ops,wallSeconds,opsPerSec,pageReads,pageWrites,amortizedIo,predictedIo";

/// Renders one result row. Columns other than the wall-clock pair are
/// deterministic for a fixed seed.
pub fn csv_row(config: &BenchConfig, result: &BenchResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{:.6},{:.1},{},{},{},{}",
        config.variant.as_str(),
        config.backend.as_str(),
        config.size_bytes,
        config.delta,
        config.max_overestimate,
        config.seed,
        result.ops,
        result.wall_seconds,
        result.ops_per_second,
        result.page_reads,
        result.page_writes,
        result.amortized_io_per_op,
        result.predicted_io_per_op,
    )
}

/// Derives the sketch dimensions a size budget allows — the first thing any
/// run does, exposed on its own so configurations can be inspected.
pub fn configure(
    size_bytes: u64,
    delta: f64,
    max_overestimate: u64,
    page_bytes: u32,
    cell_bytes: u32,
) -> Result<SketchParams> {
    SketchParams::from_size(size_bytes, delta, max_overestimate, page_bytes, cell_bytes)
}

/// Removes a scratch sketch file when the run made one up.
struct Scratch {
    path: PathBuf,
    owned: bool,
}

impl Scratch {
    fn for_config(config: &BenchConfig) -> Self {
        match &config.sketch_path {
            Some(path) => Self {
                path: path.clone(),
                owned: false,
            },
            None => Self {
                path: std::env::temp_dir().join(format!(
                    "bcms-{}-{}-{}.sketch",
                    config.variant.as_str(),
                    std::process::id(),
                    config.seed
                )),
                owned: true,
            },
        }
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        if self.owned {
            let _ = std::fs::remove_file(&self.path);
        }
    }
}

enum AnySketch {
    Classical(PagedCms<Box<dyn StorageBackend>>),
    Buffered(BufferedSketch<Box<dyn StorageBackend>>),
}

impl AnySketch {
    fn build(config: &BenchConfig, params: &SketchParams, scratch: &Scratch) -> Result<Self> {
        let master_seed = verify::derived_seed(config.seed, TAG_FAMILY);
        let localized = config.variant == Variant::Buffered;
        let store: Box<dyn StorageBackend> = match config.backend {
            BackendKind::Memory => Box::new(MemoryBackend::for_params(params)?),
            BackendKind::File => {
                let header = SketchHeader::for_params(params, master_seed, localized);
                Box::new(FileBackend::create(&scratch.path, header)?)
            }
        };
        Ok(match config.variant {
            Variant::Classical => AnySketch::Classical(PagedCms::new(
                params.clone(),
                HashMode::Classical,
                master_seed,
                store,
            )?),
            Variant::Buffered => {
                AnySketch::Buffered(BufferedSketch::new(params.clone(), master_seed, store)?)
            }
        })
    }

    fn update(&mut self, key: u64) -> Result<()> {
        match self {
            AnySketch::Classical(s) => s.update(key),
            AnySketch::Buffered(s) => s.update(key),
        }
    }

    fn estimate(&mut self, key: u64) -> Result<u64> {
        match self {
            AnySketch::Classical(s) => s.estimate(key),
            AnySketch::Buffered(s) => s.estimate(key),
        }
    }

    fn flush(&mut self) -> Result<()> {
        match self {
            AnySketch::Classical(_) => Ok(()),
            AnySketch::Buffered(s) => s.flush_all(),
        }
    }

    fn io_stats(&self) -> crate::paged_store::IoStats {
        match self {
            AnySketch::Classical(s) => s.io_stats(),
            AnySketch::Buffered(s) => s.io_stats(),
        }
    }

    fn reset_io_stats(&mut self) {
        match self {
            AnySketch::Classical(s) => s.reset_io_stats(),
            AnySketch::Buffered(s) => s.reset_io_stats(),
        }
    }

    fn predicted_update_io(&self) -> f64 {
        match self {
            AnySketch::Classical(s) => 2.0 * s.params().depth as f64,
            AnySketch::Buffered(s) => s.io_report().predicted_amortized_update_io,
        }
    }

    fn predicted_query_io(&self) -> f64 {
        match self {
            AnySketch::Classical(s) => s.params().depth as f64,
            AnySketch::Buffered(_) => 1.0,
        }
    }
}

/// Inserts the configured number of uniform keys and reports throughput and
/// I/O. For the buffered variant the final drain of the sub-buffers is part
/// of the timed region — a run is not over until storage holds every update.
pub fn insert_bench(config: &BenchConfig) -> Result<(SketchParams, BenchResult)> {
    let params = config.params()?;
    let scratch = Scratch::for_config(config);
    let mut sketch = AnySketch::build(config, &params, &scratch)?;
    let elements = config.element_count(&params);
    let insert_seed = verify::derived_seed(config.seed, TAG_INSERT);

    let start = Instant::now();
    for key in uniform_keys(insert_seed, elements) {
        sketch.update(key)?;
    }
    sketch.flush()?;
    let wall = start.elapsed().as_secs_f64();

    let result = BenchResult::from_counters(
        elements,
        wall,
        sketch.io_stats(),
        sketch.predicted_update_io(),
    );
    Ok((params, result))
}

/// Populates the sketch (insert phase, untimed result), then times
/// `queries` estimates of fresh uniform keys — mostly misses, as in a query
/// workload against a populated sketch. I/O counters are reset between the
/// phases so the result reflects queries alone.
pub fn query_bench(config: &BenchConfig) -> Result<(SketchParams, BenchResult)> {
    let params = config.params()?;
    let scratch = Scratch::for_config(config);
    let mut sketch = AnySketch::build(config, &params, &scratch)?;
    let elements = config.element_count(&params);
    let insert_seed = verify::derived_seed(config.seed, TAG_INSERT);
    for key in uniform_keys(insert_seed, elements) {
        sketch.update(key)?;
    }
    sketch.flush()?;
    sketch.reset_io_stats();

    let query_seed = verify::derived_seed(config.seed, TAG_QUERY);
    let start = Instant::now();
    let mut checksum = 0u64;
    for key in uniform_keys(query_seed, config.queries) {
        checksum = checksum.wrapping_add(sketch.estimate(key)?);
    }
    let wall = start.elapsed().as_secs_f64();
    std::hint::black_box(checksum);

    let result = BenchResult::from_counters(
        config.queries,
        wall,
        sketch.io_stats(),
        sketch.predicted_query_io(),
    );
    Ok((params, result))
}

/// Paired overestimate reports for the two variants.
#[derive(Debug, Clone)]
pub struct OverestimatePair {
    pub params: SketchParams,
    pub elements: u64,
    /// `ceil(epsilon * n)`, the guarantee threshold for this run.
    pub threshold: u64,
    pub classical: ErrorReport,
    pub buffered: ErrorReport,
}

/// Feeds the identical workload to a classical sketch and a buffered
/// localized sketch (same hash master seed), then measures each variant's
/// overestimates against the exact oracle.
///
/// The classical reference is the in-memory matrix — its report depends only
/// on cell values, not on where they are stored. The buffered variant runs
/// over the configured backend.
pub fn overestimate_bench(config: &BenchConfig) -> Result<OverestimatePair> {
    let params = config
        .params()?
        .with_buffer_bytes(config.buffer_bytes.max(1));
    let master_seed = verify::derived_seed(config.seed, TAG_FAMILY);
    let insert_seed = verify::derived_seed(config.seed, TAG_INSERT);
    let elements = config.element_count(&params);

    let mut classical = CountMinSketch::new(params.clone(), HashMode::Classical, master_seed)?;
    let scratch = Scratch::for_config(config);
    let store: Box<dyn StorageBackend> = match config.backend {
        BackendKind::Memory => Box::new(MemoryBackend::for_params(&params)?),
        BackendKind::File => {
            let header = SketchHeader::for_params(&params, master_seed, true);
            Box::new(FileBackend::create(&scratch.path, header)?)
        }
    };
    let mut buffered = BufferedSketch::new(params.clone(), master_seed, store)?;

    let mut oracle = ExactCounter::new();
    for key in uniform_keys(insert_seed, elements) {
        classical.update(key)?;
        buffered.update(key)?;
        oracle.record(key, 1);
    }
    buffered.flush_all()?;

    let threshold = (params.epsilon * elements as f64).ceil() as u64;
    let classical_report =
        verify::overestimate_stats(&oracle, threshold, |key| Ok(classical.estimate(key)))?;
    let buffered_report =
        verify::overestimate_stats(&oracle, threshold, |key| buffered.estimate(key))?;

    Ok(OverestimatePair {
        params,
        elements,
        threshold,
        classical: classical_report,
        buffered: buffered_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(variant: Variant) -> BenchConfig {
        let mut config = BenchConfig::new(variant, BackendKind::Memory, 256 * 1024);
        config.buffer_bytes = 64 * 1024;
        config.elements = Some(20_000);
        config.queries = 2_000;
        config
    }

    #[test]
    fn insert_bench_is_deterministic_up_to_wall_clock() {
        let config = small_config(Variant::Buffered);
        let (_, a) = insert_bench(&config).unwrap();
        let (_, b) = insert_bench(&config).unwrap();
        assert_eq!(a.ops, b.ops);
        assert_eq!(a.page_reads, b.page_reads);
        assert_eq!(a.page_writes, b.page_writes);
        assert_eq!(csv_row(&config, &a).split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn buffered_run_below_capacity_only_flushes_at_the_end() {
        let mut config = small_config(Variant::Buffered);
        // Keep the workload under one sub-buffer fill per page.
        config.elements = Some(100);
        let (params, result) = insert_bench(&config).unwrap();
        assert!(params.page_count > 1);
        // Every page I/O comes from the final flush: one read and one write
        // per dirty page.
        assert_eq!(result.page_reads, result.page_writes);
        assert!(result.page_reads <= 100);
    }

    #[test]
    fn classical_insert_touches_pages_per_update() {
        let mut config = small_config(Variant::Classical);
        config.backend = BackendKind::File;
        config.elements = Some(500);
        let (params, result) = insert_bench(&config).unwrap();
        // At least one page per update, at most depth, and writes mirror reads.
        assert!(result.page_reads >= 500);
        assert!(result.page_reads <= 500 * params.depth as u64);
        assert_eq!(result.page_writes, result.page_reads);
    }

    #[test]
    fn buffered_queries_cost_exactly_one_read() {
        let config = small_config(Variant::Buffered);
        let (_, result) = query_bench(&config).unwrap();
        assert_eq!(result.page_reads, config.queries);
        assert_eq!(result.page_writes, 0);
        assert_eq!(result.predicted_io_per_op, 1.0);
    }

    #[test]
    fn zero_queries_produce_zero_io() {
        let mut config = small_config(Variant::Buffered);
        config.queries = 0;
        let (_, result) = query_bench(&config).unwrap();
        assert_eq!(result.page_reads + result.page_writes, 0);
        assert_eq!(result.ops, 0);
    }

    #[test]
    fn buffered_requires_buffer_below_sketch_size() {
        let mut config = small_config(Variant::Buffered);
        config.buffer_bytes = config.size_bytes;
        assert!(insert_bench(&config).is_err());
    }

    #[test]
    fn overestimate_bench_pairs_the_variants() {
        let mut config = small_config(Variant::Buffered);
        config.elements = Some(30_000);
        let pair = overestimate_bench(&config).unwrap();
        assert_eq!(pair.classical.queries, 30_000);
        assert_eq!(pair.buffered.queries, 30_000);
        assert!(pair.buffered.mean_overestimate >= 0.0);
        assert!(pair.classical.mean_overestimate >= 0.0);
    }

    #[test]
    fn overestimate_bench_with_no_elements_is_all_zeros() {
        let mut config = small_config(Variant::Buffered);
        config.elements = Some(0);
        let pair = overestimate_bench(&config).unwrap();
        assert_eq!(pair.classical.queries, 0);
        assert_eq!(pair.buffered.max_overestimate, 0);
    }

    #[test]
    fn file_backend_runs_and_cleans_up_scratch() {
        let mut config = small_config(Variant::Buffered);
        config.backend = BackendKind::File;
        config.elements = Some(5_000);
        let (_, result) = insert_bench(&config).unwrap();
        assert!(result.page_writes > 0);
        // The scratch file is gone once the run is over.
        let leftover = std::fs::read_dir(std::env::temp_dir())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| {
                e.file_name()
                    .to_string_lossy()
                    .starts_with(&format!("bcms-buffered-{}", std::process::id()))
            })
            .count();
        assert_eq!(leftover, 0);
    }
}
