//! `bcms` — drive the sketch library from the command line: derive
//! configurations, run insert/query/overestimate benchmarks over both
//! variants and backends, and run the statistical verification suites.
//!
//! Benchmarks emit one CSV row (plus header) to `--out` or stdout; the
//! verification suites emit one CSV row per trial and exit nonzero when a
//! bound does not hold.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bcms::bench::{self, BackendKind, BenchConfig, Variant};
use bcms::verify::{self, TrialRecord, TRIAL_CSV_HEADER};
use bcms::SketchParams;

#[derive(Parser)]
#[command(
    name = "bcms",
    about = "Count-min sketch benchmarks: classical vs buffered page-localized, with exact page-I/O accounting",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sketch dimensions a size budget allows.
    Configure {
        /// Sketch size, e.g. 134217728 or 128M.
        #[arg(long, value_parser = parse_size)]
        size: u64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Target overestimate the configuration is rated for.
        #[arg(long, default_value_t = 8)]
        overestimate: u64,
        #[arg(long = "page-bytes", default_value_t = 4096)]
        page_bytes: u32,
        #[arg(long = "cell-bytes", default_value_t = 8)]
        cell_bytes: u32,
    },
    /// Insert uniform keys and report throughput and page I/O.
    Insert(BenchArgs),
    /// Populate a sketch, then time uniform-random queries.
    Query(BenchArgs),
    /// Compare overestimates of the two variants on one workload.
    Overestimate(BenchArgs),
    /// Statistical verification suites.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Buffered)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Memory)]
    backend: BackendArg,
    /// Sketch size, e.g. 134217728 or 128M.
    #[arg(long, value_parser = parse_size)]
    size: u64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 8)]
    overestimate: u64,
    #[arg(long = "page-bytes", default_value_t = 4096)]
    page_bytes: u32,
    #[arg(long = "cell-bytes", default_value_t = 8)]
    cell_bytes: u32,
    /// In-memory buffer for the buffered variant, e.g. 64M.
    #[arg(long = "buffer-bytes", value_parser = parse_size)]
    buffer_bytes: Option<u64>,
    /// Inserts to perform; defaults to the derived element budget.
    #[arg(long)]
    elements: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    queries: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Back the sketch with this file instead of a scratch file (file backend).
    #[arg(long = "sketch-path")]
    sketch_path: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifySuite {
    /// Classical guarantee: the overestimate tail at epsilon*n stays within
    /// delta (plus Monte Carlo slack) across seeds.
    Guarantee {
        #[arg(long, default_value_t = std::f64::consts::E / 272.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        queries: u64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "page-bytes", default_value_t = 4096)]
        page_bytes: u32,
        #[arg(long = "cell-bytes", default_value_t = 8)]
        cell_bytes: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Localized tail bound: threshold inflated by the max-load term, bound
    /// relaxed to delta + 1/k^C.
    Theorem {
        #[arg(long, default_value_t = 16)]
        pages: u64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long = "page-bytes", default_value_t = 4096)]
        page_bytes: u32,
        #[arg(long = "cell-bytes", default_value_t = 8)]
        cell_bytes: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balls-into-bins: how often the max page load exceeds
    /// n/k + sqrt(2(C+1) n ln k / k).
    Maxload {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 64)]
        bins: u64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 400)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Classical,
    Buffered,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Memory,
    File,
}

/// Parses a byte size: a plain integer or an integer with a binary suffix
/// (K, M, G, T, optionally followed by "B"/"iB"), e.g. `128M`, `4KiB`.
fn parse_size(text: &str) -> Result<u64, String> {
    let trimmed = text.trim();
    let lower = trimmed.to_ascii_lowercase();
    let lower = lower.strip_suffix("ib").or(lower.strip_suffix('b')).unwrap_or(&lower);
    let (digits, shift) = match lower.chars().last() {
        Some('k') => (&lower[..lower.len() - 1], 10),
        Some('m') => (&lower[..lower.len() - 1], 20),
        Some('g') => (&lower[..lower.len() - 1], 30),
        Some('t') => (&lower[..lower.len() - 1], 40),
        _ => (lower, 0),
    };
    let value: u64 = digits
        .parse()
        .map_err(|_| format!("`{trimmed}` is not a byte size"))?;
    value
        .checked_shl(shift)
        .filter(|_| value.leading_zeros() >= shift)
        .ok_or_else(|| format!("`{trimmed}` overflows"))
}

fn bench_config(args: &BenchArgs) -> BenchConfig {
    BenchConfig {
        variant: match args.variant {
            VariantArg::Classical => Variant::Classical,
            VariantArg::Buffered => Variant::Buffered,
        },
        backend: match args.backend {
            BackendArg::Memory => BackendKind::Memory,
            BackendArg::File => BackendKind::File,
        },
        size_bytes: args.size,
        delta: args.delta,
        max_overestimate: args.overestimate,
        page_bytes: args.page_bytes,
        cell_bytes: args.cell_bytes,
        buffer_bytes: args.buffer_bytes.unwrap_or((args.size / 4).max(1)),
        elements: args.elements,
        queries: args.queries,
        seed: args.seed,
        sketch_path: args.sketch_path.clone(),
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}

fn print_params(size_bytes: u64, params: &SketchParams) {
    println!(
        "size_bytes={} depth={} width={} elements={}",
        size_bytes,
        params.depth,
        params.raw_width,
        params
            .element_budget
            .map(|b| b.to_string())
            .unwrap_or_else(|| "-".into()),
    );
    println!(
        "padded_width={} page_count={} columns_per_page={} page_bytes={} cell_bytes={} epsilon={:.6e}",
        params.width,
        params.page_count,
        params.columns_per_page,
        params.page_bytes,
        params.cell_bytes,
        params.epsilon,
    );
}

fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIAL_CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.to_csv_row());
        out.push('\n');
    }
    out
}

fn run() -> Result<ExitCode, Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Configure {
            size,
            delta,
            overestimate,
            page_bytes,
            cell_bytes,
        } => {
            let params = bench::configure(size, delta, overestimate, page_bytes, cell_bytes)?;
            print_params(size, &params);
            Ok(ExitCode::SUCCESS)
        }

        Command::Insert(args) => {
            let config = bench_config(&args);
            let (_, result) = bench::insert_bench(&config)?;
            let csv = format!("{}\n{}\n", bench::CSV_HEADER, bench::csv_row(&config, &result));
            write_output(&args.out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Query(args) => {
            let config = bench_config(&args);
            let (_, result) = bench::query_bench(&config)?;
            let csv = format!("{}\n{}\n", bench::CSV_HEADER, bench::csv_row(&config, &result));
            write_output(&args.out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Overestimate(args) => {
            let config = bench_config(&args);
            let pair = bench::overestimate_bench(&config)?;
            println!(
                "classical: queries={} mean={:.4} max={} tail@{}={:.4}",
                pair.classical.queries,
                pair.classical.mean_overestimate,
                pair.classical.max_overestimate,
                pair.threshold,
                pair.classical.tail_fraction,
            );
            println!(
                "buffered:  queries={} mean={:.4} max={} tail@{}={:.4}",
                pair.buffered.queries,
                pair.buffered.mean_overestimate,
                pair.buffered.max_overestimate,
                pair.threshold,
                pair.buffered.tail_fraction,
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { suite } => run_verify(suite),
    }
}

fn run_verify(suite: VerifySuite) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match suite {
        VerifySuite::Guarantee {
            epsilon,
            delta,
            n,
            queries,
            seeds,
            seed,
            page_bytes,
            cell_bytes,
            out,
        } => {
            let params = SketchParams::from_error(epsilon, delta, page_bytes, cell_bytes)?;
            let mut records = Vec::new();
            let mut failures = 0u64;
            for i in 0..seeds {
                let run = verify::check_cms_guarantee(&params, n, queries, seed + i)?;
                if !run.pass {
                    failures += 1;
                }
                records.push(run.record(i));
            }
            write_output(&out, &records_csv(&records))?;
            // One low-probability Monte Carlo miss per 20 seeds is within
            // expectations; more than that fails the suite.
            let allowed = seeds / 20;
            let pass = failures <= allowed;
            eprintln!(
                "guarantee: {}/{seeds} seeds passed -> {}",
                seeds - failures,
                if pass { "PASS" } else { "FAIL" }
            );
            Ok(exit_for(pass))
        }

        VerifySuite::Theorem {
            pages,
            delta,
            c,
            n,
            seeds,
            seed,
            page_bytes,
            cell_bytes,
            out,
        } => {
            let params = SketchParams::from_pages(pages, delta, page_bytes, cell_bytes)?;
            let mut records = Vec::new();
            let mut failures = 0u64;
            for i in 0..seeds {
                let run = verify::check_theorem_bound(&params, n, c, seed + i)?;
                if !run.pass {
                    failures += 1;
                }
                records.push(run.record(i));
            }
            write_output(&out, &records_csv(&records))?;
            let pass = failures == 0;
            eprintln!(
                "theorem: {}/{seeds} seeds passed -> {}",
                seeds - failures,
                if pass { "PASS" } else { "FAIL" }
            );
            Ok(exit_for(pass))
        }

        VerifySuite::Maxload {
            n,
            bins,
            c,
            trials,
            seed,
            out,
        } => {
            let run = verify::max_load_trials(n, bins, c, trials, seed)?;
            write_output(&out, &records_csv(&run.records()))?;
            eprintln!(
                "maxload: exceed fraction {:.5} vs bound {:.5} + slack {:.5} -> {}",
                run.exceed_fraction,
                run.bound,
                run.slack,
                if run.pass { "PASS" } else { "FAIL" }
            );
            Ok(exit_for(run.pass))
        }
    }
}

fn exit_for(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}
