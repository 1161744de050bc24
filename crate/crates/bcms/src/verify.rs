//! Statistical checks: exact-count oracle, overestimate reports, tail-bound
//! Monte Carlo for both sketch layouts, and balls-into-bins max-load trials.
//!
//! Every check is deterministic given its seed: workloads come from a
//! counter-free ChaCha8 stream and hash seeds are mixed from the run seed.
//! Statistical assertions all carry an explicit three-sigma binomial slack,
//! and checks report pass/fail rather than erroring, so a failed bound is a
//! test outcome, not a panic.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::cms::{CountMinSketch, HashMode};
use crate::error::{Error, Result};
use crate::hashing::{hash_key, HashFamily};
use crate::params::SketchParams;

/// Seed-domain tags so a single run seed yields independent streams.
const TAG_FAMILY: u64 = 0x66616d696c79; // "family"
const TAG_WORKLOAD: u64 = 0x6b657973; // "keys"

/// Mixes a run seed with a domain tag.
pub(crate) fn derived_seed(seed: u64, tag: u64) -> u64 {
    hash_key(seed, tag)
}

/// Deterministic stream of uniform 64-bit keys.
///
/// The same seed always regenerates the identical sequence, which is what
/// lets the oracle be rebuilt and workloads be replayed.
pub fn uniform_keys(seed: u64, n: u64) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(move |_| rng.next_u64())
}

/// Multiset of true frequencies.
#[derive(Debug, Default, Clone)]
pub struct ExactCounter {
    counts: HashMap<u64, u64>,
    total: u64,
}

impl ExactCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, key: u64, count: u64) {
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    pub fn count(&self, key: u64) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Total of all recorded counts (the multiset size).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }
}

/// Aggregated overestimates for one sketch against the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Queries accounted for (multiset size: a key counts once per insert).
    pub queries: u64,
    pub mean_overestimate: f64,
    pub max_overestimate: u64,
    /// Fraction of queries with overestimate >= `threshold`.
    pub tail_fraction: f64,
    pub threshold: u64,
}

impl ErrorReport {
    fn empty(threshold: u64) -> Self {
        Self {
            queries: 0,
            mean_overestimate: 0.0,
            max_overestimate: 0,
            tail_fraction: 0.0,
            threshold,
        }
    }
}

/// Compares the sketch against the oracle over every inserted element.
///
/// Each distinct key is estimated once and weighted by its multiplicity,
/// which is exactly iterating the insert multiset. A negative error is an
/// invariant violation and comes back as [`Error::Underestimate`].
pub fn overestimate_stats<F>(
    oracle: &ExactCounter,
    threshold: u64,
    mut estimate: F,
) -> Result<ErrorReport>
where
    F: FnMut(u64) -> Result<u64>,
{
    if oracle.total() == 0 {
        return Ok(ErrorReport::empty(threshold));
    }
    let mut weighted_sum = 0u128;
    let mut tail_weight = 0u64;
    let mut max_overestimate = 0u64;
    for (key, true_count) in oracle.iter() {
        let estimated = estimate(key)?;
        if estimated < true_count {
            return Err(Error::Underestimate {
                key,
                estimate: estimated,
                true_count,
            });
        }
        let overestimate = estimated - true_count;
        weighted_sum += overestimate as u128 * true_count as u128;
        if overestimate >= threshold {
            tail_weight += true_count;
        }
        max_overestimate = max_overestimate.max(overestimate);
    }
    let queries = oracle.total();
    Ok(ErrorReport {
        queries,
        mean_overestimate: weighted_sum as f64 / queries as f64,
        max_overestimate,
        tail_fraction: tail_weight as f64 / queries as f64,
        threshold,
    })
}

/// One row of machine-readable verification output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: u64,
    pub k: u64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub threshold: f64,
    pub bound: f64,
    pub tail_fraction: f64,
    pub mean: Option<f64>,
    pub max: Option<u64>,
}

pub const TRIAL_CSV_HEADER: &str =
    "trial,seed,n,k,epsilon,delta,threshold,bound,tailFraction,mean,max";

impl TrialRecord {
    pub fn to_csv_row(&self) -> String {
        fn opt_f64(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn opt_u64(v: Option<u64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            self.n,
            self.k,
            opt_f64(self.epsilon),
            opt_f64(self.delta),
            self.threshold,
            self.bound,
            self.tail_fraction,
            opt_f64(self.mean),
            opt_u64(self.max),
        )
    }
}

/// Outcome of one classical-guarantee Monte Carlo run.
#[derive(Debug, Clone)]
pub struct GuaranteeRun {
    pub report: ErrorReport,
    pub epsilon: f64,
    pub delta: f64,
    pub slack: f64,
    pub pass: bool,
    pub n: u64,
    pub k: u64,
    pub seed: u64,
}

impl GuaranteeRun {
    pub fn record(&self, trial: u64) -> TrialRecord {
        TrialRecord {
            trial,
            seed: self.seed,
            n: self.n,
            k: self.k,
            epsilon: Some(self.epsilon),
            delta: Some(self.delta),
            threshold: self.report.threshold as f64,
            bound: self.delta,
            tail_fraction: self.report.tail_fraction,
            mean: Some(self.report.mean_overestimate),
            max: Some(self.report.max_overestimate),
        }
    }
}

/// Inserts `n` uniform keys into a classical sketch and measures the
/// fraction of queried inserts whose overestimate reaches `epsilon * n`.
/// Passes when that fraction is within `delta` plus three-sigma slack.
///
/// Queries replay the first `query_count` elements of the insert stream,
/// i.e. the inserted multiset itself.
pub fn check_cms_guarantee(
    params: &SketchParams,
    n: u64,
    query_count: u64,
    seed: u64,
) -> Result<GuaranteeRun> {
    if let Some(budget) = params.element_budget {
        if n > budget {
            return Err(Error::InvalidParameter {
                param: "n",
                reason: format!("{n} exceeds the element budget {budget}"),
            });
        }
    }
    run_tail_check(
        params,
        HashMode::Classical,
        n,
        query_count,
        seed,
        params.epsilon * n as f64,
        params.delta,
    )
    .map(|(report, slack, pass)| GuaranteeRun {
        report,
        epsilon: params.epsilon,
        delta: params.delta,
        slack,
        pass,
        n,
        k: params.page_count,
        seed,
    })
}

/// Outcome of one localized tail-bound Monte Carlo run.
#[derive(Debug, Clone)]
pub struct TheoremRun {
    pub report: ErrorReport,
    /// `n * epsilon * (1 + sqrt(2(C+1) k ln k / n))`.
    pub threshold: f64,
    /// `delta + 1/k^C`.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
    pub k: u64,
    pub seed: u64,
}

impl TheoremRun {
    pub fn record(&self, trial: u64) -> TrialRecord {
        TrialRecord {
            trial,
            seed: self.seed,
            n: self.n,
            k: self.k,
            epsilon: Some(self.epsilon),
            delta: Some(self.delta),
            threshold: self.threshold,
            bound: self.bound,
            tail_fraction: self.report.tail_fraction,
            mean: Some(self.report.mean_overestimate),
            max: Some(self.report.max_overestimate),
        }
    }
}

/// The localized-layout analogue of [`check_cms_guarantee`]: the threshold
/// is inflated by the max-load term and the bound relaxes to
/// `delta + 1/k^C`.
pub fn check_theorem_bound(
    params: &SketchParams,
    n: u64,
    c: f64,
    seed: u64,
) -> Result<TheoremRun> {
    if c < 1.0 {
        return Err(Error::InvalidParameter {
            param: "c",
            reason: format!("{c} must be at least 1"),
        });
    }
    let k = params.page_count;
    if k < 2 {
        return Err(Error::InvalidParameter {
            param: "page_count",
            reason: "the localized tail bound needs at least 2 pages (ln k = 0 \
                     degenerates the threshold)"
                .into(),
        });
    }
    if n < k {
        return Err(Error::InvalidParameter {
            param: "n",
            reason: format!("{n} inserts over {k} pages is below one element per page"),
        });
    }
    let threshold = localized_tail_threshold(params.epsilon, n, k, c);
    let bound = params.delta + (k as f64).powf(-c);
    let (report, slack, pass) = run_tail_check(
        params,
        HashMode::Localized,
        n,
        n,
        seed,
        threshold,
        bound.min(1.0),
    )?;
    Ok(TheoremRun {
        report,
        threshold,
        bound,
        slack,
        pass,
        epsilon: params.epsilon,
        delta: params.delta,
        n,
        k,
        seed,
    })
}

/// `n * epsilon * (1 + sqrt(2(C+1) k ln k / n))`.
pub fn localized_tail_threshold(epsilon: f64, n: u64, k: u64, c: f64) -> f64 {
    let inflation = (2.0 * (c + 1.0) * k as f64 * (k as f64).ln() / n as f64).sqrt();
    n as f64 * epsilon * (1.0 + inflation)
}

/// Shared engine: insert, replay, count the tail at `threshold`, compare
/// against `bound_p` with binomial slack.
fn run_tail_check(
    params: &SketchParams,
    mode: HashMode,
    n: u64,
    query_count: u64,
    seed: u64,
    threshold: f64,
    bound_p: f64,
) -> Result<(ErrorReport, f64, bool)> {
    let master_seed = derived_seed(seed, TAG_FAMILY);
    let workload_seed = derived_seed(seed, TAG_WORKLOAD);
    let mut sketch = CountMinSketch::new(params.clone(), mode, master_seed)?;
    let mut oracle = ExactCounter::new();
    for key in uniform_keys(workload_seed, n) {
        sketch.update(key)?;
        oracle.record(key, 1);
    }

    let queries = query_count.min(n);
    let threshold_count = threshold.ceil().max(0.0) as u64;
    let mut tail = 0u64;
    let mut max_overestimate = 0u64;
    let mut sum = 0u128;
    for key in uniform_keys(workload_seed, queries) {
        let estimated = sketch.estimate(key);
        let true_count = oracle.count(key);
        if estimated < true_count {
            return Err(Error::Underestimate {
                key,
                estimate: estimated,
                true_count,
            });
        }
        let overestimate = estimated - true_count;
        if overestimate >= threshold_count {
            tail += 1;
        }
        sum += overestimate as u128;
        max_overestimate = max_overestimate.max(overestimate);
    }
    let report = ErrorReport {
        queries,
        mean_overestimate: if queries == 0 { 0.0 } else { sum as f64 / queries as f64 },
        max_overestimate,
        tail_fraction: if queries == 0 { 0.0 } else { tail as f64 / queries as f64 },
        threshold: threshold_count,
    };
    let slack = if queries == 0 {
        0.0
    } else {
        3.0 * (bound_p * (1.0 - bound_p) / queries as f64).sqrt()
    };
    let pass = report.tail_fraction <= bound_p + slack;
    Ok((report, slack, pass))
}

/// Outcome of a balls-into-bins max-load experiment.
#[derive(Debug, Clone)]
pub struct MaxLoadRun {
    /// `n/k + sqrt(2(C+1) n ln k / k)`.
    pub threshold: f64,
    /// `1/k^C`.
    pub bound: f64,
    pub slack: f64,
    pub exceed_fraction: f64,
    pub max_loads: Vec<u64>,
    pub pass: bool,
    pub n: u64,
    pub k: u64,
    pub seed: u64,
}

impl MaxLoadRun {
    pub fn records(&self) -> Vec<TrialRecord> {
        self.max_loads
            .iter()
            .enumerate()
            .map(|(trial, &load)| TrialRecord {
                trial: trial as u64,
                seed: self.seed,
                n: self.n,
                k: self.k,
                epsilon: None,
                delta: None,
                threshold: self.threshold,
                bound: self.bound,
                tail_fraction: if load as f64 > self.threshold { 1.0 } else { 0.0 },
                mean: None,
                max: Some(load),
            })
            .collect()
    }
}

/// Largest bin tally over an assignment stream.
pub fn max_bin_load(assignments: impl IntoIterator<Item = u64>, bins: u64) -> u64 {
    let mut loads = vec![0u64; bins as usize];
    for bin in assignments {
        loads[bin as usize] += 1;
    }
    loads.into_iter().max().unwrap_or(0)
}

/// `n/k + sqrt(2(C+1) n ln k / k)`.
pub fn max_load_threshold(n: u64, k: u64, c: f64) -> f64 {
    n as f64 / k as f64 + (2.0 * (c + 1.0) * n as f64 * (k as f64).ln() / k as f64).sqrt()
}

/// Throws `n` uniform keys into `k` pages through a fresh-seeded page hash,
/// `trials` times, and measures how often the max page load exceeds the
/// threshold. Passes when the exceed fraction is within `1/k^C` plus slack.
///
/// Requires `n` comfortably above `k (ln k)^3`; the finite-size proxy used
/// here is `n >= 10 k (ln k)^3`.
pub fn max_load_trials(n: u64, k: u64, c: f64, trials: u64, seed: u64) -> Result<MaxLoadRun> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            param: "k",
            reason: "need at least 2 bins".into(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            param: "trials",
            reason: "need at least one trial".into(),
        });
    }
    let required = 10.0 * k as f64 * (k as f64).ln().powi(3);
    if (n as f64) < required {
        return Err(Error::UnsupportedConfig(format!(
            "n = {n} is too small for k = {k} bins: the max-load bound assumes n well above \
             k (ln k)^3; need n >= {required:.0}"
        )));
    }

    let threshold = max_load_threshold(n, k, c);
    let bound = (k as f64).powf(-c);
    let mut max_loads = Vec::with_capacity(trials as usize);
    let mut exceeds = 0u64;
    for trial in 0..trials {
        let family = HashFamily::new(derived_seed(seed, TAG_FAMILY ^ trial), 1, k, 1)?;
        let keys = uniform_keys(derived_seed(seed, TAG_WORKLOAD ^ trial), n);
        let load = max_bin_load(keys.map(|key| family.page_index(key)), k);
        if load as f64 > threshold {
            exceeds += 1;
        }
        max_loads.push(load);
    }
    let exceed_fraction = exceeds as f64 / trials as f64;
    let slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
    Ok(MaxLoadRun {
        threshold,
        bound,
        slack,
        exceed_fraction,
        max_loads,
        pass: exceed_fraction <= bound + slack,
        n,
        k,
        seed,
    })
}
