//! Seeded hash family: a page-selector hash plus one column hash per row.
//!
//! Every sketch in this crate derives all of its hash functions from a single
//! 64-bit master seed, so a sketch persisted to disk can be reopened and
//! probed by any process that knows the seed. The derivation scheme is part
//! of the on-disk format and must not change:
//!
//! * a splitmix64 generator is seeded with the master seed;
//! * its first output seeds the page-selector hash (index 0);
//! * outputs 1..=depth seed the per-row column hashes.
//!
//! The hash itself is MurmurHash64A over the key's little-endian bytes.
//! Outputs are reduced modulo the target range; for ranges that are tiny
//! compared to 2^64 the modulo bias is negligible.

use crate::error::{Error, Result};

const MURMUR_M: u64 = 0xc6a4_a793_5bd1_e995;
const MURMUR_R: u32 = 47;

/// MurmurHash64A of `data` under `seed`.
pub fn murmur64a(data: &[u8], seed: u64) -> u64 {
    let mut h = seed ^ (data.len() as u64).wrapping_mul(MURMUR_M);

    let mut chunks = data.chunks_exact(8);
    for chunk in &mut chunks {
        let mut k = u64::from_le_bytes(chunk.try_into().unwrap());
        k = k.wrapping_mul(MURMUR_M);
        k ^= k >> MURMUR_R;
        k = k.wrapping_mul(MURMUR_M);
        h ^= k;
        h = h.wrapping_mul(MURMUR_M);
    }

    let tail = chunks.remainder();
    if !tail.is_empty() {
        let mut k = 0u64;
        for (i, &byte) in tail.iter().enumerate() {
            k |= (byte as u64) << (8 * i);
        }
        h ^= k;
        h = h.wrapping_mul(MURMUR_M);
    }

    h ^= h >> MURMUR_R;
    h = h.wrapping_mul(MURMUR_M);
    h ^= h >> MURMUR_R;
    h
}

/// Hash of a 64-bit key under `seed`.
#[inline]
pub fn hash_key(key: u64, seed: u64) -> u64 {
    murmur64a(&key.to_le_bytes(), seed)
}

/// splitmix64 step; used only to derive per-row seeds from the master seed.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A family of seeded hashes for one sketch geometry.
///
/// `page_index` picks the logical page a key belongs to; `column_offset`
/// gives the key's column for each row, confined to `[0, columns_per_page)`
/// so that a key's entire probe set lives inside one page. For the classical
/// unconstrained layout, `classical_column` maps each row's hash over the
/// whole width instead.
///
/// Immutable after construction; all methods take `&self`.
#[derive(Debug, Clone)]
pub struct HashFamily {
    master_seed: u64,
    depth: u32,
    page_count: u64,
    columns_per_page: u64,
    /// seeds[0] drives the page selector, seeds[1 + row] drives row `row`.
    seeds: Vec<u64>,
}

impl HashFamily {
    pub fn new(
        master_seed: u64,
        depth: u32,
        page_count: u64,
        columns_per_page: u64,
    ) -> Result<Self> {
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
        if columns_per_page == 0 {
            return Err(Error::InvalidParameter {
                param: "columns_per_page",
                reason: "must be at least 1".into(),
            });
        }
        page_count
            .checked_mul(columns_per_page)
            .ok_or_else(|| Error::InvalidParameter {
                param: "page_count",
                reason: "page_count * columns_per_page overflows u64".into(),
            })?;

        let mut state = master_seed;
        let seeds = (0..=depth).map(|_| splitmix64(&mut state)).collect();

        Ok(Self {
            master_seed,
            depth,
            page_count,
            columns_per_page,
            seeds,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn page_count(&self) -> u64 {
        self.page_count
    }

    pub fn columns_per_page(&self) -> u64 {
        self.columns_per_page
    }

    /// Total columns across all pages.
    pub fn width(&self) -> u64 {
        self.page_count * self.columns_per_page
    }

    /// Logical page for `key`, in `[0, page_count)`.
    #[inline]
    pub fn page_index(&self, key: u64) -> u64 {
        hash_key(key, self.seeds[0]) % self.page_count
    }

    /// Local column of `key` for `row`, in `[0, columns_per_page)`.
    #[inline]
    pub fn column_offset(&self, key: u64, row: u32) -> u64 {
        debug_assert!(row < self.depth);
        hash_key(key, self.seeds[1 + row as usize]) % self.columns_per_page
    }

    /// All `depth` local column offsets for `key`.
    pub fn column_offsets(&self, key: u64) -> Vec<u64> {
        (0..self.depth).map(|row| self.column_offset(key, row)).collect()
    }

    /// Global column of `key` for `row` in the localized layout:
    /// the key's page span plus its local offset.
    #[inline]
    pub fn localized_column(&self, key: u64, row: u32) -> u64 {
        self.page_index(key) * self.columns_per_page + self.column_offset(key, row)
    }

    /// Global column of `key` for `row` in the classical layout, ranging
    /// over the full width.
    #[inline]
    pub fn classical_column(&self, key: u64, row: u32) -> u64 {
        debug_assert!(row < self.depth);
        hash_key(key, self.seeds[1 + row as usize]) % self.width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    /// Upper critical value of a chi-square distribution via the
    /// Wilson-Hilferty cube approximation. Accurate to well under a percent
    /// for the degrees of freedom used here, which is plenty: a healthy hash
    /// produces statistics near `df`, far below the 0.1% critical value.
    fn chi_square_critical(df: f64, z: f64) -> f64 {
        let a = 2.0 / (9.0 * df);
        df * (1.0 - a + z * a.sqrt()).powi(3)
    }

    /// z for the upper 0.001 tail of the standard normal.
    const Z_999: f64 = 3.090_232_306_167_813;

    fn chi_square_statistic(histogram: &[u64], samples: u64) -> f64 {
        let expected = samples as f64 / histogram.len() as f64;
        histogram
            .iter()
            .map(|&observed| {
                let diff = observed as f64 - expected;
                diff * diff / expected
            })
            .sum()
    }

    #[test]
    fn murmur_is_deterministic_and_seed_sensitive() {
        let data = b"count-min sketch";
        assert_eq!(murmur64a(data, 7), murmur64a(data, 7));
        assert_ne!(murmur64a(data, 7), murmur64a(data, 8));
        // Length extension with a zero byte must change the hash.
        assert_ne!(murmur64a(b"abc", 1), murmur64a(b"abc\0", 1));
    }

    #[test]
    fn murmur_avalanche() {
        // Flipping any single input bit should flip about half of the 64
        // output bits. The mean over many trials concentrates tightly around
        // 32, so [30, 34] is a generous window.
        let mut rng = ChaCha8Rng::seed_from_u64(0x00a7_a11a);
        let mut flipped_total = 0u64;
        let mut trials = 0u64;
        for _ in 0..200 {
            let key = rng.next_u64();
            let base = hash_key(key, 42);
            for bit in 0..64 {
                let perturbed = hash_key(key ^ (1u64 << bit), 42);
                flipped_total += (base ^ perturbed).count_ones() as u64;
                trials += 1;
            }
        }
        let mean = flipped_total as f64 / trials as f64;
        assert!((30.0..=34.0).contains(&mean), "avalanche mean {mean}");
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(HashFamily::new(1, 0, 4, 4).is_err());
        assert!(HashFamily::new(1, 4, 0, 4).is_err());
        assert!(HashFamily::new(1, 4, 4, 0).is_err());
    }

    #[test]
    fn single_page_maps_every_key_to_zero() {
        let family = HashFamily::new(99, 3, 1, 16).unwrap();
        for key in [0u64, 1, u64::MAX, 0xdead_beef] {
            assert_eq!(family.page_index(key), 0);
        }
    }

    #[test]
    fn single_column_forces_zero_offsets() {
        let family = HashFamily::new(99, 4, 8, 1).unwrap();
        assert_eq!(family.column_offsets(12345), vec![0, 0, 0, 0]);
    }

    #[test]
    fn outputs_are_deterministic_across_instances() {
        let a = HashFamily::new(0x5eed, 5, 64, 102).unwrap();
        let b = HashFamily::new(0x5eed, 5, 64, 102).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let key = rng.next_u64();
            assert_eq!(a.page_index(key), b.page_index(key));
            assert_eq!(a.column_offsets(key), b.column_offsets(key));
            assert_eq!(a.classical_column(key, 2), b.classical_column(key, 2));
        }
    }

    #[test]
    fn outputs_stay_in_range() {
        let family = HashFamily::new(7, 4, 13, 37).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let key = rng.next_u64();
            assert!(family.page_index(key) < 13);
            for row in 0..4 {
                assert!(family.column_offset(key, row) < 37);
                let global = family.localized_column(key, row);
                let page = family.page_index(key);
                assert!(global >= page * 37 && global < (page + 1) * 37);
                assert!(family.classical_column(key, row) < family.width());
            }
        }
    }

    #[test]
    fn page_index_is_uniform() {
        let pages = 64usize;
        let family = HashFamily::new(0xfeed_f00d, 5, pages as u64, 102).unwrap();
        let mut histogram = vec![0u64; pages];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = 1_000_000u64;
        for _ in 0..samples {
            histogram[family.page_index(rng.next_u64()) as usize] += 1;
        }
        let stat = chi_square_statistic(&histogram, samples);
        let critical = chi_square_critical((pages - 1) as f64, Z_999);
        assert!(stat < critical, "chi-square {stat} >= critical {critical}");
    }

    #[test]
    fn column_offsets_are_uniform_per_row() {
        let columns = 100usize;
        let depth = 3u32;
        let family = HashFamily::new(0xc01_0ffe, depth, 16, columns as u64).unwrap();
        let mut histograms = vec![vec![0u64; columns]; depth as usize];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples = 100_000u64;
        for _ in 0..samples {
            let key = rng.next_u64();
            for row in 0..depth {
                let offset = family.column_offset(key, row) as usize;
                assert!(offset < columns);
                histograms[row as usize][offset] += 1;
            }
        }
        let critical = chi_square_critical((columns - 1) as f64, Z_999);
        for (row, histogram) in histograms.iter().enumerate() {
            let stat = chi_square_statistic(histogram, samples);
            assert!(
                stat < critical,
                "row {row}: chi-square {stat} >= critical {critical}"
            );
        }
    }

    #[test]
    fn changing_master_seed_changes_outputs() {
        let a = HashFamily::new(1000, 3, 32, 50).unwrap();
        let b = HashFamily::new(1001, 3, 32, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut identical = 0u32;
        for _ in 0..10_000 {
            let key = rng.next_u64();
            if a.page_index(key) == b.page_index(key)
                && a.column_offsets(key) == b.column_offsets(key)
            {
                identical += 1;
            }
        }
        // Chance agreement is about (1/32) * (1/50)^3 per key.
        assert!(identical <= 2, "{identical} of 10000 keys hashed identically");
    }

    #[test]
    fn row_seeds_are_pairwise_distinct() {
        let family = HashFamily::new(0, 32, 2, 2).unwrap();
        for i in 0..family.seeds.len() {
            for j in (i + 1)..family.seeds.len() {
                assert_ne!(family.seeds[i], family.seeds[j]);
            }
        }
    }
}
