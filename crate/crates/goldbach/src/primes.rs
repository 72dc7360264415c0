//! Segmented sieve of Eratosthenes over an odd-only bitset, exact prime
//! counting, and a plain-text checkpoint cache for pi(x).
//!
//! The engine stores one bit per odd number (bit `i` represents `2i + 1`);
//! 2 is special-cased by the queries and never stored. Coverage grows
//! monotonically: windows are sieved in fixed-size segments that can be
//! processed on any number of workers with bit-identical results, because
//! every segment is written independently from the same base primes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Words per internal pi checkpoint (2048 words = 2^17 odd numbers).
const CHECKPOINT_WORDS: usize = 2048;

/// Coverage is kept a multiple of this so segments map onto whole words.
const COVERAGE_ALIGN: u64 = 128;

/// Configuration for [`PrimeEngine`].
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Hard cap on sieve coverage; guards against accidental huge allocations.
    pub coverage_limit: u64,
    /// Segment span in integers. The default covers 2^21 numbers, i.e. a
    /// 128 KiB bitset per segment, which fits comfortably in L2.
    pub segment_size: u64,
}

pub const DEFAULT_COVERAGE_LIMIT: u64 = 20_000_000_000;
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 21;

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            coverage_limit: DEFAULT_COVERAGE_LIMIT,
            segment_size: DEFAULT_SEGMENT_SIZE,
        }
    }
}

/// Simple odd-only sieve for the base primes (3, 5, 7, ...) up to `limit`
/// inclusive. Only ever called with `limit <= sqrt(coverage_limit)`.
pub fn small_odd_primes(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let n = ((limit - 1) / 2) as usize; // flags[i] <=> 2i + 3
    let mut composite = vec![false; n];
    let mut p = 3u64;
    while p * p <= limit {
        let idx = ((p - 3) / 2) as usize;
        if !composite[idx] {
            let mut m = p * p;
            while m <= limit {
                composite[((m - 3) / 2) as usize] = true;
                m += 2 * p;
            }
        }
        p += 2;
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| 2 * i as u64 + 3)
        .collect()
}

pub(crate) fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

pub(crate) fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

/// Clear the bits of all odd composites in a window.
///
/// `words` holds one bit per odd number: bit `j` represents the value
/// `window_lo + 2j + 1` (`window_lo` even). Callers pass base primes up to
/// the square root of the window end, sorted ascending.
fn mark_composites(words: &mut [u64], window_lo: u64, nbits: usize, base_primes: &[u64]) {
    let window_hi = window_lo + 2 * nbits as u64;
    for &p in base_primes {
        if p * p >= window_hi {
            break;
        }
        // First odd multiple of p at or above max(p^2, window start).
        let mut m = p * p;
        if m <= window_lo {
            m = (window_lo / p + 1) * p;
            if m % 2 == 0 {
                m += p;
            }
        }
        while m < window_hi {
            let j = ((m - window_lo) >> 1) as usize;
            words[j >> 6] &= !(1u64 << (j & 63));
            m += 2 * p;
        }
    }
}

/// Immutable primality bitset over one half-open window `[base, base+length)`.
///
/// Bit `i` is set iff `base + 2i + 1` is prime; only odd numbers are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SievedSegment {
    base: u64,
    length: u64,
    bits: Box<[u64]>,
}

impl SievedSegment {
    /// Sieve a window. `base` must be even and `length >= 2`.
    pub fn sieve(base: u64, length: u64) -> Result<SievedSegment> {
        if !base.is_multiple_of(2) {
            return Err(Error::domain(format!("segment base {base} must be even")));
        }
        if length < 2 {
            return Err(Error::domain(format!(
                "segment length {length} must be at least 2"
            )));
        }
        let end = base
            .checked_add(length)
            .ok_or_else(|| Error::resource("segment window overflows u64".to_string()))?;
        let nbits = (length / 2) as usize;
        let nwords = nbits.div_ceil(64);
        let mut bits = vec![u64::MAX; nwords];
        // Mask the spare bits of the last word so popcounts stay honest.
        let spare = nwords * 64 - nbits;
        if spare > 0 {
            bits[nwords - 1] >>= spare;
        }
        let base_primes = small_odd_primes(isqrt_u64(end - 1));
        mark_composites(&mut bits, base, nbits, &base_primes);
        if base == 0 && nbits > 0 {
            bits[0] &= !1; // 1 is not prime
        }
        Ok(SievedSegment {
            base,
            length,
            bits: bits.into_boxed_slice(),
        })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    /// Number of odd values represented.
    pub fn bit_count(&self) -> u64 {
        self.length / 2
    }

    fn bit(&self, i: u64) -> bool {
        (self.bits[(i >> 6) as usize] >> (i & 63)) & 1 == 1
    }

    /// Primality of `n`, or `None` when `n` lies outside the window.
    /// 2 is answered as prime even though it is never stored.
    pub fn is_prime(&self, n: u64) -> Option<bool> {
        if n < self.base || n >= self.base + self.length {
            return None;
        }
        if n.is_multiple_of(2) {
            return Some(n == 2);
        }
        Some(self.bit((n - self.base) >> 1))
    }

    /// The odd values whose bit is set, ascending.
    pub fn odd_values(&self) -> impl Iterator<Item = u64> + '_ {
        let base = self.base;
        (0..self.bit_count()).filter(|&i| self.bit(i)).map(move |i| base + 2 * i + 1)
    }
}

/// Growable odd-only primality table with prefix popcounts for pi queries.
#[derive(Debug, Default)]
struct PrimeTable {
    words: Vec<u64>,
    /// Numbers in `[0, coverage)` are classified; multiple of 128.
    coverage: u64,
    /// `checkpoints[k]` = set bits in `words[..k * CHECKPOINT_WORDS]`.
    checkpoints: Vec<u64>,
}

impl PrimeTable {
    fn grow(&mut self, new_coverage: u64, segment_size: u64) {
        debug_assert!(new_coverage.is_multiple_of(COVERAGE_ALIGN));
        if new_coverage <= self.coverage {
            return;
        }
        let old_words = self.words.len();
        let new_words = (new_coverage / 2).div_ceil(64) as usize;
        self.words.resize(new_words, u64::MAX);

        let base_primes = small_odd_primes(isqrt_u64(new_coverage - 1));
        let seg_words = (segment_size / COVERAGE_ALIGN).max(1) as usize;
        let old_coverage = self.coverage;
        self.words[old_words..]
            .par_chunks_mut(seg_words)
            .enumerate()
            .for_each(|(k, chunk)| {
                let window_lo = old_coverage + (k * seg_words) as u64 * 128;
                mark_composites(chunk, window_lo, chunk.len() * 64, &base_primes);
            });
        if old_coverage == 0 {
            self.words[0] &= !1; // 1 is not prime
        }
        self.coverage = new_coverage;
        self.rebuild_checkpoints();
    }

    fn rebuild_checkpoints(&mut self) {
        let blocks = self.words.len() / CHECKPOINT_WORDS + 1;
        self.checkpoints.clear();
        self.checkpoints.reserve(blocks);
        let mut acc = 0u64;
        self.checkpoints.push(0);
        for (i, w) in self.words.iter().enumerate() {
            acc += w.count_ones() as u64;
            if (i + 1) % CHECKPOINT_WORDS == 0 {
                self.checkpoints.push(acc);
            }
        }
    }

    #[inline]
    fn odd_bit(&self, n: u64) -> bool {
        debug_assert!(n % 2 == 1 && n < self.coverage);
        let i = (n >> 1) as usize;
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// Count of set bits among indices `0..=i_max`.
    fn rank(&self, i_max: u64) -> u64 {
        let n_bits = i_max + 1;
        let full_words = (n_bits / 64) as usize;
        let block = full_words / CHECKPOINT_WORDS;
        let mut acc = self.checkpoints[block];
        for w in &self.words[block * CHECKPOINT_WORDS..full_words] {
            acc += w.count_ones() as u64;
        }
        let rem = n_bits % 64;
        if rem > 0 {
            let mask = (1u64 << rem) - 1;
            acc += (self.words[full_words] & mask).count_ones() as u64;
        }
        acc
    }
}

/// Primality and exact prime counts over `[0, coverage)`, grown on demand
/// by segmented sieving up to a configured hard limit.
///
/// Queries take `&self` and are safe to issue from many threads; growth is
/// an explicit `&mut` step so scans never race a resize.
pub struct PrimeEngine {
    config: EngineConfig,
    table: PrimeTable,
}

impl PrimeEngine {
    pub fn new(config: EngineConfig) -> Self {
        PrimeEngine {
            config,
            table: PrimeTable::default(),
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(EngineConfig::default())
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Exclusive upper bound of classified numbers.
    pub fn coverage(&self) -> u64 {
        self.table.coverage
    }

    /// Extend coverage so every number below `limit` is classified.
    pub fn ensure(&mut self, limit: u64) -> Result<()> {
        if limit <= self.table.coverage {
            return Ok(());
        }
        if limit > self.config.coverage_limit {
            return Err(Error::Resource(format!(
                "requested coverage {limit} exceeds the configured limit {} \
                 (raise --sieve-limit to override)",
                self.config.coverage_limit
            )));
        }
        let rounded = limit.div_ceil(COVERAGE_ALIGN) * COVERAGE_ALIGN;
        self.table.grow(rounded, self.config.segment_size);
        Ok(())
    }

    /// Errors unless `n` itself is classified, i.e. `n < coverage`.
    fn require_classified(&self, n: u64) -> Result<()> {
        if n >= self.table.coverage {
            return Err(Error::Coverage {
                needed: n,
                coverage: self.table.coverage,
            });
        }
        Ok(())
    }

    /// Exact primality. Even numbers are answered without coverage; odd
    /// numbers must lie below the sieved coverage.
    pub fn is_prime(&self, n: u64) -> Result<bool> {
        if n.is_multiple_of(2) {
            return Ok(n == 2);
        }
        if n == 1 {
            return Ok(false);
        }
        self.require_classified(n)?;
        Ok(self.table.odd_bit(n))
    }

    /// Unchecked odd-primality bit for hot scan loops.
    #[inline]
    pub(crate) fn odd_bit(&self, n: u64) -> bool {
        self.table.odd_bit(n)
    }

    /// Exact count of primes `<= x`, including 2.
    pub fn pi(&self, x: u64) -> Result<u64> {
        if x < 2 {
            return Ok(0);
        }
        if x == 2 {
            return Ok(1);
        }
        self.require_classified(x)?;
        // Largest stored index with value <= x: value 2i+1 <= x.
        let i_max = (x - 1) >> 1;
        Ok(self.table.rank(i_max) + 1)
    }

    /// Sieve an arbitrary window, independent of the engine's own coverage,
    /// subject to the configured coverage limit.
    pub fn sieve_segment(&self, base: u64, length: u64) -> Result<SievedSegment> {
        let end = base
            .checked_add(length)
            .ok_or_else(|| Error::resource("segment window overflows u64"))?;
        if end > self.config.coverage_limit {
            return Err(Error::Resource(format!(
                "segment window end {end} exceeds the configured limit {}",
                self.config.coverage_limit
            )));
        }
        SievedSegment::sieve(base, length)
    }

    /// Exact pi values at the given points, packaged as a checkpoint index.
    pub fn pi_index(&self, xs: &[u64]) -> Result<PiIndex> {
        let mut checkpoints = Vec::with_capacity(xs.len());
        for &x in xs {
            checkpoints.push((x, self.pi(x)?));
        }
        checkpoints.sort_unstable();
        checkpoints.dedup();
        PiIndex::new(checkpoints)
    }
}

/// Source of exact pi(x) values. Implemented by the sieve engine and by
/// cache-backed wrappers.
pub trait PiLookup: Sync {
    fn pi(&self, x: u64) -> Result<u64>;
}

impl PiLookup for PrimeEngine {
    fn pi(&self, x: u64) -> Result<u64> {
        PrimeEngine::pi(self, x)
    }
}

/// Monotone list of exact (x, pi(x)) checkpoints, loadable from and stored
/// to a plain-text cache file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PiIndex {
    checkpoints: Vec<(u64, u64)>,
    coverage_limit: u64,
}

pub const PI_CACHE_HEADER: &str = "GOLDBACH-PI v1";

impl PiIndex {
    /// Build from checkpoints sorted strictly ascending in x with
    /// nondecreasing counts.
    pub fn new(checkpoints: Vec<(u64, u64)>) -> Result<Self> {
        for pair in checkpoints.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::domain(format!(
                    "pi checkpoints not strictly ascending at x={}",
                    pair[1].0
                )));
            }
            if pair[1].1 < pair[0].1 {
                return Err(Error::domain(format!(
                    "pi checkpoint counts decrease at x={}",
                    pair[1].0
                )));
            }
        }
        let coverage_limit = checkpoints.last().map_or(0, |&(x, _)| x);
        Ok(PiIndex {
            checkpoints,
            coverage_limit,
        })
    }

    pub fn empty() -> Self {
        PiIndex::default()
    }

    /// Exact-point lookup; no interpolation.
    pub fn lookup(&self, x: u64) -> Option<u64> {
        self.checkpoints
            .binary_search_by_key(&x, |&(cx, _)| cx)
            .ok()
            .map(|i| self.checkpoints[i].1)
    }

    pub fn checkpoints(&self) -> &[(u64, u64)] {
        &self.checkpoints
    }

    pub fn coverage_limit(&self) -> u64 {
        self.coverage_limit
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// Parse a cache file: a `GOLDBACH-PI v1` header, then `x<TAB>pi(x)`
    /// records in ascending x.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, line)) if line == PI_CACHE_HEADER => {}
            Some((_, line)) => {
                return Err(Error::CacheFormat {
                    line: 1,
                    reason: format!("expected header {PI_CACHE_HEADER:?}, found {line:?}"),
                })
            }
            None => {
                return Err(Error::CacheFormat {
                    line: 1,
                    reason: "missing header".to_string(),
                })
            }
        }
        let mut checkpoints: Vec<(u64, u64)> = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let (xs, cs) = line.split_once('\t').ok_or_else(|| Error::CacheFormat {
                line: lineno,
                reason: "expected x<TAB>count".to_string(),
            })?;
            let x: u64 = xs.parse().map_err(|_| Error::CacheFormat {
                line: lineno,
                reason: format!("bad x value {xs:?}"),
            })?;
            let count: u64 = cs.parse().map_err(|_| Error::CacheFormat {
                line: lineno,
                reason: format!("bad count value {cs:?}"),
            })?;
            if let Some(&(px, pc)) = checkpoints.last() {
                if x <= px {
                    return Err(Error::CacheFormat {
                        line: lineno,
                        reason: format!("x={x} not above previous x={px}"),
                    });
                }
                if count < pc {
                    return Err(Error::CacheFormat {
                        line: lineno,
                        reason: format!("count {count} decreases below previous {pc}"),
                    });
                }
            }
            checkpoints.push((x, count));
        }
        PiIndex::new(checkpoints)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{PI_CACHE_HEADER}")?;
        for &(x, count) in &self.checkpoints {
            writeln!(w, "{x}\t{count}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pi lookups answered from an exact-point cache first, falling back to the
/// sieve engine.
pub struct CachedPi<'a> {
    pub cache: &'a PiIndex,
    pub engine: &'a PrimeEngine,
}

impl PiLookup for CachedPi<'_> {
    fn pi(&self, x: u64) -> Result<u64> {
        if let Some(count) = self.cache.lookup(x) {
            return Ok(count);
        }
        self.engine.pi(x)
    }
}
