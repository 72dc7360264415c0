//! Exact pair counts: per-center Goldbach pairs (N-m, N+m) in the full or
//! reduced range, cumulative totals over all sums up to a bound, and a
//! deliberately naive trial-division oracle for cross-checking.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::primes::{isqrt_u128, PrimeEngine};

/// The m-range a per-center count runs over. `Full` allows 0 <= m <= N-3;
/// `Reduced` additionally requires (N+m)^2 < 2 N^2, keeping both pair
/// members inside [(2-sqrt(2))N, sqrt(2)N] where prime density is nearly
/// uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKind {
    Full,
    Reduced,
}

/// Largest pair member q admitted by the reduced range for center `n`:
/// the biggest integer with q^2 < 2 n^2, i.e. floor(n * sqrt(2)).
/// (Equality can never occur: 2 n^2 is not a perfect square.)
pub(crate) fn reduced_max_member(n: u64) -> u64 {
    let doubled_square = (n as u128)
        .saturating_mul(n as u128)
        .saturating_mul(2);
    isqrt_u128(doubled_square) as u64
}

/// Number of m in the admitted range with both N-m and N+m odd primes.
/// m = 0 counts the pair (N, N) once when N itself is an odd prime.
///
/// Requires the engine to cover 2n - 3. The m-range is scanned in disjoint
/// blocks reduced by integer addition, so the result is identical for any
/// worker count.
pub fn count_pairs(engine: &PrimeEngine, n: u64, range: RangeKind) -> Result<u64> {
    if n < 3 {
        return Err(Error::domain(format!(
            "pair counting needs a center n >= 3, got {n}"
        )));
    }
    let m_max = match range {
        RangeKind::Full => n - 3,
        RangeKind::Reduced => (n - 3).min(reduced_max_member(n) - n),
    };
    // Largest member the scan will query: 2n-3 full, ~sqrt(2) n reduced.
    let top = n
        .checked_add(m_max)
        .ok_or_else(|| Error::domain(format!("center {n} overflows the scan range")))?;
    if top >= engine.coverage() {
        return Err(Error::Coverage {
            needed: top,
            coverage: engine.coverage(),
        });
    }
    // Both members must be odd, which fixes the parity of m.
    let m_start = if n % 2 == 1 { 0 } else { 1 };
    if m_max < m_start {
        return Ok(0);
    }
    let steps = (m_max - m_start) / 2 + 1;
    const BLOCK: u64 = 1 << 16;
    let blocks = steps.div_ceil(BLOCK);
    let count = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * BLOCK;
            let last = (first + BLOCK).min(steps) - 1;
            let mut c = 0u64;
            let mut m = m_start + 2 * first;
            let m_end = m_start + 2 * last;
            while m <= m_end {
                if engine.odd_bit(n - m) && engine.odd_bit(n + m) {
                    c += 1;
                }
                m += 2;
            }
            c
        })
        .sum();
    Ok(count)
}

/// Total number of pairs of odd primes (p1, p2), p1 <= p2, with
/// p1 + p2 <= m_limit. Returns 0 below the smallest possible sum 3 + 3.
///
/// Runs a two-pointer scan directly over the sieve bitset: an ascending
/// pointer over p1 and a descending one tracking the count of odd primes
/// not above m_limit - p1, so no prime list is ever materialized.
pub fn total_pairs(engine: &PrimeEngine, m_limit: u64) -> Result<u64> {
    if m_limit < 6 {
        return Ok(0);
    }
    let top = m_limit - 3;
    if top >= engine.coverage() {
        return Err(Error::Coverage {
            needed: top,
            coverage: engine.coverage(),
        });
    }
    let mut hi_bound = m_limit - 3;
    // Odd primes <= hi_bound; pi() counts 2, so drop it.
    let mut cnt_hi = engine.pi(hi_bound)? - 1;
    let mut cnt_p = 0u64;
    let mut total = 0u64;
    let mut p = 3u64;
    while 2 * p <= m_limit {
        if engine.odd_bit(p) {
            cnt_p += 1;
            let new_bound = m_limit - p;
            while hi_bound > new_bound {
                if hi_bound % 2 == 1 && engine.odd_bit(hi_bound) {
                    cnt_hi -= 1;
                }
                hi_bound -= 1;
            }
            // Partners q with p <= q <= m_limit - p.
            total += cnt_hi - cnt_p + 1;
        }
        p += 2;
    }
    Ok(total)
}

/// Small-scale oracle: same contract as [`count_pairs`], but every
/// primality test is an independent trial division and the reduced bound
/// is re-derived per m. Capped at n = 10^6 on purpose.
pub fn oracle_count_pairs(n: u64, range: RangeKind) -> Result<u64> {
    const ORACLE_LIMIT: u64 = 1_000_000;
    if n < 3 {
        return Err(Error::domain(format!(
            "pair counting needs a center n >= 3, got {n}"
        )));
    }
    if n > ORACLE_LIMIT {
        return Err(Error::domain(format!(
            "the oracle is capped at n = {ORACLE_LIMIT}, got {n}"
        )));
    }
    fn odd_prime(k: u64) -> bool {
        if k < 3 || k.is_multiple_of(2) {
            return false;
        }
        let mut d = 3u64;
        while d * d <= k {
            if k.is_multiple_of(d) {
                return false;
            }
            d += 2;
        }
        true
    }
    let mut count = 0u64;
    for m in 0..=(n - 3) {
        let p = n - m;
        let q = n + m;
        if !odd_prime(p) || !odd_prime(q) {
            continue;
        }
        if let RangeKind::Reduced = range {
            if (q as u128) * (q as u128) >= 2 * (n as u128) * (n as u128) {
                continue;
            }
        }
        count += 1;
    }
    Ok(count)
}
