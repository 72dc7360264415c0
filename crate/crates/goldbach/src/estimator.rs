//! The analytic estimate pipeline: Dusart's pi(x) upper bound, the
//! continuous pair total g_tot and its closed-form derivative, the NDF
//! divisor factor, NDF averaging, the prime-density unbalance U(N), and
//! the raw/corrected per-center estimates built from all of the above.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pairs::{reduced_max_member, RangeKind};
use crate::primes::{small_odd_primes, PiLookup};

/// The estimate formulas default to the twin prime constant truncated to
/// five digits; the reference comparison tables reproduce with this value
/// at every required scale below ~1e8.
pub const TRUNCATED_TWIN_CONSTANT: f64 = 0.66016;

/// Twin prime constant at full f64 precision, selectable via config.
/// Above N ~ 5e9 the truncated constant shifts 8-digit estimates by ~50.
pub const FULL_TWIN_PRIME_CONSTANT: f64 = 0.660_161_815_846_869_6;

/// Dusart's bound on pi(x) is proved for x >= 355991 and the estimator
/// refuses to extrapolate below it.
pub const DUSART_MIN_X: u64 = 355_991;

/// Tuning knobs for the estimate pipeline.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub twin_constant: f64,
    /// sqrt(2) - 1, the reduced-range thinning factor.
    pub reduced_factor: f64,
    /// Validity floor for the Dusart bound.
    pub dusart_min_x: u64,
    /// Exponent of the unbalance correction U(N)^k.
    pub correction_exponent: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            twin_constant: TRUNCATED_TWIN_CONSTANT,
            reduced_factor: std::f64::consts::SQRT_2 - 1.0,
            dusart_min_x: DUSART_MIN_X,
            correction_exponent: 1.5,
        }
    }
}

impl EstimateConfig {
    pub fn with_full_precision_constant() -> Self {
        EstimateConfig {
            twin_constant: FULL_TWIN_PRIME_CONSTANT,
            ..EstimateConfig::default()
        }
    }

    fn check_dusart_domain(&self, x: f64) -> Result<()> {
        if x < self.dusart_min_x as f64 {
            return Err(Error::Domain(format!(
                "x = {x} is below {}, the proven validity range of Dusart's pi bound",
                self.dusart_min_x
            )));
        }
        Ok(())
    }

    /// Dusart's upper bound: (x/ln x)(1 + 1/ln x + 2.51/ln^2 x).
    pub fn dusart_pi_upper(&self, x: f64) -> Result<f64> {
        self.check_dusart_domain(x)?;
        let l = x.ln();
        Ok(x / l * (1.0 + 1.0 / l + 2.51 / (l * l)))
    }

    /// Continuous approximation of the cumulative pair total:
    /// one quarter of the squared Dusart bound.
    pub fn g_tot(&self, x: f64) -> Result<f64> {
        let d = self.dusart_pi_upper(x)?;
        Ok(0.25 * d * d)
    }

    /// Closed-form derivative of [`EstimateConfig::g_tot`]:
    /// x (100 ln^2 x + 100 ln x + 251)(100 ln^3 x + 51 ln x - 753) / (20000 ln^7 x).
    pub fn g_tot_prime(&self, x: f64) -> Result<f64> {
        self.check_dusart_domain(x)?;
        let l = x.ln();
        let l2 = l * l;
        let l3 = l2 * l;
        let l7 = l3 * l3 * l;
        let a = 100.0 * l2 + 100.0 * l + 251.0;
        let b = 100.0 * l3 + 51.0 * l - 753.0;
        Ok(0.25 * x * a * b / (5000.0 * l7))
    }

    /// Per-center estimate g_tot'(2N) * 2 * C * NDF(N), thinned by
    /// sqrt(2) - 1 in the reduced range. Real-valued; rounding to an
    /// integer happens only at presentation time.
    pub fn estimate(&self, n: u64, range: RangeKind) -> Result<f64> {
        let x = n
            .checked_mul(2)
            .ok_or_else(|| Error::domain(format!("center {n} overflows 2N")))?;
        if x < self.dusart_min_x {
            return Err(Error::Domain(format!(
                "estimates need 2N >= {}, got 2N = {x}",
                self.dusart_min_x
            )));
        }
        let density = self.g_tot_prime(x as f64)?;
        let mut value = density * 2.0 * self.twin_constant * ndf(n).value();
        if let RangeKind::Reduced = range {
            value *= self.reduced_factor;
        }
        Ok(value)
    }

    /// Estimate scaled by the unbalance correction matching the range.
    pub fn corrected_estimate(
        &self,
        pi: &dyn PiLookup,
        n: u64,
        range: RangeKind,
    ) -> Result<f64> {
        let raw = self.estimate(n, range)?;
        let ub = self.unbalance_for(pi, n, range)?;
        Ok(raw * ub.correction)
    }

    /// Full-range unbalance U(N) = 2 pi(N) / pi(2N) with its correction
    /// power U(N)^k.
    pub fn unbalance(&self, pi: &dyn PiLookup, n: u64) -> Result<UnbalanceValue> {
        if n < 5 {
            return Err(Error::domain(format!(
                "unbalance needs n >= 5, got {n}"
            )));
        }
        let two_n = n
            .checked_mul(2)
            .ok_or_else(|| Error::domain(format!("center {n} overflows 2N")))?;
        let below = pi.pi(n)? as f64;
        let all = pi.pi(two_n)? as f64;
        self.unbalance_value(n, 2.0 * below / all)
    }

    /// Unbalance over the window the range actually samples. `Full` is
    /// U(N) over [0, 2N]; `Reduced` compares [(2-sqrt2)N, N] against
    /// [N, sqrt2 N], the only stretch reduced-range pairs can touch.
    pub fn unbalance_for(
        &self,
        pi: &dyn PiLookup,
        n: u64,
        range: RangeKind,
    ) -> Result<UnbalanceValue> {
        match range {
            RangeKind::Full => self.unbalance(pi, n),
            RangeKind::Reduced => {
                if n < 5 {
                    return Err(Error::domain(format!(
                        "unbalance needs n >= 5, got {n}"
                    )));
                }
                let hi = reduced_max_member(n); // floor(sqrt(2) n)
                let lo = 2 * n - hi - 1; // floor((2 - sqrt(2)) n)
                let at_lo = pi.pi(lo)?;
                let below = (pi.pi(n)? - at_lo) as f64;
                let all = (pi.pi(hi)? - at_lo) as f64;
                if all == 0.0 {
                    return Err(Error::domain(format!(
                        "no primes in the reduced window around {n}"
                    )));
                }
                self.unbalance_value(n, 2.0 * below / all)
            }
        }
    }

    fn unbalance_value(&self, n: u64, u: f64) -> Result<UnbalanceValue> {
        Ok(UnbalanceValue {
            n,
            u,
            correction: u.powf(self.correction_exponent),
        })
    }
}

/// Unbalance ratio and its correction power for one center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbalanceValue {
    pub n: u64,
    pub u: f64,
    pub correction: f64,
}

/// The divisor factor of N as an exact rational in lowest terms:
/// the product of (p-1)/(p-2) over distinct odd primes p | N with p^2 <= N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdfValue {
    n: u64,
    numerator: u64,
    denominator: u64,
    factors: Vec<u64>,
}

impl NdfValue {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// The qualifying odd prime divisors, ascending.
    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Four-decimal rendering used by the report columns (e.g. "1.3333").
    pub fn to_decimal_string(&self) -> String {
        format!("{:.4}", self.value())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact NDF of `n`. Factors are found by trial division against sieved
/// odd primes up to sqrt(n); divisors above sqrt(n) never qualify. The
/// NDF of 1, of any prime, and of a prime times a power of two is 1.
pub fn ndf(n: u64) -> NdfValue {
    let mut numerator = 1u64;
    let mut denominator = 1u64;
    let mut factors = Vec::new();
    for p in small_odd_primes(crate::primes::isqrt_u64(n)) {
        if n.is_multiple_of(p) {
            numerator *= p - 1;
            denominator *= p - 2;
            factors.push(p);
        }
    }
    let g = gcd(numerator, denominator);
    NdfValue {
        n,
        numerator: numerator / g,
        denominator: denominator / g,
        factors,
    }
}

/// Arithmetic mean of NDF over `[start, start + count)`.
///
/// Computed windowed: one factor-marking pass per chunk instead of a
/// factorization per element. Chunks are fixed-size and summed in index
/// order, so the result is bit-identical for any worker count.
pub fn ndf_average(start: u64, count: u64) -> Result<f64> {
    if start < 2 {
        return Err(Error::domain(format!(
            "ndf averaging starts at 2, got {start}"
        )));
    }
    if count == 0 {
        return Err(Error::domain("ndf averaging needs at least one value"));
    }
    let end = start
        .checked_add(count)
        .ok_or_else(|| Error::resource("ndf window overflows u64"))?;
    let base_primes = small_odd_primes(crate::primes::isqrt_u64(end - 1));

    const CHUNK: u64 = 1 << 15;
    let chunks = count.div_ceil(CHUNK);
    let partial_sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(end);
            chunk_ndf_sum(lo, hi, &base_primes)
        })
        .collect();
    Ok(partial_sums.iter().sum::<f64>() / count as f64)
}

/// Sum of NDF over `[lo, hi)` via multiples of each base prime.
fn chunk_ndf_sum(lo: u64, hi: u64, base_primes: &[u64]) -> f64 {
    let len = (hi - lo) as usize;
    let mut values = vec![1.0f64; len];
    for &p in base_primes {
        if p * p >= hi {
            break;
        }
        let ratio = (p - 1) as f64 / (p - 2) as f64;
        // Only multiples with p^2 <= n qualify.
        let mut m = lo.div_ceil(p) * p;
        if m < p * p {
            m = p * p;
        }
        while m < hi {
            values[(m - lo) as usize] *= ratio;
            m += p;
        }
    }
    values.iter().sum()
}
