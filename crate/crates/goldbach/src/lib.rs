//! A prime-pair laboratory: exact Goldbach-pair counts (per-center and
//! cumulative) backed by a segmented odd-only sieve, plus a closed-form
//! estimate pipeline (Dusart pi bound, continuous pair totals and their
//! derivative, divisor factors, unbalance corrections) and table builders
//! that compare the two side by side.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod pairs;
pub mod primes;
pub mod report;

pub use error::{Error, Result};
pub use estimator::{ndf, ndf_average, EstimateConfig, NdfValue, UnbalanceValue};
pub use pairs::{count_pairs, oracle_count_pairs, total_pairs, RangeKind};
pub use primes::{EngineConfig, PiIndex, PiLookup, PrimeEngine, SievedSegment};
pub use report::{
    build_table, build_totals, emit_report, emit_totals, EstimateRow, ReportFormat, TableRequest,
    TotalsRow,
};
