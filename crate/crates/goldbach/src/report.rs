//! Comparison-table builders and writers: per-center rows (exact count
//! against the estimate, optionally unbalance-corrected) and cumulative
//! totals rows (exact pair totals against the quarter-squared prime count),
//! emitted as CSV or markdown.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{ndf, EstimateConfig};
use crate::pairs::{count_pairs, reduced_max_member, total_pairs, RangeKind};
use crate::primes::PrimeEngine;

/// Half-away-from-zero rounding to four decimals, the table column grain.
pub fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

/// One per-center comparison row. `u`, `correction` and `corrected_ratio`
/// are only present in corrected tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub n: u64,
    pub ndf: f64,
    pub exact: u64,
    pub estimate: u64,
    pub ratio: f64,
    pub u: Option<f64>,
    pub correction: Option<f64>,
    pub corrected_ratio: Option<f64>,
}

/// One cumulative-totals row: exact total of prime pairs with sum <= n,
/// the quarter-squared exact prime count as its estimate, and the
/// unbalance powers diagnosed at the window midpoint n/2.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalsRow {
    pub n: u64,
    pub total: u64,
    pub approx: u64,
    pub ratio: f64,
    pub u: f64,
    pub u_sq: f64,
    pub u_32: f64,
}

/// Inputs for one comparison-table block.
#[derive(Debug, Clone, Copy)]
pub struct TableRequest {
    pub start: u64,
    pub count: u64,
    pub range: RangeKind,
    pub corrected: bool,
}

/// Sieve coverage a table block needs before rows can be built.
pub fn table_coverage(req: &TableRequest) -> u64 {
    let max_n = req.start + req.count.saturating_sub(1);
    match req.range {
        RangeKind::Full => max_n.saturating_mul(2).saturating_add(2),
        RangeKind::Reduced => reduced_max_member(max_n).saturating_add(2),
    }
}

/// Sieve coverage a totals run needs.
pub fn totals_coverage(n_values: &[u64]) -> u64 {
    n_values.iter().copied().max().unwrap_or(0) + 2
}

fn with_row(err: Error, n: u64) -> Error {
    match err {
        Error::Domain(msg) => Error::Domain(format!("row n={n}: {msg}")),
        Error::Resource(msg) => Error::Resource(format!("row n={n}: {msg}")),
        other => other,
    }
}

fn build_row(
    engine: &PrimeEngine,
    cfg: &EstimateConfig,
    n: u64,
    range: RangeKind,
    corrected: bool,
) -> Result<EstimateRow> {
    let ndf_value = ndf(n).value();
    let exact = count_pairs(engine, n, range)?;
    let estimate = cfg.estimate(n, range)?.round() as u64;
    let ratio = round4(estimate as f64 / exact as f64);
    let (u, correction, corrected_ratio) = if corrected {
        let ub = cfg.unbalance_for(engine, n, range)?;
        (
            Some(round4(ub.u)),
            Some(round4(ub.correction)),
            Some(round4(estimate as f64 * ub.correction / exact as f64)),
        )
    } else {
        (None, None, None)
    };
    Ok(EstimateRow {
        n,
        ndf: round4(ndf_value),
        exact,
        estimate,
        ratio,
        u,
        correction,
        corrected_ratio,
    })
}

/// Build `count` consecutive rows starting at `start`. Rows are computed
/// in parallel and collected in ascending n; the first failing row aborts
/// the whole table.
pub fn build_table(
    engine: &PrimeEngine,
    cfg: &EstimateConfig,
    req: &TableRequest,
) -> Result<Vec<EstimateRow>> {
    (req.start..req.start + req.count)
        .into_par_iter()
        .map(|n| build_row(engine, cfg, n, req.range, req.corrected).map_err(|e| with_row(e, n)))
        .collect()
}

/// Build one totals row per requested sum limit.
pub fn build_totals(
    engine: &PrimeEngine,
    cfg: &EstimateConfig,
    n_values: &[u64],
) -> Result<Vec<TotalsRow>> {
    n_values
        .par_iter()
        .map(|&n| build_totals_row(engine, cfg, n).map_err(|e| with_row(e, n)))
        .collect()
}

fn build_totals_row(engine: &PrimeEngine, cfg: &EstimateConfig, n: u64) -> Result<TotalsRow> {
    if n < 10 {
        return Err(Error::domain(format!(
            "totals rows need a sum limit of at least 10, got {n}"
        )));
    }
    let total = total_pairs(engine, n)?;
    let primes = engine.pi(n)?;
    let approx = ((primes as u128 * primes as u128) / 4) as u64;
    let ub = cfg.unbalance(engine, n / 2)?;
    Ok(TotalsRow {
        n,
        total,
        approx,
        ratio: total as f64 / approx as f64,
        u: ub.u,
        u_sq: ub.u * ub.u,
        u_32: ub.u.powf(1.5),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn opt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Write per-center rows. CSV columns are fixed:
/// `n,ndf,exact,estimate,ratio,u,correction,corrected_ratio`, with empty
/// cells for columns the table did not compute. Markdown mirrors the
/// comparison-table layout (corrected tables swap the NDF column for the
/// unbalance columns).
pub fn emit_report(rows: &[EstimateRow], format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::domain("refusing to emit an empty report"));
    }
    match format {
        ReportFormat::Csv => {
            writeln!(out, "n,ndf,exact,estimate,ratio,u,correction,corrected_ratio")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{:.4},{},{},{:.4},{},{},{}",
                    r.n,
                    r.ndf,
                    r.exact,
                    r.estimate,
                    r.ratio,
                    opt4(r.u),
                    opt4(r.correction),
                    opt4(r.corrected_ratio),
                )?;
            }
        }
        ReportFormat::Markdown => {
            let corrected = rows[0].u.is_some();
            if corrected {
                writeln!(
                    out,
                    "| N | exact count | estimate | estimate/exact | U(N) | correction | corr. estimate/exact |"
                )?;
                writeln!(out, "|---|---|---|---|---|---|---|")?;
                for r in rows {
                    writeln!(
                        out,
                        "| {} | {} | {} | {:.4} | {} | {} | {} |",
                        r.n,
                        r.exact,
                        r.estimate,
                        r.ratio,
                        opt4(r.u),
                        opt4(r.correction),
                        opt4(r.corrected_ratio),
                    )?;
                }
            } else {
                writeln!(out, "| N | NDF | exact count | estimate | estimate/exact |")?;
                writeln!(out, "|---|---|---|---|---|")?;
                for r in rows {
                    writeln!(
                        out,
                        "| {} | {:.4} | {} | {} | {:.4} |",
                        r.n, r.ndf, r.exact, r.estimate, r.ratio,
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Write totals rows as CSV (`n,total,approx,ratio,u,u_sq,u_32`) or
/// markdown.
pub fn emit_totals(rows: &[TotalsRow], format: ReportFormat, out: &mut dyn Write) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::domain("refusing to emit an empty report"));
    }
    match format {
        ReportFormat::Csv => {
            writeln!(out, "n,total,approx,ratio,u,u_sq,u_32")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{:.4},{:.4},{:.4},{:.4}",
                    r.n, r.total, r.approx, r.ratio, r.u, r.u_sq, r.u_32,
                )?;
            }
        }
        ReportFormat::Markdown => {
            writeln!(
                out,
                "| N | prime pairs total | estimate | total/estimate | U(N) | U(N)^2 | U(N)^3/2 |"
            )?;
            writeln!(out, "|---|---|---|---|---|---|---|")?;
            for r in rows {
                writeln!(
                    out,
                    "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                    r.n, r.total, r.approx, r.ratio, r.u, r.u_sq, r.u_32,
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine_to(limit: u64) -> PrimeEngine {
        let mut e = PrimeEngine::with_defaults();
        e.ensure(limit).unwrap();
        e
    }

    fn small_request() -> TableRequest {
        TableRequest {
            start: 200_000,
            count: 2,
            range: RangeKind::Full,
            corrected: false,
        }
    }

    #[test]
    fn rows_are_internally_consistent() {
        let engine = engine_to(402_000);
        let cfg = EstimateConfig::default();
        let rows = build_table(&engine, &cfg, &small_request()).unwrap();
        assert_eq!(rows.len(), 2);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.n, 200_000 + i as u64);
            assert_eq!(
                row.ratio,
                round4(row.estimate as f64 / row.exact as f64)
            );
            assert!(row.u.is_none());
        }
    }

    #[test]
    fn corrected_rows_expose_the_unbalance() {
        let engine = engine_to(402_000);
        let cfg = EstimateConfig::default();
        let req = TableRequest {
            corrected: true,
            ..small_request()
        };
        let rows = build_table(&engine, &cfg, &req).unwrap();
        for row in &rows {
            let u = row.u.unwrap();
            assert!(u > 1.0);
            assert!((row.correction.unwrap() - round4(u.powf(1.5))).abs() < 2e-4);
            assert!(row.corrected_ratio.unwrap() > row.ratio);
        }
    }

    #[test]
    fn failing_rows_name_the_center() {
        let engine = engine_to(402_000);
        let cfg = EstimateConfig::default();
        let req = TableRequest {
            start: 2,
            count: 1,
            range: RangeKind::Full,
            corrected: false,
        };
        match build_table(&engine, &cfg, &req) {
            Err(Error::Domain(msg)) => assert!(msg.contains("n=2"), "{msg}"),
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    #[test]
    fn csv_layout_is_fixed() {
        let row = EstimateRow {
            n: 10,
            ndf: 1.3333,
            exact: 2,
            estimate: 3,
            ratio: 1.5,
            u: None,
            correction: None,
            corrected_ratio: None,
        };
        let mut out = Vec::new();
        emit_report(&[row], ReportFormat::Csv, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n,ndf,exact,estimate,ratio,u,correction,corrected_ratio\n10,1.3333,2,3,1.5000,,,\n"
        );
    }

    #[test]
    fn empty_reports_are_refused() {
        let mut out = Vec::new();
        assert!(matches!(
            emit_report(&[], ReportFormat::Csv, &mut out),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            emit_totals(&[], ReportFormat::Markdown, &mut out),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rebuilding_gives_byte_identical_reports() {
        let engine = engine_to(402_000);
        let cfg = EstimateConfig::default();
        let render = || {
            let rows = build_table(&engine, &cfg, &small_request()).unwrap();
            let mut out = Vec::new();
            emit_report(&rows, ReportFormat::Markdown, &mut out).unwrap();
            out
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn totals_row_small_scale() {
        let engine = engine_to(1_002);
        let cfg = EstimateConfig::default();
        let rows = build_totals(&engine, &cfg, &[1_000]).unwrap();
        let row = &rows[0];
        // pi(1000) = 168 -> floor(168^2 / 4) = 7056.
        assert_eq!(row.approx, 7_056);
        assert_eq!(row.total, total_pairs(&engine, 1_000).unwrap());
        assert!((row.ratio - row.total as f64 / 7_056.0).abs() < 1e-15);
        assert!((row.u_sq - row.u * row.u).abs() < 1e-12);
        assert!((row.u_32 - row.u.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn totals_reject_tiny_limits() {
        let engine = engine_to(1_002);
        let cfg = EstimateConfig::default();
        assert!(matches!(
            build_totals(&engine, &cfg, &[8]),
            Err(Error::Domain(_))
        ));
    }
}
