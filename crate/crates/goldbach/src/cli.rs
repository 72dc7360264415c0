//! Command-line surface. Exit codes: 0 success, 1 usage error, 2 domain
//! error, 3 resource or coverage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimator::{ndf, ndf_average, EstimateConfig};
use crate::pairs::{count_pairs, reduced_max_member, RangeKind};
use crate::primes::{CachedPi, EngineConfig, PiIndex, PiLookup, PrimeEngine};
use crate::primes::{DEFAULT_COVERAGE_LIMIT, DEFAULT_SEGMENT_SIZE};
use crate::report::{
    build_table, build_totals, emit_report, emit_totals, table_coverage, totals_coverage,
    ReportFormat, TableRequest,
};

/// Totals rows above this sum limit take minutes and gigabytes; they are
/// only run when --extended is passed.
const EXTENDED_TOTALS_THRESHOLD: u64 = 100_000_000;

const PI_CACHE_ENV: &str = "GOLDBACH_PI_CACHE";

#[derive(Parser)]
#[command(
    name = "goldbach",
    version,
    about = "Exact Goldbach-pair counts and closed-form estimates",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=4096))]
    workers: Option<u64>,

    /// Hard cap on sieve coverage; larger requests are rejected
    #[arg(long, global = true, default_value_t = DEFAULT_COVERAGE_LIMIT)]
    sieve_limit: u64,

    /// Sieve segment span in integers
    #[arg(long, global = true, default_value_t = DEFAULT_SEGMENT_SIZE)]
    segment_size: u64,

    /// pi checkpoint cache file (also via GOLDBACH_PI_CACHE)
    #[arg(long, global = true)]
    pi_cache: Option<PathBuf>,

    /// Twin prime constant carried by the estimate formulas
    #[arg(long, global = true, value_enum, default_value_t = TwinConstantMode::Truncated)]
    twin_constant: TwinConstantMode,

    /// Allow extended-scale totals rows (sum limits above 10^8)
    #[arg(long, global = true)]
    extended: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TwinConstantMode {
    /// 0.66016, the five-digit constant the reference tables use below ~1e8
    Truncated,
    /// The twin prime constant at full f64 precision
    FullPrecision,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RangeArg {
    Full,
    Reduced,
}

impl From<RangeArg> for RangeKind {
    fn from(arg: RangeArg) -> RangeKind {
        match arg {
            RangeArg::Full => RangeKind::Full,
            RangeArg::Reduced => RangeKind::Reduced,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> ReportFormat {
        match arg {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact Goldbach-pair count for center N
    Count {
        n: u64,
        #[arg(long, value_enum, default_value_t = RangeArg::Full)]
        range: RangeArg,
    },
    /// Closed-form pair estimate for center N, rounded to an integer
    Estimate {
        n: u64,
        #[arg(long, value_enum, default_value_t = RangeArg::Full)]
        range: RangeArg,
        /// Scale by the unbalance correction U^(3/2)
        #[arg(long)]
        corrected: bool,
    },
    /// Continuous cumulative pair total at M
    Gtot { m: u64 },
    /// Divisor factor of N to four decimals
    Ndf { n: u64 },
    /// Mean divisor factor over [START, START+COUNT)
    NdfAverage { start: u64, count: u64 },
    /// Prime-density unbalance U(N) and its correction power
    Unbalance { n: u64 },
    /// Comparison-table rows for COUNT consecutive centers
    Table {
        #[arg(long)]
        start: u64,
        #[arg(long)]
        count: u64,
        #[arg(long, value_enum, default_value_t = RangeArg::Full)]
        range: RangeArg,
        #[arg(long)]
        corrected: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Destination path, or - for stdout
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Cumulative-totals rows, one per sum limit
    Totals {
        #[arg(required = true)]
        n_values: Vec<u64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

/// Run the CLI against the given argv and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; they are not failures.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let workers = cli.workers;
    let outcome = match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k as usize)
                .build();
            match pool {
                Ok(pool) => pool.install(|| execute(cli)),
                Err(e) => Err(Error::resource(format!("cannot build worker pool: {e}"))),
            }
        }
        None => execute(cli),
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Domain(_) | Error::CacheFormat { .. } => 2,
                Error::Coverage { .. } | Error::Resource(_) | Error::Io(_) => 3,
            }
        }
    }
}

/// A pi source that remembers every value it resolves, so runs can be
/// merged back into the cache file.
struct RecordingPi<'a> {
    inner: CachedPi<'a>,
    seen: Mutex<BTreeMap<u64, u64>>,
}

impl PiLookup for RecordingPi<'_> {
    fn pi(&self, x: u64) -> Result<u64> {
        let value = self.inner.pi(x)?;
        self.seen.lock().unwrap().insert(x, value);
        Ok(value)
    }
}

struct Session {
    engine: PrimeEngine,
    est_cfg: EstimateConfig,
    cache: PiIndex,
    cache_path: Option<PathBuf>,
    sieve_limit: u64,
    extended: bool,
}

impl Session {
    /// Reject any center/limit beyond the sieve cap before doing work.
    fn check_scale(&self, n: u64) -> Result<()> {
        if n > self.sieve_limit {
            return Err(Error::Resource(format!(
                "{n} exceeds --sieve-limit {}",
                self.sieve_limit
            )));
        }
        Ok(())
    }

    /// Grow the sieve far enough to answer pi at each point that the cache
    /// cannot already serve.
    fn prepare_pi(&mut self, points: &[u64]) -> Result<()> {
        let needed = points
            .iter()
            .copied()
            .filter(|&x| self.cache.lookup(x).is_none())
            .max();
        if let Some(x) = needed {
            self.engine.ensure(x + 2)?;
        }
        Ok(())
    }

    fn recorder(&self) -> RecordingPi<'_> {
        RecordingPi {
            inner: CachedPi {
                cache: &self.cache,
                engine: &self.engine,
            },
            seen: Mutex::new(BTreeMap::new()),
        }
    }

    /// Merge freshly resolved pi values into the cache file, if one is in use.
    fn save_cache(&self, recorder: RecordingPi<'_>) -> Result<()> {
        let Some(path) = &self.cache_path else {
            return Ok(());
        };
        let seen = recorder.seen.into_inner().unwrap();
        if seen.is_empty() {
            return Ok(());
        }
        let mut merged: BTreeMap<u64, u64> = self.cache.checkpoints().iter().copied().collect();
        merged.extend(seen);
        let index = PiIndex::new(merged.into_iter().collect())?;
        index.save(path)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let cache_path = cli
        .pi_cache
        .clone()
        .or_else(|| std::env::var_os(PI_CACHE_ENV).map(PathBuf::from));
    let cache = match &cache_path {
        Some(path) if path.exists() => PiIndex::load(path)?,
        _ => PiIndex::empty(),
    };
    let mut session = Session {
        engine: PrimeEngine::new(EngineConfig {
            coverage_limit: cli.sieve_limit,
            segment_size: cli.segment_size,
        }),
        est_cfg: match cli.twin_constant {
            TwinConstantMode::Truncated => EstimateConfig::default(),
            TwinConstantMode::FullPrecision => EstimateConfig::with_full_precision_constant(),
        },
        cache,
        cache_path,
        sieve_limit: cli.sieve_limit,
        extended: cli.extended,
    };

    match cli.command {
        Command::Count { n, range } => {
            session.check_scale(n)?;
            let range = RangeKind::from(range);
            let needed = match range {
                RangeKind::Full => n.saturating_mul(2),
                RangeKind::Reduced => reduced_max_member(n).saturating_add(2),
            };
            session.engine.ensure(needed.max(8))?;
            let count = count_pairs(&session.engine, n, range)?;
            println!("{count}");
        }
        // No up-front scale check here or for `unbalance`: a pi cache can
        // serve these beyond the sieve limit, and any actual sieving still
        // goes through ensure(), which enforces the cap.
        Command::Estimate { n, range, corrected } => {
            let range = RangeKind::from(range);
            let value = if corrected {
                session.prepare_pi(&pi_points(n, range))?;
                let recorder = session.recorder();
                let value = session.est_cfg.corrected_estimate(&recorder, n, range)?;
                session.save_cache(recorder)?;
                value
            } else {
                session.est_cfg.estimate(n, range)?
            };
            println!("{}", value.round() as u64);
        }
        Command::Gtot { m } => {
            session.check_scale(m)?;
            let value = session.est_cfg.g_tot(m as f64)?;
            println!("{value}");
        }
        Command::Ndf { n } => {
            session.check_scale(n)?;
            println!("{}", ndf(n).to_decimal_string());
        }
        Command::NdfAverage { start, count } => {
            session.check_scale(start.saturating_add(count))?;
            let mean = ndf_average(start, count)?;
            println!("{mean:.5}");
        }
        Command::Unbalance { n } => {
            session.prepare_pi(&pi_points(n, RangeKind::Full))?;
            let recorder = session.recorder();
            let ub = session.est_cfg.unbalance(&recorder, n)?;
            session.save_cache(recorder)?;
            println!("u {:.4}", ub.u);
            println!("correction {:.4}", ub.correction);
        }
        Command::Table {
            start,
            count,
            range,
            corrected,
            format,
            out,
        } => {
            let req = TableRequest {
                start,
                count,
                range: RangeKind::from(range),
                corrected,
            };
            session.check_scale(start.saturating_add(count.saturating_sub(1)))?;
            session.engine.ensure(table_coverage(&req).max(8))?;
            let rows = build_table(&session.engine, &session.est_cfg, &req)?;
            let mut dest = open_destination(&out)?;
            emit_report(&rows, ReportFormat::from(format), dest.as_mut())?;
        }
        Command::Totals {
            n_values,
            format,
            out,
        } => {
            for &n in &n_values {
                session.check_scale(n)?;
                if n > EXTENDED_TOTALS_THRESHOLD && !session.extended {
                    return Err(Error::Resource(format!(
                        "totals at {n} take minutes and gigabytes; pass --extended to allow it"
                    )));
                }
            }
            session.engine.ensure(totals_coverage(&n_values).max(8))?;
            let rows = build_totals(&session.engine, &session.est_cfg, &n_values)?;
            let mut dest = open_destination(&out)?;
            emit_totals(&rows, ReportFormat::from(format), dest.as_mut())?;
        }
    }
    Ok(())
}

/// pi points a corrected estimate or unbalance query will touch.
fn pi_points(n: u64, range: RangeKind) -> Vec<u64> {
    match range {
        RangeKind::Full => vec![n, n.saturating_mul(2)],
        RangeKind::Reduced => {
            let hi = reduced_max_member(n);
            let lo = n.saturating_mul(2) - hi - 1;
            vec![lo, n, hi]
        }
    }
}

fn open_destination(dest: &str) -> Result<Box<dyn Write>> {
    if dest == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(fs::File::create(dest)?))
    }
}
