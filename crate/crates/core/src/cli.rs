//! `moebius-lab` command line: compute and cache μ tables, cross-check them,
//! and write the statistics, bound and spectrum data sets.
//!
//! Summaries go to stdout as one JSON document; bulk series go to files under
//! `--out`. Concurrent writers on one cache path are unsupported (last writer wins).

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::cache;
use crate::error::{MoebiusError, Result};
use crate::matrix;
use crate::mu;
use crate::spectral::{self, Window};
use crate::stats::{self, BlockStatsRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const DEFAULT_N_MAX: usize = 20_000_000;
pub const DEFAULT_CACHE: &str = "mu.mut1";
pub const DEFAULT_BLOCK_LENS: [usize; 3] = [1_000, 10_000, 100_000];
pub const DEFAULT_CLT_BLOCK: usize = 100_000;
pub const THREADS_ENV: &str = "MOEBIUS_LAB_THREADS";

const ROOTS_CHECK_MAX: usize = 1_000;
const MATRIX_CHECK_MAX: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "moebius-lab",
    version,
    about = "Möbius function tables, oracle checks and μ-sequence statistics"
)]
pub struct Cli {
    /// Table size for `compute`; evaluation index / prefix length elsewhere.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,

    /// MUT1 cache file.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,

    /// Block length for `stats` (default: 1000, 10000 and 100000).
    #[arg(long, global = true)]
    pub block: Option<usize>,

    /// Most blocks per block length.
    #[arg(long, global = true, default_value_t = 200)]
    pub max_blocks: usize,

    /// Tail probability for `bound`; repeatable.
    #[arg(long, global = true)]
    pub alpha: Vec<f64>,

    /// Welch segment length (power of two).
    #[arg(long, global = true, default_value_t = spectral::DEFAULT_SEGMENT_LEN)]
    pub segment: usize,

    /// Histogram bins over [-4, 4].
    #[arg(long, global = true, default_value_t = 41)]
    pub bins: usize,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Directory for data files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Build μ(1..n) by the divisor recursion and write the cache.
    Compute,
    /// Check a table against the sieve, roots-of-unity and matrix identities.
    Verify,
    /// Block frequencies and normalized-sum histograms.
    Stats,
    /// Mertens series and running mean.
    Mertens,
    /// CLT and Chebyshev bounds on M(n).
    Bound,
    /// Welch power spectral density.
    Psd,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        return report_error(&e);
    }
    let outcome = match cli.command {
        Command::Compute => cmd_compute(&cli),
        Command::Verify => cmd_verify(&cli),
        Command::Stats => cmd_stats(&cli),
        Command::Mertens => cmd_mertens(&cli),
        Command::Bound => cmd_bound(&cli),
        Command::Psd => cmd_psd(&cli),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| MoebiusError::invalid(format!("{THREADS_ENV}={raw} is not a worker count")))?;
    // a second initialization in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn exit_code(e: &MoebiusError) -> i32 {
    match e {
        MoebiusError::InvalidArgument(_) => EXIT_USAGE,
        MoebiusError::Io { .. } | MoebiusError::CorruptCache { .. } => EXIT_IO,
        MoebiusError::NumericalFailure { .. } | MoebiusError::IdentityViolation { .. } => {
            EXIT_VERIFY
        }
        MoebiusError::Resource { .. } => EXIT_INTERNAL,
    }
}

fn report_error(e: &MoebiusError) -> i32 {
    let class = match exit_code(e) {
        EXIT_USAGE => "usage",
        EXIT_IO => "io",
        EXIT_VERIFY => "verification",
        _ => "internal",
    };
    eprintln!(
        "{}",
        json!({ "status": "error", "class": class, "message": e.to_string() })
    );
    exit_code(e)
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("summary serializes")
    );
}

fn cache_path(cli: &Cli) -> PathBuf {
    cli.cache
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
}

/// Loads the cache and trims it to `--n` when given.
fn load_values(cli: &Cli) -> Result<Vec<i8>> {
    let table = cache::read_table(&cache_path(cli))?;
    let mut values = table.into_values();
    if let Some(n) = cli.n {
        if n == 0 || n > values.len() {
            return Err(MoebiusError::invalid(format!(
                "--n {n} outside the cached range 1..={}",
                values.len()
            )));
        }
        values.truncate(n);
    }
    Ok(values)
}

fn create_out_file(cli: &Cli, name: &str) -> Result<(PathBuf, BufWriter<fs::File>)> {
    fs::create_dir_all(&cli.out).map_err(|e| MoebiusError::io(&cli.out, e))?;
    let path = cli.out.join(name);
    let file = fs::File::create(&path).map_err(|e| MoebiusError::io(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(
    cli: &Cli,
    name: &str,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let (path, mut w) = create_out_file(cli, name)?;
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| MoebiusError::io(&path, e))?;
    Ok(path)
}

fn write_json_file<T: Serialize>(cli: &Cli, name: &str, value: &T) -> Result<PathBuf> {
    write_file(cli, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

fn cmd_compute(cli: &Cli) -> Result<i32> {
    let n_max = cli.n.unwrap_or(DEFAULT_N_MAX);
    if n_max == 0 {
        return Err(MoebiusError::invalid("--n must be at least 1"));
    }
    let start = Instant::now();
    let table = mu::build_mu_recursive(n_max)?;
    let elapsed = start.elapsed().as_secs_f64();
    let path = cache_path(cli);
    cache::write_table(&path, &table)?;
    let m_at_n: i64 = table.values().iter().map(|&v| i64::from(v)).sum();
    print_json(&json!({
        "n_max": n_max,
        "elapsed_seconds": elapsed,
        "mertens_at_n_max": m_at_n,
        "checksum": format!("{:016x}", cache::checksum(table.values())),
        "cache": path,
    }));
    Ok(EXIT_OK)
}

/// Outcome of one `verify` check; the machine-readable failure record.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: &'static str,
    pub passed: bool,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn pass(check: &'static str, checked: usize) -> Self {
        CheckRecord {
            check,
            passed: true,
            checked,
            first_index: None,
            detail: None,
        }
    }

    fn fail(check: &'static str, checked: usize, index: Option<u64>, detail: String) -> Self {
        CheckRecord {
            check,
            passed: false,
            checked,
            first_index: index,
            detail: Some(detail),
        }
    }
}

fn first_mismatch(a: &[i8], b: &[i8]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y).map(|i| i + 1)
}

fn compare_tables(check: &'static str, got: &[i8], oracle: &[i8]) -> CheckRecord {
    match first_mismatch(got, oracle) {
        None => CheckRecord::pass(check, got.len()),
        Some(n) => CheckRecord::fail(
            check,
            got.len(),
            Some(n as u64),
            format!(
                "μ({n}) = {} but the sieve gives {}",
                got[n - 1],
                oracle[n - 1]
            ),
        ),
    }
}

/// Runs every oracle check on `table`; the first failure of each check is recorded.
pub fn verify_table(table: &[i8]) -> Result<Vec<CheckRecord>> {
    let n = table.len();
    let oracle_len = n.max(ROOTS_CHECK_MAX).max(MATRIX_CHECK_MAX);
    let (sieve, _) = mu::build_mu_sieve(oracle_len)?;
    let sieve = sieve.values();
    let mut records = Vec::new();

    records.push(compare_tables("table_vs_sieve", table, &sieve[..n]));
    let recursive = mu::build_mu_recursive(n)?;
    records.push(compare_tables(
        "recursive_vs_sieve",
        recursive.values(),
        &sieve[..n],
    ));

    let mut roots = CheckRecord::pass("roots_of_unity", ROOTS_CHECK_MAX);
    for k in 1..=ROOTS_CHECK_MAX {
        let expected = sieve[k - 1];
        let outcome = mu::mu_root_of_unity(k as u64);
        let bad = match &outcome {
            Ok(v) if *v == expected && (k > n || table[k - 1] == *v) => None,
            Ok(v) => Some(format!(
                "root sum gives {v}, sieve {expected}, table {:?}",
                table.get(k - 1)
            )),
            Err(e) => Some(e.to_string()),
        };
        if let Some(detail) = bad {
            roots = CheckRecord::fail("roots_of_unity", ROOTS_CHECK_MAX, Some(k as u64), detail);
            break;
        }
    }
    records.push(roots);

    let mut inverse = CheckRecord::pass("u_times_v_identity", MATRIX_CHECK_MAX);
    for k in 1..=MATRIX_CHECK_MAX {
        if !matrix::verify_inverse(k, sieve)? {
            inverse = CheckRecord::fail(
                "u_times_v_identity",
                MATRIX_CHECK_MAX,
                Some(k as u64),
                format!("U·V ≠ I at dimension {k}"),
            );
            break;
        }
    }
    records.push(inverse);

    let oracle_m = mu::mertens_prefix(&sieve[..MATRIX_CHECK_MAX])?;
    let table_m = mu::mertens_prefix(&table[..n.min(MATRIX_CHECK_MAX)])?;
    let mut det = CheckRecord::pass("redheffer_determinant", MATRIX_CHECK_MAX);
    for k in 1..=MATRIX_CHECK_MAX {
        let d = matrix::redheffer_determinant(k)?;
        let want = BigInt::from(oracle_m.get(k).unwrap());
        let table_ok = table_m.get(k).is_none_or(|m| BigInt::from(m) == d);
        if d != want || !table_ok {
            det = CheckRecord::fail(
                "redheffer_determinant",
                MATRIX_CHECK_MAX,
                Some(k as u64),
                format!(
                    "det(R_{k}) = {d}, sieve M = {want}, table M = {:?}",
                    table_m.get(k)
                ),
            );
            break;
        }
    }
    records.push(det);
    Ok(records)
}

fn cmd_verify(cli: &Cli) -> Result<i32> {
    let fresh = cli.cache.is_none() && cli.n.is_some();
    let (source, values) = if fresh {
        let n = cli.n.unwrap();
        if n == 0 {
            return Err(MoebiusError::invalid("--n must be at least 1"));
        }
        (
            "recursive".to_string(),
            mu::build_mu_recursive(n)?.into_values(),
        )
    } else {
        let path = cache_path(cli);
        match load_values(cli) {
            Ok(v) => (path.display().to_string(), v),
            Err(MoebiusError::CorruptCache { index, detail, .. }) => {
                let record = CheckRecord::fail("cache_format", 0, index, detail);
                print_json(&json!({
                    "status": "fail",
                    "source": path,
                    "checks": [record],
                }));
                return Ok(EXIT_VERIFY);
            }
            Err(e) => return Err(e),
        }
    };
    let records = verify_table(&values)?;
    let ok = records.iter().all(|r| r.passed);
    print_json(&json!({
        "status": if ok { "pass" } else { "fail" },
        "source": source,
        "n_max": values.len(),
        "checks": records,
    }));
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

pub fn block_stats_csv(rows: &[BlockStatsRow], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        w,
        "block,len,n_minus,n_zero,n_plus,pe_minus,pe_zero,pe_plus,pt_minus,pt_zero,pt_plus"
    )?;
    for r in rows {
        let [tm, tz, tp] = r.p_t();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.block_index,
            r.block_len,
            r.count_minus,
            r.count_zero,
            r.count_plus,
            r.p_e_minus,
            r.p_e_zero,
            r.p_e_plus,
            tm,
            tz,
            tp
        )?;
    }
    Ok(())
}

pub fn histogram_csv(bins: &[stats::HistogramBin], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "bin_center,density,normal_density")?;
    for b in bins {
        writeln!(
            w,
            "{},{},{}",
            b.center,
            b.density,
            stats::normal_pdf(b.center)
        )?;
    }
    Ok(())
}

fn write_histogram(cli: &Cli, name: &str, samples: &[f64]) -> Result<PathBuf> {
    let bins = stats::histogram(samples, cli.bins, (-4.0, 4.0))?;
    match cli.format {
        OutputFormat::Csv => write_file(cli, &format!("{name}.csv"), |w| histogram_csv(&bins, w)),
        OutputFormat::Json => {
            let rows: Vec<_> = bins
                .iter()
                .map(|b| json!({ "bin_center": b.center, "density": b.density, "normal_density": stats::normal_pdf(b.center) }))
                .collect();
            write_json_file(cli, &format!("{name}.json"), &rows)
        }
    }
}

fn cmd_stats(cli: &Cli) -> Result<i32> {
    let values = load_values(cli)?;
    let n = values.len();
    let lens: Vec<usize> = cli.block.map_or(DEFAULT_BLOCK_LENS.to_vec(), |b| vec![b]);
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    let mut block_summaries = Vec::new();
    for len in lens {
        let rows = match stats::block_frequencies(&values, len, cli.max_blocks) {
            Ok(rows) => rows,
            Err(MoebiusError::InvalidArgument(msg)) if cli.block.is_none() => {
                skipped.push(msg);
                continue;
            }
            Err(e) => return Err(e),
        };
        let name = format!("block_stats_{len}.{}", cli.format.ext());
        files.push(match cli.format {
            OutputFormat::Csv => write_file(cli, &name, |w| block_stats_csv(&rows, w))?,
            OutputFormat::Json => write_json_file(cli, &name, &rows)?,
        });
        let max_dev = rows
            .iter()
            .map(BlockStatsRow::max_deviation)
            .fold(0.0, f64::max);
        block_summaries.push(
            json!({ "block_len": len, "blocks": rows.len(), "max_abs_pe_minus_pt": max_dev }),
        );
    }

    let global = stats::block_frequencies(&values, n, 1)?.remove(0);
    let clt_len = cli.block.unwrap_or(DEFAULT_CLT_BLOCK);
    let mut clt = serde_json::Map::new();
    for (name, samples) in [
        (
            "hist_mertens",
            stats::normalized_mertens_samples(&values, clt_len),
        ),
        ("hist_abs", stats::abs_sum_block_samples(&values, clt_len)),
    ] {
        match samples {
            Ok(s) => {
                files.push(write_histogram(cli, name, &s)?);
                let (mean, var) = stats::mean_and_variance(&s).unwrap_or((f64::NAN, f64::NAN));
                clt.insert(
                    name.into(),
                    json!({ "samples": s.len(), "mean": mean, "variance": var }),
                );
            }
            Err(MoebiusError::InvalidArgument(msg)) => skipped.push(format!("{name}: {msg}")),
            Err(e) => return Err(e),
        }
    }

    print_json(&json!({
        "n_max": n,
        "global": {
            "counts": [global.count_minus, global.count_zero, global.count_plus],
            "p_e": global.p_e(),
            "p_t": global.p_t(),
        },
        "squarefree_residual": stats::squarefree_residual(&values, n)?,
        "abs_sum_stat": stats::abs_sum_stat(&values, n)?,
        "blocks": block_summaries,
        "clt_block_len": clt_len,
        "clt": clt,
        "files": files,
        "skipped": skipped,
    }));
    Ok(EXIT_OK)
}

fn cmd_mertens(cli: &Cli) -> Result<i32> {
    let values = load_values(cli)?;
    let series = mu::mertens_prefix(&values)?;
    let mean = mu::running_mean(&series);
    let path = match cli.format {
        OutputFormat::Csv => write_file(cli, "mertens.csv", |w| {
            writeln!(w, "n,m,running_mean")?;
            for (i, (m, r)) in series.values().iter().zip(&mean).enumerate() {
                writeln!(w, "{},{},{}", i + 1, m, r)?;
            }
            Ok(())
        })?,
        OutputFormat::Json => write_json_file(
            cli,
            "mertens.json",
            &json!({ "m": series.values(), "running_mean": mean }),
        )?,
    };
    let (arg, peak) = series
        .values()
        .iter()
        .enumerate()
        .max_by_key(|(_, m)| m.unsigned_abs())
        .map(|(i, &m)| (i + 1, m))
        .unwrap();
    print_json(&json!({
        "n_max": series.n_max(),
        "mertens_at_n_max": series.values().last(),
        "running_mean_at_n_max": mean.last(),
        "max_abs_m": peak.unsigned_abs(),
        "argmax_abs_m": arg,
        "files": [path],
    }));
    Ok(EXIT_OK)
}

fn cmd_bound(cli: &Cli) -> Result<i32> {
    let table = cache::read_table(&cache_path(cli))?;
    let n = cli.n.unwrap_or(table.n_max());
    if n == 0 || n > table.n_max() {
        return Err(MoebiusError::invalid(format!(
            "--n {n} outside the cached range 1..={}",
            table.n_max()
        )));
    }
    let alphas = if cli.alpha.is_empty() {
        vec![0.05]
    } else {
        cli.alpha.clone()
    };
    let series = mu::mertens_prefix(&table.values()[..n])?;
    let (_, omega) = mu::build_mu_sieve(n)?;
    let mut reports = Vec::new();
    for &alpha in &alphas {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(MoebiusError::invalid(format!(
                "--alpha must lie in (0, 1), got {alpha}"
            )));
        }
        reports.push(stats::clt_bound(n, alpha, &series)?);
        reports.push(stats::chebyshev_bound(n, alpha, &series, &omega)?);
    }
    let path = match cli.format {
        OutputFormat::Csv => write_file(cli, "bounds.csv", |w| {
            writeln!(
                w,
                "kind,n,alpha,k_alpha_2,bound,observed_m,holds,holds_two_sided,probability"
            )?;
            for r in &reports {
                let kind = match r.kind {
                    stats::BoundKind::Clt => "clt",
                    stats::BoundKind::Chebyshev => "chebyshev",
                };
                writeln!(
                    w,
                    "{kind},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.alpha,
                    r.k_alpha_2,
                    r.bound,
                    r.observed_m,
                    r.holds,
                    r.holds_two_sided,
                    r.probability
                )?;
            }
            Ok(())
        })?,
        OutputFormat::Json => write_json_file(cli, "bounds.json", &reports)?,
    };
    print_json(&json!({
        "n": n,
        "mertens_type_prob_c1": stats::mertens_type_prob(1.0)?,
        "reports": reports,
        "files": [path],
    }));
    Ok(EXIT_OK)
}

fn cmd_psd(cli: &Cli) -> Result<i32> {
    let values = load_values(cli)?;
    let psd = spectral::welch_psd(
        &values,
        cli.segment,
        spectral::DEFAULT_OVERLAP,
        Window::Hann,
    )?;
    let ratio = spectral::peak_ratio(&psd)?;
    let path = match cli.format {
        OutputFormat::Csv => write_file(cli, "psd.csv", |w| {
            writeln!(w, "freq,power")?;
            for (f, p) in psd.freqs.iter().zip(&psd.power) {
                writeln!(w, "{f},{p}")?;
            }
            Ok(())
        })?,
        OutputFormat::Json => write_json_file(cli, "psd.json", &psd)?,
    };
    print_json(&json!({
        "n_max": values.len(),
        "segment_len": psd.segment_len,
        "overlap": psd.overlap,
        "window": psd.window,
        "n_segments": psd.n_segments,
        "bins": psd.power.len(),
        "peak_ratio": ratio,
        "files": [path],
    }));
    Ok(EXIT_OK)
}
