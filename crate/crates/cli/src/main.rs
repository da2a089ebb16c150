use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use classtab::classnum::CongruenceClass;
use classtab::pipeline::{recorded_bound, run_tabulate, verify_records, OutputFormat, RunConfig};
use classtab::qform::group_table;
use classtab::stats;
use classtab::tablefile::read_table_dir;
use classtab::Error;

/// Environment variable that overrides the staging directory.
const STAGING_ENV: &str = "CLASSTAB_STAGING";

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "classtab", version, about = "Class numbers and class groups of imaginary quadratic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate h(Δ) and Cl(Δ) for all fundamental |Δ| < bound.
    Tabulate {
        #[arg(long, value_parser = parse_count)]
        bound: u64,
        /// 8mod16, 12mod16, 5mod8, 1mod8 or all; may be repeated.
        #[arg(long = "class", default_value = "all")]
        classes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Memory budget for the multiplication working set, in bytes.
        #[arg(long, value_parser = parse_count, default_value = "1073741824")]
        chunk_mem: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "format", value_enum, default_values_t = [Format::Bin])]
        formats: Vec<Format>,
        /// Directory for out-of-core chunk files (default: <out>/staging).
        #[arg(long)]
        staging: Option<PathBuf>,
        /// Keep the multiplication in memory regardless of its size.
        #[arg(long)]
        in_memory: bool,
    },
    /// Check a table against the Kronecker–Hurwitz class number relation.
    Verify {
        #[arg(long, value_parser = parse_count)]
        bound: u64,
        #[arg(long)]
        table: PathBuf,
    },
    /// Statistics over a finished table.
    Stats {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_enum)]
        report: Report,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only use records with |Δ| below this bound (default: the bound of the run).
        #[arg(long, value_parser = parse_count)]
        bound: Option<u64>,
    },
    /// Class number and group structure by enumeration of reduced forms.
    Oracle {
        /// |Δ|
        #[arg(long)]
        delta: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bin,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Littlewood,
    CohenLenstra,
    Exotic,
    Idoneal,
}

/// Plain integers, `a^b` and `aeb`.
fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    let pow = |base: &str, exp: &str| -> Option<u64> {
        let b: u64 = base.parse().ok()?;
        let e: u32 = exp.parse().ok()?;
        b.checked_pow(e)
    };
    let v = if let Some((b, e)) = s.split_once('^') {
        pow(b, e)
    } else if let Some((m, e)) = s.split_once(['e', 'E']) {
        pow("10", e).and_then(|p| m.parse::<u64>().ok()?.checked_mul(p))
    } else {
        s.parse().ok()
    };
    v.ok_or_else(|| format!("{s:?} is not a count"))
}

fn parse_classes(raw: &[String]) -> anyhow::Result<Vec<CongruenceClass>> {
    let mut out = Vec::new();
    for item in raw.iter().flat_map(|s| s.split(',')) {
        if item == "all" {
            out.extend(CongruenceClass::ALL);
        } else {
            out.push(item.parse::<CongruenceClass>()?);
        }
    }
    out.sort_by_key(|c| c.label());
    out.dedup();
    Ok(out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io(_) | Error::TruncatedChunk { .. } | Error::ChecksumMismatch(_) | Error::Format(_)) => {
            EXIT_IO
        }
        Some(
            Error::InvalidParameter(_)
            | Error::BoundTooLarge(_)
            | Error::GroupTooLarge { .. }
            | Error::MissingRecord(_)
            | Error::TableGap(_),
        ) => EXIT_CONFIG,
        Some(_) => EXIT_VERIFY,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
        None => EXIT_CONFIG,
    }
}

fn write_or_print(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, body)
            .map_err(Error::from)
            .with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Tabulate {
            bound,
            classes,
            out,
            chunk_mem,
            threads,
            seed,
            formats,
            staging,
            in_memory,
        } => {
            let mut cfg = RunConfig::new(bound);
            cfg.classes = parse_classes(&classes)?;
            cfg.memory_budget = chunk_mem;
            cfg.threads = threads;
            cfg.seed = seed;
            cfg.formats = formats
                .iter()
                .map(|f| match f {
                    Format::Bin => OutputFormat::Bin,
                    Format::Csv => OutputFormat::Csv,
                })
                .collect();
            cfg.formats.dedup();
            let env_staging = std::env::var_os(STAGING_ENV).map(PathBuf::from);
            cfg.staging = if in_memory {
                None
            } else {
                Some(env_staging.or(staging).unwrap_or_else(|| out.join("staging")))
            };
            let summary = run_tabulate(&cfg, &out)?;
            println!(
                "{} records{}",
                summary.records,
                if summary.reused { " (unchanged)" } else { "" }
            );
            for f in &summary.files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Verify { bound, table } => {
            let records = read_table_dir(&table)?;
            let report = verify_records(&records, bound)?;
            let json = report_json(&report);
            println!("{json}");
            Ok(if report.pass { 0 } else { EXIT_VERIFY })
        }
        Command::Stats {
            table,
            report,
            out,
            bound,
        } => {
            let mut records = read_table_dir(&table)?;
            let bound = bound
                .or_else(|| recorded_bound(&table))
                .unwrap_or_else(|| records.last().map_or(0, |r| r.abs_disc + 1));
            records.retain(|r| r.abs_disc < bound);
            let out = out.as_deref();
            match report {
                Report::Littlewood => {
                    let ex = stats::littlewood_extremes(&records, bound);
                    write_or_print(out, &stats::littlewood_csv(&ex))?;
                    if let (Some(u), Some(l)) = (ex.largest_uli(), ex.smallest_lli()) {
                        eprintln!("max ULI {:.5} at -{}; min LLI {:.5} at -{}", u.uli, u.abs_disc, l.lli, l.abs_disc);
                    }
                }
                Report::CohenLenstra => {
                    let rows = stats::cohen_lenstra(&records, &stats::default_checkpoints(bound))?;
                    write_or_print(out, &stats::cohen_lenstra_csv(&rows))?;
                    if let Some(last) = rows.last() {
                        eprintln!("c({}) = {:.5}", last.x, last.c);
                    }
                }
                Report::Exotic => {
                    let scan = stats::exotic_scan(&records)?;
                    write_or_print(out, &stats::exotic_csv(&scan))?;
                }
                Report::Idoneal => {
                    let list = stats::idoneal_scan(&records, bound)?;
                    write_or_print(out, &stats::idoneal_csv(&list))?;
                    match list.last() {
                        Some(m) => eprintln!("max |delta| = {m}"),
                        None => eprintln!("none"),
                    }
                }
            }
            Ok(0)
        }
        Command::Oracle { delta } => {
            if delta % 4 == 1 || delta % 4 == 2 || delta < 3 {
                bail!(Error::InvalidParameter(format!("-{delta} is not a discriminant")));
            }
            let g = group_table(-(delta as i64))?;
            println!("h={} {}", g.order(), g);
            Ok(0)
        }
    }
}

fn report_json(r: &classtab::trace::VerifyReport) -> String {
    let failing = r
        .first_failing_n
        .map_or_else(|| "null".to_string(), |n| n.to_string());
    format!(
        "{{\"X\": {}, \"lhs\": {}, \"rhs\": {}, \"pass\": {}, \"first_failing_n\": {}}}",
        r.x, r.lhs, r.rhs, r.pass, failing
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
