//! End-to-end tabulation: product tables, class numbers, enumeration of the
//! `1 mod 8` class, group structures, table files and manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bigmul::{Manifest, StagingConfig};
use crate::classnum::{
    extract_class_numbers, hurwitz_from_records, merge_records, sieve_fundamental, tabulate_f,
    ClassRecord, CongruenceClass, FundamentalSieve, Provenance, TabulateOptions, MAX_BOUND,
};
use crate::error::{Error, Result};
use crate::group::resolve_with_seed;
use crate::qform::{count_classes_upto, DiscFilter};
use crate::tablefile::{write_bin, write_csv, BIN_NAME, CSV_NAME};
use crate::trace::{verify_aggregate, VerifyReport};

/// Smallest accepted memory budget, one chunk of `2^13` words.
pub const MIN_MEMORY_BUDGET: u64 = 8 << 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    Bin,
    Csv,
}

impl OutputFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::Bin => BIN_NAME,
            Self::Csv => CSV_NAME,
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bin => "bin",
            Self::Csv => "csv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(Self::Bin),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Records cover fundamental `|Δ| < bound`.
    pub bound: u64,
    pub classes: Vec<CongruenceClass>,
    /// Directory for out-of-core chunk files.
    pub staging: Option<PathBuf>,
    pub memory_budget: u64,
    pub threads: usize,
    pub seed: u64,
    pub formats: Vec<OutputFormat>,
    pub bundle: usize,
    pub partition: usize,
}

impl RunConfig {
    pub fn new(bound: u64) -> Self {
        Self {
            bound,
            classes: CongruenceClass::ALL.to_vec(),
            staging: None,
            memory_budget: 1 << 30,
            threads: 1,
            seed: 0,
            formats: vec![OutputFormat::Bin],
            bundle: 64,
            partition: 1 << 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.bound < 8 {
            return bad(format!("bound {} is below 8", self.bound));
        }
        if self.bound > MAX_BOUND {
            return Err(Error::BoundTooLarge(self.bound));
        }
        if self.memory_budget < MIN_MEMORY_BUDGET {
            return bad(format!("memory budget below {MIN_MEMORY_BUDGET} bytes"));
        }
        if self.threads == 0 {
            return bad("need at least one worker".into());
        }
        if self.classes.is_empty() || self.formats.is_empty() {
            return bad("nothing to produce".into());
        }
        if !self.bundle.is_power_of_two() {
            return bad(format!("bundle size {} is not a power of two", self.bundle));
        }
        Ok(())
    }

    fn staging_for(&self, class: CongruenceClass) -> StagingConfig {
        StagingConfig {
            dir: self.staging.as_ref().map(|d| d.join(class.label())),
            chunks: 4 * self.threads,
            memory_budget: self.memory_budget,
        }
    }

    /// Parameters that determine the output, as recorded in the manifest.
    pub fn manifest_params(&self) -> Vec<(String, String)> {
        let mut classes = self.classes.clone();
        classes.sort_by_key(|c| c.label());
        classes.dedup();
        let labels: Vec<&str> = classes.iter().map(|c| c.label()).collect();
        let formats: Vec<String> = self.formats.iter().map(|f| f.to_string()).collect();
        [
            ("format_version", "1".to_string()),
            ("bound", self.bound.to_string()),
            ("classes", labels.join(",")),
            ("seed", self.seed.to_string()),
            ("formats", formats.join(",")),
            ("bundle", self.bundle.to_string()),
            ("partition", self.partition.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Class numbers of the fundamental `|Δ| ≡ 7 (mod 8)` below `bound`.
pub fn enumerate_one_mod_8(bound: u64, fundamental: &FundamentalSieve) -> Vec<ClassRecord> {
    let counts = count_classes_upto(bound, DiscFilter::OneMod8);
    (7..bound)
        .step_by(8)
        .filter(|&d| fundamental.contains(d))
        .map(|d| ClassRecord::new(d, counts[d as usize] as u64, Provenance::Enumeration))
        .collect()
}

/// Class numbers of the selected classes, unresolved, sorted by `|Δ|`.
pub fn class_numbers(cfg: &RunConfig) -> Result<Vec<ClassRecord>> {
    let fundamental = sieve_fundamental(cfg.bound);
    let mut parts = Vec::new();
    for &class in &cfg.classes {
        if class == CongruenceClass::D1mod8 {
            parts.push(enumerate_one_mod_8(cfg.bound, &fundamental));
            continue;
        }
        let opts = TabulateOptions {
            bundle: cfg.bundle,
            partition: cfg.partition,
            staging: cfg.staging_for(class),
        };
        let table = tabulate_f(class, cfg.bound, &opts)?;
        parts.push(extract_class_numbers(class, &table, cfg.bound, &fundamental)?);
    }
    Ok(merge_records(parts))
}

/// Fill in the group structure of every record; order is preserved.
pub fn resolve_all(records: Vec<ClassRecord>, seed: u64) -> Result<Vec<ClassRecord>> {
    records
        .into_par_iter()
        .map(|r| resolve_with_seed(&r, seed))
        .collect()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(f)
}

/// Class numbers and group structures for the configured run.
pub fn tabulate_records(cfg: &RunConfig) -> Result<Vec<ClassRecord>> {
    cfg.validate()?;
    in_pool(cfg.threads, || resolve_all(class_numbers(cfg)?, cfg.seed))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub records: usize,
    pub files: Vec<PathBuf>,
    /// Outputs of an identical earlier run were found intact and kept.
    pub reused: bool,
}

/// Tabulate into `out`, writing the table files and `run.json`. A rerun with
/// the same parameters leaves intact outputs untouched.
pub fn run_tabulate(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let params = cfg.manifest_params();
    let files: Vec<PathBuf> = cfg.formats.iter().map(|f| out.join(f.file_name())).collect();
    let previous = Manifest::load(out);
    if previous.matches(&params) && files.iter().all(|f| previous.file_is_current(f)) {
        let records = previous
            .get("records")
            .and_then(|r| r.parse().ok())
            .unwrap_or_default();
        return Ok(RunSummary {
            records,
            files,
            reused: true,
        });
    }
    let records = tabulate_records(cfg)?;
    let mut manifest = Manifest::default();
    for (k, v) in &params {
        manifest.set(k.clone(), v);
    }
    for (fmt, path) in cfg.formats.iter().zip(&files) {
        match fmt {
            OutputFormat::Bin => write_bin(path, &records)?,
            OutputFormat::Csv => write_csv(path, &records)?,
        }
        manifest.record_file(path)?;
    }
    manifest.set("records", records.len());
    manifest.save(out)?;
    Ok(RunSummary {
        records: records.len(),
        files,
        reused: false,
    })
}

/// The bound recorded in the manifest of an output directory.
pub fn recorded_bound(out: &Path) -> Option<u64> {
    Manifest::load(out).get("bound")?.parse().ok()
}

/// Largest `X` whose aggregate check only needs records below `bound`.
pub fn verify_range(bound: u64) -> u64 {
    bound.saturating_sub(1) / 8
}

/// Aggregate trace-formula check of a complete table of `|Δ| < bound`.
pub fn verify_records(records: &[ClassRecord], bound: u64) -> Result<VerifyReport> {
    let x = verify_range(bound);
    if x == 0 {
        return Err(Error::InvalidParameter(format!("bound {bound} is too small to verify")));
    }
    let table = hurwitz_from_records(records, 2 * x)?;
    verify_aggregate(x, &table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qform::count_classes;

    #[test]
    fn smallest_run() {
        let recs = tabulate_records(&RunConfig::new(8)).unwrap();
        let got: Vec<(u64, u64)> = recs.iter().map(|r| (r.abs_disc, r.h)).collect();
        assert_eq!(got, [(3, 1), (4, 1), (7, 1)]);
    }

    #[test]
    fn matches_enumeration() {
        let recs = tabulate_records(&RunConfig::new(20_000)).unwrap();
        assert_eq!(recs.len() as u64, sieve_fundamental(20_000).count());
        for r in &recs {
            assert_eq!(r.h, count_classes(-(r.abs_disc as i64)).unwrap(), "|Δ| = {}", r.abs_disc);
            assert_eq!(r.divisors.iter().product::<u64>(), r.h);
        }
        assert!(verify_records(&recs, 20_000).unwrap().pass);
    }

    #[test]
    fn config_errors() {
        assert!(RunConfig::new(7).validate().is_err());
        let mut c = RunConfig::new(100);
        c.threads = 0;
        assert!(c.validate().is_err());
        c = RunConfig::new(100);
        c.memory_budget = 10;
        assert!(c.validate().is_err());
        assert!(RunConfig::new(MAX_BOUND + 1).validate().is_err());
    }

    #[test]
    fn rerun_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(3000);
        cfg.formats = vec![OutputFormat::Bin, OutputFormat::Csv];
        let first = run_tabulate(&cfg, dir.path()).unwrap();
        assert!(!first.reused);
        let bytes = std::fs::read(dir.path().join(BIN_NAME)).unwrap();
        let second = run_tabulate(&cfg, dir.path()).unwrap();
        assert!(second.reused);
        assert_eq!(recorded_bound(dir.path()), Some(3000));
        assert_eq!(second.records, first.records);
        std::fs::write(dir.path().join(CSV_NAME), "garbage").unwrap();
        let third = run_tabulate(&cfg, dir.path()).unwrap();
        assert!(!third.reused);
        assert_eq!(std::fs::read(dir.path().join(BIN_NAME)).unwrap(), bytes);
    }
}
