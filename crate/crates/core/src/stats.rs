//! Statistics over a finished table: Littlewood indices, Cohen–Lenstra
//! ratios, first occurrences of non-cyclic Sylow subgroups, idoneal scan.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classnum::{weighted_class_number, ClassRecord};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::qform::group_table;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Discriminants left out of the Littlewood records.
pub const LITTLEWOOD_EXCLUDED: [u64; 3] = [3, 4, 163];

/// Odd primes tracked by the Cohen–Lenstra report.
pub const CL_PRIMES: [u64; 5] = [3, 5, 7, 11, 13];
pub const CL_RANKS: [u32; 2] = [2, 3];

fn check_resolved(r: &ClassRecord) -> Result<()> {
    if r.divisors.iter().product::<u64>() != r.h {
        return Err(Error::InvalidParameter(format!(
            "record {} has no resolved group structure",
            r.abs_disc
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- Littlewood

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodRow {
    pub abs_disc: u64,
    pub l_value: f64,
    pub uli: f64,
    pub lli: f64,
}

/// `(c1, c2)` for a discriminant of the given parity.
pub fn littlewood_constants(even: bool) -> (f64, f64) {
    let eg = EULER_GAMMA.exp();
    if even {
        (8.0 * eg / (PI * PI), eg)
    } else {
        (12.0 * eg / (PI * PI), 2.0 * eg)
    }
}

/// `L(1, χ_Δ) = π h_ω / √|Δ|`.
pub fn l_value(abs_disc: u64, h: u64) -> f64 {
    PI * weighted_class_number(abs_disc, h) as f64 / 12.0 / (abs_disc as f64).sqrt()
}

pub fn littlewood_row(abs_disc: u64, h: u64) -> LittlewoodRow {
    let l = l_value(abs_disc, h);
    let (c1, c2) = littlewood_constants(abs_disc % 2 == 0);
    let ll = (abs_disc as f64).ln().ln();
    LittlewoodRow {
        abs_disc,
        l_value: l,
        uli: l / (c2 * ll),
        lli: l * c1 * ll,
    }
}

/// Successive records in increasing `|Δ|`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodExtremes {
    pub uli_max: Vec<LittlewoodRow>,
    pub lli_min: Vec<LittlewoodRow>,
    pub l_max: Vec<LittlewoodRow>,
    pub l_min: Vec<LittlewoodRow>,
}

impl LittlewoodExtremes {
    pub fn largest_uli(&self) -> Option<&LittlewoodRow> {
        self.uli_max.iter().max_by(|a, b| a.uli.total_cmp(&b.uli))
    }

    pub fn smallest_lli(&self) -> Option<&LittlewoodRow> {
        self.lli_min.iter().min_by(|a, b| a.lli.total_cmp(&b.lli))
    }
}

/// Records must be sorted by `|Δ|`; only `|Δ| < bound` is scanned.
pub fn littlewood_extremes(records: &[ClassRecord], bound: u64) -> LittlewoodExtremes {
    let mut out = LittlewoodExtremes::default();
    for r in records.iter().take_while(|r| r.abs_disc < bound) {
        if LITTLEWOOD_EXCLUDED.contains(&r.abs_disc) {
            continue;
        }
        let row = littlewood_row(r.abs_disc, r.h);
        if out.uli_max.last().is_none_or(|b| row.uli > b.uli) {
            out.uli_max.push(row.clone());
        }
        if out.lli_min.last().is_none_or(|b| row.lli < b.lli) {
            out.lli_min.push(row.clone());
        }
        if out.l_max.last().is_none_or(|b| row.l_value > b.l_value) {
            out.l_max.push(row.clone());
        }
        if out.l_min.last().is_none_or(|b| row.l_value < b.l_value) {
            out.l_min.push(row);
        }
    }
    out
}

// ------------------------------------------------------------ Cohen–Lenstra

const BERNOULLI_2K: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `ζ(s)` for integer `s >= 2` by Euler–Maclaurin summation.
pub fn zeta(s: u32) -> f64 {
    assert!(s >= 2, "zeta needs s >= 2");
    const N: f64 = 12.0;
    let s_f = s as f64;
    let mut sum: f64 = (1..N as u32).rev().map(|n| (n as f64).powf(-s_f)).sum();
    sum += N.powf(1.0 - s_f) / (s_f - 1.0) + 0.5 * N.powf(-s_f);
    // rising factorial s (s+1) ... (s+2k-2) / (2k)!
    let mut coef = s_f / 2.0;
    let mut npow = N.powf(-s_f - 1.0);
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        sum += b * coef * npow;
        let k = (k + 1) as f64;
        coef *= (s_f + 2.0 * k - 1.0) * (s_f + 2.0 * k) / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        npow /= N * N;
    }
    sum
}

/// `η_k(l) = Π_{i=1..k} (1 - l^{-i})`.
pub fn eta(l: u64, k: u32) -> f64 {
    let inv = 1.0 / l as f64;
    let mut acc = 1.0;
    let mut p = 1.0;
    for _ in 0..k {
        p *= inv;
        acc *= 1.0 - p;
    }
    acc
}

/// Factors kept in `η_∞`; the omitted tail changes the product by less than
/// `2 l^{-65} <= 2^{-64}`.
pub const ETA_FACTORS: u32 = 64;

pub fn eta_infinity(l: u64) -> f64 {
    eta(l, ETA_FACTORS)
}

/// `C_∞ = Π_{i>=2} ζ(i)`, truncated where `ζ(i) - 1 < 2^{-80}`.
pub fn c_infinity() -> f64 {
    (2..=90).map(zeta).product()
}

/// Conjectured probability that the odd part of the class group is cyclic.
pub fn pr_cyclic() -> f64 {
    315.0 * zeta(3) / (6.0 * PI.powi(4) * eta_infinity(2) * c_infinity())
}

/// Conjectured probability that `l | h`.
pub fn pr_divisible(l: u64) -> f64 {
    1.0 - eta_infinity(l)
}

/// Conjectured probability that the `l`-rank is `r`.
pub fn pr_rank(l: u64, r: u32) -> f64 {
    let e = eta(l, r);
    eta_infinity(l) / ((l as f64).powi((r * r) as i32) * e * e)
}

/// Whether the odd part of a group given by its invariant factors is cyclic.
pub fn odd_part_cyclic(divisors: &[u64]) -> bool {
    divisors
        .split_last()
        .is_none_or(|(_, rest)| rest.iter().all(|d| d.is_power_of_two()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClCounts {
    pub total: u64,
    pub cyclic_odd: u64,
    /// `#{l | h}` per prime of `CL_PRIMES`.
    pub divisible: [u64; 5],
    /// `#{l-rank = r}` per prime of `CL_PRIMES` and rank of `CL_RANKS`.
    pub rank: [[u64; 2]; 5],
}

impl ClCounts {
    fn add(&mut self, r: &ClassRecord) {
        self.total += 1;
        if odd_part_cyclic(&r.divisors) {
            self.cyclic_odd += 1;
        }
        for (i, &l) in CL_PRIMES.iter().enumerate() {
            if r.h % l == 0 {
                self.divisible[i] += 1;
            }
            let rank = r.divisors.iter().filter(|&&d| d % l == 0).count() as u32;
            for (j, &rr) in CL_RANKS.iter().enumerate() {
                if rank == rr {
                    self.rank[i][j] += 1;
                }
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.total += other.total;
        self.cyclic_odd += other.cyclic_odd;
        for i in 0..CL_PRIMES.len() {
            self.divisible[i] += other.divisible[i];
            for j in 0..CL_RANKS.len() {
                self.rank[i][j] += other.rank[i][j];
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClRow {
    pub x: u64,
    pub counts: ClCounts,
    pub c: f64,
    pub p_l: [f64; 5],
    pub p_lr: [[f64; 2]; 5],
}

impl ClRow {
    pub fn from_counts(x: u64, counts: ClCounts) -> Self {
        let t = counts.total.max(1) as f64;
        let mut p_l = [0.0; 5];
        let mut p_lr = [[0.0; 2]; 5];
        for (i, &l) in CL_PRIMES.iter().enumerate() {
            p_l[i] = counts.divisible[i] as f64 / t / pr_divisible(l);
            for (j, &r) in CL_RANKS.iter().enumerate() {
                p_lr[i][j] = counts.rank[i][j] as f64 / t / pr_rank(l, r);
            }
        }
        Self {
            x,
            c: counts.cyclic_odd as f64 / t / pr_cyclic(),
            counts,
            p_l,
            p_lr,
        }
    }

    pub fn noncyclic(&self) -> u64 {
        self.counts.total - self.counts.cyclic_odd
    }
}

/// Powers of ten below `bound`, then `bound` itself.
pub fn default_checkpoints(bound: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |x| x.checked_mul(10))
        .take_while(|&x| x < bound)
        .collect();
    out.push(bound);
    out
}

/// Ratios over `|Δ| < x` for each checkpoint `x`, in one pass over records
/// sorted by `|Δ|`.
pub fn cohen_lenstra(records: &[ClassRecord], checkpoints: &[u64]) -> Result<Vec<ClRow>> {
    let mut xs = checkpoints.to_vec();
    xs.sort_unstable();
    let mut rows = Vec::with_capacity(xs.len());
    let mut acc = ClCounts::default();
    let mut segment = ClCounts::default();
    let mut it = records.iter().peekable();
    for &x in &xs {
        while let Some(r) = it.next_if(|r| r.abs_disc < x) {
            check_resolved(r)?;
            segment.add(r);
        }
        acc.merge(&segment);
        segment = ClCounts::default();
        rows.push(ClRow::from_counts(x, acc.clone()));
    }
    Ok(rows)
}

/// Counts over `|Δ| < x` recomputed from scratch.
pub fn cl_counts_direct(records: &[ClassRecord], x: u64) -> Result<ClCounts> {
    let mut c = ClCounts::default();
    for r in records.iter().filter(|r| r.abs_disc < x) {
        check_resolved(r)?;
        c.add(r);
    }
    Ok(c)
}

// ----------------------------------------------------------------- exotic

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub first_even: Option<u64>,
    pub even_count: u64,
    pub first_odd: Option<u64>,
    pub odd_count: u64,
}

impl Occurrence {
    fn add(&mut self, abs_disc: u64) {
        let (first, count) = if abs_disc % 2 == 0 {
            (&mut self.first_even, &mut self.even_count)
        } else {
            (&mut self.first_odd, &mut self.odd_count)
        };
        *count += 1;
        if first.is_none_or(|f| abs_disc < f) {
            *first = Some(abs_disc);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstOccurrence {
    pub p: u64,
    /// Exponents of the non-cyclic `p`-Sylow subgroup, largest first.
    pub exponents: Vec<u32>,
    pub occurrence: Occurrence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiOccurrence {
    /// Odd primes whose Sylow subgroups are all non-cyclic.
    pub primes: Vec<u64>,
    pub occurrence: Occurrence,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExoticScan {
    pub sylow: Vec<FirstOccurrence>,
    pub doubly: Vec<MultiOccurrence>,
    pub trebly: Vec<MultiOccurrence>,
}

/// Odd primes with non-cyclic Sylow subgroup, with their exponents.
fn noncyclic_odd_sylow(divisors: &[u64]) -> Vec<(u64, Vec<u32>)> {
    let Some((_, rest)) = divisors.split_last() else {
        return Vec::new();
    };
    let Some(&second) = rest.last() else {
        return Vec::new();
    };
    // a prime is non-cyclic iff it divides the second largest factor
    let group = AbelianGroup::from_divisors(divisors.to_vec()).unwrap_or_default();
    crate::arith::factor(second)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| p != 2)
        .map(|p| (p, group.sylow_exponents(p)))
        .collect()
}

pub fn exotic_scan(records: &[ClassRecord]) -> Result<ExoticScan> {
    let mut sylow: BTreeMap<(u64, Vec<u32>), Occurrence> = BTreeMap::new();
    let mut multi: BTreeMap<Vec<u64>, Occurrence> = BTreeMap::new();
    for r in records {
        check_resolved(r)?;
        let parts = noncyclic_odd_sylow(&r.divisors);
        for (p, es) in &parts {
            sylow.entry((*p, es.clone())).or_default().add(r.abs_disc);
        }
        if parts.len() >= 2 {
            let primes: Vec<u64> = parts.iter().map(|(p, _)| *p).collect();
            multi.entry(primes).or_default().add(r.abs_disc);
        }
    }
    let (doubly, trebly): (Vec<_>, Vec<_>) = multi
        .into_iter()
        .map(|(primes, occurrence)| MultiOccurrence { primes, occurrence })
        .partition(|m| m.primes.len() == 2);
    Ok(ExoticScan {
        sylow: sylow
            .into_iter()
            .map(|((p, exponents), occurrence)| FirstOccurrence {
                p,
                exponents,
                occurrence,
            })
            .collect(),
        doubly,
        trebly,
    })
}

// ---------------------------------------------------------------- idoneal

pub fn is_elementary_two(divisors: &[u64]) -> bool {
    divisors.iter().all(|&d| d == 2)
}

/// Fundamental `|Δ| <= bound` whose class group is an elementary abelian 2-group.
pub fn idoneal_scan(records: &[ClassRecord], bound: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.abs_disc <= bound) {
        check_resolved(r)?;
        if is_elementary_two(&r.divisors) {
            out.push(r.abs_disc);
        }
    }
    Ok(out)
}

/// The same property for any discriminant, from the full composition table.
pub fn idoneal_by_oracle(abs_disc: u64) -> Result<bool> {
    let g = group_table(-(abs_disc as i64))?;
    Ok(is_elementary_two(g.divisors()))
}

// -------------------------------------------------------------------- csv

pub fn littlewood_csv(ex: &LittlewoodExtremes) -> String {
    let mut s = String::from("kind,abs_disc,l_value,uli,lli\n");
    for (kind, rows) in [
        ("uli_max", &ex.uli_max),
        ("lli_min", &ex.lli_min),
        ("l_max", &ex.l_max),
        ("l_min", &ex.l_min),
    ] {
        for r in rows {
            let _ = writeln!(s, "{kind},{},{:.6},{:.6},{:.6}", r.abs_disc, r.l_value, r.uli, r.lli);
        }
    }
    s
}

pub fn cohen_lenstra_csv(rows: &[ClRow]) -> String {
    let mut s = String::from("x,total,noncyclic,c");
    for l in CL_PRIMES {
        let _ = write!(s, ",div_{l},p_{l}");
    }
    for l in CL_PRIMES {
        for r in CL_RANKS {
            let _ = write!(s, ",rank_{l}_{r},p_{l}_{r}");
        }
    }
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{},{},{},{:.6}", row.x, row.counts.total, row.noncyclic(), row.c);
        for i in 0..CL_PRIMES.len() {
            let _ = write!(s, ",{},{:.6}", row.counts.divisible[i], row.p_l[i]);
        }
        for i in 0..CL_PRIMES.len() {
            for j in 0..CL_RANKS.len() {
                let _ = write!(s, ",{},{:.6}", row.counts.rank[i][j], row.p_lr[i][j]);
            }
        }
        s.push('\n');
    }
    s
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "*".into(), |x| x.to_string())
}

pub fn exotic_csv(scan: &ExoticScan) -> String {
    let mut s = String::from("kind,signature,first_even,even_count,first_odd,odd_count\n");
    let mut line = |kind: &str, sig: String, o: &Occurrence| {
        let _ = writeln!(
            s,
            "{kind},{sig},{},{},{},{}",
            opt(o.first_even),
            o.even_count,
            opt(o.first_odd),
            o.odd_count
        );
    };
    for f in &scan.sylow {
        let es: Vec<String> = f.exponents.iter().map(u32::to_string).collect();
        line("sylow", format!("{} {}", f.p, es.join(" ")), &f.occurrence);
    }
    for (kind, list) in [("doubly", &scan.doubly), ("trebly", &scan.trebly)] {
        for m in list {
            let ps: Vec<String> = m.primes.iter().map(u64::to_string).collect();
            line(kind, ps.join(" "), &m.occurrence);
        }
    }
    s
}

pub fn idoneal_csv(list: &[u64]) -> String {
    let mut s = String::from("abs_disc\n");
    for d in list {
        let _ = writeln!(s, "{d}");
    }
    s
}
