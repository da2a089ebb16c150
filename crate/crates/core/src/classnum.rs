//! Class numbers of fundamental discriminants from theta-series products,
//! the parameters that size those products, and Hurwitz class number tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{factor, is_prime, kronecker_prime};
use crate::bigmul::{multiply_truncated, BundleParams, PrimeBasis, StagingConfig};
use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::series::{generate, SeriesKind};

/// Largest bound for which the divisor-sum constant `1209/275` is certified.
pub const MAX_BOUND: u64 = 1 << 40;

const DIVISOR_SUM_CONSTANT: f64 = 1209.0 / 275.0;

/// Residue class of a fundamental discriminant, one per product formula
/// plus the `1 mod 8` remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CongruenceClass {
    D8mod16,
    D12mod16,
    D5mod8,
    D1mod8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl CongruenceClass {
    pub const ALL: [CongruenceClass; 4] = [
        CongruenceClass::D8mod16,
        CongruenceClass::D12mod16,
        CongruenceClass::D5mod8,
        CongruenceClass::D1mod8,
    ];

    pub const WITH_FORMULA: [CongruenceClass; 3] = [
        CongruenceClass::D8mod16,
        CongruenceClass::D12mod16,
        CongruenceClass::D5mod8,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CongruenceClass::D8mod16 => "8mod16",
            CongruenceClass::D12mod16 => "12mod16",
            CongruenceClass::D5mod8 => "5mod8",
            CongruenceClass::D1mod8 => "1mod8",
        }
    }

    /// Class of `-abs_disc`, if it is a discriminant shape covered here.
    pub fn of(abs_disc: u64) -> Option<Self> {
        match abs_disc % 16 {
            8 => Some(CongruenceClass::D8mod16),
            4 => Some(CongruenceClass::D12mod16),
            3 | 11 => Some(CongruenceClass::D5mod8),
            7 | 15 => Some(CongruenceClass::D1mod8),
            _ => None,
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            CongruenceClass::D8mod16 | CongruenceClass::D12mod16 => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Factor series of the product formula.
    pub fn factors(self) -> Result<(SeriesKind, SeriesKind)> {
        match self {
            CongruenceClass::D8mod16 => Ok((SeriesKind::NablaQ2Sq, SeriesKind::Theta3)),
            CongruenceClass::D12mod16 => Ok((SeriesKind::Theta3Sq, SeriesKind::NablaQ2)),
            CongruenceClass::D5mod8 => Ok((SeriesKind::NablaSq, SeriesKind::Nabla)),
            CongruenceClass::D1mod8 => Err(Error::NoFormula),
        }
    }

    /// Coefficient `k` of the product bounds `multiplier * C_N`.
    pub fn multiplier(self) -> Result<u64> {
        match self {
            CongruenceClass::D8mod16 => Ok(1),
            CongruenceClass::D12mod16 => Ok(2),
            CongruenceClass::D5mod8 => Ok(3),
            CongruenceClass::D1mod8 => Err(Error::NoFormula),
        }
    }

    /// `|Δ|` whose class number sits at table index `k`.
    pub fn abs_disc(self, k: u64) -> Result<u64> {
        match self {
            CongruenceClass::D8mod16 => Ok(16 * k + 8),
            CongruenceClass::D12mod16 => Ok(16 * k + 4),
            CongruenceClass::D5mod8 => Ok(8 * k + 3),
            CongruenceClass::D1mod8 => Err(Error::NoFormula),
        }
    }

    /// Table length covering every `|Δ| < bound` of this class.
    pub fn table_len(self, bound: u64) -> Result<usize> {
        let (step, offset) = match self {
            CongruenceClass::D8mod16 => (16, 8),
            CongruenceClass::D12mod16 => (16, 4),
            CongruenceClass::D5mod8 => (8, 3),
            CongruenceClass::D1mod8 => return Err(Error::NoFormula),
        };
        Ok(if bound <= offset {
            0
        } else {
            (bound - offset).div_ceil(step) as usize
        })
    }
}

impl fmt::Display for CongruenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CongruenceClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CongruenceClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown congruence class {s:?}")))
    }
}

/// Constants of `L(1, χ) <= a log|Δ| + b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamareBound {
    pub a: f64,
    pub b: f64,
}

impl RamareBound {
    pub fn for_parity(parity: Parity) -> Self {
        match parity {
            Parity::Even => Self {
                a: 0.25,
                b: 1.25 - 3f64.ln() / 2.0,
            },
            Parity::Odd => Self {
                a: 0.5,
                b: 2.5 - 6f64.ln(),
            },
        }
    }
}

/// `C_N = floor((1209/275) (1/π) sqrt(N) (a log N + b))`, an upper bound on
/// `H(n)` for `n < N`.
pub fn compute_bound(n: u64, parity: Parity) -> Result<u64> {
    if n > MAX_BOUND {
        return Err(Error::BoundTooLarge(n));
    }
    if n < 2 {
        return Ok(1);
    }
    let RamareBound { a, b } = RamareBound::for_parity(parity);
    let x = n as f64;
    let c = DIVISOR_SUM_CONSTANT / std::f64::consts::PI * x.sqrt() * (a * x.ln() + b);
    Ok(c.floor().max(1.0) as u64)
}

/// Bits needed for every product coefficient of `class` below discriminant bound `n`.
pub fn compute_bit_size(class: CongruenceClass, n: u64) -> Result<u32> {
    let c = class.multiplier()? * compute_bound(n, class.parity())?;
    Ok(64 - (c - 1).leading_zeros().min(63))
}

/// `ceil((2B - 1) s / log2 p0)`.
pub fn compute_prime_count(b: u64, s: u32, p0: u64) -> u64 {
    ((2 * b - 1) as f64 * s as f64 / (p0 as f64).log2()).ceil() as u64
}

/// Smallest `n` with `sum log2 p_i > (2B - 1) s` over the default NTT primes.
pub fn compute_ntt_prime_count(b: u64, s: u32) -> Result<usize> {
    Ok(PrimeBasis::with_capacity((2 * b - 1) * s as u64)?.len())
}

/// Smallest prime exceeding `n`.
pub fn next_prime(n: u64) -> u64 {
    let mut p = n + 1;
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Knobs for computing one product table.
#[derive(Clone, Debug)]
pub struct TabulateOptions {
    pub bundle: usize,
    pub partition: usize,
    pub staging: StagingConfig,
}

impl Default for TabulateOptions {
    fn default() -> Self {
        Self {
            bundle: 64,
            partition: 1 << 16,
            staging: StagingConfig::default(),
        }
    }
}

/// Product coefficients for every `|Δ| < bound` of `class`.
///
/// Coefficient `k` is `F(4k+2)`, `2F(4k+1)` or `F(8k+3)`.
pub fn tabulate_f(class: CongruenceClass, bound: u64, opts: &TabulateOptions) -> Result<CoeffTable> {
    let (fk, gk) = class.factors()?;
    let len = class.table_len(bound)?;
    if len == 0 {
        return Ok(CoeffTable::from_values(Vec::new()));
    }
    let f = generate(fk, len, opts.partition)?.resized(len)?;
    let g = generate(gk, len, opts.partition)?.resized(len)?;
    let params = product_params(class, len, opts.bundle, &f, &g)?;
    let basis = PrimeBasis::with_capacity(params.product_bits())?;
    multiply_truncated(&f, &g, len, params, &basis, &opts.staging)
}

/// Bundle parameters for a product table of `len` coefficients.
///
/// Digits above the truncation point still carry partial sums of later
/// coefficients, so `s` is sized for index `len + B` with one bit to spare.
pub fn product_params(
    class: CongruenceClass,
    len: usize,
    bundle: usize,
    f: &CoeffTable,
    g: &CoeffTable,
) -> Result<BundleParams> {
    let top = class.abs_disc((len + bundle) as u64)?;
    let s = compute_bit_size(class, top.min(MAX_BOUND))? + 1;
    let input_bits = 64 - f.max_value()?.max(g.max_value()?).leading_zeros();
    BundleParams::new(bundle, s.max(input_bits).max(2))
}

/// Where a class number came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Series,
    Enumeration,
}

/// Class number and (once resolved) elementary divisors of `-abs_disc`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassRecord {
    pub abs_disc: u64,
    pub h: u64,
    pub divisors: Vec<u64>,
    pub provenance: Provenance,
}

impl ClassRecord {
    pub fn new(abs_disc: u64, h: u64, provenance: Provenance) -> Self {
        Self {
            abs_disc,
            h,
            divisors: Vec::new(),
            provenance,
        }
    }
}

/// Class numbers of all fundamental `|Δ| < bound` in `class`, read from its
/// product table, in increasing `|Δ|`.
pub fn extract_class_numbers(
    class: CongruenceClass,
    table: &CoeffTable,
    bound: u64,
    fundamental: &FundamentalSieve,
) -> Result<Vec<ClassRecord>> {
    let len = class.table_len(bound)?.min(table.len());
    let mut out = Vec::new();
    let step = 1 << 18;
    let mut start = 0;
    while start < len {
        let values = table.read_range(start, step.min(len - start))?;
        for (i, &v) in values.iter().enumerate() {
            let k = (start + i) as u64;
            let d = class.abs_disc(k)?;
            if !fundamental.contains(d) {
                continue;
            }
            let h = match (class, d) {
                (CongruenceClass::D12mod16, 4) | (CongruenceClass::D5mod8, 3) => 1,
                (CongruenceClass::D8mod16, _) => v,
                (CongruenceClass::D12mod16, _) => exact_div(d, v, 2)?,
                (CongruenceClass::D5mod8, _) => exact_div(d, v, 3)?,
                (CongruenceClass::D1mod8, _) => return Err(Error::NoFormula),
            };
            out.push(ClassRecord::new(d, h, Provenance::Series));
        }
        start += step;
    }
    Ok(out)
}

fn exact_div(abs_disc: u64, value: u64, divisor: u64) -> Result<u64> {
    if value % divisor != 0 || value == 0 {
        return Err(Error::InexactDivision {
            abs_disc,
            value,
            divisor,
        });
    }
    Ok(value / divisor)
}

/// Bitmap of `n < bound` with `-n` a fundamental discriminant.
#[derive(Clone, Debug)]
pub struct FundamentalSieve {
    bound: u64,
    bits: Vec<u64>,
}

impl FundamentalSieve {
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn contains(&self, n: u64) -> bool {
        n < self.bound && self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.bound).filter(|&n| self.contains(n))
    }
}

const SIEVE_BLOCK: u64 = 1 << 20;

/// Square-free indicator of `[0, bound)`, sieved in blocks.
fn squarefree_bits(bound: u64) -> Vec<u64> {
    let mut bits = vec![u64::MAX; bound.div_ceil(64) as usize];
    if bound > 0 {
        bits[0] &= !1;
    }
    let primes = crate::arith::primes_up_to(crate::arith::isqrt(bound));
    let mut lo = 0;
    while lo < bound {
        let hi = (lo + SIEVE_BLOCK).min(bound);
        for &p in &primes {
            let q = p * p;
            if q >= hi {
                break;
            }
            let mut m = lo.div_ceil(q) * q;
            while m < hi {
                bits[(m / 64) as usize] &= !(1 << (m % 64));
                m += q;
            }
        }
        lo = hi;
    }
    bits
}

/// Fundamental `|Δ| < bound`: square-free `n ≡ 3 (mod 4)`, or `4m` with
/// square-free `m ≡ 1, 2 (mod 4)`.
pub fn sieve_fundamental(bound: u64) -> FundamentalSieve {
    let sf = squarefree_bits(bound);
    let is_sf = |n: u64| sf[(n / 64) as usize] >> (n % 64) & 1 == 1;
    let mut bits = vec![0u64; bound.div_ceil(64) as usize];
    for n in 0..bound {
        let fund = match n % 16 {
            3 | 7 | 11 | 15 => is_sf(n),
            4 | 8 => is_sf(n / 4),
            _ => false,
        };
        if fund {
            bits[(n / 64) as usize] |= 1 << (n % 64);
        }
    }
    FundamentalSieve { bound, bits }
}

/// `12 H(n)` for `0 <= n <= max_n`; zero unless `n ≡ 0, 3 (mod 4)`, and `H(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HurwitzTable {
    values: Vec<u64>,
}

impl HurwitzTable {
    pub fn from_values(values: Vec<u64>) -> Self {
        Self { values }
    }

    pub fn max_n(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// `12 H(n)`.
    pub fn get(&self, n: u64) -> Result<u64> {
        self.values
            .get(n as usize)
            .copied()
            .ok_or(Error::TableGap(n))
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [u64] {
        &mut self.values
    }
}

/// `12 h_ω(-d)` for fundamental `d` with class number `h`.
pub fn weighted_class_number(abs_disc: u64, h: u64) -> u64 {
    match abs_disc {
        3 => 4 * h,
        4 => 6 * h,
        _ => 12 * h,
    }
}

/// `sum_{g | f} ψ(g)` with `ψ(p^e) = p^{e-1} (p - (Δ/p))`.
fn conductor_weight(disc: i64, f: u64) -> u64 {
    factor(f)
        .into_iter()
        .map(|(p, e)| {
            let chi = kronecker_prime(disc, p) as i64;
            let mut sum = 1u64;
            let mut pk = 1u64;
            for _ in 0..e {
                sum += pk * (p as i64 - chi) as u64;
                pk *= p;
            }
            sum
        })
        .product()
}

/// `12 H(n)` for all `n <= 4X`, from class numbers of the fundamental
/// discriminants up to `4X`. `h_of(d)` returns `h(-d)`.
pub fn build_hurwitz_table(h_of: impl Fn(u64) -> Option<u64>, x: u64) -> Result<HurwitzTable> {
    let max_n = 4 * x;
    let fundamental = sieve_fundamental(max_n + 1);
    let mut values = vec![0u64; max_n as usize + 1];
    for d in fundamental.iter() {
        let h = h_of(d).ok_or(Error::MissingRecord(d))?;
        let base = weighted_class_number(d, h);
        let disc = -(d as i64);
        let mut f = 1u64;
        while d * f * f <= max_n {
            values[(d * f * f) as usize] = base * conductor_weight(disc, f);
            f += 1;
        }
    }
    Ok(HurwitzTable { values })
}

/// `build_hurwitz_table` fed from records sorted by `|Δ|`.
pub fn hurwitz_from_records(records: &[ClassRecord], x: u64) -> Result<HurwitzTable> {
    build_hurwitz_table(
        |d| {
            records
                .binary_search_by_key(&d, |r| r.abs_disc)
                .ok()
                .map(|i| records[i].h)
        },
        x,
    )
}

/// Merge per-class record lists into one list sorted by `|Δ|`.
pub fn merge_records(parts: Vec<Vec<ClassRecord>>) -> Vec<ClassRecord> {
    let mut all: Vec<ClassRecord> = parts.into_iter().flatten().collect();
    all.sort_by_key(|r| r.abs_disc);
    all.dedup_by_key(|r| r.abs_disc);
    all
}
