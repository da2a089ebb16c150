//! Class group structure from a known class number, resolving only the Sylow
//! subgroups that can be non-cyclic.

use std::borrow::Cow;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::fmt;

use crate::arith::{factor, isqrt, primes_upto_cached};
use crate::classnum::ClassRecord;
use crate::error::{Error, Result};
use crate::qform::{prime_form, QuadForm};

/// Largest Sylow subgroup whose elements are tabulated explicitly.
pub const SUBGROUP_TABLE_CAP: u64 = 1 << 22;

/// Finite abelian group as its invariant factors `d_1 | d_2 | ... | d_k`, each `> 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    divisors: Vec<u64>,
}

impl AbelianGroup {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn cyclic(n: u64) -> Self {
        Self {
            divisors: if n > 1 { vec![n] } else { Vec::new() },
        }
    }

    /// From an ascending divisibility chain; ones are dropped.
    pub fn from_divisors(mut divisors: Vec<u64>) -> Result<Self> {
        divisors.retain(|&d| d > 1);
        if divisors.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(Error::InvalidParameter(format!(
                "{divisors:?} is not a divisibility chain"
            )));
        }
        Ok(Self { divisors })
    }

    /// Merge per-prime exponent lists `(p, [e_1, e_2, ...])` into invariant factors.
    pub fn from_sylow_chains(chains: &[(u64, Vec<u32>)]) -> Self {
        let mut sorted: Vec<(u64, Vec<u32>)> = chains
            .iter()
            .map(|(p, es)| {
                let mut es: Vec<u32> = es.iter().copied().filter(|&e| e > 0).collect();
                es.sort_unstable_by(|a, b| b.cmp(a));
                (*p, es)
            })
            .collect();
        sorted.retain(|(_, es)| !es.is_empty());
        let k = sorted.iter().map(|(_, es)| es.len()).max().unwrap_or(0);
        let mut divisors: Vec<u64> = (0..k)
            .map(|j| {
                sorted
                    .iter()
                    .filter_map(|(p, es)| es.get(j).map(|&e| p.pow(e)))
                    .product()
            })
            .collect();
        divisors.reverse();
        Self { divisors }
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn into_divisors(self) -> Vec<u64> {
        self.divisors
    }

    pub fn order(&self) -> u64 {
        self.divisors.iter().product()
    }

    /// Number of invariant factors divisible by `p`.
    pub fn p_rank(&self, p: u64) -> usize {
        self.divisors.iter().filter(|&&d| d % p == 0).count()
    }

    pub fn is_cyclic(&self) -> bool {
        self.divisors.len() <= 1
    }

    /// Exponents of `p` in the invariant factors, largest first.
    pub fn sylow_exponents(&self, p: u64) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .divisors
            .iter()
            .map(|&d| {
                let (mut d, mut e) = (d, 0);
                while d % p == 0 {
                    d /= p;
                    e += 1;
                }
                e
            })
            .filter(|&e| e > 0)
            .collect();
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.divisors.iter().map(u64::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// `(p, e)` pairs of `h` with `e >= 2`.
pub fn noncyclic_part(factored: &[(u64, u32)]) -> Vec<(u64, u32)> {
    factored.iter().copied().filter(|&(_, e)| e >= 2).collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Prime forms of `disc` for primes up to `limit`, built on demand.
struct FormPool {
    disc: i64,
    primes: Cow<'static, [u64]>,
    next: usize,
    forms: Vec<QuadForm>,
}

impl FormPool {
    fn new(disc: i64, limit: u64) -> Self {
        Self {
            disc,
            primes: primes_upto_cached(limit),
            next: 0,
            forms: Vec::new(),
        }
    }

    /// The `i`-th prime form, if there are that many.
    fn get(&mut self, i: usize) -> Option<QuadForm> {
        while self.forms.len() <= i && self.next < self.primes.len() {
            if let Some(f) = prime_form(self.disc, self.primes[self.next]) {
                self.forms.push(f);
            }
            self.next += 1;
        }
        self.forms.get(i).copied()
    }

    /// The `i`-th form, wrapping around when the pool holds fewer; the pool
    /// must not be empty.
    fn get_wrapped(&mut self, i: usize) -> QuadForm {
        match self.get(i) {
            Some(f) => f,
            None => self.forms[i % self.forms.len()],
        }
    }
}

/// Multiply-rotate hasher for the subgroup table; keys are reduced forms.
#[derive(Default)]
struct FormHasher(u64);

impl Hasher for FormHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_i64(&mut self, v: i64) {
        self.write_u64(v as u64);
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x517c_c1b7_2722_0a95);
    }
}

type FormMap<V> = HashMap<QuadForm, V, BuildHasherDefault<FormHasher>>;

/// Prime forms drawn from when sampling random elements.
const RANDOM_POOL: usize = 8;

/// Invariant factors of `Z^n / L`, where the rows of `m` span `L`.
pub fn smith_diagonal(mut m: Vec<Vec<i128>>) -> Vec<u64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero entry in the remaining block
        let Some((pi, pj)) = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| m[i][j] != 0)
            .min_by_key(|&(i, j)| m[i][j].abs())
        else {
            break;
        };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                let q = m[i][t].div_euclid(m[t][t]);
                if q != 0 {
                    let pivot_row = m[t].clone();
                    for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                        *x -= q * y;
                    }
                }
                if m[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = m[t][j].div_euclid(m[t][t]);
                if q != 0 {
                    for row in m.iter_mut() {
                        row[j] -= q * row[t];
                    }
                }
                if m[t][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                // the pivot must divide the rest of the block
                let bad = (t + 1..rows)
                    .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                    .find(|&(i, j)| m[i][j] % m[t][t] != 0);
                match bad {
                    None => break,
                    Some((i, _)) => {
                        let row_i = m[i].clone();
                        for (x, y) in m[t].iter_mut().zip(&row_i) {
                            *x += y;
                        }
                    }
                }
            } else {
                // move the smallest remaining entry of row/column t onto the pivot
                let (mut bi, mut bj, mut best) = (t, t, m[t][t].abs());
                for i in t + 1..rows {
                    if m[i][t] != 0 && m[i][t].abs() < best {
                        (bi, bj, best) = (i, t, m[i][t].abs());
                    }
                }
                for j in t + 1..cols {
                    if m[t][j] != 0 && m[t][j].abs() < best {
                        (bi, bj, best) = (t, j, m[t][j].abs());
                    }
                }
                m.swap(t, bi);
                for row in m.iter_mut() {
                    row.swap(t, bj);
                }
            }
        }
        diag.push(m[t][t].unsigned_abs() as u64);
        t += 1;
    }
    diag.retain(|&d| d > 1);
    diag.sort_unstable();
    diag
}

/// Exponents of the `p`-Sylow subgroup of the class group of `disc`, where
/// `p^e` exactly divides `h`, largest first.
///
/// Elements are projected into the subgroup by raising to `h / p^e`; each
/// projection whose smallest power `p^k` lands in the accumulated subgroup
/// `S` enlarges `S` by `p^k` and contributes one relation. Candidates are
/// seeded products of two small prime forms or their inverses, falling back
/// to a sweep over all prime forms of norm up to `sqrt(|Δ| / 3)`, which
/// generate the group.
pub fn sylow_structure(disc: i64, h: u64, p: u64, e: u32, seed: u64) -> Result<Vec<u32>> {
    let abs_disc = disc.unsigned_abs();
    if e == 0 {
        return Ok(Vec::new());
    }
    if e == 1 {
        return Ok(vec![1]);
    }
    let pe = p.checked_pow(e).filter(|&q| q <= SUBGROUP_TABLE_CAP).ok_or(Error::GroupTooLarge {
        h: p.saturating_pow(e),
        limit: SUBGROUP_TABLE_CAP,
    })?;
    let cofactor = h / pe;
    let one = QuadForm::principal(disc)?;

    // element -> coordinates over the generators found so far
    let mut table: FormMap<Vec<u64>> = FormMap::default();
    table.insert(one, Vec::new());
    let mut gens: Vec<QuadForm> = Vec::new();
    let mut relations: Vec<(Vec<u64>, u64)> = Vec::new();

    let limit = isqrt(abs_disc / 3).max(2);
    let mut pool = FormPool::new(disc, limit);
    let have_forms = pool.get(0).is_some();
    let random_budget = 8 + 4 * e as u64;
    let mut counter = 0u64;
    let mut sweep = 0usize;
    let mut stalls = 0u64;

    while (table.len() as u64) < pe {
        let candidate = if stalls < random_budget && have_forms {
            counter += 1;
            let r = splitmix(abs_disc ^ splitmix(seed.wrapping_add(counter << 20)));
            let mut pick = |bits: u64| {
                let f = pool.get_wrapped((bits % RANDOM_POOL as u64) as usize);
                if bits >> 63 == 1 {
                    f.inverse()
                } else {
                    f
                }
            };
            let a = pick(r);
            a.compose(&pick(splitmix(r)))?
        } else if let Some(f) = pool.get(sweep) {
            sweep += 1;
            f
        } else {
            return Err(Error::SamplingExhausted { abs_disc, p });
        };
        let y = candidate.pow(cofactor)?;

        let mut z = y;
        let mut k = 0u32;
        let coords = loop {
            if let Some(c) = table.get(&z) {
                break c.clone();
            }
            k += 1;
            if k > e {
                return Err(Error::SylowOverflow { abs_disc, p, e });
            }
            z = z.pow(p)?;
        };
        if k == 0 {
            stalls += 1;
            continue;
        }
        let step = p.pow(k);
        if table.len() as u64 * step > pe {
            return Err(Error::SylowOverflow { abs_disc, p, e });
        }
        // S' = union of s * y^i for 0 <= i < p^k
        let base: Vec<(QuadForm, Vec<u64>)> = table.iter().map(|(f, c)| (*f, c.clone())).collect();
        for c in table.values_mut() {
            c.push(0);
        }
        let mut yi = one;
        for i in 1..step {
            yi = yi.compose(&y)?;
            for (f, c) in &base {
                let mut c = c.clone();
                c.push(i);
                let g = f.compose(&yi)?;
                if table.insert(g, c).is_some() {
                    return Err(Error::SylowOverflow { abs_disc, p, e });
                }
            }
        }
        gens.push(y);
        relations.push((coords, step));
    }

    // relation j: p^{k_j} g_j - sum coords_j[i] g_i = 0
    let g = gens.len();
    let matrix: Vec<Vec<i128>> = relations
        .iter()
        .enumerate()
        .map(|(j, (coords, step))| {
            let mut row = vec![0i128; g];
            for (i, &c) in coords.iter().enumerate() {
                row[i] = -(c as i128);
            }
            row[j] = *step as i128;
            row
        })
        .collect();
    let mut exps: Vec<u32> = smith_diagonal(matrix)
        .into_iter()
        .map(|d| {
            let (mut d, mut k) = (d, 0);
            while d > 1 {
                d /= p;
                k += 1;
            }
            k
        })
        .collect();
    exps.sort_unstable_by(|a, b| b.cmp(a));
    Ok(exps)
}

/// Number of distinct primes dividing a fundamental `|Δ|`.
fn prime_discriminant_count(abs_disc: u64) -> usize {
    factor(abs_disc).len()
}

/// Fill in the invariant factors of a record whose class number is exact.
pub fn resolve(record: &ClassRecord) -> Result<ClassRecord> {
    resolve_with_seed(record, 0)
}

pub fn resolve_with_seed(record: &ClassRecord, seed: u64) -> Result<ClassRecord> {
    let disc = -(record.abs_disc as i64);
    let chains = factor(record.h)
        .into_iter()
        .map(|(p, e)| Ok((p, sylow_structure(disc, record.h, p, e, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    let group = AbelianGroup::from_sylow_chains(&chains);
    let expected = prime_discriminant_count(record.abs_disc) - 1;
    let found = group.p_rank(2);
    if found != expected {
        return Err(Error::GenusMismatch {
            abs_disc: record.abs_disc,
            found,
            expected,
        });
    }
    Ok(ClassRecord {
        divisors: group.into_divisors(),
        ..record.clone()
    })
}
