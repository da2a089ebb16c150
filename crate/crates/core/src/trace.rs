//! Verification of Hurwitz class numbers through the Kronecker–Hurwitz class
//! number relation
//!
//! `H(4n) + 2 Σ_{1 <= t <= √(4n)} H(4n - t²) = 2 Σ_{d | n, d >= √n} d - σ(n)√n + χ(n)/6`,
//!
//! where `σ` and `χ` are both the perfect-square indicator and `H(0) = 0`.
//! Everything is scaled by 12 so the arithmetic stays in integers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::isqrt;
use crate::classnum::HurwitzTable;
use crate::error::{Error, Result};

/// Width of one segment of the divisor-sum sieve.
pub const SIEVE_BLOCK: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub x: u64,
    /// `12 LHS`.
    pub lhs: i128,
    /// `12 RHS`.
    pub rhs: i128,
    pub pass: bool,
    /// Smallest even `n <= 2X` at which the pointwise relation fails, when the
    /// aggregate check fails.
    pub first_failing_n: Option<u64>,
}

/// `Σ_{d | m, d² >= m} d` for every `m` in `[lo, hi)`.
pub fn large_divisor_sums(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = vec![0u64; hi.saturating_sub(lo) as usize];
    if hi <= lo {
        return out;
    }
    // each small divisor e (e² <= m) pairs with m / e
    let emax = isqrt(hi - 1);
    for e in 1..=emax {
        let start = (e * e).max(lo.div_ceil(e) * e);
        let mut m = start;
        while m < hi {
            out[(m - lo) as usize] += m / e;
            m += e;
        }
    }
    out
}

/// `12 × RHS` of the pointwise relation, given the large-divisor sum of `n`.
fn rhs_term(n: u64, large_divisor_sum: u64) -> i128 {
    let r = isqrt(n);
    let square = r * r == n;
    let mut v = 24 * large_divisor_sum as i128;
    if square {
        v += 2 - 12 * r as i128;
    }
    v
}

/// `(12 LHS, 12 RHS)` of the pointwise relation at `n`.
pub fn pointwise_sides(n: u64, table: &HurwitzTable) -> Result<(i128, i128)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let m = 4 * n;
    let mut lhs = table.get(m)? as i128;
    for t in 1..=isqrt(m) {
        lhs += 2 * table.get(m - t * t)? as i128;
    }
    let rhs = rhs_term(n, large_divisor_sums(n, n + 1)[0]);
    Ok((lhs, rhs))
}

pub fn verify_pointwise(n: u64, table: &HurwitzTable) -> Result<bool> {
    let (l, r) = pointwise_sides(n, table)?;
    Ok(l == r)
}

/// Number of `(t, n)` with `t >= 1`, `1 <= n <= X` and `Δ = t² - 8n`.
pub fn solution_count(disc: i64, x: u64) -> u64 {
    let window = 8 * x as i64 + disc;
    if disc > 0 || window < 0 {
        return 0;
    }
    let y = isqrt(window as u64);
    match disc.rem_euclid(8) {
        1 => (y + 1) / 2,
        4 => (y + 2) / 4,
        0 => y / 4,
        _ => 0,
    }
}

/// `12 LHS` of the aggregate relation over even arguments `2n`, `n <= X`.
pub fn aggregate_lhs(x: u64, table: &HurwitzTable) -> Result<i128> {
    let top = 8 * x;
    if table.max_n() < top {
        return Err(Error::TableGap(top));
    }
    let values = table.values();
    let chunk = SIEVE_BLOCK as usize;
    Ok(values[..=top as usize]
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, block)| {
            let base = (ci * chunk) as u64;
            block
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0)
                .map(|(i, &v)| {
                    let m = base + i as u64;
                    let direct = if m % 8 == 0 { v as i128 } else { 0 };
                    direct + 2 * solution_count(-(m as i64), x) as i128 * v as i128
                })
                .sum::<i128>()
        })
        .sum())
}

/// `12 RHS` of the aggregate relation, with divisor sums from a segmented sieve.
pub fn aggregate_rhs(x: u64) -> i128 {
    let top = 2 * x + 1;
    let blocks: Vec<u64> = (2..top).step_by(SIEVE_BLOCK as usize).collect();
    blocks
        .into_par_iter()
        .map(|lo| {
            let hi = (lo + SIEVE_BLOCK).min(top);
            let sums = large_divisor_sums(lo, hi);
            (lo..hi)
                .zip(sums)
                .filter(|&(m, _)| m % 2 == 0)
                .map(|(m, s)| rhs_term(m, s))
                .sum::<i128>()
        })
        .sum()
}

pub fn verify_aggregate(x: u64, table: &HurwitzTable) -> Result<VerifyReport> {
    if x == 0 {
        return Err(Error::InvalidParameter("X must be at least 1".into()));
    }
    let lhs = aggregate_lhs(x, table)?;
    let rhs = aggregate_rhs(x);
    let pass = lhs == rhs;
    let first_failing_n = if pass {
        None
    } else {
        first_failing_even(x, table)?
    };
    Ok(VerifyReport {
        x,
        lhs,
        rhs,
        pass,
        first_failing_n,
    })
}

fn first_failing_even(x: u64, table: &HurwitzTable) -> Result<Option<u64>> {
    for n in (2..=2 * x).step_by(2) {
        if !verify_pointwise(n, table)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// First `n <= limit` where the pointwise relation fails.
pub fn first_pointwise_failure(limit: u64, table: &HurwitzTable) -> Result<Option<u64>> {
    let fails = (1..=limit)
        .into_par_iter()
        .map(|n| verify_pointwise(n, table).map(|ok| (!ok).then_some(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fails.into_iter().flatten().min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classnum::build_hurwitz_table;
    use crate::qform::count_classes;

    fn table(x: u64) -> HurwitzTable {
        build_hurwitz_table(|d| count_classes(-(d as i64)).ok(), x).unwrap()
    }

    #[test]
    fn hand_values() {
        let t = table(4);
        assert_eq!(pointwise_sides(1, &t).unwrap(), (14, 14));
        assert_eq!(pointwise_sides(2, &t).unwrap(), (48, 48));
        assert_eq!(pointwise_sides(4, &t).unwrap(), (122, 122));
    }

    #[test]
    fn pointwise_small_range() {
        let t = table(500);
        assert_eq!(first_pointwise_failure(500, &t).unwrap(), None);
    }

    #[test]
    fn divisor_sums_match_direct() {
        let direct = |m: u64| (1..=m).filter(|d| m % d == 0 && d * d >= m).sum::<u64>();
        let sums = large_divisor_sums(1, 400);
        for (m, s) in (1..400).zip(&sums) {
            assert_eq!(*s, direct(m), "m = {m}");
        }
        assert_eq!(large_divisor_sums(97, 131), (97..131).map(direct).collect::<Vec<_>>());
    }

    #[test]
    fn solution_count_brute_force() {
        for x in [1u64, 2, 7, 50, 300] {
            for d in 0..=1000i64 {
                let disc = -d;
                let brute = (1..=x)
                    .flat_map(|n| (1..=isqrt(8 * n)).map(move |t| (t, n)))
                    .filter(|&(t, n)| (t * t) as i64 - 8 * n as i64 == disc)
                    .count() as u64;
                assert_eq!(solution_count(disc, x), brute, "Δ = {disc}, X = {x}");
            }
        }
        assert_eq!(solution_count(-3, 1000), 0);
    }

    #[test]
    fn aggregate_matches_pointwise_sum() {
        let t = table(200);
        for x in [1u64, 2, 17, 100] {
            let r = verify_aggregate(x, &t).unwrap();
            let (l, rr) = (1..=x)
                .map(|n| pointwise_sides(2 * n, &t).unwrap())
                .fold((0, 0), |(a, b), (l, r)| (a + l, b + r));
            assert_eq!((r.lhs, r.rhs), (l, rr), "X = {x}");
            assert!(r.pass);
        }
        assert_eq!(verify_aggregate(1, &t).unwrap().lhs, 48);
    }

    #[test]
    fn fault_is_detected() {
        let mut t = table(200);
        t.values_mut()[23] -= 12;
        let r = verify_aggregate(100, &t).unwrap();
        assert!(!r.pass && r.lhs < r.rhs);
        assert_eq!(r.first_failing_n, Some(6));
    }

    #[test]
    fn short_table_is_a_gap() {
        let t = table(10);
        assert!(matches!(verify_aggregate(10, &t), Err(Error::TableGap(80))));
    }
}
