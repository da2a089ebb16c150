//! Positive definite binary quadratic forms `ax^2 + bxy + cy^2`: reduction,
//! composition, and class counting by enumeration of reduced forms.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::arith::{ext_gcd_i64, gcd, isqrt, sqrt_mod_prime};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;

/// Largest `|Δ|` handled; every intermediate of composition then fits in `i128`.
pub const MAX_ABS_DISC: u64 = 1 << 59;

/// Class number above which `group_table` refuses to enumerate.
pub const GROUP_TABLE_LIMIT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

fn check_disc(disc: i64) -> Result<()> {
    if disc >= 0 || disc.rem_euclid(4) > 1 {
        return Err(Error::InvalidParameter(format!(
            "{disc} is not a negative discriminant"
        )));
    }
    if disc.unsigned_abs() >= MAX_ABS_DISC {
        return Err(Error::FormOverflow(disc));
    }
    Ok(())
}

impl QuadForm {
    /// A positive definite form with `|Δ| < 2^59`.
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = Self { a, b, c };
        if a <= 0 {
            return Err(Error::InvalidForm {
                a,
                b,
                c,
                reason: "leading coefficient must be positive",
            });
        }
        let d = b as i128 * b as i128 - 4 * a as i128 * c as i128;
        if d >= 0 {
            return Err(Error::InvalidForm {
                a,
                b,
                c,
                reason: "discriminant must be negative",
            });
        }
        if d.unsigned_abs() >= MAX_ABS_DISC as u128 || b.unsigned_abs() >= 1 << 62 || c >= 1 << 62 {
            return Err(Error::FormOverflow(d.max(i64::MIN as i128) as i64));
        }
        Ok(f)
    }

    /// The principal form `(1, b0, c0)` with `b0 ∈ {0, 1}`.
    pub fn principal(disc: i64) -> Result<Self> {
        check_disc(disc)?;
        let b = disc.rem_euclid(2);
        Ok(Self {
            a: 1,
            b,
            c: (b - disc) / 4,
        })
    }

    pub fn discriminant(&self) -> i64 {
        (self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128) as i64
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a as u64, self.b.unsigned_abs()), self.c as u64) == 1
    }

    pub fn is_principal(&self) -> bool {
        self.a == 1
    }

    /// The unique reduced form equivalent to `self`.
    pub fn reduce(&self) -> Self {
        let (mut a, mut b, mut c) = (self.a, self.b, self.c);
        loop {
            // b into (-a, a]
            if b <= -a || b > a {
                let r = (a - b).div_euclid(2 * a);
                c += r * (a * r + b);
                b += 2 * a * r;
            }
            if a > c || (a == c && b < 0) {
                (a, b, c) = (c, -b, a);
            } else {
                break;
            }
        }
        Self { a, b, c }
    }

    /// Class of the inverse, reduced.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.a,
            b: -self.b,
            c: self.c,
        }
        .reduce()
    }

    /// Gauss composition of two forms of the same discriminant, reduced.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let disc = self.discriminant();
        if other.discriminant() != disc {
            return Err(Error::DiscriminantMismatch(disc, other.discriminant()));
        }
        let (a1, b1) = (self.a, self.b);
        let (a2, b2, c2) = (other.a, other.b, other.c);
        let s = (b1 + b2) / 2;
        let (g1, _, y1) = ext_gcd_i64(a1, a2);
        let (e, x2, y2) = ext_gcd_i64(g1, s);
        // b3 = b2 + 2 (a2/e) K with K = nu (s - b2) - omega c2 (mod a1/e)
        let m = (a1 / e) as i128;
        let nu = x2 as i128 * y1 as i128 % m;
        let k = (nu * ((s - b2) as i128 % m) - y2 as i128 % m * (c2 as i128 % m)).rem_euclid(m);
        let a3 = m * (a2 / e) as i128;
        if a3 >= 1 << 62 {
            return Err(Error::FormOverflow(disc));
        }
        let b3 = (b2 as i128 + 2 * (a2 / e) as i128 * k).rem_euclid(2 * a3);
        let c_num = b3 * b3 - disc as i128;
        if c_num % (4 * a3) != 0 {
            return Err(Error::InvalidForm {
                a: self.a,
                b: self.b,
                c: self.c,
                reason: "composition requires primitive forms",
            });
        }
        let c3 = c_num / (4 * a3);
        if c3 >= 1 << 62 {
            return Err(Error::FormOverflow(disc));
        }
        Ok(Self {
            a: a3 as i64,
            b: b3 as i64,
            c: c3 as i64,
        }
        .reduce())
    }

    pub fn square(&self) -> Result<Self> {
        self.compose(self)
    }

    /// `self^n` by binary powering.
    pub fn pow(&self, mut n: u64) -> Result<Self> {
        let mut acc = Self::principal(self.discriminant())?;
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.square()?;
            }
        }
        Ok(acc)
    }
}

/// The reduced form of leading coefficient `ell` (a prime) for discriminant
/// `disc`, if `ell` is represented.
pub fn prime_form(disc: i64, ell: u64) -> Option<QuadForm> {
    let b = if ell == 2 {
        match disc.rem_euclid(8) {
            0 => 0,
            1 => 1,
            4 => 2,
            _ => return None,
        }
    } else {
        let mut b = sqrt_mod_prime(disc.rem_euclid(ell as i64) as u64, ell)? as i64;
        if (b - disc).rem_euclid(2) != 0 {
            b = ell as i64 - b;
        }
        b
    };
    let ell = ell as i64;
    let c = (b as i128 * b as i128 - disc as i128) / (4 * ell as i128);
    Some(
        QuadForm {
            a: ell,
            b,
            c: c as i64,
        }
        .reduce(),
    )
}

/// All reduced primitive forms of discriminant `disc`, sorted.
pub fn reduced_forms(disc: i64) -> Result<Vec<QuadForm>> {
    check_disc(disc)?;
    let n = disc.unsigned_abs() as i64;
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= n {
        let mut b = disc.rem_euclid(2);
        while b <= a {
            let num = b * b + n;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a {
                    for sb in [b, -b] {
                        let f = QuadForm { a, b: sb, c };
                        if f.is_reduced() && f.is_primitive() && (sb != 0 || b == 0) {
                            out.push(f);
                        }
                        if b == 0 {
                            break;
                        }
                    }
                }
            }
            b += 2;
        }
        a += 1;
    }
    out.sort();
    Ok(out)
}

/// `h(Δ)`: the number of reduced primitive forms of discriminant `disc`.
pub fn count_classes(disc: i64) -> Result<u64> {
    check_disc(disc)?;
    let n = disc.unsigned_abs() as i64;
    let mut h = 0;
    let mut a = 1i64;
    while 3 * a * a <= n {
        let mut b = disc.rem_euclid(2);
        while b <= a {
            let num = b * b + n;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a && gcd(gcd(a as u64, b as u64), c as u64) == 1 {
                    h += if b == 0 || b == a || a == c { 1 } else { 2 };
                }
            }
            b += 2;
        }
        a += 1;
    }
    Ok(h)
}

/// Which discriminants a batch enumeration fills.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscFilter {
    All,
    /// Only `Δ ≡ 1 (mod 8)`, i.e. `|Δ| ≡ 7 (mod 8)`.
    OneMod8,
}

/// Number of reduced forms (primitive or not) of every discriminant
/// `-n`, `n < bound`, in one sweep over all reduced forms. For a fundamental
/// discriminant every form is primitive, so the entry is `h(Δ)`.
///
/// With `DiscFilter::OneMod8` only entries with `n ≡ 7 (mod 8)` are filled.
pub fn count_classes_upto(bound: u64, filter: DiscFilter) -> Vec<u32> {
    let amax = isqrt(bound / 3) + 1;
    let bound_i = bound as i64;
    let sweep = |a_lo: i64, a_hi: i64, counts: &mut Vec<u32>| {
        for a in a_lo..a_hi {
            let (b_start, b_step, c_step) = match filter {
                DiscFilter::All => (0, 1, 1),
                DiscFilter::OneMod8 => (1, 2, if a % 2 == 1 { 2 } else { 1 }),
            };
            let mut b = b_start;
            while b <= a {
                let c = if filter == DiscFilter::OneMod8 && a % 2 == 1 { a + 1 } else { a };
                let mut d = 4 * a * c - b * b;
                let dd = 4 * a * c_step;
                let side = if b == 0 || b == a { 1 } else { 2 };
                if c == a && d < bound_i {
                    counts[d as usize] += 1;
                    d += dd;
                }
                while d < bound_i {
                    counts[d as usize] += side;
                    d += dd;
                }
                b += b_step;
            }
        }
    };
    let amax = amax as i64;
    let blocks: Vec<(i64, i64)> = {
        let step = (amax / 64).max(1);
        (1..=amax)
            .step_by(step as usize)
            .map(|lo| (lo, (lo + step).min(amax + 1)))
            .collect()
    };
    blocks
        .into_par_iter()
        .fold(
            || vec![0u32; bound as usize],
            |mut acc, (lo, hi)| {
                sweep(lo, hi, &mut acc);
                acc
            },
        )
        .reduce(
            || vec![0u32; bound as usize],
            |mut x, y| {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
                x
            },
        )
}

/// `12 H(n)` by weighted enumeration of all reduced forms of discriminant
/// `-n`: weight 6 for multiples of `(1, 0, 1)`, 4 for multiples of `(1, 1, 1)`,
/// 12 otherwise.
pub fn hurwitz_by_enumeration(n: u64) -> u64 {
    if n == 0 || n % 4 == 1 || n % 4 == 2 {
        return 0;
    }
    let n = n as i64;
    let mut total = 0;
    let mut a = 1i64;
    while 3 * a * a <= n {
        let mut b = n % 2;
        while b <= a {
            let num = b * b + n;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a {
                    total += if b == 0 && a == c {
                        6
                    } else if b == a && a == c {
                        4
                    } else if b == 0 || b == a || a == c {
                        12
                    } else {
                        24
                    };
                }
            }
            b += 2;
        }
        a += 1;
    }
    total
}

/// Class group of `disc` from its full composition table.
pub fn group_table(disc: i64) -> Result<AbelianGroup> {
    let forms = reduced_forms(disc)?;
    let h = forms.len() as u64;
    if h > GROUP_TABLE_LIMIT {
        return Err(Error::GroupTooLarge {
            h,
            limit: GROUP_TABLE_LIMIT,
        });
    }
    let index: HashMap<QuadForm, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let identity = index[&QuadForm::principal(disc)?];
    let mut chains: Vec<(u64, Vec<u32>)> = Vec::new();
    for (p, e) in crate::arith::factor(h) {
        // killed[k] = log_p #{x : x^{p^k} = 1}
        let mut current: Vec<QuadForm> = forms.clone();
        let mut killed = vec![0u32];
        for _ in 0..e {
            current = current
                .iter()
                .map(|f| f.pow(p))
                .collect::<Result<Vec<_>>>()?;
            let n = current.iter().filter(|f| index.get(f) == Some(&identity)).count() as u64;
            let mut lg = 0;
            let mut m = n;
            while m > 1 {
                m /= p;
                lg += 1;
            }
            killed.push(lg);
        }
        // number of cyclic factors of order >= p^k is killed[k] - killed[k-1]
        let mut exps = Vec::new();
        for k in 1..=e as usize {
            let at_least = killed[k] - killed[k - 1];
            let next = if k < e as usize { killed[k + 1] - killed[k] } else { 0 };
            for _ in 0..(at_least - next) {
                exps.push(k as u32);
            }
        }
        chains.push((p, exps));
    }
    Ok(AbelianGroup::from_sylow_chains(&chains))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::new(a, b, c).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(f(1, 0, 1).reduce(), f(1, 0, 1));
        assert_eq!(f(2, 2, 3).reduce(), f(2, 2, 3));
        assert_eq!(f(3, 10, 9).reduce(), f(1, 0, 2));
        assert!(QuadForm::new(0, 1, 1).is_err());
        assert!(QuadForm::new(1, 3, 1).is_err());
    }

    #[test]
    fn compose_examples() {
        let g = f(2, 1, 3);
        let one = QuadForm::principal(-23).unwrap();
        assert_eq!(one.compose(&g).unwrap(), g);
        assert_eq!(g.compose(&g).unwrap(), f(2, -1, 3));
        assert_eq!(g.compose(&g.inverse()).unwrap(), one);
        assert_eq!(g.pow(3).unwrap(), one);
        assert!(matches!(
            g.compose(&f(1, 0, 1)),
            Err(Error::DiscriminantMismatch(-23, -4))
        ));
    }

    #[test]
    fn class_counts() {
        assert_eq!(count_classes(-3).unwrap(), 1);
        assert_eq!(count_classes(-4).unwrap(), 1);
        assert_eq!(count_classes(-23).unwrap(), 3);
        assert_eq!(count_classes(-12).unwrap(), 1);
        assert_eq!(count_classes(-5460).unwrap(), 16);
        assert_eq!(reduced_forms(-23).unwrap(), vec![f(1, 1, 6), f(2, -1, 3), f(2, 1, 3)]);
        for d in 3..3000u64 {
            if d % 4 == 0 || d % 4 == 3 {
                let disc = -(d as i64);
                assert_eq!(count_classes(disc).unwrap(), reduced_forms(disc).unwrap().len() as u64);
            }
        }
    }

    #[test]
    fn group_table_examples() {
        assert_eq!(group_table(-23).unwrap().divisors(), &[3]);
        assert!(group_table(-3).unwrap().divisors().is_empty());
        assert_eq!(group_table(-5460).unwrap().divisors(), &[2, 2, 2, 2]);
        assert_eq!(group_table(-3299).unwrap().divisors(), &[3, 9]);
    }

    #[test]
    fn batch_counts_match() {
        let all = count_classes_upto(5000, DiscFilter::All);
        let odd = count_classes_upto(5000, DiscFilter::OneMod8);
        for n in 3..5000u64 {
            if crate::arith::is_fundamental(n) {
                let h = count_classes(-(n as i64)).unwrap();
                assert_eq!(all[n as usize] as u64, h, "n = {n}");
                if n % 8 == 7 {
                    assert_eq!(odd[n as usize] as u64, h, "n = {n}");
                }
            }
            if n % 8 != 7 {
                assert_eq!(odd[n as usize], 0);
            }
        }
    }

    #[test]
    fn prime_forms() {
        let g = prime_form(-23, 2).unwrap();
        assert_eq!(g.a, 2);
        assert_eq!(g.discriminant(), -23);
        assert!(prime_form(-23, 5).is_none());
        assert!(prime_form(-20, 2).is_some());
        assert!(prime_form(-3, 2).is_none());
        for p in [3u64, 7, 11, 13] {
            if let Some(g) = prime_form(-5460, p) {
                assert_eq!(g.discriminant(), -5460);
            }
        }
    }

    #[test]
    fn hurwitz_enumeration() {
        assert_eq!(hurwitz_by_enumeration(3), 4);
        assert_eq!(hurwitz_by_enumeration(4), 6);
        assert_eq!(hurwitz_by_enumeration(12), 16);
        assert_eq!(hurwitz_by_enumeration(5), 0);
    }
}
