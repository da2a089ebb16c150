//! Radix-2 number-theoretic transforms in Montgomery form.

use crate::arith::{inv_mod, pow_mod};
use crate::error::{Error, Result};

/// Montgomery arithmetic modulo an odd `p < 2^63` with `R = 2^64`.
#[derive(Clone, Copy, Debug)]
pub struct Montgomery {
    p: u64,
    p_inv: u64,
    r2: u64,
}

impl Montgomery {
    pub fn new(p: u64) -> Self {
        debug_assert!(p % 2 == 1 && p < 1 << 63);
        let mut inv = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((u64::MAX % p) + 1) % p;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Self { p, p_inv: inv, r2 }
    }

    #[inline(always)]
    fn reduce(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.p_inv);
        let mp = m as u128 * self.p as u128;
        let (hi, sub) = ((t >> 64) as u64, (mp >> 64) as u64);
        if hi >= sub {
            hi - sub
        } else {
            hi + self.p - sub
        }
    }

    /// `a * b / R mod p`.
    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.p, self.r2)
    }

    pub fn from_mont(&self, a: u64) -> u64 {
        self.reduce(a as u128)
    }
}

/// Precomputed twiddles for transforms of length `2^log_n` modulo one prime.
pub struct NttPlan {
    mont: Montgomery,
    log_n: u32,
    roots: Vec<u64>,
    inv_roots: Vec<u64>,
    scale: u64,
}

impl NttPlan {
    /// `root` must have exact order `2^max_log` modulo `p`.
    pub fn new(p: u64, root: u64, max_log: u32, log_n: u32) -> Result<Self> {
        if log_n > max_log {
            return Err(Error::TransformTooLong {
                prime: p,
                requested: log_n,
                supported: max_log,
            });
        }
        let mont = Montgomery::new(p);
        let n = 1usize << log_n;
        let w = pow_mod(root, 1u64 << (max_log - log_n), p);
        let wi = inv_mod(w, p).expect("root is a unit");
        let half = (n / 2).max(1);
        let powers = |base: u64| {
            let b = mont.to_mont(base);
            let mut acc = mont.to_mont(1);
            (0..half)
                .map(|_| {
                    let cur = acc;
                    acc = mont.mul(acc, b);
                    cur
                })
                .collect::<Vec<_>>()
        };
        let n_inv = inv_mod(n as u64 % p, p).expect("p is odd");
        Ok(Self {
            mont,
            log_n,
            roots: powers(w),
            inv_roots: powers(wi),
            // n^{-1} R^2, which also cancels the R^{-1} left by the pointwise product
            scale: mont.to_mont(mont.to_mont(n_inv)),
        })
    }

    pub fn len(&self) -> usize {
        1 << self.log_n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decimation in frequency; natural order in, bit-reversed order out.
    pub fn forward(&self, a: &mut [u64]) {
        let m = &self.mont;
        let n = a.len();
        let mut len = n / 2;
        while len >= 1 {
            let stride = n / (2 * len);
            for block in a.chunks_exact_mut(2 * len) {
                let (lo, hi) = block.split_at_mut(len);
                for j in 0..len {
                    let (u, v) = (lo[j], hi[j]);
                    lo[j] = m.add(u, v);
                    hi[j] = m.mul(m.sub(u, v), self.roots[j * stride]);
                }
            }
            len /= 2;
        }
    }

    /// Decimation in time; bit-reversed order in, natural order out, unscaled.
    pub fn inverse(&self, a: &mut [u64]) {
        let m = &self.mont;
        let n = a.len();
        let mut len = 1;
        while len < n {
            let stride = n / (2 * len);
            for block in a.chunks_exact_mut(2 * len) {
                let (lo, hi) = block.split_at_mut(len);
                for j in 0..len {
                    let u = lo[j];
                    let v = m.mul(hi[j], self.inv_roots[j * stride]);
                    lo[j] = m.add(u, v);
                    hi[j] = m.sub(u, v);
                }
            }
            len *= 2;
        }
    }

    /// Product of `a` and `b` (entries `< p`), truncated to `out_len` terms.
    /// The full product must fit the plan length.
    pub fn multiply(&self, a: &[u64], b: &[u64], out_len: usize) -> Vec<u64> {
        let n = self.len();
        debug_assert!(a.len() + b.len() <= n + 1);
        let mut fa = vec![0u64; n];
        fa[..a.len()].copy_from_slice(a);
        self.forward(&mut fa);
        let mut fb = vec![0u64; n];
        fb[..b.len()].copy_from_slice(b);
        self.forward(&mut fb);
        let m = &self.mont;
        for (x, &y) in fa.iter_mut().zip(&fb) {
            *x = m.mul(*x, y);
        }
        drop(fb);
        self.inverse(&mut fa);
        fa.truncate(out_len);
        for x in fa.iter_mut() {
            *x = m.mul(*x, self.scale);
        }
        fa
    }
}

/// Smallest `k` with `2^k >= n`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Product of two residue polynomials modulo `p`, where `root` has order
/// `2^max_log`. The result has length `len(a) + len(b) - 1`.
pub fn ntt_mul(a: &[u64], b: &[u64], p: u64, root: u64, max_log: u32) -> Result<Vec<u64>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let out_len = a.len() + b.len() - 1;
    let plan = NttPlan::new(p, root, max_log, ceil_log2(out_len))?;
    let a: Vec<u64> = a.iter().map(|x| x % p).collect();
    let b: Vec<u64> = b.iter().map(|x| x % p).collect();
    Ok(plan.multiply(&a, &b, out_len))
}
