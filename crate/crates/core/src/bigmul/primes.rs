//! Word-size NTT prime bases.

use std::sync::Mutex;

use crate::arith::{is_prime, pow_mod};
use crate::error::{Error, Result};

/// Transform log-length supported by the default primes `c * 2^32 + 1`.
pub const DEFAULT_LOG_LEN: u32 = 32;

/// Ordered primes with a primitive `2^L`-th root of unity modulo each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    roots: Vec<u64>,
    log_len: u32,
}

/// The largest primes below `2^62` of the form `c * 2^32 + 1`, in decreasing order.
pub fn ntt_primes(count: usize) -> Vec<u64> {
    static CACHE: Mutex<Vec<u64>> = Mutex::new(Vec::new());
    let mut cache = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    let step = 1u64 << DEFAULT_LOG_LEN;
    let mut c = cache
        .last()
        .map_or((1u64 << 62) / step, |&p| (p - 1) / step);
    while cache.len() < count {
        c -= 1;
        let p = c * step + 1;
        if is_prime(p) {
            cache.push(p);
        }
    }
    cache[..count].to_vec()
}

/// An element of exact order `2^l` modulo `p`, where `2^l | p - 1`.
fn root_of_unity(p: u64, l: u32) -> u64 {
    if p == 2 {
        return 1;
    }
    let mut x = 2;
    while pow_mod(x, (p - 1) / 2, p) != p - 1 {
        x += 1;
    }
    pow_mod(x, (p - 1) >> l, p)
}

impl PrimeBasis {
    /// Wrap arbitrary odd primes below `2^62`. `L` is the smallest 2-adic
    /// valuation of `p_i - 1` over the basis.
    pub fn from_primes(primes: &[u64]) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::InvalidParameter("empty prime basis".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &p in primes {
            if p < 3 || p >= 1 << 62 || !is_prime(p) {
                return Err(Error::InvalidParameter(format!(
                    "{p} is not an odd prime below 2^62"
                )));
            }
            if !seen.insert(p) {
                return Err(Error::InvalidParameter(format!("duplicate prime {p}")));
            }
        }
        let log_len = primes
            .iter()
            .map(|p| (p - 1).trailing_zeros())
            .min()
            .unwrap_or(0);
        let roots = primes.iter().map(|&p| root_of_unity(p, log_len)).collect();
        Ok(Self {
            primes: primes.to_vec(),
            roots,
            log_len,
        })
    }

    /// The first `count` default NTT primes.
    pub fn ntt(count: usize) -> Result<Self> {
        Self::from_primes(&ntt_primes(count))
    }

    /// The shortest prefix of the default NTT primes with
    /// `sum log2(p_i) > bits`.
    pub fn with_capacity(bits: u64) -> Result<Self> {
        let mut count = (bits as f64 / 61.9).ceil().max(1.0) as usize;
        loop {
            let primes = ntt_primes(count);
            let cap: f64 = primes.iter().map(|&p| (p as f64).log2()).sum();
            if cap > bits as f64 {
                // the estimate may overshoot by a prime or two
                let mut n = count;
                while n > 1 && cap_of(&primes[..n - 1]) > bits as f64 {
                    n -= 1;
                }
                return Self::from_primes(&primes[..n]);
            }
            count += 1;
        }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn roots(&self) -> &[u64] {
        &self.roots
    }

    pub fn log_len(&self) -> u32 {
        self.log_len
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// `sum log2(p_i)`.
    pub fn capacity_bits(&self) -> f64 {
        cap_of(&self.primes)
    }
}

fn cap_of(primes: &[u64]) -> f64 {
    primes.iter().map(|&p| (p as f64).log2()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_primes_shape() {
        let ps = ntt_primes(8);
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        for &p in &ps {
            assert!(p < 1 << 62 && is_prime(p));
            assert_eq!((p - 1) % (1 << 32), 0);
        }
        // nothing of that shape lies between the first prime and 2^62
        let step = 1u64 << 32;
        let mut q = ps[0] + step;
        while q < 1 << 62 {
            assert!(!is_prime(q));
            q += step;
        }
    }

    #[test]
    fn roots_have_exact_order() {
        let b = PrimeBasis::ntt(4).unwrap();
        assert_eq!(b.log_len(), 32);
        for (&p, &w) in b.primes().iter().zip(b.roots()) {
            assert_eq!(pow_mod(w, 1 << 32, p), 1);
            assert_eq!(pow_mod(w, 1 << 31, p), p - 1);
        }
        let small = PrimeBasis::from_primes(&[17, 97]).unwrap();
        assert_eq!(small.log_len(), 4);
        assert_eq!(pow_mod(small.roots()[0], 8, 17), 16);
    }

    #[test]
    fn capacity_is_minimal() {
        for bits in [1u64, 61, 62, 200, 744, 5000] {
            let b = PrimeBasis::with_capacity(bits).unwrap();
            assert!(b.capacity_bits() > bits as f64);
            assert!(cap_of(&b.primes()[..b.len() - 1]) <= bits as f64);
        }
    }

    #[test]
    fn rejects_bad_primes() {
        assert!(PrimeBasis::from_primes(&[]).is_err());
        assert!(PrimeBasis::from_primes(&[15]).is_err());
        assert!(PrimeBasis::from_primes(&[2]).is_err());
        assert!(PrimeBasis::from_primes(&[17, 17]).is_err());
    }
}
