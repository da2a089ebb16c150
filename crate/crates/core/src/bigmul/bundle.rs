//! Kronecker substitution: packing `B` consecutive `s`-bit coefficients into one
//! big integer, and recovering product coefficients from packed products.

use num_bigint::BigUint;

use crate::coeffs::{CoeffTable, Width};
use crate::error::{Error, Result};

/// Bundling factor `B` and packed bit size `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BundleParams {
    pub b: usize,
    pub s: u32,
}

impl BundleParams {
    pub fn new(b: usize, s: u32) -> Result<Self> {
        if b == 0 || !b.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "bundling factor {b} is not a power of two"
            )));
        }
        if s == 0 || s > 64 {
            return Err(Error::InvalidParameter(format!("bit size {s} outside 1..=64")));
        }
        Ok(Self { b, s })
    }

    /// Parameters whose `s` provably holds every coefficient of `f * g`:
    /// each product coefficient is at most `min(len) * max(f) * max(g)`.
    pub fn for_inputs(f: &CoeffTable, g: &CoeffTable, b: usize) -> Result<Self> {
        let bound = (f.len().min(g.len()) as u128)
            * f.max_value()? as u128
            * g.max_value()? as u128;
        let s = (128 - bound.leading_zeros()).max(1);
        if s > 64 {
            return Err(Error::InvalidParameter(format!(
                "product coefficients need {s} bits"
            )));
        }
        Self::new(b, s)
    }

    /// Bundle count for a polynomial of `len` coefficients.
    pub fn bundle_count(&self, len: usize) -> usize {
        len.div_ceil(self.b)
    }

    /// Bit size of one packed product coefficient, `(2B - 1) s`.
    pub fn product_bits(&self) -> u64 {
        (2 * self.b as u64 - 1) * self.s as u64
    }
}

/// A polynomial whose coefficients are packed bundles of `B` source coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundledPoly {
    pub bundles: Vec<BigUint>,
    pub params: BundleParams,
}

/// Pack `values` (a slice of source coefficients) into little-endian 64-bit limbs.
pub(crate) fn pack_limbs(values: &[u64], s: u32, first_index: usize) -> Result<Vec<u64>> {
    let total_bits = values.len() * s as usize;
    let mut limbs = vec![0u64; total_bits.div_ceil(64) + 1];
    let limit = if s == 64 { u64::MAX } else { (1u64 << s) - 1 };
    for (j, &v) in values.iter().enumerate() {
        if v > limit {
            return Err(Error::CoefficientOverflow {
                index: first_index + j,
                value: v as u128,
                bits: s,
            });
        }
        let bit = j * s as usize;
        let (limb, off) = (bit / 64, bit % 64);
        limbs[limb] |= v << off;
        if off != 0 && off + s as usize > 64 {
            limbs[limb + 1] |= v >> (64 - off);
        }
    }
    while limbs.last() == Some(&0) {
        limbs.pop();
    }
    Ok(limbs)
}

pub(crate) fn limbs_to_biguint(limbs: &[u64]) -> BigUint {
    let digits: Vec<u32> = limbs
        .iter()
        .flat_map(|&l| [l as u32, (l >> 32) as u32])
        .collect();
    BigUint::new(digits)
}

/// `bundles[n] = sum_{j < B} f[nB + j] * 2^{js}`.
pub fn bundle(f: &CoeffTable, params: BundleParams) -> Result<BundledPoly> {
    let values = f.to_vec()?;
    bundle_slice(&values, params, 0)
}

pub(crate) fn bundle_slice(
    values: &[u64],
    params: BundleParams,
    first_index: usize,
) -> Result<BundledPoly> {
    let bundles = values
        .chunks(params.b)
        .enumerate()
        .map(|(n, chunk)| {
            pack_limbs(chunk, params.s, first_index + n * params.b).map(|l| limbs_to_biguint(&l))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BundledPoly { bundles, params })
}

/// Read `s`-bit digit `j` from little-endian limbs.
#[inline]
fn digit(limbs: &[u64], j: usize, s: u32) -> u64 {
    let bit = j * s as usize;
    let (limb, off) = (bit / 64, bit % 64);
    if limb >= limbs.len() {
        return 0;
    }
    let mut v = limbs[limb] >> off;
    if off != 0 && off + s as usize > 64 && limb + 1 < limbs.len() {
        v |= limbs[limb + 1] << (64 - off);
    }
    if s == 64 {
        v
    } else {
        v & ((1u64 << s) - 1)
    }
}

/// Recover `h_k` for `k` in `[first_bundle * B, (first_bundle + products.len()) * B)`
/// from consecutive packed products `H_n`, given the limbs of `H_{first_bundle - 1}`
/// (empty when `first_bundle == 0`).
///
/// `h_k = H_n^{(k - nB)} + H_{n-1}^{(k - nB + B)}`, where the second term is
/// absent for `n = 0` and for the top digit `k - nB = B - 1`.
pub(crate) fn extract_digits(
    previous: &[u64],
    products: &[Vec<u64>],
    params: BundleParams,
    first_index: usize,
    out: &mut Vec<u64>,
) -> Result<()> {
    let (b, s) = (params.b, params.s);
    let limit = if s == 64 { u64::MAX as u128 } else { (1u128 << s) - 1 };
    let mut prev = previous;
    for (i, limbs) in products.iter().enumerate() {
        for j in 0..b {
            let mut h = digit(limbs, j, s) as u128;
            if j + 1 < b {
                h += digit(prev, b + j, s) as u128;
            }
            if h > limit {
                return Err(Error::CoefficientOverflow {
                    index: first_index + i * b + j,
                    value: h,
                    bits: s,
                });
            }
            out.push(h as u64);
        }
        prev = limbs;
    }
    Ok(())
}

/// Recover the first `out_length` coefficients of `f * g` from the packed product.
pub fn unbundle_product(
    product: &[BigUint],
    params: BundleParams,
    out_length: usize,
) -> Result<CoeffTable> {
    let limbs: Vec<Vec<u64>> = product
        .iter()
        .take(params.bundle_count(out_length))
        .map(|h| h.to_u64_digits())
        .collect();
    let mut out = Vec::with_capacity(limbs.len() * params.b);
    extract_digits(&[], &limbs, params, 0, &mut out)?;
    out.resize(out_length, 0);
    let width = if params.s <= 32 { Width::W4 } else { Width::W8 };
    CoeffTable::from_vec(out, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{generate, SeriesKind};

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn bundle_examples() {
        let f = CoeffTable::from_values(vec![1, 2, 3, 4]);
        let p = BundleParams::new(2, 4).unwrap();
        assert_eq!(bundle(&f, p).unwrap().bundles, vec![big(0x21), big(0x43)]);

        let id = CoeffTable::from_values(vec![1, 0, 0, 0, 0, 0, 0, 0]);
        for s in [1, 7, 33, 64] {
            let p = BundleParams::new(8, s).unwrap();
            assert_eq!(bundle(&id, p).unwrap().bundles, vec![big(1)]);
        }

        let th = generate(SeriesKind::Theta3, 8, 8).unwrap();
        let p = BundleParams::new(4, 8).unwrap();
        assert_eq!(bundle(&th, p).unwrap().bundles, vec![big(0x201), big(0x2)]);
    }

    #[test]
    fn bundle_rejects_wide_coefficients() {
        let f = CoeffTable::from_values(vec![1, 16]);
        let err = bundle(&f, BundleParams::new(2, 4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::CoefficientOverflow { index: 1, .. }));
    }

    fn square_bundles(f: &[u64], p: BundleParams) -> Vec<BigUint> {
        let bf = bundle(&CoeffTable::from_values(f.to_vec()), p).unwrap().bundles;
        let mut out = vec![BigUint::default(); 2 * bf.len() - 1];
        for (i, x) in bf.iter().enumerate() {
            for (j, y) in bf.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn unbundle_examples() {
        let p = BundleParams::new(2, 8).unwrap();
        let h = square_bundles(&[1, 1, 1, 1], p);
        // (1 + x + x^2 + x^3)^2, recovered across all bundles
        let full = unbundle_product(&h, p, 6).unwrap();
        assert_eq!(full.to_vec().unwrap(), [1, 2, 3, 4, 3, 2]);
        let id = square_bundles(&[1, 0, 0, 0], p);
        assert_eq!(unbundle_product(&id, p, 4).unwrap().to_vec().unwrap(), [1, 0, 0, 0]);

        let th = generate(SeriesKind::Theta3, 8, 8).unwrap().to_vec().unwrap();
        let p = BundleParams::new(4, 8).unwrap();
        let h = square_bundles(&th, p);
        assert_eq!(
            unbundle_product(&h, p, 8).unwrap().to_vec().unwrap(),
            [1, 4, 4, 0, 4, 8, 0, 0]
        );
    }

    #[test]
    fn full_product_needs_one_more_bundle() {
        // all 2B-1 = 7 coefficients of the square need bundles 0..=3 of H
        let p = BundleParams::new(2, 8).unwrap();
        let mut h = square_bundles(&[1, 1, 1, 1], p);
        h.push(BigUint::default());
        assert_eq!(
            unbundle_product(&h, p, 7).unwrap().to_vec().unwrap(),
            [1, 2, 3, 4, 3, 2, 1]
        );
    }

    #[test]
    fn digit_overflow_is_reported() {
        // h_2 = H_1^(0) + H_0^(2) = 1 + 3 does not fit in 2 bits
        let p = BundleParams::new(2, 2).unwrap();
        let h = [big(3 << 4), big(1)];
        let err = unbundle_product(&h, p, 4).unwrap_err();
        assert!(matches!(err, Error::CoefficientOverflow { index: 2, value: 4, .. }));
    }
}
