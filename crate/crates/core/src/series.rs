//! Theta-type series coefficient generation.
//!
//! Base kinds have coefficients supported on squares, triangular numbers or
//! pronic numbers `j(j+1)`. Squared kinds are initialized directly by a double
//! loop over pairs of support points inside each block, which avoids a first
//! polynomial multiplication.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::arith::{ceil_sqrt, isqrt};
use crate::coeffs::{CoeffTable, Width};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    /// `1 + 2q + 2q^4 + 2q^9 + ...`
    Theta3,
    /// `1 + q + q^3 + q^6 + ...` (triangular exponents)
    Nabla,
    /// `Nabla(q^2)`: exponents `j(j+1)`.
    NablaQ2,
    Theta3Sq,
    NablaSq,
    NablaQ2Sq,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 6] = [
        SeriesKind::Theta3,
        SeriesKind::Nabla,
        SeriesKind::NablaQ2,
        SeriesKind::Theta3Sq,
        SeriesKind::NablaSq,
        SeriesKind::NablaQ2Sq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Theta3 => "theta3",
            SeriesKind::Nabla => "nabla",
            SeriesKind::NablaQ2 => "nabla_q2",
            SeriesKind::Theta3Sq => "theta3_sq",
            SeriesKind::NablaSq => "nabla_sq",
            SeriesKind::NablaQ2Sq => "nabla_q2_sq",
        }
    }

    /// The base kind for squared kinds, `None` for base kinds.
    pub fn base(self) -> Option<SeriesKind> {
        match self {
            SeriesKind::Theta3Sq => Some(SeriesKind::Theta3),
            SeriesKind::NablaSq => Some(SeriesKind::Nabla),
            SeriesKind::NablaQ2Sq => Some(SeriesKind::NablaQ2),
            _ => None,
        }
    }

    pub fn default_width(self) -> Width {
        if self.base().is_some() {
            Width::W4
        } else {
            Width::W1
        }
    }

    // Support point j of a base kind.
    fn point(self, j: u64) -> u64 {
        match self {
            SeriesKind::Theta3 => j * j,
            SeriesKind::Nabla => j * (j + 1) / 2,
            SeriesKind::NablaQ2 => j * (j + 1),
            _ => unreachable!("squared kinds have no support points"),
        }
    }

    fn weight(self, j: u64) -> u64 {
        match self {
            SeriesKind::Theta3 if j > 0 => 2,
            _ => 1,
        }
    }

    // Smallest j whose support point is >= lo.
    fn first_point_at_or_after(self, lo: u64) -> u64 {
        match self {
            SeriesKind::Theta3 => ceil_sqrt(lo),
            SeriesKind::Nabla | SeriesKind::NablaQ2 => {
                // j(j+1) >= m with m = 2lo or lo
                let m = if self == SeriesKind::Nabla { 2 * lo } else { lo };
                let mut j = isqrt(m).saturating_sub(1);
                while j * (j + 1) < m {
                    j += 1;
                }
                j
            }
            _ => unreachable!("squared kinds have no support points"),
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeriesKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown series kind {s:?}")))
    }
}

/// First `length` coefficients of `kind`, at the kind's default width.
///
/// `length` is rounded up to a multiple of `partition_size`; the padding
/// holds the true series coefficients, which consumers may ignore.
pub fn generate(kind: SeriesKind, length: usize, partition_size: usize) -> Result<CoeffTable> {
    generate_with_width(kind, length, partition_size, kind.default_width())
}

pub fn generate_with_width(
    kind: SeriesKind,
    length: usize,
    partition_size: usize,
    width: Width,
) -> Result<CoeffTable> {
    if length == 0 || partition_size == 0 {
        return Err(Error::InvalidParameter(
            "series length and partition size must be positive".into(),
        ));
    }
    let padded = length.div_ceil(partition_size) * partition_size;
    let mut values = vec![0u64; padded];
    values
        .par_chunks_mut(partition_size)
        .enumerate()
        .for_each(|(i, block)| {
            let start = (i * partition_size) as u64;
            match kind.base() {
                None => fill_base_block(kind, start, block),
                Some(base) => fill_squared_block(base, start, block),
            }
        });
    CoeffTable::from_vec(values, width)
}

fn fill_base_block(kind: SeriesKind, start: u64, block: &mut [u64]) {
    let end = start + block.len() as u64;
    let mut j = kind.first_point_at_or_after(start);
    loop {
        let p = kind.point(j);
        if p >= end {
            break;
        }
        block[(p - start) as usize] += kind.weight(j);
        j += 1;
    }
}

fn fill_squared_block(base: SeriesKind, start: u64, block: &mut [u64]) {
    let end = start + block.len() as u64;
    let mut i = 0;
    loop {
        let pi = base.point(i);
        if pi >= end {
            break;
        }
        let wi = base.weight(i);
        let mut j = base.first_point_at_or_after(start.saturating_sub(pi));
        loop {
            let k = pi + base.point(j);
            if k >= end {
                break;
            }
            block[(k - start) as usize] += wi * base.weight(j);
            j += 1;
        }
        i += 1;
    }
}

/// Schoolbook product truncated to `out_length`, accumulated exactly.
pub fn convolve_naive(a: &CoeffTable, b: &CoeffTable, out_length: usize) -> Result<CoeffTable> {
    if out_length + 1 > a.len() + b.len() {
        return Err(Error::InvalidParameter(format!(
            "output length {out_length} exceeds {} + {} - 1",
            a.len(),
            b.len()
        )));
    }
    let av = a.to_vec()?;
    let bv = b.to_vec()?;
    let nz_a: Vec<usize> = (0..av.len()).filter(|&i| av[i] != 0).collect();
    let nz_b: Vec<usize> = (0..bv.len()).filter(|&i| bv[i] != 0).collect();
    // iterate over the sparser operand in the outer loop
    let (outer, outer_nz, inner) = if nz_a.len() <= nz_b.len() {
        (&av, &nz_a, &bv)
    } else {
        (&bv, &nz_b, &av)
    };
    let mut acc = vec![0u128; out_length];
    let mut big: Vec<Option<BigUint>> = vec![None; out_length];
    for &i in outer_nz {
        if i >= out_length {
            break;
        }
        let x = outer[i] as u128;
        for (j, &y) in inner.iter().enumerate().take(out_length - i) {
            if y == 0 {
                continue;
            }
            let term = x * y as u128;
            let slot = &mut acc[i + j];
            match slot.checked_add(term) {
                Some(s) => *slot = s,
                None => {
                    let carry = big[i + j].get_or_insert_with(BigUint::default);
                    *carry += BigUint::from(*slot) + BigUint::from(term);
                    *slot = 0;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(out_length);
    for (k, (lo, hi)) in acc.into_iter().zip(big).enumerate() {
        let total = match hi {
            None => lo,
            Some(h) => (h + BigUint::from(lo)).to_u128().unwrap_or(u128::MAX),
        };
        let v = u64::try_from(total).map_err(|_| Error::CoefficientOverflow {
            index: k,
            value: total,
            bits: 64,
        })?;
        out.push(v);
    }
    Ok(CoeffTable::from_values(out))
}
