use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the tabulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient {value} at index {index} does not fit in {bits} bits")]
    CoefficientOverflow { index: usize, value: u128, bits: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transform length 2^{requested} exceeds the 2^{supported} supported by prime {prime}")]
    TransformTooLong {
        prime: u64,
        requested: u32,
        supported: u32,
    },

    #[error("CRT capacity of {capacity_bits:.1} bits cannot hold {needed_bits}-bit coefficients")]
    CrtCapacity { needed_bits: u64, capacity_bits: f64 },

    #[error("discriminant bound {0} exceeds 2^40, where the divisor-sum constant is certified")]
    BoundTooLarge(u64),

    #[error("no product formula exists for discriminants congruent to 1 mod 8")]
    NoFormula,

    #[error("table value {value} for |disc| = {abs_disc} is not divisible by {divisor}")]
    InexactDivision {
        abs_disc: u64,
        value: u64,
        divisor: u64,
    },

    #[error("invalid quadratic form ({a}, {b}, {c}): {reason}")]
    InvalidForm {
        a: i64,
        b: i64,
        c: i64,
        reason: &'static str,
    },

    #[error("discriminants differ: {0} vs {1}")]
    DiscriminantMismatch(i64, i64),

    #[error("arithmetic overflow in form arithmetic for discriminant {0}")]
    FormOverflow(i64),

    #[error("class number {h} too large to enumerate (limit {limit})")]
    GroupTooLarge { h: u64, limit: u64 },

    #[error("sylow {p}-subgroup of discriminant -{abs_disc} exceeded order {p}^{e}")]
    SylowOverflow { abs_disc: u64, p: u64, e: u32 },

    #[error("could not generate the {p}-sylow subgroup of discriminant -{abs_disc} within the sampling budget")]
    SamplingExhausted { abs_disc: u64, p: u64 },

    #[error("2-rank {found} of discriminant -{abs_disc} contradicts genus theory ({expected})")]
    GenusMismatch {
        abs_disc: u64,
        found: usize,
        expected: usize,
    },

    #[error("missing class number for fundamental discriminant -{0}")]
    MissingRecord(u64),

    #[error("hurwitz table does not cover n = {0}")]
    TableGap(u64),

    #[error("truncated chunk file {path}: expected {expected} bytes, found {found}")]
    TruncatedChunk {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(PathBuf),

    #[error("malformed table file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
