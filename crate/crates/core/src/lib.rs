//! Class numbers and class-group structures of imaginary quadratic fields,
//! tabulated from products of theta series.

pub mod arith;
pub mod bigmul;
pub mod classnum;
pub mod coeffs;
pub mod error;
pub mod group;
pub mod pipeline;
pub mod qform;
pub mod series;
pub mod stats;
pub mod tablefile;
pub mod trace;

pub use coeffs::{CoeffTable, Width};
pub use error::{Error, Result};
pub use series::SeriesKind;
