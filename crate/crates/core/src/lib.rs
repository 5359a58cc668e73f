//! Exact and Monte Carlo evaluation of real-part/trace expressions in
//! products of symplectically invariant quaternionic random matrices.

/// Pick the data-parallel expression when the `rayon` feature is on and the
/// sequential one otherwise.
#[macro_export]
macro_rules! if_rayon {
    ($par:expr, $seq:expr) => {{
        #[cfg(feature = "rayon")]
        let out = $par;
        #[cfg(not(feature = "rayon"))]
        let out = $seq;
        out
    }};
}

pub mod bracket;
pub mod contraction;
pub mod dsl;
pub mod ensemble;
pub mod error;
pub mod expansion;
pub mod oracle;
pub mod perm;
pub mod poly;
pub mod quaternion;
pub mod sample;
pub mod weingarten;

pub use error::{Error, Result};
