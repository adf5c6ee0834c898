//! Screw-invariant fractional Allen-Cahn solutions and nonlocal mean curvature of helicoids.

// Negated comparisons reject NaN along with out-of-range values; index loops
// walk several arrays laid out on the same grid.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod helicoid3d;
pub mod nmc;
pub mod numerics;
pub mod optimize;
pub mod potential;
pub mod specfun;
pub mod spectral1d;
pub mod strip1d;

pub use error::{Error, Result};

/// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    mod profiles {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/strip.md")]
    mod strip {}
    #[doc = include_str!("../../../book/src/cylinder.md")]
    mod cylinder {}
    #[doc = include_str!("../../../book/src/nmc.md")]
    mod nmc {}
    #[doc = include_str!("../../../book/src/perimeter.md")]
    mod perimeter {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
