//! Numerical laboratory for superattracting parameters near a Misiurewicz
//! quadratic map: parameter cascades, first-return maps, inducing schemes,
//! Birkhoff statistics and Young-tower diagnostics.
//!
//! The guide in `book/` walks through each layer with runnable examples.

pub mod dd;
pub mod dynamics;
pub mod error;
pub mod inducing;
pub mod interval;
pub mod params;
pub mod returns;
pub mod rng;
pub mod stats;
pub mod table;
pub mod tower;

pub use dd::Dd;
pub use dynamics::UnimodalFamily;
pub use error::{LabError, Result};
pub use interval::Interval;
pub use stats::McEstimate;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/base-map.md")]
    mod base_map {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/return-maps.md")]
    mod return_maps {}
    #[doc = include_str!("../../../book/src/inducing.md")]
    mod inducing {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/towers.md")]
    mod towers {}
}
