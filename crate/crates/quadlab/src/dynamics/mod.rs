//! Parametrised unimodal families, orbits and derivative cocycles.

pub mod family;
pub mod orbit;
pub mod pullback;
pub mod transversality;

pub use family::{CustomFamily, Evaluation, FamilyKind, Stepper, UnimodalFamily};
pub use orbit::{critical_value_derivatives, iterate_orbit, OrbitEvents, OrbitTrace};
pub use transversality::{transversality_sum, TransversalityReport};
