//! The coloured partition of `U_1` into blue and red cells, its inducing
//! time, the approximating map and the induced map at superattracting
//! parameters.

pub mod classify;
pub mod hat;
pub mod induced;
pub mod scheme;

pub use classify::{classify_point, ClassifyCaps, Color, InducingCell, Scheme};
pub use hat::{agreement_constant, red_affine, Agreement, HatMap};
pub use induced::{basin_entry_fraction, induced_time, superattracting_induced_tail, InducedTail};
pub use scheme::{scheme_report, scheme_table, SchemeReport};
