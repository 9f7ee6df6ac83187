//! Misiurewicz certification, parameter scales, superattracting parameters,
//! continuation of preperiodic points and returning interval pairs.

pub mod certify;
pub mod continuation;
pub mod gamma;
pub mod returning;
pub mod superattracting;

pub use certify::{certify_misiurewicz, MisiurewiczCertificate};
pub use continuation::{continue_preperiodic, ContinuedPoint, PreperiodicPoint};
pub use gamma::{critical_value_distortion, critical_values_dd, gamma_scale, gamma_sequence};
pub use returning::{build_returning_pair, ReturningIntervalPair};
pub use superattracting::{
    critical_iterate_dd, find_superattracting, find_superattracting_with, preimage_horizon, PreimageHorizon,
    SearchConfig, SuperattractingParameter,
};
