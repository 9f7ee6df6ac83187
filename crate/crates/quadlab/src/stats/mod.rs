//! Observables, Monte Carlo estimators, reference means and the Birkhoff
//! experiments.

pub mod birkhoff;
pub mod estimate;
pub mod experiments;
pub mod fit;
pub mod observable;
pub mod quadrature;
pub mod reference;

pub use birkhoff::{birkhoff_deviation, birkhoff_deviation_sweep, birkhoff_samples, mean_birkhoff, mean_birkhoff_sweep};
pub use estimate::McEstimate;
pub use fit::{linear_fit, power_law_exponent, LinearFit};
pub use observable::{Bump, Observable};
pub use reference::{reference_mean, ReferenceMean, ReferenceMethod};
pub use experiments::{
    breakdown_experiment, default_reference, persistence_experiment, superattracting_setup, BreakdownConfig,
    BreakdownReport, BreakdownRow, PersistenceConfig, PersistenceReport, PersistenceRow, SuperattractingSetup,
};
