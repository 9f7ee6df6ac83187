//! Induced maps with full branches, their Young towers, and empirical checks
//! of the concentration and maximal-moment bounds.

pub mod contract;
pub mod handle;
pub mod moments;
pub mod orbit;
pub mod spec;

pub use contract::{contract_report, verify_induced_contract, ConditionCheck, ContractReport};
pub use handle::{level_mass_table, LevelMass, SemiConjugacy, TowerHandle, TowerOrbit, TowerPoint};
pub use moments::{
    dyadic_grid, maximal_moment_check, maximal_moment_sweep, tau_concentration, tau_concentration_sweep, FullMap,
    MomentReport, MuYSampling,
};
pub use orbit::{InducedOrbit, InducedStep};
pub use spec::{BaseMap, BaseStepper, BranchMap, InducedCell, InducedMapSpec, Realization};
