//! First return maps to the small interval `U_1`: return times, branch
//! tables, the central branch at superattracting parameters, Koebe
//! distortion audits and escape sets.

pub mod branches;
pub mod central;
pub mod escape;
pub mod first_return;

pub use branches::{
    delta_for_ceiling, discover_branches, discover_branches_with, distortion_audit, koebe_ceiling, BranchSearch,
    BranchTable, DistortionAudit, ReturnBranch,
};
pub use central::{central_geometry, phi_dd, CentralGeometry};
pub use escape::{escape_curve, escape_set_measure, escape_table, EscapeRow};
pub use first_return::{first_entry_time, first_return_time, return_path, ReturnPath};
