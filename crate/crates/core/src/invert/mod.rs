//! Recovery of the intensity and of mean shape information from observed
//! densities.

pub mod euler4;
pub mod family;
pub mod milesdavy;
pub mod minkowski;
pub mod nnls;
pub mod recover;

pub use euler4::{euler4_check, Euler4Check};
pub use family::{FamilyMember, Role, TestBodyFamily};
pub use milesdavy::{milesdavy_forward, milesdavy_invert};
pub use minkowski::minkowski_solve;
pub use recover::{
    fit_area_measure, recover_2d, recover_2d_with, recover_3d, recover_3d_with, recover_area_measure, AreaFit,
    InversionSettings, RecoveredModel, SupportSample,
};
