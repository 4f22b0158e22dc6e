//! Simulation of Boolean models in a window and estimation of their
//! densities.

pub mod estimate;
pub mod exposed;
pub mod forward;
pub mod model;
pub mod realization;
pub mod table;
pub mod union;

pub use estimate::{estimate_densities, EstimatorSettings, TestBody};
pub use exposed::exposed_boundary_measure;
pub use forward::{forward_densities, mixed_functional};
pub use model::{GrainModel, RotationLaw, ScalingLaw};
pub use realization::{sample_realization, Realization, Window};
pub use table::{DensityRow, DensityTable};
pub use union::{union_euler, visit_intersections, Cell};
