//! Scale and translation solving from a box and a mean depth.

mod iterate;
pub(crate) use iterate::refine_rendered;
pub mod lsq;
mod system;

pub use iterate::{
    initial_placement, refine_after_rotation, solve_scale_translation, InstanceObservation, SolveOptions,
    SolveReport, Start,
};
pub use system::{build_system, solve_step, solve_translation_step, LayoutLinearSystem, Matrix5x4, Step, Vector5};
