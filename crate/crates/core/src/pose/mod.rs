//! Rotation estimation: a render-and-compare grid search on normal maps and
//! a file-based adapter for external estimators.

mod estimate;
mod external;
mod grid;

pub use estimate::{
    argmin, estimate_rotation, normal_angular_error, score_hypothesis, GridEstimator, PoseRequest,
    RotationEstimator, RotationScore, COVERAGE_WEIGHT,
};
pub use external::ExternalPoseAdapter;
pub use grid::{axis_angle, RotationGrid};
