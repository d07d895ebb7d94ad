//! Synthetic scenes with known poses, the end-to-end driver and scoring.

mod evaluate;
mod pipeline;
mod scene;
pub mod shapes;
mod synth;

pub use evaluate::{evaluate, EvalOptions, EvalReport, ObjectMetrics, SceneMetrics};
pub use pipeline::{run_pipeline, ObjectPose, PipelineOptions, PosesFile, RotationSource, StageDiagnostics};
pub use scene::{SceneObject, SceneSpec, SCENE_DEPTH_FILE, SCENE_NORMALS_FILE};
pub use synth::{synth_scene, SynthConfig, SyntheticScene, MAX_PLACEMENT_ATTEMPTS, MIN_COVERAGE, SCALE_RANGE};
