use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::{SceneObject, SceneSpec};
use crate::error::{Error, Result};
use crate::pose::{estimate_rotation, ExternalPoseAdapter, PoseRequest, RotationEstimator, RotationGrid};
use crate::solver::{initial_placement, refine_after_rotation, solve_scale_translation, SolveOptions, SolveReport, Start};
use crate::transform::AnchoredSimilarityTransform;

/// Where the rotation between the two solves comes from.
#[derive(Debug, Clone)]
pub enum RotationSource {
    /// Keep the identity.
    None,
    /// Use each object's ground-truth rotation.
    GroundTruth,
    Grid(RotationGrid),
    External(ExternalPoseAdapter),
}

impl RotationSource {
    fn name(&self) -> &'static str {
        match self {
            RotationSource::None => "none",
            RotationSource::GroundTruth => "ground_truth",
            RotationSource::Grid(_) => "grid",
            RotationSource::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub iters: usize,
    pub rotation: RotationSource,
    /// Hold the scale at 1 and solve translation only.
    pub fix_scale: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            iters: 4,
            rotation: RotationSource::Grid(RotationGrid::default()),
            fix_scale: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&SolveReport> for StageDiagnostics {
    fn from(r: &SolveReport) -> Self {
        Self {
            residuals: r.residual_history.clone(),
            iterations: r.iterations_run,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub id: String,
    #[serde(default)]
    pub transform: Option<AnchoredSimilarityTransform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_solve: Option<StageDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<StageDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosesFile {
    pub iters: usize,
    pub rotation: String,
    pub fix_scale: bool,
    pub objects: Vec<ObjectPose>,
}

impl PosesFile {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn get(&self, id: &str) -> Option<&ObjectPose> {
        self.objects.iter().find(|o| o.id == id)
    }
}

struct Solved {
    transform: AnchoredSimilarityTransform,
    scale_solve: SolveReport,
    refine: SolveReport,
}

fn rotation_for(
    scene: &SceneSpec,
    object: &SceneObject,
    initial: &AnchoredSimilarityTransform,
    source: &RotationSource,
) -> Result<Matrix3<f64>> {
    let maps = || -> Result<_> {
        let (Some(depth), Some(normals)) = (&scene.depth, &scene.normals) else {
            return Err(Error::InvalidConfig("rotation search needs the scene depth and normal maps".into()));
        };
        let mask = object.observation.mask.as_ref().ok_or(Error::EmptyMask)?;
        Ok((depth.masked(mask)?, normals.masked(mask)?))
    };
    match source {
        RotationSource::None => Ok(Matrix3::identity()),
        RotationSource::GroundTruth => object
            .gt_transform
            .map(|t| t.rotation)
            .ok_or_else(|| Error::InvalidConfig(format!("object {} has no ground truth", object.id))),
        RotationSource::Grid(grid) => {
            let (depth, normals) = maps()?;
            estimate_rotation(&object.mesh, &scene.camera, &normals, &depth, initial, grid).map(|(r, _)| r)
        }
        RotationSource::External(adapter) => {
            let (depth, normals) = maps()?;
            adapter.estimate(&PoseRequest {
                id: &object.id,
                mesh: &object.mesh,
                camera: &scene.camera,
                target_normals: &normals,
                target_depth: &depth,
                initial,
            })
        }
    }
}

/// Scale and translation, then rotation, then a second scale and
/// translation solve with the rotation fixed.
fn solve_object(scene: &SceneSpec, object: &SceneObject, options: &PipelineOptions) -> Result<Solved> {
    let camera = &scene.camera;
    let obs = &object.observation;
    let start = if options.fix_scale {
        let mut t = initial_placement(&object.mesh, camera, obs, Matrix3::identity())?;
        t.scale = 1.0;
        Start::Transform(t)
    } else {
        Start::Normalized
    };
    let first = SolveOptions {
        max_iters: options.iters,
        start,
        fix_scale: options.fix_scale,
        ..SolveOptions::default()
    };
    let scale_solve = solve_scale_translation(&object.mesh, camera, obs, &first)?;
    let rotation = rotation_for(scene, object, &scale_solve.transform, &options.rotation)?;
    let second = SolveOptions {
        start: Start::Transform(scale_solve.transform),
        ..first
    };
    let refine = refine_after_rotation(&object.mesh, &rotation, camera, obs, &second)?;
    Ok(Solved {
        transform: refine.transform,
        scale_solve,
        refine,
    })
}

/// Solves every object independently. A failing object is recorded with its
/// error and does not stop the others. Output order follows the scene.
pub fn run_pipeline(scene: &SceneSpec, options: &PipelineOptions) -> Result<PosesFile> {
    if options.iters == 0 {
        return Err(Error::InvalidConfig("iters must be ≥ 1".into()));
    }
    let objects = scene
        .objects
        .par_iter()
        .map(|o| match solve_object(scene, o, options) {
            Ok(s) => ObjectPose {
                id: o.id.clone(),
                transform: Some(s.transform),
                error: None,
                scale_solve: Some((&s.scale_solve).into()),
                refine: Some((&s.refine).into()),
            },
            Err(e) => ObjectPose {
                id: o.id.clone(),
                transform: None,
                error: Some(e.to_string()),
                scale_solve: None,
                refine: None,
            },
        })
        .collect();
    Ok(PosesFile {
        iters: options.iters,
        rotation: options.rotation.name().to_string(),
        fix_scale: options.fix_scale,
        objects,
    })
}
