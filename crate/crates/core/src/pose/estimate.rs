use std::f64::consts::PI;

use nalgebra::Matrix3;
use rayon::prelude::*;

use super::grid::RotationGrid;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::raster::{check_dims, mean_visible_depth, DepthMap, NormalMap};
use crate::solver::{refine_rendered, InstanceObservation, SolveOptions, Start};
use crate::transform::AnchoredSimilarityTransform;

/// Weight of silhouette overlap against angular error.
pub const COVERAGE_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationScore {
    pub index: usize,
    /// Mean angle between normals over jointly covered pixels, radians.
    pub normal_error: f64,
    /// IoU of the two covered pixel sets.
    pub coverage: f64,
}

impl RotationScore {
    pub fn score(&self) -> f64 {
        self.normal_error - COVERAGE_WEIGHT * self.coverage
    }
}

/// Mean angular error and coverage IoU of two normal maps. With no jointly
/// covered pixel the error is π and coverage 0.
pub fn normal_angular_error(a: &NormalMap, b: &NormalMap) -> Result<(f64, f64)> {
    check_dims(a.width(), a.height(), b.width(), b.height())?;
    let (mut sum, mut both, mut either) = (0.0, 0usize, 0usize);
    for (i, (na, nb)) in a.values().iter().zip(b.values()).enumerate() {
        match (a.is_covered(i), b.is_covered(i)) {
            (true, true) => {
                sum += na.dot(nb).clamp(-1.0, 1.0).acos();
                both += 1;
                either += 1;
            }
            (false, false) => {}
            _ => either += 1,
        }
    }
    if both == 0 {
        return Ok((PI, 0.0));
    }
    Ok((sum / both as f64, both as f64 / either as f64))
}

/// Everything an estimator gets for one object.
#[derive(Debug, Clone, Copy)]
pub struct PoseRequest<'a> {
    pub id: &'a str,
    /// Model-space mesh.
    pub mesh: &'a TriangleMesh,
    pub camera: &'a PinholeCamera,
    pub target_normals: &'a NormalMap,
    pub target_depth: &'a DepthMap,
    /// Scale and translation found before rotation is known.
    pub initial: &'a AnchoredSimilarityTransform,
}

/// Source of an object rotation about its mesh means.
pub trait RotationEstimator: Sync {
    fn estimate(&self, request: &PoseRequest<'_>) -> Result<Matrix3<f64>>;
}

/// Exhaustive render-and-compare over a [`RotationGrid`].
#[derive(Debug, Clone, Default)]
pub struct GridEstimator {
    pub grid: RotationGrid,
}

impl RotationEstimator for GridEstimator {
    fn estimate(&self, r: &PoseRequest<'_>) -> Result<Matrix3<f64>> {
        estimate_rotation(r.mesh, r.camera, r.target_normals, r.target_depth, r.initial, &self.grid)
            .map(|(rotation, _)| rotation)
    }
}

/// Scores one hypothesis: a single scale/translation step with the rotation
/// swapped in, then normal comparison against the target.
pub fn score_hypothesis(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
    target_normals: &NormalMap,
    obs: &InstanceObservation,
    initial: &AnchoredSimilarityTransform,
    index: usize,
    rotation: &Matrix3<f64>,
) -> RotationScore {
    let options = SolveOptions {
        max_iters: 1,
        start: Start::Transform(*initial),
        ..SolveOptions::default()
    };
    let (normal_error, coverage) = refine_rendered(mesh, rotation, camera, obs, &options)
        .and_then(|(_, (_, normals))| normal_angular_error(&normals, target_normals))
        .unwrap_or((PI, 0.0));
    RotationScore {
        index,
        normal_error,
        coverage,
    }
}

/// Lowest score wins; exact ties go to the lowest index.
pub fn argmin(scores: &[RotationScore]) -> Option<RotationScore> {
    scores.iter().copied().fold(None, |best, s| match best {
        Some(b) if b.score() <= s.score() => Some(b),
        _ => Some(s),
    })
}

/// Render-and-compare rotation search. Hypotheses are scored in parallel;
/// the reduction is sequential, so the answer does not depend on thread
/// count.
pub fn estimate_rotation(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
    target_normals: &NormalMap,
    target_depth: &DepthMap,
    initial: &AnchoredSimilarityTransform,
    grid: &RotationGrid,
) -> Result<(Matrix3<f64>, RotationScore)> {
    check_dims(camera.width, camera.height, target_depth.width(), target_depth.height())?;
    check_dims(camera.width, camera.height, target_normals.width(), target_normals.height())?;
    if target_depth.is_empty() {
        return Err(Error::EmptyObservation);
    }
    let coverage = target_depth.coverage();
    let obs = InstanceObservation::new(coverage.center_bbox()?, mean_visible_depth(target_depth)?, Some(coverage))?;
    let scores: Vec<RotationScore> = grid
        .rotations
        .par_iter()
        .enumerate()
        .map(|(i, r)| score_hypothesis(mesh, camera, target_normals, &obs, initial, i, r))
        .collect();
    let best = argmin(&scores).ok_or_else(|| Error::InvalidConfig("empty rotation grid".into()))?;
    Ok((grid.rotations[best.index], best))
}
