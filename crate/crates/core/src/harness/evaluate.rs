use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::PosesFile;
use super::scene::SceneSpec;
use crate::error::{Error, Result};
use crate::metrics::{
    align_rigid, chamfer_with, fscore, sample_points, volume_iou, Aabb3, ChamferConvention, PointSet, RigidTransform,
    SceneNormalization, DEFAULT_SAMPLES, DEFAULT_TAU,
};
use crate::transform::{rotation_rows, AnchoredSimilarityTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tau: f64,
    pub samples: usize,
    pub seed: u64,
    pub convention: ChamferConvention,
    /// Rigidly align the predicted scene onto the ground truth first.
    pub align: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            convention: ChamferConvention::MeanL2,
            align: true,
        }
    }
}

/// Scene-level scores plus means of the per-object scores. Distances are
/// percentages of the normalized scene frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub cd: f64,
    pub fscore: f64,
    pub cd_o: f64,
    pub fscore_o: f64,
    pub iou_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMetrics {
    pub id: String,
    pub cd: f64,
    pub fscore: f64,
    pub iou_b: f64,
    /// No usable prediction; scored as the worst case.
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub center: [f64; 3],
    pub scale: f64,
    pub alignment_rotation: [[f64; 3]; 3],
    pub alignment_translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub chamfer: ChamferConvention,
    pub percent: bool,
    pub tau: f64,
    pub samples: usize,
    pub seed: u64,
    pub frame: String,
    pub alignment: String,
    pub missing_objects: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scene: SceneMetrics,
    pub objects: Vec<ObjectMetrics>,
    pub normalization: Normalization,
    pub conventions: Conventions,
}

impl EvalReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    v.sum::<f64>() / n as f64
}

/// Scores predicted poses against the ground truth stored in `scene`.
///
/// Each object's surface is sampled once in model space; the same samples go
/// through the predicted and ground-truth transforms. The predicted scene is
/// then aligned rigidly onto the ground truth, both are normalized into the
/// ground-truth unit cube, and the metrics are computed there.
pub fn evaluate(pred: &PosesFile, scene: &SceneSpec, options: &EvalOptions) -> Result<EvalReport> {
    if !(options.tau > 0.0) || options.samples == 0 {
        return Err(Error::InvalidConfig(format!("tau {} and samples {} must be positive", options.tau, options.samples)));
    }
    for p in &pred.objects {
        if scene.object(&p.id).is_none() {
            return Err(Error::InvalidConfig(format!("predicted object {:?} is not in the scene", p.id)));
        }
    }
    let gt: Vec<AnchoredSimilarityTransform> = scene
        .objects
        .iter()
        .map(|o| o.gt_transform.ok_or_else(|| Error::InvalidConfig(format!("object {} has no ground truth", o.id))))
        .collect::<Result<_>>()?;
    let predicted: Vec<Option<AnchoredSimilarityTransform>> = scene
        .objects
        .iter()
        .map(|o| pred.get(&o.id).and_then(|p| p.transform))
        .collect();

    let samples: Vec<PointSet> = scene
        .objects
        .par_iter()
        .enumerate()
        .map(|(i, o)| sample_points(&o.mesh, options.samples, options.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let gt_sets: Vec<PointSet> = samples.iter().zip(&gt).map(|(s, t)| s.map(|p| t.apply_point(p))).collect();
    let pred_sets: Vec<Option<PointSet>> = samples
        .iter()
        .zip(&predicted)
        .map(|(s, t)| t.map(|t| s.map(|p| t.apply_point(p))))
        .collect();

    let gt_union = PointSet::union(&gt_sets)?;
    let present: Vec<&PointSet> = pred_sets.iter().flatten().collect();
    let pred_union = if present.is_empty() { None } else { Some(PointSet::union(present)?) };
    let alignment = match (&pred_union, options.align) {
        (Some(u), true) => align_rigid(u, &gt_union, None)?,
        _ => RigidTransform::identity(),
    };
    let norm = SceneNormalization::fit(&gt_union)?;
    let place = |p: &nalgebra::Vector3<f64>| norm.apply(&alignment.apply(p));
    let gt_norm: Vec<PointSet> = gt_sets.iter().map(|s| norm.apply_set(s)).collect();
    let gt_union_norm = norm.apply_set(&gt_union);
    let worst_cd = 100.0 * Aabb3::from_points(gt_union_norm.points()).diagonal();

    let objects: Vec<ObjectMetrics> = scene
        .objects
        .par_iter()
        .enumerate()
        .map(|(i, o)| match (&pred_sets[i], predicted[i]) {
            (Some(set), Some(t)) => {
                let p = set.map(place);
                let pred_box = Aabb3::from_points(&o.mesh.vertices().iter().map(|v| place(&t.apply_point(v))).collect::<Vec<_>>());
                let gt_box = Aabb3::from_points(&o.mesh.vertices().iter().map(|v| norm.apply(&gt[i].apply_point(v))).collect::<Vec<_>>());
                ObjectMetrics {
                    id: o.id.clone(),
                    cd: 100.0 * chamfer_with(&p, &gt_norm[i], options.convention),
                    fscore: fscore(&p, &gt_norm[i], options.tau),
                    iou_b: volume_iou(&pred_box, &gt_box),
                    missing: false,
                }
            }
            _ => ObjectMetrics {
                id: o.id.clone(),
                cd: worst_cd,
                fscore: 0.0,
                iou_b: 0.0,
                missing: true,
            },
        })
        .collect();

    let (cd, fs) = match &pred_union {
        Some(u) => {
            let p = u.map(place);
            (100.0 * chamfer_with(&p, &gt_union_norm, options.convention), fscore(&p, &gt_union_norm, options.tau))
        }
        None => (worst_cd, 0.0),
    };
    Ok(EvalReport {
        scene: SceneMetrics {
            cd,
            fscore: fs,
            cd_o: mean(objects.iter().map(|o| o.cd)),
            fscore_o: mean(objects.iter().map(|o| o.fscore)),
            iou_b: mean(objects.iter().map(|o| o.iou_b)),
        },
        objects,
        normalization: Normalization {
            center: norm.center,
            scale: norm.scale,
            alignment_rotation: rotation_rows(&alignment.rotation),
            alignment_translation: alignment.translation.into(),
        },
        conventions: Conventions {
            chamfer: options.convention,
            percent: true,
            tau: options.tau,
            samples: options.samples,
            seed: options.seed,
            frame: "ground-truth scene box centered, longest side 1".into(),
            alignment: if options.align { "rigid nearest-neighbour refinement from identity" } else { "none" }.into(),
            missing_objects: "cd = scene diagonal, fscore = 0, iou_b = 0".into(),
        },
    })
}
