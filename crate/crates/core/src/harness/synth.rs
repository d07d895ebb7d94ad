use std::collections::BTreeSet;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{SceneObject, SceneSpec};
use super::shapes::Shape;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::raster::{rasterize_depth, render_scene, SceneRender};
use crate::solver::InstanceObservation;
use crate::transform::{apply_transform, AnchoredSimilarityTransform};

/// Rejection-sampling budget for a whole scene.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Every object must keep at least this fraction of the image visible.
pub const MIN_COVERAGE: f64 = 0.01;
pub const SCALE_RANGE: (f64, f64) = (0.5, 3.0);
/// Apparent bounding-sphere radius as a fraction of the smaller image side.
const APPARENT_RADIUS: (f64, f64) = (0.09, 0.16);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub object_count: usize,
    pub fov_degrees_range: (f64, f64),
    pub shape_library: BTreeSet<Shape>,
    /// Largest fraction of any object's silhouette that others may hide.
    pub occlusion_target: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            object_count: 3,
            fov_degrees_range: (20.0, 60.0),
            shape_library: Shape::ALL.into_iter().collect(),
            occlusion_target: 0.0,
            width: 512,
            height: 512,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.fov_degrees_range;
        if !(lo > 0.0 && lo <= hi && hi < 180.0) {
            return Err(Error::InvalidConfig(format!("fov range ({lo}, {hi}) must lie in (0, 180)")));
        }
        if self.object_count == 0 {
            return Err(Error::InvalidConfig("object_count must be ≥ 1".into()));
        }
        if self.shape_library.is_empty() {
            return Err(Error::InvalidConfig("shape library is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_target) {
            return Err(Error::InvalidConfig(format!("occlusion target {} outside [0, 1]", self.occlusion_target)));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidConfig("image must be at least 16×16".into()));
        }
        Ok(())
    }
}

/// A generated scene plus the composite render it was observed from.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub scene: SceneSpec,
    pub render: SceneRender,
    /// Pixel count of each object rendered alone.
    pub solo_pixel_counts: Vec<usize>,
    pub fov_degrees: f64,
}

struct Placed {
    mesh: TriangleMesh,
    center: Vector3<f64>,
    radius: f64,
    solo: usize,
}

/// Uniform rotation from three uniform numbers (Shoemake).
fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

fn touches_border(depth: &crate::raster::DepthMap) -> bool {
    match depth.coverage().pixel_bounds() {
        None => true,
        Some((x0, y0, x1, y1)) => x0 == 0 || y0 == 0 || x1 + 1 >= depth.width() || y1 + 1 >= depth.height(),
    }
}

pub fn synth_scene(config: &SynthConfig) -> Result<SyntheticScene> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.fov_degrees_range;
    let fov_degrees = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let camera = PinholeCamera::from_fov(fov_degrees, config.width, config.height)?;
    let library: Vec<Shape> = config.shape_library.iter().copied().collect();
    let min_pixels = (MIN_COVERAGE * camera.pixel_count() as f64).ceil() as usize;
    let short_side = f64::from(config.width.min(config.height));

    let mut placed: Vec<Placed> = Vec::new();
    let mut objects = Vec::new();
    let mut attempts = 0;
    for index in 0..config.object_count {
        let shape = library[rng.gen_range(0..library.len())];
        let model = shape.mesh();
        let means = model.means();
        let model_radius = model.radius_about(&means);
        loop {
            attempts += 1;
            if attempts > MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::PlacementFailed {
                    object: index,
                    attempts: MAX_PLACEMENT_ATTEMPTS,
                });
            }
            let scale = rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1);
            let rotation = random_rotation(&mut rng).to_rotation_matrix().into_inner();
            let apparent = rng.gen_range(APPARENT_RADIUS.0..APPARENT_RADIUS.1) * short_side;
            let u = rng.gen_range(apparent..f64::from(config.width) - apparent);
            let v = rng.gen_range(apparent..f64::from(config.height) - apparent);
            let radius = scale * model_radius;
            let center = camera.unproject(u, v, camera.fx * radius / apparent);
            if placed.iter().any(|p| (p.center - center).norm() <= p.radius + radius) {
                continue;
            }
            let gt = AnchoredSimilarityTransform::new(means, center - means, scale, rotation)?;
            let mesh = apply_transform(&model, &gt);
            let solo = rasterize_depth(&mesh, &camera);
            let solo_count = solo.covered_count();
            if solo_count < min_pixels || touches_border(&solo) {
                continue;
            }
            let mut meshes: Vec<&TriangleMesh> = placed.iter().map(|p| &p.mesh).collect();
            meshes.push(&mesh);
            let composite = render_scene(&meshes, &camera);
            let solos = placed.iter().map(|p| p.solo).chain([solo_count]);
            let acceptable = solos.enumerate().all(|(j, solo)| {
                let visible = composite.mask_of(j as u32).count();
                visible >= min_pixels && visible as f64 >= (1.0 - config.occlusion_target) * solo as f64
            });
            if !acceptable {
                continue;
            }
            objects.push((shape, model, gt));
            placed.push(Placed {
                mesh,
                center,
                radius,
                solo: solo_count,
            });
            break;
        }
    }

    let meshes: Vec<&TriangleMesh> = placed.iter().map(|p| &p.mesh).collect();
    let render = render_scene(&meshes, &camera);
    let mut scene_objects = Vec::with_capacity(objects.len());
    for (i, (shape, model, gt)) in objects.into_iter().enumerate() {
        let mask = render.mask_of(i as u32);
        let visible = render.depth.masked(&mask)?;
        let mean_depth = crate::raster::mean_visible_depth(&visible)?;
        let id = format!("{i:02}_{}", shape.label());
        scene_objects.push(SceneObject {
            mesh_path: format!("meshes/{id}.obj"),
            mask_path: Some(format!("masks/{id}.pgm")),
            label: shape.label().to_string(),
            id,
            mesh: model,
            observation: InstanceObservation::new(mask.center_bbox()?, mean_depth, Some(mask))?,
            gt_transform: Some(gt),
        });
    }
    Ok(SyntheticScene {
        scene: SceneSpec {
            camera,
            objects: scene_objects,
            depth: Some(render.depth.clone()),
            normals: Some(render.normals.clone()),
        },
        solo_pixel_counts: placed.iter().map(|p| p.solo).collect(),
        render,
        fov_degrees,
    })
}
