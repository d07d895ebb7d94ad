use nalgebra::{Matrix3, Vector3};

use super::system::{build_system, solve_step, solve_translation_step};
use crate::bbox::BBox2D;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::raster::{extremals_from_depth, rasterize_depth, render, DepthMap, Mask, NormalMap};
use crate::transform::{apply_transform, validate_rotation, AnchoredSimilarityTransform};

/// 2D evidence for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceObservation {
    /// Target box in pixel coordinates (not centered).
    pub bbox: BBox2D,
    pub mean_depth: f64,
    pub mask: Option<Mask>,
}

impl InstanceObservation {
    pub fn new(bbox: BBox2D, mean_depth: f64, mask: Option<Mask>) -> Result<Self> {
        if !(mean_depth.is_finite() && mean_depth > 0.0) {
            return Err(Error::DegenerateObservation(format!(
                "mean depth {mean_depth} must be > 0"
            )));
        }
        Ok(Self {
            bbox,
            mean_depth,
            mask,
        })
    }
}

/// Where the iteration starts from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Start {
    /// The mesh is already in camera space.
    #[default]
    AsGiven,
    /// Unit bounding-sphere radius, means at depth `d̃` on the ray through
    /// the target box center.
    Normalized,
    /// Scale and translation from this transform. Rotation is taken from the
    /// caller.
    Transform(AnchoredSimilarityTransform),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub start: Start,
    /// Hold the scale at 1 and solve translation only.
    pub fix_scale: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 4,
            tol: 1e-4,
            start: Start::AsGiven,
            fix_scale: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub transform: AnchoredSimilarityTransform,
    pub residual_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Unit bounding-sphere radius, means placed at depth `d̃` on the ray
/// through the box center.
pub fn initial_placement(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
    obs: &InstanceObservation,
    rotation: Matrix3<f64>,
) -> Result<AnchoredSimilarityTransform> {
    let means = mesh.means();
    let radius = mesh.radius_about(&means);
    if !(radius > 0.0) {
        return Err(Error::DegenerateMesh("all vertices coincide".into()));
    }
    let (u, v) = obs.bbox.center();
    let target = camera.unproject(u, v, obs.mean_depth);
    AnchoredSimilarityTransform::new(means, target - means, 1.0 / radius, rotation)
}

/// Re-expresses `t` anchored at `anchor` with the same action on points.
fn reanchor(t: &AnchoredSimilarityTransform, anchor: Vector3<f64>) -> AnchoredSimilarityTransform {
    let translation = t.center + t.translation - anchor + t.scale * (t.rotation * (anchor - t.center));
    AnchoredSimilarityTransform {
        center: anchor,
        translation,
        ..*t
    }
}

fn starting_transform(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
    obs: &InstanceObservation,
    rotation: Matrix3<f64>,
    start: &Start,
) -> Result<AnchoredSimilarityTransform> {
    let means = mesh.means();
    match start {
        Start::AsGiven => AnchoredSimilarityTransform::new(means, Vector3::zeros(), 1.0, rotation),
        Start::Normalized => initial_placement(mesh, camera, obs, rotation),
        Start::Transform(t) => {
            let t = reanchor(t, means);
            AnchoredSimilarityTransform::new(means, t.translation, t.scale, rotation)
        }
    }
}

/// Iteratively solves for scale and translation with the identity rotation.
pub fn solve_scale_translation(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
    obs: &InstanceObservation,
    options: &SolveOptions,
) -> Result<SolveReport> {
    refine_after_rotation(mesh, &Matrix3::identity(), camera, obs, options)
}

/// Rotates the mesh about its means by `rotation`, then solves for scale
/// and translation. The returned transform carries the rotation.
pub fn refine_after_rotation(
    mesh: &TriangleMesh,
    rotation: &Matrix3<f64>,
    camera: &PinholeCamera,
    obs: &InstanceObservation,
    options: &SolveOptions,
) -> Result<SolveReport> {
    refine_rendered(mesh, rotation, camera, obs, options).map(|(report, _)| report)
}

/// As [`refine_after_rotation`], also returning the render of the final state.
pub(crate) fn refine_rendered(
    mesh: &TriangleMesh,
    rotation: &Matrix3<f64>,
    camera: &PinholeCamera,
    obs: &InstanceObservation,
    options: &SolveOptions,
) -> Result<(SolveReport, (DepthMap, NormalMap))> {
    validate_rotation(rotation)?;
    if options.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be ≥ 1".into()));
    }
    let bbox = obs.bbox.centered(camera);
    let mut current = starting_transform(mesh, camera, obs, *rotation, &options.start)?;
    let mut residual_history = Vec::with_capacity(options.max_iters);
    let mut converged = false;

    for iteration in 0..options.max_iters {
        let placed = apply_transform(mesh, &current);
        let depth = rasterize_depth(&placed, camera);
        if depth.is_empty() {
            return Err(if iteration == 0 {
                Error::EmptyVisibility
            } else {
                Error::Diverged { iteration }
            });
        }
        let extremals = extremals_from_depth(&depth, camera)?;
        let system = build_system(
            &extremals,
            &current.placed_center(),
            &bbox,
            obs.mean_depth,
            &depth,
            camera,
        )?;
        let step = if options.fix_scale {
            solve_translation_step(&system)?
        } else {
            solve_step(&system)?
        };
        current = current.then_step(&step.translation, step.scale);
        residual_history.push(step.residual);
        if step.translation.norm() < options.tol * obs.mean_depth && (step.scale - 1.0).abs() < options.tol {
            converged = true;
            break;
        }
    }

    let iterations_run = residual_history.len();
    let last = render(&apply_transform(mesh, &current), camera);
    if last.0.is_empty() {
        return Err(Error::Diverged {
            iteration: iterations_run,
        });
    }
    let report = SolveReport {
        transform: current,
        residual_history,
        iterations_run,
        converged,
    };
    Ok((report, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::shapes;
    use crate::pose::axis_angle;
    use crate::raster::mean_visible_depth;
    use crate::raster::tests::{centered, sphere_at, square};

    /// Observation read back from a render of `mesh` under `t`.
    fn observe(mesh: &TriangleMesh, t: &AnchoredSimilarityTransform, cam: &PinholeCamera) -> InstanceObservation {
        let d = rasterize_depth(&apply_transform(mesh, t), cam);
        let mask = d.coverage();
        InstanceObservation::new(mask.center_bbox().unwrap(), mean_visible_depth(&d).unwrap(), Some(mask)).unwrap()
    }

    fn gt(mesh: &TriangleMesh, delta: Vector3<f64>, s: f64, r: Matrix3<f64>) -> AnchoredSimilarityTransform {
        AnchoredSimilarityTransform::new(mesh.means(), delta, s, r).unwrap()
    }

    fn rendered_box(mesh: &TriangleMesh, t: &AnchoredSimilarityTransform, cam: &PinholeCamera) -> BBox2D {
        rasterize_depth(&apply_transform(mesh, t), cam).coverage().center_bbox().unwrap()
    }

    #[test]
    fn flat_square_settles_after_one_step() {
        let cam = centered(100.0, 512);
        let mesh = square(1.0, 5.0);
        let target = gt(&mesh, Vector3::new(0.0, 0.0, 5.0), 1.0, Matrix3::identity());
        let obs = observe(&mesh, &target, &cam);
        let report = solve_scale_translation(&mesh, &cam, &obs, &SolveOptions::default()).unwrap();
        let first = &report.transform;
        // Pixel quantization bounds the error: one pixel over ~20 px of width.
        assert!((first.scale - 1.0).abs() < 0.06, "{first:?}");
        assert!((first.translation - Vector3::new(0.0, 0.0, 5.0)).norm() < 0.3);
        assert_eq!(rendered_box(&mesh, first, &cam), obs.bbox);
        // A second solve from the result does nothing.
        let again = SolveOptions {
            max_iters: 1,
            start: Start::Transform(*first),
            ..SolveOptions::default()
        };
        let r2 = solve_scale_translation(&mesh, &cam, &obs, &again).unwrap();
        assert!((r2.transform.scale - first.scale).abs() < 1e-3 * first.scale);
    }

    #[test]
    fn sphere_round_trip() {
        let cam = centered(500.0, 512);
        let mesh = sphere_at(Vector3::new(0.0, 0.0, 4.0), 0.5, 3);
        let delta = Vector3::new(0.3, -0.2, 4.0);
        let obs = observe(&mesh, &gt(&mesh, delta, 2.0, Matrix3::identity()), &cam);
        let report = solve_scale_translation(&mesh, &cam, &obs, &SolveOptions::default()).unwrap();
        assert!(report.iterations_run <= 4);
        assert_eq!(report.residual_history.len(), report.iterations_run);
        let t = &report.transform;
        assert!((t.scale - 2.0).abs() < 0.02, "scale {}", t.scale);
        assert!((t.translation - delta).norm() < 0.01 * obs.mean_depth, "{:?}", t.translation);
        // Depth and box consistency of the final state.
        let d = rasterize_depth(&apply_transform(&mesh, t), &cam);
        assert!((mean_visible_depth(&d).unwrap() / obs.mean_depth - 1.0).abs() < 5e-3);
        let b = d.coverage().center_bbox().unwrap();
        for (x, y) in [(b.x_left, obs.bbox.x_left), (b.x_right, obs.bbox.x_right), (b.y_upper, obs.bbox.y_upper), (b.y_lower, obs.bbox.y_lower)] {
            assert!((x - y).abs() <= 1.0);
        }
    }

    #[test]
    fn normalized_start_reaches_the_same_answer() {
        let cam = centered(500.0, 512);
        let mesh = shapes::cube();
        let r = axis_angle(&Vector3::new(0.3, 1.0, 0.2), 0.7);
        let delta = Vector3::new(-0.4, 0.3, 6.0);
        let obs = observe(&mesh, &gt(&mesh, delta, 1.7, r), &cam);
        let opts = SolveOptions {
            start: Start::Normalized,
            ..SolveOptions::default()
        };
        let report = refine_after_rotation(&mesh, &r, &cam, &obs, &opts).unwrap();
        assert!((report.transform.scale / 1.7 - 1.0).abs() < 0.02);
        assert!((report.transform.translation - delta).norm() < 0.01 * obs.mean_depth);
        assert_eq!(report.transform.rotation, r);
    }

    #[test]
    fn observation_equal_to_current_render_is_a_fixed_point() {
        let cam = centered(400.0, 256);
        let mesh = sphere_at(Vector3::new(0.2, 0.1, 5.0), 0.8, 3);
        let obs = observe(&mesh, &AnchoredSimilarityTransform::identity(mesh.means()), &cam);
        let report = solve_scale_translation(&mesh, &cam, &obs, &SolveOptions::default()).unwrap();
        assert_eq!(report.iterations_run, 1);
        assert!(report.converged);
        assert!(report.transform.translation.norm() < 1e-4 * obs.mean_depth);
        assert!((report.transform.scale - 1.0).abs() < 1e-4);
    }

    #[test]
    fn identity_rotation_matches_plain_solve() {
        let cam = centered(300.0, 256);
        let mesh = sphere_at(Vector3::new(0.0, 0.0, 3.0), 0.5, 2);
        let obs = observe(&mesh, &gt(&mesh, Vector3::new(0.1, 0.2, 1.0), 1.4, Matrix3::identity()), &cam);
        let opts = SolveOptions::default();
        let a = solve_scale_translation(&mesh, &cam, &obs, &opts).unwrap();
        let b = refine_after_rotation(&mesh, &Matrix3::identity(), &cam, &obs, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_flip_gives_the_same_layout() {
        let cam = centered(500.0, 256);
        let mesh = sphere_at(Vector3::new(0.0, 0.0, 3.0), 0.5, 3);
        let r_star = axis_angle(&Vector3::new(0.2, 1.0, 0.0), 0.4);
        let delta = Vector3::new(-0.3, 0.1, 2.0);
        let obs = observe(&mesh, &gt(&mesh, delta, 1.5, r_star), &cam);
        let opts = SolveOptions::default();
        let a = refine_after_rotation(&mesh, &r_star, &cam, &obs, &opts).unwrap();
        let flipped = r_star * axis_angle(&Vector3::new(1.0, 0.0, 0.0), std::f64::consts::PI);
        let b = refine_after_rotation(&mesh, &flipped, &cam, &obs, &opts).unwrap();
        assert!((a.transform.scale - b.transform.scale).abs() < 0.01 * a.transform.scale);
        assert!((a.transform.translation - b.transform.translation).norm() < 0.01 * obs.mean_depth);
        assert!((a.transform.scale - 1.5).abs() < 0.03);
    }

    #[test]
    fn residuals_do_not_grow_on_convex_objects() {
        let cam = centered(500.0, 512);
        for (mesh, delta, s) in [
            (sphere_at(Vector3::new(0.0, 0.0, 4.0), 0.5, 3), Vector3::new(0.6, 0.3, 2.0), 2.5),
            (shapes::cube(), Vector3::new(0.2, -0.3, 5.0), 0.8),
        ] {
            let mesh = if mesh.means().z < 1.0 {
                apply_transform(&mesh, &gt(&mesh, Vector3::new(0.0, 0.0, 5.0), 1.0, Matrix3::identity()))
            } else {
                mesh
            };
            let obs = observe(&mesh, &gt(&mesh, delta, s, Matrix3::identity()), &cam);
            let opts = SolveOptions { tol: 0.0, ..SolveOptions::default() };
            let report = solve_scale_translation(&mesh, &cam, &obs, &opts).unwrap();
            let h = &report.residual_history;
            for w in h.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-9, "{h:?}");
            }
        }
    }

    #[test]
    fn fixed_scale_only_moves() {
        let cam = centered(500.0, 256);
        let mesh = sphere_at(Vector3::new(0.0, 0.0, 4.0), 0.5, 2);
        let obs = observe(&mesh, &gt(&mesh, Vector3::new(0.1, 0.0, 2.0), 2.0, Matrix3::identity()), &cam);
        let opts = SolveOptions { fix_scale: true, ..SolveOptions::default() };
        let report = solve_scale_translation(&mesh, &cam, &obs, &opts).unwrap();
        assert_eq!(report.transform.scale, 1.0);
    }

    #[test]
    fn invisible_start_is_reported() {
        let cam = centered(100.0, 64);
        let mesh = square(1.0, -3.0);
        let obs = InstanceObservation::new(BBox2D::new(10.0, 20.0, 10.0, 20.0).unwrap(), 5.0, None).unwrap();
        assert!(matches!(
            solve_scale_translation(&mesh, &cam, &obs, &SolveOptions::default()),
            Err(Error::EmptyVisibility)
        ));
        assert!(InstanceObservation::new(obs.bbox, 0.0, None).is_err());
    }

    #[test]
    fn reanchoring_preserves_the_action() {
        let t = AnchoredSimilarityTransform::new(
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(0.5, -0.5, 2.0),
            1.7,
            axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.9),
        )
        .unwrap();
        let r = reanchor(&t, Vector3::new(-2.0, 0.0, 4.0));
        for p in [Vector3::zeros(), Vector3::new(3.0, -1.0, 2.0)] {
            assert!((t.apply_point(&p) - r.apply_point(&p)).norm() < 1e-12);
        }
    }
}
