//! Fixtures shared by the benchmarks.

use metric_layout::camera::PinholeCamera;
use metric_layout::harness::shapes;
use metric_layout::mesh::TriangleMesh;
use metric_layout::raster::{extremals_from_depth, rasterize_depth};
use metric_layout::solver::{build_system, LayoutLinearSystem};
use metric_layout::transform::{apply_transform, AnchoredSimilarityTransform};
use nalgebra::{Matrix3, Vector3};

pub fn camera(size: u32) -> PinholeCamera {
    let c = f64::from(size) / 2.0;
    PinholeCamera::new(100.0 * f64::from(size) / 128.0, 100.0 * f64::from(size) / 128.0, c, c, size, size).unwrap()
}

/// A unit icosphere three meters in front of the camera.
pub fn sphere_in_view(level: u32) -> TriangleMesh {
    let mesh = shapes::icosphere(level);
    let t = AnchoredSimilarityTransform::new(mesh.means(), Vector3::new(0.1, -0.05, 3.0), 1.0, Matrix3::identity()).unwrap();
    apply_transform(&mesh, &t)
}

/// The linear system for a sphere that must grow and move to fit a box.
pub fn sphere_system(size: u32) -> LayoutLinearSystem {
    let cam = camera(size);
    let mesh = sphere_in_view(3);
    let depth = rasterize_depth(&mesh, &cam);
    let extremals = extremals_from_depth(&depth, &cam).unwrap();
    let target = metric_layout::bbox::BBox2D::new(-40.0, 50.0, -45.0, 45.0).unwrap();
    build_system(&extremals, &mesh.means(), &target, 3.5, &depth, &cam).unwrap()
}
