//! Similarity transforms anchored at a mesh's coordinate means.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

const ORTHO_TOLERANCE: f64 = 1e-9;

/// `p -> center + translation + scale * R (p - center)`.
///
/// With `R = I` this is the per-point translate-and-scale about the mesh
/// means used by the layout solver; the rotation is applied about the same
/// anchor first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransform", into = "RawTransform")]
pub struct AnchoredSimilarityTransform {
    pub center: Vector3<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
    pub rotation: Matrix3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTransform {
    center: [f64; 3],
    translation: [f64; 3],
    scale: f64,
    rotation: [[f64; 3]; 3],
}

impl TryFrom<RawTransform> for AnchoredSimilarityTransform {
    type Error = Error;

    fn try_from(raw: RawTransform) -> Result<Self> {
        AnchoredSimilarityTransform::new(
            raw.center.into(),
            raw.translation.into(),
            raw.scale,
            rotation_from_rows(&raw.rotation),
        )
    }
}

impl From<AnchoredSimilarityTransform> for RawTransform {
    fn from(t: AnchoredSimilarityTransform) -> Self {
        RawTransform {
            center: t.center.into(),
            translation: t.translation.into(),
            scale: t.scale,
            rotation: rotation_rows(&t.rotation),
        }
    }
}

pub(crate) fn rotation_from_rows(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

pub(crate) fn rotation_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

/// Checks `RᵀR = I` and `det R = 1` to within `1e-9`.
pub fn validate_rotation(r: &Matrix3<f64>) -> Result<()> {
    let ortho = (r.transpose() * r - Matrix3::identity()).amax();
    let det = r.determinant();
    if !(ortho <= ORTHO_TOLERANCE && (det - 1.0).abs() <= ORTHO_TOLERANCE) {
        return Err(Error::InvalidTransform(format!(
            "rotation is not proper orthonormal (|RᵀR - I| = {ortho:e}, det = {det})"
        )));
    }
    Ok(())
}

/// Angle of the relative rotation `aᵀb`, in radians.
pub fn geodesic_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let cos = (((a.transpose() * b).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos()
}

/// Projects a near-rotation matrix back onto SO(3).
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    Rotation3::from_matrix_eps(m, 1e-15, 100, Rotation3::identity()).into_inner()
}

impl AnchoredSimilarityTransform {
    pub fn new(
        center: Vector3<f64>,
        translation: Vector3<f64>,
        scale: f64,
        rotation: Matrix3<f64>,
    ) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidTransform(format!("scale {scale} must be > 0")));
        }
        if !(center.iter().chain(translation.iter()).all(|c| c.is_finite())) {
            return Err(Error::InvalidTransform("non-finite center or translation".into()));
        }
        validate_rotation(&rotation)?;
        Ok(Self {
            center,
            translation,
            scale,
            rotation,
        })
    }

    pub fn identity(center: Vector3<f64>) -> Self {
        Self {
            center,
            translation: Vector3::zeros(),
            scale: 1.0,
            rotation: Matrix3::identity(),
        }
    }

    /// `center + translation + s·R(p − center)`, evaluated as
    /// `p + translation + (s·R − I)(p − center)` so the identity is exact.
    #[inline]
    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let m = self.rotation * self.scale - Matrix3::identity();
        p + self.translation + m * (p - self.center)
    }

    /// Where the anchor ends up: `center + translation`.
    pub fn placed_center(&self) -> Vector3<f64> {
        self.center + self.translation
    }

    /// Follows this transform with a rotation-free step `(delta, step_scale)`
    /// anchored at the transformed mesh's means. Since every anchored
    /// transform maps the means to `center + translation`, the composite stays
    /// anchored at the original center.
    pub fn then_step(&self, delta: &Vector3<f64>, step_scale: f64) -> Self {
        Self {
            center: self.center,
            translation: self.translation + delta,
            scale: self.scale * step_scale,
            rotation: self.rotation,
        }
    }
}

/// Transforms every vertex; normals are rotated only.
pub fn apply_transform(mesh: &TriangleMesh, t: &AnchoredSimilarityTransform) -> TriangleMesh {
    let vertices = mesh.vertices().iter().map(|p| t.apply_point(p)).collect();
    let normals = mesh.vertex_normals().map(|ns| {
        ns.iter()
            .map(|n| {
                let r = t.rotation * n;
                r / r.norm()
            })
            .collect()
    });
    mesh.with_vertex_data(vertices, normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mesh(points: Vec<Vector3<f64>>) -> TriangleMesh {
        let tris = (0..points.len() as u32 - 2).map(|i| [0, i + 1, i + 2]).collect();
        TriangleMesh::new(points, tris, None).unwrap()
    }

    fn point() -> impl Strategy<Value = Vector3<f64>> {
        (-3.0f64..3.0, -3.0f64..3.0, 1.0f64..9.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    #[test]
    fn identity_is_exact() {
        let m = mesh(vec![
            Vector3::new(0.1, 0.2, 0.3),
            Vector3::new(1.0 / 3.0, 2.0, 7.0),
            Vector3::new(-4.0, 1e-7, 9.5),
        ]);
        let out = apply_transform(&m, &AnchoredSimilarityTransform::identity(m.means()));
        assert_eq!(out.vertices(), m.vertices());
    }

    #[test]
    fn substitution_example() {
        let t = AnchoredSimilarityTransform::new(
            Vector3::zeros(),
            Vector3::new(1.0, 1.0, 1.0),
            2.0,
            Matrix3::identity(),
        )
        .unwrap();
        assert_relative_eq!(t.apply_point(&Vector3::new(1.0, 2.0, 3.0)), Vector3::new(3.0, 5.0, 7.0));
    }

    #[test]
    fn rejects_invalid_parameters() {
        let c = Vector3::zeros();
        assert!(AnchoredSimilarityTransform::new(c, c, 0.0, Matrix3::identity()).is_err());
        assert!(AnchoredSimilarityTransform::new(c, c, 1.0, Matrix3::identity() * 2.0).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(AnchoredSimilarityTransform::new(c, c, 1.0, reflection).is_err());
    }

    #[test]
    fn normals_rotate_only() {
        let m = mesh(vec![Vector3::zeros(), Vector3::x(), Vector3::y()]).with_smooth_normals();
        let r = Rotation3::from_axis_angle(&Vector3::x_axis(), 0.5).into_inner();
        let t = AnchoredSimilarityTransform::new(m.means(), Vector3::new(0.0, 0.0, 3.0), 4.0, r)
            .unwrap();
        let out = apply_transform(&m, &t);
        assert_relative_eq!(out.vertex_normals().unwrap()[0], r * Vector3::z(), epsilon = 1e-12);
    }

    #[test]
    fn json_shape() {
        let t = AnchoredSimilarityTransform::identity(Vector3::new(1.0, 2.0, 3.0));
        let json = serde_json::to_value(t).unwrap();
        assert_eq!(json["rotation"][1][1], 1.0);
        assert_eq!(json["center"][2], 3.0);
        let back: AnchoredSimilarityTransform = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }

    proptest! {
        // Brute-force averaging of the transformed vertices.
        #[test]
        fn translation_moves_centroid(
            pts in prop::collection::vec(point(), 3..20),
            d in point(), s in 0.1f64..5.0
        ) {
            let m = mesh(pts);
            let t = AnchoredSimilarityTransform::new(m.means(), d, s, Matrix3::identity()).unwrap();
            let out = apply_transform(&m, &t);
            let mut acc = Vector3::zeros();
            for v in out.vertices() { acc += v; }
            let centroid = acc / out.vertices().len() as f64;
            prop_assert!((centroid - (m.means() + d)).norm() < 1e-9);
        }

        #[test]
        fn steps_compose(
            pts in prop::collection::vec(point(), 3..20),
            d1 in point(), d2 in point(), s1 in 0.2f64..4.0, s2 in 0.2f64..4.0
        ) {
            let m = mesh(pts);
            let first = AnchoredSimilarityTransform::new(m.means(), d1, s1, Matrix3::identity()).unwrap();
            let mid = apply_transform(&m, &first);
            let second = AnchoredSimilarityTransform::new(mid.means(), d2, s2, Matrix3::identity()).unwrap();
            let twice = apply_transform(&mid, &second);
            let once = apply_transform(&m, &first.then_step(&d2, s2));
            for (a, b) in twice.vertices().iter().zip(once.vertices()) {
                prop_assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()));
            }
        }
    }
}
