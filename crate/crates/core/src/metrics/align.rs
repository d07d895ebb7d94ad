use nalgebra::{Matrix3, Vector3};

use super::{NearestNeighbors, PointSet};
use crate::error::{Error, Result};

pub const ICP_ITERATIONS: usize = 30;
/// Stop once the mean matching distance changes by less than this fraction.
pub const ICP_TOLERANCE: f64 = 1e-6;

/// `p ↦ R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }
}

/// Least-squares rotation and translation taking `src[i]` onto `dst[i]`.
pub fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need ≥ 3 paired points, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - cs, d - cd);
        h += a * b.transpose();
        spread += a * a.transpose();
    }
    // A collinear source leaves the rotation about that line undetermined.
    let sv = spread.symmetric_eigenvalues();
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(f64::total_cmp);
    if !(sorted[1] > 1e-12 * sorted[2].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateGeometry("correspondences are collinear".into()));
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let mut fix = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    let rotation = vt.transpose() * fix * u.transpose();
    Ok(RigidTransform {
        rotation,
        translation: cd - rotation * cs,
    })
}

/// Rigid alignment of `pred` onto `gt`. With index pairs `(pred, gt)` this is
/// the closed-form fit; without, nearest-neighbour refinement from the
/// identity.
pub fn align_rigid(
    pred: &PointSet,
    gt: &PointSet,
    correspondences: Option<&[(usize, usize)]>,
) -> Result<RigidTransform> {
    if let Some(pairs) = correspondences {
        let mut src = Vec::with_capacity(pairs.len());
        let mut dst = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            let (Some(s), Some(d)) = (pred.points().get(i), gt.points().get(j)) else {
                return Err(Error::DimensionMismatch(format!("correspondence ({i}, {j}) out of range")));
            };
            src.push(*s);
            dst.push(*d);
        }
        return kabsch(&src, &dst);
    }

    let index = NearestNeighbors::new(gt);
    let mut current = RigidTransform::identity();
    let mut previous_error = f64::INFINITY;
    for _ in 0..ICP_ITERATIONS {
        let moved: Vec<Vector3<f64>> = pred.points().iter().map(|p| current.apply(p)).collect();
        let mut matched = Vec::with_capacity(moved.len());
        let mut error = 0.0;
        for p in &moved {
            let (d2, j) = index.nearest(p);
            error += d2.sqrt();
            matched.push(gt.points()[j]);
        }
        error /= moved.len() as f64;
        if error == 0.0 || (previous_error.is_finite() && (previous_error - error).abs() <= ICP_TOLERANCE * previous_error) {
            break;
        }
        previous_error = error;
        match kabsch(&moved, &matched) {
            Ok(step) => current = step.compose(&current),
            Err(_) => break,
        }
    }
    Ok(current)
}
