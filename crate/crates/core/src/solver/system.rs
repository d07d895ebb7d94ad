//! The five-row linear system for one translate-and-scale step.
//!
//! Unknowns are `x = (ΔX, ΔY, ΔZ, s)`. Rows 1-4 pin the projections of the
//! left, right, upper and lower extremal points to the matching edges of the
//! target box, after clearing the perspective denominator:
//!
//! ```text
//! f·ΔX − b·ΔZ + s·(f·dX − b·dZ) = b·Z_avg − f·X_avg
//! ```
//!
//! (with `fx` and X terms in the left/right rows, `fy` and Y terms in the
//! upper/lower rows). Row 5 pins the mean visible depth:
//! `ΔZ + s·mean(dZ) = d̃ − Z_avg`, the mean running over covered pixels.

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix, SVector, Vector3};

use super::lsq::lstsq;
use crate::bbox::BBox2D;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::raster::{mean_visible_depth, DepthMap, ExtremalVisiblePoints};

pub type Matrix5x4 = SMatrix<f64, 5, 4>;
pub type Vector5 = SVector<f64, 5>;

/// Damping added when the undamped step yields a non-positive scale.
pub const SCALE_DAMPING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutLinearSystem {
    pub a: Matrix5x4,
    pub b: Vector5,
    /// Row weights used by the solver: `1/fx` on the x rows, `1/fy` on the
    /// y rows and `1` on the depth row, which puts every row in meters.
    pub row_weights: Vector5,
    pub condition_hint: f64,
}

/// One solved step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub translation: Vector3<f64>,
    pub scale: f64,
    /// `‖A x − B‖` on the unweighted system.
    pub residual: f64,
}

/// Assembles the system. `bbox` must already be relative to the principal
/// point (see [`BBox2D::centered`]); `depth` is the current render that the
/// extremals were taken from.
pub fn build_system(
    extremals: &ExtremalVisiblePoints,
    means: &Vector3<f64>,
    bbox: &BBox2D,
    target_mean_depth: f64,
    depth: &DepthMap,
    camera: &PinholeCamera,
) -> Result<LayoutLinearSystem> {
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(Error::DegenerateObservation("target box has zero extent".into()));
    }
    if !(target_mean_depth.is_finite() && target_mean_depth > 0.0) {
        return Err(Error::DegenerateObservation(format!(
            "target mean depth {target_mean_depth} must be > 0"
        )));
    }
    let mean_dz = mean_visible_depth(depth)? - means.z;
    let (fx, fy) = (camera.fx, camera.fy);

    let mut a = Matrix5x4::zeros();
    let mut b = Vector5::zeros();
    let x_rows = [(extremals.left.point3, bbox.x_left), (extremals.right.point3, bbox.x_right)];
    let y_rows = [(extremals.upper.point3, bbox.y_upper), (extremals.lower.point3, bbox.y_lower)];
    for (row, (p, edge)) in x_rows.iter().enumerate() {
        let d = p - means;
        a[(row, 0)] = fx;
        a[(row, 2)] = -edge;
        a[(row, 3)] = fx * d.x - edge * d.z;
        b[row] = edge * means.z - fx * means.x;
    }
    for (k, (p, edge)) in y_rows.iter().enumerate() {
        let row = 2 + k;
        let d = p - means;
        a[(row, 1)] = fy;
        a[(row, 2)] = -edge;
        a[(row, 3)] = fy * d.y - edge * d.z;
        b[row] = edge * means.z - fy * means.y;
    }
    a[(4, 2)] = 1.0;
    a[(4, 3)] = mean_dz;
    b[4] = target_mean_depth - means.z;

    let row_weights = Vector5::new(1.0 / fx, 1.0 / fx, 1.0 / fy, 1.0 / fy, 1.0);
    let weighted = Matrix5x4::from_fn(|r, c| a[(r, c)] * row_weights[r]);
    let sv = weighted.svd(false, false).singular_values;
    let condition_hint = sv.max() / sv.min();
    Ok(LayoutLinearSystem {
        a,
        b,
        row_weights,
        condition_hint,
    })
}

impl LayoutLinearSystem {
    fn weighted(&self, columns: usize) -> (DMatrix<f64>, DVector<f64>) {
        let a = DMatrix::from_fn(5, columns, |r, c| self.a[(r, c)] * self.row_weights[r]);
        let b = DVector::from_fn(5, |r, _| self.b[r] * self.row_weights[r]);
        (a, b)
    }

    pub fn residual(&self, translation: &Vector3<f64>, scale: f64) -> f64 {
        let x = nalgebra::Vector4::new(translation.x, translation.y, translation.z, scale);
        (self.a * x - self.b).norm()
    }
}

/// Least-squares step through a pivoted QR factorization.
pub fn solve_step(system: &LayoutLinearSystem) -> Result<Step> {
    let (a, b) = system.weighted(4);
    let mut x = lstsq(&a, &b)?.x;
    if !(x[3] > 0.0) {
        // Tikhonov retry: (AᵀA + λI) x = Aᵀb via the stacked system [A; √λ I].
        let mut stacked = DMatrix::zeros(9, 4);
        stacked.view_mut((0, 0), (5, 4)).copy_from(&a);
        stacked
            .view_mut((5, 0), (4, 4))
            .copy_from(&(Matrix4::identity() * SCALE_DAMPING.sqrt()));
        let mut rhs = DVector::zeros(9);
        rhs.rows_mut(0, 5).copy_from(&b);
        x = lstsq(&stacked, &rhs)?.x;
        if !(x[3] > 0.0) {
            return Err(Error::NonPhysicalScale(x[3]));
        }
    }
    let translation = Vector3::new(x[0], x[1], x[2]);
    Ok(Step {
        translation,
        scale: x[3],
        residual: system.residual(&translation, x[3]),
    })
}

/// Translation-only step with the scale held at 1.
pub fn solve_translation_step(system: &LayoutLinearSystem) -> Result<Step> {
    let (a, mut b) = system.weighted(3);
    for r in 0..5 {
        b[r] -= system.a[(r, 3)] * system.row_weights[r];
    }
    let x = lstsq(&a, &b)?.x;
    let translation = Vector3::new(x[0], x[1], x[2]);
    Ok(Step {
        translation,
        scale: 1.0,
        residual: system.residual(&translation, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::ExtremalPoint;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn point(x: f64, y: f64, z: f64, cam: &PinholeCamera) -> ExtremalPoint {
        let p = Vector3::new(x, y, z);
        ExtremalPoint {
            point3: p,
            point2: cam.project_unchecked(&p),
        }
    }

    fn camera(f: f64) -> PinholeCamera {
        PinholeCamera::new(f, f, 256.0, 256.0, 512, 512).unwrap()
    }

    /// Current square (±1, ±1, 5) with exact extremals at the edge midpoints.
    fn flat_square(cam: &PinholeCamera) -> (ExtremalVisiblePoints, DepthMap) {
        let e = ExtremalVisiblePoints {
            left: point(-1.0, 0.0, 5.0, cam),
            right: point(1.0, 0.0, 5.0, cam),
            upper: point(0.0, -1.0, 5.0, cam),
            lower: point(0.0, 1.0, 5.0, cam),
        };
        (e, DepthMap::new(2, 1, vec![5.0, 5.0]).unwrap())
    }

    fn target(half: f64) -> BBox2D {
        BBox2D::new(-half, half, -half, half).unwrap()
    }

    #[test]
    fn hand_substituted_rows() {
        let cam = camera(100.0);
        let (e, d) = flat_square(&cam);
        let sys = build_system(&e, &Vector3::new(0.0, 0.0, 5.0), &target(10.0), 10.0, &d, &cam).unwrap();
        let row = |r: usize| [sys.a[(r, 0)], sys.a[(r, 1)], sys.a[(r, 2)], sys.a[(r, 3)], sys.b[r]];
        assert_eq!(row(0), [100.0, 0.0, 10.0, -100.0, -50.0]);
        assert_eq!(row(1), [100.0, 0.0, -10.0, 100.0, 50.0]);
        assert_eq!(row(2), [0.0, 100.0, 10.0, -100.0, -50.0]);
        assert_eq!(row(4), [0.0, 0.0, 1.0, 0.0, 5.0]);
    }

    #[test]
    fn hand_solved_step() {
        let cam = camera(100.0);
        let (e, d) = flat_square(&cam);
        let sys = build_system(&e, &Vector3::new(0.0, 0.0, 5.0), &target(10.0), 10.0, &d, &cam).unwrap();
        let step = solve_step(&sys).unwrap();
        assert!((step.translation - Vector3::new(0.0, 0.0, 5.0)).norm() < 1e-12);
        assert!((step.scale - 1.0).abs() < 1e-12);
        assert!(step.residual < 1e-9);
    }

    #[test]
    fn fixed_point_is_identity() {
        let cam = camera(100.0);
        let (e, d) = flat_square(&cam);
        let sys = build_system(&e, &Vector3::new(0.0, 0.0, 5.0), &target(20.0), 5.0, &d, &cam).unwrap();
        let step = solve_step(&sys).unwrap();
        assert!(step.translation.norm() < 1e-12);
        assert!((step.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        // All extremals at the means and a flat depth: the scale column vanishes.
        let cam = camera(100.0);
        let p = point(0.0, 0.0, 5.0, &cam);
        let e = ExtremalVisiblePoints { left: p, right: p, upper: p, lower: p };
        let d = DepthMap::new(1, 1, vec![5.0]).unwrap();
        let sys = build_system(&e, &Vector3::new(0.0, 0.0, 5.0), &target(10.0), 6.0, &d, &cam).unwrap();
        match solve_step(&sys) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_inputs() {
        let cam = camera(100.0);
        let (e, d) = flat_square(&cam);
        let m = Vector3::new(0.0, 0.0, 5.0);
        assert!(matches!(
            build_system(&e, &m, &target(10.0), 0.0, &d, &cam),
            Err(Error::DegenerateObservation(_))
        ));
        assert!(matches!(
            build_system(&e, &m, &target(10.0), 5.0, &DepthMap::empty(2, 2), &cam),
            Err(Error::EmptyVisibility)
        ));
    }

    #[test]
    fn translation_only_step() {
        let cam = camera(100.0);
        let (e, d) = flat_square(&cam);
        let sys = build_system(&e, &Vector3::new(0.0, 0.0, 5.0), &target(10.0), 10.0, &d, &cam).unwrap();
        let step = solve_translation_step(&sys).unwrap();
        assert_eq!(step.scale, 1.0);
        assert!((step.translation.z - 5.0).abs() < 1e-9);
    }

    /// A system built from the exact projections of a known transform of
    /// four 3D points, so `(Δ*, s*)` satisfies every row.
    pub(crate) fn consistent_instance(
        cam: &PinholeCamera,
        pts: [Vector3<f64>; 4],
        means: Vector3<f64>,
        delta: Vector3<f64>,
        s: f64,
        mean_dz: f64,
    ) -> (ExtremalVisiblePoints, BBox2D, f64, DepthMap) {
        let moved = pts.map(|p| means + delta + s * (p - means));
        let proj = moved.map(|p| cam.project_unchecked(&p) - Vector2::new(cam.cx, cam.cy));
        let e = ExtremalVisiblePoints {
            left: ExtremalPoint { point3: pts[0], point2: Vector2::zeros() },
            right: ExtremalPoint { point3: pts[1], point2: Vector2::zeros() },
            upper: ExtremalPoint { point3: pts[2], point2: Vector2::zeros() },
            lower: ExtremalPoint { point3: pts[3], point2: Vector2::zeros() },
        };
        let bbox = BBox2D {
            x_left: proj[0].x,
            x_right: proj[1].x,
            y_upper: proj[2].y,
            y_lower: proj[3].y,
        };
        let visible = means.z + mean_dz;
        let target = means.z + delta.z + s * mean_dz;
        (e, bbox, target, DepthMap::new(1, 1, vec![visible]).unwrap())
    }

    proptest! {
        #[test]
        fn recovers_constructed_step(
            dx in -0.5f64..0.5, dy in -0.5f64..0.5, dz in -1.0f64..3.0, s in 0.3f64..3.0,
            w in 0.3f64..1.0, h in 0.3f64..1.0, depth_offset in -0.4f64..0.0
        ) {
            let cam = camera(500.0);
            let means = Vector3::new(0.1, -0.2, 5.0);
            let pts = [
                Vector3::new(0.1 - w, -0.2, 5.0),
                Vector3::new(0.1 + w, -0.2, 5.0),
                Vector3::new(0.1, -0.2 - h, 5.0),
                Vector3::new(0.1, -0.2 + h, 5.0),
            ];
            let delta = Vector3::new(dx, dy, dz);
            let (e, bbox, d, depth) = consistent_instance(&cam, pts, means, delta, s, depth_offset);
            let sys = build_system(&e, &means, &bbox, d, &depth, &cam).unwrap();
            // Sparsity pattern holds for every input.
            prop_assert!(sys.a[(0, 1)] == 0.0 && sys.a[(1, 1)] == 0.0);
            prop_assert!(sys.a[(2, 0)] == 0.0 && sys.a[(3, 0)] == 0.0);
            prop_assert!(sys.a[(4, 0)] == 0.0 && sys.a[(4, 1)] == 0.0 && sys.a[(4, 2)] == 1.0);
            let step = solve_step(&sys).unwrap();
            prop_assert!((step.translation - delta).norm() <= 1e-9 * (1.0 + delta.norm()));
            prop_assert!((step.scale - s).abs() <= 1e-9 * s);
        }
    }

    proptest! {
        /// Scaling the focal lengths and the centered box by `k` leaves the
        /// solution unchanged, also for inconsistent systems.
        #[test]
        fn camera_scale_equivariance(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -0.5f64..0.5), 4),
            edges in (-60.0f64..-5.0, 5.0f64..60.0, -60.0f64..-5.0, 5.0f64..60.0),
            f in 100.0f64..1000.0, fy_ratio in 0.8f64..1.25, d in 2.0f64..10.0, depth_offset in -0.5f64..0.0,
            k in prop::sample::select(vec![0.5, 2.0, 10.0]),
        ) {
            let means = Vector3::new(0.0, 0.0, 5.0);
            let e = {
                let p = |i: usize| ExtremalPoint {
                    point3: means + Vector3::new(pts[i].0, pts[i].1, pts[i].2),
                    point2: Vector2::zeros(),
                };
                ExtremalVisiblePoints { left: p(0), right: p(1), upper: p(2), lower: p(3) }
            };
            let depth = DepthMap::new(1, 1, vec![5.0 + depth_offset]).unwrap();
            let cam = PinholeCamera::new(f, f * fy_ratio, 0.0, 0.0, 1, 1).unwrap();
            let cam_k = PinholeCamera::new(f * k, f * fy_ratio * k, 0.0, 0.0, 1, 1).unwrap();
            let b = BBox2D::new(edges.0, edges.1, edges.2, edges.3).unwrap();
            let bk = BBox2D::new(edges.0 * k, edges.1 * k, edges.2 * k, edges.3 * k).unwrap();
            let sys = build_system(&e, &means, &b, d, &depth, &cam).unwrap();
            let sys_k = build_system(&e, &means, &bk, d, &depth, &cam_k).unwrap();
            // Rows 1-4 scale by k, row 5 is untouched.
            for r in 0..5 {
                let factor = if r < 4 { k } else { 1.0 };
                for c in 0..4 {
                    prop_assert!((sys_k.a[(r, c)] - factor * sys.a[(r, c)]).abs() <= 1e-9 * (1.0 + sys_k.a[(r, c)].abs()));
                }
            }
            match (solve_step(&sys), solve_step(&sys_k)) {
                (Ok(a), Ok(b)) => {
                    let x = nalgebra::Vector4::new(a.translation.x, a.translation.y, a.translation.z, a.scale);
                    let y = nalgebra::Vector4::new(b.translation.x, b.translation.y, b.translation.z, b.scale);
                    prop_assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }
}
