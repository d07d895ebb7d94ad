use nalgebra::{Vector2, Vector3};

use super::maps::DepthMap;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// A visible surface point and the pixel center it was sampled at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalPoint {
    pub point3: Vector3<f64>,
    pub point2: Vector2<f64>,
}

/// Surface points behind the leftmost, rightmost, uppermost and lowermost
/// covered pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalVisiblePoints {
    pub left: ExtremalPoint,
    pub right: ExtremalPoint,
    pub upper: ExtremalPoint,
    pub lower: ExtremalPoint,
}

pub fn extremal_visible_points(
    mesh: &TriangleMesh,
    camera: &PinholeCamera,
) -> Result<ExtremalVisiblePoints> {
    extremals_from_depth(&super::rasterize_depth(mesh, camera), camera)
}

/// Picks the extreme covered pixels of a depth map. Ties go to the smaller
/// depth, then to the smaller y (left/right) or smaller x (upper/lower).
pub fn extremals_from_depth(depth: &DepthMap, camera: &PinholeCamera) -> Result<ExtremalVisiblePoints> {
    // Keys are compared lexicographically; smaller wins.
    type Key = (i64, f64, i64);
    let mut best: [Option<(Key, u32, u32)>; 4] = [None; 4];
    let better = |a: &Key, b: &Key| a.0 < b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && a.2 < b.2)));

    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let z = depth.get(x, y);
            if z == 0.0 {
                continue;
            }
            let (xi, yi) = (i64::from(x), i64::from(y));
            let keys: [Key; 4] = [(xi, z, yi), (-xi, z, yi), (yi, z, xi), (-yi, z, xi)];
            for (slot, key) in best.iter_mut().zip(keys) {
                if slot.map_or(true, |(k, _, _)| better(&key, &k)) {
                    *slot = Some((key, x, y));
                }
            }
        }
    }

    let point = |slot: Option<(Key, u32, u32)>| -> Result<ExtremalPoint> {
        let (_, x, y) = slot.ok_or(Error::EmptyVisibility)?;
        let (u, v) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
        Ok(ExtremalPoint {
            point3: camera.unproject(u, v, depth.get(x, y)),
            point2: Vector2::new(u, v),
        })
    };
    Ok(ExtremalVisiblePoints {
        left: point(best[0])?,
        right: point(best[1])?,
        upper: point(best[2])?,
        lower: point(best[3])?,
    })
}
