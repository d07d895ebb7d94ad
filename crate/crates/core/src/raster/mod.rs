//! Software z-buffer rasterization of triangle meshes.
//!
//! Pixels are sampled at their centers. Both faces of every triangle are
//! drawn. Depth and normals are interpolated perspective-correctly, and
//! every covered pixel's surface point lies exactly on the ray through that
//! pixel center. Triangles are clipped against the plane `z = NEAR_PLANE`.
//!
//! Visibility is resolved by strict depth comparison in submission order
//! (objects, then triangles), so on an exact depth tie the earlier triangle
//! keeps the pixel.

mod extremal;
pub mod io;
mod maps;

use nalgebra::{Vector2, Vector3};

pub use extremal::{extremal_visible_points, extremals_from_depth, ExtremalPoint, ExtremalVisiblePoints};
pub use maps::{DepthMap, Mask, NormalMap};
pub(crate) use maps::check_dims;

use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Depth of the clipping plane, in meters.
pub const NEAR_PLANE: f64 = 1e-4;

/// Sentinel owner for background pixels.
pub const NO_OWNER: u32 = u32::MAX;

/// Output of a multi-object render.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRender {
    pub depth: DepthMap,
    pub normals: NormalMap,
    /// Index of the winning mesh per pixel, `NO_OWNER` for background.
    pub owner: Vec<u32>,
}

impl SceneRender {
    pub fn mask_of(&self, object: u32) -> Mask {
        let w = self.depth.width();
        Mask::from_fn(w, self.depth.height(), |x, y| {
            self.owner[y as usize * w as usize + x as usize] == object
        })
    }
}

/// Nearest-surface depth per pixel. A mesh entirely behind the camera gives
/// an all-background map (see [`DepthMap::is_empty`]).
pub fn rasterize_depth(mesh: &TriangleMesh, camera: &PinholeCamera) -> DepthMap {
    let mut target = Target::new(camera, false);
    target.draw(0, mesh);
    target.depth
}

/// Camera-space normals, interpolated and renormalized; flat face normals
/// when the mesh has none. Coverage is identical to [`rasterize_depth`].
pub fn rasterize_normals(mesh: &TriangleMesh, camera: &PinholeCamera) -> NormalMap {
    render(mesh, camera).1
}

pub fn render(mesh: &TriangleMesh, camera: &PinholeCamera) -> (DepthMap, NormalMap) {
    let mut target = Target::new(camera, true);
    target.draw(0, mesh);
    (target.depth, target.normals.expect("normals enabled"))
}

/// Renders several meshes into one z-buffer.
pub fn render_scene(meshes: &[&TriangleMesh], camera: &PinholeCamera) -> SceneRender {
    let mut target = Target::new(camera, true);
    for (i, m) in meshes.iter().enumerate() {
        target.draw(i as u32, m);
    }
    SceneRender {
        depth: target.depth,
        normals: target.normals.expect("normals enabled"),
        owner: target.owner,
    }
}

/// `Σ Z / Σ 1[Z ≠ 0]` over the map.
pub fn mean_visible_depth(depth: &DepthMap) -> Result<f64> {
    let (sum, count) = depth
        .values()
        .iter()
        .filter(|&&z| z != 0.0)
        .fold((0.0, 0usize), |(s, n), &z| (s + z, n + 1));
    if count == 0 {
        return Err(Error::EmptyVisibility);
    }
    Ok(sum / count as f64)
}

#[derive(Clone, Copy)]
struct ClipVertex {
    pos: Vector3<f64>,
    normal: Vector3<f64>,
}

struct Target<'c> {
    camera: &'c PinholeCamera,
    depth: DepthMap,
    normals: Option<NormalMap>,
    owner: Vec<u32>,
}

impl<'c> Target<'c> {
    fn new(camera: &'c PinholeCamera, with_normals: bool) -> Self {
        Self {
            camera,
            depth: DepthMap::empty(camera.width, camera.height),
            normals: with_normals.then(|| NormalMap::empty(camera.width, camera.height)),
            owner: vec![NO_OWNER; camera.pixel_count()],
        }
    }

    fn draw(&mut self, object: u32, mesh: &TriangleMesh) {
        let verts = mesh.vertices();
        let vnormals = mesh.vertex_normals();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let face_normal = if vnormals.is_none() {
                match mesh.face_normal(t) {
                    Some(n) => n,
                    None => continue,
                }
            } else {
                Vector3::zeros()
            };
            let corners = tri.map(|i| ClipVertex {
                pos: verts[i as usize],
                normal: vnormals.map_or(face_normal, |ns| ns[i as usize]),
            });
            let poly = clip_near(&corners);
            for k in 1..poly.len().saturating_sub(1) {
                self.fill([poly[0], poly[k], poly[k + 1]], object);
            }
        }
    }

    fn fill(&mut self, tri: [ClipVertex; 3], object: u32) {
        let cam = self.camera;
        let s = tri.map(|v| cam.project_unchecked(&v.pos));
        let area = edge(&s[0], &s[1], &s[2]);
        if !(area.abs() > 0.0) {
            return;
        }
        // Counter-clockwise in y-down pixel space (area > 0) from here on.
        let (tri, s, area) = if area < 0.0 {
            ([tri[0], tri[2], tri[1]], [s[0], s[2], s[1]], -area)
        } else {
            (tri, s, area)
        };

        let w = cam.width as i64;
        let h = cam.height as i64;
        let min = s[0].inf(&s[1]).inf(&s[2]);
        let max = s[0].sup(&s[1]).sup(&s[2]);
        let x0 = ((min.x - 0.5).ceil() as i64).max(0);
        let x1 = ((max.x - 0.5).floor() as i64).min(w - 1);
        let y0 = ((min.y - 0.5).ceil() as i64).max(0);
        let y1 = ((max.y - 0.5).floor() as i64).min(h - 1);
        if x0 > x1 || y0 > y1 {
            return;
        }

        let inv_z = tri.map(|v| 1.0 / v.pos.z);
        let edges = [(1, 2), (2, 0), (0, 1)];
        let owns_ties = edges.map(|(a, b)| top_left(&s[a], &s[b]));

        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                let mut bary = [0.0; 3];
                let mut inside = true;
                for (k, &(a, b)) in edges.iter().enumerate() {
                    let e = edge(&s[a], &s[b], &p);
                    if e < 0.0 || (e == 0.0 && !owns_ties[k]) {
                        inside = false;
                        break;
                    }
                    bary[k] = e / area;
                }
                if !inside {
                    continue;
                }
                let iz = bary[0] * inv_z[0] + bary[1] * inv_z[1] + bary[2] * inv_z[2];
                let z = 1.0 / iz;
                let idx = y as usize * w as usize + x as usize;
                let current = self.depth.values()[idx];
                if current != 0.0 && z >= current {
                    continue;
                }
                self.depth.values_mut()[idx] = z;
                self.owner[idx] = object;
                if let Some(normals) = &mut self.normals {
                    let n = (tri[0].normal * (bary[0] * inv_z[0])
                        + tri[1].normal * (bary[1] * inv_z[1])
                        + tri[2].normal * (bary[2] * inv_z[2]))
                        * z;
                    // Opposite vertex normals can cancel; fall back to the face.
                    let n = n.try_normalize(1e-12).unwrap_or_else(|| {
                        (tri[1].pos - tri[0].pos)
                            .cross(&(tri[2].pos - tri[0].pos))
                            .normalize()
                    });
                    normals.values_mut()[idx] = n;
                }
            }
        }
    }
}

#[inline]
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Top or left edge of a positively oriented triangle in y-down space. Two
/// triangles sharing an edge traverse it in opposite directions, so exactly
/// one of them owns samples lying on it.
#[inline]
fn top_left(a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    let d = b - a;
    d.y < 0.0 || (d.y == 0.0 && d.x > 0.0)
}

/// Sutherland-Hodgman against `z >= NEAR_PLANE`; returns 0, 3 or 4 vertices.
fn clip_near(tri: &[ClipVertex; 3]) -> Vec<ClipVertex> {
    if tri.iter().all(|v| v.pos.z >= NEAR_PLANE) {
        return tri.to_vec();
    }
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.pos.z >= NEAR_PLANE;
        let b_in = b.pos.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.pos.z) / (b.pos.z - a.pos.z);
            out.push(ClipVertex {
                pos: a.pos + (b.pos - a.pos) * t,
                normal: a.normal + (b.normal - a.normal) * t,
            });
        }
    }
    out
}
