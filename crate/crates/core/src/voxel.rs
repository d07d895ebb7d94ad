//! Surface voxelization into a set of active cell indices.

use std::collections::BTreeSet;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Cubic cells of edge `voxel_size`, `resolution` per axis, starting at `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: u32,
    pub origin: Vector3<f64>,
    pub voxel_size: f64,
    pub active: BTreeSet<[u32; 3]>,
}

impl VoxelGrid {
    pub fn cell_min(&self, idx: [u32; 3]) -> Vector3<f64> {
        self.origin + Vector3::new(idx[0] as f64, idx[1] as f64, idx[2] as f64) * self.voxel_size
    }
}

/// Voxelizes over the mesh's bounding box, sized by its longest side.
pub fn voxelize(mesh: &TriangleMesh, resolution: u32) -> Result<VoxelGrid> {
    if resolution == 0 {
        return Err(Error::InvalidConfig("voxel resolution must be >= 1".into()));
    }
    let (lo, hi) = mesh.bounds();
    let extent = (hi - lo).max();
    if !(extent > 0.0) {
        return Err(Error::DegenerateMesh("bounding box has zero extent".into()));
    }
    voxelize_in(mesh, lo, extent / resolution as f64, resolution)
}

/// Voxelizes into an explicit grid. A cell is active when any triangle
/// touches it (closed-box separating-axis test, padded by a relative `1e-9`).
pub fn voxelize_in(
    mesh: &TriangleMesh,
    origin: Vector3<f64>,
    voxel_size: f64,
    resolution: u32,
) -> Result<VoxelGrid> {
    if resolution == 0 || !(voxel_size > 0.0) {
        return Err(Error::InvalidConfig("voxel grid must have positive size".into()));
    }
    let half = Vector3::repeat(0.5 * voxel_size * (1.0 + 1e-9));
    let max_index = resolution as i64 - 1;
    let to_cell = |x: f64| ((x / voxel_size).floor() as i64).clamp(0, max_index) as u32;

    let mut active = BTreeSet::new();
    for t in mesh.triangles() {
        let tri = t.map(|i| mesh.vertices()[i as usize] - origin);
        let lo = tri[0].inf(&tri[1]).inf(&tri[2]);
        let hi = tri[0].sup(&tri[1]).sup(&tri[2]);
        let grid_extent = voxel_size * resolution as f64;
        if hi.iter().any(|&c| c < 0.0) || lo.iter().any(|&c| c > grid_extent) {
            continue;
        }
        // Candidate range, widened by one cell to absorb boundary rounding.
        let range = |axis: usize| {
            let a = to_cell(lo[axis]).saturating_sub(1);
            let b = (to_cell(hi[axis]) + 1).min(resolution - 1);
            a..=b
        };
        for i in range(0) {
            for j in range(1) {
                for k in range(2) {
                    let center = Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5)
                        * voxel_size;
                    if triangle_box_overlap(&tri, &center, &half) {
                        active.insert([i, j, k]);
                    }
                }
            }
        }
    }
    Ok(VoxelGrid {
        resolution,
        origin,
        voxel_size,
        active,
    })
}

/// Separating-axis test between a triangle and a closed axis-aligned box.
pub(crate) fn triangle_box_overlap(
    tri: &[Vector3<f64>; 3],
    center: &Vector3<f64>,
    half: &Vector3<f64>,
) -> bool {
    let v = tri.map(|p| p - center);
    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];

    // Cross products of the box axes with the triangle edges.
    for e in &edges {
        for axis in 0..3 {
            let mut a = Vector3::zeros();
            a[axis] = 1.0;
            let n = a.cross(e);
            if n.norm_squared() == 0.0 {
                continue;
            }
            let p = v.map(|p| p.dot(&n));
            let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            if lo > r || hi < -r {
                return false;
            }
        }
    }

    // Box face normals.
    for axis in 0..3 {
        let lo = v[0][axis].min(v[1][axis]).min(v[2][axis]);
        let hi = v[0][axis].max(v[1][axis]).max(v[2][axis]);
        if lo > half[axis] || hi < -half[axis] {
            return false;
        }
    }

    // Triangle plane.
    let n = edges[0].cross(&edges[1]);
    let d = n.dot(&v[0]);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    d.abs() <= r
}
