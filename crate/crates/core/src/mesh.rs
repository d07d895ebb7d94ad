//! Triangle meshes in camera space (meters).

use nalgebra::Vector3;

use crate::error::{Error, Result};

const NORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    vertex_normals: Option<Vec<Vector3<f64>>>,
}

impl TriangleMesh {
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[u32; 3]>,
        vertex_normals: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {v:?}")));
        }
        let n = vertices.len();
        if let Some(t) = triangles
            .iter()
            .find(|t| t.iter().any(|&i| i as usize >= n))
        {
            return Err(Error::InvalidMesh(format!(
                "triangle {t:?} indexes past {n} vertices"
            )));
        }
        if let Some(normals) = &vertex_normals {
            if normals.len() != n {
                return Err(Error::InvalidMesh(format!(
                    "{} normals for {n} vertices",
                    normals.len()
                )));
            }
            if let Some(bad) = normals
                .iter()
                .find(|v| (v.norm() - 1.0).abs() > NORMAL_TOLERANCE)
            {
                return Err(Error::InvalidMesh(format!("normal {bad:?} is not unit")));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            vertex_normals,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> Option<&[Vector3<f64>]> {
        self.vertex_normals.as_deref()
    }

    /// Replaces the vertex normals with area-weighted averages of the
    /// incident face normals.
    pub fn with_smooth_normals(mut self) -> Self {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i as usize]);
            // Cross product magnitude is twice the area, which is the weight we want.
            let n = (b - a).cross(&(c - a));
            for &i in t {
                acc[i as usize] += n;
            }
        }
        let normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vector3::z()
                }
            })
            .collect();
        self.vertex_normals = Some(normals);
        self
    }

    pub fn without_normals(mut self) -> Self {
        self.vertex_normals = None;
        self
    }

    /// Arithmetic mean of every vertex coordinate.
    pub fn means(&self) -> Vector3<f64> {
        let sum: Vector3<f64> = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Unit face normal following the triangle winding, or `None` for a
    /// zero-area triangle.
    pub fn face_normal(&self, triangle: usize) -> Option<Vector3<f64>> {
        let [a, b, c] = self.triangles[triangle].map(|i| self.vertices[i as usize]);
        (b - a).cross(&(c - a)).try_normalize(0.0)
    }

    pub fn triangle_area(&self, triangle: usize) -> f64 {
        let [a, b, c] = self.triangles[triangle].map(|i| self.vertices[i as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Componentwise minimum and maximum vertex.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Radius of the smallest sphere about `center` that holds every vertex.
    pub fn radius_about(&self, center: &Vector3<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - center).norm())
            .fold(0.0, f64::max)
    }

    /// Builds a mesh sharing this topology with new vertex data. Callers must
    /// keep the vertex count and normals unit.
    pub(crate) fn with_vertex_data(
        &self,
        vertices: Vec<Vector3<f64>>,
        vertex_normals: Option<Vec<Vector3<f64>>>,
    ) -> Self {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        Self {
            vertices,
            triangles: self.triangles.clone(),
            vertex_normals,
        }
    }
}
