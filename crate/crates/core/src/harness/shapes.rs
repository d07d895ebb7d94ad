//! Procedural test shapes in model coordinates, roughly unit sized.

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Icosphere,
    Cylinder,
    LBracket,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Cube, Shape::Icosphere, Shape::Cylinder, Shape::LBracket];

    pub fn label(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Icosphere => "icosphere",
            Shape::Cylinder => "cylinder",
            Shape::LBracket => "l_bracket",
        }
    }

    pub fn mesh(self) -> TriangleMesh {
        match self {
            Shape::Cube => cube(),
            Shape::Icosphere => icosphere(3),
            Shape::Cylinder => cylinder(32),
            Shape::LBracket => l_bracket(),
        }
    }
}

/// Flat-shaded polygon faces: each face gets its own vertices carrying the
/// face normal. Polygons must be convex and wound counter-clockwise when
/// seen from outside.
fn faceted(faces: &[Vec<Vector3<f64>>]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    for face in faces {
        let n = (face[1] - face[0]).cross(&(face[2] - face[0])).normalize();
        let base = vertices.len() as u32;
        vertices.extend_from_slice(face);
        normals.extend(std::iter::repeat(n).take(face.len()));
        for k in 1..face.len() as u32 - 1 {
            triangles.push([base, base + k, base + k + 1]);
        }
    }
    TriangleMesh::new(vertices, triangles, Some(normals)).expect("well-formed shape")
}

/// Axis-aligned unit cube centered at the origin.
pub fn cube() -> TriangleMesh {
    let p = |x: f64, y: f64, z: f64| Vector3::new(x - 0.5, y - 0.5, z - 0.5);
    let faces = [
        vec![p(0., 0., 0.), p(0., 1., 0.), p(1., 1., 0.), p(1., 0., 0.)],
        vec![p(0., 0., 1.), p(1., 0., 1.), p(1., 1., 1.), p(0., 1., 1.)],
        vec![p(0., 0., 0.), p(1., 0., 0.), p(1., 0., 1.), p(0., 0., 1.)],
        vec![p(0., 1., 0.), p(0., 1., 1.), p(1., 1., 1.), p(1., 1., 0.)],
        vec![p(0., 0., 0.), p(0., 0., 1.), p(0., 1., 1.), p(0., 1., 0.)],
        vec![p(1., 0., 0.), p(1., 1., 0.), p(1., 1., 1.), p(1., 0., 1.)],
    ];
    faceted(&faces)
}

/// Unit-radius icosahedron subdivided `level` times by edge midpoints.
pub fn icosahedron_directions(level: u32) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1., t, 0.),
        (1., t, 0.),
        (-1., -t, 0.),
        (1., -t, 0.),
        (0., -1., t),
        (0., 1., t),
        (0., -1., -t),
        (0., 1., -t),
        (t, 0., -1.),
        (t, 0., 1.),
        (-t, 0., -1.),
        (-t, 0., 1.),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vector3<f64>>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) / 2.0).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Sphere of radius 0.5 with smooth normals.
pub fn icosphere(level: u32) -> TriangleMesh {
    let (dirs, faces) = icosahedron_directions(level);
    let vertices = dirs.iter().map(|d| d * 0.5).collect();
    TriangleMesh::new(vertices, faces, Some(dirs)).expect("well-formed shape")
}

/// Radius 0.5, height 1 along +Y, centered at the origin. Smooth sides,
/// flat caps.
pub fn cylinder(segments: u32) -> TriangleMesh {
    let n = segments.max(3);
    let ring = |k: u32| {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        (a.cos(), a.sin())
    };
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    for k in 0..n {
        let (c, s) = ring(k);
        vertices.push(Vector3::new(0.5 * c, -0.5, 0.5 * s));
        vertices.push(Vector3::new(0.5 * c, 0.5, 0.5 * s));
        normals.extend([Vector3::new(c, 0.0, s); 2]);
    }
    for k in 0..n {
        let (a0, a1) = (2 * k, 2 * k + 1);
        let (b0, b1) = (2 * ((k + 1) % n), 2 * ((k + 1) % n) + 1);
        triangles.extend([[a0, a1, b1], [a0, b1, b0]]);
    }
    for (y, ny) in [(-0.5, -1.0), (0.5, 1.0)] {
        let center = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, y, 0.0));
        normals.push(Vector3::new(0.0, ny, 0.0));
        for k in 0..n {
            let (c, s) = ring(k);
            vertices.push(Vector3::new(0.5 * c, y, 0.5 * s));
            normals.push(Vector3::new(0.0, ny, 0.0));
        }
        for k in 0..n {
            let (i, j) = (center + 1 + k, center + 1 + (k + 1) % n);
            triangles.push(if ny > 0.0 { [center, j, i] } else { [center, i, j] });
        }
    }
    TriangleMesh::new(vertices, triangles, Some(normals)).expect("well-formed shape")
}

/// L-shaped prism with unequal arms (1.0 and 0.6, thickness 0.25). The
/// depth grows from 0.4 at the short arm to 1.4 at the end of the long arm,
/// so no view shows just one centrally symmetric face.
pub fn l_bracket() -> TriangleMesh {
    let (th, ht, dp, taper) = (0.25, 0.6, 0.4, 1.0);
    let outline = [
        (0.0, 0.0),
        (1.0, 0.0),
        (1.0, th),
        (th, th),
        (th, ht),
        (0.0, ht),
    ];
    let (cx, cy, half_depth) = (0.5, ht / 2.0, dp / 2.0);
    let back = |_: (f64, f64)| half_depth;
    let front = |(x, _): (f64, f64)| -half_depth - taper * x;
    let p = |(x, y): (f64, f64), z: f64| Vector3::new(x - cx, y - cy, z);
    let mut faces = Vec::new();
    // Caps as two convex rectangles each.
    let rects = [[(0.0, 0.0), (1.0, 0.0), (1.0, th), (0.0, th)], [(0.0, th), (th, th), (th, ht), (0.0, ht)]];
    for r in rects {
        faces.push(r.iter().map(|&q| p(q, back(q))).collect());
        faces.push(r.iter().rev().map(|&q| p(q, front(q))).collect());
    }
    for k in 0..outline.len() {
        let a = outline[k];
        let b = outline[(k + 1) % outline.len()];
        faces.push(vec![p(a, front(a)), p(b, front(b)), p(b, back(b)), p(a, back(a))]);
    }
    faceted(&faces)
}
