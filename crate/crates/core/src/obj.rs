//! Minimal Wavefront OBJ support: `v`, `vn` and `f` records.
//!
//! Polygons are fan-triangulated. Texture coordinates and every other
//! directive are ignored. When faces reference normals, each distinct
//! `(vertex, normal)` pair becomes its own output vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub fn read_obj(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_obj(&text).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path, message),
        other => other,
    })
}

pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    std::fs::write(path, format_obj(mesh))?;
    Ok(())
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let err = |line: usize, msg: String| Error::format("<obj>", format!("line {}: {msg}", line + 1));

    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut faces: Vec<Vec<(usize, Option<usize>)>> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => positions.push(parse_vec3(&mut parts).map_err(|m| err(lineno, m))?),
            Some("vn") => {
                let n = parse_vec3(&mut parts).map_err(|m| err(lineno, m))?;
                let n = n
                    .try_normalize(0.0)
                    .ok_or_else(|| err(lineno, "zero-length normal".into()))?;
                normals.push(n);
            }
            Some("f") => {
                let mut face = Vec::new();
                for token in parts {
                    let mut fields = token.split('/');
                    let v = resolve(fields.next(), positions.len())
                        .map_err(|m| err(lineno, m))?
                        .ok_or_else(|| err(lineno, format!("face token {token:?} has no vertex")))?;
                    let _texcoord = fields.next();
                    let n = resolve(fields.next(), normals.len()).map_err(|m| err(lineno, m))?;
                    face.push((v, n));
                }
                if face.len() < 3 {
                    return Err(err(lineno, "face with fewer than 3 vertices".into()));
                }
                faces.push(face);
            }
            _ => {}
        }
    }

    let with_normals = !faces.is_empty() && faces.iter().flatten().all(|(_, n)| n.is_some());
    if !with_normals {
        let mut triangles = Vec::new();
        for face in &faces {
            for w in face[1..].windows(2) {
                triangles.push([face[0].0 as u32, w[0].0 as u32, w[1].0 as u32]);
            }
        }
        return TriangleMesh::new(positions, triangles, None);
    }

    // `f a//a ...` throughout: positions and normals already pair up, so keep
    // the file's vertex order.
    if positions.len() == normals.len() && faces.iter().flatten().all(|&(v, n)| n == Some(v)) {
        let mut triangles = Vec::new();
        for face in &faces {
            for w in face[1..].windows(2) {
                triangles.push([face[0].0 as u32, w[0].0 as u32, w[1].0 as u32]);
            }
        }
        return TriangleMesh::new(positions, triangles, Some(normals));
    }

    let mut remap: HashMap<(usize, usize), u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex_normals = Vec::new();
    let mut index_of = |(v, n): (usize, Option<usize>)| -> u32 {
        let n = n.expect("checked above");
        *remap.entry((v, n)).or_insert_with(|| {
            vertices.push(positions[v]);
            vertex_normals.push(normals[n]);
            (vertices.len() - 1) as u32
        })
    };
    let mut triangles = Vec::new();
    for face in &faces {
        let first = index_of(face[0]);
        for w in face[1..].windows(2) {
            triangles.push([first, index_of(w[0]), index_of(w[1])]);
        }
    }

    TriangleMesh::new(vertices, triangles, Some(vertex_normals))
}

fn parse_vec3<'a>(parts: &mut impl Iterator<Item = &'a str>) -> std::result::Result<Vector3<f64>, String> {
    let mut v = [0.0; 3];
    for c in &mut v {
        let tok = parts.next().ok_or("expected three coordinates")?;
        *c = tok.parse().map_err(|_| format!("bad number {tok:?}"))?;
    }
    Ok(v.into())
}

/// OBJ indices are 1-based; negative values count back from the end.
fn resolve(field: Option<&str>, count: usize) -> std::result::Result<Option<usize>, String> {
    let Some(s) = field.filter(|s| !s.is_empty()) else {
        return Ok(None);
    };
    let i: i64 = s.parse().map_err(|_| format!("bad index {s:?}"))?;
    let idx = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || idx < 0 || idx >= count as i64 {
        return Err(format!("index {i} out of range ({count} defined)"));
    }
    Ok(Some(idx as usize))
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(ns) = mesh.vertex_normals() {
        for n in ns {
            let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
        }
        for t in mesh.triangles() {
            let [a, b, c] = t.map(|i| i + 1);
            let _ = writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}");
        }
    } else {
        for t in mesh.triangles() {
            let [a, b, c] = t.map(|i| i + 1);
            let _ = writeln!(out, "f {a} {b} {c}");
        }
    }
    out
}
