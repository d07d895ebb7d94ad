use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::harness::shapes::icosahedron_directions;
use crate::transform::geodesic_distance;

/// Rotation by `angle` radians about `axis` (need not be unit length).
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

/// Discrete rotation hypotheses: every viewpoint direction turned toward the
/// camera, combined with evenly spaced turns about the optical axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationGrid {
    pub viewpoint_count: usize,
    pub inplane_steps: usize,
    pub rotations: Vec<Matrix3<f64>>,
}

impl Default for RotationGrid {
    fn default() -> Self {
        Self::new(42, 12).expect("valid default grid")
    }
}

/// `10·4^k + 2` vertices come from a subdivided icosahedron; other counts
/// use a Fibonacci lattice.
fn viewpoints(count: usize) -> Vec<Vector3<f64>> {
    for level in 0..6u32 {
        if count == 10 * 4usize.pow(level) + 2 {
            return icosahedron_directions(level).0;
        }
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), y, r * phi.sin())
        })
        .collect()
}

/// Rotation taking `v` onto the direction facing the camera, `(0, 0, -1)`.
fn face_camera(v: &Vector3<f64>) -> Matrix3<f64> {
    let toward = Vector3::new(0.0, 0.0, -1.0);
    Rotation3::rotation_between(v, &toward)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI))
        .into_inner()
}

impl RotationGrid {
    pub fn new(viewpoint_count: usize, inplane_steps: usize) -> Result<Self> {
        if viewpoint_count == 0 || inplane_steps == 0 {
            return Err(Error::InvalidConfig("rotation grid needs ≥ 1 viewpoint and in-plane step".into()));
        }
        let mut rotations = Vec::with_capacity(viewpoint_count * inplane_steps);
        for v in viewpoints(viewpoint_count) {
            let align = face_camera(&v);
            for k in 0..inplane_steps {
                let angle = std::f64::consts::TAU * k as f64 / inplane_steps as f64;
                rotations.push(axis_angle(&Vector3::z(), angle) * align);
            }
        }
        Ok(Self {
            viewpoint_count,
            inplane_steps,
            rotations,
        })
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Index of the grid rotation closest to `r` (lowest index on ties).
    pub fn nearest(&self, r: &Matrix3<f64>) -> (usize, f64) {
        self.rotations
            .iter()
            .enumerate()
            .map(|(i, g)| (i, geodesic_distance(g, r)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    /// Geodesic distance from each rotation to its nearest other grid member.
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                (0..self.len())
                    .filter(|&j| j != i)
                    .map(|j| geodesic_distance(&self.rotations[i], &self.rotations[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}
