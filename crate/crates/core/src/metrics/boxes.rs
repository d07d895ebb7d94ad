use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

/// Axis-aligned 3D box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb3 {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        if !(min.iter().chain(max.iter()).all(|c| c.is_finite())) || (0..3).any(|i| min[i] > max[i]) {
            return Err(Error::DegenerateGeometry(format!("box min {min:?} exceeds max {max:?}")));
        }
        Ok(Self { min, max })
    }

    /// Tight box of a non-empty point list.
    pub fn from_points(points: &[Vector3<f64>]) -> Self {
        let mut min = points[0];
        let mut max = points[0];
        for p in &points[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }

    pub fn from_mesh(mesh: &TriangleMesh) -> Self {
        let (min, max) = mesh.bounds();
        Self { min, max }
    }

    pub fn volume(&self) -> f64 {
        (self.max - self.min).product()
    }

    pub fn translated(&self, d: &Vector3<f64>) -> Self {
        Self {
            min: self.min + d,
            max: self.max + d,
        }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

/// Intersection volume over union volume. Zero-volume boxes score 1 only
/// against an identical box.
pub fn volume_iou(a: &Aabb3, b: &Aabb3) -> f64 {
    let lo = a.min.sup(&b.min);
    let hi = a.max.inf(&b.max);
    let inter = (hi - lo).map(|e| e.max(0.0)).product();
    let union = a.volume() + b.volume() - inter;
    if union > 0.0 {
        inter / union
    } else if a == b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(min: [f64; 3], max: [f64; 3]) -> Aabb3 {
        Aabb3::new(Vector3::from(min), Vector3::from(max)).unwrap()
    }

    #[test]
    fn examples() {
        let unit = bx([0.0; 3], [1.0; 3]);
        assert_eq!(volume_iou(&unit, &unit), 1.0);
        assert_eq!(volume_iou(&unit, &bx([2.0; 3], [3.0; 3])), 0.0);
        assert!((volume_iou(&unit, &bx([0.5, 0.0, 0.0], [1.5, 1.0, 1.0])) - 1.0 / 3.0).abs() < 1e-15);
        let flat = bx([0.0; 3], [1.0, 1.0, 0.0]);
        assert_eq!(volume_iou(&flat, &flat), 1.0);
        assert_eq!(volume_iou(&flat, &unit), 0.0);
        assert!(Aabb3::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros()).is_err());
    }

    fn any_box() -> impl Strategy<Value = Aabb3> {
        ((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), (0.0f64..3.0, 0.0f64..3.0, 0.0f64..3.0)).prop_map(|(o, e)| {
            let min = Vector3::new(o.0, o.1, o.2);
            Aabb3::new(min, min + Vector3::new(e.0, e.1, e.2)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_translation_invariant(a in any_box(), b in any_box(), d in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)) {
            let iou = volume_iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&iou));
            prop_assert_eq!(iou, volume_iou(&b, &a));
            let d = Vector3::new(d.0, d.1, d.2);
            prop_assert!((iou - volume_iou(&a.translated(&d), &b.translated(&d))).abs() < 1e-9);
        }
    }
}
