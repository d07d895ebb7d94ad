use serde::{Deserialize, Serialize};

use crate::camera::PinholeCamera;
use crate::error::{Error, Result};

/// Axis-aligned image rectangle in pixels (y grows downward).
///
/// Serialized as `[x_left, y_upper, x_right, y_lower]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox2D {
    pub x_left: f64,
    pub x_right: f64,
    pub y_upper: f64,
    pub y_lower: f64,
}

impl BBox2D {
    pub fn new(x_left: f64, x_right: f64, y_upper: f64, y_lower: f64) -> Result<Self> {
        let finite = [x_left, x_right, y_upper, y_lower].iter().all(|v| v.is_finite());
        if !finite || x_left >= x_right || y_upper >= y_lower {
            return Err(Error::InvalidBBox(format!(
                "need x_left < x_right and y_upper < y_lower, got \
                 [{x_left}, {y_upper}, {x_right}, {y_lower}]"
            )));
        }
        Ok(Self {
            x_left,
            x_right,
            y_upper,
            y_lower,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn height(&self) -> f64 {
        self.y_lower - self.y_upper
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_left + self.x_right),
            0.5 * (self.y_upper + self.y_lower),
        )
    }

    /// Shifts into coordinates relative to the principal point.
    pub fn centered(&self, camera: &PinholeCamera) -> Self {
        Self {
            x_left: self.x_left - camera.cx,
            x_right: self.x_right - camera.cx,
            y_upper: self.y_upper - camera.cy,
            y_lower: self.y_lower - camera.cy,
        }
    }
}

impl TryFrom<[f64; 4]> for BBox2D {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox2D::new(v[0], v[2], v[1], v[3])
    }
}

impl From<BBox2D> for [f64; 4] {
    fn from(b: BBox2D) -> Self {
        [b.x_left, b.y_upper, b.x_right, b.y_lower]
    }
}
